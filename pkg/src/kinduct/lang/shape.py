"""Structural readiness check.

k-induction needs the program in its canonical shape: exactly one
unbounded loop, as the last statement of main, with every inner loop
statically bounded within the unroll ceiling. Programs outside that shape
may still be explored by plain BMC when extraction can cope (a dynamic
inner bound over a narrow index type unrolls with guards), so the result
distinguishes "ready" from "bounded exploration only" with a reason.
"""

from __future__ import annotations

from dataclasses import dataclass

from kinduct.lang import ast
from kinduct.lang.typecheck import TypedProgram

DEFAULT_UNROLL_CEILING = 256


@dataclass(frozen=True)
class KInductionReady:
    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class BmcOnly:
    reason: str

    def __bool__(self) -> bool:
        return False


def _reachable_funcs(tp: TypedProgram) -> set[str]:
    roots: set[str] = set()
    for s in ast.walk_stmts(tp.program.main.body):
        for e in ast.stmt_exprs(s):
            for sub in ast.walk_exprs(e):
                if isinstance(sub, ast.Call):
                    roots.add(sub.name)
    seen: set[str] = set()
    work = list(roots)
    while work:
        n = work.pop()
        if n in seen or n not in tp.summaries:
            continue
        seen.add(n)
        work.extend(tp.summaries[n].calls)
    return seen


def _for_loops(tp: TypedProgram):
    blocks = [tp.main_init]
    blocks += [loop.body for loop in tp.main_loops]
    for name in sorted(_reachable_funcs(tp)):
        blocks.append(tp.funcs[name].body)
    for block in blocks:
        for s in ast.walk_stmts(block):
            if isinstance(s, ast.ForStmt):
                yield s


def validate_shape(tp: TypedProgram,
                   unroll_ceiling: int = DEFAULT_UNROLL_CEILING):
    """Classify a typed program as KInductionReady or BmcOnly(reason)."""
    if not tp.main_loops:
        return BmcOnly("no unbounded loop")
    if len(tp.main_loops) > 1:
        return BmcOnly("multiple unbounded loops")
    for loop in _for_loops(tp):
        if loop.trip_count is None:
            return BmcOnly("unbounded inner loop")
        if loop.trip_count > unroll_ceiling:
            return BmcOnly(
                f"inner loop runs {loop.trip_count} times "
                f"(unroll ceiling {unroll_ceiling})")
    return KInductionReady()
