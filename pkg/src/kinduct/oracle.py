"""Explicit-state exploration.

Breadth-first search over the compiled transition system, enumerating
every input valuation at every state. Used as the ground-truth engine for
small programs: BFS order guarantees any violation found is at minimal
depth, and a completed search certifies safety outright (and yields the
reachability diameter).

The search refuses instances whose state plus input widths exceed a bit
budget (default 24) instead of silently taking forever.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from kinduct.errors import StateSpaceTooLarge
from kinduct.lang.ts import CompiledTS, TransitionSystem, compile_ts, extract
from kinduct.lang.typecheck import TypedProgram

DEFAULT_BITS_BUDGET = 24


@dataclass
class Trace:
    initial: dict
    inputs: list[dict]
    frames: list[dict]
    violation_frame: int
    init_inputs: Optional[dict] = None


@dataclass
class OracleResult:
    status: str  # 'safe' | 'violated' | 'bounded'
    depth_explored: int
    states_explored: int
    diameter: Optional[int] = None
    trace: Optional[Trace] = None
    bound_reason: Optional[str] = None

    @property
    def violated(self) -> bool:
        return self.status == "violated"


def _valuations(var_types) -> list[tuple]:
    ranges = []
    for _, ty in var_types:
        if ty.name == "bool":
            ranges.append((False, True))
        else:
            ranges.append(tuple(range(ty.min_value, ty.max_value + 1)))
    return list(itertools.product(*ranges))


def check_budget(ts: TransitionSystem, bits_budget: int = DEFAULT_BITS_BUDGET):
    step_cost = ts.state_bits + ts.input_bits
    init_cost = ts.state_bits + ts.init_input_bits
    if max(step_cost, init_cost) > bits_budget:
        raise StateSpaceTooLarge(
            f"{ts.state_bits} state bits with {ts.input_bits} input bits "
            f"(and {ts.init_input_bits} init input bits) exceed the "
            f"{bits_budget}-bit exploration budget")


def explore(tp: TypedProgram, prop=None, *,
            max_depth: Optional[int] = None,
            max_states: Optional[int] = None,
            bits_budget: int = DEFAULT_BITS_BUDGET,
            unroll_ceiling: int = 256,
            compiled: Optional[CompiledTS] = None) -> OracleResult:
    """Explore reachable states; return the verdict for (program, prop)."""
    if compiled is None:
        ts = extract(tp, prop, unroll_ceiling=unroll_ceiling)
        check_budget(ts, bits_budget)
        compiled = compile_ts(ts)
    else:
        ts = compiled.ts
        check_budget(ts, bits_budget)

    step_fn, prop_fn = compiled.step_fn, compiled.prop_fn
    input_vals = _valuations(ts.step_inputs)
    input_names = [n for n, _ in ts.step_inputs]

    # parents: state -> (parent_state | None, input_tuple | init_input_tuple)
    parents: dict = {}
    frontier: list = []
    for iv in _valuations(ts.init_inputs):
        s0 = compiled.init_fn(iv)
        if s0 in parents:
            continue
        parents[s0] = (None, iv)
        frontier.append(s0)
        if not prop_fn(s0):
            return _violated(compiled, parents, s0, 0, input_names,
                             len(parents))

    depth = 0
    diameter = 0
    while frontier:
        if max_depth is not None and depth >= max_depth:
            return OracleResult(status="bounded", depth_explored=depth,
                                states_explored=len(parents),
                                bound_reason="max_depth")
        next_frontier: list = []
        for s in frontier:
            for i, x in enumerate(input_vals):
                s2 = step_fn(s, x)
                if s2 is None or s2 in parents:
                    continue
                parents[s2] = (s, x)
                next_frontier.append(s2)
                if not prop_fn(s2):
                    return _violated(compiled, parents, s2, depth + 1,
                                     input_names, len(parents))
                if max_states is not None and len(parents) >= max_states:
                    return OracleResult(status="bounded",
                                        depth_explored=depth,
                                        states_explored=len(parents),
                                        bound_reason="max_states")
        frontier = next_frontier
        if frontier:
            depth += 1
            diameter = depth
    return OracleResult(status="safe", depth_explored=depth,
                        states_explored=len(parents), diameter=diameter)


def _violated(compiled: CompiledTS, parents: dict, bad_state, depth: int,
              input_names: list[str], explored: int) -> OracleResult:
    chain = []
    s = bad_state
    while True:
        parent, via = parents[s]
        if parent is None:
            init_iv = via
            break
        chain.append((s, via))
        s = parent
    chain.reverse()
    frames = [compiled.to_surface(s)]
    inputs = []
    for nxt, x in chain:
        inputs.append({name: v for name, v in zip(input_names, x)})
        frames.append(compiled.to_surface(nxt))
    init_names = [n for n, _ in compiled.ts.init_inputs]
    trace = Trace(initial=frames[0], inputs=inputs, frames=frames,
                  violation_frame=depth,
                  init_inputs={n: v for n, v in zip(init_names, init_iv)}
                  if init_names else None)
    return OracleResult(status="violated", depth_explored=depth,
                        states_explored=explored, trace=trace)
