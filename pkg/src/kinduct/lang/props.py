"""External property files.

A property file holds exactly one property over the program's state
variables:

    invariant <expr>;
    bounded_response <trigger> => <target> within <n>;

An invariant must hold on every frame. Bounded response demands that
whenever the trigger holds on some frame t (and the target does not
already hold there), the target holds on at least one frame in the
inclusive window [t, t+n]. Both expressions are pure and read state
variables only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from kinduct.errors import LoopcSyntaxError
from kinduct.lang import ast
from kinduct.lang.interp import ERR_VAR, eval_state_expr
from kinduct.lang.lexer import tokenize
from kinduct.lang.parser import Parser
from kinduct.lang.pretty import fmt_expr
from kinduct.lang.typecheck import TypedProgram, type_property_expr


@dataclass(frozen=True)
class Invariant:
    expr: ast.Expr


@dataclass(frozen=True)
class BoundedResponse:
    trigger: ast.Expr
    target: ast.Expr
    window: int

    @property
    def counter_width(self) -> int:
        # the saturating obligation counter takes values 0 .. window+1
        return max(1, math.ceil(math.log2(self.window + 2)))


Property = "Invariant | BoundedResponse"


def property_text(prop) -> str:
    """Canonical one-line rendering (also used in witnesses)."""
    if isinstance(prop, Invariant):
        return f"invariant {fmt_expr(prop.expr)};"
    return (f"bounded_response {fmt_expr(prop.trigger)} => "
            f"{fmt_expr(prop.target)} within {prop.window};")


def parse_property(text: str, tp: TypedProgram):
    """Parse and type one property against a program."""
    toks = tokenize(text)
    p = Parser(toks)
    head = p.cur
    if head.kind != "ident" or head.text not in ("invariant", "bounded_response"):
        raise p.error("expected 'invariant' or 'bounded_response'")
    p.advance()
    if head.text == "invariant":
        expr = p.parse_expr()
        p.expect(";")
        if p.cur.kind != "eof":
            raise p.error("trailing input after property")
        return Invariant(type_property_expr(tp, expr))
    trigger = p.parse_expr()
    p.expect("=>")
    target = p.parse_expr()
    within = p.expect_ident()
    if within.text != "within":
        raise LoopcSyntaxError("expected 'within'", within.line, within.col)
    n_tok = p.cur
    if n_tok.kind != "int":
        raise p.error("expected window length", "integer")
    p.advance()
    p.expect(";")
    if p.cur.kind != "eof":
        raise p.error("trailing input after property")
    window = int(n_tok.text, 0)
    if window < 0 or window > 1_000_000:
        raise LoopcSyntaxError("window out of range", n_tok.line, n_tok.col)
    return BoundedResponse(type_property_expr(tp, trigger),
                           type_property_expr(tp, target), window)


def load_property(path: str, tp: TypedProgram):
    with open(path, encoding="utf-8") as fh:
        return parse_property(fh.read(), tp)


def monitor_values(tp: TypedProgram, prop: BoundedResponse,
                   states: list[dict]) -> list[int]:
    """Obligation counter along a concrete trace.

    m = 0: no open obligation. m = j in 1..window+1: the trigger fired
    j-1 frames ago without the target holding since. The property is
    violated on the first frame where m exceeds the window.
    """
    out: list[int] = []
    m = 0
    for i, state in enumerate(states):
        trig = bool(eval_state_expr(tp, state, prop.trigger))
        targ = bool(eval_state_expr(tp, state, prop.target))
        if i == 0:
            m = 1 if (trig and not targ) else 0
        elif targ:
            m = 0
        elif m > 0:
            m = min(m + 1, prop.window + 1)
        elif trig:
            m = 1
        else:
            m = 0
        out.append(m)
    return out


def property_frames(tp: TypedProgram, prop, states: list[dict]) -> list[bool]:
    """Per-frame property value along a trace.

    With no external property the in-code one applies (trailing assert
    plus the error() latch). error() reachability is always monitored.
    """
    if isinstance(prop, BoundedResponse):
        ok = [m <= prop.window for m in monitor_values(tp, prop, states)]
    elif isinstance(prop, Invariant):
        ok = [bool(eval_state_expr(tp, s, prop.expr)) for s in states]
    else:
        inner = tp.property_expr
        ok = [bool(eval_state_expr(tp, s, inner)) if inner is not None else True
              for s in states]
    if tp.has_error_stmt:
        ok = [v and not s.get(ERR_VAR, False) for v, s in zip(ok, states)]
    return ok
