"""Transition-system extraction.

Turns a typed program into a finite transition system over scalar cells:

  * calls are inlined (the call graph is a DAG),
  * bounded for loops are unrolled (guarded copies for dynamic bounds),
  * switch becomes an if chain,
  * arrays are flattened to one cell per element; dynamic indices become
    clamped select chains,
  * every nondet read becomes a named input; per loop iteration, the j-th
    read of site L is called `L` (j=1) or `L#j`, matching the interpreter,
  * error() becomes a latch cell, a bounded-response property becomes a
    saturating counter cell updated at the end of the step.

init and step are loop-free guarded assignment lists with sequential
semantics. The property is a pure expression evaluated on a state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from kinduct.errors import ExtractError
from kinduct.lang import ast, numeric
from kinduct.lang.interp import ERR_VAR
from kinduct.lang.pretty import fmt_expr
from kinduct.lang.props import BoundedResponse, Invariant
from kinduct.lang.typecheck import TypedProgram
from kinduct.lang.types import BOOL, Array, Scalar, unsigned

MONITOR_VAR = "__brm"
DEFAULT_UNROLL_CEILING = 256


# ------------------------------------------------------------- statements


@dataclass
class TAssign:
    name: str
    value: ast.Expr


@dataclass
class TIf:
    cond: ast.Expr
    then: list
    els: list


@dataclass
class TAssume:
    cond: ast.Expr


TStmt = Union[TAssign, TIf, TAssume]


@dataclass
class TransitionSystem:
    cells: list[tuple[str, Scalar]]
    step_inputs: list[tuple[str, Scalar]]
    init_inputs: list[tuple[str, Scalar]]
    init: list
    step: list
    prop: ast.Expr
    temps: dict[str, Scalar]
    surface_vars: list[tuple[str, object]]
    input_driven: frozenset[str]
    has_err: bool
    monitor: Optional[tuple[str, int]]
    tp: TypedProgram = field(repr=False)

    @property
    def state_bits(self) -> int:
        return sum(t.width for _, t in self.cells)

    @property
    def input_bits(self) -> int:
        return sum(t.width for _, t in self.step_inputs)

    @property
    def init_input_bits(self) -> int:
        return sum(t.width for _, t in self.init_inputs)


def _lit(value, ty: Scalar) -> ast.Expr:
    if ty is BOOL:
        return ast.BoolLit(bool(value), ty=BOOL)
    if ty.is_fixed:
        return ast.FxLit(value, ty=ty)
    return ast.IntLit(value, ty=ty)


def _var(name: str, ty: Scalar) -> ast.VarRef:
    return ast.VarRef(name, ty=ty)


def _cell_name(base: str, index: int) -> str:
    return f"{base}[{index}]"


def _has_call(e: ast.Expr) -> bool:
    return any(isinstance(x, ast.Call) for x in ast.walk_exprs(e))


class _Lower:
    def __init__(self, tp: TypedProgram, unroll_ceiling: int):
        self.tp = tp
        self.ceiling = unroll_ceiling
        self.cell_types: dict[str, Scalar] = {}
        self.array_lens: dict[str, int] = {}
        self.temps: dict[str, Scalar] = {}
        self.counters: dict[str, int] = {}
        self.site_counts: dict[str, int] = {}
        self.inputs: list[tuple[str, Scalar]] = []
        self.block_stack: list[list] = []
        self.pure = False
        self.unrolled = 0

    # ------------------------------------------------------------ plumbing

    def emit(self, stmt: TStmt):
        if self.pure:
            raise ExtractError("property expressions cannot have effects")
        self.block_stack[-1].append(stmt)

    def fresh(self, base: str, ty: Scalar) -> str:
        n = self.counters.get(base, 0) + 1
        self.counters[base] = n
        name = f"{base}.{n}"
        self.temps[name] = ty
        return name

    def temp_of(self, e: ast.Expr, base: str = "t") -> ast.Expr:
        if isinstance(e, (ast.IntLit, ast.FxLit, ast.BoolLit, ast.VarRef,
                          ast.InputRef)):
            return e
        if self.pure:
            return e
        name = self.fresh(base, e.ty)
        self.emit(TAssign(name, e))
        return _var(name, e.ty)

    def read_input(self, site: ast.NondetExpr) -> ast.InputRef:
        n = self.site_counts.get(site.label, 0) + 1
        self.site_counts[site.label] = n
        name = site.label if n == 1 else f"{site.label}#{n}"
        self.inputs.append((name, site.ty))
        return ast.InputRef(name, ty=site.ty)

    # ---------------------------------------------------------- expressions

    def lower_expr(self, e: ast.Expr, subst: dict) -> ast.Expr:
        if isinstance(e, (ast.IntLit, ast.FxLit, ast.BoolLit)):
            return e
        if isinstance(e, ast.VarRef):
            if e.name in subst:
                return subst[e.name]
            ty = self.cell_types.get(e.name)
            if ty is None:
                raise ExtractError(f"unresolved variable {e.name!r}")
            return _var(e.name, ty)
        if isinstance(e, ast.InputRef):
            return e
        if isinstance(e, ast.NondetExpr):
            return self.read_input(e)
        if isinstance(e, ast.ArrayRef):
            idx = self.lower_expr(e.index, subst)
            return self.array_read(e.name, idx, e.ty)
        if isinstance(e, ast.Unary):
            return ast.Unary(e.op, self.lower_expr(e.operand, subst), ty=e.ty)
        if isinstance(e, ast.Binary):
            left = self.lower_expr(e.left, subst)
            if _has_call(e.right):
                left = self.temp_of(left)
            right = self.lower_expr(e.right, subst)
            return ast.Binary(e.op, left, right, ty=e.ty)
        if isinstance(e, ast.Ternary):
            cond = self.lower_expr(e.cond, subst)
            if _has_call(e.then) or _has_call(e.other):
                cond = self.temp_of(cond)
            then = self.lower_expr(e.then, subst)
            if _has_call(e.other):
                then = self.temp_of(then)
            other = self.lower_expr(e.other, subst)
            return ast.Ternary(cond, then, other, ty=e.ty)
        if isinstance(e, ast.Cast):
            return ast.Cast(e.target, self.lower_expr(e.operand, subst),
                            ty=e.ty, implicit=e.implicit)
        if isinstance(e, ast.Call):
            return self.inline_call(e, subst)
        raise ExtractError(f"cannot lower {type(e).__name__}")

    def array_read(self, name: str, idx: ast.Expr, ety: Scalar) -> ast.Expr:
        length = self.array_lens[name]
        if isinstance(idx, ast.IntLit):
            j = min(max(idx.value, 0), length - 1)
            return _var(_cell_name(name, j), ety)
        idx = self.temp_of(idx, "idx")
        ci = self.clamped(idx, length)
        last = min(length - 1, idx.ty.max_value)
        out = _var(_cell_name(name, last), ety)
        for j in range(last - 1, -1, -1):
            eq = ast.Binary("==", ci, _lit(j, idx.ty), ty=BOOL)
            out = ast.Ternary(eq, _var(_cell_name(name, j), ety), out, ty=ety)
        return out

    def clamped(self, idx: ast.Expr, length: int) -> ast.Expr:
        ty = idx.ty
        out = idx
        if length - 1 < ty.max_value:
            ge = ast.Binary(">=", idx, _lit(length, ty), ty=BOOL)
            out = ast.Ternary(ge, _lit(length - 1, ty), out, ty=ty)
        if ty.signed:
            lt = ast.Binary("<", idx, _lit(0, ty), ty=BOOL)
            out = ast.Ternary(lt, _lit(0, ty), out, ty=ty)
        if not isinstance(out, (ast.VarRef, ast.IntLit)):
            out = self.temp_of(out, "idx")
        return out

    def inline_call(self, call: ast.Call, subst: dict) -> ast.Expr:
        fn = self.tp.funcs[call.name]
        inner: dict = {}
        for (pname, pty), arg in zip(fn.params, call.args):
            val = self.lower_expr(arg, subst)
            tmp = self.fresh(f"{fn.name}.{pname}", pty)
            self.emit(TAssign(tmp, val))
            inner[pname] = _var(tmp, pty)
        ret_tmp = None
        body = fn.body
        if fn.ret is not None:
            ret_tmp = self.fresh(f"{fn.name}.ret", fn.ret)
            ret_stmt = body[-1]
            self.lower_block(body[:-1], inner)
            self.emit(TAssign(ret_tmp, self.lower_expr(ret_stmt.value, inner)))
            return _var(ret_tmp, fn.ret)
        if body and isinstance(body[-1], ast.ReturnStmt):
            body = body[:-1]
        self.lower_block(body, inner)
        return ast.BoolLit(True, ty=BOOL)  # placeholder; void call has no value

    # ----------------------------------------------------------- statements

    def lower_block(self, stmts: list, subst: dict):
        for s in stmts:
            self.lower_stmt(s, subst)

    def lower_stmt(self, s, subst: dict):
        if isinstance(s, ast.DeclStmt):
            val = (self.lower_expr(s.init, subst) if s.init is not None
                   else _lit(0, s.ty))
            tmp = self.fresh(s.name, s.ty)
            self.emit(TAssign(tmp, val))
            subst[s.name] = _var(tmp, s.ty)
        elif isinstance(s, ast.AssignStmt):
            self.lower_assign(s, subst)
        elif isinstance(s, ast.IfStmt):
            cond = self.lower_expr(s.cond, subst)
            then_block: list = []
            els_block: list = []
            self.block_stack.append(then_block)
            self.lower_block(s.then, dict(subst))
            self.block_stack.pop()
            self.block_stack.append(els_block)
            self.lower_block(s.els, dict(subst))
            self.block_stack.pop()
            self.emit(TIf(cond, then_block, els_block))
        elif isinstance(s, ast.ForStmt):
            self.lower_for(s, subst)
        elif isinstance(s, ast.SwitchStmt):
            self.lower_switch(s, subst)
        elif isinstance(s, ast.AssumeStmt):
            self.emit(TAssume(self.lower_expr(s.cond, subst)))
        elif isinstance(s, ast.ErrorStmt):
            self.emit(TAssign(ERR_VAR, ast.BoolLit(True, ty=BOOL)))
        elif isinstance(s, ast.CallStmt):
            self.inline_call(s.call, subst)
        elif isinstance(s, ast.ReturnStmt):
            raise ExtractError("return outside an inlined function")
        elif isinstance(s, ast.WhileStmt):
            raise ExtractError("nested unbounded loop")
        elif isinstance(s, ast.AssertStmt):
            raise ExtractError("assert outside the trailing position")
        else:
            raise ExtractError(f"cannot lower {type(s).__name__}")

    def lower_assign(self, s: ast.AssignStmt, subst: dict):
        t = s.target
        if isinstance(t, ast.VarRef):
            val = self.lower_expr(s.value, subst)
            if t.name in subst:
                bound = subst[t.name]
                if not isinstance(bound, ast.VarRef):
                    raise ExtractError(f"assignment to bound value {t.name!r}")
                self.emit(TAssign(bound.name, val))
            else:
                if t.name not in self.cell_types:
                    raise ExtractError(f"unresolved variable {t.name!r}")
                self.emit(TAssign(t.name, val))
            return
        # array write: value first, then index (interpreter order)
        val = self.temp_of(self.lower_expr(s.value, subst), "val")
        idx = self.lower_expr(t.index, subst)
        length = self.array_lens[t.name]
        ety = self.cell_types[_cell_name(t.name, 0)]
        if isinstance(idx, ast.IntLit):
            j = min(max(idx.value, 0), length - 1)
            self.emit(TAssign(_cell_name(t.name, j), val))
            return
        idx = self.temp_of(idx, "idx")
        ci = self.clamped(idx, length)
        last = min(length - 1, idx.ty.max_value)
        for j in range(last + 1):
            cell = _cell_name(t.name, j)
            eq = ast.Binary("==", ci, _lit(j, idx.ty), ty=BOOL)
            self.emit(TAssign(cell, ast.Ternary(eq, val, _var(cell, ety), ty=ety)))

    def lower_for(self, s: ast.ForStmt, subst: dict):
        ty = s.decl_ty
        if s.trip_count is not None:
            self.unrolled += s.trip_count
            if self.unrolled > self.ceiling:
                raise ExtractError(
                    f"loop unrolling exceeds ceiling ({self.ceiling})")
            start = s.start.value
            for j in range(s.trip_count):
                inner = dict(subst)
                inner[s.var] = _lit(numeric.wrap(start + j, ty), ty)
                self.lower_block(s.body, inner)
            return
        max_trips = ty.max_value - ty.min_value
        self.unrolled += max_trips
        if self.unrolled > self.ceiling:
            raise ExtractError(
                f"dynamic loop bound needs {max_trips} unrolled copies "
                f"(ceiling {self.ceiling})")
        sv = self.lower_expr(s.start, subst)
        bv = self.temp_of(self.lower_expr(s.bound, subst), "bound")
        iv = self.fresh(s.var, ty)
        self.emit(TAssign(iv, sv))
        ivar = _var(iv, ty)
        for _ in range(max_trips):
            body_block: list = []
            self.block_stack.append(body_block)
            inner = dict(subst)
            inner[s.var] = ivar
            self.lower_block(s.body, inner)
            self.emit(TAssign(iv, ast.Binary("+", ivar, _lit(1, ty), ty=ty)))
            self.block_stack.pop()
            self.emit(TIf(ast.Binary("<", ivar, bv, ty=BOOL), body_block, []))

    def lower_switch(self, s: ast.SwitchStmt, subst: dict):
        scrut = self.temp_of(self.lower_expr(s.scrutinee, subst), "sw")

        def chain(idx: int) -> list:
            if idx == len(s.cases):
                if s.default is None:
                    return []
                block: list = []
                self.block_stack.append(block)
                self.lower_block(s.default, dict(subst))
                self.block_stack.pop()
                return block
            labels, body = s.cases[idx]
            cond = None
            for lab in labels:
                eq = ast.Binary("==", scrut, lab, ty=BOOL)
                cond = eq if cond is None else ast.Binary("||", cond, eq, ty=BOOL)
            then: list = []
            self.block_stack.append(then)
            self.lower_block(body, dict(subst))
            self.block_stack.pop()
            return [TIf(cond, then, chain(idx + 1))]

        for st in chain(0):
            self.block_stack[-1].append(st)


def extract(tp: TypedProgram, prop=None,
            unroll_ceiling: int = DEFAULT_UNROLL_CEILING) -> TransitionSystem:
    """Build the transition system for a program and property.

    prop: None (use the in-code property), an Invariant, or a
    BoundedResponse (adds a saturating obligation counter to the state).
    """
    if not tp.main_loops:
        raise ExtractError("program has no unbounded loop")
    if len(tp.main_loops) > 1:
        raise ExtractError("program has multiple unbounded loops")

    lo = _Lower(tp, unroll_ceiling)
    cells: list[tuple[str, Scalar]] = []
    for name, ty in tp.state_vars:
        if isinstance(ty, Array):
            lo.array_lens[name] = ty.length
            for j in range(ty.length):
                cell = _cell_name(name, j)
                cells.append((cell, ty.elem))
                lo.cell_types[cell] = ty.elem
        else:
            cells.append((name, ty))
            lo.cell_types[name] = ty
    has_err = tp.has_error_stmt
    if has_err:
        cells.append((ERR_VAR, BOOL))
        lo.cell_types[ERR_VAR] = BOOL
    monitor = None
    if isinstance(prop, BoundedResponse):
        mty = unsigned(prop.counter_width)
        cells.append((MONITOR_VAR, mty))
        lo.cell_types[MONITOR_VAR] = mty
        monitor = (MONITOR_VAR, prop.window)

    # ---- init: globals, error latch, pre-loop statements, monitor
    init_block: list = []
    lo.block_stack.append(init_block)
    for g in tp.program.globals:
        if g.const:
            continue
        if isinstance(g.ty, Array):
            for j, e in enumerate(g.init):
                lo.emit(TAssign(_cell_name(g.name, j), e))
        else:
            lo.emit(TAssign(g.name, g.init))
    if has_err:
        lo.emit(TAssign(ERR_VAR, ast.BoolLit(False, ty=BOOL)))
    subst: dict = {}
    for s in tp.main_init:
        if isinstance(s, ast.DeclStmt):
            val = (lo.lower_expr(s.init, subst) if s.init is not None
                   else _lit(0, s.ty))
            lo.emit(TAssign(s.name, val))
        else:
            lo.lower_stmt(s, subst)
    init_inputs = list(lo.inputs)

    def pure(e: ast.Expr) -> ast.Expr:
        lo.pure = True
        try:
            return lo.lower_expr(e, {})
        finally:
            lo.pure = False

    if monitor is not None:
        mty = lo.cell_types[MONITOR_VAR]
        trig0, targ0 = pure(prop.trigger), pure(prop.target)
        arm = ast.Binary("&&", trig0, ast.Unary("!", targ0, ty=BOOL), ty=BOOL)
        lo.emit(TAssign(MONITOR_VAR,
                        ast.Ternary(arm, _lit(1, mty), _lit(0, mty), ty=mty)))
    lo.block_stack.pop()

    # ---- step: loop body (minus the trailing property), then the monitor
    lo.inputs = []
    lo.site_counts = {}
    lo.unrolled = 0
    step_block: list = []
    lo.block_stack.append(step_block)
    body = tp.loop_body
    if tp.trailing_assert is not None:
        body = body[:-1]
    lo.lower_block(body, {})
    if monitor is not None:
        mty = lo.cell_types[MONITOR_VAR]
        m = _var(MONITOR_VAR, mty)
        n = prop.window
        trig, targ = pure(prop.trigger), pure(prop.target)
        sat = ast.Ternary(ast.Binary("<", m, _lit(n + 1, mty), ty=BOOL),
                          ast.Binary("+", m, _lit(1, mty), ty=mty), m, ty=mty)
        open_or_new = ast.Ternary(ast.Binary(">", m, _lit(0, mty), ty=BOOL),
                                  sat,
                                  ast.Ternary(trig, _lit(1, mty), _lit(0, mty),
                                              ty=mty), ty=mty)
        lo.emit(TAssign(MONITOR_VAR,
                        ast.Ternary(targ, _lit(0, mty), open_or_new, ty=mty)))
    lo.block_stack.pop()
    step_inputs = list(lo.inputs)

    # ---- property over state cells
    if isinstance(prop, BoundedResponse):
        mty = lo.cell_types[MONITOR_VAR]
        pexpr = ast.Binary("<=", _var(MONITOR_VAR, mty),
                           _lit(prop.window, mty), ty=BOOL)
    elif isinstance(prop, Invariant):
        pexpr = pure(prop.expr)
    elif prop is None:
        inner = tp.property_expr
        pexpr = pure(inner) if inner is not None else ast.BoolLit(True, ty=BOOL)
    else:
        raise ExtractError(f"unknown property kind {type(prop).__name__}")
    if has_err:
        not_err = ast.Unary("!", _var(ERR_VAR, BOOL), ty=BOOL)
        pexpr = ast.Binary("&&", pexpr, not_err, ty=BOOL)

    input_driven = set()
    for s in body:
        if (isinstance(s, ast.AssignStmt) and isinstance(s.target, ast.VarRef)
                and isinstance(s.value, ast.NondetExpr)
                and s.target.name in lo.cell_types):
            input_driven.add(s.target.name)

    return TransitionSystem(
        cells=cells,
        step_inputs=step_inputs,
        init_inputs=init_inputs,
        init=init_block,
        step=step_block,
        prop=pexpr,
        temps=lo.temps,
        surface_vars=list(tp.state_vars),
        input_driven=frozenset(input_driven),
        has_err=has_err,
        monitor=monitor,
        tp=tp,
    )


# ------------------------------------------------------------------- dump


def _dump_stmts(stmts: list, indent: int, out: list[str]):
    pad = "  " * indent
    for s in stmts:
        if isinstance(s, TAssign):
            out.append(f"{pad}{s.name} = {fmt_expr(s.value)}")
        elif isinstance(s, TAssume):
            out.append(f"{pad}assume({fmt_expr(s.cond)})")
        else:
            out.append(f"{pad}if ({fmt_expr(s.cond)}) {{")
            _dump_stmts(s.then, indent + 1, out)
            if s.els:
                out.append(f"{pad}}} else {{")
                _dump_stmts(s.els, indent + 1, out)
            out.append(f"{pad}}}")


def dump_ts(ts: TransitionSystem) -> str:
    out: list[str] = ["state:"]
    for name, ty in ts.cells:
        out.append(f"  {name} : {ty}")
    out.append("inputs:")
    for name, ty in ts.step_inputs:
        out.append(f"  {name} : {ty}")
    if ts.init_inputs:
        out.append("init-inputs:")
        for name, ty in ts.init_inputs:
            out.append(f"  {name} : {ty}")
    out.append("init:")
    _dump_stmts(ts.init, 1, out)
    out.append("step:")
    _dump_stmts(ts.step, 1, out)
    out.append(f"property: {fmt_expr(ts.prop)}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------- compiler


_IDENT = re.compile(r"[^0-9a-zA-Z_]")


class _Gen:
    def __init__(self, ts: TransitionSystem):
        self.ts = ts
        self.names: dict[str, str] = {}
        self.taken: set[str] = set()
        self.types: list[Scalar] = []
        self.type_index: dict[Scalar, int] = {}

    def mangle(self, name: str, prefix: str) -> str:
        if name in self.names:
            return self.names[name]
        base = prefix + _IDENT.sub("_", name)
        cand, n = base, 1
        while cand in self.taken:
            n += 1
            cand = f"{base}_{n}"
        self.taken.add(cand)
        self.names[name] = cand
        return cand

    def ty_ref(self, ty: Scalar) -> str:
        if ty not in self.type_index:
            self.type_index[ty] = len(self.types)
            self.types.append(ty)
        return f"TY[{self.type_index[ty]}]"

    # ---- expression rendering

    def wrap_signed(self, expr: str, ty: Scalar) -> str:
        off = 1 << (ty.width - 1)
        mask = (1 << ty.width) - 1
        return f"((({expr}) + {off}) & {mask}) - {off}"

    def render(self, e: ast.Expr) -> str:
        if isinstance(e, ast.IntLit):
            return repr(e.value)
        if isinstance(e, ast.FxLit):
            return repr(e.raw)
        if isinstance(e, ast.BoolLit):
            return "True" if e.value else "False"
        if isinstance(e, (ast.VarRef, ast.InputRef)):
            return self.names[e.name]
        if isinstance(e, ast.Unary):
            v = self.render(e.operand)
            t = e.ty
            if e.op == "!":
                return f"(not {v})"
            if e.op == "~":
                if t.signed:
                    return f"(~({v}))"
                return f"(({v}) ^ {(1 << t.width) - 1})"
            if t.signed:
                return f"({self.wrap_signed(f'-({v})', t)})"
            return f"((-({v})) & {(1 << t.width) - 1})"
        if isinstance(e, ast.Binary):
            a, b = self.render(e.left), self.render(e.right)
            op, t = e.op, e.left.ty
            if op == "&&":
                return f"(({a}) and ({b}))"
            if op == "||":
                return f"(({a}) or ({b}))"
            if op in ("==", "!=", "<", "<=", ">", ">="):
                return f"(({a}) {op} ({b}))"
            return self.arith(op, t, a, b)
        if isinstance(e, ast.Ternary):
            return f"(({self.render(e.then)}) if ({self.render(e.cond)}) " \
                   f"else ({self.render(e.other)}))"
        if isinstance(e, ast.Cast):
            return self.cast(e.operand.ty, e.target, self.render(e.operand))
        raise ExtractError(f"cannot compile {type(e).__name__}")

    def arith(self, op: str, t: Scalar, a: str, b: str) -> str:
        mask = (1 << t.width) - 1
        wmask = t.width - 1
        if t.is_fixed:
            return f"nm.eval_binop({op!r}, {self.ty_ref(t)}, {a}, {b})"
        if op in ("+", "-", "*"):
            raw = f"({a}) {op} ({b})"
            if t.signed:
                return f"({self.wrap_signed(raw, t)})"
            return f"(({raw}) & {mask})"
        if op in ("/", "%"):
            return f"nm.{'div' if op == '/' else 'mod'}({self.ty_ref(t)}, {a}, {b})"
        if op in ("&", "|", "^"):
            if t.signed:
                return f"({self.wrap_signed(f'(({a}) & {mask}) {op} (({b}) & {mask})', t)})"
            return f"((({a}) {op} ({b})) & {mask})"
        if op == "<<":
            raw = f"({a}) << (({b}) & {wmask})"
            if t.signed:
                return f"({self.wrap_signed(raw, t)})"
            return f"(({raw}) & {mask})"
        if op == ">>":
            if t.signed:
                return f"(({a}) >> (({b}) & {wmask}))"
            return f"(({a}) >> (({b}) & {wmask}))"
        raise ExtractError(f"unknown operator {op}")

    def cast(self, src: Scalar, dst: Scalar, v: str) -> str:
        if src.is_fixed and not dst.is_fixed:
            inner = f"({v}) >> 16"
            if dst.signed:
                return f"({self.wrap_signed(inner, dst)})"
            return f"((({inner})) & {(1 << dst.width) - 1})"
        if dst.is_fixed and not src.is_fixed:
            return f"({self.wrap_signed(f'({v}) << 16', dst)})"
        if src.is_fixed and dst.is_fixed:
            return f"({v})"
        if dst.signed:
            return f"({self.wrap_signed(v, dst)})"
        return f"(({v}) & {(1 << dst.width) - 1})"

    # ---- statement rendering

    def stmts(self, block: list, indent: int, out: list[str]):
        pad = "    " * indent
        if not block:
            out.append(f"{pad}pass")
            return
        for s in block:
            if isinstance(s, TAssign):
                out.append(f"{pad}{self.names[s.name]} = {self.render(s.value)}")
            elif isinstance(s, TAssume):
                out.append(f"{pad}if not ({self.render(s.cond)}): return None")
            else:
                out.append(f"{pad}if {self.render(s.cond)}:")
                self.stmts(s.then, indent + 1, out)
                out.append(f"{pad}else:")
                self.stmts(s.els, indent + 1, out)


@dataclass
class CompiledTS:
    ts: TransitionSystem
    init_fn: object
    step_fn: object
    prop_fn: object
    source: str

    @property
    def cells(self):
        return self.ts.cells

    def state_dict(self, state: tuple) -> dict:
        return {name: v for (name, _), v in zip(self.ts.cells, state)}

    def state_tuple(self, d: dict) -> tuple:
        return tuple(d[name] for name, _ in self.ts.cells)

    def to_surface(self, state: tuple) -> dict:
        """Regroup flat cells into the program's state variables."""
        flat = self.state_dict(state)
        out: dict = {}
        for name, ty in self.ts.surface_vars:
            if isinstance(ty, Array):
                out[name] = [flat[_cell_name(name, j)] for j in range(ty.length)]
            else:
                out[name] = flat[name]
        if self.ts.has_err:
            out[ERR_VAR] = flat[ERR_VAR]
        return out


def compile_ts(ts: TransitionSystem) -> CompiledTS:
    """Compile init/step/property into plain Python functions over tuples."""
    g = _Gen(ts)
    for name, _ in ts.cells:
        g.mangle(name, "v_")
    for name, _ in ts.step_inputs:
        g.mangle(name, "x_")
    for name, _ in ts.init_inputs:
        g.mangle(name, "x_")
    for name, _ in ts.temps.items():
        g.mangle(name, "w_")

    cell_names = ", ".join(g.names[n] for n, _ in ts.cells)
    cell_unpack = f"({cell_names},)" if len(ts.cells) == 1 else f"({cell_names})"
    ret = f"({cell_names},)" if len(ts.cells) == 1 else f"({cell_names})"

    lines: list[str] = []
    lines.append("def _init(I):")
    if ts.init_inputs:
        names = ", ".join(g.names[n] for n, _ in ts.init_inputs)
        unpack = f"({names},)" if len(ts.init_inputs) == 1 else f"({names})"
        lines.append(f"    {unpack} = I")
    g.stmts(ts.init, 1, lines)
    lines.append(f"    return {ret}")

    lines.append("def _step(S, X):")
    if ts.cells:
        lines.append(f"    {cell_unpack} = S")
    if ts.step_inputs:
        names = ", ".join(g.names[n] for n, _ in ts.step_inputs)
        unpack = f"({names},)" if len(ts.step_inputs) == 1 else f"({names})"
        lines.append(f"    {unpack} = X")
    g.stmts(ts.step, 1, lines)
    lines.append(f"    return {ret}")

    lines.append("def _prop(S):")
    if ts.cells:
        lines.append(f"    {cell_unpack} = S")
    lines.append(f"    return bool({g.render(ts.prop)})")

    src = "\n".join(lines)
    ns = {"nm": numeric, "TY": g.types}
    exec(compile(src, "<transition-system>", "exec"), ns)
    return CompiledTS(ts=ts, init_fn=ns["_init"], step_fn=ns["_step"],
                      prop_fn=ns["_prop"], source=src)
