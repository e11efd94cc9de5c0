"""Reference interpreter.

Executes a typed program frame by frame: the init block produces frame 0,
each run of the main loop body maps frame i to frame i+1 using the input
valuation `inputs[i]`. The trailing property is a state predicate and is
checked on every frame, including frame 0.

Evaluation is strict: &&, || and ?: evaluate all operands (mux semantics).
Division by zero yields 0 and sets the 'div_by_zero' flag; out-of-range
array indices clamp and set 'array_index_clamped'. Both match how the
verification back end resolves the same situations, except that the back
end treats a zero divisor as an unconstrained result.

Nondet reads are named per loop iteration: the j-th read of a site whose
label is L is called `L` for j=1 and `L#j` after that. Sites inside
functions called several times per iteration produce several instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from kinduct.errors import InputExhausted, KinductError
from kinduct.lang import ast, numeric
from kinduct.lang.typecheck import TypedProgram
from kinduct.lang.types import Array, Scalar

ERR_VAR = "__err"


@dataclass
class ExecutionResult:
    status: str  # 'ran_to_bound' | 'violation' | 'assume_blocked'
    iterations_completed: int
    violation_kind: Optional[str] = None  # 'assert' | 'error'
    violation_frame: Optional[int] = None
    blocked_iteration: Optional[int] = None
    states: Optional[list[dict]] = None
    flags: set[str] = field(default_factory=set)

    @property
    def violated(self) -> bool:
        return self.status == "violation"


class _AssumeBlocked(KinductError):
    pass


class _Frame:
    __slots__ = ("values",)

    def __init__(self):
        self.values: dict[str, object] = {}


class _Exec:
    def __init__(self, tp: TypedProgram, flags: set[str]):
        self.tp = tp
        self.flags = flags
        self.state: dict[str, object] = {}
        self.locals: list[_Frame] = []
        self.inputs: Optional[dict] = None
        self.site_counts: dict[str, int] = {}
        self.input_context = ""

    # --------------------------------------------------------------- state

    def init_state(self, init_inputs: Optional[dict]):
        for g in self.tp.program.globals:
            if g.const:
                continue
            if isinstance(g.ty, Array):
                self.state[g.name] = [_lit_val(e) for e in g.init]
            else:
                self.state[g.name] = _lit_val(g.init)
        if self.tp.has_error_stmt:
            self.state[ERR_VAR] = False
        self.begin_inputs(init_inputs or {}, "init")
        self.locals = [_Frame()]
        try:
            for s in self.tp.main_init:
                if isinstance(s, ast.DeclStmt):
                    # main pre-loop locals are state variables
                    v = self.eval(s.init) if s.init is not None else _zero(s.ty)
                    self.state[s.name] = v
                else:
                    self.exec_stmt(s)
        finally:
            self.locals = []

    def install_state(self, initial: dict):
        for name, ty in self.tp.state_vars:
            if name not in initial:
                raise KinductError(f"initial state is missing {name!r}")
            if isinstance(ty, Array):
                raw = initial[name]
                if len(raw) != ty.length:
                    raise KinductError(f"initial value for {name!r} has wrong length")
                self.state[name] = [numeric.wrap(int(v), ty.elem) for v in raw]
            else:
                self.state[name] = _coerce_val(initial[name], ty)
        if self.tp.has_error_stmt:
            self.state[ERR_VAR] = bool(initial.get(ERR_VAR, False))

    def snapshot(self) -> dict:
        out = {}
        for name, ty in self.tp.state_vars:
            v = self.state[name]
            out[name] = list(v) if isinstance(v, list) else v
        if self.tp.has_error_stmt:
            out[ERR_VAR] = self.state[ERR_VAR]
        return out

    # --------------------------------------------------------------- inputs

    def begin_inputs(self, valuation: dict, context: str):
        self.inputs = valuation
        self.site_counts = {}
        self.input_context = context

    def read_input(self, site: ast.NondetExpr):
        n = self.site_counts.get(site.label, 0) + 1
        self.site_counts[site.label] = n
        name = site.label if n == 1 else f"{site.label}#{n}"
        if self.inputs is None or name not in self.inputs:
            raise InputExhausted(f"{self.input_context}: no value for input {name!r}")
        return _coerce_val(self.inputs[name], site.ty)

    # ----------------------------------------------------------- execution

    def run_body(self) -> bool:
        """Execute the loop body once (without the trailing property).
        Returns False if an assume blocked the transition."""
        body = self.tp.loop_body
        if self.tp.trailing_assert is not None:
            body = body[:-1]
        self.locals = [_Frame()]
        try:
            for s in body:
                self.exec_stmt(s)
        except _AssumeBlocked:
            return False
        finally:
            self.locals = []
        return True

    def lookup(self, name: str):
        if self.locals and name in self.locals[-1].values:
            return self.locals[-1].values[name]
        if name in self.state:
            return self.state[name]
        raise KinductError(f"unbound variable {name!r}")

    def store(self, name: str, value):
        if self.locals and name in self.locals[-1].values:
            self.locals[-1].values[name] = value
        elif name in self.state:
            self.state[name] = value
        else:
            raise KinductError(f"unbound variable {name!r}")

    def exec_block(self, block: list[ast.Stmt]):
        for s in block:
            self.exec_stmt(s)

    def exec_stmt(self, s: ast.Stmt):
        if isinstance(s, ast.DeclStmt):
            v = self.eval(s.init) if s.init is not None else _zero(s.ty)
            self.locals[-1].values[s.name] = v
        elif isinstance(s, ast.AssignStmt):
            v = self.eval(s.value)
            t = s.target
            if isinstance(t, ast.ArrayRef):
                arr = self.state[t.name]
                idx, clamped = numeric.clamp_index(self.eval(t.index), len(arr))
                if clamped:
                    self.flags.add("array_index_clamped")
                arr[idx] = v
            else:
                self.store(t.name, v)
        elif isinstance(s, ast.IfStmt):
            if self.eval(s.cond):
                self.exec_block(s.then)
            else:
                self.exec_block(s.els)
        elif isinstance(s, ast.ForStmt):
            start = self.eval(s.start)
            bound = self.eval(s.bound)
            i = start
            frame = self.locals[-1].values
            while i < bound:
                frame[s.var] = i
                self.exec_block(s.body)
                i = numeric.add(s.decl_ty, i, 1)
                if i <= start:  # wrapped around
                    break
            frame.pop(s.var, None)
        elif isinstance(s, ast.WhileStmt):
            raise KinductError("nested unbounded loop reached the interpreter")
        elif isinstance(s, ast.SwitchStmt):
            v = self.eval(s.scrutinee)
            for labels, body in s.cases:
                if any(_lit_val(lab) == v for lab in labels):
                    self.exec_block(body)
                    return
            if s.default is not None:
                self.exec_block(s.default)
        elif isinstance(s, ast.AssumeStmt):
            if not self.eval(s.cond):
                raise _AssumeBlocked("assume failed")
        elif isinstance(s, ast.ErrorStmt):
            self.state[ERR_VAR] = True
        elif isinstance(s, ast.CallStmt):
            self.call(s.call)
        elif isinstance(s, ast.AssertStmt):
            raise KinductError("assert outside the trailing position")
        elif isinstance(s, ast.ReturnStmt):
            raise _Return(self.eval(s.value) if s.value is not None else None)
        else:
            raise KinductError(f"cannot execute {type(s).__name__}")

    def call(self, c: ast.Call):
        fn = self.tp.funcs[c.name]
        args = [self.eval(a) for a in c.args]
        frame = _Frame()
        for (pname, _), v in zip(fn.params, args):
            frame.values[pname] = v
        self.locals.append(frame)
        try:
            self.exec_block(fn.body)
            return None
        except _Return as r:
            return r.value
        finally:
            self.locals.pop()

    # ---------------------------------------------------------- evaluation

    def eval(self, e: ast.Expr):
        if isinstance(e, ast.IntLit):
            return e.value
        if isinstance(e, ast.FxLit):
            return e.raw
        if isinstance(e, ast.BoolLit):
            return e.value
        if isinstance(e, ast.VarRef):
            return self.lookup(e.name)
        if isinstance(e, ast.ArrayRef):
            arr = self.state[e.name]
            idx, clamped = numeric.clamp_index(self.eval(e.index), len(arr))
            if clamped:
                self.flags.add("array_index_clamped")
            return arr[idx]
        if isinstance(e, ast.Unary):
            v = self.eval(e.operand)
            if e.op == "!":
                return not v
            if e.op == "-":
                return numeric.neg(e.ty, v)
            return numeric.bit_not(e.ty, v)
        if isinstance(e, ast.Binary):
            a = self.eval(e.left)
            b = self.eval(e.right)
            op = e.op
            if op == "&&":
                return bool(a) and bool(b)
            if op == "||":
                return bool(a) or bool(b)
            if op in numeric.CMPOPS:
                return numeric.eval_cmp(op, a, b)
            if op in ("/", "%") and b == 0:
                self.flags.add("div_by_zero")
                return 0
            return numeric.eval_binop(op, e.left.ty, a, b)
        if isinstance(e, ast.Ternary):
            c = self.eval(e.cond)
            a = self.eval(e.then)
            b = self.eval(e.other)
            return a if c else b
        if isinstance(e, ast.Cast):
            return numeric.cast(e.operand.ty, e.target, self.eval(e.operand))
        if isinstance(e, ast.Call):
            return self.call(e)
        if isinstance(e, ast.NondetExpr):
            return self.read_input(e)
        raise KinductError(f"cannot evaluate {type(e).__name__}")


class _Return(KinductError):
    def __init__(self, value):
        self.value = value


def _lit_val(e: ast.Expr):
    if isinstance(e, ast.IntLit):
        return e.value
    if isinstance(e, ast.FxLit):
        return e.raw
    if isinstance(e, ast.BoolLit):
        return e.value
    raise KinductError("expected a literal")


def _zero(ty: Scalar):
    return False if ty.name == "bool" else 0


def _coerce_val(v, ty: Scalar):
    if ty.name == "bool":
        return bool(v)
    return numeric.wrap(int(v), ty)


def eval_state_expr(tp: TypedProgram, state: dict, e: ast.Expr):
    """Evaluate a pure expression (the property, a trigger) over a state
    valuation. No calls, no inputs."""
    ex = _Exec(tp, set())
    ex.state = dict(state)
    for name, val in state.items():
        if isinstance(val, list):
            ex.state[name] = list(val)
    return ex.eval(e)


def property_holds(tp: TypedProgram, state: dict) -> bool:
    """The in-code property: trailing assert (if any) and no error() yet."""
    if tp.has_error_stmt and state.get(ERR_VAR):
        return False
    prop = tp.property_expr
    if prop is None:
        return True
    return bool(eval_state_expr(tp, state, prop))


def interpret(tp: TypedProgram,
              inputs: Optional[list[dict]] = None,
              *,
              max_iterations: int,
              init_inputs: Optional[dict] = None,
              initial_state: Optional[dict] = None,
              check_property: bool = True,
              record_states: bool = True) -> ExecutionResult:
    """Run a program for up to max_iterations loop iterations.

    inputs[i] provides the nondet valuation for the transition from frame i
    to frame i+1; when the list is shorter than max_iterations the run
    stops at its end. initial_state skips the init block and installs the
    given frame-0 valuation directly.
    """
    if not tp.main_loops:
        raise KinductError("program has no main loop")
    flags: set[str] = set()
    ex = _Exec(tp, flags)
    if initial_state is not None:
        ex.install_state(initial_state)
    else:
        ex.init_state(init_inputs)
    states = [ex.snapshot()]

    def result(status, it, **kw):
        return ExecutionResult(status=status, iterations_completed=it,
                               states=states if record_states else None,
                               flags=flags, **kw)

    if check_property and not property_holds(tp, states[0]):
        kind = "error" if (tp.has_error_stmt and states[0].get(ERR_VAR)) else "assert"
        return result("violation", 0, violation_kind=kind, violation_frame=0)

    err_seen = bool(states[0].get(ERR_VAR)) if tp.has_error_stmt else False
    n = max_iterations if inputs is None else min(max_iterations, len(inputs))
    for i in range(n):
        ex.begin_inputs(inputs[i] if inputs is not None else {}, f"iteration {i}")
        if not ex.run_body():
            return result("assume_blocked", i, blocked_iteration=i)
        snap = ex.snapshot()
        states.append(snap)
        frame = i + 1
        if check_property:
            if tp.has_error_stmt and snap.get(ERR_VAR) and not err_seen:
                return result("violation", frame, violation_kind="error",
                              violation_frame=frame)
            if not property_holds(tp, snap):
                return result("violation", frame, violation_kind="assert",
                              violation_frame=frame)
        err_seen = err_seen or bool(snap.get(ERR_VAR)) if tp.has_error_stmt else False
    return result("ran_to_bound", n)
