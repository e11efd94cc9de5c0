"""Type checker.

Fills in `ty` on every expression, inserts explicit Cast nodes for the
implicit lossless widenings, folds constant subexpressions, assigns stable
labels to nondet reads, and enforces the structural rules that later
stages rely on:

  * globals have constant initializers; const globals fold away
  * functions form a call DAG (no recursion) and follow the single-return rule
  * assert appears only as the final statement of an unbounded loop body,
    either bare or as the sole statement of a trailing `if (g) { assert(e); }`
  * the property expression reads state variables only
  * nondet reads are unconditional (never under if/switch/ternary arms)
  * assume/error appear only inside loop bodies (directly or via calls)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from hashlib import sha256
from typing import Optional, Union

from kinduct.errors import LoopcTypeError
from kinduct.lang import ast, numeric
from kinduct.lang.pretty import pretty_print
from kinduct.lang.types import (BOOL, FX, SURFACE_SCALARS, Array, Scalar,
                                can_widen, is_integer)


@dataclass
class FuncSummary:
    has_nondet: bool = False
    has_assume: bool = False
    has_error: bool = False
    conditional_nondet: bool = False
    calls: set[str] = field(default_factory=set)


@dataclass
class TypedProgram:
    """Type-annotated program plus the derived structure used downstream."""

    program: ast.Program
    consts: dict[str, object]
    funcs: dict[str, ast.FuncDecl]
    summaries: dict[str, FuncSummary]
    state_vars: list[tuple[str, Union[Scalar, Array]]]
    main_init: list[ast.Stmt]
    main_loops: list[ast.WhileStmt]
    # ('plain', expr) or ('guarded', guard, expr); None when no in-code property
    trailing_assert: Optional[tuple]
    has_error_stmt: bool
    source_text: Optional[str] = None

    @property
    def loop_body(self) -> list[ast.Stmt]:
        return self.main_loops[0].body if self.main_loops else []

    @property
    def property_expr(self) -> Optional[ast.Expr]:
        if self.trailing_assert is None:
            return None
        if self.trailing_assert[0] == "plain":
            return self.trailing_assert[1]
        guard, expr = self.trailing_assert[1], self.trailing_assert[2]
        return ast.Binary("||", ast.Unary("!", guard, ty=BOOL), expr, ty=BOOL)

    def digest(self) -> str:
        return sha256(pretty_print(self.program).encode()).hexdigest()


def _lit(value, ty: Scalar, pos) -> ast.Expr:
    if ty is BOOL:
        return ast.BoolLit(bool(value), ty=BOOL, pos=pos)
    if ty.is_fixed:
        return ast.FxLit(value, ty=FX, pos=pos)
    return ast.IntLit(value, ty=ty, pos=pos)


def _lit_value(e: ast.Expr):
    if isinstance(e, ast.IntLit):
        return e.value
    if isinstance(e, ast.FxLit):
        return e.raw
    if isinstance(e, ast.BoolLit):
        return 1 if e.value else 0
    return None


def is_literal(e: ast.Expr) -> bool:
    return isinstance(e, (ast.IntLit, ast.FxLit, ast.BoolLit))


class _Scope:
    """Lexical scopes for locals. Shadowing is rejected outright: a loop
    local shadowing a state variable would silently change what the
    trailing property reads, so no name may be declared twice anywhere
    along the visible chain."""

    def __init__(self):
        self.frames: list[dict[str, tuple[Scalar, bool]]] = []

    def push(self):
        self.frames.append({})

    def pop(self):
        self.frames.pop()

    def declare(self, name: str, ty: Scalar, pos, readonly=False):
        if self.lookup(name) is not None:
            raise LoopcTypeError(f"redeclaration of {name!r}", pos)
        self.frames[-1][name] = (ty, readonly)

    def lookup(self, name: str):
        for frame in reversed(self.frames):
            if name in frame:
                return frame[name]
        return None


class _Checker:
    def __init__(self, program: ast.Program, source: str | None,
                 allow_reserved: bool = False):
        self.program = program
        self.source = source
        # "__" names are reserved for machinery (error latch, monitors,
        # induction counters); only internally generated programs may use them
        self.allow_reserved = allow_reserved
        self.consts: dict[str, object] = {}
        self.global_types: dict[str, Union[Scalar, Array]] = {}
        self.funcs: dict[str, ast.FuncDecl] = {}
        self.summaries: dict[str, FuncSummary] = {}
        self.scope = _Scope()
        self.current_fn: Optional[ast.FuncDecl] = None
        self.loop_depth = 0  # unbounded loops enclosing the current point
        self.cond_depth = 0  # if/switch/ternary-arm nesting in current body
        self.has_error_stmt = False
        self.prop_restricted = False
        self.state_var_names: set[str] = set()

    # ------------------------------------------------------------ utilities

    def err(self, msg: str, pos) -> LoopcTypeError:
        return LoopcTypeError(msg, pos)

    def fold(self, e: ast.Expr) -> ast.Expr:
        """Constant-fold a typed node when all children are literals."""
        if isinstance(e, ast.Unary) and is_literal(e.operand):
            v = _lit_value(e.operand)
            t = e.ty
            if e.op == "!":
                return _lit(0 if v else 1, BOOL, e.pos)
            if e.op == "-":
                return _lit(numeric.neg(t, v), t, e.pos)
            if e.op == "~":
                return _lit(numeric.bit_not(t, v), t, e.pos)
        if isinstance(e, ast.Binary) and is_literal(e.left) and is_literal(e.right):
            a, b = _lit_value(e.left), _lit_value(e.right)
            op = e.op
            if op in ("&&", "||"):
                r = (a and b) if op == "&&" else (a or b)
                return _lit(1 if r else 0, BOOL, e.pos)
            if op in numeric.CMPOPS:
                return _lit(numeric.bool_val(numeric.eval_cmp(op, a, b)), BOOL, e.pos)
            if op in ("/", "%") and b == 0:
                return e  # not foldable: verification treats it as nondet
            t = e.left.ty
            return _lit(numeric.eval_binop(op, t, a, b), t, e.pos)
        if isinstance(e, ast.Cast) and is_literal(e.operand) and not e.implicit:
            v = numeric.cast(e.operand.ty, e.target, _lit_value(e.operand))
            return _lit(v, e.target, e.pos)
        if isinstance(e, ast.Ternary) and is_literal(e.cond):
            return e.then if _lit_value(e.cond) else e.other
        return e

    def coerce(self, e: ast.Expr, target: Scalar, pos) -> ast.Expr:
        """Make e have type target, retyping literals and inserting
        implicit widening casts; reject lossy mixes."""
        if e.ty == target:
            return e
        if isinstance(e, ast.IntLit) and is_integer(target):
            if target.min_value <= e.value <= target.max_value:
                e.ty = target
                return e
            raise self.err(f"literal {e.value} does not fit {target}", pos)
        if isinstance(e, ast.IntLit) and target.is_fixed:
            raw = e.value << 16
            if FX.min_value <= raw <= FX.max_value:
                return ast.FxLit(raw, ty=FX, pos=e.pos)
            raise self.err(f"literal {e.value} does not fit fx", pos)
        if e.ty is not None and isinstance(e.ty, Scalar) and can_widen(e.ty, target):
            folded = self.fold(ast.Cast(target, e, ty=target, pos=pos, implicit=True))
            if is_literal(folded):
                return folded
            return ast.Cast(target, e, ty=target, pos=pos, implicit=True)
        if e.ty is FX or target is FX:
            raise self.err("mixing fx and integer operands requires an explicit cast", pos)
        raise self.err(f"cannot implicitly convert {e.ty} to {target}", pos)

    def unify(self, e: ast.Binary) -> Scalar:
        l, r = e.left, e.right
        if l.ty == r.ty:
            return l.ty
        if isinstance(l.ty, Scalar) and isinstance(r.ty, Scalar):
            if can_widen(l.ty, r.ty):
                e.left = self.coerce(l, r.ty, e.pos)
                return r.ty
            if can_widen(r.ty, l.ty):
                e.right = self.coerce(r, l.ty, e.pos)
                return l.ty
            if isinstance(l, ast.IntLit) or isinstance(r, ast.IntLit):
                # literal adopts the sibling type when it fits
                if isinstance(l, ast.IntLit):
                    e.left = self.coerce(l, r.ty, e.pos)
                    return r.ty
                e.right = self.coerce(r, l.ty, e.pos)
                return l.ty
        if l.ty is FX or r.ty is FX:
            raise self.err("mixing fx and integer operands requires an explicit cast", e.pos)
        raise self.err(f"incompatible operand types {l.ty} and {r.ty}", e.pos)

    # ---------------------------------------------------------- expressions

    def expr(self, e: ast.Expr, expected: Optional[Scalar] = None) -> ast.Expr:
        e = self._expr(e, expected)
        return self.fold(e)

    def _expr(self, e: ast.Expr, expected: Optional[Scalar]) -> ast.Expr:
        if isinstance(e, ast.IntLit):
            if expected is not None:
                return self.coerce(e, expected, e.pos)
            if e.ty is None:
                from kinduct.lang.types import I32, U32
                if I32.min_value <= e.value <= I32.max_value:
                    e.ty = I32
                elif 0 <= e.value <= U32.max_value:
                    e.ty = U32
                else:
                    raise self.err(f"integer literal {e.value} out of range", e.pos)
            return e
        if isinstance(e, ast.FxLit):
            e.ty = FX
            return e
        if isinstance(e, ast.BoolLit):
            e.ty = BOOL
            return e
        if isinstance(e, ast.VarRef):
            if e.name in self.consts:
                value = self.consts[e.name]
                cty = self.global_types[e.name]
                lit = _lit(value, cty, e.pos)
                return self.coerce(lit, expected, e.pos) if expected else lit
            hit = self.scope.lookup(e.name)
            if hit is not None:
                e.ty = hit[0]
            elif e.name in self.global_types:
                gty = self.global_types[e.name]
                if isinstance(gty, Array):
                    raise self.err(f"array {e.name!r} used without an index", e.pos)
                e.ty = gty
            else:
                raise self.err(f"unknown variable {e.name!r}", e.pos)
            if self.prop_restricted and e.name not in self.state_var_names:
                raise self.err("property may reference only state variables", e.pos)
            return e
        if isinstance(e, ast.ArrayRef):
            gty = self.global_types.get(e.name)
            if not isinstance(gty, Array):
                raise self.err(f"{e.name!r} is not an array", e.pos)
            e.index = self.expr(e.index)
            if not (isinstance(e.index.ty, Scalar) and is_integer(e.index.ty)):
                raise self.err("array index must be an integer", e.pos)
            e.ty = gty.elem
            return e
        if isinstance(e, ast.Unary):
            if e.op == "!":
                e.operand = self.expr(e.operand, BOOL)
                self._require(e.operand.ty is BOOL, "operand of ! must be bool", e.pos)
                e.ty = BOOL
            else:
                e.operand = self.expr(e.operand)
                t = e.operand.ty
                if e.op == "~":
                    self._require(isinstance(t, Scalar) and is_integer(t),
                                  "operand of ~ must be an integer", e.pos)
                else:  # unary minus
                    self._require(isinstance(t, Scalar) and t is not BOOL,
                                  "operand of - must be numeric", e.pos)
                e.ty = t
            return e
        if isinstance(e, ast.Binary):
            return self._binary(e)
        if isinstance(e, ast.Ternary):
            e.cond = self.expr(e.cond, BOOL)
            self._require(e.cond.ty is BOOL, "ternary condition must be bool", e.pos)
            # type one arm first so literal arms can adopt the sibling type
            if isinstance(e.then, ast.IntLit) and not isinstance(e.other, ast.IntLit):
                e.other = self.expr(e.other, expected)
                e.then = self.expr(e.then, e.other.ty)
            else:
                e.then = self.expr(e.then, expected)
                e.other = self.expr(e.other, e.then.ty)
            pair = ast.Binary("==", e.then, e.other, pos=e.pos)
            ty = self.unify(pair)
            e.then, e.other = pair.left, pair.right
            e.ty = ty
            return e
        if isinstance(e, ast.Cast):
            e.operand = self.expr(e.operand)
            t = e.operand.ty
            self._require(isinstance(t, Scalar) and t is not BOOL,
                          "cast source must be numeric", e.pos)
            self._require(e.target is not BOOL, "cannot cast to bool", e.pos)
            e.ty = e.target
            return e
        if isinstance(e, ast.Call):
            if self.prop_restricted:
                raise self.err("property expressions cannot call functions", e.pos)
            fn = self.funcs.get(e.name)
            if fn is None:
                raise self.err(f"unknown function {e.name!r}", e.pos)
            if fn.ret is None:
                raise self.err(f"void function {e.name!r} used as a value", e.pos)
            self._check_call(e, fn)
            e.ty = fn.ret
            return e
        if isinstance(e, ast.NondetExpr):
            if self.prop_restricted:
                raise self.err("property expressions cannot read nondet inputs", e.pos)
            if self.cond_depth > 0:
                raise self.err("nondet reads must be unconditional "
                               "(not under if/switch or ternary arms)", e.pos)
            e.ty = SURFACE_SCALARS[e.type_name]
            return e
        raise self.err(f"unsupported expression {type(e).__name__}", getattr(e, "pos", None))

    def _binary(self, e: ast.Binary) -> ast.Expr:
        op = e.op
        if op in ("&&", "||"):
            e.left = self.expr(e.left, BOOL)
            e.right = self.expr(e.right, BOOL)
            self._require(e.left.ty is BOOL and e.right.ty is BOOL,
                          f"operands of {op} must be bool", e.pos)
            e.ty = BOOL
            return e
        # type the non-literal side first so literals can adopt its type
        if isinstance(e.left, ast.IntLit) and not isinstance(e.right, ast.IntLit):
            e.right = self.expr(e.right)
            rt = e.right.ty if isinstance(e.right.ty, Scalar) else None
            e.left = self.expr(e.left, rt if rt and rt is not BOOL else None)
        else:
            e.left = self.expr(e.left)
            lt = e.left.ty if isinstance(e.left.ty, Scalar) else None
            if op in ("<<", ">>"):
                e.right = self.expr(e.right)
            else:
                e.right = self.expr(e.right, lt if (isinstance(e.right, ast.IntLit)
                                                    and lt and lt is not BOOL) else None)
        if op in ("<<", ">>"):
            self._require(is_integer(e.left.ty), "shift operand must be an integer", e.pos)
            self._require(isinstance(e.right.ty, Scalar) and is_integer(e.right.ty),
                          "shift amount must be an integer", e.pos)
            e.ty = e.left.ty
            return e
        ty = self.unify(e)
        if op in ("==", "!="):
            e.ty = BOOL
            return e
        if op in ("<", "<=", ">", ">="):
            self._require(ty is not BOOL, "ordering on bool is not defined", e.pos)
            e.ty = BOOL
            return e
        self._require(ty is not BOOL, f"operator {op} is not defined on bool", e.pos)
        if ty.is_fixed:
            self._require(op in ("+", "-", "*", "/"),
                          f"operator {op} is not defined on fx", e.pos)
        e.ty = ty
        return e

    def _check_call(self, call: ast.Call, fn: ast.FuncDecl):
        if len(call.args) != len(fn.params):
            raise self.err(f"{fn.name} expects {len(fn.params)} arguments, "
                           f"got {len(call.args)}", call.pos)
        for i, (arg, (_, pty)) in enumerate(zip(call.args, fn.params)):
            call.args[i] = self.coerce(self.expr(call.args[i], pty), pty, call.pos)
        summ = self.summaries.get(call.name)
        if summ:
            if summ.has_nondet and self.cond_depth > 0:
                raise self.err(f"call to {call.name!r} (reads nondet inputs) "
                               "must be unconditional", call.pos)
            if (summ.has_assume or summ.has_error) and self.loop_depth == 0:
                raise self.err(f"call to {call.name!r} (uses assume/error) is only "
                               "allowed inside the main loop", call.pos)

    def _require(self, cond: bool, msg: str, pos):
        if not cond:
            raise self.err(msg, pos)

    def _declare(self, name: str, ty: Scalar, pos, readonly=False):
        self._check_name(name, pos)
        if name in self.global_types or name in self.funcs:
            raise self.err(f"{name!r} shadows a global declaration", pos)
        self.scope.declare(name, ty, pos, readonly=readonly)

    def _check_name(self, name: str, pos):
        if name.startswith("__") and not self.allow_reserved:
            raise self.err(f"{name!r} uses the reserved '__' prefix", pos)

    # ----------------------------------------------------------- statements

    def block(self, stmts: list[ast.Stmt], new_scope=True):
        if new_scope:
            self.scope.push()
        for s in stmts:
            self.stmt(s)
        if new_scope:
            self.scope.pop()

    def stmt(self, s: ast.Stmt):
        if isinstance(s, ast.DeclStmt):
            if not isinstance(s.ty, Scalar):
                raise self.err("local arrays are not supported", s.pos)
            if s.init is not None:
                if isinstance(s.init, list):
                    raise self.err("brace initializer on a scalar", s.pos)
                s.init = self.expr(s.init, s.ty)
                s.init = self.coerce(s.init, s.ty, s.pos)
            self._declare(s.name, s.ty, s.pos)
        elif isinstance(s, ast.AssignStmt):
            self._assign(s)
        elif isinstance(s, ast.IfStmt):
            s.cond = self.expr(s.cond, BOOL)
            self._require(s.cond.ty is BOOL, "if condition must be bool", s.pos)
            self.cond_depth += 1
            self.block(s.then)
            self.block(s.els)
            self.cond_depth -= 1
        elif isinstance(s, ast.ForStmt):
            if s.decl_ty is None:
                raise self.err("for-loop variable must be declared in the header "
                               "(for (u8 i = ...))", s.pos)
            self._require(is_integer(s.decl_ty), "for-loop variable must be an integer", s.pos)
            s.start = self.coerce(self.expr(s.start, s.decl_ty), s.decl_ty, s.pos)
            s.bound = self.coerce(self.expr(s.bound, s.decl_ty), s.decl_ty, s.pos)
            if is_literal(s.start) and is_literal(s.bound):
                s.trip_count = max(0, _lit_value(s.bound) - _lit_value(s.start))
            self.scope.push()
            self._declare(s.var, s.decl_ty, s.pos, readonly=True)
            if s.trip_count is None:
                # dynamic trip count: body runs a data-dependent number of
                # times, so nondet reads inside it count as conditional
                self.cond_depth += 1
                self.block(s.body, new_scope=False)
                self.cond_depth -= 1
            else:
                self.block(s.body, new_scope=False)
            self.scope.pop()
        elif isinstance(s, ast.WhileStmt):
            if self.current_fn is not None:
                raise self.err("unbounded loops are only allowed in main", s.pos)
            self.loop_depth += 1
            self.block(s.body)
            self.loop_depth -= 1
        elif isinstance(s, ast.SwitchStmt):
            self._switch(s)
        elif isinstance(s, ast.AssertStmt):
            raise self.err("assert is only allowed as the final statement of "
                           "the main loop body", s.pos)
        elif isinstance(s, ast.AssumeStmt):
            if self.current_fn is None and self.loop_depth == 0:
                raise self.err("assume is not allowed before the main loop", s.pos)
            s.cond = self.expr(s.cond, BOOL)
            self._require(s.cond.ty is BOOL, "assume argument must be bool", s.pos)
        elif isinstance(s, ast.ErrorStmt):
            if self.current_fn is None and self.loop_depth == 0:
                raise self.err("error() is not allowed before the main loop", s.pos)
            self.has_error_stmt = True
        elif isinstance(s, ast.CallStmt):
            fn = self.funcs.get(s.call.name)
            if fn is None:
                raise self.err(f"unknown function {s.call.name!r}", s.pos)
            if fn.ret is not None:
                raise self.err(f"result of {fn.name!r} is discarded", s.pos)
            self._check_call(s.call, fn)
            s.call.ty = None
        elif isinstance(s, ast.ReturnStmt):
            raise self.err("return outside a function body position", s.pos)
        else:
            raise self.err(f"unsupported statement {type(s).__name__}",
                           getattr(s, "pos", None))

    def _assign(self, s: ast.AssignStmt):
        t = s.target
        if isinstance(t, ast.VarRef):
            if t.name in self.consts:
                raise self.err(f"cannot assign to const {t.name!r}", s.pos)
            hit = self.scope.lookup(t.name)
            if hit is not None:
                ty, readonly = hit
                if readonly:
                    raise self.err(f"cannot assign to for-loop variable {t.name!r}", s.pos)
                t.ty = ty
            elif t.name in self.global_types:
                gty = self.global_types[t.name]
                if isinstance(gty, Array):
                    raise self.err("whole-array assignment is not supported", s.pos)
                t.ty = gty
            else:
                raise self.err(f"unknown variable {t.name!r}", s.pos)
        else:
            gty = self.global_types.get(t.name)
            if not isinstance(gty, Array):
                raise self.err(f"{t.name!r} is not an array", s.pos)
            t.index = self.expr(t.index)
            self._require(isinstance(t.index.ty, Scalar) and is_integer(t.index.ty),
                          "array index must be an integer", s.pos)
            t.ty = gty.elem
        s.value = self.coerce(self.expr(s.value, t.ty), t.ty, s.pos)

    def _switch(self, s: ast.SwitchStmt):
        s.scrutinee = self.expr(s.scrutinee)
        sty = s.scrutinee.ty
        self._require(isinstance(sty, Scalar) and is_integer(sty),
                      "switch scrutinee must be an integer", s.pos)
        seen: set[int] = set()
        for labels, body in s.cases:
            for i, lab in enumerate(labels):
                lab = self.expr(lab, sty)
                lab = self.coerce(lab, sty, s.pos)
                if not is_literal(lab):
                    raise self.err("case label must be a constant", s.pos)
                v = _lit_value(lab)
                if v in seen:
                    raise self.err(f"duplicate case label {v}", s.pos)
                seen.add(v)
                labels[i] = lab
            self.cond_depth += 1
            self.block(body)
            self.cond_depth -= 1
        if s.default is not None:
            self.cond_depth += 1
            self.block(s.default)
            self.cond_depth -= 1

    # ------------------------------------------------------------ toplevel

    def check_globals(self):
        for g in self.program.globals:
            self._check_name(g.name, g.pos)
            if g.name in self.global_types:
                raise self.err(f"duplicate global {g.name!r}", g.pos)
            if isinstance(g.ty, Array):
                if g.ty.length <= 0:
                    raise self.err("array length must be positive", g.pos)
                if g.const:
                    raise self.err("const arrays are not supported", g.pos)
                elems: list[ast.Expr] = []
                if g.init is None:
                    elems = [_lit(0, g.ty.elem, g.pos) for _ in range(g.ty.length)]
                else:
                    items = g.init if isinstance(g.init, list) else [g.init]
                    if len(items) != g.ty.length:
                        raise self.err(f"array initializer for {g.name!r} has "
                                       f"{len(items)} elements, expected {g.ty.length}", g.pos)
                    for item in items:
                        item = self.coerce(self.expr(item, g.ty.elem), g.ty.elem, g.pos)
                        if not is_literal(item):
                            raise self.err("global initializers must be constant", g.pos)
                        elems.append(item)
                g.init = elems
            else:
                if g.init is None:
                    g.init = _lit(0, g.ty, g.pos)
                else:
                    if isinstance(g.init, list):
                        raise self.err("brace initializer on a scalar", g.pos)
                    g.init = self.coerce(self.expr(g.init, g.ty), g.ty, g.pos)
                    if not is_literal(g.init):
                        raise self.err("global initializers must be constant", g.pos)
                if g.const:
                    self.consts[g.name] = _lit_value(g.init)
            self.global_types[g.name] = g.ty

    def check_functions(self):
        for fn in self.program.funcs:
            self._check_name(fn.name, fn.pos)
            if fn.name in self.funcs or fn.name == "main":
                raise self.err(f"duplicate function {fn.name!r}", fn.pos)
            if fn.name in self.global_types:
                raise self.err(f"{fn.name!r} is both a global and a function", fn.pos)
            self.funcs[fn.name] = fn
        order = self._topo_order()
        for name in order:
            fn = self.funcs[name]
            self._check_function(fn)

    def _topo_order(self) -> list[str]:
        graph = {name: set() for name in self.funcs}
        for name, fn in self.funcs.items():
            for st in ast.walk_stmts(fn.body):
                for e in ast.stmt_exprs(st):
                    for sub in ast.walk_exprs(e):
                        if isinstance(sub, ast.Call):
                            graph[name].add(sub.name)
        for st in ast.walk_stmts(self.program.main.body):
            for e in ast.stmt_exprs(st):
                for sub in ast.walk_exprs(e):
                    if isinstance(sub, ast.Call) and sub.name == "main":
                        raise self.err("main cannot be called", self.program.main.pos)
        order: list[str] = []
        state: dict[str, int] = {}

        def visit(n: str, chain: list[str]):
            if n == "main":
                raise self.err("main cannot be called", self.funcs[chain[-1]].pos)
            if n not in self.funcs:
                return  # unknown callee reported during body checking
            if state.get(n) == 1:
                cycle = " -> ".join(chain[chain.index(n):] + [n])
                raise self.err(f"recursive call chain: {cycle}", self.funcs[n].pos)
            if state.get(n) == 2:
                return
            state[n] = 1
            for m in sorted(graph[n]):
                visit(m, chain + [n])
            state[n] = 2
            order.append(n)

        for n in sorted(self.funcs):
            visit(n, [])
        return order

    def _check_function(self, fn: ast.FuncDecl):
        self.current_fn = fn
        self.loop_depth = 1  # callable only from loop context; checked at call sites
        self.cond_depth = 0
        self.scope.push()
        for pname, pty in fn.params:
            self._declare(pname, pty, fn.pos)
        body = fn.body
        ret_stmts = [s for s in ast.walk_stmts(body) if isinstance(s, ast.ReturnStmt)]
        if fn.ret is not None:
            if not body or not isinstance(body[-1], ast.ReturnStmt) or len(ret_stmts) != 1:
                raise self.err(f"{fn.name!r} must have exactly one return, as its "
                               "final statement", fn.pos)
            ret = body[-1]
            if ret.value is None:
                raise self.err(f"{fn.name!r} must return a value", fn.pos)
            self.block(body[:-1], new_scope=False)
            ret.value = self.coerce(self.expr(ret.value, fn.ret), fn.ret, ret.pos)
        else:
            if ret_stmts:
                if len(ret_stmts) != 1 or body[-1] is not ret_stmts[0] or ret_stmts[0].value:
                    raise self.err(f"void {fn.name!r} may only end with a bare return",
                                   fn.pos)
                self.block(body[:-1], new_scope=False)
            else:
                self.block(body, new_scope=False)
        self.scope.pop()
        self.current_fn = None
        self.summaries[fn.name] = self._summarize(fn)

    def _summarize(self, fn: ast.FuncDecl) -> FuncSummary:
        summ = FuncSummary()

        def scan(block: list[ast.Stmt], conditional: bool):
            for s in block:
                cond_here = conditional or isinstance(s, (ast.IfStmt, ast.SwitchStmt))
                for e in ast.stmt_exprs(s):
                    for sub in ast.walk_exprs(e):
                        if isinstance(sub, ast.NondetExpr):
                            summ.has_nondet = True
                            if conditional:
                                summ.conditional_nondet = True
                        elif isinstance(sub, ast.Call):
                            summ.calls.add(sub.name)
                            callee = self.summaries.get(sub.name)
                            if callee:
                                summ.has_nondet |= callee.has_nondet
                                summ.has_assume |= callee.has_assume
                                summ.has_error |= callee.has_error
                                if callee.has_nondet and conditional:
                                    summ.conditional_nondet = True
                                summ.conditional_nondet |= callee.conditional_nondet
                if isinstance(s, ast.AssumeStmt):
                    summ.has_assume = True
                if isinstance(s, ast.ErrorStmt):
                    summ.has_error = True
                for b in ast.child_blocks(s):
                    scan(b, cond_here)

        scan(fn.body, False)
        return summ

    def check_main(self) -> tuple[list, list, Optional[tuple]]:
        main = self.program.main
        self.current_fn = None
        self.scope.push()
        init: list[ast.Stmt] = []
        loops: list[ast.WhileStmt] = []
        for s in main.body:
            if isinstance(s, ast.WhileStmt):
                loops.append(s)
                continue
            if loops:
                raise self.err("statements after the main loop are not allowed",
                               getattr(s, "pos", None))
            init.append(s)
        # statements before the loop: init context (loop_depth 0)
        trailing = None
        for s in init:
            self._check_init_stmt(s)
        self.state_var_names = {g.name for g in self.program.globals if not g.const}
        for s in init:
            if isinstance(s, ast.DeclStmt):
                self.state_var_names.add(s.name)
        for li, loop in enumerate(loops):
            self.loop_depth += 1
            body = loop.body
            prop_stmt = None
            if li == 0 and body:
                prop_stmt = self._match_trailing_assert(body[-1])
            check_body = body[:-1] if prop_stmt else body
            self.scope.push()
            for s in check_body:
                self.stmt(s)
            if prop_stmt:
                trailing = self._check_trailing(prop_stmt)
            self.scope.pop()
            self.loop_depth -= 1
        self.scope.pop()
        return init, loops, trailing

    def _check_init_stmt(self, s: ast.Stmt):
        if isinstance(s, (ast.AssertStmt,)):
            raise self.err("assert is only allowed as the final statement of "
                           "the main loop body", s.pos)
        self.stmt(s)

    def _match_trailing_assert(self, s: ast.Stmt):
        if isinstance(s, ast.AssertStmt):
            return ("plain", s)
        if (isinstance(s, ast.IfStmt) and not s.els and len(s.then) == 1
                and isinstance(s.then[0], ast.AssertStmt)):
            return ("guarded", s)
        return None

    def _check_trailing(self, matched) -> tuple:
        kind, s = matched
        if kind == "plain":
            self.prop_restricted = True
            try:
                s.cond = self.expr(s.cond, BOOL)
            finally:
                self.prop_restricted = False
            self._require(s.cond.ty is BOOL, "assert argument must be bool", s.pos)
            return ("plain", s.cond)
        guard_if = s
        inner = guard_if.then[0]
        self.prop_restricted = True
        try:
            guard_if.cond = self.expr(guard_if.cond, BOOL)
            inner.cond = self.expr(inner.cond, BOOL)
        finally:
            self.prop_restricted = False
        self._require(guard_if.cond.ty is BOOL, "if condition must be bool", guard_if.pos)
        self._require(inner.cond.ty is BOOL, "assert argument must be bool", inner.pos)
        return ("guarded", guard_if.cond, inner.cond)

    def assign_nondet_labels(self):
        used: dict[str, int] = {}

        def label_for(base: str) -> str:
            n = used.get(base, 0) + 1
            used[base] = n
            return base if n == 1 else f"{base}_{n}"

        def visit_block(block: list[ast.Stmt]):
            for s in block:
                target = None
                if isinstance(s, ast.AssignStmt) and isinstance(s.target, ast.VarRef):
                    target = s.target.name
                elif isinstance(s, ast.DeclStmt):
                    target = s.name
                for e in ast.stmt_exprs(s):
                    for sub in ast.walk_exprs(e):
                        if isinstance(sub, ast.NondetExpr) and sub.label is None:
                            direct = (target is not None
                                      and isinstance(s, (ast.AssignStmt, ast.DeclStmt))
                                      and sub is (s.value if isinstance(s, ast.AssignStmt)
                                                  else s.init))
                            sub.label = label_for(target if direct else "nondet")
                for b in ast.child_blocks(s):
                    visit_block(b)

        visit_block(self.program.main.body)
        for fn in self.program.funcs:
            visit_block(fn.body)


def type_property_expr(tp: TypedProgram, expr: ast.Expr) -> ast.Expr:
    """Type an externally supplied property expression: bool-valued, pure,
    and restricted to state variables and consts."""
    c = _Checker(tp.program, None)
    c.consts = tp.consts
    c.global_types = {g.name: g.ty for g in tp.program.globals}
    c.funcs = tp.funcs
    c.summaries = tp.summaries
    c.state_var_names = {name for name, _ in tp.state_vars}
    c.scope.push()
    for s in tp.main_init:
        if isinstance(s, ast.DeclStmt):
            c.scope.declare(s.name, s.ty, s.pos)
    c.prop_restricted = True
    out = c.expr(expr, BOOL)
    if out.ty is not BOOL:
        raise LoopcTypeError("property must be a bool expression",
                             getattr(expr, "pos", None))
    return out


def typecheck(program: ast.Program, source: str | None = None,
              allow_reserved: bool = False) -> TypedProgram:
    """Check a parsed program and return its typed form."""
    c = _Checker(program, source, allow_reserved=allow_reserved)
    c.check_globals()
    c.check_functions()
    init, loops, trailing = c.check_main()
    c.assign_nondet_labels()
    state_vars: list[tuple[str, Union[Scalar, Array]]] = []
    for g in program.globals:
        if not g.const:
            state_vars.append((g.name, g.ty))
    for s in init:
        if isinstance(s, ast.DeclStmt):
            state_vars.append((s.name, s.ty))
    return TypedProgram(
        program=program,
        consts=c.consts,
        funcs=c.funcs,
        summaries=c.summaries,
        state_vars=state_vars,
        main_init=init,
        main_loops=loops,
        trailing_assert=trailing,
        has_error_stmt=c.has_error_stmt,
        source_text=source,
    )
