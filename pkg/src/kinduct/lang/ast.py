"""AST node definitions.

Nodes are produced untyped by the parser; the type checker fills in `ty`
in place and inserts explicit Cast nodes for implicit widenings. After
type checking, trees are treated as immutable and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from kinduct.lang.types import Array, Scalar

Pos = "tuple[int, int] | None"


@dataclass
class Expr:
    pass


@dataclass
class IntLit(Expr):
    value: int
    ty: Optional[Scalar] = None
    pos: Pos = None
    hex: bool = False


@dataclass
class FxLit(Expr):
    raw: int  # 16.16 raw value
    ty: Optional[Scalar] = None
    pos: Pos = None


@dataclass
class BoolLit(Expr):
    value: bool
    ty: Optional[Scalar] = None
    pos: Pos = None


@dataclass
class VarRef(Expr):
    name: str
    ty: Union[Scalar, Array, None] = None
    pos: Pos = None


@dataclass
class ArrayRef(Expr):
    name: str
    index: Expr = None
    ty: Optional[Scalar] = None
    pos: Pos = None


@dataclass
class Unary(Expr):
    op: str  # ! ~ -
    operand: Expr = None
    ty: Optional[Scalar] = None
    pos: Pos = None


@dataclass
class Binary(Expr):
    op: str
    left: Expr = None
    right: Expr = None
    ty: Optional[Scalar] = None
    pos: Pos = None


@dataclass
class Ternary(Expr):
    cond: Expr
    then: Expr = None
    other: Expr = None
    ty: Optional[Scalar] = None
    pos: Pos = None


@dataclass
class Cast(Expr):
    target: Scalar
    operand: Expr = None
    ty: Optional[Scalar] = None
    pos: Pos = None
    implicit: bool = False


@dataclass
class Call(Expr):
    name: str
    args: list[Expr] = field(default_factory=list)
    ty: Optional[Scalar] = None
    pos: Pos = None


@dataclass
class NondetExpr(Expr):
    """A nondet_T() intrinsic read. `label` is the stable input name
    assigned during type checking."""

    type_name: str
    ty: Optional[Scalar] = None
    label: Optional[str] = None
    pos: Pos = None


@dataclass
class InputRef(Expr):
    """Transition-system level reference to a per-step input symbol."""

    name: str
    ty: Optional[Scalar] = None
    pos: Pos = None


# ---------------------------------------------------------------- statements


@dataclass
class Stmt:
    pass


@dataclass
class DeclStmt(Stmt):
    name: str
    ty: Union[Scalar, Array]
    init: Union[Expr, list[Expr], None] = None
    pos: Pos = None


@dataclass
class AssignStmt(Stmt):
    target: Union[VarRef, ArrayRef]
    value: Expr = None
    pos: Pos = None


@dataclass
class IfStmt(Stmt):
    cond: Expr
    then: list[Stmt] = field(default_factory=list)
    els: list[Stmt] = field(default_factory=list)
    pos: Pos = None


@dataclass
class ForStmt(Stmt):
    """Bounded loop: for (ty var = start; var < bound; var = var + 1)."""

    var: str
    decl_ty: Optional[Scalar]
    start: Expr = None
    bound: Expr = None
    body: list[Stmt] = field(default_factory=list)
    pos: Pos = None
    trip_count: Optional[int] = None  # filled by the type checker


@dataclass
class WhileStmt(Stmt):
    """Unbounded loop (surface form: while (1) / while (true))."""

    body: list[Stmt] = field(default_factory=list)
    pos: Pos = None


@dataclass
class SwitchStmt(Stmt):
    scrutinee: Expr
    cases: list[tuple[list[Expr], list[Stmt]]] = field(default_factory=list)
    default: Optional[list[Stmt]] = None
    pos: Pos = None


@dataclass
class AssertStmt(Stmt):
    cond: Expr
    pos: Pos = None


@dataclass
class AssumeStmt(Stmt):
    cond: Expr
    pos: Pos = None


@dataclass
class ErrorStmt(Stmt):
    pos: Pos = None


@dataclass
class CallStmt(Stmt):
    call: Call
    pos: Pos = None


@dataclass
class ReturnStmt(Stmt):
    value: Optional[Expr] = None
    pos: Pos = None


# ------------------------------------------------------------- declarations


@dataclass
class GlobalDecl:
    name: str
    ty: Union[Scalar, Array]
    init: Union[Expr, list[Expr], None]
    const: bool = False
    pos: Pos = None


@dataclass
class FuncDecl:
    name: str
    ret: Optional[Scalar]  # None = void
    params: list[tuple[str, Scalar]]
    body: list[Stmt]
    pos: Pos = None


@dataclass
class Program:
    globals: list[GlobalDecl]
    funcs: list[FuncDecl]  # excludes main
    main: FuncDecl = None


def walk_exprs(e: Expr):
    """Yield e and all sub-expressions."""
    yield e
    for child in _expr_children(e):
        yield from walk_exprs(child)


def _expr_children(e: Expr) -> list[Expr]:
    if isinstance(e, ArrayRef):
        return [e.index]
    if isinstance(e, Unary):
        return [e.operand]
    if isinstance(e, Binary):
        return [e.left, e.right]
    if isinstance(e, Ternary):
        return [e.cond, e.then, e.other]
    if isinstance(e, Cast):
        return [e.operand]
    if isinstance(e, Call):
        return list(e.args)
    return []


def stmt_exprs(s: Stmt) -> list[Expr]:
    """Direct expressions of a statement (not recursing into sub-statements)."""
    if isinstance(s, DeclStmt):
        if s.init is None:
            return []
        return list(s.init) if isinstance(s.init, list) else [s.init]
    if isinstance(s, AssignStmt):
        exprs = [s.value]
        if isinstance(s.target, ArrayRef):
            exprs.append(s.target.index)
        return exprs
    if isinstance(s, IfStmt):
        return [s.cond]
    if isinstance(s, ForStmt):
        return [s.start, s.bound]
    if isinstance(s, SwitchStmt):
        labels = [l for labels, _ in s.cases for l in labels]
        return [s.scrutinee] + labels
    if isinstance(s, (AssertStmt, AssumeStmt)):
        return [s.cond]
    if isinstance(s, CallStmt):
        return [s.call]
    if isinstance(s, ReturnStmt):
        return [s.value] if s.value is not None else []
    return []


def child_blocks(s: Stmt) -> list[list[Stmt]]:
    if isinstance(s, IfStmt):
        return [s.then, s.els]
    if isinstance(s, (ForStmt, WhileStmt)):
        return [s.body]
    if isinstance(s, SwitchStmt):
        blocks = [body for _, body in s.cases]
        if s.default is not None:
            blocks.append(s.default)
        return blocks
    return []


def walk_stmts(block: list[Stmt]):
    """Yield every statement in a block, depth first."""
    for s in block:
        yield s
        for b in child_blocks(s):
            yield from walk_stmts(b)
