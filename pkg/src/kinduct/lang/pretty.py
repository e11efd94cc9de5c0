"""Canonical pretty printer.

Output is the normal form used for digests, golden files, and SLOC
counting: 4-space indents, one statement per line, spaces around binary
operators, explicit break in every switch clause. Parsing the output of
pretty_print yields a structurally identical AST (positions aside).
"""

from __future__ import annotations

from kinduct.lang import ast
from kinduct.lang.numeric import fx_to_decimal
from kinduct.lang.types import Array

_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
}
_UNARY_PREC = 11
_ATOM_PREC = 13


def expr_prec(e: ast.Expr) -> int:
    if isinstance(e, ast.Binary):
        return _PREC[e.op]
    if isinstance(e, (ast.Unary, ast.Cast)):
        return _UNARY_PREC
    if isinstance(e, ast.Ternary):
        return 0
    return _ATOM_PREC


def fmt_expr(e: ast.Expr) -> str:
    if isinstance(e, ast.IntLit):
        if e.hex and e.value >= 0:
            return f"0x{e.value:X}"
        return str(e.value)
    if isinstance(e, ast.FxLit):
        return fx_to_decimal(e.raw)
    if isinstance(e, ast.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, (ast.VarRef, ast.InputRef)):
        return e.name
    if isinstance(e, ast.ArrayRef):
        return f"{e.name}[{fmt_expr(e.index)}]"
    if isinstance(e, ast.NondetExpr):
        return f"nondet_{e.type_name}()"
    if isinstance(e, ast.Call):
        return f"{e.name}({', '.join(fmt_expr(a) for a in e.args)})"
    if isinstance(e, ast.Unary):
        return e.op + _wrap(e.operand, _UNARY_PREC)
    if isinstance(e, ast.Cast):
        if e.implicit:
            return fmt_expr(e.operand)
        return f"({e.target.name}) " + _wrap(e.operand, _UNARY_PREC)
    if isinstance(e, ast.Binary):
        p = _PREC[e.op]
        left = _wrap(e.left, p)
        right = _wrap(e.right, p + 1)
        return f"{left} {e.op} {right}"
    if isinstance(e, ast.Ternary):
        cond = _wrap(e.cond, 1)
        return f"{cond} ? {fmt_expr(e.then)} : {fmt_expr(e.other)}"
    raise TypeError(f"unprintable expression {e!r}")


def _wrap(e: ast.Expr, min_prec: int) -> str:
    text = fmt_expr(e)
    return f"({text})" if expr_prec(e) < min_prec else text


def _fmt_init(init) -> str:
    if isinstance(init, list):
        return "{" + ", ".join(fmt_expr(x) for x in init) + "}"
    return fmt_expr(init)


class _Printer:
    def __init__(self):
        self.lines: list[str] = []
        self.depth = 0

    def emit(self, text: str):
        self.lines.append("    " * self.depth + text)

    def block(self, stmts: list[ast.Stmt]):
        self.depth += 1
        for s in stmts:
            self.stmt(s)
        self.depth -= 1

    def stmt(self, s: ast.Stmt):
        if isinstance(s, ast.DeclStmt):
            init = f" = {_fmt_init(s.init)}" if s.init is not None else ""
            self.emit(f"{s.ty} {s.name}{init};")
        elif isinstance(s, ast.AssignStmt):
            self.emit(f"{fmt_expr(s.target)} = {fmt_expr(s.value)};")
        elif isinstance(s, ast.IfStmt):
            self._if_chain(s)
        elif isinstance(s, ast.ForStmt):
            ty = f"{s.decl_ty} " if s.decl_ty else ""
            head = (f"for ({ty}{s.var} = {fmt_expr(s.start)}; "
                    f"{s.var} < {fmt_expr(s.bound)}; {s.var} = {s.var} + 1) {{")
            self.emit(head)
            self.block(s.body)
            self.emit("}")
        elif isinstance(s, ast.WhileStmt):
            self.emit("while (1) {")
            self.block(s.body)
            self.emit("}")
        elif isinstance(s, ast.SwitchStmt):
            self.emit(f"switch ({fmt_expr(s.scrutinee)}) {{")
            self.depth += 1
            for labels, body in s.cases:
                for lab in labels:
                    self.emit(f"case {fmt_expr(lab)}:")
                self.block(body)
                self.depth += 1
                self.emit("break;")
                self.depth -= 1
            if s.default is not None:
                self.emit("default:")
                self.block(s.default)
                self.depth += 1
                self.emit("break;")
                self.depth -= 1
            self.depth -= 1
            self.emit("}")
        elif isinstance(s, ast.AssertStmt):
            self.emit(f"assert({fmt_expr(s.cond)});")
        elif isinstance(s, ast.AssumeStmt):
            self.emit(f"assume({fmt_expr(s.cond)});")
        elif isinstance(s, ast.ErrorStmt):
            self.emit("error();")
        elif isinstance(s, ast.CallStmt):
            self.emit(f"{fmt_expr(s.call)};")
        elif isinstance(s, ast.ReturnStmt):
            self.emit("return;" if s.value is None else f"return {fmt_expr(s.value)};")
        else:
            raise TypeError(f"unprintable statement {s!r}")

    def _if_chain(self, s: ast.IfStmt):
        self.emit(f"if ({fmt_expr(s.cond)}) {{")
        self.block(s.then)
        node = s
        while len(node.els) == 1 and isinstance(node.els[0], ast.IfStmt):
            node = node.els[0]
            self.emit(f"}} else if ({fmt_expr(node.cond)}) {{")
            self.block(node.then)
        if node.els:
            self.emit("} else {")
            self.block(node.els)
        self.emit("}")


def pretty_print(program: ast.Program) -> str:
    p = _Printer()
    for g in program.globals:
        const = "const " if g.const else ""
        if isinstance(g.ty, Array):
            decl = f"{const}{g.ty.elem} {g.name}[{g.ty.length}]"
        else:
            decl = f"{const}{g.ty} {g.name}"
        init = f" = {_fmt_init(g.init)}" if g.init is not None else ""
        p.emit(f"{decl}{init};")
    for fn in list(program.funcs) + [program.main]:
        if fn is None:
            continue
        p.emit("")
        ret = fn.ret.name if fn.ret else "void"
        params = ", ".join(f"{t} {n}" for n, t in fn.params)
        p.emit(f"{ret} {fn.name}({params}) {{")
        p.block(fn.body)
        p.emit("}")
    return "\n".join(p.lines).lstrip("\n") + "\n"


def sloc(program: ast.Program) -> int:
    """Non-blank lines of the canonical rendering."""
    return sum(1 for line in pretty_print(program).splitlines() if line.strip())
