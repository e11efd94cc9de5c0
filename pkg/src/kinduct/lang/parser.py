"""Recursive-descent parser producing an untyped AST.

The surface syntax is C-like; the unbounded main loop is written
`while (1)` (or `while (true)`) and bounded inner loops use the fixed
form `for (ty i = start; i < bound; i = i + 1)`.
"""

from __future__ import annotations

from kinduct.errors import LoopcSyntaxError
from kinduct.lang import ast
from kinduct.lang.lexer import Token, tokenize
from kinduct.lang.numeric import fx_from_decimal
from kinduct.lang.types import SURFACE_SCALARS, Array, Scalar

TYPE_NAMES = set(SURFACE_SCALARS)

NONDET_NAMES = {f"nondet_{t}": t for t in TYPE_NAMES if t != "bool"}
NONDET_NAMES["nondet_bool"] = "bool"


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # ------------------------------------------------------------- helpers

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def peek(self, offset: int = 1) -> Token:
        j = min(self.i + offset, len(self.toks) - 1)
        return self.toks[j]

    def advance(self) -> Token:
        t = self.cur
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg: str, expected: str | None = None) -> LoopcSyntaxError:
        t = self.cur
        return LoopcSyntaxError(f"{msg}, got {t.text!r}" if t.text else msg,
                                t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        if self.cur.text != text or self.cur.kind not in ("punct", "kw"):
            raise self.error("unexpected token", expected=repr(text))
        return self.advance()

    def expect_ident(self) -> Token:
        if self.cur.kind != "ident":
            raise self.error("unexpected token", expected="identifier")
        return self.advance()

    def at_type(self) -> bool:
        return self.cur.kind == "kw" and self.cur.text in TYPE_NAMES

    def pos(self) -> tuple[int, int]:
        return (self.cur.line, self.cur.col)

    # ------------------------------------------------------------ toplevel

    def parse_program(self) -> ast.Program:
        globals_: list[ast.GlobalDecl] = []
        funcs: list[ast.FuncDecl] = []
        main = None
        while self.cur.kind != "eof":
            pos = self.pos()
            const = False
            if self.cur.text == "const":
                const = True
                self.advance()
            if self.cur.text == "void":
                if const:
                    raise self.error("const cannot qualify a function")
                self.advance()
                fn = self.parse_func(ret=None, pos=pos)
                if fn.name == "main":
                    if main is not None:
                        raise self.error("duplicate main")
                    main = fn
                else:
                    funcs.append(fn)
                continue
            if not self.at_type():
                raise self.error("expected declaration", expected="type or 'void'")
            scalar = SURFACE_SCALARS[self.advance().text]
            # function or global: ident then '(' decides
            if self.cur.kind == "ident" and self.peek().text == "(":
                if const:
                    raise self.error("const cannot qualify a function")
                funcs.append(self.parse_func(ret=scalar, pos=pos))
                continue
            globals_.append(self.parse_global(scalar, const, pos))
        if main is None:
            raise self.error("program has no main function")
        if main.params or main.ret is not None:
            raise LoopcSyntaxError("main must be void and take no parameters",
                                   main.pos[0], main.pos[1])
        return ast.Program(globals=globals_, funcs=funcs, main=main)

    def parse_global(self, scalar: Scalar, const: bool, pos) -> ast.GlobalDecl:
        name = self.expect_ident().text
        ty: Scalar | Array = scalar
        if self.cur.text == "[":
            self.advance()
            length = self.parse_expr()
            self.expect("]")
            ty = Array(scalar, _const_len_placeholder(length))
        init = None
        if self.cur.text == "=":
            self.advance()
            init = self.parse_initializer()
        self.expect(";")
        return ast.GlobalDecl(name, ty, init, const, pos=pos)

    def parse_initializer(self):
        if self.cur.text == "{":
            self.advance()
            items = [self.parse_expr()]
            while self.cur.text == ",":
                self.advance()
                items.append(self.parse_expr())
            self.expect("}")
            return items
        return self.parse_expr()

    def parse_func(self, ret: Scalar | None, pos) -> ast.FuncDecl:
        name = self.expect_ident().text
        self.expect("(")
        params: list[tuple[str, Scalar]] = []
        if self.cur.text != ")":
            while True:
                if not self.at_type():
                    raise self.error("expected parameter type")
                pty = SURFACE_SCALARS[self.advance().text]
                pname = self.expect_ident().text
                params.append((pname, pty))
                if self.cur.text == ",":
                    self.advance()
                    continue
                break
        self.expect(")")
        body = self.parse_block()
        return ast.FuncDecl(name, ret, params, body, pos=pos)

    # ----------------------------------------------------------- statements

    def parse_block(self) -> list[ast.Stmt]:
        self.expect("{")
        stmts: list[ast.Stmt] = []
        while self.cur.text != "}":
            if self.cur.kind == "eof":
                raise self.error("unterminated block", expected="'}'")
            stmts.append(self.parse_stmt())
        self.expect("}")
        return stmts

    def parse_stmt(self) -> ast.Stmt:
        t = self.cur
        pos = self.pos()
        if t.kind == "kw":
            if t.text in TYPE_NAMES:
                return self.parse_decl_stmt()
            if t.text == "const":
                raise self.error("const declarations are global only")
            if t.text == "if":
                return self.parse_if()
            if t.text == "for":
                return self.parse_for()
            if t.text == "while":
                return self.parse_while()
            if t.text == "switch":
                return self.parse_switch()
            if t.text == "assert":
                self.advance()
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                self.expect(";")
                return ast.AssertStmt(cond, pos=pos)
            if t.text == "assume":
                self.advance()
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                self.expect(";")
                return ast.AssumeStmt(cond, pos=pos)
            if t.text == "error":
                self.advance()
                self.expect("(")
                self.expect(")")
                self.expect(";")
                return ast.ErrorStmt(pos=pos)
            if t.text == "return":
                self.advance()
                value = None
                if self.cur.text != ";":
                    value = self.parse_expr()
                self.expect(";")
                return ast.ReturnStmt(value, pos=pos)
            raise self.error("unexpected keyword in statement position")
        if t.kind == "ident":
            if self.peek().text == "(":
                call = self.parse_postfix()
                if not isinstance(call, ast.Call):
                    raise self.error("expected call statement")
                self.expect(";")
                return ast.CallStmt(call, pos=pos)
            return self.parse_assign()
        raise self.error("expected statement")

    def parse_decl_stmt(self) -> ast.DeclStmt:
        pos = self.pos()
        scalar = SURFACE_SCALARS[self.advance().text]
        name = self.expect_ident().text
        ty: Scalar | Array = scalar
        if self.cur.text == "[":
            raise self.error("arrays must be declared at global scope")
        init = None
        if self.cur.text == "=":
            self.advance()
            init = self.parse_initializer()
        self.expect(";")
        return ast.DeclStmt(name, ty, init, pos=pos)

    def parse_assign(self) -> ast.AssignStmt:
        pos = self.pos()
        name = self.expect_ident().text
        target: ast.VarRef | ast.ArrayRef
        if self.cur.text == "[":
            self.advance()
            idx = self.parse_expr()
            self.expect("]")
            target = ast.ArrayRef(name, idx, pos=pos)
        else:
            target = ast.VarRef(name, pos=pos)
        self.expect("=")
        value = self.parse_expr()
        self.expect(";")
        return ast.AssignStmt(target, value, pos=pos)

    def parse_if(self) -> ast.IfStmt:
        pos = self.pos()
        self.expect("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_block()
        els: list[ast.Stmt] = []
        if self.cur.text == "else":
            self.advance()
            if self.cur.text == "if":
                els = [self.parse_if()]
            else:
                els = self.parse_block()
        return ast.IfStmt(cond, then, els, pos=pos)

    def parse_for(self) -> ast.ForStmt:
        pos = self.pos()
        self.expect("for")
        self.expect("(")
        decl_ty = None
        if self.at_type():
            decl_ty = SURFACE_SCALARS[self.advance().text]
        var = self.expect_ident().text
        self.expect("=")
        start = self.parse_expr()
        self.expect(";")
        cond_var = self.expect_ident().text
        if cond_var != var:
            raise self.error(f"for-loop condition must test {var!r}")
        self.expect("<")
        bound = self.parse_expr()
        self.expect(";")
        upd_var = self.expect_ident().text
        if upd_var != var:
            raise self.error(f"for-loop update must assign {var!r}")
        self.expect("=")
        upd_src = self.expect_ident().text
        if upd_src != var:
            raise self.error(f"for-loop update must be {var} = {var} + 1")
        self.expect("+")
        one = self.advance()
        if one.kind != "int" or one.text != "1":
            raise self.error(f"for-loop update must be {var} = {var} + 1")
        self.expect(")")
        body = self.parse_block()
        return ast.ForStmt(var, decl_ty, start, bound, body, pos=pos)

    def parse_while(self) -> ast.WhileStmt:
        pos = self.pos()
        self.expect("while")
        self.expect("(")
        cond = self.cur
        if (cond.kind == "int" and cond.text == "1") or cond.text == "true":
            self.advance()
        else:
            raise self.error("while condition must be the constant 1 "
                             "(bounded loops use 'for')")
        self.expect(")")
        body = self.parse_block()
        return ast.WhileStmt(body, pos=pos)

    def parse_switch(self) -> ast.SwitchStmt:
        pos = self.pos()
        self.expect("switch")
        self.expect("(")
        scrutinee = self.parse_expr()
        self.expect(")")
        self.expect("{")
        cases: list[tuple[list[ast.Expr], list[ast.Stmt]]] = []
        default: list[ast.Stmt] | None = None
        while self.cur.text != "}":
            if self.cur.text == "case":
                labels = []
                while self.cur.text == "case":
                    self.advance()
                    labels.append(self.parse_expr())
                    self.expect(":")
                body = self.parse_case_body()
                cases.append((labels, body))
            elif self.cur.text == "default":
                if default is not None:
                    raise self.error("duplicate default clause")
                self.advance()
                self.expect(":")
                default = self.parse_case_body()
            else:
                raise self.error("expected 'case' or 'default'")
        self.expect("}")
        return ast.SwitchStmt(scrutinee, cases, default, pos=pos)

    def parse_case_body(self) -> list[ast.Stmt]:
        # no fallthrough: each clause body runs alone; trailing break allowed
        stmts: list[ast.Stmt] = []
        while self.cur.text not in ("case", "default", "}", "break"):
            if self.cur.kind == "eof":
                raise self.error("unterminated switch")
            stmts.append(self.parse_stmt())
        if self.cur.text == "break":
            self.advance()
            self.expect(";")
        return stmts

    # ---------------------------------------------------------- expressions

    def parse_expr(self) -> ast.Expr:
        return self.parse_ternary()

    def parse_ternary(self) -> ast.Expr:
        cond = self.parse_binary(0)
        if self.cur.text == "?":
            pos = self.pos()
            self.advance()
            then = self.parse_expr()
            self.expect(":")
            other = self.parse_ternary()
            return ast.Ternary(cond, then, other, pos=pos)
        return cond

    LEVELS = [
        ["||"],
        ["&&"],
        ["|"],
        ["^"],
        ["&"],
        ["==", "!="],
        ["<", "<=", ">", ">="],
        ["<<", ">>"],
        ["+", "-"],
        ["*", "/", "%"],
    ]

    def parse_binary(self, level: int) -> ast.Expr:
        if level >= len(self.LEVELS):
            return self.parse_unary()
        left = self.parse_binary(level + 1)
        while self.cur.kind == "punct" and self.cur.text in self.LEVELS[level]:
            pos = self.pos()
            op = self.advance().text
            right = self.parse_binary(level + 1)
            left = ast.Binary(op, left, right, pos=pos)
        return left

    def parse_unary(self) -> ast.Expr:
        t = self.cur
        if t.kind == "punct" and t.text in ("!", "~", "-"):
            pos = self.pos()
            self.advance()
            operand = self.parse_unary()
            return ast.Unary(t.text, operand, pos=pos)
        if (t.text == "(" and self.peek().kind == "kw"
                and self.peek().text in TYPE_NAMES and self.peek(2).text == ")"):
            pos = self.pos()
            self.advance()
            target = SURFACE_SCALARS[self.advance().text]
            self.expect(")")
            operand = self.parse_unary()
            return ast.Cast(target, operand, pos=pos)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        e = self.parse_primary()
        while True:
            if self.cur.text == "(" and isinstance(e, ast.VarRef):
                pos = self.pos()
                self.advance()
                args: list[ast.Expr] = []
                if self.cur.text != ")":
                    args.append(self.parse_expr())
                    while self.cur.text == ",":
                        self.advance()
                        args.append(self.parse_expr())
                self.expect(")")
                if e.name in NONDET_NAMES:
                    if args:
                        raise LoopcSyntaxError("nondet intrinsics take no arguments",
                                               pos[0], pos[1])
                    e = ast.NondetExpr(NONDET_NAMES[e.name], pos=e.pos)
                else:
                    e = ast.Call(e.name, args, pos=e.pos)
            elif self.cur.text == "[" and isinstance(e, ast.VarRef):
                self.advance()
                idx = self.parse_expr()
                self.expect("]")
                e = ast.ArrayRef(e.name, idx, pos=e.pos)
            else:
                return e

    def parse_primary(self) -> ast.Expr:
        t = self.cur
        pos = self.pos()
        if t.kind == "int":
            self.advance()
            if t.text.lower().startswith("0x"):
                return ast.IntLit(int(t.text, 16), pos=pos, hex=True)
            return ast.IntLit(int(t.text), pos=pos)
        if t.kind == "fx":
            self.advance()
            return ast.FxLit(fx_from_decimal(t.text), pos=pos)
        if t.text in ("true", "false"):
            self.advance()
            return ast.BoolLit(t.text == "true", pos=pos)
        if t.kind == "ident":
            self.advance()
            return ast.VarRef(t.text, pos=pos)
        if t.text == "(":
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        raise self.error("expected expression")


def _const_len_placeholder(e: ast.Expr) -> int:
    # array lengths must be integer literals or const names; const names are
    # resolved by the type checker, so only literals are folded here
    if isinstance(e, ast.IntLit):
        return e.value
    raise LoopcSyntaxError("array length must be an integer literal",
                           *(e.pos or (0, 0)))


def parse(source: str) -> ast.Program:
    """Parse LoopC source into an untyped Program."""
    return Parser(tokenize(source)).parse_program()
