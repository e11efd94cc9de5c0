"""Propositional encodings of transition systems.

The bounded-model-checking formula for bound k is

    init(s_0)  and  step(s_i, x_i, s_{i+1}) for i < k
               and  some frame i <= k is alive but violates the property

where "alive" threads the assume statements: a frame counts only if every
assume on the path into it held. One fresh selector variable per frame
points at the violating frame so it can be read straight off a model.

The induction-step formula for k leaves s_0 unconstrained (or, in the
experimental inputs-only mode, constrains it to an initial state except
for input-driven cells), asserts the property on frames 0..k-1 plus all
assumes, and negates the property at frame k. UNSAT means the property is
k-inductive.

Encoding is Tseitin over the circuits in bitblast, with structural
sharing. Formulas are immutable once built. DIMACS export/import rounds
trip for external solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from kinduct import bitblast as bb
from kinduct.bitblast import FALSE, TRUE, Circuit, Word
from kinduct.errors import EncodeError
from kinduct.lang import ast
from kinduct.lang import numeric as nm
from kinduct.lang.ts import TAssign, TAssume, TIf, TransitionSystem
from kinduct.lang.types import BOOL, Scalar

DEFAULT_VAR_LIMIT = 2_000_000

_CMP_SIGNED = {"<": bb.slt_word, "<=": bb.sle_word}
_CMP_UNSIGNED = {"<": bb.ult_word, "<=": bb.ule_word}


@dataclass
class CnfFormula:
    num_vars: int
    clauses: list
    # (cell name, frame) -> Word, frames 0..k
    frame_map: dict = field(default_factory=dict)
    # (input name, transition index) -> Word, transitions 0..k-1;
    # transition i consumes the inputs that take frame i to frame i+1
    input_map: dict = field(default_factory=dict)
    init_input_map: dict = field(default_factory=dict)
    selectors: list = field(default_factory=list)  # BMC: one per frame
    prop_lits: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)  # alive lit per frame
    kind: str = "cnf"
    k: int = 0
    ts: Optional[TransitionSystem] = field(default=None, repr=False)


class _Encoder:
    """Encodes TS statement lists into circuits, one frame at a time."""

    def __init__(self, ts: TransitionSystem, c: Circuit):
        self.ts = ts
        self.c = c
        self.cell_ty = dict(ts.cells)
        self.env: dict[str, Word] = {}
        self.inputs: dict[str, Word] = {}

    def fresh_state(self) -> dict[str, Word]:
        return {name: self.c.new_word(ty.width) for name, ty in self.ts.cells}

    def _fresh_inputs(self, decls) -> dict[str, Word]:
        return {name: self.c.new_word(ty.width) for name, ty in decls}

    def encode_init(self):
        """Returns (state env, init input words)."""
        self.inputs = self._fresh_inputs(self.ts.init_inputs)
        self.env = {}
        alive = self._block(self.ts.init)
        assert alive == TRUE, "assume statements cannot occur in init"
        state = {name: self.env[name] for name, _ in self.ts.cells}
        return state, self.inputs

    def encode_step(self, prev: dict[str, Word]):
        """Returns (next state env, step input words, assume literal)."""
        self.inputs = self._fresh_inputs(self.ts.step_inputs)
        self.env = dict(prev)
        alive = self._block(self.ts.step)
        state = {name: self.env[name] for name, _ in self.ts.cells}
        return state, self.inputs, alive

    def encode_prop(self, state: dict[str, Word]) -> int:
        self.inputs = {}
        self.env = dict(state)
        word = self.expr(self.ts.prop)
        assert len(word) == 1
        return word[0]

    # -------------------------------------------------------- statements

    def _block(self, stmts) -> int:
        alive = TRUE
        for st in stmts:
            if isinstance(st, TAssign):
                self.env[st.name] = self.expr(st.value)
            elif isinstance(st, TAssume):
                alive = self.c.AND(alive, self.expr(st.cond)[0])
            elif isinstance(st, TIf):
                cond = self.expr(st.cond)[0]
                saved = self.env
                self.env = dict(saved)
                a_then = self._block(st.then)
                env_then = self.env
                self.env = dict(saved)
                a_else = self._block(st.els)
                env_else = self.env
                self.env = saved
                for name in set(env_then) | set(env_else):
                    if name not in saved:
                        continue  # temp local to one branch
                    t = env_then.get(name, saved[name])
                    e = env_else.get(name, saved[name])
                    if t != e:
                        self.env[name] = bb.mux_word(self.c, cond, t, e)
                alive = self.c.AND(alive, self.c.MUX(cond, a_then, a_else))
            else:
                raise EncodeError(f"unknown statement {st!r}")
        return alive

    # ------------------------------------------------------- expressions

    def expr(self, e: ast.Expr) -> Word:
        if isinstance(e, ast.IntLit):
            return bb.const_word(nm.to_raw(e.value, e.ty), e.ty.width)
        if isinstance(e, ast.FxLit):
            return bb.const_word(nm.to_raw(e.raw, e.ty), e.ty.width)
        if isinstance(e, ast.BoolLit):
            return (TRUE,) if e.value else (FALSE,)
        if isinstance(e, ast.VarRef):
            return self.env[e.name]
        if isinstance(e, ast.InputRef):
            return self.inputs[e.name]
        if isinstance(e, ast.Unary):
            return self._unary(e)
        if isinstance(e, ast.Binary):
            return self._binary(e)
        if isinstance(e, ast.Ternary):
            cond = self.expr(e.cond)[0]
            return bb.mux_word(self.c, cond, self.expr(e.then),
                               self.expr(e.other))
        if isinstance(e, ast.Cast):
            return self._cast(self.expr(e.operand), e.operand.ty, e.ty)
        raise EncodeError(f"cannot encode {type(e).__name__}")

    def _unary(self, e: ast.Unary) -> Word:
        w = self.expr(e.operand)
        if e.op == "!":
            return (-w[0],)
        if e.op == "-":
            return bb.neg_word(self.c, w)
        if e.op == "~":
            return bb.not_word(w)
        raise EncodeError(f"unknown unary {e.op}")

    def _binary(self, e: ast.Binary) -> Word:
        c, op = self.c, e.op
        if op == "&&":
            return (c.AND(self.expr(e.left)[0], self.expr(e.right)[0]),)
        if op == "||":
            return (c.OR(self.expr(e.left)[0], self.expr(e.right)[0]),)
        a = self.expr(e.left)
        b = self.expr(e.right)
        ty: Scalar = e.left.ty
        if op == "==":
            return (bb.eq_word(c, a, b),)
        if op == "!=":
            return (-bb.eq_word(c, a, b),)
        if op in ("<", "<=", ">", ">="):
            if op == ">":
                a, b, op = b, a, "<"
            elif op == ">=":
                a, b, op = b, a, "<="
            table = _CMP_SIGNED if (ty.signed or ty.is_fixed) else _CMP_UNSIGNED
            return (table[op](c, a, b),)
        if op == "<<":
            return bb.shl_word(c, a, b)
        if op == ">>":
            return bb.shr_word(c, a, b, ty.signed)
        if ty.is_fixed:
            if op == "*":
                return bb.fx_mul(c, a, b)
            if op == "/":
                return bb.fx_div(c, a, b)
        if op == "+":
            return bb.add_word(c, a, b)[0]
        if op == "-":
            return bb.sub_word(c, a, b)[0]
        if op == "*":
            return bb.mul_word(c, a, b)
        if op == "/":
            div = bb.sdiv_srem if ty.signed else bb.udiv_urem
            return div(c, a, b)[0]
        if op == "%":
            div = bb.sdiv_srem if ty.signed else bb.udiv_urem
            return div(c, a, b)[1]
        if op == "&":
            return bb.and_word(c, a, b)
        if op == "|":
            return bb.or_word(c, a, b)
        if op == "^":
            return bb.xor_word(c, a, b)
        raise EncodeError(f"unknown operator {op}")

    def _cast(self, w: Word, src: Scalar, dst: Scalar) -> Word:
        if src == dst:
            return w
        if src.is_fixed and not dst.is_fixed:
            shifted = w[bb.FX_FRAC:] + (w[-1],) * bb.FX_FRAC  # arithmetic >>16
            return bb.resize(shifted, dst.width, signed=True)
        if dst.is_fixed and not src.is_fixed:
            return bb.const_word(0, bb.FX_FRAC) + bb.resize(w, 16, src.signed)
        return bb.resize(w, dst.width, src.signed)


def build_bmc_formula(ts: TransitionSystem, k: int, *,
                      var_limit: int = DEFAULT_VAR_LIMIT) -> CnfFormula:
    """Satisfiable iff some execution of <= k steps from an initial state
    violates the property at some frame."""
    if k < 0:
        raise ValueError("bound must be non-negative")
    c = Circuit(var_limit)
    enc = _Encoder(ts, c)
    f = CnfFormula(0, [], kind="bmc", k=k, ts=ts)

    state, init_inputs = enc.encode_init()
    f.init_input_map = dict(init_inputs)
    _record_frame(f, state, 0)
    alive = TRUE
    f.assumptions.append(alive)
    f.prop_lits.append(enc.encode_prop(state))
    for t in range(k):
        state, inw, a = enc.encode_step(state)
        _record_frame(f, state, t + 1)
        for name, word in inw.items():
            f.input_map[(name, t)] = word
        alive = c.AND(alive, a)
        f.assumptions.append(alive)
        f.prop_lits.append(enc.encode_prop(state))
    for i in range(k + 1):
        s = c.new_var()
        f.selectors.append(s)
        c.add_clause((-s, f.assumptions[i]))
        c.add_clause((-s, -f.prop_lits[i]))
    c.add_clause(tuple(f.selectors))

    f.num_vars, f.clauses = c.num_vars, c.clauses
    return f


def build_step_formula(ts: TransitionSystem, k: int, *,
                       havoc: str = "full",
                       var_limit: int = DEFAULT_VAR_LIMIT) -> CnfFormula:
    """UNSAT iff the property is k-inductive: no run of k steps that starts
    at an arbitrary (havocked) property-satisfying state, keeps satisfying
    the property and all assumes for k-1 more steps, can violate it at
    step k."""
    if k < 1:
        raise ValueError("induction step needs k >= 1")
    if havoc not in ("full", "inputs_only"):
        raise ValueError(f"unknown havoc mode {havoc!r}")
    c = Circuit(var_limit)
    enc = _Encoder(ts, c)
    f = CnfFormula(0, [], kind="step", k=k, ts=ts)

    if havoc == "full":
        state = enc.fresh_state()
    else:
        state, init_inputs = enc.encode_init()
        f.init_input_map = dict(init_inputs)
        for name in ts.input_driven:
            ty = enc.cell_ty[name]
            state[name] = c.new_word(ty.width)
    _record_frame(f, state, 0)
    alive = TRUE
    f.prop_lits.append(enc.encode_prop(state))
    for t in range(k):
        state, inw, a = enc.encode_step(state)
        _record_frame(f, state, t + 1)
        for name, word in inw.items():
            f.input_map[(name, t)] = word
        alive = c.AND(alive, a)
        f.prop_lits.append(enc.encode_prop(state))
    f.assumptions = [alive]
    c.add_clause((alive,))
    for i in range(k):
        c.add_clause((f.prop_lits[i],))
    c.add_clause((-f.prop_lits[k],))

    f.num_vars, f.clauses = c.num_vars, c.clauses
    return f


def _record_frame(f: CnfFormula, state: dict[str, Word], i: int):
    for name, word in state.items():
        f.frame_map[(name, i)] = word


# ----------------------------------------------------------------- decode


def _to_canonical(raw: int, ty: Scalar):
    if ty is BOOL:
        return bool(raw)
    return nm.wrap(raw, ty)


def decode_state(f: CnfFormula, model, frame: int) -> dict:
    ty = dict(f.ts.cells)
    out = {}
    for name, _ in f.ts.cells:
        raw = bb.word_value(model, f.frame_map[(name, frame)])
        out[name] = _to_canonical(raw, ty[name])
    return out


def decode_inputs(f: CnfFormula, model) -> list[dict]:
    """Per-transition input valuations, one dict per step taken."""
    out = []
    for t in range(f.k):
        vals = {}
        for name, ty in f.ts.step_inputs:
            raw = bb.word_value(model, f.input_map[(name, t)])
            vals[name] = _to_canonical(raw, ty)
        out.append(vals)
    return out


def decode_init_inputs(f: CnfFormula, model) -> dict:
    out = {}
    for name, ty in f.ts.init_inputs:
        raw = bb.word_value(model, f.init_input_map[name])
        out[name] = _to_canonical(raw, ty)
    return out


def violating_frames(f: CnfFormula, model) -> list[int]:
    """Frames whose selector is set in a BMC model."""
    return [i for i, s in enumerate(f.selectors) if bb.lit_value(model, s)]


# ----------------------------------------------------------------- DIMACS


def export_dimacs(f: CnfFormula) -> str:
    lines = [f"p cnf {f.num_vars} {len(f.clauses)}"]
    for clause in f.clauses:
        lines.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    num_vars = 0
    declared = None
    clauses: list[tuple[int, ...]] = []
    cur: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad DIMACS header: {line!r}")
            num_vars, declared = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(cur))
                cur = []
            else:
                cur.append(lit)
                num_vars = max(num_vars, abs(lit))
    if cur:
        clauses.append(tuple(cur))
    if declared is not None and declared != len(clauses):
        raise ValueError(f"DIMACS declares {declared} clauses, "
                         f"found {len(clauses)}")
    return CnfFormula(num_vars, clauses, kind="dimacs")
