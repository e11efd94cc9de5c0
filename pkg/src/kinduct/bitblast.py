"""Boolean circuits over CNF variables.

A Circuit hands out variables and Tseitin-encodes gates into clauses as
they are built, with structural hashing so repeated subterms share one
variable. Variable 1 is pinned to constant true (unit clause), so the
literals 1 and -1 serve as the constants.

On top of the gate layer sit word operators: machine words are tuples of
literals, least significant bit first. Signedness is two's complement and
every operator wraps modulo 2^width, mirroring the reference numeric
semantics exactly (truncating division with divide-by-zero yielding 0,
shift amounts masked to width-1, 16.16 fixed-point via widened products
and quotients).
"""

from __future__ import annotations

from kinduct.errors import EncodeError

TRUE = 1
FALSE = -1

Word = tuple  # tuple of literals, LSB first


class Circuit:
    def __init__(self, var_limit: int | None = None):
        self.num_vars = 1
        self.clauses: list[tuple[int, ...]] = [(TRUE,)]
        self.gates: list[tuple] = []
        self.var_limit = var_limit
        self._cache: dict[tuple, int] = {}

    def new_var(self) -> int:
        self.num_vars += 1
        if self.var_limit is not None and self.num_vars > self.var_limit:
            raise EncodeError(
                f"encoding exceeds the {self.var_limit}-variable budget")
        return self.num_vars

    def new_word(self, width: int) -> Word:
        return tuple(self.new_var() for _ in range(width))

    def add_clause(self, lits):
        self.clauses.append(tuple(lits))

    # ------------------------------------------------------------- gates

    def AND(self, a: int, b: int) -> int:
        if a == TRUE:
            return b
        if b == TRUE:
            return a
        if a == FALSE or b == FALSE:
            return FALSE
        if a == b:
            return a
        if a == -b:
            return FALSE
        if a > b:
            a, b = b, a
        key = ("A", a, b)
        g = self._cache.get(key)
        if g is None:
            g = self.new_var()
            self._cache[key] = g
            self.add_clause((-g, a))
            self.add_clause((-g, b))
            self.add_clause((g, -a, -b))
            self.gates.append(("A", g, a, b))
        return g

    def OR(self, a: int, b: int) -> int:
        return -self.AND(-a, -b)

    def XOR(self, a: int, b: int) -> int:
        neg = (a < 0) != (b < 0)
        a, b = abs(a), abs(b)
        if a == b:
            return FALSE if not neg else TRUE
        if a > b:
            a, b = b, a
        if a == 1:  # XOR with constant true is negation
            out = -b
        else:
            key = ("X", a, b)
            g = self._cache.get(key)
            if g is None:
                g = self.new_var()
                self._cache[key] = g
                self.add_clause((-g, a, b))
                self.add_clause((-g, -a, -b))
                self.add_clause((g, -a, b))
                self.add_clause((g, a, -b))
                self.gates.append(("X", g, a, b))
            out = g
        return -out if neg else out

    def MUX(self, c: int, t: int, e: int) -> int:
        """c ? t : e."""
        if c == TRUE:
            return t
        if c == FALSE:
            return e
        if t == e:
            return t
        if t == -e:
            return -self.XOR(c, e)
        if t == TRUE:
            return self.OR(c, e)
        if t == FALSE:
            return self.AND(-c, e)
        if e == TRUE:
            return self.OR(-c, t)
        if e == FALSE:
            return self.AND(c, t)
        if c < 0:
            c, t, e = -c, e, t
        key = ("M", c, t, e)
        g = self._cache.get(key)
        if g is None:
            g = self.new_var()
            self._cache[key] = g
            self.add_clause((-c, -t, g))
            self.add_clause((-c, t, -g))
            self.add_clause((c, -e, g))
            self.add_clause((c, e, -g))
            self.add_clause((-t, -e, g))
            self.add_clause((t, e, -g))
            self.gates.append(("M", g, c, t, e))
        return g

    def and_all(self, lits) -> int:
        out = TRUE
        for lit in lits:
            out = self.AND(out, lit)
        return out

    def or_all(self, lits) -> int:
        return -self.and_all(-lit for lit in lits)

    # -------------------------------------------------------- evaluation

    def eval(self, assignment: dict[int, bool]) -> dict[int, bool]:
        """Evaluate all gates under an assignment of the input variables.
        Returns a complete variable valuation (constant var 1 included)."""
        val = {1: True}
        val.update(assignment)

        def lit(x: int) -> bool:
            return val[x] if x > 0 else not val[-x]

        for gate in self.gates:
            if gate[0] == "A":
                _, g, a, b = gate
                val[g] = lit(a) and lit(b)
            elif gate[0] == "X":
                _, g, a, b = gate
                val[g] = lit(a) != lit(b)
            else:
                _, g, c, t, e = gate
                val[g] = lit(t) if lit(c) else lit(e)
        return val


def lit_value(model, lit: int) -> bool:
    """Value of a literal under a model indexed by variable."""
    v = model[abs(lit)]
    return v if lit > 0 else not v


def word_value(model, word: Word) -> int:
    """Unsigned integer value of a word under a model."""
    out = 0
    for i, lit in enumerate(word):
        if lit_value(model, lit):
            out |= 1 << i
    return out


# ----------------------------------------------------------------- words


def const_word(value: int, width: int) -> Word:
    return tuple(TRUE if (value >> i) & 1 else FALSE for i in range(width))


def not_word(a: Word) -> Word:
    return tuple(-x for x in a)


def and_word(c: Circuit, a: Word, b: Word) -> Word:
    return tuple(c.AND(x, y) for x, y in zip(a, b))


def or_word(c: Circuit, a: Word, b: Word) -> Word:
    return tuple(c.OR(x, y) for x, y in zip(a, b))


def xor_word(c: Circuit, a: Word, b: Word) -> Word:
    return tuple(c.XOR(x, y) for x, y in zip(a, b))


def mux_word(c: Circuit, cond: int, t: Word, e: Word) -> Word:
    return tuple(c.MUX(cond, x, y) for x, y in zip(t, e))


def resize(a: Word, width: int, signed: bool) -> Word:
    """Truncate or extend to width; extension replicates the sign bit for
    signed sources and zero-fills otherwise (two's complement wrap)."""
    if len(a) >= width:
        return a[:width]
    fill = a[-1] if signed else FALSE
    return a + (fill,) * (width - len(a))


def add_word(c: Circuit, a: Word, b: Word, cin: int = FALSE):
    """Ripple-carry sum; returns (sum bits, carry out)."""
    out = []
    carry = cin
    for x, y in zip(a, b):
        xy = c.XOR(x, y)
        out.append(c.XOR(xy, carry))
        carry = c.OR(c.AND(x, y), c.AND(xy, carry))
    return tuple(out), carry


def sub_word(c: Circuit, a: Word, b: Word):
    """a - b; returns (difference, no-borrow). no-borrow true iff a >= b
    as unsigned values."""
    return add_word(c, a, not_word(b), cin=TRUE)


def neg_word(c: Circuit, a: Word) -> Word:
    bits, _ = add_word(c, not_word(a), const_word(0, len(a)), cin=TRUE)
    return bits


def cond_neg(c: Circuit, a: Word, cond: int) -> Word:
    return mux_word(c, cond, neg_word(c, a), a)


def eq_word(c: Circuit, a: Word, b: Word) -> int:
    return c.and_all(-c.XOR(x, y) for x, y in zip(a, b))


def is_zero(c: Circuit, a: Word) -> int:
    return c.and_all(-x for x in a)


def ult_word(c: Circuit, a: Word, b: Word) -> int:
    _, no_borrow = sub_word(c, a, b)
    return -no_borrow


def ule_word(c: Circuit, a: Word, b: Word) -> int:
    return -ult_word(c, b, a)


def _flip_sign(a: Word) -> Word:
    return a[:-1] + (-a[-1],)


def slt_word(c: Circuit, a: Word, b: Word) -> int:
    return ult_word(c, _flip_sign(a), _flip_sign(b))


def sle_word(c: Circuit, a: Word, b: Word) -> int:
    return -slt_word(c, b, a)


def mul_word(c: Circuit, a: Word, b: Word) -> Word:
    """Shift-and-add product truncated to len(a) bits (wrap semantics).
    Operands must have equal width."""
    w = len(a)
    acc = const_word(0, w)
    for i, bit in enumerate(b):
        if bit == FALSE:
            continue
        gated = tuple(c.AND(bit, x) for x in a[:w - i])
        hi, _ = add_word(c, acc[i:], gated)
        acc = acc[:i] + hi
    return acc


def udiv_urem(c: Circuit, a: Word, b: Word):
    """Restoring division on unsigned words of equal width. Divisor zero
    yields quotient and remainder 0 (total semantics)."""
    w = len(a)
    bx = b + (FALSE,)
    rem = const_word(0, w + 1)
    q = [FALSE] * w
    for i in range(w - 1, -1, -1):
        trial = (a[i],) + rem[:w]
        diff, no_borrow = sub_word(c, trial, bx)
        q[i] = no_borrow
        rem = mux_word(c, no_borrow, diff, trial)
    zero = is_zero(c, b)
    zeros = const_word(0, w)
    quot = mux_word(c, zero, zeros, tuple(q))
    rem = mux_word(c, zero, zeros, rem[:w])
    return quot, rem


def sdiv_srem(c: Circuit, a: Word, b: Word):
    """C-style truncating signed division/remainder on equal-width words,
    wrapping modulo 2^width; divisor zero yields 0 for both."""
    sa, sb = a[-1], b[-1]
    ma = cond_neg(c, a, sa)
    mb = cond_neg(c, b, sb)
    q, r = udiv_urem(c, ma, mb)
    quot = cond_neg(c, q, c.XOR(sa, sb))
    rem = cond_neg(c, r, sa)
    return quot, rem


def _shift_stages(width: int, amount: Word):
    """Stage bits for a barrel shifter: the amount is masked to width-1,
    i.e. only the low log2(width) bits participate."""
    return amount[:(width - 1).bit_length()]


def shl_word(c: Circuit, a: Word, amount: Word) -> Word:
    w = len(a)
    cur = list(a)
    for j, bit in enumerate(_shift_stages(w, amount)):
        sh = 1 << j
        cur = [c.MUX(bit, cur[i - sh] if i >= sh else FALSE, cur[i])
               for i in range(w)]
    return tuple(cur)


def shr_word(c: Circuit, a: Word, amount: Word, signed: bool) -> Word:
    w = len(a)
    fill = a[-1] if signed else FALSE
    cur = list(a)
    for j, bit in enumerate(_shift_stages(w, amount)):
        sh = 1 << j
        cur = [c.MUX(bit, cur[i + sh] if i + sh < w else fill, cur[i])
               for i in range(w)]
    return tuple(cur)


# ------------------------------------------------------- fixed-point ops

FX_FRAC = 16
_FX_WIDE = 48  # 32-bit raws need 48 bits for exact products/quotients


def fx_mul(c: Circuit, a: Word, b: Word) -> Word:
    """(a * b) >> 16 wrapped to 32 bits: bits 16..47 of the sign-extended
    48-bit product."""
    wa = resize(a, _FX_WIDE, signed=True)
    wb = resize(b, _FX_WIDE, signed=True)
    prod = mul_word(c, wa, wb)
    return prod[FX_FRAC:FX_FRAC + 32]


def fx_div(c: Circuit, a: Word, b: Word) -> Word:
    """trunc((a << 16) / b) wrapped to 32 bits, 0 on zero divisor."""
    na = const_word(0, FX_FRAC) + a  # exact a * 2^16 in 48 bits
    nb = resize(b, _FX_WIDE, signed=True)
    q, _ = sdiv_srem(c, na, nb)
    return q[:32]
