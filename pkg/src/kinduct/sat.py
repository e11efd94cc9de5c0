"""CNF satisfiability.

Internal solver: CDCL with two-watched-literal propagation, first-UIP
conflict analysis, VSIDS variable activities (ties broken by lowest
variable index, so runs are deterministic), phase saving, Luby restarts
with base 64 conflicts, and activity-sorted learned-clause deletion once
the learned set reaches four times the initial clause count.

Every satisfying assignment is re-verified against all original clauses
before it is returned. Budget exhaustion is an outcome (Unknown with a
TimeBudget/MemBudget reason), never an exception; the search loop notices
a blown deadline within 100 ms. A seed perturbs only decision phases;
the same seed and formula give the same outcome.

solve_external runs any DIMACS solver that follows the usual output
conventions ("s SATISFIABLE" and "v" model lines) and re-verifies its
models internally before trusting them.
"""

from __future__ import annotations

import os
import random
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Optional

from kinduct.errors import AdapterError

_UNASSIGNED, _TRUE, _FALSE = 0, 1, 2

LUBY_BASE = 64
LEARNED_LIMIT_FACTOR = 4
_PROPS_PER_CLOCK_CHECK = 10_000  # keeps deadline overshoot well under 100 ms


@dataclass
class SatStats:
    decisions: int = 0
    conflicts: int = 0
    propagations: int = 0
    restarts: int = 0
    learned: int = 0
    deleted: int = 0
    solve_time: float = 0.0


@dataclass
class SatOutcome:
    status: str  # 'Sat' | 'Unsat' | 'Unknown'
    model: Optional[list] = None  # indexed by variable, entries are bool
    reason: Optional[str] = None  # 'TimeBudget' | 'MemBudget'
    stats: SatStats = field(default_factory=SatStats)

    @property
    def sat(self) -> bool:
        return self.status == "Sat"

    @property
    def unsat(self) -> bool:
        return self.status == "Unsat"


class _OutOfBudget(Exception):
    def __init__(self, reason: str):
        self.reason = reason


def luby(i: int) -> int:
    """Luby restart sequence, 1-indexed: 1 1 2 1 1 2 4 1 1 2 1 1 2 4 8 ..."""
    while True:
        k = i.bit_length()
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1


def verify_model(clauses, model) -> bool:
    for clause in clauses:
        for lit in clause:
            v = model[abs(lit)]
            if v if lit > 0 else not v:
                break
        else:
            return False
    return True


class CdclSolver:
    def __init__(self, num_vars: int, clauses, *, seed: int = 0):
        self.n = num_vars
        self.original = [tuple(cl) for cl in clauses]
        self.stats = SatStats()
        self.seed = seed

        n1 = num_vars + 1
        self.values = bytearray(n1)
        self.level = [0] * n1
        self.reason: list = [None] * n1
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        # literal -> watch bucket index: var v positive -> 2v, negative -> 2v+1
        self.watches: list[list] = [[] for _ in range(2 * n1)]
        self.activity = [0.0] * n1
        self.var_inc = 1.0
        self.heap: list[tuple[float, int]] = []
        rng = random.Random(seed)
        self.saved_phase = ([rng.random() < 0.5 for _ in range(n1)]
                            if seed else [False] * n1)
        self._deadline: Optional[float] = None
        self._props_mark = 0

        self.clauses: list[list[int]] = []  # problem first, then learned
        self.cla_activity: list[float] = []
        self.unsat_at_init = False
        units: list[int] = []
        for cl in self.original:
            cl = self._simplify_clause(cl)
            if cl is None:  # tautology
                continue
            if len(cl) == 0:
                self.unsat_at_init = True
                return
            if len(cl) == 1:
                units.append(cl[0])
            else:
                self._attach(list(cl))
        self.n_problem = len(self.clauses)
        for lit in units:
            v = self._lit_value(lit)
            if v == _FALSE:
                self.unsat_at_init = True
                return
            if v == _UNASSIGNED:
                self._enqueue(lit, None)
        for v in range(1, n1):
            heappush(self.heap, (0.0, v))

    @staticmethod
    def _simplify_clause(cl):
        seen = set()
        out = []
        for lit in cl:
            if -lit in seen:
                return None
            if lit not in seen:
                seen.add(lit)
                out.append(lit)
        return tuple(out)

    # ------------------------------------------------------------ basics

    def _lit_value(self, lit: int) -> int:
        v = self.values[abs(lit)]
        if v == _UNASSIGNED:
            return _UNASSIGNED
        if lit > 0:
            return v
        return _TRUE if v == _FALSE else _FALSE

    def _attach(self, cl: list[int]) -> int:
        idx = len(self.clauses)
        self.clauses.append(cl)
        self.cla_activity.append(0.0)
        self.watches[self._widx(-cl[0])].append(idx)
        self.watches[self._widx(-cl[1])].append(idx)
        return idx

    @staticmethod
    def _widx(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def _enqueue(self, lit: int, reason_idx):
        var = abs(lit)
        self.values[var] = _TRUE if lit > 0 else _FALSE
        self.level[var] = len(self.trail_lim)
        self.reason[var] = reason_idx
        self.saved_phase[var] = lit > 0
        self.trail.append(lit)

    def _bump_var(self, var: int):
        self.activity[var] += self.var_inc
        if self.activity[var] > 1e100:
            for v in range(1, self.n + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[v], v) for v in range(1, self.n + 1)
                         if self.values[v] == _UNASSIGNED]
            self.heap.sort()
        else:
            heappush(self.heap, (-self.activity[var], var))

    # --------------------------------------------------------- propagate

    def _propagate(self) -> Optional[int]:
        """Propagate queued assignments; returns a conflict clause index."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            self.stats.propagations += 1
            if (self._deadline is not None
                    and self.stats.propagations - self._props_mark
                    > _PROPS_PER_CLOCK_CHECK):
                self._props_mark = self.stats.propagations
                if time.process_time() > self._deadline:
                    raise _OutOfBudget("TimeBudget")
            widx = self._widx(lit)
            old = self.watches[widx]
            new: list[int] = []
            conflict = None
            for pos, ci in enumerate(old):
                cl = self.clauses[ci]
                if cl[0] == -lit:
                    cl[0], cl[1] = cl[1], cl[0]
                if self._lit_value(cl[0]) == _TRUE:
                    new.append(ci)
                    continue
                for j in range(2, len(cl)):
                    if self._lit_value(cl[j]) != _FALSE:
                        cl[1], cl[j] = cl[j], cl[1]
                        self.watches[self._widx(-cl[1])].append(ci)
                        break
                else:
                    new.append(ci)
                    if self._lit_value(cl[0]) == _FALSE:
                        new.extend(old[pos + 1:])
                        conflict = ci
                        break
                    self._enqueue(cl[0], ci)
            self.watches[widx] = new
            if conflict is not None:
                return conflict
        return None

    # ----------------------------------------------------------- analyze

    def _analyze(self, confl: int):
        """First-UIP learning. Returns (learned clause, backjump level).
        Relies on the invariant that an active reason clause keeps its
        implied literal in slot 0."""
        learned = [0]
        seen = bytearray(self.n + 1)
        counter = 0
        lit = None
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        while True:
            self._bump_clause(confl)
            cl = self.clauses[confl]
            for q in (cl if lit is None else cl[1:]):
                var = abs(q)
                if not seen[var] and self.level[var] > 0:
                    seen[var] = 1
                    self._bump_var(var)
                    if self.level[var] == cur_level:
                        counter += 1
                    else:
                        learned.append(q)
            while not seen[abs(self.trail[idx])]:
                idx -= 1
            lit = self.trail[idx]
            var = abs(lit)
            seen[var] = 0
            counter -= 1
            if counter == 0:
                break
            confl = self.reason[var]
            idx -= 1
        learned[0] = -lit
        if len(learned) == 1:
            return learned, 0
        hi = max(range(1, len(learned)),
                 key=lambda i: self.level[abs(learned[i])])
        learned[1], learned[hi] = learned[hi], learned[1]
        return learned, self.level[abs(learned[1])]

    def _bump_clause(self, ci: int):
        if ci >= self.n_problem:
            self.cla_activity[ci] += 1.0

    def _backtrack(self, target_level: int):
        while len(self.trail_lim) > target_level:
            limit = self.trail_lim.pop()
            while len(self.trail) > limit:
                lit = self.trail.pop()
                var = abs(lit)
                self.values[var] = _UNASSIGNED
                self.reason[var] = None
                heappush(self.heap, (-self.activity[var], var))
        self.qhead = len(self.trail)

    # ------------------------------------------------------------ reduce

    def _reduce_learned(self):
        n_learned = len(self.clauses) - self.n_problem
        order = sorted(range(self.n_problem, len(self.clauses)),
                       key=lambda ci: (self.cla_activity[ci], ci))
        locked = {self.reason[abs(l)] for l in self.trail
                  if self.reason[abs(l)] is not None}
        drop = set()
        for ci in order:
            if len(drop) * 2 >= n_learned:
                break
            if ci in locked or len(self.clauses[ci]) <= 2:
                continue
            drop.add(ci)
        if not drop:
            return
        remap = {}
        new_clauses: list[list[int]] = []
        new_act: list[float] = []
        for ci, cl in enumerate(self.clauses):
            if ci in drop:
                continue
            remap[ci] = len(new_clauses)
            new_clauses.append(cl)
            new_act.append(self.cla_activity[ci])
        self.clauses, self.cla_activity = new_clauses, new_act
        for bucket in self.watches:
            bucket[:] = [remap[ci] for ci in bucket if ci not in drop]
        for var in range(1, self.n + 1):
            r = self.reason[var]
            if r is not None:
                self.reason[var] = remap[r]
        self.stats.deleted += len(drop)

    def _memory_estimate(self) -> int:
        lits = sum(len(cl) for cl in self.clauses)
        return lits * 40 + self.n * 120 + len(self.clauses) * 80

    # -------------------------------------------------------------- main

    def _make_decision(self) -> bool:
        """Pick the highest-activity unassigned variable. False when every
        variable is assigned (stale heap entries are skipped; any
        unassigned variable always has a live entry)."""
        while self.heap:
            _, var = heappop(self.heap)
            if self.values[var] == _UNASSIGNED:
                self.trail_lim.append(len(self.trail))
                self._enqueue(var if self.saved_phase[var] else -var, None)
                self.stats.decisions += 1
                return True
        return False

    def solve(self, *, cpu_seconds: Optional[float] = None,
              mem_mb: Optional[float] = None) -> SatOutcome:
        t0 = time.process_time()

        def done(outcome: SatOutcome) -> SatOutcome:
            self.stats.solve_time = time.process_time() - t0
            outcome.stats = self.stats
            return outcome

        if self.unsat_at_init:
            return done(SatOutcome("Unsat"))
        self._deadline = None if cpu_seconds is None else t0 + cpu_seconds
        mem_limit = None if mem_mb is None else mem_mb * 1024 * 1024
        restart_no = 1
        conflicts_here = 0
        try:
            while True:
                confl = self._propagate()
                if confl is not None:
                    self.stats.conflicts += 1
                    conflicts_here += 1
                    self.var_inc /= 0.95
                    if not self.trail_lim:
                        return done(SatOutcome("Unsat"))
                    learned, back = self._analyze(confl)
                    self._backtrack(back)
                    if len(learned) == 1:
                        self._enqueue(learned[0], None)
                    else:
                        ci = self._attach(learned)
                        self.cla_activity[ci] = 1.0
                        self.stats.learned += 1
                        self._enqueue(learned[0], ci)
                    if (len(self.clauses) - self.n_problem
                            > LEARNED_LIMIT_FACTOR * max(1, self.n_problem)):
                        self._reduce_learned()
                        if (mem_limit is not None
                                and self._memory_estimate() > mem_limit):
                            raise _OutOfBudget("MemBudget")
                    if (self._deadline is not None
                            and self.stats.conflicts & 63 == 0
                            and time.process_time() > self._deadline):
                        raise _OutOfBudget("TimeBudget")
                    continue
                if conflicts_here >= LUBY_BASE * luby(restart_no):
                    restart_no += 1
                    conflicts_here = 0
                    self.stats.restarts += 1
                    self._backtrack(0)
                    continue
                if not self._make_decision():
                    model = [v == _TRUE for v in self.values]
                    assert verify_model(self.original, model), \
                        "internal model failed verification"
                    return done(SatOutcome("Sat", model=model))
        except _OutOfBudget as e:
            return done(SatOutcome("Unknown", reason=e.reason))


def solve(formula, budget: Optional[dict] = None, *, seed: int = 0) -> SatOutcome:
    """Decide a CnfFormula (anything with num_vars and clauses)."""
    budget = budget or {}
    solver = CdclSolver(formula.num_vars, formula.clauses, seed=seed)
    return solver.solve(cpu_seconds=budget.get("cpu_seconds"),
                        mem_mb=budget.get("mem_mb"))


def solve_external(dimacs: str, command: str,
                   budget: Optional[dict] = None) -> SatOutcome:
    """Run an external DIMACS solver. The command template must contain
    {input}; stdout must follow the usual s/v conventions. Sat models are
    re-verified before being accepted."""
    if "{input}" not in command:
        raise AdapterError("solver command template lacks an {input} placeholder")
    budget = budget or {}
    t0 = time.process_time()
    stats = SatStats()
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
        fh.write(dimacs)
        path = fh.name
    try:
        try:
            proc = subprocess.run(
                command.format(input=path), shell=True,
                capture_output=True, text=True,
                timeout=budget.get("cpu_seconds"))
        except subprocess.TimeoutExpired:
            stats.solve_time = time.process_time() - t0
            return SatOutcome("Unknown", reason="TimeBudget", stats=stats)
        status = None
        model_lits: list[int] = []
        for line in proc.stdout.splitlines():
            line = line.strip()
            if line.startswith("s "):
                word = line[2:].strip()
                if word == "SATISFIABLE":
                    status = "Sat"
                elif word == "UNSATISFIABLE":
                    status = "Unsat"
                elif word == "UNKNOWN":
                    status = "Unknown"
                else:
                    raise AdapterError(f"unrecognized status line: {line!r}")
            elif line == "v" or line.startswith("v "):
                try:
                    model_lits.extend(int(t) for t in line[1:].split())
                except ValueError as exc:
                    raise AdapterError(f"bad model line: {line!r}") from exc
        if status is None:
            raise AdapterError(
                f"no status line in solver output (exit {proc.returncode})")
        stats.solve_time = time.process_time() - t0
        if status == "Sat":
            from kinduct.cnf import parse_dimacs

            f = parse_dimacs(dimacs)
            model = [False] * (f.num_vars + 1)
            for lit in model_lits:
                if lit != 0 and abs(lit) <= f.num_vars:
                    model[abs(lit)] = lit > 0
            if not verify_model(f.clauses, model):
                raise AdapterError("external model failed verification")
            return SatOutcome("Sat", model=model, stats=stats)
        if status == "Unknown":
            return SatOutcome("Unknown", reason="TimeBudget", stats=stats)
        return SatOutcome("Unsat", stats=stats)
    finally:
        os.unlink(path)
