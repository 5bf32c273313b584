"""Exact solver for 0-1 integer programs with linear constraints.

Depth-first branch-and-bound over the variables in declaration order,
branching 1 before 0. Pruning combines unit-bound constraint propagation
(each constraint keeps a running min/max of its left-hand side, and a
variable forced by either bound is fixed immediately) with an objective
bound against the incumbent. The objective is a plain sum over a designated
subset of variables, minimized.

Solutions can be enumerated in nondecreasing objective order by re-solving
with no-good cuts over a caller-chosen variable subset.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

LE = "<="
GE = ">="
EQ = "=="


class SolveTimeout(Exception):
    """Raised when a deadline passes mid-search."""


@dataclass(frozen=True)
class Constraint:
    terms: tuple[tuple[int, int], ...]  # (var index, integer coefficient)
    sense: str
    rhs: int
    tag: str = ""

    def __post_init__(self) -> None:
        if self.sense not in (LE, GE, EQ):
            raise ValueError(f"bad sense {self.sense!r}")


@dataclass
class BinaryProgram:
    num_vars: int
    var_names: tuple[str, ...]
    objective_vars: tuple[int, ...]
    constraints: list[Constraint] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.var_names) != self.num_vars:
            raise ValueError("var_names length must match num_vars")
        for c in self.constraints:
            for v, _ in c.terms:
                if not (0 <= v < self.num_vars):
                    raise ValueError(f"constraint {c.tag!r} references undeclared var {v}")


@dataclass(frozen=True)
class Solution:
    values: tuple[int, ...]
    objective: int


def check_assignment(
    program: BinaryProgram, values, extra: tuple[Constraint, ...] = ()
) -> list[str]:
    """Tags of violated constraints, empty when the assignment is feasible."""
    violated = []
    for c in list(program.constraints) + list(extra):
        lhs = sum(coef * values[v] for v, coef in c.terms)
        ok = (
            lhs <= c.rhs
            if c.sense == LE
            else lhs >= c.rhs if c.sense == GE else lhs == c.rhs
        )
        if not ok:
            violated.append(c.tag)
    return violated


def objective_value(program: BinaryProgram, values) -> int:
    return sum(values[v] for v in program.objective_vars)


class _Search:
    """Trail-based DFS with incremental constraint bounds."""

    def __init__(
        self,
        program: BinaryProgram,
        extra: tuple[Constraint, ...],
        deadline: float | None,
    ) -> None:
        self.n = program.num_vars
        self.objective_vars = program.objective_vars
        self.deadline = deadline
        self.values = [-1] * self.n

        cons = list(program.constraints) + list(extra)
        self.senses = [c.sense for c in cons]
        self.rhs = [c.rhs for c in cons]
        self.terms = [c.terms for c in cons]
        # lo/hi: attainable range of the LHS given current fixings
        self.lo = []
        self.hi = []
        for t in self.terms:
            self.lo.append(sum(min(coef, 0) for _, coef in t))
            self.hi.append(sum(max(coef, 0) for _, coef in t))
        self.occurs: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for ci, t in enumerate(self.terms):
            for v, coef in t:
                self.occurs[v].append((ci, coef))

        self.is_objective = [False] * self.n
        for v in self.objective_vars:
            self.is_objective[v] = True
        self.obj_fixed_ones = 0

        # disjoint cover rows: unit-coefficient >=/== rows over objective
        # vars; their unmet demand is a valid global objective lower bound
        self.row_of_var = [-1] * self.n
        self.row_need: list[int] = []
        covered: set[int] = set()
        for c in cons:
            if c.sense == LE or c.rhs < 1:
                continue
            vs = [v for v, coef in c.terms]
            if any(coef != 1 for _, coef in c.terms):
                continue
            if any(not self.is_objective[v] or v in covered for v in vs):
                continue
            row = len(self.row_need)
            self.row_need.append(c.rhs)
            for v in vs:
                self.row_of_var[v] = row
                covered.add(v)
        self.shortfall = sum(self.row_need)

        self.trail: list[int] = []
        self.best_obj: int | None = None
        self.best_values: tuple[int, ...] | None = None
        self.nodes = 0

    # -- assignment bookkeeping ------------------------------------------

    def _assign(self, v: int, b: int, dirty: list[int]) -> None:
        self.values[v] = b
        self.trail.append(v)
        if self.is_objective[v] and b == 1:
            self.obj_fixed_ones += 1
            row = self.row_of_var[v]
            if row >= 0 and self.row_need[row] > 0:
                self.row_need[row] -= 1
                self.shortfall -= 1
                # mark so undo restores the demand this one satisfied
                self.trail[-1] = -v - 1
        for ci, coef in self.occurs[v]:
            # replace the open interval contribution with the fixed value
            if coef > 0:
                if b == 1:
                    self.lo[ci] += coef
                else:
                    self.hi[ci] -= coef
            else:
                if b == 1:
                    self.hi[ci] += coef
                else:
                    self.lo[ci] -= coef
            dirty.append(ci)

    def _undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            entry = self.trail.pop()
            if entry < 0:
                v = -entry - 1
                self.row_need[self.row_of_var[v]] += 1
                self.shortfall += 1
            else:
                v = entry
            b = self.values[v]
            self.values[v] = -1
            if self.is_objective[v] and b == 1:
                self.obj_fixed_ones -= 1
            for ci, coef in self.occurs[v]:
                if coef > 0:
                    if b == 1:
                        self.lo[ci] -= coef
                    else:
                        self.hi[ci] += coef
                else:
                    if b == 1:
                        self.hi[ci] -= coef
                    else:
                        self.lo[ci] += coef

    # -- propagation ------------------------------------------------------

    def _conflict(self, ci: int) -> bool:
        sense = self.senses[ci]
        if sense == LE:
            return self.lo[ci] > self.rhs[ci]
        if sense == GE:
            return self.hi[ci] < self.rhs[ci]
        return self.lo[ci] > self.rhs[ci] or self.hi[ci] < self.rhs[ci]

    def _propagate(self, dirty: list[int]) -> bool:
        """Fixpoint of forced assignments; False on conflict."""
        queue = dirty
        while queue:
            next_queue: list[int] = []
            for ci in queue:
                if self._conflict(ci):
                    return False
                sense = self.senses[ci]
                rhs = self.rhs[ci]
                lo = self.lo[ci]
                hi = self.hi[ci]
                for v, coef in self.terms[ci]:
                    if self.values[v] != -1:
                        continue
                    pos = coef > 0
                    # value forbidden if taking it would break this constraint
                    if sense in (LE, EQ):
                        lo_if_1 = lo + (coef if pos else 0)
                        lo_if_0 = lo - (0 if pos else coef)
                        if lo_if_1 > rhs and lo_if_0 > rhs:
                            return False
                        if lo_if_1 > rhs:
                            self._assign(v, 0, next_queue)
                            lo = self.lo[ci]
                            hi = self.hi[ci]
                            continue
                        if lo_if_0 > rhs:
                            self._assign(v, 1, next_queue)
                            lo = self.lo[ci]
                            hi = self.hi[ci]
                            continue
                    if sense in (GE, EQ):
                        hi_if_1 = hi + (0 if pos else coef)
                        hi_if_0 = hi - (coef if pos else 0)
                        if hi_if_1 < rhs and hi_if_0 < rhs:
                            return False
                        if hi_if_1 < rhs:
                            self._assign(v, 0, next_queue)
                            lo = self.lo[ci]
                            hi = self.hi[ci]
                        elif hi_if_0 < rhs:
                            self._assign(v, 1, next_queue)
                            lo = self.lo[ci]
                            hi = self.hi[ci]
                if self._conflict(ci):
                    return False
            queue = next_queue
        return True

    # -- search -----------------------------------------------------------

    def _first_unfixed(self, start: int) -> int:
        v = start
        while v < self.n and self.values[v] != -1:
            v += 1
        return v

    def _record(self) -> None:
        obj = self.obj_fixed_ones
        if self.best_obj is None or obj < self.best_obj:
            self.best_obj = obj
            self.best_values = tuple(self.values)

    def _probe_roots(self) -> bool:
        """One failed-literal pass: fix variables whose one value conflicts."""
        for v in range(self.n):
            if self.values[v] != -1:
                continue
            self.nodes += 1
            if self.deadline is not None and self.nodes % 512 == 0:
                if time.monotonic() > self.deadline:
                    raise SolveTimeout()
            mark = len(self.trail)
            dirty: list[int] = []
            self._assign(v, 1, dirty)
            ok1 = self._propagate(dirty)
            self._undo_to(mark)
            if not ok1:
                dirty = []
                self._assign(v, 0, dirty)
                if not self._propagate(dirty):
                    return False
                continue
            dirty = []
            self._assign(v, 0, dirty)
            ok0 = self._propagate(dirty)
            self._undo_to(mark)
            if not ok0:
                dirty = []
                self._assign(v, 1, dirty)
                if not self._propagate(dirty):
                    return False
        return True

    def run(self) -> None:
        dirty = list(range(len(self.terms)))
        if not self._propagate(dirty):
            return
        if not self._probe_roots():
            return
        v = self._first_unfixed(0)
        if v == self.n:
            self._record()
            return
        # each frame: [branch var, remaining values (1 first), trail mark]
        stack: list[list] = [[v, [1, 0], len(self.trail)]]
        while stack:
            self.nodes += 1
            if self.deadline is not None and self.nodes % 512 == 0:
                if time.monotonic() > self.deadline:
                    raise SolveTimeout()
            frame = stack[-1]
            self._undo_to(frame[2])
            if not frame[1]:
                stack.pop()
                continue
            b = frame[1].pop(0)
            dirty = []
            self._assign(frame[0], b, dirty)
            if not self._propagate(dirty):
                continue
            if (
                self.best_obj is not None
                and self.obj_fixed_ones + self.shortfall >= self.best_obj
            ):
                continue
            nv = self._first_unfixed(frame[0] + 1)
            if nv == self.n:
                self._record()
                continue
            stack.append([nv, [1, 0], len(self.trail)])


def solve(
    program: BinaryProgram,
    extra: tuple[Constraint, ...] = (),
    deadline: float | None = None,
) -> Solution | None:
    """Exact optimum of the program (plus extra cuts), or None if infeasible."""
    search = _Search(program, extra, deadline)
    search.run()
    if search.best_values is None:
        return None
    return Solution(search.best_values, search.best_obj)


def no_good_cut(values, over: tuple[int, ...], tag: str = "no_good") -> Constraint:
    """Excludes exactly the given pattern on the `over` variables."""
    terms = []
    rhs = 1
    for v in over:
        if values[v] == 1:
            terms.append((v, -1))
            rhs -= 1
        else:
            terms.append((v, 1))
    return Constraint(tuple(terms), GE, rhs, tag)


def enumerate_solutions(
    program: BinaryProgram,
    k: int,
    distinct_on: tuple[int, ...],
    deadline: float | None = None,
) -> list[Solution]:
    """Up to k solutions, nondecreasing objective, pairwise distinct on the
    `distinct_on` variables."""
    if k < 1:
        raise ValueError("k must be >= 1")
    found: list[Solution] = []
    cuts: list[Constraint] = []
    while len(found) < k:
        sol = solve(program, tuple(cuts), deadline)
        if sol is None:
            break
        found.append(sol)
        cuts.append(no_good_cut(sol.values, distinct_on))
    return found


def to_lp_text(program: BinaryProgram) -> str:
    """LP-format dump for cross-checking with external solvers."""
    lines = ["Minimize", " obj: " + " + ".join(program.var_names[v] for v in program.objective_vars)]
    lines.append("Subject To")
    for i, c in enumerate(program.constraints):
        parts = []
        for v, coef in c.terms:
            sign = "+" if coef >= 0 else "-"
            mag = abs(coef)
            coef_txt = "" if mag == 1 else f"{mag} "
            parts.append(f"{sign} {coef_txt}{program.var_names[v]}")
        body = " ".join(parts).lstrip("+ ")
        sense = {LE: "<=", GE: ">=", EQ: "="}[c.sense]
        name = c.tag or f"c{i}"
        lines.append(f" {name}_{i}: {body} {sense} {c.rhs}")
    lines.append("Binaries")
    lines.append(" " + " ".join(program.var_names))
    lines.append("End")
    return "\n".join(lines)
