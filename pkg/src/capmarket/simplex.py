"""Exact two-phase simplex over rationals with Bland's rule.

Solves min c.y subject to rows A_r . y (<=|=|>=) b_r and y >= 0. Everything
is a Fraction; Bland's pivoting rule guarantees termination. Problem sizes in
this package stay tiny (tens of variables), so a dense tableau is fine.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .instances import ONE, ZERO, frac_str

LE, EQ, GE = -1, 0, 1


class _Unbounded(Exception):
    pass


@dataclass
class LpSystem:
    """A captured LP: objective c, rows (coeffs, sense, rhs), variable names."""

    objective: list[Fraction]
    rows: list[tuple[list[Fraction], int, Fraction]]
    names: list[str] = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def dump_lines(self) -> list[str]:
        """Debug rendering in the spirit of the state-file format."""
        sym = {LE: "<=", EQ: "=", GE: ">="}
        out = [f"lp {self.num_vars} {len(self.rows)}"]
        if self.names:
            out.append("vars " + " ".join(self.names))
        out.append("min " + " ".join(frac_str(c) for c in self.objective))
        for coeffs, sense, rhs in self.rows:
            out.append(
                "row " + " ".join(frac_str(a) for a in coeffs)
                + f" {sym[sense]} {frac_str(rhs)}"
            )
        return out


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: Fraction | None
    solution: list[Fraction] | None


class _Tableau:
    def __init__(self, system: LpSystem):
        nvar = system.num_vars
        rows, senses, rhss = [], [], []
        for coeffs, sense, rhs in system.rows:
            coeffs = list(coeffs)
            if len(coeffs) != nvar:
                raise ValueError("row width does not match objective")
            if rhs < 0:  # normalize to b >= 0 so phase 1 starts from the identity
                coeffs = [-a for a in coeffs]
                rhs = -rhs
                sense = -sense
            rows.append(coeffs)
            senses.append(sense)
            rhss.append(rhs)

        nrow = len(rows)
        slack_cols: list[int | None] = []
        ncols = nvar
        for sense in senses:
            if sense == EQ:
                slack_cols.append(None)
            else:
                slack_cols.append(ncols)
                ncols += 1
        art_cols: list[int | None] = []
        for sense in senses:
            if sense == LE:
                art_cols.append(None)  # the slack column is already basic
            else:
                art_cols.append(ncols)
                ncols += 1

        tab = [[ZERO] * (ncols + 1) for _ in range(nrow)]
        basis = [0] * nrow
        for r in range(nrow):
            tab[r][:nvar] = rows[r]
            tab[r][ncols] = rhss[r]
            sc = slack_cols[r]
            if sc is not None:
                tab[r][sc] = ONE if senses[r] == LE else -ONE
            ac = art_cols[r]
            if ac is not None:
                tab[r][ac] = ONE
                basis[r] = ac
            else:
                basis[r] = sc
        self.nvar = nvar
        self.nrow = nrow
        self.ncols = ncols
        self.tab = tab
        self.basis = basis
        self.art_cols = art_cols

    def pivot(self, prow: int, pcol: int):
        tab = self.tab
        prow_data = tab[prow]
        inv = ONE / prow_data[pcol]
        tab[prow] = prow_data = [a * inv for a in prow_data]
        for r in range(self.nrow):
            if r == prow:
                continue
            factor = tab[r][pcol]
            if factor != 0:
                tab[r] = [a - factor * b for a, b in zip(tab[r], prow_data)]
        self.basis[prow] = pcol

    def minimize(self, cost: list[Fraction], allowed: int) -> Fraction:
        """Run simplex iterations (Bland's rule) on columns < allowed."""
        tab, basis, nrow, ncols = self.tab, self.basis, self.nrow, self.ncols
        while True:
            in_basis = set(basis)
            cb = [cost[b] for b in basis]
            hot = [r for r in range(nrow) if cb[r] != 0]
            entering = -1
            for c in range(allowed):
                if c in in_basis:
                    continue
                red = cost[c]
                for r in hot:
                    if tab[r][c] != 0:
                        red -= cb[r] * tab[r][c]
                if red < 0:
                    entering = c  # Bland: lowest-index improving column
                    break
            if entering < 0:
                return sum((cb[r] * tab[r][ncols] for r in hot), ZERO)
            leaving = -1
            best = None
            for r in range(nrow):
                a = tab[r][entering]
                if a > 0:
                    ratio = tab[r][ncols] / a
                    if best is None or ratio < best or (
                        ratio == best and basis[r] < basis[leaving]
                    ):
                        best = ratio
                        leaving = r
            if leaving < 0:
                raise _Unbounded
            self.pivot(leaving, entering)


def solve_lp(system: LpSystem) -> LpResult:
    """Two-phase dense simplex; exact optimum or infeasible/unbounded status."""
    t = _Tableau(system)
    arts = [a for a in t.art_cols if a is not None]
    if arts:
        cost1 = [ZERO] * t.ncols
        for ac in arts:
            cost1[ac] = ONE
        if t.minimize(cost1, t.ncols) != 0:
            return LpResult(status="infeasible", objective=None, solution=None)
        art_set = set(arts)
        for r in range(t.nrow):
            if t.basis[r] in art_set:
                in_basis = set(t.basis)
                for c in range(t.ncols):
                    if c not in art_set and c not in in_basis and t.tab[r][c] != 0:
                        t.pivot(r, c)
                        break
        allowed = min(arts)
    else:
        allowed = t.ncols

    cost2 = [ZERO] * t.ncols
    cost2[: t.nvar] = system.objective
    try:
        t.minimize(cost2, allowed)
    except _Unbounded:
        return LpResult(status="unbounded", objective=None, solution=None)

    solution = [ZERO] * t.nvar
    for r, b in enumerate(t.basis):
        if b < t.nvar:
            solution[b] = t.tab[r][t.ncols]
    value = sum((system.objective[c] * solution[c] for c in range(t.nvar)), ZERO)
    return LpResult(status="optimal", objective=value, solution=solution)
