"""Exact linear programming over the rationals.

A small two-phase simplex with Bland's rule, enough for the feasibility
probes used by the simplex-displacement bisection.  All data are
fractions.Fraction; no floating point enters.
"""

from __future__ import annotations

from fractions import Fraction


class LPError(ValueError):
    pass


def solve_lp(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None):
    """Maximize c.x subject to a_ub.x <= b_ub, a_eq.x = b_eq, x >= 0.

    Returns (status, value, x) with status one of 'optimal', 'infeasible',
    'unbounded'.  Exact rational arithmetic throughout.
    """
    c = [Fraction(v) for v in c]
    n = len(c)
    rows = []
    rhs = []
    kinds = []
    for a, b in zip(a_ub or [], b_ub or []):
        rows.append([Fraction(v) for v in a])
        rhs.append(Fraction(b))
        kinds.append("ub")
    for a, b in zip(a_eq or [], b_eq or []):
        rows.append([Fraction(v) for v in a])
        rhs.append(Fraction(b))
        kinds.append("eq")
    for r in rows:
        if len(r) != n:
            raise LPError("row length does not match objective length")
    m = len(rows)

    # normalize to b >= 0
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
            if kinds[i] == "ub":
                kinds[i] = "lb"  # becomes >=, needs surplus + artificial

    # columns: n structural, then slacks/surplus, then artificials
    slack_of = {}
    art_of = {}
    ncols = n
    for i in range(m):
        if kinds[i] == "ub":
            slack_of[i] = ncols
            ncols += 1
        elif kinds[i] == "lb":
            slack_of[i] = ncols  # surplus, coefficient -1
            ncols += 1
    art_start = ncols
    for i in range(m):
        if kinds[i] != "ub":
            art_of[i] = ncols
            ncols += 1

    tab = [[Fraction(0)] * ncols + [rhs[i]] for i in range(m)]
    basis = [None] * m
    for i in range(m):
        for j in range(n):
            tab[i][j] = rows[i][j]
        if kinds[i] == "ub":
            tab[i][slack_of[i]] = Fraction(1)
            basis[i] = slack_of[i]
        else:
            if kinds[i] == "lb":
                tab[i][slack_of[i]] = Fraction(-1)
            tab[i][art_of[i]] = Fraction(1)
            basis[i] = art_of[i]

    def pivot(pr, pc):
        pv = tab[pr][pc]
        tab[pr] = [v / pv for v in tab[pr]]
        for i in range(m):
            if i != pr and tab[i][pc] != 0:
                f = tab[i][pc]
                tab[i] = [v - f * w for v, w in zip(tab[i], tab[pr])]
        basis[pr] = pc

    def run_simplex(obj, allowed):
        """Maximize obj over the current basis; returns False if unbounded."""
        while True:
            # reduced costs
            z = list(obj)
            for i in range(m):
                bi = basis[i]
                if obj[bi] != 0:
                    f = obj[bi]
                    for j in range(ncols):
                        z[j] -= f * tab[i][j]
            enter = None
            for j in range(ncols):
                if j in allowed and z[j] > 0:
                    enter = j  # Bland: smallest index
                    break
            if enter is None:
                return True
            leave = None
            best = None
            for i in range(m):
                if tab[i][enter] > 0:
                    ratio = tab[i][ncols] / tab[i][enter]
                    if best is None or ratio < best or (
                            ratio == best and basis[i] < basis[leave]):
                        best = ratio
                        leave = i
            if leave is None:
                return False
            pivot(leave, enter)

    if art_of:
        phase1 = [Fraction(0)] * ncols
        for i in art_of.values():
            phase1[i] = Fraction(-1)
        allowed = set(range(ncols))
        run_simplex(phase1, allowed)
        total = sum(tab[i][ncols] for i in range(m) if basis[i] >= art_start)
        if total != 0:
            return ("infeasible", None, None)
        # drive artificials out of the basis where possible
        for i in range(m):
            if basis[i] >= art_start:
                pc = next((j for j in range(art_start) if tab[i][j] != 0), None)
                if pc is not None:
                    pivot(i, pc)

    obj = [Fraction(0)] * ncols
    for j in range(n):
        obj[j] = c[j]
    allowed = set(range(art_start))
    ok = run_simplex(obj, allowed)
    if not ok:
        return ("unbounded", None, None)
    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i][ncols]
    value = sum(cv * xv for cv, xv in zip(c, x))
    return ("optimal", value, x)
