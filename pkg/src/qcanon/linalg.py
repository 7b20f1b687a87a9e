"""Dense-ish exact linear algebra over any of the package's scalar fields.

Vectors are dicts mapping hashable basis keys to scalars; zero entries are
never stored.  The same routines run over Fraction (for the rational
parameter spaces of fibers), RatFunc, and QuadExt, relying only on the
arithmetic operators and truthiness of the scalar type.
"""

from __future__ import annotations

from typing import Any, Callable, Hashable, Iterable

Vec = dict  # key -> scalar


def vec_add(u: Vec, v: Vec) -> Vec:
    out = dict(u)
    for k, c in v.items():
        acc = out.get(k)
        if acc is None:
            out[k] = c
        else:
            acc = acc + c
            if acc:
                out[k] = acc
            else:
                del out[k]
    return out


def vec_sub(u: Vec, v: Vec) -> Vec:
    return vec_add(u, {k: -c for k, c in v.items()})


def vec_scale(v: Vec, c) -> Vec:
    if not c:
        return {}
    return {k: x * c for k, x in v.items()}


def vec_axpy(u: Vec, c, v: Vec) -> Vec:
    """u + c*v, in place on a copy of u."""
    if not c:
        return dict(u)
    out = dict(u)
    for k, x in v.items():
        w = x * c
        acc = out.get(k)
        if acc is None:
            out[k] = w
        else:
            acc = acc + w
            if acc:
                out[k] = acc
            else:
                del out[k]
    return out


class SpanTracker:
    """Incrementally maintained row echelon span with expansion tracking.

    Each inserted vector either grows the span (becoming basis member i) or
    is returned as an exact linear combination of the previously inserted
    basis members.  Pivot keys are chosen by the supplied sort key so results
    are deterministic.
    """

    def __init__(self, one, key_sort: Callable[[Hashable], Any] = lambda k: k):
        self.one = one
        self.key_sort = key_sort
        # echelon rows: pivot key -> (vec, combo); vec has coefficient 1 at
        # the pivot and the pivot key is minimal in vec under key_sort
        self.rows: dict[Hashable, tuple[Vec, Vec]] = {}
        self.count = 0

    def _reduce(self, vec: Vec) -> tuple[Vec, Vec]:
        combo: Vec = {}
        vec = dict(vec)
        while vec:
            piv = min(vec, key=self.key_sort)
            row = self.rows.get(piv)
            if row is None:
                return vec, combo
            rvec, rcombo = row
            c = vec[piv]
            vec = vec_axpy(vec, -c, rvec)
            combo = vec_axpy(combo, c, rcombo)
        return vec, combo

    def insert(self, vec: Vec) -> tuple[bool, Vec]:
        """Insert a vector.

        Returns (True, {}) if the span grew (the vector is basis member
        self.count-1 afterwards), else (False, combo) with combo expressing
        the vector over basis indices.
        """
        residual, combo = self._reduce(vec)
        if not residual:
            return False, combo
        piv = min(residual, key=self.key_sort)
        inv = self.one / residual[piv]
        nvec = vec_scale(residual, inv)
        idx = self.count
        # row = inv*(vec - combo·basis) with vec = basis member idx
        ncombo = vec_axpy(vec_scale(combo, -inv), inv, {idx: self.one})
        self.rows[piv] = (nvec, ncombo)
        self.count += 1
        return True, {}

    def expand(self, vec: Vec) -> Vec | None:
        """Expansion of vec over inserted basis indices, None if outside."""
        residual, combo = self._reduce(vec)
        if residual:
            return None
        return combo

    def rank(self) -> int:
        return self.count


def nullspace(rows: list[Vec], variables: list[Hashable], one) -> list[Vec]:
    """Basis of the right nullspace of the system rows . x = 0.

    Each row maps variable keys to coefficients; returns vectors over the
    same variable keys.  Deterministic: variables are eliminated in the
    given order.
    """
    var_pos = {v: i for i, v in enumerate(variables)}
    work = [dict(r) for r in rows if r]
    pivots: dict[Hashable, Vec] = {}
    for row in work:
        row = dict(row)
        while row:
            piv = min(row, key=lambda k: var_pos[k])
            if piv in pivots:
                row = vec_axpy(row, -row[piv], pivots[piv])
            else:
                row = vec_scale(row, one / row[piv])
                pivots[piv] = row
                break
    # back-substitute to full rref
    for piv in sorted(pivots, key=lambda k: -var_pos[k]):
        prow = pivots[piv]
        for other, orow in pivots.items():
            if other != piv and piv in orow:
                pivots[other] = vec_axpy(orow, -orow[piv], prow)
    free = [v for v in variables if v not in pivots]
    basis = []
    for fv in free:
        vec = {fv: one}
        for piv, prow in pivots.items():
            c = prow.get(fv)
            if c:
                vec[piv] = -c
        basis.append(vec)
    return basis


def solve(rows: list[Vec], rhs: list, variables: list[Hashable], one):
    """One solution of rows . x = rhs, or None if inconsistent.

    Returns (particular, nullspace_basis).
    """
    aug_key = ("__rhs__",)
    var_pos = {v: i for i, v in enumerate(variables)}
    var_pos[aug_key] = len(variables)
    aug_rows = []
    for row, b in zip(rows, rhs):
        r = dict(row)
        if b:
            r[aug_key] = -b
        aug_rows.append(r)
    ns = nullspace(aug_rows, variables + [aug_key], one)
    particular = None
    homo = []
    for vec in ns:
        c = vec.pop(aug_key, None)
        if c:
            inv = one / c
            particular = vec_scale(vec, inv)
        else:
            homo.append(vec)
    if particular is None:
        if any(b for b in rhs):
            return None
        particular = {}
    return particular, homo
