"""Type-A Hecke algebras, their tensor products, and Kazhdan-Lusztig bases.

Conventions: generators T_i satisfy T_i^2 = (q-1)T_i + q and the braid
relations, so (T_i - q)(T_i + 1) = 0.  The bar involution sends q^{1/2} to
q^{-1/2} and T_w to (T_{w^{-1}})^{-1}.  KL elements use the C'-normalization

    C'_w = q^{-len(w)/2} * sum_{y <= w} P_{y,w}(q) T_y,

so they lie in the Z[q^{1/2}, q^{-1/2}]-form and C'_{s} = q^{-1/2}(T_s + 1).

Elements of a tensor product of Hecke algebras are dicts mapping tuples of
permutation indices to scalars; a single algebra is the one-factor case.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations as iter_permutations

from .errors import AsymmetricTensor, RankMismatch
from .linalg import Vec, vec_axpy, vec_scale
from .scalars import ONE, RatFunc, Scalar, sp

Perm = tuple[int, ...]


# ---------------------------------------------------------------------------
# permutations (one-line notation, values 1..n)
# ---------------------------------------------------------------------------

def perm_mult(u: Perm, v: Perm) -> Perm:
    """(u v)(i) = u(v(i))."""
    return tuple(u[v[i] - 1] for i in range(len(u)))


def perm_inverse(u: Perm) -> Perm:
    out = [0] * len(u)
    for i, x in enumerate(u):
        out[x - 1] = i + 1
    return tuple(out)


def perm_length(u: Perm) -> int:
    n = len(u)
    return sum(1 for i in range(n) for j in range(i + 1, n) if u[i] > u[j])


def simple_transposition(n: int, i: int) -> Perm:
    """s_i swapping positions i, i+1 (1-based i, i < n)."""
    out = list(range(1, n + 1))
    out[i - 1], out[i] = out[i], out[i - 1]
    return tuple(out)


def reduced_word(u: Perm) -> tuple[int, ...]:
    """A reduced word for u, by repeatedly removing right descents."""
    u = list(u)
    word: list[int] = []
    n = len(u)
    while True:
        for i in range(n - 1):
            if u[i] > u[i + 1]:
                word.append(i + 1)
                u[i], u[i + 1] = u[i + 1], u[i]
                break
        else:
            break
    return tuple(reversed(word))


class HeckeAlgebra:
    """Handle for one H_n(q): indexed permutations and memoized KL data."""

    def __init__(self, n: int):
        self.n = n
        perms = sorted(iter_permutations(range(1, n + 1)),
                       key=lambda p: (perm_length(p), p))
        self.perms: list[Perm] = [tuple(p) for p in perms]
        self.index: dict[Perm, int] = {p: i for i, p in enumerate(self.perms)}
        self.length: list[int] = [perm_length(p) for p in self.perms]
        self.size = len(self.perms)
        self.id_index = self.index[tuple(range(1, n + 1))]
        # right multiplication by s_i: rmult[w][i-1] = index of w*s_i
        self.rmult = [
            [self.index[perm_mult(p, simple_transposition(n, i))]
             for i in range(1, n)]
            for p in self.perms
        ]
        self.inverse = [self.index[perm_inverse(p)] for p in self.perms]
        self._bar_t: dict[int, Vec] = {}
        self._kl: dict[int, Vec] = {}
        self._hash_t: dict[int, Vec] = {}

    # -- products on the T basis ---------------------------------------------

    def t_times_gen(self, vec: Vec, i: int) -> Vec:
        """Right-multiply an element (dict index->Scalar) by T_{s_i}."""
        q = sp(2)
        qm1 = sp(2) - 1
        out: Vec = {}
        for w, c in vec.items():
            ws = self.rmult[w][i - 1]
            if self.length[ws] > self.length[w]:
                out = vec_axpy(out, c, {ws: ONE})
            else:
                out = vec_axpy(out, c * q, {ws: ONE})
                out = vec_axpy(out, c * qm1, {w: ONE})
        return out

    def t_word(self, word: tuple[int, ...]) -> Vec:
        vec: Vec = {self.id_index: ONE}
        for i in word:
            vec = self.t_times_gen(vec, i)
        return vec

    def mult(self, a: Vec, b: Vec) -> Vec:
        out: Vec = {}
        for w, c in b.items():
            term = {u: cu * c for u, cu in a.items()}
            for i in reduced_word(self.perms[w]):
                term = self.t_times_gen(term, i)
            out = vec_axpy(out, ONE, term)
        return out

    # -- bar ------------------------------------------------------------------

    def bar_t(self, w: int) -> Vec:
        """bar(T_w) = (T_{w^{-1}})^{-1} on the T basis."""
        memo = self._bar_t.get(w)
        if memo is not None:
            return memo
        # T_i^{-1} = q^{-1} T_i + (q^{-1} - 1)
        qinv = sp(-2)
        vec: Vec = {self.id_index: ONE}
        for i in reversed(reduced_word(self.perms[self.inverse[w]])):
            vec = vec_axpy(vec_scale(self.t_times_gen(vec, i), qinv),
                           qinv - 1, vec)
        self._bar_t[w] = vec
        return vec

    def bar(self, a: Vec) -> Vec:
        out: Vec = {}
        for w, c in a.items():
            out = vec_axpy(out, c.bar(), self.bar_t(w))
        return out

    # -- Goldman involution T_i -> q - 1 - T_i --------------------------------

    def hash_t(self, w: int) -> Vec:
        memo = self._hash_t.get(w)
        if memo is not None:
            return memo
        vec: Vec = {self.id_index: ONE}
        for i in reduced_word(self.perms[w]):
            vec = vec_axpy(vec_scale(self.t_times_gen(vec, i), -1),
                           sp(2) - 1, vec)
        self._hash_t[w] = vec
        return vec

    def goldman(self, a: Vec) -> Vec:
        out: Vec = {}
        for w, c in a.items():
            out = vec_axpy(out, c, self.hash_t(w))
        return out

    # -- Kazhdan-Lusztig ------------------------------------------------------

    def kl(self, w: int) -> Vec:
        """C'_w on the T basis (memoized; idempotent inserts)."""
        memo = self._kl.get(w)
        if memo is not None:
            return memo
        if w == self.id_index:
            out = {self.id_index: ONE}
        elif self.length[w] == 1:
            out = {w: sp(-1), self.id_index: sp(-1)}
        else:
            perm = self.perms[w]
            i = next(j for j in range(1, self.n)
                     if self._left_descent(perm, j))
            sw = self.index[perm_mult(simple_transposition(self.n, i), perm)]
            csw = self.kl(sw)
            cs = self.kl(self.index[simple_transposition(self.n, i)])
            out = self.mult(cs, csw)
            for z, mu in self._mu_terms(sw):
                zperm = self.perms[z]
                if self._left_descent(zperm, i):
                    out = vec_axpy(out, -mu, self.kl(z))
        self._kl[w] = out
        return out

    @staticmethod
    def _left_descent(perm: Perm, i: int) -> bool:
        """True if s_i * perm < perm, i.e. i+1 precedes i in one-line form."""
        return perm.index(i) > perm.index(i + 1)

    def _mu_terms(self, y: int) -> list[tuple[int, "RatFunc"]]:
        """Pairs (z, mu(z, y)) with nonzero mu, from the stored C'_y."""
        cy = self.kl(y)
        ly = self.length[y]
        out = []
        for z, c in cy.items():
            lz = self.length[z]
            if lz >= ly:
                continue
            mu = c.num.coeff(-lz - 1) if c.is_laurent() else 0
            if mu:
                out.append((z, RatFunc.const(mu)))
        return out

    def kl_polynomial(self, y: int, w: int) -> RatFunc:
        """P_{y,w}(q) extracted from C'_w."""
        c = self.kl(w).get(y)
        if c is None:
            return RatFunc.const(0)
        return c * sp(self.length[w])


@lru_cache(maxsize=None)
def hecke_algebra(n: int) -> HeckeAlgebra:
    return HeckeAlgebra(n)


# ---------------------------------------------------------------------------
# tensor products
# ---------------------------------------------------------------------------

class HeckeTensor:
    """Z = H_{k_1} x ... x H_{k_l}; elements are dicts over index tuples."""

    def __init__(self, ranks: tuple[int, ...]):
        self.ranks = ranks
        self.factors = [hecke_algebra(n) for n in ranks]
        self.id_key = tuple(f.id_index for f in self.factors)

    # deterministic order: total length, then one-line forms
    def sort_key(self, key: tuple[int, ...]):
        return (
            self.total_length(key),
            tuple(self.factors[j].perms[w] for j, w in enumerate(key)),
        )

    def total_length(self, key: tuple[int, ...]) -> int:
        return sum(f.length[w] for f, w in zip(self.factors, key))

    def one(self) -> Vec:
        return {self.id_key: ONE}

    def key_of(self, perms: tuple[Perm, ...]) -> tuple[int, ...]:
        if len(perms) != len(self.factors):
            raise RankMismatch("wrong tuple arity")
        return tuple(f.index[p] for f, p in zip(self.factors, perms))

    def mult(self, a: Vec, b: Vec) -> Vec:
        out: Vec = {}
        for kb, cb in b.items():
            for ka, ca in a.items():
                prod_c = ca * cb
                parts = [
                    self.factors[j].mult({ka[j]: ONE}, {kb[j]: ONE})
                    for j in range(len(self.factors))
                ]
                self._accumulate(out, parts, prod_c)
        return out

    def _accumulate(self, out: Vec, parts: list[Vec], c: Scalar) -> None:
        keys = [()]
        coeffs = [c]
        for part in parts:
            nkeys, ncoeffs = [], []
            for k0, c0 in zip(keys, coeffs):
                for w, cw in part.items():
                    nkeys.append(k0 + (w,))
                    ncoeffs.append(c0 * cw)
            keys, coeffs = nkeys, ncoeffs
        for k, cc in zip(keys, coeffs):
            acc = out.get(k)
            acc = cc if acc is None else acc + cc
            if acc:
                out[k] = acc
            else:
                out.pop(k, None)

    def bar(self, a: Vec) -> Vec:
        out: Vec = {}
        for key, c in a.items():
            parts = [self.factors[j].bar_t(w) for j, w in enumerate(key)]
            self._accumulate(out, parts, c.bar())
        return out

    def goldman(self, a: Vec, which: tuple[int, ...] | None = None) -> Vec:
        """Apply T_i -> q-1-T_i on the selected factors (default: all)."""
        if which is None:
            which = tuple(range(len(self.factors)))
        out: Vec = {}
        for key, c in a.items():
            parts = [
                self.factors[j].hash_t(w) if j in which else {w: ONE}
                for j, w in enumerate(key)
            ]
            self._accumulate(out, parts, c)
        return out

    def kl(self, key: tuple[int, ...]) -> Vec:
        parts = [self.factors[j].kl(w) for j, w in enumerate(key)]
        result: Vec = {}
        self._accumulate(result, parts, ONE)
        return result

    def expand_in_kl(self, a: Vec) -> Vec:
        """Exact KL-expansion: dict KL key tuple -> scalar."""
        rem = dict(a)
        out: Vec = {}
        while rem:
            w = max(rem, key=self.sort_key)
            c = rem[w]
            coeff = c * sp(self.total_length(w))
            out[w] = coeff
            rem = vec_axpy(rem, -coeff, self.kl(w))
        return out

    def from_kl(self, coeffs: Vec) -> Vec:
        out: Vec = {}
        for key, c in coeffs.items():
            out = vec_axpy(out, c, self.kl(key))
        return out

    def format_elem(self, a: Vec) -> str:
        from .scalars import format_scalar
        lines = []
        for key in sorted(a, key=self.sort_key):
            perms = ",".join(
                "".join(map(str, self.factors[j].perms[w]))
                for j, w in enumerate(key)
            )
            lines.append(f"{perms} : {format_scalar(a[key])}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# spec-level operations
# ---------------------------------------------------------------------------

def kl_element(n: int, w: Perm) -> Vec:
    return hecke_algebra(n).kl(hecke_algebra(n).index[w])


def plus_idempotent(n: int, i: int) -> Vec:
    """e_i^+ = (T_i + 1)/(q + 1)."""
    h = hecke_algebra(n)
    inv = ONE / (sp(2) + 1)
    si = h.index[simple_transposition(n, i)]
    return {si: inv, h.id_index: inv}


def minus_idempotent(n: int, i: int) -> Vec:
    """e_i^- = (q - T_i)/(q + 1)."""
    h = hecke_algebra(n)
    inv = ONE / (sp(2) + 1)
    si = h.index[simple_transposition(n, i)]
    return {si: -inv, h.id_index: sp(2) * inv}


def symmetrized_kl_basis(z: HeckeTensor) -> list[tuple[tuple, Vec]]:
    """Symmetrized KL basis of H_n x H_n.

    For each unordered pair {u, w}: C'_u x C'_w + C'_w x C'_u when u != w,
    C'_w x C'_w otherwise.  Returned in the deterministic order (total
    length, one-line forms) of the representative key with u <= w.
    """
    if len(z.ranks) != 2 or z.ranks[0] != z.ranks[1]:
        raise AsymmetricTensor("need two equal tensor factors")
    h = z.factors[0]
    reps = []
    for u in range(h.size):
        for w in range(u, h.size):
            reps.append((u, w))
    reps.sort(key=lambda k: z.sort_key(k))
    out = []
    for u, w in reps:
        vec = z.kl((u, w))
        if u != w:
            vec = vec_axpy(vec, ONE, z.kl((w, u)))
        out.append(((u, w), vec))
    return out


def expand_in_symmetrized_kl(z: HeckeTensor, a: Vec) -> Vec:
    """Expansion over symmetrized KL representatives (u <= w).

    Requires the element to be symmetric under the factor flip.
    """
    coeffs = z.expand_in_kl(a)
    out: Vec = {}
    for (u, w), c in coeffs.items():
        if u > w:
            cc = coeffs.get((w, u))
            if cc != c:
                raise AsymmetricTensor("element is not flip-symmetric")
            continue
        out[(u, w)] = c
    return out
