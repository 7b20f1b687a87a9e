"""Wedderburn splitting and nonstandard Gelfand-Tsetlin chains.

Splitting strategy, desk scale: one-dimensional blocks are found by solving
the two-sided eigenvalue patterns of the generators (each generator acts by
0 or by the scale in a one-dimensional representation).  The remaining
center is split by the minimal polynomials of center elements, descending in
degree-two steps; a non-square discriminant triggers one quadratic field
extension.  Matrix units inside each block come from the branching
idempotents of the subalgebra chain, which also yields the Gelfand-Tsetlin
tableaux (chains of block labels down the tower).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .errors import (
    ExtensionDegreeTooHigh,
    NotSemisimple,
    QcanonError,
    SplittingFailed,
)
from .linalg import SpanTracker, Vec, nullspace, vec_axpy, vec_scale
from .scalars import (
    FieldConfig,
    Laurent,
    ONE,
    PLAIN_FIELD,
    QuadExt,
    RatFunc,
    Scalar,
    poly_gcd,
    poly_divmod,
    laurent_divexact,
    ratfunc_sqrt,
)

Chain = tuple  # GT tableau: tuple of block labels, finest level last


# ---------------------------------------------------------------------------
# field lifting
# ---------------------------------------------------------------------------

def lift_scalar(c: Scalar, fc: FieldConfig) -> Scalar:
    if isinstance(c, QuadExt):
        if c.config != fc:
            raise QcanonError("cannot relift an extension scalar")
        return c
    return QuadExt.of(c, fc)


def lift_vec(v: Vec, fc: FieldConfig) -> Vec:
    return {k: lift_scalar(c, fc) for k, c in v.items()}


class ExtendedAlgebra:
    """View of an algebra with scalars lifted to a quadratic extension."""

    def __init__(self, base, fc: FieldConfig):
        self.base = base
        self.field = fc
        self.dim = base.dim
        self.labels = base.labels
        self.words = getattr(base, "words", None)
        self.scale = lift_scalar(base.scale, fc)
        self.n_gens = base.n_gens
        self.one_scalar = QuadExt.of(1, fc)
        self.highest_weights = getattr(base, "highest_weights", {})

    def unit_coords(self) -> Vec:
        return lift_vec(self.base.unit_coords(), self.field)

    def mult_basis(self, i: int, j: int) -> Vec:
        return lift_vec(self.base.mult_basis(i, j), self.field)

    def mult_vec(self, u: Vec, v: Vec) -> Vec:
        out: Vec = {}
        for i, ci in u.items():
            for j, cj in v.items():
                out = vec_axpy(out, ci * cj, self.mult_basis(i, j))
        return out

    def bar_vec(self, u: Vec) -> Vec:
        out: Vec = {}
        for i, c in u.items():
            out = vec_axpy(out, c.bar(), lift_vec(self.base.bar_basis(i), self.field))
        return out

    def gen_coords(self, side: str, i: int) -> Vec:
        return lift_vec(self.base.gen_coords(side, i), self.field)


# ---------------------------------------------------------------------------
# block data
# ---------------------------------------------------------------------------

@dataclass
class Block:
    """One Wedderburn block of a level of the chain."""

    label: str
    dim: int                      # d with block = d x d matrices
    central: Vec                  # central idempotent, coordinates of the top algebra
    tableaux: list[Chain]         # GT chains indexing the block's GT basis
    units: dict[tuple[Chain, Chain], Vec]  # matrix units e_{S,T}
    restriction: dict[str, int]   # sub-block label -> multiplicity


@dataclass
class Level:
    """Wedderburn data of one member of the subalgebra chain."""

    gens: list[int]               # generator indices spanning this level
    basis: list[Vec]              # basis of the level, top coordinates
    blocks: list[Block]


def one_scalar_of(alg) -> Scalar:
    return getattr(alg, "one_scalar", ONE)


# ---------------------------------------------------------------------------
# commutative splitting
# ---------------------------------------------------------------------------

def _min_poly(alg, corner_basis: list[Vec], unit: Vec, z: Vec) -> list:
    """Monic minimal polynomial of z inside the span of corner_basis.

    Returned as coefficient list [c_0, ..., c_{d-1}, 1].
    """
    one = one_scalar_of(alg)
    tracker = SpanTracker(one, key_sort=lambda k: k)
    power = unit
    powers = [unit]
    tracker.insert(unit)
    while True:
        power = alg.mult_vec(power, z)
        new, combo = tracker.insert(power)
        if not new:
            deg = len(powers)
            coeffs = [-combo.get(i, one - one) for i in range(deg)]
            return coeffs + [one]
        powers.append(power)


def _poly_eval_vec(alg, coeffs: list, z: Vec, unit: Vec) -> Vec:
    out: Vec = {}
    power = unit
    for c in coeffs:
        if c:
            out = vec_axpy(out, c, power)
        power = alg.mult_vec(power, z)
    return out


def _as_ratfunc(c: Scalar) -> RatFunc | None:
    if isinstance(c, QuadExt):
        return c.a if c.b.is_zero() else None
    return c


def _squarefree(coeffs: list[RatFunc]) -> bool:
    """Square-freeness of a monic polynomial with RatFunc coefficients."""
    # clear denominators into a Laurent in an auxiliary variable: work with
    # the resultant-free gcd(m, m') over Q(s)[t] via pseudo-division
    m = coeffs
    dm = [c * i for i, c in enumerate(m)][1:]
    return not _poly_gcd_nontrivial(m, dm)


def _poly_gcd_nontrivial(a: list[RatFunc], b: list[RatFunc]) -> bool:
    """True if gcd of two polynomials over the scalar field has degree > 0."""
    a = [c for c in a]
    b = [c for c in b]
    while True:
        while b and not b[-1]:
            b.pop()
        if not b:
            return len(a) > 1
        if len(b) == 1:
            return False
        # a mod b
        while len(a) >= len(b):
            lead = a[-1] / b[-1]
            shift = len(a) - len(b)
            for i, c in enumerate(b):
                a[i + shift] = a[i + shift] - lead * c
            while a and not a[-1]:
                a.pop()
            if not a:
                break
        a, b = b, a


def split_idempotent(alg, e: Vec, center_basis: list[Vec],
                     allow_extension: bool,
                     extra_central: list[Vec] = ()) -> tuple[list[Vec], FieldConfig | None]:
    """Split idempotent e into primitive central idempotents of its corner.

    Returns (idempotents, needed_field_or_None).  When a quadratic extension
    is needed and allowed, the extension FieldConfig is returned and the
    caller restarts over the extension.
    """
    one = one_scalar_of(alg)
    pending = [e]
    done: list[Vec] = []
    candidates = list(extra_central) + list(center_basis)
    while pending:
        f = pending.pop()
        corner = [alg.mult_vec(alg.mult_vec(f, z), f) for z in candidates]
        tracker = SpanTracker(one, key_sort=lambda k: k)
        tracker.insert(f)
        corner_dim = 1
        for v in corner:
            grew, _ = tracker.insert(v)
            corner_dim += 1 if grew else 0
        if corner_dim == 1:
            done.append(f)
            continue
        progress = False
        for z in corner:
            zc = alg.mult_vec(alg.mult_vec(f, z), f)
            m = _min_poly(alg, [], f, zc)
            if len(m) - 1 < 2:
                continue
            mr = [_as_ratfunc(c) for c in m]
            if any(c is None for c in mr):
                continue
            if not _squarefree(mr):
                raise NotSemisimple("center element with repeated eigenvalue")
            if len(m) - 1 == 2:
                # roots of t^2 + m1 t + m0
                m0, m1 = mr[0], mr[1]
                disc = m1 * m1 - 4 * m0
                root = ratfunc_sqrt(disc)
                if root is None:
                    ext = _extension_for(disc)
                    if not allow_extension:
                        raise ExtensionDegreeTooHigh(
                            "needs a quadratic extension")
                    return [], ext
                r1 = (-m1 + root) / 2
                r2 = (-m1 - root) / 2
                inv = one / _coerce(alg, r1 - r2)
                e1 = vec_scale(
                    vec_axpy(zc, -_coerce(alg, r2), f), inv)
                e2 = vec_axpy(f, -one, e1)
                pending.extend([e1, e2])
                progress = True
                break
        if not progress:
            raise SplittingFailed(
                f"no degree-<=2 splitter for a {corner_dim}-block corner")
    return done, None


def _coerce(alg, c: RatFunc) -> Scalar:
    one = one_scalar_of(alg)
    if isinstance(one, QuadExt):
        return QuadExt.of(c, one.config)
    return c


def _extension_for(disc: RatFunc) -> FieldConfig:
    """FieldConfig adjoining sqrt(disc), with square content removed.

    Even powers of s in the discriminant only rescale the generator by
    powers of q^{1/2}, so square content and even s-shifts are stripped.
    """
    core = _squarefree_kernel(disc.num) * _squarefree_kernel(disc.den)
    v = core.val()
    d = core.shift(-(v - v % 2))
    if d.val() % 2 or d.deg() % 2:
        raise ExtensionDegreeTooHigh("discriminant generator is not s-graded")
    if d.leading() < 0:
        d = d.scale(-1)
    # bar twist m with d.bar() == d.shift(4m); requires shifted palindromy
    if (d.deg() + d.val()) % 4:
        d = d.shift(2)
    m = -(d.deg() + d.val()) // 4
    fc = FieldConfig(disc=d, bar_twist=m)
    fc.check()
    return fc


def _squarefree_kernel(p: Laurent) -> Laurent:
    """Monic product of the irreducible factors of p of odd multiplicity."""
    p = p.shift(-p.val())
    p = p.scale(1 / p.leading())
    if p.deg() == 0:
        return Laurent.const(1)
    # Yun decomposition p = prod a_i^i with the a_i squarefree and coprime
    dp = _derivative(p)
    g = poly_gcd(p, dp)
    if g.deg() == 0:
        return p
    c = laurent_divexact(p, g)
    d = laurent_divexact(dp, g) - _derivative(c)
    kernel = Laurent.const(1)
    i = 1
    while c.deg() > 0:
        a = poly_gcd(c, d)
        if i % 2:
            kernel = kernel * a
        c = laurent_divexact(c, a)
        d = laurent_divexact(d, a) - _derivative(c)
        i += 1
    return kernel


def _derivative(p: Laurent) -> Laurent:
    return Laurent({k - 1: c * k for k, c in p.terms.items() if k})


# ---------------------------------------------------------------------------
# level decomposition
# ---------------------------------------------------------------------------

class NeedsExtension(QcanonError):
    def __init__(self, fc: FieldConfig):
        super().__init__("quadratic extension required")
        self.fc = fc


def _level_span(alg, gen_indices: list[int]) -> list[Vec]:
    """Basis (top coordinates) of the unital span of words in the given gens."""
    one = one_scalar_of(alg)
    tracker = SpanTracker(one, key_sort=lambda k: k)
    unit = alg.unit_coords()
    tracker.insert(unit)
    basis = [unit]
    frontier = [unit]
    while frontier:
        grew = []
        for v in frontier:
            for gi in gen_indices:
                g = alg.gen_coords("P", gi)
                w = alg.mult_vec(v, g)
                new, _ = tracker.insert(w)
                if new:
                    basis.append(w)
                    grew.append(w)
        frontier = grew
    return basis


def _solve_in_span(alg, basis: list[Vec], conditions) -> list[Vec]:
    """Vectors x in span(basis) with conditions(x) == 0.

    conditions maps a basis vector to a list of top-coordinate vectors that
    must vanish; returns a basis of solutions in top coordinates.
    """
    one = one_scalar_of(alg)
    rows: dict[tuple, Vec] = {}
    for j, b in enumerate(basis):
        for ci, cond_vec in enumerate(conditions(b)):
            for k, c in cond_vec.items():
                rows.setdefault((ci, k), {})[j] = c
    ns = nullspace(list(rows.values()), list(range(len(basis))), one)
    out = []
    for combo in ns:
        vec: Vec = {}
        for j, c in combo.items():
            vec = vec_axpy(vec, c, basis[j])
        out.append(vec)
    return out


def _character_idempotents(alg, basis: list[Vec], gen_indices: list[int]) -> list[tuple[str, Vec]]:
    """Central idempotents of all one-dimensional blocks of the level."""
    lam = alg.scale if not isinstance(one_scalar_of(alg), QuadExt) \
        else lift_scalar(alg.scale, one_scalar_of(alg).config)
    zero = lam - lam
    out = []
    for bits in itertools.product([zero, lam], repeat=len(gen_indices)):
        def conds(b, bits=bits):
            cs = []
            for v, gi in zip(bits, gen_indices):
                g = alg.gen_coords("P", gi)
                cs.append(vec_axpy(alg.mult_vec(g, b), -v, b))
                cs.append(vec_axpy(alg.mult_vec(b, g), -v, b))
            return cs
        sols = _solve_in_span(alg, basis, conds)
        if not sols:
            continue
        if len(sols) > 1:
            raise NotSemisimple("repeated one-dimensional character")
        x = sols[0]
        sq = alg.mult_vec(x, x)
        c = _proportionality(sq, x)
        if c is None or not c:
            raise NotSemisimple("character vector is not split")
        eps = vec_scale(x, one_scalar_of(alg) / c)
        tag = "".join("1" if v else "0" for v in bits)
        out.append((tag, eps))
    return out


def _proportionality(a: Vec, b: Vec):
    if not a:
        return None if not b else None
    k = next(iter(b))
    if k not in a:
        return None
    f = a[k] / b[k]
    return f if vec_scale(b, f) == a else None


def _center(alg, basis: list[Vec], gen_indices: list[int]) -> list[Vec]:
    def conds(b):
        cs = []
        for gi in gen_indices:
            g = alg.gen_coords("P", gi)
            cs.append(vec_axpy(alg.mult_vec(g, b), -one_scalar_of(alg),
                               alg.mult_vec(b, g)))
        return cs
    return _solve_in_span(alg, basis, conds)


def _corner_rank(alg, basis: list[Vec], e: Vec, f: Vec) -> int:
    one = one_scalar_of(alg)
    tracker = SpanTracker(one, key_sort=lambda k: k)
    for b in basis:
        tracker.insert(alg.mult_vec(alg.mult_vec(e, b), f))
    return tracker.rank()


def _corner_basis(alg, basis: list[Vec], e: Vec, f: Vec) -> list[Vec]:
    one = one_scalar_of(alg)
    tracker = SpanTracker(one, key_sort=lambda k: k)
    out = []
    for b in basis:
        v = alg.mult_vec(alg.mult_vec(e, b), f)
        new, _ = tracker.insert(v)
        if new:
            out.append(v)
    return out


def _isqrt_exact(n: int) -> int:
    from math import isqrt
    r = isqrt(n)
    if r * r != n:
        raise NotSemisimple(f"block dimension {n} is not a square")
    return r


def decompose_level(alg, gen_indices: list[int], prev: "Level | None",
                    allow_extension: bool) -> Level:
    basis = _level_span(alg, gen_indices)
    one = one_scalar_of(alg)
    unit = alg.unit_coords()

    chars = _character_idempotents(alg, basis, gen_indices)
    rest = unit
    for _, eps in chars:
        rest = vec_axpy(rest, -one, eps)
    centrals: list[tuple[str, Vec]] = list(chars)
    if rest:
        center = _center(alg, basis, gen_indices)
        split, ext = split_idempotent(alg, rest, center, allow_extension)
        if ext is not None:
            raise NeedsExtension(ext)
        for i, eps in enumerate(split):
            centrals.append((None, eps))

    # deterministic block order: by dim, then serialized idempotent
    pre_blocks = []
    for tag, eps in centrals:
        d2 = _corner_rank(alg, basis, eps, eps)
        d = _isqrt_exact(d2)
        pre_blocks.append((d, _vec_key(eps), tag, eps))
    pre_blocks.sort(key=lambda t: (t[0], t[1]))
    if sum(d * d for d, *_ in pre_blocks) != len(basis):
        raise NotSemisimple("block dimensions do not fill the level")

    level_idx = len(gen_indices) + 1
    blocks: list[Block] = []
    for bi, (d, _, tag, eps) in enumerate(pre_blocks):
        label = f"r{level_idx}.{bi}" + (f"[{tag}]" if tag else "")
        blocks.append(Block(label, d, eps, [], {}, {}))

    # matrix units through the previous level's diagonal units
    for blk in blocks:
        restriction: dict[str, int] = {}
        diag: list[tuple[Chain, Vec]] = []
        if prev is None:
            diag.append(((), blk.central))
        else:
            for pblk in prev.blocks:
                m_mult = None
                for chain in pblk.tableaux:
                    f = pblk.units[(chain, chain)]
                    g = alg.mult_vec(blk.central, f)
                    if not g:
                        m_here = 0
                    else:
                        m_here = _isqrt_exact(_corner_rank(alg, basis, g, g))
                    if m_mult is None:
                        m_mult = m_here
                        if m_here:
                            restriction[pblk.label] = m_here
                    elif m_here != m_mult:
                        raise NotSemisimple("restriction multiplicity varies")
                    if not m_here:
                        continue
                    if m_here == 1:
                        diag.append(((blk.label,) + chain, g))
                    else:
                        # tie-break: split the rank-m idempotent inside its
                        # corner by the commutative machinery on corner
                        # elements; copies ordered by earliest pivot
                        corner = _corner_basis(alg, basis, g, g)
                        parts, ext = split_idempotent(
                            alg, g, corner, allow_extension)
                        if ext is not None:
                            raise NeedsExtension(ext)
                        parts.sort(key=_vec_key)
                        for ci, part in enumerate(parts):
                            diag.append(
                                ((blk.label,) + chain + (f"copy{ci}",), part))
        if len(diag) != blk.dim:
            raise NotSemisimple(
                f"{blk.label}: {len(diag)} diagonal units for dim {blk.dim}")
        acc: Vec = {}
        for _, g in diag:
            acc = vec_axpy(acc, one, g)
        if acc != blk.central:
            raise NotSemisimple("diagonal units do not sum to the center")
        blk.tableaux = [chain for chain, _ in diag]
        blk.restriction = restriction
        units: dict[tuple[Chain, Chain], Vec] = {}
        for chain, g in diag:
            units[(chain, chain)] = g
        t0, g0 = diag[0]
        for chain, g in diag[1:]:
            u = _corner_basis(alg, basis, g0, g)
            w = _corner_basis(alg, basis, g, g0)
            if len(u) != 1 or len(w) != 1:
                raise NotSemisimple("off-diagonal corner is not a line")
            u, w = _pivot_normalize(u[0]), w[0]
            c = _proportionality(alg.mult_vec(u, w), g0)
            if c is None or not c:
                raise NotSemisimple("matrix unit normalization failed")
            units[(t0, chain)] = u
            units[(chain, t0)] = vec_scale(w, one / c)
        for s_chain, _ in diag[1:]:
            for t_chain, _ in diag[1:]:
                if s_chain == t_chain:
                    continue
                units[(s_chain, t_chain)] = alg.mult_vec(
                    units[(s_chain, t0)], units[(t0, t_chain)])
        blk.units = units
    return Level(list(gen_indices), basis, blocks)


def _pivot_normalize(v: Vec) -> Vec:
    piv = min(v)
    return vec_scale(v, ONE / v[piv] if not isinstance(v[piv], QuadExt)
                     else QuadExt.of(1, v[piv].config) / v[piv])


def _vec_key(v: Vec) -> str:
    from .scalars import format_scalar
    return "|".join(f"{k}:{format_scalar(c)}" for k, c in sorted(v.items()))


def decompose_chain(alg, allow_extension: bool = True) -> tuple[object, list[Level]]:
    """GT chain decomposition of the levels B_1 < B_2 < ... < B_r.

    Level j is generated by the last j-1 generators.  Returns the (possibly
    extension-lifted) algebra together with the levels, coarsest first.
    """
    current = alg
    for attempt in range(2):
        try:
            levels: list[Level] = []
            prev = None
            n = current.n_gens
            for j in range(n + 1):
                gen_indices = list(range(n - j + 1, n + 1))
                level = decompose_level(current, gen_indices, prev,
                                        allow_extension and attempt == 0)
                levels.append(level)
                prev = level
            return current, levels
        except NeedsExtension as ne:
            if attempt == 1:
                raise ExtensionDegreeTooHigh("second extension requested")
            current = ExtendedAlgebra(alg, ne.fc)
    raise ExtensionDegreeTooHigh("unreachable")


# ---------------------------------------------------------------------------
# spec-level wrappers
# ---------------------------------------------------------------------------

@dataclass
class IrrepInfo:
    label: str
    dim: int
    matrices: dict[str, list[list[Scalar]]]  # generator tag -> d x d matrix
    restriction: dict[str, int]


def wedderburn(alg, allow_extension: bool = True) -> tuple[object, list[IrrepInfo], list[Level]]:
    """Irreducible blocks of the top level, with generator matrices."""
    lifted, levels = decompose_chain(alg, allow_extension)
    top = levels[-1]
    infos = []
    for blk in top.blocks:
        mats: dict[str, list[list[Scalar]]] = {}
        for gi in range(1, lifted.n_gens + 1):
            g = lifted.gen_coords("P", gi)
            mats[f"P{gi}"] = block_matrix(lifted, blk, g)
        infos.append(IrrepInfo(blk.label, blk.dim, mats, dict(blk.restriction)))
    if sum(i.dim ** 2 for i in infos) != lifted.dim:
        raise NotSemisimple("sum of squared block dimensions misses the dim")
    return lifted, infos, levels


def block_matrix(alg, blk: Block, x: Vec) -> list[list[Scalar]]:
    """Matrix of x acting in blk's representation, rows/cols by tableaux."""
    one = one_scalar_of(alg)
    zero = one - one
    d = blk.dim
    out = [[zero for _ in range(d)] for _ in range(d)]
    for i, s_chain in enumerate(blk.tableaux):
        for j, t_chain in enumerate(blk.tableaux):
            v = alg.mult_vec(
                alg.mult_vec(blk.units[(s_chain, s_chain)], x),
                blk.units[(t_chain, t_chain)])
            if not v:
                continue
            c = _proportionality(v, blk.units[(s_chain, t_chain)])
            if c is None:
                raise NotSemisimple("element does not act block-diagonally")
            out[i][j] = c
    return out


def branch(levels: list[Level], level_idx: int, label: str) -> list[tuple[str, int]]:
    """Restriction decomposition of one block to the previous level."""
    blk = next(b for b in levels[level_idx].blocks if b.label == label)
    return sorted(blk.restriction.items())


def gt_basis(levels: list[Level]) -> list[tuple[tuple[Chain, Chain], Vec]]:
    """Matrix-unit basis of the full algebra indexed by chain pairs."""
    top = levels[-1]
    out = []
    for blk in top.blocks:
        for s_chain in blk.tableaux:
            for t_chain in blk.tableaux:
                out.append(((s_chain, t_chain), blk.units[(s_chain, t_chain)]))
    return out
