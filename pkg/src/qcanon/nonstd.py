"""Construction of the deformed symmetric-group algebras B_r(q).

Two realization paths share one algebra interface:

  * GeneratedAlgebra -- closure of idempotent-pair generators P_i / Q_i
    inside an ambient algebra (a Hecke tensor square for the Kronecker case,
    or a matrix algebra for commutant constructions).  The basis is
    enumerated breadth-first over generator words in no-consecutive-repeat
    normal form with exact Gaussian elimination.

  * PresentedAlgebra -- ingested from an external structure-constant
    presentation file.

Both expose dimension, word labels, products and bar in basis coordinates,
generator coordinate vectors, the scale lambda, and the field configuration;
everything downstream (Wedderburn splitting, canonical bases, cells) is
written against that surface.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable

from .errors import (
    CalibrationFailed,
    LengthBudgetExceeded,
    ParseError,
    QcanonError,
)
from .hecke import (
    HeckeTensor,
    minus_idempotent,
    plus_idempotent,
)
from .linalg import SpanTracker, Vec, vec_axpy, vec_scale
from .scalars import (
    FieldConfig,
    Laurent,
    ONE,
    PLAIN_FIELD,
    QuadExt,
    RatFunc,
    Scalar,
    format_scalar,
    parse_scalar,
    q_poly,
    qp,
    sp,
)

Word = tuple[int, ...]


def word_label(w: Word) -> str:
    return "".join(str(i) for i in w) if w else "e"


def normal_words(n_gens: int, max_len: int) -> list[Word]:
    """All words over 1..n_gens with no consecutive repeats, by (len, lex)."""
    out: list[Word] = [()]
    frontier: list[Word] = [()]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for i in range(1, n_gens + 1):
                if w and w[-1] == i:
                    continue
                nxt.append(w + (i,))
        nxt.sort()
        out.extend(nxt)
        frontier = nxt
    return out


# ---------------------------------------------------------------------------
# generator sets
# ---------------------------------------------------------------------------

@dataclass
class GeneratorSet:
    """Rescaled idempotent-pair generators with P_i + Q_i = scale * 1."""

    P: list[Vec]
    Q: list[Vec]
    scale: Scalar

    def validate(self, mult: Callable[[Vec, Vec], Vec], one: Vec,
                 bar: Callable[[Vec], Vec] | None = None) -> None:
        lam = self.scale
        for p, q in zip(self.P, self.Q):
            if vec_axpy(p, ONE, q) != vec_scale(one, lam):
                raise QcanonError("P_i + Q_i != scale * 1")
            if mult(p, q) or mult(q, p):
                raise QcanonError("P_i Q_i != 0")
            if mult(p, p) != vec_scale(p, lam):
                raise QcanonError("P_i^2 != scale * P_i")
            if bar is not None and (bar(p) != p or bar(q) != q):
                raise QcanonError("generators not bar-invariant")


def build_kronecker_generators(n: int, r: int,
                               scale: Scalar | None = None) -> tuple[HeckeTensor, GeneratorSet]:
    """P_i / Q_i in H_r(q) x H_r(q) for the two-general-linear-factor case.

    P_i = scale * (e_i^+ x e_i^+ + e_i^- x e_i^-),
    Q_i = scale * (e_i^+ x e_i^- + e_i^- x e_i^+).
    The default scale is the calibrated (q^{1/2} + q^{-1/2})^2.
    """
    if n < 2 or r < 2:
        raise QcanonError("need n >= 2 and r >= 2")
    if scale is None:
        scale = default_scale()
    z = HeckeTensor((r, r))
    P, Qs = [], []
    for i in range(1, r):
        ep = plus_idempotent(r, i)
        em = minus_idempotent(r, i)
        pp = _tensor2(ep, ep)
        mm = _tensor2(em, em)
        pm = _tensor2(ep, em)
        mp = _tensor2(em, ep)
        P.append(vec_scale(vec_axpy(pp, ONE, mm), scale))
        Qs.append(vec_scale(vec_axpy(pm, ONE, mp), scale))
    gens = GeneratorSet(P, Qs, scale)
    gens.validate(z.mult, z.one(), z.bar)
    return z, gens


def _tensor2(u: Vec, v: Vec) -> Vec:
    return {(ku, kv): cu * cv for ku, cu in u.items() for kv, cv in v.items()}


def default_scale() -> RatFunc:
    return (sp(1) + sp(-1)) ** 2


def calibrate_scale(max_power: int = 4) -> RatFunc:
    """Determine the generator scale from the published rank-3 reference.

    Candidates are the bar-invariant powers (q^{1/2}+q^{-1/2})^a, 0 <= a <=
    max_power.  A candidate is accepted when (a) the generators lie in the
    Laurent form of the ambient Hecke tensor square, (b) the two 2x2-block
    constants c with P_1 P_2 P_1 = c P_1 are the roots of t^2 - c2 t + c1
    for the published c1, c2 (equivalently, the published top-cell element
    c1 P_1 - c2 P_121 + P_12121 kills both two-dimensional blocks), and (c)
    a cell element built from those constants reproduces the published
    top KL-table entry (q^2+q+1)(1+q)^4/q^3 in the signed symmetrized KL
    basis.  Raises CalibrationFailed with a per-candidate report otherwise.
    """
    c1 = q_poly((1, 6), (2, 5), (3, 4), (4, 3), (3, 2), (2, 1), (1, 0)) / qp(1, 3)
    c2 = q_poly((1, 4), (1, 3), (4, 2), (1, 1), (1, 0)) / qp(1, 2)
    target = q_poly((1, 2), (1, 1), (1, 0)) * (1 + qp(1, 1)) ** 4 / qp(1, 3)
    report = []
    for a in range(max_power + 1):
        lam = (sp(1) + sp(-1)) ** a
        z, gens = _kronecker_unchecked(3, lam)
        p1, p2 = gens.P
        if not all(c.is_laurent() for c in p1.values()):
            report.append(f"a={a}: generators leave the Laurent form")
            continue
        p121 = z.mult(z.mult(p1, p2), p1)
        p12121 = z.mult(p121, z.mult(p2, p1))
        sig = vec_axpy(vec_axpy(vec_scale(p1, c1), -c2, p121), ONE, p12121)
        # (b): sig kills both 2x2 blocks (and acts by zero in the block
        # where all generators vanish), so it is supported on the top block
        # alone and must be a quasi-idempotent: sig^2 proportional to sig
        prop = _proportional(z.mult(sig, sig), sig)
        if prop is None:
            report.append(f"a={a}: published c1, c2 do not kill the 2x2 blocks")
            continue
        from .hecke import expand_in_symmetrized_kl
        cA, cB = _corner_constants(z, p1, p2, lam)
        hit = False
        for c in (cA, cB):
            gamma = vec_axpy(vec_scale(p1, -c), ONE, p121)
            ex = expand_in_symmetrized_kl(z, gamma)
            vals = {
                format_scalar(v if z.total_length(k) % 2 == 0 else -v)
                for k, v in ex.items()
            }
            if format_scalar(target) in vals:
                hit = True
                break
        if not hit:
            report.append(f"a={a}: KL table entry not reproduced")
            continue
        return lam
    raise CalibrationFailed("; ".join(report))


def _kronecker_unchecked(r: int, scale: Scalar) -> tuple[HeckeTensor, GeneratorSet]:
    z = HeckeTensor((r, r))
    P, Qs = [], []
    for i in range(1, r):
        ep = plus_idempotent(r, i)
        em = minus_idempotent(r, i)
        P.append(vec_scale(vec_axpy(_tensor2(ep, ep), ONE, _tensor2(em, em)), scale))
        Qs.append(vec_scale(vec_axpy(_tensor2(ep, em), ONE, _tensor2(em, ep)), scale))
    return z, GeneratorSet(P, Qs, scale)


def _proportional(a: Vec, b: Vec) -> Scalar | None:
    if not a:
        return RatFunc.const(0)
    if set(a) - set(b):
        return None
    k = next(iter(a))
    f = a[k] / b[k]
    return f if vec_scale(b, f) == a else None


def _corner_constants(z, p1, p2, lam):
    """The two 2x2-block constants c with P1 P2 P1 = c P1 in the block."""
    p121 = z.mult(z.mult(p1, p2), p1)
    p12121 = z.mult(p121, z.mult(p2, p1))
    p1212121 = z.mult(p12121, z.mult(p2, p1))
    tr = SpanTracker(ONE, key_sort=z.sort_key)
    tr.insert(p1)
    tr.insert(p121)
    tr.insert(p12121)
    combo = tr.expand(p1212121)
    if combo is None:
        raise CalibrationFailed("corner not closed")
    c0 = combo.get(0, RatFunc.const(0))
    c1_ = combo.get(1, RatFunc.const(0))
    c2_ = combo.get(2, RatFunc.const(0))
    # mult-by-P121 eigenvalues t on the corner solve
    # t^3 - lam c2 t^2 - lam^2 c1 t - lam^3 c0 = 0 with the top root lam^3
    a2 = lam * c2_
    a1 = lam * lam * c1_
    a0 = lam ** 3 * c0
    top = lam ** 3
    if top ** 3 - a2 * top ** 2 - a1 * top - a0:
        raise CalibrationFailed("top block eigenvalue missing")
    # t^3 - a2 t^2 - a1 t - a0 = (t - lam^3)(t^2 + b t + c)
    b = lam ** 3 - a2
    c = a0 / lam ** 3
    disc = b * b - 4 * c
    from .scalars import ratfunc_sqrt
    r = ratfunc_sqrt(disc)
    if r is None:
        raise CalibrationFailed("block constants not rational")
    tA = (-b + r) / 2
    tB = (-b - r) / 2
    return tA / lam, tB / lam


# ---------------------------------------------------------------------------
# generated algebras (closure in an ambient algebra)
# ---------------------------------------------------------------------------

class GeneratedAlgebra:
    """Unital subalgebra generated by P_i (or Q_i) words inside an ambient.

    ambient must provide mult(a, b) and a deterministic sort key for basis
    keys; bar is optional (None for matrix ambients without a bar).
    """

    def __init__(self, ambient_mult, ambient_one: Vec, gens: GeneratorSet,
                 key_sort, ambient_bar=None, max_word_len: int = 12,
                 side: str = "P", field: FieldConfig = PLAIN_FIELD,
                 one_scalar: Scalar = ONE):
        self.ambient_mult = ambient_mult
        self.ambient_bar = ambient_bar
        self.gens = gens
        self.field = field
        self.scale = gens.scale
        self.one_scalar = one_scalar
        self.side = side
        gen_list = gens.P if side == "P" else gens.Q
        self.n_gens = len(gen_list)
        tracker = SpanTracker(one_scalar, key_sort=key_sort)
        tracker.insert(ambient_one)
        words: list[Word] = [()]
        elements: dict[Word, Vec] = {(): ambient_one}
        frontier: list[Word] = [()]
        while frontier:
            grew = []
            for w in sorted(frontier):
                for i in range(1, self.n_gens + 1):
                    if w and w[-1] == i:
                        continue
                    if len(w) + 1 > max_word_len:
                        raise LengthBudgetExceeded(
                            f"closure open beyond length {max_word_len}")
                    elem = ambient_mult(elements[w], gen_list[i - 1])
                    new, _ = tracker.insert(elem)
                    if new:
                        nw = w + (i,)
                        words.append(nw)
                        elements[nw] = elem
                        grew.append(nw)
            frontier = grew
        self.words = words
        self.elements = elements
        self.tracker = tracker
        self.dim = tracker.rank()
        self.labels = [word_label(w) for w in words]
        self._mult_table: dict[tuple[int, int], Vec] = {}
        self._bar_table: dict[int, Vec] = {}
        self._gen_coords: dict[tuple[str, int], Vec] = {}

    # -- coordinates -----------------------------------------------------------

    def ambient_vec(self, i: int) -> Vec:
        return self.elements[self.words[i]]

    def coords_of_ambient(self, vec: Vec) -> Vec | None:
        return self.tracker.expand(vec)

    def unit_coords(self) -> Vec:
        return {0: self.one_scalar}

    def to_ambient(self, coords: Vec) -> Vec:
        out: Vec = {}
        for i, c in coords.items():
            out = vec_axpy(out, c, self.ambient_vec(i))
        return out

    # -- algebra operations in coordinates --------------------------------------

    def mult_basis(self, i: int, j: int) -> Vec:
        memo = self._mult_table.get((i, j))
        if memo is None:
            prod = self.ambient_mult(self.ambient_vec(i), self.ambient_vec(j))
            memo = self.tracker.expand(prod)
            if memo is None:
                raise QcanonError("closure not multiplicatively closed")
            self._mult_table[(i, j)] = memo
        return memo

    def mult_vec(self, u: Vec, v: Vec) -> Vec:
        out: Vec = {}
        for i, ci in u.items():
            for j, cj in v.items():
                out = vec_axpy(out, ci * cj, self.mult_basis(i, j))
        return out

    def bar_basis(self, i: int) -> Vec:
        if self.ambient_bar is None:
            raise QcanonError("ambient has no bar involution")
        memo = self._bar_table.get(i)
        if memo is None:
            memo = self.tracker.expand(self.ambient_bar(self.ambient_vec(i)))
            if memo is None:
                raise QcanonError("bar leaves the span")
            self._bar_table[i] = memo
        return memo

    def bar_vec(self, u: Vec) -> Vec:
        out: Vec = {}
        for i, c in u.items():
            out = vec_axpy(out, c.bar(), self.bar_basis(i))
        return out

    def gen_coords(self, side: str, i: int) -> Vec:
        memo = self._gen_coords.get((side, i))
        if memo is None:
            vec = (self.gens.P if side == "P" else self.gens.Q)[i - 1]
            memo = self.tracker.expand(vec)
            if memo is None:
                raise QcanonError("generator outside the enumerated span")
            self._gen_coords[(side, i)] = memo
        return memo


def kronecker_algebra(n: int, r: int, scale: Scalar | None = None,
                      side: str = "P", max_word_len: int = 12):
    z, gens = build_kronecker_generators(n, r, scale)
    alg = GeneratedAlgebra(z.mult, z.one(), gens, z.sort_key,
                           ambient_bar=z.bar, max_word_len=max_word_len,
                           side=side)
    alg.ambient = z
    alg.kind = ("kronecker", n, r)
    return alg


# ---------------------------------------------------------------------------
# presented algebras
# ---------------------------------------------------------------------------

class PresentedAlgebra:
    """Algebra given by structure constants over a labeled basis."""

    def __init__(self, labels: list[str], mult_table: dict[tuple[int, int], Vec],
                 bar_table: dict[int, Vec], gen_P: list[int], gen_Q: list[int],
                 scale: Scalar, field: FieldConfig = PLAIN_FIELD,
                 highest_weights: dict[str, tuple] | None = None):
        self.labels = labels
        self.dim = len(labels)
        self.words = [self._word_of(lbl) for lbl in labels]
        self._mult_table = mult_table
        self._bar_table = bar_table
        self.gen_P = gen_P
        self.gen_Q = gen_Q
        self.n_gens = len(gen_P)
        self.scale = scale
        self.field = field
        self.one_scalar = (QuadExt.of(1, field) if field.disc is not None
                           else ONE)
        self.highest_weights = highest_weights or {}
        self._unit_index = next(
            i for i, w in enumerate(self.words) if w == ())

    @staticmethod
    def _word_of(lbl: str) -> Word:
        if lbl == "e":
            return ()
        if re.fullmatch(r"[0-9]+", lbl):
            return tuple(int(c) for c in lbl)
        return (lbl,)  # opaque label

    def unit_coords(self) -> Vec:
        return {self._unit_index: self.one_scalar}

    def mult_basis(self, i: int, j: int) -> Vec:
        return self._mult_table.get((i, j), {})

    def mult_vec(self, u: Vec, v: Vec) -> Vec:
        out: Vec = {}
        for i, ci in u.items():
            for j, cj in v.items():
                out = vec_axpy(out, ci * cj, self.mult_basis(i, j))
        return out

    def bar_basis(self, i: int) -> Vec:
        return self._bar_table.get(i, {i: self.one_scalar})

    def bar_vec(self, u: Vec) -> Vec:
        out: Vec = {}
        for i, c in u.items():
            out = vec_axpy(out, c.bar(), self.bar_basis(i))
        return out

    def gen_coords(self, side: str, i: int) -> Vec:
        idx = (self.gen_P if side == "P" else self.gen_Q)[i - 1]
        return {idx: self.one_scalar}

    def spot_check(self) -> None:
        """Associativity and bar-consistency on a deterministic sample."""
        import itertools
        n = self.dim
        sample = list(range(min(n, 4)))
        for i, j, k in itertools.product(sample, repeat=3):
            lhs = self.mult_vec(self.mult_basis(i, j), {k: self.one_scalar})
            rhs = self.mult_vec({i: self.one_scalar}, self.mult_basis(j, k))
            if lhs != rhs:
                raise QcanonError(f"associativity fails at ({i},{j},{k})")
        for i in sample:
            if self.bar_vec(self.bar_basis(i)) != {i: self.one_scalar}:
                raise QcanonError(f"bar not involutive at {i}")


# -- presentation file grammar ------------------------------------------------

def format_presentation(alg) -> str:
    """Serialize an algebra (with full mult/bar tables) to presentation text."""
    lines = [f"dim {alg.dim}"]
    fc = alg.field
    if fc.disc is None:
        lines.append("field disc=none")
    else:
        from .scalars import format_laurent
        lines.append(f"field disc={format_laurent(fc.disc)} ; twist={fc.bar_twist}")
    lines.append(f"scale {format_scalar(alg.scale)}")
    for i, lbl in enumerate(alg.labels):
        lines.append(f"label {i} {lbl}")
    for i in range(alg.dim):
        for j in range(alg.dim):
            row = alg.mult_basis(i, j)
            body = " ; ".join(
                f"{k}: {format_scalar(row[k])}" for k in sorted(row))
            lines.append(f"mul {i} {j} -> {body}")
    for i in range(alg.dim):
        row = alg.bar_basis(i)
        body = " ; ".join(f"{k}: {format_scalar(row[k])}" for k in sorted(row))
        lines.append(f"bar {i} -> {body}")
    for m in range(1, alg.n_gens + 1):
        pi = alg.gen_coords("P", m)
        qi = alg.gen_coords("Q", m)
        (pk,) = pi.keys()
        (qk,) = qi.keys()
        lines.append(f"gen P {m} -> {pk}")
        lines.append(f"gen Q {m} -> {qk}")
    hw = getattr(alg, "highest_weights", None) or {}
    for lbl in sorted(hw):
        flat = " ".join(",".join(str(x) for x in part) for part in hw[lbl])
        lines.append(f"hw {lbl} -> {flat}")
    return "\n".join(lines) + "\n"


def parse_presentation(text: str) -> PresentedAlgebra:
    dim = None
    fc = PLAIN_FIELD
    scale = None
    labels: dict[int, str] = {}
    mult: dict[tuple[int, int], Vec] = {}
    bar: dict[int, Vec] = {}
    gen_P: dict[int, int] = {}
    gen_Q: dict[int, int] = {}
    hw: dict[str, tuple] = {}

    def parse_entries(body: str) -> Vec:
        out: Vec = {}
        body = body.strip()
        if not body:
            return out
        for seg in body.split(" ; "):
            k, _, sv = seg.partition(":")
            out[int(k)] = parse_scalar(sv.strip(), fc)
        return out

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("dim "):
                dim = int(line[4:])
            elif line.startswith("field "):
                body = line[6:]
                if body.strip() == "disc=none":
                    fc = PLAIN_FIELD
                else:
                    m = re.match(r"disc=(.*?) ; twist=(-?\d+)$", body)
                    if not m:
                        raise ParseError(f"bad field line: {line!r}")
                    from .scalars import parse_laurent
                    fc = FieldConfig(disc=parse_laurent(m.group(1)),
                                     bar_twist=int(m.group(2)))
            elif line.startswith("scale "):
                scale = parse_scalar(line[6:], fc)
            elif line.startswith("label "):
                _, i, lbl = line.split(None, 2)
                labels[int(i)] = lbl
            elif line.startswith("mul "):
                head, _, body = line.partition("->")
                _, i, j = head.split()
                mult[(int(i), int(j))] = parse_entries(body)
            elif line.startswith("bar "):
                head, _, body = line.partition("->")
                _, i = head.split()
                bar[int(i)] = parse_entries(body)
            elif line.startswith("gen "):
                m = re.match(r"gen ([PQ]) (\d+) -> (\d+)$", line)
                if not m:
                    raise ParseError(f"bad gen line: {line!r}")
                target = gen_P if m.group(1) == "P" else gen_Q
                target[int(m.group(2))] = int(m.group(3))
            elif line.startswith("hw "):
                head, _, body = line.partition("->")
                lbl = head.split(None, 1)[1].strip()
                hw[lbl] = tuple(
                    tuple(int(x) for x in part.split(","))
                    for part in body.split())
            else:
                raise ParseError(f"unknown line: {line!r}")
        except ParseError:
            raise
        except Exception as exc:
            raise ParseError(f"cannot parse {line!r}: {exc}") from exc
    if dim is None or scale is None or len(labels) != dim:
        raise ParseError("incomplete presentation header")
    alg = PresentedAlgebra(
        [labels[i] for i in range(dim)], mult, bar,
        [gen_P[k] for k in sorted(gen_P)], [gen_Q[k] for k in sorted(gen_Q)],
        scale, fc, hw)
    alg.spot_check()
    return alg
