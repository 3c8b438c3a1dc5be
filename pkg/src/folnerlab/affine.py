"""Exact model of the positive affine group ax+b in logarithmic coordinates.

A group element is (a, b) with a > 0, acting on the line by s -> a s + b and
multiplying by (a, b)(a', b') = (a a', a b' + b).  The chart used throughout
is (u, t) = (log2 a, b / a), in which

* left Haar measure (a^-2 da db up to scale) becomes plain Lebesgue area,
  so areas of rational rectangles are exact rationals;
* left translation by a dyadic dilation (2^k, 0) is the shift u -> u + k;
* right translation by (2^k, 0) is u -> u + k, t -> t 2^-k, scaling area by
  the modular value Delta(2^k, 0) = 2^-k (Delta(a, b) = 1/a).

Scales are restricted to powers of two exactly so these set maps stay
rational.  Left translations with b != 0 shear columns by t -> t + b 2^-u
and are handled only inside closed-form invariance integrals, evaluated in
floating point with a stated tolerance and a x2 safety margin.

Regions are finite unions of disjoint half-open rectangles
[u1,u2) x [t1,t2) with rational endpoints (``RectUnion``); boolean
operations stay exact because rectangles are closed under intersection and
rectangle difference splits into at most four rectangles.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import CertificateError, ConfigError, PreconditionError
from .rationals import rat, rat_str

# ---------------------------------------------------------------------------
# group elements


@dataclass(frozen=True)
class AffElement:
    """An affine map s -> a s + b with exact rational a > 0, b."""

    a: Fraction
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "a", rat(self.a))
        object.__setattr__(self, "b", rat(self.b))
        if self.a <= 0:
            raise ConfigError(f"affine scale must be positive, got {self.a}")

    def mul(self, other: "AffElement") -> "AffElement":
        return AffElement(self.a * other.a, self.a * other.b + self.b)

    def inv(self) -> "AffElement":
        return AffElement(1 / self.a, -self.b / self.a)

    @property
    def modular(self) -> Fraction:
        """Delta(a, b) = 1/a: right translation scales left Haar by this."""
        return 1 / self.a

    def dyadic_exponent(self) -> Optional[int]:
        """k with self = (2^k, 0), or None if not a dyadic dilation."""
        if self.b != 0:
            return None
        num, den = self.a.numerator, self.a.denominator
        if den == 1 and num & (num - 1) == 0:
            return num.bit_length() - 1
        if num == 1 and den & (den - 1) == 0:
            return -(den.bit_length() - 1)
        return None

    def to_json(self) -> dict:
        return {"a": rat_str(self.a), "b": rat_str(self.b)}


AFF_IDENTITY = AffElement(Fraction(1), Fraction(0))


def dilation(k: int) -> AffElement:
    return AffElement(Fraction(2) ** k, Fraction(0))


# ---------------------------------------------------------------------------
# rectangle unions


@dataclass(frozen=True)
class Rect:
    u1: Fraction
    u2: Fraction
    t1: Fraction
    t2: Fraction

    def __post_init__(self):
        for name in ("u1", "u2", "t1", "t2"):
            object.__setattr__(self, name, rat(getattr(self, name)))

    @property
    def area(self) -> Fraction:
        return (self.u2 - self.u1) * (self.t2 - self.t1)

    @property
    def empty(self) -> bool:
        return self.u2 <= self.u1 or self.t2 <= self.t1

    def intersect(self, other: "Rect") -> Optional["Rect"]:
        r = Rect(
            max(self.u1, other.u1),
            min(self.u2, other.u2),
            max(self.t1, other.t1),
            min(self.t2, other.t2),
        )
        return None if r.empty else r

    def subtract(self, cut: "Rect") -> list:
        """self minus cut, as up to four disjoint rectangles."""
        inter = self.intersect(cut)
        if inter is None:
            return [self]
        out = []
        if self.u1 < inter.u1:  # left band
            out.append(Rect(self.u1, inter.u1, self.t1, self.t2))
        if inter.u2 < self.u2:  # right band
            out.append(Rect(inter.u2, self.u2, self.t1, self.t2))
        if self.t1 < inter.t1:  # bottom middle
            out.append(Rect(inter.u1, inter.u2, self.t1, inter.t1))
        if inter.t2 < self.t2:  # top middle
            out.append(Rect(inter.u1, inter.u2, inter.t2, self.t2))
        return out


class RectUnion:
    """Finite union of disjoint positive-area half-open rectangles."""

    def __init__(self, rects: Iterable[Rect] = (), already_disjoint: bool = False):
        cleaned = [r for r in rects if not r.empty]
        if already_disjoint:
            self.rects = cleaned
        else:
            self.rects = []
            for r in cleaned:
                self._add_disjoint(r)

    def _add_disjoint(self, rect: Rect) -> None:
        pieces = [rect]
        for existing in self.rects:
            nxt = []
            for piece in pieces:
                nxt.extend(piece.subtract(existing))
            pieces = nxt
            if not pieces:
                return
        self.rects.extend(pieces)

    @staticmethod
    def box(u1, u2, t1, t2) -> "RectUnion":
        return RectUnion([Rect(rat(u1), rat(u2), rat(t1), rat(t2))], True)

    @property
    def area(self) -> Fraction:
        return sum((r.area for r in self.rects), Fraction(0))

    @property
    def empty(self) -> bool:
        return not self.rects

    def intersect(self, other: "RectUnion") -> "RectUnion":
        out = []
        for r in self.rects:
            for s in other.rects:
                got = r.intersect(s)
                if got is not None:
                    out.append(got)
        return RectUnion(out, already_disjoint=True)

    def subtract(self, other: "RectUnion") -> "RectUnion":
        pieces = list(self.rects)
        for cut in other.rects:
            nxt = []
            for piece in pieces:
                nxt.extend(piece.subtract(cut))
            pieces = nxt
        return RectUnion(pieces, already_disjoint=True)

    def union(self, other: "RectUnion") -> "RectUnion":
        fresh = other.subtract(self)
        return RectUnion(list(self.rects) + list(fresh.rects), already_disjoint=True)

    def sym_diff(self, other: "RectUnion") -> "RectUnion":
        a = self.subtract(other)
        b = other.subtract(self)
        return RectUnion(list(a.rects) + list(b.rects), already_disjoint=True)

    def shift_u(self, k) -> "RectUnion":
        k = rat(k)
        return RectUnion(
            [Rect(r.u1 + k, r.u2 + k, r.t1, r.t2) for r in self.rects], True
        )

    def scale_t(self, factor) -> "RectUnion":
        factor = rat(factor)
        if factor <= 0:
            raise ConfigError("t-scale factor must be positive")
        return RectUnion(
            [Rect(r.u1, r.u2, r.t1 * factor, r.t2 * factor) for r in self.rects], True
        )

    def first_point(self) -> tuple:
        """A rational point inside the region (corner of its first rectangle)."""
        if self.empty:
            raise PreconditionError("empty region has no points")
        r = min(self.rects, key=lambda r: (r.u1, r.t1, r.u2, r.t2))
        return (r.u1, r.t1)

    def take(self, target_area: Fraction) -> "RectUnion":
        """A sub-union of exact area ``target_area`` (cutting one rectangle)."""
        target_area = rat(target_area)
        if target_area < 0 or target_area > self.area:
            raise PreconditionError(
                f"cannot take area {target_area} from a region of area {self.area}"
            )
        if target_area == 0:
            return RectUnion([], True)
        out = []
        left = target_area
        for r in sorted(self.rects, key=lambda r: (r.u1, r.t1, r.u2, r.t2)):
            if left == 0:
                break
            if r.area <= left:
                out.append(r)
                left -= r.area
            else:
                h = left / (r.u2 - r.u1)
                out.append(Rect(r.u1, r.u2, r.t1, r.t1 + h))
                left = Fraction(0)
        return RectUnion(out, already_disjoint=True)

    def to_json(self) -> dict:
        rects = sorted(self.rects, key=lambda r: (r.u1, r.t1, r.u2, r.t2))
        return {
            "rects": [
                [rat_str(r.u1), rat_str(r.u2), rat_str(r.t1), rat_str(r.t2)]
                for r in rects
            ],
            "area": rat_str(self.area),
        }


# ---------------------------------------------------------------------------
# chart actions


def left_translate(x: AffElement, R: RectUnion) -> RectUnion:
    """xR for a dyadic dilation x = (2^k, 0): the shift u -> u + k.

    Area is preserved exactly (left invariance of Haar measure).  General b
    shears columns and is out of reach of exact rectangle maps.
    """
    k = x.dyadic_exponent()
    if k is None:
        raise PreconditionError(
            f"left_translate needs a dyadic dilation, got a={x.a}, b={x.b}"
        )
    return R.shift_u(k)


def right_dilate(k: int, R: RectUnion) -> RectUnion:
    """R x for x = (2^k, 0): u -> u + k, t -> t 2^-k; area scales by 2^-k."""
    return R.shift_u(k).scale_t(Fraction(2) ** (-k))


# ---------------------------------------------------------------------------
# Folner rectangles


@dataclass
class FolnerRectReport:
    n: int
    F: RectUnion
    dilation_ratio: Fraction  # |F sym (2,0)F| / |F|, exact
    translation_bound: float  # numeric bound for the (1,1)-translate ratio

    def to_json(self) -> dict:
        return {
            "kind": "folner_rect",
            "n": self.n,
            "area": rat_str(self.F.area),
            "dilation_ratio": rat_str(self.dilation_ratio),
            "dilation_ratio_decimal": float(self.dilation_ratio),
            "translation_bound": self.translation_bound,
        }


def folner_rect(n: int) -> FolnerRectReport:
    """F_n = [0, n) x [0, 4^n) with its two invariance ratios.

    Under the dilation (2, 0) the region shifts one unit in u, so the
    symmetric difference is exactly two unit-width columns: ratio 2/n,
    computed here by an actual sym_diff rather than asserted.  Under the
    translation (1, 1) each column shifts t by 2^-u, giving

        ratio = 2 (1 - 2^-n) / (ln 2 * n * 4^n),

    evaluated in floating point (tolerance 1e-9) and reported with a x2
    safety margin.
    """
    if n < 1:
        raise ConfigError("folner_rect needs n >= 1")
    F = RectUnion.box(0, n, 0, Fraction(4) ** n)
    shifted = left_translate(dilation(1), F)
    ratio = F.sym_diff(shifted).area / F.area
    exact = 2.0 * (1.0 - 0.5**n) / (math.log(2.0) * n * 4.0**n)
    return FolnerRectReport(
        n=n, F=F, dilation_ratio=ratio, translation_bound=2.0 * exact
    )


# ---------------------------------------------------------------------------
# very small subsets with disjoint translates


def very_small_S(E: RectUnion, X: Sequence[AffElement], c: Fraction) -> RectUnion:
    """S inside E with 0 < |S| <= c and the x_i S mutually disjoint.

    The x_i must be distinct dyadic dilations; their translates shift u by
    distinct integers, so any S of u-width at most the least exponent gap is
    automatically disjoint from its translates.  Disjointness is still
    verified exactly before returning.
    """
    c = rat(c)
    if c <= 0:
        raise PreconditionError("c must be positive")
    if E.empty:
        raise PreconditionError("cannot pick inside an empty region")
    exponents = []
    for x in X:
        k = x.dyadic_exponent()
        if k is None:
            raise PreconditionError(f"very_small_S needs dyadic dilations, got {x}")
        exponents.append(k)
    if len(set(exponents)) != len(exponents):
        raise PreconditionError("translates must be distinct dilations")
    gaps = [
        abs(p - q) for i, p in enumerate(exponents) for q in exponents[:i]
    ]
    width_cap = Fraction(min(gaps)) if gaps else None

    r = min(E.rects, key=lambda r: (r.u1, r.t1, r.u2, r.t2))
    width = r.u2 - r.u1
    if width_cap is not None:
        width = min(width, width_cap)
    height = min(c / width, r.t2 - r.t1)
    S = RectUnion([Rect(r.u1, r.u1 + width, r.t1, r.t1 + height)], True)
    assert 0 < S.area <= c
    for i, ki in enumerate(exponents):
        for kj in exponents[:i]:
            if not S.shift_u(ki).intersect(S.shift_u(kj)).empty:
                raise CertificateError("translates of S are not disjoint", "very_small")
    return S


# ---------------------------------------------------------------------------
# rectangle-cell partitions


class RectPartition:
    """Explicit rectangle cells partitioning a window; the complement is an
    implicit remainder cell that every target must give mass 0."""

    def __init__(self, cells: Sequence[tuple], window: RectUnion):
        if not cells:
            raise ConfigError("a rectangle partition needs at least one cell")
        self.labels = [label for label, _ in cells]
        self.cells = [region for _, region in cells]
        self.window = window
        covered = Fraction(0)
        for i, cell in enumerate(self.cells):
            if not cell.subtract(window).empty:
                raise PreconditionError(f"cell {self.labels[i]!r} leaves the window")
            covered += cell.area
            for j in range(i):
                if not cell.intersect(self.cells[j]).empty:
                    raise PreconditionError(
                        f"cells {self.labels[j]!r} and {self.labels[i]!r} overlap"
                    )
        if covered != window.area:
            raise PreconditionError(
                f"cells cover area {covered} of a window of area {window.area}"
            )

    @property
    def q(self) -> int:
        return len(self.cells)


def t_band_partition(u_lo, u_hi, t_cuts: Sequence) -> RectPartition:
    """Cells [u_lo, u_hi) x [t_j, t_{j+1}); dilation-invariant in t."""
    cuts = [rat(t) for t in t_cuts]
    if len(cuts) < 2 or any(a >= b for a, b in zip(cuts, cuts[1:])):
        raise ConfigError("t_cuts must be strictly increasing with length >= 2")
    window = RectUnion.box(u_lo, u_hi, cuts[0], cuts[-1])
    cells = [
        (f"band[{rat_str(a)},{rat_str(b)})", RectUnion.box(u_lo, u_hi, a, b))
        for a, b in zip(cuts, cuts[1:])
    ]
    return RectPartition(cells, window)


# ---------------------------------------------------------------------------
# weak-but-not-strong, nondiscrete


@dataclass
class AffineWnsReport:
    S: RectUnion
    vector: list  # measured mu_S(E_i), exact
    target: list
    exact_match: bool
    disjoint_ok: bool
    budget: Fraction  # the per-cell area cap c

    def to_json(self) -> dict:
        return {
            "kind": "wns_nondiscrete",
            "area": rat_str(self.S.area),
            "vector": [rat_str(v) for v in self.vector],
            "target": [rat_str(v) for v in self.target],
            "exact_match": self.exact_match,
            "disjoint_ok": self.disjoint_ok,
            "budget": rat_str(self.budget),
            "verdict": self.exact_match and self.disjoint_ok,
        }


def wns_nondiscrete(
    P: RectPartition, mu: Sequence[Fraction], x: AffElement
) -> AffineWnsReport:
    """S with mu_S(E_i) exactly mu_i and S disjoint from xS.

    Picks a very small S_i inside each positive-target cell, staying clear of
    {x, x^-1} times everything already picked, then shrinks each S_i to the
    exact area m' mu_i.  Exactness of the final vector is rational equality,
    not a tolerance.
    """
    mu = [rat(v) for v in mu]
    if len(mu) != P.q:
        raise ConfigError(f"target has {len(mu)} entries for {P.q} cells")
    if any(v < 0 for v in mu) or sum(mu) != 1:
        raise ConfigError("target entries must be >= 0 and sum to 1")
    k = x.dyadic_exponent()
    if k is None or k == 0:
        raise PreconditionError("x must be a dyadic dilation different from e")

    positives = [i for i in range(P.q) if mu[i] > 0]
    for i in positives:
        if P.cells[i].empty:
            raise PreconditionError(f"cell {P.labels[i]!r} has area 0 but mass > 0")
    m = min([Fraction(1)] + [P.cells[i].area for i in positives])
    c = m / (2 * (P.q + 1))  # remainder counted as one more part

    picked: dict[int, RectUnion] = {}
    prev = RectUnion([], True)
    for i in positives:
        blocked = prev.shift_u(k).union(prev.shift_u(-k))
        available = P.cells[i].subtract(blocked)
        if available.empty:
            raise PreconditionError(
                f"cell {P.labels[i]!r} exhausted by translate avoidance"
            )
        S_i = very_small_S(available, [AFF_IDENTITY, x], c)
        picked[i] = S_i
        prev = prev.union(S_i)

    m_prime = min(picked[i].area for i in positives)
    S = RectUnion([], True)
    for i in positives:
        S = S.union(picked[i].take(m_prime * mu[i]))

    total = S.area
    vector = [S.intersect(cell).area / total for cell in P.cells]
    exact = vector == mu
    disjoint = S.intersect(S.shift_u(k)).empty
    report = AffineWnsReport(
        S=S,
        vector=vector,
        target=mu,
        exact_match=exact,
        disjoint_ok=disjoint,
        budget=c,
    )
    if not (exact and disjoint):
        raise CertificateError(
            f"wns_nondiscrete verification failed: exact={exact}, disjoint={disjoint}",
            "wns_nondiscrete",
        )
    return report


# ---------------------------------------------------------------------------
# LIM0 construction: XS as a disjoint union of translates


@dataclass
class Lim0Report:
    S: RectUnion
    XS: RectUnion
    vector: list
    target: list
    exact_match: bool
    x_invariance: list  # (#(yX sym X)/#X, measured |yXS sym XS|/|XS|) pairs
    transfer_ok: bool
    pieces_disjoint: bool

    def to_json(self) -> dict:
        return {
            "kind": "lim0_construct",
            "area_S": rat_str(self.S.area),
            "area_XS": rat_str(self.XS.area),
            "vector": [rat_str(v) for v in self.vector],
            "target": [rat_str(v) for v in self.target],
            "exact_match": self.exact_match,
            "x_invariance": [
                {"counting": rat_str(a), "measured": rat_str(b)}
                for a, b in self.x_invariance
            ],
            "transfer_ok": self.transfer_ok,
            "pieces_disjoint": self.pieces_disjoint,
            "verdict": self.exact_match and self.transfer_ok and self.pieces_disjoint,
        }


def lim0_construct(
    P: RectPartition,
    mu: Sequence[Fraction],
    X: Sequence[AffElement],
    K: Sequence[AffElement],
    eps: Fraction,
) -> Lim0Report:
    """XS = x_1 S u ... u x_n S with exact target vector and transferred
    counting-measure invariance.

    Every x in X (x_1 = e) and y in K must be a dyadic dilation.  Targets are
    extended to the refinement of P by X along the diagonal: the mass of cell
    E_i goes to D_i = intersection_k x_k^-1 E_i, which therefore must have
    positive area whenever mu_i > 0 (t-band partitions always qualify, since
    dilations only shift u).  S is assembled from very small subsets of the
    D_i whose translates under X u KX stay disjoint, so

        |y XS sym XS| / |XS|  =  #(yX sym X) / #X     exactly, for y in K.
    """
    mu = [rat(v) for v in mu]
    eps = rat(eps)
    if len(mu) != P.q:
        raise ConfigError(f"target has {len(mu)} entries for {P.q} cells")
    if any(v < 0 for v in mu) or sum(mu) != 1:
        raise ConfigError("target entries must be >= 0 and sum to 1")

    exps = []
    for x in X:
        k = x.dyadic_exponent()
        if k is None:
            raise PreconditionError(f"X must consist of dyadic dilations, got {x}")
        exps.append(k)
    if not exps or exps[0] != 0:
        raise PreconditionError("X must start with the identity")
    if len(set(exps)) != len(exps):
        raise PreconditionError("X elements must be distinct")
    n = len(exps)

    k_exps = []
    for y in K:
        ky = y.dyadic_exponent()
        if ky is None:
            raise PreconditionError(f"K must consist of dyadic dilations, got {y}")
        k_exps.append(ky)

    # counting-measure invariance of X itself
    x_set = set(exps)
    counting = []
    for ky in k_exps:
        shifted = {ky + e for e in exps}
        ratio = Fraction(len(shifted ^ x_set), n)
        counting.append(ratio)
        if ratio >= eps:
            raise PreconditionError(
                f"X is not (K,{eps})-invariant: #(yX sym X)/#X = {ratio}"
            )

    # diagonal cells of the refinement by X
    positives = [i for i in range(P.q) if mu[i] > 0]
    diagonals: dict[int, RectUnion] = {}
    for i in positives:
        cell = P.cells[i]
        diag = cell
        for e in exps[1:]:
            diag = diag.intersect(cell.shift_u(-e))
        if diag.empty:
            raise PreconditionError(
                f"diagonal cell of {P.labels[i]!r} is empty; partition is "
                "incompatible with X"
            )
        diagonals[i] = diag

    # all translate exponents that must keep picks disjoint
    z_exps = sorted(x_set | {ky + e for ky in k_exps for e in exps})
    z_family = [dilation(e) for e in z_exps]
    diffs = sorted({p - q for p in z_exps for q in z_exps})
    q_pos = len(positives)
    m = min([Fraction(1)] + [diagonals[i].area for i in positives])
    c = m / (q_pos * max(len(z_exps) ** 2, 1))

    picked: dict[int, RectUnion] = {}
    prev = RectUnion([], True)
    for i in positives:
        blocked = RectUnion([], True)
        for dlt in diffs:
            blocked = blocked.union(prev.shift_u(dlt))
        available = diagonals[i].subtract(blocked)
        if available.empty:
            raise PreconditionError(
                f"diagonal of {P.labels[i]!r} exhausted by translate avoidance"
            )
        S_i = very_small_S(available, z_family, c)
        picked[i] = S_i
        prev = prev.union(S_i)

    m_prime = min(picked[i].area for i in positives)
    S = RectUnion([], True)
    for i in positives:
        S = S.union(picked[i].take(m_prime * mu[i]))

    # XS as a union of translates; disjointness verified exactly
    translates = [S.shift_u(e) for e in exps]
    XS = RectUnion([], True)
    pieces_disjoint = True
    for tr in translates:
        if not XS.intersect(tr).empty:
            pieces_disjoint = False
        XS = XS.union(tr)
    if XS.area != n * S.area:
        pieces_disjoint = False

    total = XS.area
    vector = [XS.intersect(cell).area / total for cell in P.cells]
    exact = vector == mu

    transfer_ok = True
    measured_pairs = []
    for ky, count_ratio in zip(k_exps, counting):
        yXS = XS.shift_u(ky)
        measured = yXS.sym_diff(XS).area / total
        measured_pairs.append((count_ratio, measured))
        if measured != count_ratio:
            transfer_ok = False

    report = Lim0Report(
        S=S,
        XS=XS,
        vector=vector,
        target=mu,
        exact_match=exact,
        x_invariance=measured_pairs,
        transfer_ok=transfer_ok,
        pieces_disjoint=pieces_disjoint,
    )
    if not (exact and transfer_ok and pieces_disjoint):
        raise CertificateError(
            f"lim0 verification failed: exact={exact}, transfer={transfer_ok}, "
            f"disjoint={pieces_disjoint}",
            "lim0",
        )
    return report


# ---------------------------------------------------------------------------
# the non-unimodular witness family


@dataclass
class WitnessComponent:
    n: int
    F: RectUnion
    x: AffElement  # pushes F into the Delta >= 1 half
    y: AffElement  # pushes F into the small-Delta region
    Fx: RectUnion
    Fy: RectUnion


@dataclass
class WitnessFamily:
    components: list
    X: RectUnion
    Y: RectUnion

    def to_json(self) -> dict:
        return {
            "kind": "nonunimodular_witness",
            "n_max": len(self.components),
            "area_X": rat_str(self.X.area),
            "area_Y": rat_str(self.Y.area),
            "components": [
                {
                    "n": comp.n,
                    "x": comp.x.to_json(),
                    "y": comp.y.to_json(),
                    "area_Fx": rat_str(comp.Fx.area),
                    "area_Fy": rat_str(comp.Fy.area),
                }
                for comp in self.components
            ],
        }


def nonunimodular_witness(n_max: int) -> WitnessFamily:
    """F_n pushed right and left along the modular function.

    x_n is the right dilation by 2^-n, placing F_n x_n inside {Delta >= 1}
    (u <= 0); y_n is the right dilation by 2^{m_n}, m_n = 3n + ceil(log2 n),
    which pins |F_n y_n| = n 4^n 2^{-m_n} <= 2^-n and Delta <= |F_n|^-1 2^-n
    on it.  X and Y are the unions; X and Y are disjoint (opposite u signs)
    and |Y| <= 1, all verified exactly.
    """
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    comps = []
    X = RectUnion([], True)
    Y = RectUnion([], True)
    for n in range(1, n_max + 1):
        F = RectUnion.box(0, n, 0, Fraction(4) ** n)
        m_n = 3 * n + max(0, (n - 1).bit_length())  # ceil(log2 n)
        Fx = right_dilate(-n, F)
        Fy = right_dilate(m_n, F)
        assert Fx.area == F.area * Fraction(2) ** n
        assert Fy.area == F.area * Fraction(2) ** (-m_n)
        if Fy.area > Fraction(2) ** (-n):
            raise CertificateError(f"|F_{n} y_{n}| = {Fy.area} > 2^-{n}", "witness")
        # sup of Delta over F_n y_n is 2^{-m_n}, needed <= min(1, |F_n|^-1 2^-n)
        sup_delta = Fraction(2) ** (-m_n)
        if sup_delta > min(Fraction(1), Fraction(2) ** (-n) / F.area):
            raise CertificateError(f"Delta bound violated at n={n}", "witness")
        comps.append(
            WitnessComponent(n=n, F=F, x=dilation(-n), y=dilation(m_n), Fx=Fx, Fy=Fy)
        )
        X = X.union(Fx)
        Y = Y.union(Fy)
    if not X.intersect(Y).empty:
        raise CertificateError("X and Y intersect", "witness")
    if Y.area > 1:
        raise CertificateError(f"|Y| = {Y.area} > 1", "witness")
    return WitnessFamily(components=comps, X=X, Y=Y)


# ---------------------------------------------------------------------------
# the obstruction arithmetic


@dataclass
class ObstructionVerdict:
    area_A: Fraction
    mass_X: Fraction  # mu_A(X)
    mass_Y: Fraction  # mu_A(Y)
    k_measure: Fraction
    eps: Fraction
    small_branch_fired: bool  # mu_A(Y) > 1/3 forces |A| < 3
    small_bound_holds: bool
    witness_point: Optional[tuple]  # a rational point of A & X, u <= 0
    large_branch_fired: bool  # witness + C1-invariance assumption force |A| > 3
    conditional_lower: Optional[Fraction]  # |K|/(1+eps), > 3 when fired
    verdict: str  # impossible | small_only | large_only | neither

    def to_json(self) -> dict:
        return {
            "kind": "obstruction",
            "area_A": rat_str(self.area_A),
            "mass_X": rat_str(self.mass_X),
            "mass_Y": rat_str(self.mass_Y),
            "small_branch_fired": self.small_branch_fired,
            "small_bound_holds": self.small_bound_holds,
            "witness_point": [rat_str(self.witness_point[0]), rat_str(self.witness_point[1])]
            if self.witness_point
            else None,
            "large_branch_fired": self.large_branch_fired,
            "conditional_lower": rat_str(self.conditional_lower)
            if self.conditional_lower is not None
            else None,
            "verdict": self.verdict,
        }


def obstruction_check(
    A: RectUnion,
    X: RectUnion,
    Y: RectUnion,
    k_measure: Fraction = Fraction(7, 2),
    eps: Fraction = Fraction(1, 6),
) -> ObstructionVerdict:
    """The two size implications against the partition {X, Y}.

    Branch one: mu_A(Y) > 1/3 forces |A| < 3, because |Y & A| <= |Y| <= 1.
    Branch two: mu_A(X) > 1/3 yields a point a of A & X with Delta(a) >= 1;
    were A class-1 (K, eps)-invariant for any K of measure k_measure >= 7/2,
    then k_measure <= |Ka| <= |KA| < (1 + eps)|A| forces |A| > 3 (no
    transcendental is ever evaluated: only |Ka| = |K| Delta(a) is used).
    Both branches firing is the verdict "impossible": no invariant set can
    track the midpoint mean on {X, Y}.
    """
    k_measure = rat(k_measure)
    eps = rat(eps)
    if k_measure < Fraction(7, 2):
        raise PreconditionError("k_measure must be at least 7/2")
    if Y.area > 1:
        raise PreconditionError(f"model hypothesis broken: |Y| = {Y.area} > 1")
    if A.empty:
        raise PreconditionError("A must have positive area")
    area = A.area
    inter_y = A.intersect(Y).area
    inter_x_region = A.intersect(X)
    mass_y = inter_y / area
    mass_x = inter_x_region.area / area

    third = Fraction(1, 3)
    small_fired = mass_y > third
    small_holds = True
    if small_fired:
        # |Y & A| <= |Y| <= 1, so mu_A(Y) <= 1/|A|; firing forces |A| < 3
        assert inter_y <= Y.area <= 1
        small_holds = area < 3
        if not small_holds:
            raise CertificateError(
                f"|A| = {area} >= 3 despite mu_A(Y) = {mass_y} > 1/3", "obstruction"
            )

    witness = None
    large_fired = False
    conditional = None
    if mass_x > third:
        witness = inter_x_region.first_point()
        u, _ = witness
        if u > 0:
            raise CertificateError(
                f"witness point has u = {u} > 0; X leaked into Delta < 1", "obstruction"
            )
        conditional = k_measure / (1 + eps)
        large_fired = conditional >= 3
        if not large_fired:
            raise CertificateError(
                f"conditional bound {conditional} below 3; k_measure too small",
                "obstruction",
            )

    if small_fired and large_fired:
        verdict = "impossible"
    elif small_fired:
        verdict = "small_only"
    elif large_fired:
        verdict = "large_only"
    else:
        verdict = "neither"
    return ObstructionVerdict(
        area_A=area,
        mass_X=mass_x,
        mass_Y=mass_y,
        k_measure=k_measure,
        eps=eps,
        small_branch_fired=small_fired,
        small_bound_holds=small_holds,
        witness_point=witness,
        large_branch_fired=large_fired,
        conditional_lower=conditional,
        verdict=verdict,
    )


def obstruction_candidates(
    witness: WitnessFamily, count: int, seed: int
) -> Iterable[RectUnion]:
    """Seeded family of candidate sets: unions of sub-rectangles of X and Y
    at varied mixture ratios and sizes.

    Mixtures are sized from the Y side: beta <= |Y| <= 1 is carved first and
    the X piece takes alpha = r * beta with r log-spread around 1, so the
    family probes both implications densely (r in (1/2, 2) fires both).
    """
    rnd = random.Random(seed)
    comps = witness.components
    for _ in range(count):
        style = rnd.randrange(4)  # 0: X only, 1: Y only, 2/3: mixtures
        pieces = []
        if style == 0:
            comp = rnd.choice(comps)
            frac = Fraction(rnd.randint(1, 256), 256)
            pieces.append(comp.Fx.take(frac * comp.Fx.area))
        elif style == 1:
            comp = rnd.choice(comps)
            frac = Fraction(rnd.randint(1, 256), 256)
            pieces.append(comp.Fy.take(frac * comp.Fy.area))
        else:
            comp_y = rnd.choice(comps)
            beta = Fraction(rnd.randint(1, 256), 256) * comp_y.Fy.area
            ratio = Fraction(2) ** rnd.randint(-3, 3) * Fraction(
                rnd.randint(8, 15), 11
            )
            alpha = ratio * beta
            comp_x = rnd.choice(comps)
            alpha = min(alpha, comp_x.Fx.area)
            pieces.append(comp_x.Fx.take(alpha))
            pieces.append(comp_y.Fy.take(beta))
        A = RectUnion([], True)
        for piece in pieces:
            A = A.union(piece)
        if not A.empty:
            yield A
