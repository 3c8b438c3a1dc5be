"""Finite-set calculus: translations, invariance classes, mean vectors.

Everything here is exact rational arithmetic over counting measure.  The
normalized indicator mean of a finite set A assigns 1/|A| to each member;
its L1 distance to another such mean has the closed form

    ||mu_A - mu_B||_1 = |A\\B|/|A| + |B\\A|/|B| + |A&B| * |1/|A| - 1/|B||

and for A a subset of B this collapses to 2|B\\A|/|B|.

Three strengths of (K, eps)-invariance are measured, indexed by class j:

    j=0:  max over x in K of |xA sym A| / |A|
    j=1:  |KA sym A| / |A|
    j=2:  |bd_K(A)| / |A|   where  bd_K(A) = KA \\ intersection_{x in K} xA

With e in K these satisfy ratio_1 <= ratio_2 and ratio_0 <= 2 * ratio_1,
so class-2 membership implies class-1 implies class-0 at doubled epsilon.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

from .errors import ConfigError, EmptySetError, PreconditionError
from .groups import Element, FinSet, Group, same_backend
from .rationals import rat_str


# ---------------------------------------------------------------------------
# elementary set operations


def translate(x: Element, A: FinSet) -> FinSet:
    """Left translate xA = {x*a : a in A}."""
    G = A.group
    return FinSet(G, frozenset(G.mul(x, a) for a in A))

def right_translate(A: FinSet, x: Element) -> FinSet:
    """Right translate Ax; counting measure is bi-invariant, so |Ax| = |A|."""
    G = A.group
    return FinSet(G, frozenset(G.mul(a, x) for a in A))


def set_product(K: FinSet, A: FinSet) -> FinSet:
    """KA = union of xA over x in K."""
    same_backend(K, A)
    G = A.group
    out = set()
    for x in K:
        for a in A:
            out.add(G.mul(x, a))
    return FinSet(G, frozenset(out))


def sym_diff_ratio(x: Element, A: FinSet) -> Fraction:
    """|xA sym A| / |A|, the translate distance ||mu_A - l_x mu_A||_1."""
    if len(A) == 0:
        raise EmptySetError("sym_diff_ratio needs |A| > 0")
    xA = translate(x, A).elems
    return Fraction(len(xA ^ A.elems), len(A))


def l1_distance(A: FinSet, B: FinSet) -> Fraction:
    """Exact ||mu_A - mu_B||_1 via the three-term closed form."""
    same_backend(A, B)
    if len(A) == 0 or len(B) == 0:
        raise EmptySetError("l1_distance needs nonempty sets")
    a, b = len(A), len(B)
    inter = len(A.elems & B.elems)
    only_a = a - inter
    only_b = b - inter
    return (
        Fraction(only_a, a)
        + Fraction(only_b, b)
        + inter * abs(Fraction(1, a) - Fraction(1, b))
    )


def k_boundary(K: FinSet, A: FinSet) -> FinSet:
    """bd_K(A) = KA \\ intersection of xA over x in K.

    Without the identity in K the boundary loses its usual containment
    relations (class-2 no longer dominates class-1), so that case is
    flagged with a warning rather than an error.
    """
    same_backend(K, A)
    if len(K) == 0:
        raise EmptySetError("k_boundary needs nonempty K")
    if K.group.identity not in K:
        warnings.warn("k_boundary: identity not in K; inclusion chain may fail")
    G = A.group
    ka = set()
    inter: Optional[set] = None
    for x in K:
        xa = {G.mul(x, a) for a in A}
        ka |= xa
        inter = xa if inter is None else inter & xa
    return FinSet(G, frozenset(ka - inter))


# ---------------------------------------------------------------------------
# invariance certificates


@dataclass(frozen=True)
class InvarianceCertificate:
    """Measured (K, eps)-invariance of one set, at strength ``klass``."""

    klass: int
    K: FinSet
    epsilon: Fraction
    ratio: Fraction
    verdict: bool

    def to_json(self) -> dict:
        return {
            "kind": "invariance",
            "class": self.klass,
            "K": self.K.to_json(),
            "epsilon": rat_str(self.epsilon),
            "ratio": rat_str(self.ratio),
            "ratio_decimal": float(self.ratio),
            "verdict": self.verdict,
        }


def invariance_ratio(klass: int, K: FinSet, A: FinSet) -> Fraction:
    """The measured ratio for invariance class 0, 1 or 2."""
    same_backend(K, A)
    if len(A) == 0:
        raise EmptySetError("invariance needs |A| > 0")
    if len(K) == 0:
        raise EmptySetError("invariance needs nonempty K")
    if klass == 0:
        return max(sym_diff_ratio(x, A) for x in K)
    if klass == 1:
        ka = set_product(K, A).elems
        return Fraction(len(ka ^ A.elems), len(A))
    if klass == 2:
        return Fraction(len(k_boundary(K, A)), len(A))
    raise ConfigError(f"invariance class must be 0, 1 or 2, got {klass}")


def invariance(klass: int, K: FinSet, eps: Fraction, A: FinSet) -> InvarianceCertificate:
    # derived thresholds like 3*eps may legitimately exceed 1, so only
    # positivity is enforced here; config-level epsilons are gated to (0,1)
    if eps <= 0:
        raise PreconditionError(f"epsilon must be positive, got {eps}")
    ratio = invariance_ratio(klass, K, A)
    return InvarianceCertificate(klass, K, Fraction(eps), ratio, ratio < eps)


# ---------------------------------------------------------------------------
# partitions and mean vectors


@dataclass
class Part:
    """One labeled cell of a partition.

    ``contains`` must be total over the group.  ``enumerator`` (a zero-arg
    callable returning a fresh iterator over exactly this part's members) is
    required when the part is declared infinite, because constructions pick
    elements from infinite parts in stream order.
    """

    label: str
    contains: Callable[[Element], bool]
    enumerator: Optional[Callable[[], Iterator[Element]]] = None
    finite: Optional[bool] = None  # None = unknown


class PartitionRule:
    """A finite labeled partition of the whole group by total predicates."""

    def __init__(self, group: Group, parts: Sequence[Part]):
        if len(parts) < 1:
            raise ConfigError("a partition needs at least one part")
        for part in parts:
            if part.finite is False and part.enumerator is None:
                raise ConfigError(
                    f"part {part.label!r} declared infinite but has no enumerator"
                )
        self.group = group
        self.parts = list(parts)

    @property
    def p(self) -> int:
        return len(self.parts)

    def labels(self) -> list[str]:
        return [part.label for part in self.parts]

    def classify(self, g: Element) -> int:
        """Index of the unique part containing g; loud error otherwise."""
        hits = [i for i, part in enumerate(self.parts) if part.contains(g)]
        if len(hits) != 1:
            raise PreconditionError(
                f"partition is not a partition at {g!r}: parts {hits} claim it"
            )
        return hits[0]

    def check_well_formed(self, sample_size: int = 1000) -> None:
        """Disjoint+exhaustive on enumerated samples; enumerators emit members."""
        for g in itertools.islice(self.group.enumerate(), sample_size):
            self.classify(g)
        for i, part in enumerate(self.parts):
            if part.enumerator is None:
                continue
            for g in itertools.islice(part.enumerator(), 50):
                if not part.contains(g):
                    raise PreconditionError(
                        f"enumerator of part {part.label!r} emitted non-member {g!r}"
                    )
                for j, other in enumerate(self.parts):
                    if j != i and other.contains(g):
                        raise PreconditionError(
                            f"parts {part.label!r} and {other.label!r} overlap at {g!r}"
                        )


@dataclass(frozen=True)
class MeanVector:
    """v(m) = (m(E_1), ..., m(E_p)) against a fixed partition, exact."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)

    def linf(self, other: "MeanVector") -> Fraction:
        if len(self) != len(other):
            raise PreconditionError(
                f"vector length mismatch: {len(self)} vs {len(other)}"
            )
        return max(abs(a - b) for a, b in zip(self.values, other.values))

    def to_json(self) -> list:
        return [rat_str(v) for v in self.values]


def mean_vector(A: FinSet, P: PartitionRule) -> MeanVector:
    """v(mu_A) with entries |A & E_i| / |A|; sums to exactly 1."""
    if len(A) == 0:
        raise EmptySetError("mean_vector needs |A| > 0")
    counts = [0] * P.p
    for g in A:
        counts[P.classify(g)] += 1
    total = len(A)
    vec = MeanVector(tuple(Fraction(c, total) for c in counts))
    assert sum(vec.values) == 1
    return vec


def in_neighborhood(v: MeanVector, w: MeanVector, eps: Fraction) -> bool:
    """Exact test max_i |v_i - w_i| < eps."""
    return v.linf(w) < eps


# ---------------------------------------------------------------------------
# stock partitions


def congruence_partition(group: Group, modulus: int, coordinate: int = 0) -> PartitionRule:
    """Residue classes of one coordinate mod ``modulus`` on a Z^d backend.

    All parts are infinite, with direct (non-filtering) enumerators obtained
    by rescaling the spiral stream, so picking from a part never stalls.
    """
    from .groups import ZdGroup

    if not isinstance(group, ZdGroup):
        raise ConfigError("congruence_partition needs a Z^d backend")
    if modulus < 1:
        raise ConfigError("modulus must be >= 1")
    d = group.d
    if not 0 <= coordinate < d:
        raise ConfigError(f"coordinate {coordinate} out of range for {group.name}")

    def make_part(r: int) -> Part:
        def contains(g, r=r):
            return g[coordinate] % modulus == r

        def enumerator(r=r):
            for g in group.enumerate():
                h = list(g)
                h[coordinate] = h[coordinate] * modulus + r
                yield tuple(h)

        return Part(f"{coordinate}mod{modulus}={r}", contains, enumerator, finite=False)

    return PartitionRule(group, [make_part(r) for r in range(modulus)])


def product_congruence_partition(group: Group, moduli: Sequence[int]) -> PartitionRule:
    """Residue classes of every coordinate: prod(moduli) parts on Z^d.

    Part (r_1, ..., r_d) holds the points with x_i = r_i mod m_i; its
    enumerator rescales the spiral stream coordinatewise, so it is direct
    and injective like the single-coordinate version.
    """
    from .groups import ZdGroup

    if not isinstance(group, ZdGroup):
        raise ConfigError("product_congruence_partition needs a Z^d backend")
    if len(moduli) != group.d or any(m < 1 for m in moduli):
        raise ConfigError(f"need {group.d} moduli >= 1, got {moduli!r}")

    def make_part(res: tuple) -> Part:
        def contains(g, res=res):
            return all(a % m == r for a, m, r in zip(g, moduli, res))

        def enumerator(res=res):
            for g in group.enumerate():
                yield tuple(a * m + r for a, m, r in zip(g, moduli, res))

        label = "res(" + ",".join(map(str, res)) + ")"
        return Part(label, contains, enumerator, finite=False)

    parts = [make_part(res) for res in itertools.product(*(range(m) for m in moduli))]
    return PartitionRule(group, parts)


def checkerboard_partition(group: Group) -> PartitionRule:
    """Parity of the coordinate sum on Z^d: two infinite parts."""
    from .groups import ZdGroup

    if not isinstance(group, ZdGroup):
        raise ConfigError("checkerboard_partition needs a Z^d backend")

    def make_part(r: int) -> Part:
        def contains(g, r=r):
            return sum(g) % 2 == r

        def enumerator(r=r):
            # bijection: double the last coordinate, then shift to the parity
            # class that makes the full coordinate sum congruent to r
            for g in group.enumerate():
                h = list(g)
                h[-1] = 2 * h[-1] + ((r - sum(g[:-1])) % 2)
                yield tuple(h)

        return Part(f"sum_mod2={r}", contains, enumerator, finite=False)

    return PartitionRule(group, [make_part(0), make_part(1)])


def finite_part_partition(group: Group, special: FinSet, label: str = "finite") -> PartitionRule:
    """Two parts: an explicit finite set and its (infinite) complement."""
    special_elems = special.elems

    def in_special(g):
        return g in special_elems

    def complement_enum():
        for g in group.enumerate():
            if g not in special_elems:
                yield g

    return PartitionRule(
        group,
        [
            Part(label, in_special, None, finite=True),
            Part("rest", lambda g: g not in special_elems, complement_enum, finite=False),
        ],
    )
