"""Constructive procedures with certified outputs.

Each construction returns the built set together with a report whose
inequalities were re-measured by the set calculus, never assumed:

* ``greedy_disjoint_subset`` -- an n-element subset S of an infinite stream
  with S and xS disjoint, built by skipping anything in S, xS or x^-1 S.
* ``wns_discrete``        -- a finite set whose indicator mean tracks a target
  vector to within 1/p on a p-part partition while S and xS stay disjoint;
  this is the "weakly but not strongly invariant" net element at one index.
* ``refine``              -- the common refinement of a partition by finitely
  many translates, cells E(C) = intersection_k x_k^-1 E_{c_k}.
* ``disjointify``         -- trims a stream of nearly-disjoint invariant sets
  into pairwise disjoint ones, certifying the 2*delta mean drift, 3*delta
  target drift and 4*delta invariance loss.
* ``union_midpoint``      -- A u B as an approximate midpoint of mu_A, mu_B
  with measured distance < 3*delta under the overlap and size-ratio gates.
* ``hs_midpoint``         -- the midpoint construction with invariance and
  target-tracking gates on both inputs; disjointness is obtained by searching
  a far *right* translate of B (right translation preserves every left
  invariance ratio exactly under counting measure).
* ``pigeonhole_balance``  -- selects bucketed sub-collections of two disjoint
  families so the two unions have size ratio inside (1-eps, 1+eps), with
  buckets [r^n, r^{n+1}), r = sqrt(1+eps), handled in exact arithmetic by
  comparing squares.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

from .errors import CertificateError, ConfigError, PreconditionError
from .groups import Element, FinSet, Group, same_backend
from .rationals import rat_str
from .setcalc import (
    InvarianceCertificate,
    MeanVector,
    Part,
    PartitionRule,
    invariance,
    l1_distance,
    mean_vector,
    right_translate,
    translate,
)

_PICK_CAP = 2_000_000  # hard stop for stream consumption inside one pick


@dataclass(frozen=True)
class TargetMean:
    """Exact target vector over a partition's parts.

    Entries are >= 0 and sum to 1; parts flagged finite must carry 0 (a mean
    that is approximable by ever-larger finite sets vanishes on finite sets).
    """

    values: tuple

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if any(v < 0 for v in vals):
            raise ConfigError("target mean entries must be >= 0")
        if sum(vals) != 1:
            raise ConfigError(f"target mean entries must sum to 1, got {sum(vals)}")

    def __len__(self):
        return len(self.values)

    def validate_against(self, P: PartitionRule) -> None:
        if len(self.values) != P.p:
            raise ConfigError(
                f"target has {len(self.values)} entries for a {P.p}-part partition"
            )
        for v, part in zip(self.values, P.parts):
            if v > 0 and part.finite:
                raise PreconditionError(
                    f"target positive on finite part {part.label!r}"
                )
            if v > 0 and part.enumerator is None:
                raise PreconditionError(
                    f"part {part.label!r} has positive target but no enumerator"
                )

    def as_mean_vector(self) -> MeanVector:
        return MeanVector(self.values)

    def to_json(self) -> list:
        return [rat_str(v) for v in self.values]


# ---------------------------------------------------------------------------
# greedy disjoint picking


def greedy_disjoint_subset(
    stream: Iterator[Element],
    n: int,
    x: Element,
    group: Group,
    forbidden: Optional[set] = None,
) -> FinSet:
    """First n stream elements y with y, xy, x^-1 y all fresh.

    ``forbidden`` seeds the avoid-set (used by sequential constructions that
    must stay clear of {x, x^-1} times everything already picked).
    """
    if x == group.identity:
        raise PreconditionError("x must differ from the identity")
    if n < 0:
        raise ConfigError("n must be >= 0")
    if n == 0:
        return FinSet(group, frozenset())
    xinv = group.inv(x)
    avoid = set(forbidden) if forbidden else set()
    picked = []
    steps = 0
    for y in stream:
        steps += 1
        if steps > _PICK_CAP:
            raise PreconditionError(
                f"stream produced no eligible element within {_PICK_CAP} steps"
            )
        if len(picked) == n:
            break
        if y in avoid:
            continue
        picked.append(y)
        avoid.update((y, group.mul(x, y), group.mul(xinv, y)))
    if len(picked) < n:
        raise PreconditionError(f"stream exhausted with {len(picked)} < {n} picks")
    return FinSet(group, frozenset(picked))


# ---------------------------------------------------------------------------
# weak-but-not-strong discrete construction


@dataclass
class WnsReport:
    """Output of wns_discrete: the set, its counts, and measured bounds."""

    S: FinSet
    counts: list
    N: int
    deviations: list  # |n_i/N - mu_i| per part, exact
    max_deviation: Fraction
    bound: Fraction  # 1/p
    disjoint_ok: bool
    rounding_gap: Fraction  # max |n_i/(2p^2) - mu_i| over positive parts
    chain_gap: Fraction  # |N/(2p^2) - 1|, must be < 1/(2p)

    @property
    def ok(self) -> bool:
        return self.disjoint_ok and self.max_deviation < self.bound

    def to_json(self) -> dict:
        from .groups import finset_summary_json

        return {
            "kind": "wns",
            "set": finset_summary_json(self.S),
            "counts": self.counts,
            "N": self.N,
            "deviations": [rat_str(d) for d in self.deviations],
            "max_deviation": rat_str(self.max_deviation),
            "bound": rat_str(self.bound),
            "disjoint_ok": self.disjoint_ok,
            "chain_gap": rat_str(self.chain_gap),
            "verdict": self.ok,
        }


def wns_discrete(P: PartitionRule, mu: TargetMean, x: Element) -> WnsReport:
    """Build S with S and xS disjoint and mean vector within 1/p of mu.

    Counts are n_i = nearest integer to 2 p^2 mu_i (ties to even, which
    ``round`` on Fractions already does); nearest rounding keeps the gap
    |n_i/(2p^2) - mu_i| at most 1/(4p^2), strictly inside the required
    1/(2p^2), and that is asserted rather than trusted.
    """
    group = P.group
    if x == group.identity:
        raise PreconditionError("x must differ from the identity")
    mu.validate_against(P)
    p = P.p
    scale = 2 * p * p

    counts = []
    rounding_gap = Fraction(0)
    for v in mu.values:
        if v == 0:
            counts.append(0)
            continue
        n_i = round(scale * v)
        gap = abs(Fraction(n_i, scale) - v)
        if gap >= Fraction(1, scale):
            raise CertificateError(
                f"rounding violated |n_i/(2p^2) - mu_i| < 1/(2p^2): gap {gap}"
            )
        rounding_gap = max(rounding_gap, gap)
        counts.append(n_i)
    N = sum(counts)
    if N == 0:
        raise PreconditionError("all rounded counts are zero; target degenerate")

    chain_gap = abs(Fraction(N, scale) - 1)
    if chain_gap >= Fraction(1, 2 * p):
        raise CertificateError(
            f"count chain violated |N/(2p^2) - 1| < 1/(2p): gap {chain_gap}"
        )
    for n_i in counts:
        assert abs(Fraction(n_i, scale) - Fraction(n_i, N)) <= chain_gap

    xinv = group.inv(x)
    avoid: set = set()
    all_picked: list = []
    for part, n_i in zip(P.parts, counts):
        if n_i == 0:
            continue
        sub = greedy_disjoint_subset(part.enumerator(), n_i, x, group, forbidden=avoid)
        for y in sub:
            avoid.update((y, group.mul(x, y), group.mul(xinv, y)))
        all_picked.extend(sub.elems)
    S = FinSet(group, frozenset(all_picked))
    assert len(S) == N

    # independent verification of both postconditions
    disjoint_ok = len(S.elems & translate(x, S).elems) == 0
    measured = mean_vector(S, P)
    deviations = [abs(measured[i] - mu.values[i]) for i in range(p)]
    max_dev = max(deviations)
    report = WnsReport(
        S=S,
        counts=counts,
        N=N,
        deviations=deviations,
        max_deviation=max_dev,
        bound=Fraction(1, p),
        disjoint_ok=disjoint_ok,
        rounding_gap=rounding_gap,
        chain_gap=chain_gap,
    )
    if not report.ok:
        raise CertificateError(
            f"wns output failed verification: max deviation {max_dev}, "
            f"disjoint={disjoint_ok}",
            certificate="wns",
        )
    return report


# ---------------------------------------------------------------------------
# refinement by translates


def refine(P: PartitionRule, X: Sequence[Element]) -> PartitionRule:
    """Common refinement of P by the translates x_1 = e, x_2, ..., x_n.

    Cell E(C) for C in {0..p-1}^n holds the y with x_k y in E_{c_k} for all k.
    Cells are predicate-only (no enumerators); there are p^n of them, many
    typically empty.
    """
    group = P.group
    X = [group.validate_element(g) for g in X]
    if not X or X[0] != group.identity:
        raise PreconditionError("X must start with the identity element")
    p = P.p
    n = len(X)
    if p**n > 65536:
        raise ConfigError(f"refinement would have {p}^{n} cells; too many")

    def make_cell(C: tuple) -> Part:
        def contains(y, C=C):
            return all(P.parts[c].contains(group.mul(xk, y)) for xk, c in zip(X, C))

        label = "cell(" + ",".join(P.parts[c].label for c in C) + ")"
        return Part(label, contains, None, finite=None)

    cells = [make_cell(C) for C in itertools.product(range(p), repeat=n)]
    refined = PartitionRule(group, cells)
    refined.cell_index = list(itertools.product(range(p), repeat=n))  # type: ignore[attr-defined]
    return refined


# ---------------------------------------------------------------------------
# disjointification of a candidate stream


@dataclass
class DisjointifyItem:
    kept: FinSet
    source_size: int
    overlap_mass: Fraction  # mu_A(B) against previously kept union
    mean_drift: Fraction  # ||mu_A - mu_kept||_1, < 2 delta
    target_gap_bound: Fraction  # < 3 delta (measured when partition given)
    invariance: InvarianceCertificate  # class 0 at 4 delta

    def to_json(self) -> dict:
        return {
            "size": len(self.kept),
            "source_size": self.source_size,
            "overlap_mass": rat_str(self.overlap_mass),
            "mean_drift": rat_str(self.mean_drift),
            "target_gap_bound": rat_str(self.target_gap_bound),
            "invariance": self.invariance.to_json(),
        }


def disjointify(
    candidates: Iterable[tuple],
    K: FinSet,
    delta: Fraction,
    target: MeanVector,
    m: int,
    partition: Optional[PartitionRule] = None,
    max_candidates: int = 10_000,
) -> list[DisjointifyItem]:
    """Keep m pairwise disjoint trimmed sets from a certified candidate stream.

    Candidates are (FinSet, MeanVector) pairs, each required to be class-0
    (K, delta)-invariant with vector within delta of the target.  A candidate
    putting mass >= delta on the union of previously kept sets is skipped;
    otherwise its trimmed remainder A_beta = A minus that union is kept, with

        ||mu_A - mu_{A_beta}||_1 = 2 mu_A(B) < 2 delta
        vector drift from target   < 3 delta
        A_beta class-0 invariant at (K, 4 delta)

    all re-measured.  delta must be below 1/4, otherwise the 4*delta bound
    is not guaranteed by the trimming argument.
    """
    delta = Fraction(delta)
    if not 0 < delta < Fraction(1, 4):
        raise PreconditionError("disjointify needs delta in (0, 1/4)")
    if m < 1:
        raise ConfigError("m must be >= 1")

    kept: list[DisjointifyItem] = []
    union: set = set()
    group = K.group
    seen = 0
    for A, vec in candidates:
        if len(kept) == m:
            break
        seen += 1
        if seen > max_candidates:
            break
        same_backend(K, A)
        cert_in = invariance(0, K, delta, A)
        if not cert_in.verdict:
            raise PreconditionError(
                f"candidate {seen} not (K,{delta})-invariant: ratio {cert_in.ratio}"
            )
        gap_in = vec.linf(target)
        if gap_in >= delta:
            raise PreconditionError(
                f"candidate {seen} vector is {gap_in} from target, needs < {delta}"
            )
        overlap = Fraction(len(A.elems & union), len(A))
        if overlap >= delta:
            continue  # skip rule: too much mass on already-kept territory
        trimmed = FinSet(group, A.elems - union)
        drift = l1_distance(A, trimmed)
        assert drift == 2 * overlap
        if drift >= 2 * delta:
            raise CertificateError(f"mean drift {drift} >= 2*delta", "disjointify")
        if partition is not None:
            gap_out = mean_vector(trimmed, partition).linf(target)
        else:
            gap_out = drift + gap_in  # triangle bound, all exact
        if gap_out >= 3 * delta:
            raise CertificateError(
                f"trimmed vector gap {gap_out} >= 3*delta", "disjointify"
            )
        cert_out = invariance(0, K, 4 * delta, trimmed)
        if not cert_out.verdict:
            raise CertificateError(
                f"trimmed set invariance {cert_out.ratio} >= 4*delta", "disjointify"
            )
        union |= trimmed.elems
        kept.append(
            DisjointifyItem(
                kept=trimmed,
                source_size=len(A),
                overlap_mass=overlap,
                mean_drift=drift,
                target_gap_bound=gap_out,
                invariance=cert_out,
            )
        )
    if len(kept) < m:
        raise PreconditionError(
            f"candidate stream exhausted after {seen} candidates with "
            f"{len(kept)} < {m} sets kept"
        )
    return kept


# ---------------------------------------------------------------------------
# midpoint unions


@dataclass
class MidpointCertificate:
    delta: Fraction
    measured: Fraction  # ||mu_{AuB} - (mu_A + mu_B)/2||_1
    claimed: Fraction  # 3 delta
    overlap_mass: Fraction  # mu_B(A)
    size_ratio: Fraction  # |A|/|B|
    disjoint: bool
    union_invariance: Optional[InvarianceCertificate] = None

    @property
    def verdict(self) -> bool:
        ok = self.measured < self.claimed
        if self.union_invariance is not None:
            ok = ok and self.union_invariance.verdict
        return ok

    def to_json(self) -> dict:
        out = {
            "kind": "midpoint",
            "delta": rat_str(self.delta),
            "measured": rat_str(self.measured),
            "measured_decimal": float(self.measured),
            "claimed": rat_str(self.claimed),
            "tightness": float(self.measured / self.claimed),
            "overlap_mass": rat_str(self.overlap_mass),
            "size_ratio": rat_str(self.size_ratio),
            "disjoint": self.disjoint,
            "verdict": self.verdict,
        }
        if self.union_invariance is not None:
            out["union_invariance"] = self.union_invariance.to_json()
        return out


def midpoint_distance(A: FinSet, B: FinSet) -> Fraction:
    """Exact ||mu_{AuB} - (mu_A + mu_B)/2||_1 via the three-region split."""
    same_backend(A, B)
    a, b = len(A), len(B)
    inter = len(A.elems & B.elems)
    u = a + b - inter
    fu = Fraction(1, u)
    half_a = Fraction(1, 2 * a)
    half_b = Fraction(1, 2 * b)
    return (
        (a - inter) * abs(fu - half_a)
        + (b - inter) * abs(fu - half_b)
        + inter * abs(fu - half_a - half_b)
    )


def union_midpoint(
    A: FinSet,
    B: FinSet,
    delta: Fraction,
    K: Optional[FinSet] = None,
) -> tuple[FinSet, MidpointCertificate]:
    """A u B as a certified midpoint of mu_A and mu_B.

    Gates (verified, each error naming its inequality): mu_B(A) < delta and
    |A|/|B| inside ((1-delta)^2, (1+delta)^2).  When K is supplied the union
    also gets a class-0 certificate at 2*delta (delta if A, B are disjoint).
    """
    same_backend(A, B)
    delta = Fraction(delta)
    if not 0 < delta < Fraction(1, 2):
        raise PreconditionError("union_midpoint needs delta in (0, 1/2)")
    if len(A) == 0 or len(B) == 0:
        raise PreconditionError("union_midpoint needs nonempty sets")
    inter = len(A.elems & B.elems)
    overlap = Fraction(inter, len(B))
    if overlap >= delta:
        raise PreconditionError(f"hypothesis violated: mu_B(A) = {overlap} >= {delta}")
    ratio = Fraction(len(A), len(B))
    lo, hi = (1 - delta) ** 2, (1 + delta) ** 2
    if not lo < ratio < hi:
        raise PreconditionError(
            f"hypothesis violated: |A|/|B| = {ratio} outside ({lo}, {hi})"
        )
    union = FinSet(A.group, A.elems | B.elems)
    measured = midpoint_distance(A, B)
    disjoint = inter == 0
    cert = None
    if K is not None:
        strength = delta if disjoint else 2 * delta
        cert = invariance(0, K, strength, union)
    mid = MidpointCertificate(
        delta=delta,
        measured=measured,
        claimed=3 * delta,
        overlap_mass=overlap,
        size_ratio=ratio,
        disjoint=disjoint,
        union_invariance=cert,
    )
    if measured >= 3 * delta:
        raise CertificateError(
            f"midpoint distance {measured} >= 3*delta = {3 * delta}", "midpoint"
        )
    return union, mid


@dataclass
class HsReport:
    union: FinSet
    vector: MeanVector
    midpoint: MidpointCertificate
    vector_gap: Fraction  # ||v(union) - (target_mu + target_nu)/2||_inf
    vector_bound: Fraction  # 4 delta
    offset: Optional[Element]
    gates: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.midpoint.verdict and self.vector_gap < self.vector_bound

    def to_json(self) -> dict:
        return {
            "kind": "hs_midpoint",
            "union_size": len(self.union),
            "vector": self.vector.to_json(),
            "vector_gap": rat_str(self.vector_gap),
            "vector_bound": rat_str(self.vector_bound),
            "offset": list(self.offset) if self.offset is not None else None,
            "midpoint": self.midpoint.to_json(),
            "gates": self.gates,
            "verdict": self.ok,
        }


def hs_midpoint(
    A: FinSet,
    B: FinSet,
    delta: Fraction,
    P: PartitionRule,
    K: FinSet,
    target_mu: Optional[MeanVector] = None,
    target_nu: Optional[MeanVector] = None,
    offsets: Optional[Iterable[Element]] = None,
    search_limit: int = 20_000,
) -> HsReport:
    """Certified midpoint of two target-tracking invariant sets.

    If B overlaps A too much (or the sizes are off), candidate right
    translates Bz are scanned -- ``offsets`` if given, else the backend
    stream -- until every gate passes.  Right translation changes no left
    invariance ratio, but it does move B across the partition, so the
    vector gate is re-measured for the translated set.
    """
    same_backend(A, B, K)
    delta = Fraction(delta)
    v_a = mean_vector(A, P)
    if target_mu is None:
        target_mu = v_a
    if target_nu is None:
        target_nu = mean_vector(B, P)

    cert_a = invariance(0, K, delta, A)
    if not cert_a.verdict:
        raise PreconditionError(f"A not (K,{delta})-invariant: ratio {cert_a.ratio}")
    gap_a = v_a.linf(target_mu)
    if gap_a >= delta:
        raise PreconditionError(f"A vector is {gap_a} from its target, needs < {delta}")

    def gates_pass(cand: FinSet):
        inter = len(cand.elems & A.elems)
        if Fraction(inter, len(cand)) >= delta:
            return None
        ratio = Fraction(len(A), len(cand))
        if not (1 - delta) ** 2 < ratio < (1 + delta) ** 2:
            return None
        v_b = mean_vector(cand, P)
        if v_b.linf(target_nu) >= delta:
            return None
        cert_b = invariance(0, K, delta, cand)
        if not cert_b.verdict:
            return None
        return v_b, cert_b

    chosen = None
    used_offset: Optional[Element] = None
    direct = gates_pass(B)
    if direct is not None:
        chosen, (v_b, cert_b) = B, direct
    else:
        group = A.group
        scan = offsets if offsets is not None else itertools.islice(
            group.enumerate(), search_limit
        )
        for z in scan:
            cand = right_translate(B, z)
            got = gates_pass(cand)
            if got is not None:
                chosen, (v_b, cert_b) = cand, got
                used_offset = z
                break
        if chosen is None:
            raise PreconditionError(
                "no right translate of B passed the overlap/ratio/vector gates"
            )

    union, mid = union_midpoint(A, chosen, delta, K=K)
    v_union = mean_vector(union, P)
    target_avg = MeanVector(
        tuple((x + y) / 2 for x, y in zip(target_mu.values, target_nu.values))
    )
    gap = v_union.linf(target_avg)
    report = HsReport(
        union=union,
        vector=v_union,
        midpoint=mid,
        vector_gap=gap,
        vector_bound=4 * delta,
        offset=used_offset,
        gates={
            "A_invariance": cert_a.to_json(),
            "B_invariance": cert_b.to_json(),
            "A_target_gap": rat_str(gap_a),
            "B_target_gap": rat_str(v_b.linf(target_nu)),
        },
    )
    if not report.ok:
        raise CertificateError(
            f"hs midpoint vector gap {gap} >= 4*delta = {4 * delta}", "hs_midpoint"
        )
    return report


# ---------------------------------------------------------------------------
# pigeonhole size balancing


@dataclass
class BalanceReport:
    A: FinSet
    B: FinSet
    ratio: Fraction
    eps: Fraction
    bucket_a: int
    bucket_b: int
    take_a: int  # N sets from the A-side bucket
    take_b: int  # M sets from the B-side bucket
    member_certs: list = field(default_factory=list)
    union_certs: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        inside = 1 - self.eps < self.ratio < 1 + self.eps
        return inside and all(c.verdict for c in self.member_certs + self.union_certs)

    def to_json(self) -> dict:
        return {
            "kind": "pigeonhole_balance",
            "sizes": [len(self.A), len(self.B)],
            "ratio": rat_str(self.ratio),
            "ratio_decimal": float(self.ratio),
            "eps": rat_str(self.eps),
            "buckets": [self.bucket_a, self.bucket_b],
            "taken": [self.take_a, self.take_b],
            "union_certs": [c.to_json() for c in self.union_certs],
            "verdict": self.ok,
        }


def _bucket(size: int, eps: Fraction) -> int:
    """Largest n with (1+eps)^n <= size^2, i.e. size in [r^n, r^{n+1})."""
    base = 1 + eps
    sq = size * size
    n = 0
    if base**n <= sq:
        while base ** (n + 1) <= sq:
            n += 1
        return n
    while base**n > sq:
        n -= 1
    return n


def _min_m_for(q: Fraction) -> int:
    """Smallest positive integer M with M^2 >= q."""
    if q <= 1:
        return 1
    guess = math.isqrt(q.numerator // q.denominator)
    m = max(guess - 1, 1)
    while Fraction(m * m) < q:
        m += 1
    return m


def pigeonhole_balance(
    list_a: Sequence[FinSet],
    list_b: Sequence[FinSet],
    eps: Fraction,
    K: Optional[FinSet] = None,
) -> BalanceReport:
    """Unions with exact size ratio in (1-eps, 1+eps) via size bucketing.

    All inputs must be pairwise disjoint across both lists.  With the bucket
    pair (m, n) and counts (N, M) chosen so M/N lies in [r^{m-n}, r^{m-n+1}),
    the ratio lands in (1/(1+eps), sqrt(1+eps)), strictly inside the target
    window; the final ratio is still checked exactly.
    """
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0,1)")
    if not list_a or not list_b:
        raise PreconditionError("both input lists must be nonempty")
    group = list_a[0].group
    running: set = set()
    for s in (*list_a, *list_b):
        same_backend(s, list_a[0])
        if len(s) == 0:
            raise PreconditionError("inputs must have positive size")
        if s.elems & running:
            raise PreconditionError("input sets are not pairwise disjoint")
        running |= s.elems

    base = 1 + eps
    buckets_a: dict[int, list[FinSet]] = {}
    for s in list_a:
        buckets_a.setdefault(_bucket(len(s), eps), []).append(s)
    buckets_b: dict[int, list[FinSet]] = {}
    for s in list_b:
        buckets_b.setdefault(_bucket(len(s), eps), []).append(s)

    # deterministic scan: richest buckets first, then bucket index
    order_a = sorted(buckets_a, key=lambda m: (-len(buckets_a[m]), m))
    order_b = sorted(buckets_b, key=lambda n: (-len(buckets_b[n]), n))
    for m in order_a:
        for n in order_b:
            lo = base ** (m - n)
            hi = base ** (m - n + 1)
            for take_n in range(1, len(buckets_a[m]) + 1):
                mm = _min_m_for(take_n * take_n * lo)
                if mm > len(buckets_b[n]):
                    continue
                if Fraction(mm * mm) >= take_n * take_n * hi:
                    continue
                chosen_a = buckets_a[m][:take_n]
                chosen_b = buckets_b[n][:mm]
                A = FinSet(group, frozenset().union(*(s.elems for s in chosen_a)))
                B = FinSet(group, frozenset().union(*(s.elems for s in chosen_b)))
                ratio = Fraction(len(A), len(B))
                if not 1 - eps < ratio < 1 + eps:
                    raise CertificateError(
                        f"bucketed ratio {ratio} escaped (1-eps, 1+eps)", "balance"
                    )
                member_certs = []
                union_certs = []
                if K is not None:
                    member_certs = [
                        invariance(0, K, eps, s) for s in (*chosen_a, *chosen_b)
                    ]
                    union_certs = [invariance(0, K, eps, A), invariance(0, K, eps, B)]
                return BalanceReport(
                    A=A,
                    B=B,
                    ratio=ratio,
                    eps=eps,
                    bucket_a=m,
                    bucket_b=n,
                    take_a=take_n,
                    take_b=mm,
                    member_certs=member_certs,
                    union_certs=union_certs,
                )
    raise PreconditionError("no feasible bucket pair; not enough comparable sets")
