"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one `[criterion NN] PASS/FAIL` line (visible with -s, or in
captured output).  Expected values are either exact identities checked by
independent oracles or the explicit constants carried by the certificates.
"""

import functools
import math
import random
import time
from fractions import Fraction


from folnerlab.affine import (
    AFF_IDENTITY,
    Rect,
    RectUnion,
    dilation,
    folner_rect,
    left_translate,
    lim0_construct,
    nonunimodular_witness,
    obstruction_candidates,
    obstruction_check,
    right_dilate,
    t_band_partition,
)
from folnerlab.constructions import TargetMean, union_midpoint, wns_discrete
from folnerlab.groups import FinSet, get_group, backends
from folnerlab.quasitiling import (
    TileSet,
    disjointified_invariance,
    eps_dense_simplex,
    quasi_tile,
    quota_fill,
    translated_box_stream,
    unimodular_pipeline,
    verify_quasi_tiling,
)
from folnerlab.setcalc import (
    MeanVector,
    checkerboard_partition,
    congruence_partition,
    invariance,
    invariance_ratio,
    l1_distance,
    mean_vector,
    translate,
)

Z1 = get_group("z1")
Z2 = get_group("z2")
K_UNITS = FinSet(Z2, frozenset({(0, 0), (1, 0), (0, 1)}))
EPS_TILING = Fraction(1, 4)


def criterion(num, summary):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.monotonic()
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"[criterion {num:02d}] FAIL - {summary}")
                raise
            dt = time.monotonic() - start
            print(f"[criterion {num:02d}] PASS - {summary} ({dt:.1f}s)")
            return result

        return wrapper

    return deco


def random_element(G, rnd):
    if G.name.startswith("z"):
        return tuple(rnd.randint(-30, 30) for _ in range(G.d))
    if G.name == "heisenberg":
        return (rnd.randint(-6, 6), rnd.randint(-6, 6), rnd.randint(-36, 36))
    lamps = sorted(rnd.sample(range(-8, 9), rnd.randint(0, 4)))
    return (rnd.randint(-8, 8), tuple(lamps))


def random_finset(G, rnd, max_size=40):
    size = rnd.randint(1, max_size)
    elems = {random_element(G, rnd) for _ in range(size)}
    return FinSet(G, frozenset(elems))


def l1_elementwise(A, B):
    fa, fb = Fraction(1, len(A)), Fraction(1, len(B))
    zero = Fraction(0)
    total = zero
    for g in A.elems | B.elems:
        total += abs((fa if g in A else zero) - (fb if g in B else zero))
    return total


def interval(a, b):
    return FinSet(Z1, frozenset((x,) for x in range(a, b)))


# ---------------------------------------------------------------------------


@criterion(1, "l1_distance == elementwise oracle, 1000 pairs per backend, < 10 s")
def test_criterion_01_l1_oracle():
    start = time.monotonic()
    for name in backends():
        G = get_group(name)
        rnd = random.Random(hash(name) & 0xFFFF)
        for _ in range(1000):
            A = random_finset(G, rnd)
            B = random_finset(G, rnd)
            assert l1_distance(A, B) == l1_elementwise(A, B)
    assert time.monotonic() - start < 10.0


@criterion(2, "subset specialization l1 = 2|B\\A|/|B|, 1000 pairs")
def test_criterion_02_subset_specialization():
    rnd = random.Random(2)
    for _ in range(1000):
        G = get_group(rnd.choice(["z1", "z2"]))
        B = random_finset(G, rnd, max_size=50)
        k = rnd.randint(1, len(B))
        A = FinSet(G, frozenset(B.sorted_elements()[:k]))
        got = l1_distance(A, B)
        assert got == 2 * Fraction(len(B) - len(A), len(B))
        assert got == l1_elementwise(A, B)


@criterion(3, "mean approximation: measured < 3*delta on 500 gated instances")
def test_criterion_03_mean_approximation():
    rnd = random.Random(3)
    accepted = 0
    worst = Fraction(0)
    while accepted < 500:
        delta = Fraction(rnd.randint(2, 9), 20)  # in (0, 1/2)
        a = rnd.randint(50, 200)
        b = a + rnd.randint(-a // 10, a // 10)
        max_overlap = math.ceil(delta * b) - 1
        o = rnd.randint(0, max(0, max_overlap))
        A = interval(0, a)
        B = interval(a - o, a - o + b)
        if Fraction(len(A.elems & B.elems), b) >= delta:
            continue
        if not (1 - delta) ** 2 < Fraction(a, b) < (1 + delta) ** 2:
            continue
        _, cert = union_midpoint(A, B, delta)
        assert cert.measured < 3 * delta
        worst = max(worst, cert.measured / (3 * delta))
        accepted += 1
    assert 0 < worst < 1
    print(f"  max measured/(3*delta) = {float(worst):.4f}")


@criterion(4, "union invariance: < delta disjoint, < 2*delta overlapping, 500 pairs")
def test_criterion_04_union_invariance():
    rnd = random.Random(4)
    K = FinSet(Z1, frozenset({(0,), (1,)}))
    done = 0
    while done < 500:
        delta = Fraction(rnd.randint(5, 45), 100)
        base = math.ceil(2 / delta) + 1
        sa = base + rnd.randint(0, 40)
        sb = base + rnd.randint(0, 40)
        A = interval(0, sa)
        ca = invariance(0, K, delta, A)
        overlapping = rnd.random() < 0.5
        shift = rnd.randint(base // 2, sa - 1) if overlapping else sa + rnd.randint(1, 20)
        B = interval(shift, shift + sb)
        cb = invariance(0, K, delta, B)
        if not (ca.verdict and cb.verdict):
            continue
        union = FinSet(Z1, A.elems | B.elems)
        disjoint = not (A.elems & B.elems)
        bound = delta if disjoint else 2 * delta
        cu = invariance(0, K, bound, union)
        assert cu.verdict, f"union ratio {cu.ratio} >= {bound}"
        done += 1


@criterion(5, "wns on Z and Z^2, p in 2..8, 100 random targets each, < 30 s")
def test_criterion_05_wns():
    start = time.monotonic()
    rnd = random.Random(5)
    for backend in ("z1", "z2"):
        G = get_group(backend)
        x = (1,) if backend == "z1" else (1, 0)
        for p in range(2, 9):
            P = congruence_partition(G, p)
            for _ in range(100):
                raw = [rnd.randint(0, 30) for _ in range(p)]
                if sum(raw) == 0:
                    raw[0] = 1
                mu = TargetMean(tuple(Fraction(v, sum(raw)) for v in raw))
                report = wns_discrete(P, mu, x)
                assert report.disjoint_ok
                assert report.max_deviation < Fraction(1, p)
    elapsed = time.monotonic() - start
    assert elapsed < 30.0


@criterion(6, "invariance class inclusions on 200 random boxes")
def test_criterion_06_inclusions():
    rnd = random.Random(6)
    for _ in range(200):
        n = rnd.randint(2, 24)
        off = (rnd.randint(-50, 50), rnd.randint(-50, 50))
        A = translate(off, Z2.box(n))
        eps = Fraction(rnd.randint(5, 95), 100)
        r0 = invariance_ratio(0, K_UNITS, A)
        r1 = invariance_ratio(1, K_UNITS, A)
        r2 = invariance_ratio(2, K_UNITS, A)
        assert r2 >= 0
        assert r1 <= r2
        assert r0 <= 2 * r1
        if r2 < eps:  # class 2 membership
            assert r1 < eps
        if r1 < eps:
            assert r0 < 2 * eps


_TILING_CACHE: dict = {}


def tiling_512():
    """Criterion-7 instance, built once and shared with criteria 8 and 9."""
    if "qt" not in _TILING_CACHE:
        A = Z2.box(512)
        tiles = TileSet.build(
            [Z2.box(4), Z2.box(16), Z2.box(64)], K_UNITS, EPS_TILING
        )
        _TILING_CACHE["qt"] = quasi_tile(A, tiles, EPS_TILING)
    return _TILING_CACHE["qt"]


@criterion(7, "quasi-tiling of [0,512)^2 with tiles {4,16,64} at eps=1/4, < 60 s")
def test_criterion_07_quasi_tiling():
    start = time.monotonic()
    qt = tiling_512()  # construction counts against the stated budget
    report = verify_quasi_tiling(qt, EPS_TILING)
    assert report.covering_ratio > Fraction(3, 4)
    assert report.three_prime_ok and report.inside_ok and report.disjoint_ok
    for piece in report.pieces:
        assert piece.two_prime_ok
        assert piece.piece_ratio > Fraction(3, 4)
        assert piece.l1_form < 2 * EPS_TILING
    assert report.cover_l1 < 2 * EPS_TILING
    tile_ratios = [c.ratio for c in qt.tiles.certificates]
    print(
        f"  covering {float(report.covering_ratio):.4f}, pieces {len(qt.entries)}, "
        f"tile class-2 ratios {[str(r) for r in tile_ratios]}"
    )
    assert time.monotonic() - start < 60.0


@criterion(8, "all trimmed pieces certify class-1 at (K, 3*eps)")
def test_criterion_08_disjointified():
    report = disjointified_invariance(
        tiling_512(), K_UNITS, EPS_TILING, require_gates=False
    )
    assert all(cert.verdict for cert in report.piece_certs)
    assert report.union_cert.verdict
    worst = max(cert.ratio for cert in report.piece_certs)
    assert worst < 3 * EPS_TILING
    print(f"  worst piece ratio {worst} < {3 * EPS_TILING}")


@criterion(9, "quota_fill: exhaustive oracle <= 15 pieces; 5-term chain < 5*eps")
def test_criterion_09_quota_fill():
    # small instances against the exhaustive subset oracle
    rnd = random.Random(9)
    P1 = congruence_partition(Z1, 2)
    eps_small = Fraction(1, 2)
    D_small = eps_dense_simplex(2, eps_small)
    tile_bound = 8
    floor_m = len(D_small) * Fraction(tile_bound) / eps_small
    checked = 0
    while checked < 5:
        sizes = [rnd.randint(3, 8) for _ in range(rnd.randint(12, 15))]
        total = sum(sizes)
        M = max(floor_m, Fraction(total * 9, 10))
        if total <= M:
            continue
        pieces = []
        off = 0
        for s in sizes:
            R = interval(off, off + s)
            pieces.append((R, mean_vector(R, P1)))
            off += s + 3
        report = quota_fill(pieces, D_small, M, eps_small, tile_bound)
        assert 1 - eps_small < report.size_ratio <= 1
        assert all(b.bound_ok for b in report.buckets)
        qualifying = set()
        for mask in range(1, 2 ** len(sizes)):
            tot = sum(sizes[i] for i in range(len(sizes)) if mask >> i & 1)
            if 1 - eps_small < Fraction(tot) / M <= 1:
                qualifying.add(mask)
        assert qualifying, "oracle found no qualifying subset"
        greedy_mask = sum(1 << i for i in report.selection)
        assert greedy_mask in qualifying
        checked += 1

    # the tiling instance: all five chain terms measured, total < 5*eps
    qt = tiling_512()
    P2 = checkerboard_partition(Z2)
    pieces = [(e.R, mean_vector(e.R, P2)) for e in qt.entries]
    D = eps_dense_simplex(2, EPS_TILING)
    M = Fraction(160_000)
    assert M >= len(D) * Fraction(len(qt.tiles.largest)) / EPS_TILING
    report = quota_fill(pieces, D, M, EPS_TILING, len(qt.tiles.largest))
    assert 1 - EPS_TILING < report.size_ratio <= 1
    for bucket in report.buckets:
        assert bucket.slack >= 0
        assert bucket.bound_ok
    B = qt.target
    R = qt.union_R()
    term_cover = mean_vector(B, P2).linf(mean_vector(R, P2))
    assert term_cover < EPS_TILING
    assert report.term_assignment < EPS_TILING
    assert report.term_slack < EPS_TILING
    assert report.term_size < EPS_TILING
    assert report.term_reassign < EPS_TILING
    total_dev = mean_vector(report.A, P2).linf(mean_vector(B, P2))
    chain = term_cover + report.chain_total
    assert total_dev <= chain
    assert total_dev < 5 * EPS_TILING
    print(
        f"  |A|/M = {float(report.size_ratio):.4f}, chain total "
        f"{float(chain):.5f} < {float(5 * EPS_TILING)}"
    )


@criterion(10, "pipeline end-to-end on Z^2 for eps in {1/4, 1/8}, < 5 min")
def test_criterion_10_pipeline():
    start = time.monotonic()
    P = checkerboard_partition(Z2)
    target = MeanVector((Fraction(1, 2), Fraction(1, 2)))
    configs = [
        (Fraction(1, 4), [16], 32),
        (Fraction(1, 8), [32], 64),
    ]
    for eps, tile_sides, stream_side in configs:
        stream = translated_box_stream(Z2, side=stream_side, spacing=stream_side)
        report = unimodular_pipeline(
            stream, P, K_UNITS, eps, target, tile_sides=tile_sides
        )
        assert report.final_invariance.verdict
        assert report.final_invariance.ratio < 3 * eps
        assert 1 - eps < report.size_ratio <= 1
        assert report.vector_gap < 6 * eps
        print(
            f"  eps={eps}: |A|={len(report.A)}, ratio {report.final_invariance.ratio},"
            f" vector gap {report.vector_gap}"
        )
    assert time.monotonic() - start < 300.0


@criterion(11, "affine exactness: translation invariance and modular scaling, 1000 regions")
def test_criterion_11_affine_exactness():
    rnd = random.Random(11)
    for _ in range(1000):
        rects = []
        for _ in range(rnd.randint(1, 4)):
            u1 = Fraction(rnd.randint(-40, 40), rnd.randint(1, 5))
            t1 = Fraction(rnd.randint(-40, 40), rnd.randint(1, 5))
            rects.append(
                Rect(
                    u1,
                    u1 + Fraction(rnd.randint(1, 20), rnd.randint(1, 4)),
                    t1,
                    t1 + Fraction(rnd.randint(1, 20), rnd.randint(1, 4)),
                )
            )
        R = RectUnion(rects)
        k = rnd.randint(-8, 8)
        assert left_translate(dilation(k), R).area == R.area
        j = rnd.randint(-6, 6)
        assert right_dilate(j, R).area == R.area * Fraction(2) ** (-j)


@criterion(12, "Folner rectangles: dilation ratio 2/n exact (n<=64), translation < 1e-3")
def test_criterion_12_affine_folner():
    for n in range(1, 65):
        rep = folner_rect(n)
        assert rep.dilation_ratio == Fraction(2, n)
        if n >= 10:
            assert rep.translation_bound < 1e-3


@criterion(13, "witness family: |Y| <= 1, X disjoint from Y, |F_n y_n| <= 2^-n (n<=20)")
def test_criterion_13_witness():
    fam = nonunimodular_witness(20)
    assert fam.Y.area <= 1
    assert fam.X.intersect(fam.Y).empty
    for comp in fam.components:
        assert comp.Fy.area <= Fraction(2) ** (-comp.n)
    total = sum((c.Fy.area for c in fam.components), Fraction(0))
    assert total <= 1 - Fraction(2) ** (-20)


@criterion(14, "obstruction scan: 10^4 candidates, zero survivors, < 60 s")
def test_criterion_14_obstruction_scan():
    start = time.monotonic()
    fam = nonunimodular_witness(6)
    survivors = 0
    both = 0
    y_heavy = 0
    witnessed = 0
    for A in obstruction_candidates(fam, 10_000, seed=14):
        verdict = obstruction_check(A, fam.X, fam.Y)
        if verdict.small_branch_fired:
            y_heavy += 1
            assert verdict.area_A < 3  # exact size implication
        if verdict.large_branch_fired:
            witnessed += 1
            assert verdict.witness_point is not None
            assert verdict.conditional_lower >= 3
        if verdict.small_branch_fired and verdict.large_branch_fired:
            both += 1
            if verdict.verdict != "impossible":
                survivors += 1
    assert survivors == 0
    assert both > 0 and y_heavy > both and witnessed > both
    print(f"  candidates fired: small {y_heavy}, large {witnessed}, both {both}")
    assert time.monotonic() - start < 60.0


@criterion(15, "lim0: exact vector equality and invariance transfer, 20 instances")
def test_criterion_15_lim0():
    rnd = random.Random(15)
    ran = 0
    configs = []
    for n, eps in [(1, Fraction(1, 2)), (3, Fraction(3, 4)), (4, Fraction(2, 3)),
                   (8, Fraction(1, 3))]:
        for p in (1, 2, 3):
            configs.append((n, eps, p))
    configs = (configs * 2)[:20]
    for n, eps, p in configs:
        X = [dilation(i) for i in range(n)]
        K = [AFF_IDENTITY] if n < 3 else [dilation(1)]
        cuts = sorted(rnd.sample(range(0, 30), p + 1))
        while len(set(cuts)) != p + 1:
            cuts = sorted(rnd.sample(range(0, 30), p + 1))
        P = t_band_partition(0, n + rnd.randint(1, 4), cuts)
        raw = [rnd.randint(0, 9) for _ in range(p)]
        if sum(raw) == 0:
            raw[0] = 1
        mu = [Fraction(v, sum(raw)) for v in raw]
        report = lim0_construct(P, mu, X, K, eps)
        assert report.exact_match  # rational equality, zero tolerance
        assert report.pieces_disjoint and report.transfer_ok
        for counting, measured in report.x_invariance:
            assert measured == counting
            assert counting < eps
        ran += 1
    assert ran == 20
