"""Command runners: parsed config dict in, report dict out.

Every service endpoint and CLI subcommand funnels through one of these.
Reports are plain JSON-serializable dicts with ``"schema": 1``, every
rational as an exact "p/q" string (decimals are advisory duplicates), and a
top-level ``"pass"`` that is true iff every gating certificate holds.
Content is deterministic given (config, seed): element lists are sorted and
no timestamps or environment state ever enter a report.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .errors import ConfigError
from . import affine
from .constructions import (
    TargetMean,
    hs_midpoint,
    pigeonhole_balance,
    union_midpoint,
    wns_discrete,
)
from .groups import FinSet, Group, ZdGroup, get_group
from .quasitiling import (
    TileSet,
    disjointified_invariance,
    eps_dense_simplex,
    quasi_tile,
    quota_fill,
    translated_box_stream,
    unimodular_pipeline,
    verify_quasi_tiling,
)
from .rationals import rat, rat_str
from .setcalc import (
    MeanVector,
    PartitionRule,
    checkerboard_partition,
    congruence_partition,
    invariance,
    mean_vector,
    translate,
)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# config spec parsing


def parse_epsilon(value, name="epsilon") -> Fraction:
    eps = rat(value)
    if not 0 < eps < 1:
        raise ConfigError(f"{name} must lie in (0,1), got {eps}")
    return eps


def parse_set_spec(group: Group, spec) -> FinSet:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"set spec must be an object with 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "box":
        side = spec.get("side")
        if not isinstance(side, int) or side < 1:
            raise ConfigError(f"box spec needs integer side >= 1, got {side!r}")
        out = group.box(side)
        if "translate" in spec:
            out = translate(group.element_from_coords(spec["translate"]), out)
        return out
    if kind == "elements":
        elems = spec.get("elements")
        if not isinstance(elems, list) or not elems:
            raise ConfigError("elements spec needs a nonempty 'elements' list")
        return FinSet(
            group, frozenset(group.element_from_coords(c) for c in elems)
        )
    if kind == "units":
        if not isinstance(group, ZdGroup):
            raise ConfigError("'units' K-spec needs a Z^d backend")
        elems = set()
        if spec.get("identity", True):
            elems.add(group.identity)
        for i in range(group.d):
            e_i = tuple(1 if j == i else 0 for j in range(group.d))
            elems.add(e_i)
            if spec.get("inverses", False):
                elems.add(tuple(-x for x in e_i))
        return FinSet(group, frozenset(elems))
    raise ConfigError(f"unknown set spec kind {kind!r}")


def parse_partition_spec(group: Group, spec) -> PartitionRule:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"partition spec must be an object with 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "congruence":
        modulus = spec.get("modulus")
        if not isinstance(modulus, int) or modulus < 1:
            raise ConfigError(f"congruence partition needs integer modulus, got {modulus!r}")
        return congruence_partition(group, modulus, spec.get("coordinate", 0))
    if kind == "checkerboard":
        return checkerboard_partition(group)
    raise ConfigError(f"unknown partition spec kind {kind!r}")


def parse_target(values, p: int) -> TargetMean:
    if not isinstance(values, list) or len(values) != p:
        raise ConfigError(f"target must be a list of {p} rationals, got {values!r}")
    return TargetMean(tuple(rat(v) for v in values))


def _require(config: dict, *keys):
    for key in keys:
        if key not in config:
            raise ConfigError(f"config is missing required key {key!r}")


def _report(command: str, config: dict, body: dict, passed: bool) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": config,
        **body,
        "pass": bool(passed),
    }


# ---------------------------------------------------------------------------
# runners


def run_invariance(config: dict) -> dict:
    _require(config, "backend", "set", "K", "epsilon")
    group = get_group(config["backend"])
    A = parse_set_spec(group, config["set"])
    K = parse_set_spec(group, config["K"])
    eps = parse_epsilon(config["epsilon"])
    klass = config.get("class", 0)
    cert = invariance(klass, K, eps, A)
    return _report(
        "invariance",
        config,
        {"set_size": len(A), "certificates": [cert.to_json()]},
        cert.verdict,
    )


def _random_target(rnd: random.Random, p: int) -> TargetMean:
    raw = [rnd.randint(0, 24) for _ in range(p)]
    if sum(raw) == 0:
        raw[rnd.randrange(p)] = 1
    total = sum(raw)
    return TargetMean(tuple(Fraction(a, total) for a in raw))


def run_wns(config: dict) -> dict:
    _require(config, "backend", "partition", "x")
    group = get_group(config["backend"])
    P = parse_partition_spec(group, config["partition"])
    x = group.element_from_coords(config["x"])
    trials = config.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"trials must be a positive integer, got {trials!r}")
    rnd = random.Random(config.get("seed", 0))
    rows = []
    all_ok = True
    worst = Fraction(0)
    for t in range(trials):
        if t == 0 and "target" in config:
            target = parse_target(config["target"], P.p)
        else:
            target = _random_target(rnd, P.p)
        report = wns_discrete(P, target, x)
        worst = max(worst, report.max_deviation)
        all_ok = all_ok and report.ok
        row = report.to_json()
        row["target"] = target.to_json()
        row["trial"] = t
        rows.append(row)
    return _report(
        "wns",
        config,
        {"trials": rows, "bound": rat_str(Fraction(1, P.p)), "max_deviation": rat_str(worst)},
        all_ok,
    )


def run_midpoint(config: dict) -> dict:
    _require(config, "backend", "A", "B", "delta")
    group = get_group(config["backend"])
    A = parse_set_spec(group, config["A"])
    B = parse_set_spec(group, config["B"])
    delta = rat(config["delta"])
    K = parse_set_spec(group, config["K"]) if "K" in config else None
    mode = config.get("mode", "union")
    if mode == "union":
        union, cert = union_midpoint(A, B, delta, K=K)
        body = {
            "sizes": [len(A), len(B), len(union)],
            "certificates": [cert.to_json()],
        }
        return _report("midpoint", config, body, cert.verdict)
    if mode == "hs":
        _require(config, "partition", "K")
        P = parse_partition_spec(group, config["partition"])
        report = hs_midpoint(A, B, delta, P, K)
        return _report(
            "midpoint", config, {"hs": report.to_json()}, report.ok
        )
    raise ConfigError(f"unknown midpoint mode {mode!r}")


def run_quasitile(config: dict) -> dict:
    _require(config, "backend", "target", "tile_sides", "epsilon", "K")
    group = get_group(config["backend"])
    if not isinstance(group, ZdGroup):
        raise ConfigError("quasitile configs need a Z^d backend")
    A = parse_set_spec(group, config["target"])
    K = parse_set_spec(group, config["K"])
    eps = parse_epsilon(config["epsilon"])
    sides = config["tile_sides"]
    if not isinstance(sides, list) or not all(isinstance(s, int) for s in sides):
        raise ConfigError("tile_sides must be a list of integers")
    tiles = TileSet.build([group.box(s) for s in sorted(sides)], K, eps)
    qt = quasi_tile(A, tiles, eps)
    ver = verify_quasi_tiling(qt, eps)
    body = {
        "tiles": tiles.quality_json(),  # informational: input quality
        "tiling": qt.to_json(),
        "verification": ver.to_json(),
    }
    passed = ver.ok
    if config.get("certify_pieces", True) and qt.entries:
        pieces = disjointified_invariance(qt, K, eps, require_gates=False)
        body["pieces"] = pieces.to_json()
        passed = passed and pieces.ok
    return _report("quasitile", config, body, passed)


def run_quotafill(config: dict) -> dict:
    _require(config, "backend", "piece_sizes", "partition", "epsilon", "M", "tile_bound")
    group = get_group(config["backend"])
    if not isinstance(group, ZdGroup) or group.d != 1:
        raise ConfigError("quotafill synthetic pieces are built on the z1 backend")
    P = parse_partition_spec(group, config["partition"])
    sizes = config["piece_sizes"]
    if not isinstance(sizes, list) or not all(
        isinstance(s, int) and s > 0 for s in sizes
    ):
        raise ConfigError("piece_sizes must be a list of positive integers")
    eps = parse_epsilon(config["epsilon"])
    gap = config.get("gap", 5)
    pieces = []
    off = 0
    for s in sizes:
        R = FinSet(group, frozenset((x,) for x in range(off, off + s)))
        pieces.append((R, mean_vector(R, P)))
        off += s + gap
    D = eps_dense_simplex(P.p, eps)
    report = quota_fill(pieces, D, rat(config["M"]), eps, config["tile_bound"])
    return _report(
        "quotafill",
        config,
        {"net": D.to_json(), "quota": report.to_json()},
        report.ok,
    )


def run_pipeline(config: dict) -> dict:
    _require(config, "backend", "partition", "target", "K", "epsilon", "tile_sides", "stream")
    group = get_group(config["backend"])
    if not isinstance(group, ZdGroup):
        raise ConfigError("pipeline configs need a Z^d backend")
    P = parse_partition_spec(group, config["partition"])
    target = MeanVector(tuple(rat(v) for v in config["target"]))
    if len(target) != P.p:
        raise ConfigError(f"target must have {P.p} entries")
    K = parse_set_spec(group, config["K"])
    eps = parse_epsilon(config["epsilon"])
    stream_spec = config["stream"]
    if not isinstance(stream_spec, dict) or "side" not in stream_spec:
        raise ConfigError("stream spec needs a 'side'")
    stream = translated_box_stream(
        group,
        side=stream_spec["side"],
        spacing=stream_spec.get("spacing", stream_spec["side"]),
        axis=stream_spec.get("axis", 0),
    )
    report = unimodular_pipeline(
        stream, P, K, eps, target, tile_sides=config["tile_sides"]
    )
    return _report("pipeline", config, {"pipeline": report.to_json()}, report.ok)


def run_affine_folner(config: dict) -> dict:
    ns = config.get("n_values")
    if not isinstance(ns, list) or not all(isinstance(n, int) and n >= 1 for n in ns):
        raise ConfigError("affine-folner needs 'n_values': a list of integers >= 1")
    rows = []
    all_ok = True
    for n in ns:
        rep = affine.folner_rect(n)
        exact = rep.dilation_ratio == Fraction(2, n)
        all_ok = all_ok and exact
        rows.append(
            {
                "n": n,
                "area": rat_str(rep.F.area),
                "dilation_ratio": rat_str(rep.dilation_ratio),
                "dilation_ratio_decimal": float(rep.dilation_ratio),
                "dilation_exact": exact,
                "translation_bound": rep.translation_bound,
            }
        )
    return _report("affine-folner", config, {"rows": rows}, all_ok)


def run_affine_obstruction(config: dict) -> dict:
    n_max = config.get("n_max", 6)
    count = config.get("candidates", 1000)
    seed = config.get("seed", 0)
    if not isinstance(n_max, int) or n_max < 1:
        raise ConfigError("n_max must be a positive integer")
    if not isinstance(count, int) or count < 1:
        raise ConfigError("candidates must be a positive integer")
    fam = affine.nonunimodular_witness(n_max)
    counts = {"impossible": 0, "small_only": 0, "large_only": 0, "neither": 0}
    survivors = 0
    for A in affine.obstruction_candidates(fam, count, seed):
        verdict = affine.obstruction_check(A, fam.X, fam.Y)
        counts[verdict.verdict] += 1
        both_fired = verdict.small_branch_fired and verdict.large_branch_fired
        if both_fired and verdict.verdict != "impossible":
            survivors += 1
    body = {
        "witness": fam.to_json(),
        "counts": counts,
        "survivors": survivors,
    }
    return _report("affine-obstruction", config, body, survivors == 0)


RUNNERS = {
    "invariance": run_invariance,
    "wns": run_wns,
    "midpoint": run_midpoint,
    "quasitile": run_quasitile,
    "quotafill": run_quotafill,
    "pipeline": run_pipeline,
    "affine-folner": run_affine_folner,
    "affine-obstruction": run_affine_obstruction,
}


def run_command(command: str, config: dict) -> dict:
    if command not in RUNNERS:
        raise ConfigError(f"unknown command {command!r}; available: {sorted(RUNNERS)}")
    declared = config.get("command")
    if declared is not None and declared != command:
        raise ConfigError(
            f"config declares command {declared!r} but {command!r} was invoked"
        )
    return RUNNERS[command](config)
