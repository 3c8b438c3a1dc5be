"""Command-line front end: a thin client of the certificate service.

Every run goes through the HTTP layer -- against a remote server when
``--server`` is given, otherwise against the FastAPI app mounted on an
in-process ASGI transport, so no socket is needed for local use.

Exit codes: 0 when every certificate in the report passes, 1 on certificate
failure (the failing certificates are named on stderr), 2 on config or
request errors.  Reports are byte-stable for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import sys
from pathlib import Path

import httpx

from .runners import RUNNERS

COMMANDS = sorted(RUNNERS)


def post_command(server: str | None, command: str, config: dict) -> httpx.Response:
    """POST one command request; in-process ASGI unless a server is given."""
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.post(f"/v1/{command}", json=config)

    from .service.app import create_app

    async def go():
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://folnerlab.local", timeout=600.0
        ) as client:
            return await client.post(f"/v1/{command}", json=config)

    return asyncio.run(go())


def find_failures(node, path="report") -> list:
    """Paths of every failed certificate-like entry in a report tree."""
    out = []
    if isinstance(node, dict):
        flag = node.get("verdict")
        if flag is False:
            label = node.get("kind") or node.get("class") or "certificate"
            out.append(f"{path} ({label})")
        for key, value in node.items():
            if key in ("verdict", "pass", "config"):
                continue
            out.extend(find_failures(value, f"{path}.{key}"))
    elif isinstance(node, list):
        for i, value in enumerate(node):
            out.extend(find_failures(value, f"{path}[{i}]"))
    return out


def dump_report(report: dict, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    path.write_text(json.dumps(report, indent=2) + "\n")
    return path


def write_svgs(report: dict, out_dir: Path) -> list:
    from . import svg

    written = []

    def emit(name: str, content: str):
        path = out_dir / name
        path.write_text(content)
        written.append(path)

    command = report.get("command")
    try:
        if command == "quasitile":
            emit("tiling.svg", svg.tiling_svg(report["tiling"]))
        elif command == "affine-obstruction":
            witness = report["witness"]
            # components carry areas only; re-render X/Y from a fresh witness
            from .affine import nonunimodular_witness

            fam = nonunimodular_witness(witness["n_max"])
            # X's components are taller than Y's by orders of magnitude;
            # clip the drawing so both stay visible
            emit(
                "witness.svg",
                svg.rect_unions_svg(
                    [("X", fam.X.to_json()), ("Y", fam.Y.to_json())], t_cap=8.0
                ),
            )
        elif command == "affine-folner":
            from .affine import folner_rect

            regions = [
                (f"F_{row['n']}", folner_rect(row["n"]).F.to_json())
                for row in report.get("rows", [])
                if row["n"] <= 8  # taller bands drown the drawing
            ]
            if regions:
                emit("folner.svg", svg.rect_unions_svg(regions))
    except ValueError as exc:
        print(f"svg skipped: {exc}", file=sys.stderr)
    return written


# ---------------------------------------------------------------------------
# report tables


TABLE_FIELDS = {
    "wns": [
        "trial", "N", "max_deviation", "max_deviation_float",
        "bound", "disjoint_ok", "verdict",
    ],
    "affine-folner": [
        "n", "area", "dilation_ratio", "dilation_ratio_decimal",
        "dilation_exact", "translation_bound",
    ],
    "quasitile": [
        "target_size", "pieces", "covering_ratio", "covering_ratio_float",
        "verdict",
    ],
}


def _rows_for_table(report: dict) -> list:
    command = report.get("command")
    if command == "wns":
        return [
            {
                "trial": t.get("trial"),
                "N": t.get("N"),
                "max_deviation": t.get("max_deviation"),
                "max_deviation_float": float(eval_frac(t.get("max_deviation"))),
                "bound": t.get("bound"),
                "disjoint_ok": t.get("disjoint_ok"),
                "verdict": t.get("verdict"),
            }
            for t in report.get("trials", [])
        ]
    if command == "affine-folner":
        return [dict(row) for row in report.get("rows", [])]
    if command == "quasitile":
        ver = report.get("verification", {})
        return [
            {
                "target_size": report.get("tiling", {}).get("target_size"),
                "pieces": len(report.get("tiling", {}).get("pieces", [])),
                "covering_ratio": ver.get("covering_ratio"),
                "covering_ratio_float": float(eval_frac(ver.get("covering_ratio"))),
                "verdict": ver.get("verdict"),
            }
        ]
    flat = {}
    for key, value in report.items():
        if isinstance(value, (str, int, float, bool)):
            flat[key] = value
    return [flat]


def eval_frac(s):
    from fractions import Fraction

    return Fraction(s) if s is not None else Fraction(0)


def report_table(reports: list, command: str | None = None) -> str:
    """CSV for a homogeneous list of reports; exact strings plus floats.

    Zero data rows (no reports, or reports with no trials) still produce the
    header row when the command is known.
    """
    commands = {r.get("command") for r in reports}
    if command is not None:
        commands.add(command)
    if len(commands) > 1:
        raise ValueError(f"heterogeneous reports: {sorted(commands)}")
    rows = []
    for report in reports:
        rows.extend(_rows_for_table(report))
    if rows:
        fields = list(rows[0].keys())
    elif commands and next(iter(commands)) in TABLE_FIELDS:
        fields = TABLE_FIELDS[next(iter(commands))]
    else:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="folnerlab",
        description="Certified Folner-set constructions and verifications",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} command from a config file")
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default="out", help="directory for report files")
        p.add_argument("--svg", action="store_true", help="dump 2-D SVG renderings")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--server", default=None, help="remote service base URL")
    table_p = sub.add_parser("table", help="flatten reports into a CSV")
    table_p.add_argument("reports", nargs="+", help="report.json files")
    table_p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    serve_p = sub.add_parser("serve", help="run the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8080)

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    if args.command == "table":
        try:
            reports = [json.loads(Path(p).read_text()) for p in args.reports]
            text = report_table(reports)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            print(f"table error: {exc}", file=sys.stderr)
            return 2
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return 0

    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if not isinstance(config, dict):
        print("config error: top level must be an object", file=sys.stderr)
        return 2
    if args.seed is not None:
        config["seed"] = args.seed

    try:
        response = post_command(args.server, args.command, config)
    except httpx.HTTPError as exc:
        print(f"request failed: {exc}", file=sys.stderr)
        return 2

    if response.status_code in (400, 422):
        print(f"config rejected: {response.text}", file=sys.stderr)
        return 2
    if response.status_code == 409:
        print(f"certificate failure: {response.text}", file=sys.stderr)
        return 1
    if response.status_code != 200:
        print(f"unexpected status {response.status_code}: {response.text}", file=sys.stderr)
        return 2

    report = response.json()
    out_dir = Path(args.out)
    path = dump_report(report, out_dir)
    if args.svg:
        for svg_path in write_svgs(report, out_dir):
            print(f"wrote {svg_path}")
    print(f"wrote {path}")
    if report.get("pass"):
        print(f"{args.command}: all certificates pass")
        return 0
    failures = find_failures(report) or ["report.pass"]
    for failure in failures:
        print(f"FAILED: {failure}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
