"""Command-line entry point: ``rusched run | sweep | report``."""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

from .circuit import QasmError
from .config import ConfigError, RunConfig, load_config_file, parse_axis, resolve
from .engine import SCHEMES, SchedulingError
from .experiment import atomic_write, merge_rows, read_rows, rows_to_csv, run_many
from .report import build_report, render_text


def _add_config_flags(p: argparse.ArgumentParser, with_scheme: bool = True):
    p.add_argument("--config", help="YAML file with RunConfig keys (CLI flags override it)")
    if with_scheme:
        p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--circuit", help="generator spec such as qft:18, or an OpenQASM file path")
    p.add_argument("--d", type=int, help="code distance (odd, >= 3)")
    p.add_argument("--p", type=float, help="physical error rate")
    p.add_argument("--k", type=int, help="cycles between MST recomputations")
    p.add_argument("--c", type=int, help="activity window in cycles")
    p.add_argument("--tau", dest="tau_mst", type=int, help="MST computation latency in cycles")
    p.add_argument("--compression", type=float, help="fraction (0-1) or percentage of compressed blocks")
    p.add_argument("--compression-seed", type=int)
    p.add_argument("--seeds", help="N (seeds 0..N-1), a comma list, or lo:hi")
    p.add_argument("--q0", type=float, help="per-sub-patch preparation success probability")
    p.add_argument("--expand-c", type=float, help="expansion failure slope")
    p.add_argument("--prep-attempt-rounds", type=int)
    p.add_argument("--expansion-rounds", type=int)
    p.add_argument("--out", dest="out_dir", help="output directory (overrides $RUSCHED_OUT)")
    p.add_argument("--trace", action="store_true", default=None, help="also write per-gate JSONL traces")
    p.add_argument("--jobs", type=int, default=None, help="worker processes")


_FLAG_KEYS = ("scheme", "circuit", "d", "p", "k", "c", "tau_mst", "compression", "compression_seed", "seeds",
              "q0", "expand_c", "prep_attempt_rounds", "expansion_rounds", "out_dir", "trace")


def _resolve(args) -> tuple[RunConfig, dict]:
    file_values = load_config_file(args.config) if args.config else {}
    extras = {k: file_values.pop(k) for k in ("axes", "schemes", "jobs") if k in file_values}
    cli = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    cfg = resolve(file_values, cli)
    if args.jobs is not None:
        extras["jobs"] = args.jobs
    return cfg, extras


def _write_summary(out_dir: Path, name: str, rows: list[dict]) -> Path:
    path = out_dir / name
    existing = read_rows(path) if path.exists() else []
    atomic_write(path, rows_to_csv(merge_rows(existing, rows)))
    return path


def cmd_run(args) -> int:
    cfg, extras = _resolve(args)
    jobs = int(extras.get("jobs", 1))
    rows = run_many([(cfg, s) for s in cfg.seeds], jobs)
    path = _write_summary(Path(cfg.out_dir), "summary.csv", rows)
    for r in rows:
        print(f"{r['circuit']} {r['scheme']} seed={r['seed']}: {r['total_cycles']:.1f} cycles, "
              f"idle {r['mean_idle_fraction']:.3f}")
    print(f"wrote {len(rows)} metrics files and {path}")
    return 0


def cmd_sweep(args) -> int:
    cfg, extras = _resolve(args)
    axis_specs = list(args.axis or [])
    file_axes = extras.get("axes") or {}
    axes = dict(parse_axis(f"{k}={','.join(map(str, v))}" if isinstance(v, (list, tuple)) else f"{k}={v}")
                for k, v in file_axes.items())
    axes.update(dict(parse_axis(a) for a in axis_specs))
    schemes = args.schemes or extras.get("schemes") or "dynamic,static_greedy"
    schemes = [s.strip() for s in (schemes.split(",") if isinstance(schemes, str) else schemes) if s.strip()]
    circuits = [c.strip() for c in (args.circuits or cfg.circuit).split(",") if c.strip()]
    bad = [s for s in schemes if s not in SCHEMES]
    if bad or not schemes:
        raise ConfigError(f"unknown schemes {bad}; choose from {', '.join(SCHEMES)}")
    names = list(axes)
    points = []
    for circ in circuits:
        for combo in itertools.product(*(axes[n] for n in names)):
            for scheme in schemes:
                point = cfg.with_(circuit=circ, scheme=scheme, **dict(zip(names, combo)))
                points.extend((point, s) for s in cfg.seeds)
    rows = run_many(points, int(extras.get("jobs", 1)))
    expected = len(circuits) * len(schemes) * len(cfg.seeds)
    for n in names:
        expected *= len(axes[n])
    assert len(rows) == expected
    out = Path(cfg.out_dir)
    name = args.name or "sweep.csv"
    atomic_write(out / name, rows_to_csv(merge_rows([], rows)))
    print(f"wrote {len(rows)} rows to {out / name}")
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.csv:
        rows.extend(read_rows(path))
    if not rows:
        raise ValueError("no result rows in the given files")
    rep = build_report(rows)
    text = render_text(rep)
    print(text, end="")
    if args.out_dir:
        out = Path(args.out_dir)
        atomic_write(out / "summary.txt", text)
        prov = {"sources": [str(p) for p in args.csv], "reference": rep["reference"]}
        for key in ("normalized", "histograms", "samples", "speedups"):
            atomic_write(out / f"{key}.json", json.dumps({"provenance": prov, key: rep[key]}, indent=1,
                                                         sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rusched", description="Dynamic lattice-surgery scheduling simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one configuration over several seeds")
    _add_config_flags(run)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="Cartesian sweep over parameter axes, schemes and seeds")
    _add_config_flags(sweep, with_scheme=False)
    sweep.add_argument("--axis", action="append", help="name=v1,v2,... (repeatable)")
    sweep.add_argument("--schemes", help="comma list of schemes (default dynamic,static_greedy)")
    sweep.add_argument("--circuits", help="comma list of circuit sources (default: --circuit)")
    sweep.add_argument("--name", help="output CSV file name (default sweep.csv)")
    sweep.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="tables and plot data from result CSVs")
    rep.add_argument("csv", nargs="+")
    rep.add_argument("--out", dest="out_dir", help="directory for plot-data JSON files")
    rep.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, QasmError, SchedulingError, ValueError, OSError, RuntimeError) as e:
        print(f"rusched: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
