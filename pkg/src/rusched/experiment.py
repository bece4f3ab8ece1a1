"""Single-run execution, result rows and atomic file output."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .circuit import load_circuit
from .config import RunConfig
from .engine import MetricsRecord, run_scheme, write_trace
from .fabric import build_star_grid, compress

# Long-format result schema shared by `run`, `sweep` and `report`.
COLUMNS = (
    "circuit", "scheme", "seed", "d", "p", "k", "c", "tau_mst", "compression", "compression_seed",
    "q0", "expand_c", "num_qubits", "num_gates", "total_rounds", "total_cycles", "mean_idle_fraction",
    "cnot_count", "rz_count", "cnot_hist", "rz_hist", "audits_ok", "config",
)


def build_fabric(cfg: RunConfig, num_qubits: int):
    fabric = build_star_grid(num_qubits)
    if cfg.compression > 0:
        fabric, _ = compress(fabric, cfg.compression, cfg.compression_seed)
    return fabric


def execute(cfg: RunConfig, seed: int) -> tuple[MetricsRecord, list]:
    circuit = load_circuit(cfg.circuit)
    fabric = build_fabric(cfg, circuit.num_qubits)
    m, traces = run_scheme(cfg.scheme, circuit, fabric, cfg.timing(), cfg.rus(),
                           k=cfg.k, c=cfg.c, tau=cfg.tau_mst, seed=seed)
    m.config = {**m.config, "run": _row_config(cfg, seed), "circuit_source": cfg.circuit,
                "fabric": {"compression": cfg.compression, "compression_seed": cfg.compression_seed,
                           "compressed_blocks": sorted(fabric.compressed)}}
    return m, traces


def _row_config(cfg: RunConfig, seed: int) -> dict:
    # output location is not part of a run's identity
    out = {**cfg.to_dict(), "seeds": [seed]}
    out.pop("out_dir")
    out.pop("trace")
    return out


def row_of(cfg: RunConfig, m: MetricsRecord) -> dict:
    return {
        "circuit": cfg.circuit, "scheme": cfg.scheme, "seed": m.seed, "d": cfg.d, "p": cfg.p, "k": cfg.k,
        "c": cfg.c, "tau_mst": cfg.tau_mst, "compression": cfg.compression,
        "compression_seed": cfg.compression_seed, "q0": cfg.q0, "expand_c": cfg.expand_c,
        "num_qubits": m.num_qubits, "num_gates": m.num_gates, "total_rounds": m.total_rounds,
        "total_cycles": m.total_cycles, "mean_idle_fraction": round(m.mean_idle_fraction, 6),
        "cnot_count": sum(m.cnot_histogram.values()), "rz_count": sum(m.rz_histogram.values()),
        "cnot_hist": json.dumps({str(k): v for k, v in sorted(m.cnot_histogram.items())}),
        "rz_hist": json.dumps({str(k): v for k, v in sorted(m.rz_histogram.items())}),
        "audits_ok": m.audits_ok,
        "config": json.dumps(_row_config(cfg, m.seed), sort_keys=True),
    }


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_stem(cfg: RunConfig, seed: int) -> str:
    circ = cfg.circuit.replace(":", "-").replace("/", "_").replace("\\", "_")
    return (f"{circ}__{cfg.scheme}__d{cfg.d}_p{cfg.p:g}_k{cfg.k}_c{cfg.c}_tau{cfg.tau_mst}"
            f"_comp{cfg.compression:g}__seed{seed}")


def run_point(cfg: RunConfig, seed: int) -> dict:
    """Run one (config, seed) pair, write its metrics (and trace) files, return the CSV row."""
    m, traces = execute(cfg, seed)
    out = Path(cfg.out_dir)
    stem = run_stem(cfg, seed)
    atomic_write(out / "metrics" / f"{stem}.json", m.to_json() + "\n")
    if cfg.trace:
        tmp = out / "traces" / f".{stem}.jsonl.tmp"
        tmp.parent.mkdir(parents=True, exist_ok=True)
        write_trace(traces, tmp)
        os.replace(tmp, out / "traces" / f"{stem}.jsonl")
    if not m.audits_ok:
        raise RuntimeError(f"post-run audit failed for {stem}: {m.audits}")
    return row_of(cfg, m)


def _star(args):
    return run_point(*args)


def run_many(points: list[tuple[RunConfig, int]], jobs: int = 1) -> list[dict]:
    if jobs <= 1 or len(points) <= 1:
        return [run_point(c, s) for c, s in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_star, points))


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        unknown = [h for h in header if h not in COLUMNS]
        missing = [h for h in COLUMNS if h not in header]
        if unknown or missing:
            raise ValueError(f"{path}: schema mismatch (unknown columns {unknown}, missing {missing})")
        return list(reader)


def merge_rows(existing: list[dict], new: list[dict]) -> list[dict]:
    """Later rows replace earlier rows with the same configuration and seed."""
    key = lambda r: (r["config"], str(r["seed"]), r["scheme"], r["circuit"])
    merged = {key(r): r for r in existing}
    for r in new:
        merged[key(r)] = r
    return sorted(merged.values(), key=lambda r: (r["circuit"], r["scheme"], r["config"], int(r["seed"])))
