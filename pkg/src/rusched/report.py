"""Aggregate result rows into tables and plot-ready data files.

Execution times are normalised per benchmark to the mean of the
``static_greedy`` runs sharing the same parameters.  Histograms use bins
1..20 (bin 1 also absorbs zero-cycle gates) plus one overflow bin.
"""
from __future__ import annotations

import json
from collections import defaultdict
from statistics import mean

from .engine import geomean

REFERENCE = "static_greedy"
HIST_BINS = 20
PARAM_KEYS = ("d", "p", "k", "c", "tau_mst", "compression", "compression_seed", "q0", "expand_c")
# Parameters the static baselines ignore; they are dropped when pairing a
# scheme with its reference so one baseline run can serve several k values.
DYNAMIC_ONLY = ("k", "c", "tau_mst")


_INT_KEYS = {"d", "k", "c", "tau_mst", "compression_seed"}


def _params(row) -> tuple:
    return tuple((k, int(float(row[k])) if k in _INT_KEYS else float(row[k])) for k in PARAM_KEYS)


def _ref_params(params: tuple) -> tuple:
    return tuple((k, v) for k, v in params if k not in DYNAMIC_ONLY)


def bin_histogram(hist: dict) -> list[int]:
    out = [0] * (HIST_BINS + 1)
    for k, v in hist.items():
        k = int(k)
        out[min(max(k, 1), HIST_BINS + 1) - 1] += int(v)
    return out


def bin_labels() -> list[str]:
    return [str(i) for i in range(1, HIST_BINS + 1)] + [f">{HIST_BINS}"]


def build_report(rows: list[dict]) -> dict:
    groups: dict[tuple, list[dict]] = defaultdict(list)
    for r in rows:
        groups[(r["circuit"], r["scheme"], _params(r))].append(r)

    ref_mean = {}
    for (circ, scheme, params), rs in groups.items():
        if scheme == REFERENCE:
            ref_mean[(circ, _ref_params(params))] = mean(float(r["total_cycles"]) for r in rs)

    bars, samples = [], []
    for (circ, scheme, params), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], str(kv[0][2]))):
        times = [float(r["total_cycles"]) for r in sorted(rs, key=lambda r: int(r["seed"]))]
        ref = ref_mean.get((circ, _ref_params(params)))
        entry = {"circuit": circ, "scheme": scheme, "params": dict(params), "seeds": len(times),
                 "mean_cycles": mean(times), "min_cycles": min(times), "max_cycles": max(times),
                 "mean_idle_fraction": mean(float(r["mean_idle_fraction"]) for r in rs)}
        if ref:
            entry.update(normalized_mean=entry["mean_cycles"] / ref, normalized_min=min(times) / ref,
                         normalized_max=max(times) / ref)
        bars.append(entry)
        samples.append({"circuit": circ, "scheme": scheme, "params": dict(params),
                        "seeds": sorted(int(r["seed"]) for r in rs), "total_cycles": times,
                        "normalized": [t / ref for t in times] if ref else None})

    hists: dict[tuple, dict] = {}
    for r in rows:
        key = (r["scheme"], _params(r))
        h = hists.setdefault(key, {"cnot": [0] * (HIST_BINS + 1), "rz": [0] * (HIST_BINS + 1)})
        for kind in ("cnot", "rz"):
            for i, v in enumerate(bin_histogram(json.loads(r[f"{kind}_hist"]))):
                h[kind][i] += v
    histograms = [{"scheme": s, "params": dict(p), "bins": bin_labels(), "cnot": h["cnot"], "rz": h["rz"]}
                  for (s, p), h in sorted(hists.items(), key=lambda kv: (kv[0][0], str(kv[0][1])))]

    speedups = []
    by_setting: dict[tuple, dict[str, list]] = defaultdict(lambda: defaultdict(list))
    for b in bars:
        if "normalized_mean" in b:
            by_setting[(b["scheme"], tuple(sorted(b["params"].items())))][b["circuit"]] = b["normalized_mean"]
    for (scheme, params), per_circ in sorted(by_setting.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        if scheme == REFERENCE:
            continue
        speedups.append({"scheme": scheme, "params": dict(params), "circuits": sorted(per_circ),
                         "geomean_speedup": geomean(1.0 / v for v in per_circ.values())})
    return {"reference": REFERENCE, "normalized": bars, "samples": samples, "histograms": histograms,
            "speedups": speedups}


def render_text(rep: dict) -> str:
    lines = [f"Execution time in cycles; normalised to {rep['reference']} per benchmark (min/max over seeds).", ""]
    varying = [k for k in PARAM_KEYS if len({b["params"][k] for b in rep["normalized"]}) > 1]
    label = lambda b: " ".join(f"{k}={b['params'][k]}" for k in varying)
    width = max([len("params")] + [len(label(b)) for b in rep["normalized"]]) if varying else 0
    pcol = lambda text: f"{text:<{width}} " if varying else ""
    header = f"{'circuit':<20} {'scheme':<15} {pcol('params')}{'seeds':>5} {'mean':>10} {'min':>10} {'max':>10} {'norm':>7} {'idle':>6}"
    lines.append(header)
    lines.append("-" * len(header))
    for b in rep["normalized"]:
        norm = f"{b['normalized_mean']:.3f}" if "normalized_mean" in b else "-"
        lines.append(f"{b['circuit']:<20} {b['scheme']:<15} {pcol(label(b))}{b['seeds']:>5} {b['mean_cycles']:>10.1f} "
                     f"{b['min_cycles']:>10.1f} {b['max_cycles']:>10.1f} {norm:>7} {b['mean_idle_fraction']:>6.3f}")
    lines.append("")
    for s in rep["speedups"]:
        suffix = "  [" + " ".join(f"{k}={s['params'][k]}" for k in varying) + "]" if varying else ""
        lines.append(f"{s['scheme']} vs {rep['reference']}: {s['geomean_speedup']:.2f}{suffix}")
    if not rep["speedups"]:
        lines.append(f"(no {rep['reference']} rows to compare against)")
    return "\n".join(lines) + "\n"
