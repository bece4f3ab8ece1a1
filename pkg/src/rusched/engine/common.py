"""Records, audits and metrics shared by every scheduling scheme."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from ..circuit import Circuit, DependencyDag, Gate, format_angle


class Phase(str, Enum):
    WAITING = "Waiting"
    PATH_PENDING = "PathPending"
    EXECUTING = "Executing"
    PREP = "Prep"
    INJECTING = "Injecting"
    DONE = "Done"


class SchedulingError(RuntimeError):
    """Raised when a run cannot make progress; carries a state dump."""

    def __init__(self, msg: str, dump: dict | None = None):
        super().__init__(msg)
        self.dump = dump or {}


@dataclass
class GateState:
    gate: Gate
    phase: Phase = Phase.WAITING
    scheduled_at: int | None = None
    started_at: int | None = None
    finished_at: int | None = None
    path: list[int] = field(default_factory=list)
    rotations: list[int] = field(default_factory=list)
    injections: int = 0
    prep_restarts: int = 0
    injection_kind: str | None = None

    def start(self, t: int):
        if self.started_at is None:
            self.started_at = t

    def finish(self, t: int):
        if self.scheduled_at is None:
            self.scheduled_at = t
        self.start(t)
        self.finished_at = t
        self.phase = Phase.DONE

    def cycles_after_schedule(self, d: int) -> int:
        return math.ceil((self.finished_at - self.scheduled_at) / d)

    def trace(self, d: int) -> "TraceRecord":
        if self.phase is not Phase.DONE:
            raise SchedulingError(f"gate {self.gate.id} never completed")
        g = self.gate
        return TraceRecord(
            gate=g.id, kind=g.kind.value, qubits=list(g.qubits),
            theta=None if g.theta is None else format_angle(g.theta),
            scheduled_at=self.scheduled_at, started_at=self.started_at, finished_at=self.finished_at,
            latency_cycles=self.cycles_after_schedule(d), path=list(self.path),
            rotations=list(self.rotations), injections=self.injections,
            prep_restarts=self.prep_restarts, injection_kind=self.injection_kind,
        )


@dataclass
class TraceRecord:
    gate: int
    kind: str
    qubits: list[int]
    theta: str | None
    scheduled_at: int
    started_at: int
    finished_at: int
    latency_cycles: int
    path: list[int]
    rotations: list[int]
    injections: int
    prep_restarts: int
    injection_kind: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def write_trace(traces: Iterable[TraceRecord], path) -> None:
    with open(path, "w") as fh:
        for r in traces:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


class ResourceLog:
    """Occupancy intervals [start, end) per resource, for the exclusivity audit.

    Resources are ``("a", id)`` for ancillas and ``("q", id)`` for data qubits.
    """

    def __init__(self):
        self.intervals: dict[tuple[str, int], list[tuple[int, int, int, str]]] = {}

    def add(self, res: tuple[str, int], start: int, end: int, gate: int, what: str):
        if end < start:
            raise ValueError("interval ends before it starts")
        if end > start:
            self.intervals.setdefault(res, []).append((start, end, gate, what))

    def busy_rounds(self, res: tuple[str, int]) -> int:
        return sum(e - s for s, e, _, _ in self.intervals.get(res, ()))

    def violations(self) -> list[str]:
        out = []
        for res, ivs in self.intervals.items():
            ivs = sorted(ivs)
            for (s1, e1, g1, w1), (s2, e2, g2, w2) in zip(ivs, ivs[1:]):
                if s2 < e1:
                    out.append(f"{res[0]}{res[1]}: {w1}(g{g1}) [{s1},{e1}) overlaps {w2}(g{g2}) [{s2},{e2})")
        return out


def audit_dependencies(states: Sequence[GateState], dag: DependencyDag) -> list[str]:
    bad = []
    for s in states:
        for p in dag.preds[s.gate.id]:
            if s.started_at < states[p].finished_at or s.scheduled_at < states[p].finished_at:
                bad.append(f"gate {s.gate.id} started before predecessor {p} finished")
    return bad


@dataclass
class MetricsRecord:
    scheme: str
    circuit: str
    num_qubits: int
    num_gates: int
    seed: int
    total_rounds: int
    total_cycles: float
    idle_fraction: list[float]
    mean_idle_fraction: float
    cnot_histogram: dict[int, int]
    rz_histogram: dict[int, int]
    config: dict
    audits: dict
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["cnot_histogram"] = {str(k): v for k, v in sorted(self.cnot_histogram.items())}
        out["rz_histogram"] = {str(k): v for k, v in sorted(self.rz_histogram.items())}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @property
    def audits_ok(self) -> bool:
        return all(not v for v in self.audits.values())

    def fraction_within(self, cycles: int, kind: str = "CNOT") -> float:
        hist = self.cnot_histogram if kind == "CNOT" else self.rz_histogram
        total = sum(hist.values())
        return sum(v for k, v in hist.items() if k <= cycles) / total if total else 1.0

    def histogram_mode(self, kind: str = "CNOT") -> int | None:
        hist = self.cnot_histogram if kind == "CNOT" else self.rz_histogram
        if not hist:
            return None
        return max(sorted(hist), key=lambda k: hist[k])


def collect_metrics(traces: Sequence[TraceRecord], circuit: Circuit, log: ResourceLog, d: int, *,
                    scheme: str, seed: int, config: dict, audits: dict, stats: dict | None = None) -> MetricsRecord:
    if len(traces) != len(circuit.gates):
        raise SchedulingError("incomplete traces")
    total = max((r.finished_at for r in traces), default=0)
    idle = []
    for q in range(circuit.num_qubits):
        busy = log.busy_rounds(("q", q))
        idle.append(1.0 - busy / total if total else 1.0)
    cnot = Counter(r.latency_cycles for r in traces if r.kind == "CNOT")
    rz = Counter(r.latency_cycles for r in traces if r.kind == "Rz")
    return MetricsRecord(
        scheme=scheme, circuit=circuit.name, num_qubits=circuit.num_qubits, num_gates=len(circuit.gates),
        seed=seed, total_rounds=total, total_cycles=total / d, idle_fraction=idle,
        mean_idle_fraction=sum(idle) / len(idle) if idle else 1.0,
        cnot_histogram=dict(cnot), rz_histogram=dict(rz), config=config, audits=audits,
        stats=stats or {},
    )


def geomean(xs: Iterable[float]) -> float:
    xs = list(xs)
    if not xs or any(x <= 0 for x in xs):
        raise ValueError("geometric mean needs positive values")
    return math.exp(sum(math.log(x) for x in xs) / len(xs))


def normalize(times: dict[str, float], reference: str) -> dict[str, float]:
    ref = times[reference]
    return {k: v / ref for k, v in times.items()}
