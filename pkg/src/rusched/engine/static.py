"""Layer-synchronous static baselines.

Gates run in ASAP layers and a layer starts only after every gate of the
previous one has finished.  CNOTs take the shortest ancilla path regardless of
edge orientation or traffic, rotating edges when the chosen sides are wrong.
Each Rz uses its block's single preparation tile, prepares only when the gate
is issued, and starts over with the doubled angle after a failed injection.

``static_layered`` additionally packs each layer's CNOT paths so that as many
as possible are vertex-disjoint, in the spirit of AutoBraid; it is an
approximation of that compiler, not a reimplementation.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Iterator

from ..circuit import Circuit, GateKind, build_dag
from ..fabric import LEFT, RIGHT, UP, DOWN, Fabric
from ..stochastic import (MAX_CHAIN, Injection, RusModel, SimRng, TimingConfig, as_exact, is_clifford,
                          sample_injection, sample_prep_duration)
from .common import GateState, MetricsRecord, Phase, ResourceLog, SchedulingError, TraceRecord, \
    audit_dependencies, collect_metrics


@dataclass
class Step:
    kind: str
    ancillas: tuple[int, ...]
    qubits: tuple[int, ...]
    rounds: int
    rotate: int | None = None


def bfs_path(fabric: Fabric, a: int, b: int, blocked: frozenset[int] | set[int] = frozenset()) -> list[int] | None:
    """Shortest ancilla path, neighbours explored in ascending id order."""
    if a in blocked or b in blocked:
        return None
    prev = {a: None}
    todo = deque([a])
    while todo:
        u = todo.popleft()
        if u == b:
            break
        for v in fabric.ancilla_neighbours(u):
            if v not in prev and v not in blocked:
                prev[v] = u
                todo.append(v)
    if b not in prev:
        return None
    out = [b]
    while prev[out[-1]] is not None:
        out.append(prev[out[-1]])
    return out[::-1]


class StaticEngine:
    def __init__(self, circuit: Circuit, fabric: Fabric, timing: TimingConfig, rus: RusModel,
                 seed: int = 0, layered: bool = False):
        self.circuit, self.fabric, self.timing, self.rus = circuit, fabric, timing, rus
        self.d = timing.d
        self.seed = seed
        self.layered = layered
        self.scheme = "static_layered" if layered else "static_greedy"
        self.dag = build_dag(circuit)
        self.states = [GateState(g) for g in circuit.gates]
        self.orient = list(fabric.orientation)
        self.rng = SimRng(seed)
        self.log = ResourceLog()
        self._paths: dict[tuple[int, int], list[int]] = {}
        self.stats = {"prep_started": 0, "layers": 0}

    # -- routing ----------------------------------------------------------------
    def _shortest(self, a: int, b: int) -> list[int]:
        key = (a, b)
        p = self._paths.get(key)
        if p is None:
            p = bfs_path(self.fabric, a, b)
            if p is None:
                raise SchedulingError(f"ancillas {a} and {b} are disconnected")
            self._paths[key] = p
        return p

    def _route(self, c: int, t: int, blocked: set[int] | None = None):
        best = None
        for _, a_c in self.fabric.side_ancillas(c):
            for _, a_t in self.fabric.side_ancillas(t):
                path = self._shortest(a_c, a_t) if blocked is None else bfs_path(self.fabric, a_c, a_t, blocked)
                if path is not None and (best is None or len(path) < len(best[2])):
                    best = (a_c, a_t, path)
        return best

    # -- jobs -------------------------------------------------------------------
    def _cnot_job(self, g: int, a_c: int, a_t: int, path: list[int]) -> Iterator[list[Step]]:
        gate = self.states[g].gate
        c, t = gate.control, gate.target
        rot = self.timing.rounds(self.timing.edge_rotation_cycles)
        steps = []
        if self.orient[c].label(self.fabric.side_of(c, a_c)) != "Z":
            steps.append(Step("rot", (a_c,), (c,), rot, c))
        if self.orient[t].label(self.fabric.side_of(t, a_t)) != "X":
            steps.append(Step("rot", (a_t,), (t,), rot, t))
        self.states[g].path = list(path)
        self.states[g].rotations = [s.rotate for s in steps]
        if len(steps) == 2 and a_c == a_t:
            yield [steps[0]]
            yield [steps[1]]
        elif steps:
            yield steps
        yield [Step("cnot", tuple(path), (c, t), self.timing.rounds(self.timing.cnot_cycles))]

    def _h_job(self, g: int, a: int) -> Iterator[list[Step]]:
        q = self.states[g].gate.qubits[0]
        yield [Step("h", (a,), (q,), self.timing.rounds(self.timing.hadamard_cycles))]

    def _rz_resources(self, q: int) -> tuple[int, int | None]:
        a = self.fabric.prep_tile(q)
        side = self.fabric.side_of(q, a)
        if side is not None:
            return a, None
        pa = self.fabric.anc_pos[a]
        helpers = [h for s, h in self.fabric.side_ancillas(q) if abs(self.fabric.anc_pos[h][0] - pa[0])
                   + abs(self.fabric.anc_pos[h][1] - pa[1]) == 1]
        return a, helpers

    def _rz_job(self, g: int) -> Iterator[list[Step]]:
        st = self.states[g]
        q = st.gate.qubits[0]
        theta = as_exact(st.gate.theta)
        a, helpers = self._rz_resources(q)
        level = 0
        n_inj = 0
        while True:
            dur = sample_prep_duration(self.rus, self.timing, 1, self.rng.spawn(1, g, level, a, 0))
            self.stats["prep_started"] += 1
            yield [Step("prep", (a,), (), dur)]
            if helpers is None:
                if self.orient[q].label(self.fabric.side_of(q, a)) != "Z":
                    st.rotations.append(q)
                    yield [Step("rot", (a,), (q,), self.timing.rounds(self.timing.edge_rotation_cycles), q)]
                step = Step("inj", (a,), (q,), self.timing.rounds(self.timing.zz_injection_cycles))
                st.injection_kind = "ZZ"
            else:
                h = next(h for h in helpers if self.orient[q].label(self.fabric.side_of(q, h)) == "X")
                step = Step("inj", (a, h), (q,), self.timing.rounds(self.timing.cnot_injection_cycles))
                st.injection_kind = "CNOT"
            yield [step]
            n_inj += 1
            st.injections = n_inj
            outcome = sample_injection(self.rng.spawn(0, g, n_inj))
            level += 1
            if outcome is Injection.SUCCESS or level >= MAX_CHAIN or is_clifford(theta * 2 ** level):
                return

    # -- layer execution --------------------------------------------------------
    def _plan_layer(self, layer: list[int]) -> list[tuple[int, Iterator[list[Step]]]]:
        jobs = []
        reserved: set[int] = set()
        cnots = []
        for g in layer:
            st = self.states[g]
            gate = st.gate
            st.scheduled_at = self.t
            if gate.kind is GateKind.X or (gate.kind is GateKind.RZ and is_clifford(as_exact(gate.theta))):
                st.finish(self.t)
            elif gate.kind is GateKind.RZ:
                a, helpers = self._rz_resources(gate.qubits[0])
                reserved.add(a)
                reserved.update(helpers or ())
                jobs.append((g, self._rz_job(g)))
            elif gate.kind is GateKind.H:
                a = self.fabric.side_ancillas(gate.qubits[0])[0][1]
                reserved.add(a)
                jobs.append((g, self._h_job(g, a)))
            else:
                cnots.append(g)
        deferred = []
        for g in cnots:
            gate = self.states[g].gate
            route = None
            if self.layered:
                route = self._route(gate.control, gate.target, reserved)
                if route is not None:
                    reserved.update(route[2])
            if route is None:
                deferred.append(g)
                continue
            jobs.append((g, self._cnot_job(g, *route)))
        for g in deferred:
            gate = self.states[g].gate
            jobs.append((g, self._cnot_job(g, *self._route(gate.control, gate.target))))
        return jobs

    def _run_layer(self, jobs):
        """Greedy list scheduling: every step starts as soon as its resources
        are free, earlier jobs first."""
        busy_a: dict[int, int] = {}
        busy_q: dict[int, int] = {}
        waiting: list[tuple[int, int, Step]] = []   # (job index, order, step)
        outstanding = {}
        gen = {}
        heap: list = []
        order = 0

        def advance(i):
            nonlocal order
            g, it = jobs[i]
            try:
                steps = next(it)
            except StopIteration:
                self.states[g].finish(self.t)
                return
            outstanding[i] = len(steps)
            for s in steps:
                order += 1
                waiting.append((i, order, s))

        for i in range(len(jobs)):
            gen[i] = jobs[i]
            advance(i)
        while waiting or heap:
            waiting.sort(key=lambda x: (x[0], x[1]))
            still = []
            for i, o, s in waiting:
                if any(busy_a.get(a) is not None for a in s.ancillas) or any(busy_q.get(q) is not None for q in s.qubits):
                    still.append((i, o, s))
                    continue
                for a in s.ancillas:
                    busy_a[a] = i
                for q in s.qubits:
                    busy_q[q] = i
                g = jobs[i][0]
                st = self.states[g]
                if s.kind != "prep":
                    st.start(self.t)
                st.phase = Phase.EXECUTING
                heapq.heappush(heap, (self.t + s.rounds, o, i, s, self.t))
            waiting[:] = still
            if not heap:
                if waiting:
                    raise SchedulingError("static layer cannot make progress")
                break
            self.t = heap[0][0]
            while heap and heap[0][0] == self.t:
                end, o, i, s, start = heapq.heappop(heap)
                g = jobs[i][0]
                for a in s.ancillas:
                    busy_a.pop(a)
                    self.log.add(("a", a), start, end, g, s.kind)
                for q in s.qubits:
                    busy_q.pop(q)
                    self.log.add(("q", q), start, end, g, s.kind)
                if s.rotate is not None:
                    self.orient[s.rotate] = self.orient[s.rotate].swapped()
                outstanding[i] -= 1
                if outstanding[i] == 0:
                    advance(i)

    def run(self) -> tuple[MetricsRecord, list[TraceRecord]]:
        self.t = 0
        for layer in self.dag.layers():
            self.stats["layers"] += 1
            self._run_layer(self._plan_layer(layer))
        traces = [s.trace(self.d) for s in self.states]
        audits = {
            "dependency": audit_dependencies(self.states, self.dag),
            "exclusivity": self.log.violations(),
            "queues": [],
        }
        config = {"scheme": self.scheme, **self.timing.to_dict(), "rus": self.rus.describe(self.timing)}
        m = collect_metrics(traces, self.circuit, self.log, self.d, scheme=self.scheme, seed=self.seed,
                            config=config, audits=audits, stats=dict(self.stats))
        return m, traces


def run_static_greedy(circuit: Circuit, fabric: Fabric, timing: TimingConfig | None = None,
                      rus: RusModel | None = None, seed: int = 0) -> tuple[MetricsRecord, list[TraceRecord]]:
    return StaticEngine(circuit, fabric, timing or TimingConfig(), rus or RusModel(), seed).run()


def run_static_layered(circuit: Circuit, fabric: Fabric, timing: TimingConfig | None = None,
                       rus: RusModel | None = None, seed: int = 0) -> tuple[MetricsRecord, list[TraceRecord]]:
    return StaticEngine(circuit, fabric, timing or TimingConfig(), rus or RusModel(), seed, layered=True).run()
