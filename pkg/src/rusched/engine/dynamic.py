"""Event-driven dynamic scheduler.

Time is counted in syndrome rounds.  A gate is scheduled the moment its
predecessors finish; its ancilla work goes into per-ancilla FIFO queues and
runs as soon as the queue order and the hardware allow.  Rz gates are queued
early, once the previous gate on their qubit has a known finish time, so
rotation states can be prepared in parallel on every nearby ancilla.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from ..circuit import Circuit, GateKind, build_dag
from ..fabric import Fabric
from ..queues import QRole, QueueBook, QueueEntry, Status, enqueue_rz, on_injection_result, on_prep_success, tie_break
from ..routing import ActivityTracker, MstPipeline, select_best_path
from ..stochastic import (MAX_CHAIN, Injection, RusModel, SimRng, TimingConfig, as_exact, is_clifford,
                          sample_injection, sample_prep_duration)
from .common import (GateState, MetricsRecord, Phase, ResourceLog, SchedulingError, TraceRecord,
                     audit_dependencies, collect_metrics)

STALL_LIMIT = 100_000

_EV_OP, _EV_PREP = 0, 1

_OP_ROLES = {
    "rot": (QRole.EDGE_ROTATION,),
    "cnot": (QRole.ROUTE_CNOT,),
    "h": (QRole.HADAMARD_HELPER,),
    "inj": (QRole.PREPARE_RZ, QRole.ROUTE_RZ),
}


@dataclass
class _Op:
    gate: int
    kind: str            # "rot" | "cnot" | "h" | "inj"
    ancillas: tuple[int, ...]
    qubits: tuple[int, ...]
    start: int
    end: int
    qubit: int | None = None  # rotated qubit


@dataclass
class _Prep:
    gate: int
    level: int
    token: int
    start: int


@dataclass
class _RzState:
    theta: object
    level: int = 0
    enqueued: bool = False
    injecting: bool = False
    held: dict[int, set[int]] = field(default_factory=dict)  # level -> holding ancillas
    n_inj: int = 0
    seq: int = 0

    def angle_at(self, level: int):
        return self.theta * (2 ** level)


@dataclass
class _CnotPlan:
    a_c: int
    a_t: int
    path: list[int]
    rot_todo: list[tuple[int, int]]   # (ancilla, qubit)
    rot_running: int = 0


class DynamicEngine:
    def __init__(self, circuit: Circuit, fabric: Fabric, timing: TimingConfig, rus: RusModel,
                 k: int = 25, c: int = 100, tau: int = 100, seed: int = 0):
        self.circuit, self.fabric, self.timing, self.rus = circuit, fabric, timing, rus
        self.d = timing.d
        self.seed = seed
        self.params = {"k": k, "c": c, "tau_mst": tau}
        self.dag = build_dag(circuit)
        self.states = [GateState(g) for g in circuit.gates]
        n_anc = fabric.num_ancillas
        self.orient = list(fabric.orientation)
        self.queues = QueueBook(n_anc)
        self.anc_op: list[_Op | None] = [None] * n_anc
        self.anc_prep: list[_Prep | None] = [None] * n_anc
        self.anc_hold: list[tuple[int, int] | None] = [None] * n_anc  # (gate, since)
        self.q_op: list[_Op | None] = [None] * circuit.num_qubits
        self.tracker = ActivityTracker(n_anc, c)
        self.pipeline = MstPipeline(fabric, k, tau)
        self.rng = SimRng(seed)
        self.log = ResourceLog()
        self.heap: list = []
        self._evseq = 0
        self._token = 0
        self.t = 0
        self.next_boundary = 0
        self.mark: set[int] = set()
        self.pending = [len(p) for p in self.dag.preds]
        self.active: dict[int, int] = {}       # gate -> seniority (queue sequence number)
        self.ready: list[int] = []
        self.rz: dict[int, _RzState] = {}
        self.plans: dict[int, _CnotPlan] = {}
        self.h_anc: dict[int, int] = {}
        self.prep_attempts: dict[tuple[int, int, int], int] = {}
        self.done = 0
        self.last_progress = 0
        self.mean_prep_cycles = rus.mean_prep_rounds(timing) / self.d
        self.next_on: dict[tuple[int, int], int] = {}
        last: dict[int, int] = {}
        for g in circuit.gates:
            for q in g.qubits:
                if q in last:
                    self.next_on[(last[q], q)] = g.id
                last[q] = g.id
        self.stats = {"prep_started": 0, "prep_aborted": 0, "holds_discarded": 0, "mst_computed": 0}

    # -- event plumbing -------------------------------------------------------
    def _push(self, time: int, kind: int, a: int, payload):
        self._evseq += 1
        heapq.heappush(self.heap, (time, kind, a, self._evseq, payload))

    def _occupy(self, a: int):
        self.mark.add(a)

    def _occupied(self, a: int) -> bool:
        return self.anc_op[a] is not None or self.anc_prep[a] is not None or self.anc_hold[a] is not None

    def _boundary(self, cycle: int):
        if cycle > 0:
            busy = self.mark | {a for a in range(self.fabric.num_ancillas) if self._occupied(a)}
            self.tracker.record_activity(cycle - 1, busy)
        self.mark = {a for a in range(self.fabric.num_ancillas) if self._occupied(a)}
        self.pipeline.tick(cycle, self.tracker.activity())

    # -- main loop ------------------------------------------------------------
    def run(self) -> tuple[MetricsRecord, list[TraceRecord]]:
        n = len(self.states)
        self._boundary(0)
        self.next_boundary = 1
        self.ready = self.dag.sources()
        self._pass()
        while self.done < n:
            if not self.heap:
                raise SchedulingError("no pending events but gates remain", self.dump())
            t = self.heap[0][0]
            if t - self.last_progress > STALL_LIMIT:
                raise SchedulingError(f"no progress for {STALL_LIMIT} rounds", self.dump())
            self.t = t
            while self.heap and self.heap[0][0] == t:
                _, kind, a, _, payload = heapq.heappop(self.heap)
                if kind == _EV_OP:
                    self._op_done(payload)
                else:
                    self._prep_done(a, payload)
            while self.next_boundary * self.d <= t:
                self._boundary(self.next_boundary)
                self.next_boundary += 1
            self._pass()
        self.stats["mst_computed"] = self.pipeline.computed
        return self._finish_run()

    def _finish_run(self):
        traces = [s.trace(self.d) for s in self.states]
        audits = {
            "dependency": audit_dependencies(self.states, self.dag),
            "exclusivity": self.log.violations(),
            "queues": [] if self.queues.is_empty() else [f"leftover entries: {self.queues.dump()}"],
        }
        config = {"scheme": "dynamic", **self.timing.to_dict(), **self.params, "rus": self.rus.describe(self.timing)}
        m = collect_metrics(traces, self.circuit, self.log, self.d, scheme="dynamic", seed=self.seed,
                            config=config, audits=audits, stats=dict(self.stats))
        return m, traces

    def dump(self) -> dict:
        return {
            "t": self.t,
            "active": {g: self.states[g].phase.value for g in self.active},
            "queues": self.queues.dump(),
            "ops": {a: (o.gate, o.kind) for a, o in enumerate(self.anc_op) if o},
            "preps": {a: (p.gate, p.level) for a, p in enumerate(self.anc_prep) if p},
            "holds": {a: h[0] for a, h in enumerate(self.anc_hold) if h},
        }

    # -- gate lifecycle -------------------------------------------------------
    def _schedule(self, g: int):
        st = self.states[g]
        gate = st.gate
        st.scheduled_at = self.t
        self.active[g] = 0
        kind = gate.kind
        if kind is GateKind.X or (kind is GateKind.RZ and is_clifford(as_exact(gate.theta))):
            self._complete(g)
            return
        if kind is GateKind.RZ:
            self._enqueue_rz(g)
            self.active[g] = self.rz[g].seq
            st.phase = Phase.PREP
        elif kind is GateKind.H:
            q = gate.qubits[0]
            cache: dict[int, float] = {}
            a = min((a for _, a in self.fabric.side_ancillas(q)), key=lambda x: (self._efree(x, cache), 0))
            self.h_anc[g] = a
            self.queues.push(a, QueueEntry(g, QRole.HADAMARD_HELPER, self.queues.next_seq()))
            self.active[g] = self.queues._seq
            st.phase = Phase.PATH_PENDING
        else:
            self._plan_cnot(g)
            st.phase = Phase.PATH_PENDING

    def _complete(self, g: int):
        st = self.states[g]
        st.finish(self.t)
        self.active.pop(g, None)
        self.done += 1
        self.last_progress = self.t
        for s in self.dag.succs[g]:
            self.pending[s] -= 1
            if self.pending[s] == 0:
                self.ready.append(s)

    def _release_successor_rz(self, g: int):
        """The gate's finish time is now fixed: queue any Rz that follows it."""
        for q in self.states[g].gate.qubits:
            s = self.next_on.get((g, q))
            if s is None:
                continue
            gate = self.states[s].gate
            if gate.kind is GateKind.RZ and not is_clifford(as_exact(gate.theta)):
                self._enqueue_rz(s)

    def _enqueue_rz(self, g: int):
        rz = self.rz.get(g)
        if rz is None:
            rz = self.rz[g] = _RzState(as_exact(self.states[g].gate.theta))
        if rz.enqueued:
            return
        gate = self.states[g].gate
        claimed = enqueue_rz(gate, self.fabric, self.queues, self.orient[gate.qubits[0]])
        if not claimed:
            raise SchedulingError(f"Rz gate {g} has no ancilla able to serve it", self.dump())
        rz.enqueued = True
        rz.seq = self.queues._seq
        if g in self.active:
            self.active[g] = rz.seq

    # -- CNOT -----------------------------------------------------------------
    def _plan_cnot(self, g: int):
        gate = self.states[g].gate
        c, tq = gate.control, gate.target
        snap = self.pipeline.query(self.t // self.d)
        cache: dict[int, float] = {}
        best = select_best_path(c, tq, snap, lambda a: self._efree(a, cache), self.fabric,
                                self.orient[c], self.orient[tq],
                                self.timing.edge_rotation_cycles, self.timing.cnot_cycles)
        seq = self.queues.next_seq()
        rot: list[tuple[int, int]] = []
        if best.rotate_control:
            rot.append((best.anc_control, c))
        if best.rotate_target:
            rot.append((best.anc_target, tq))
        for a in dict.fromkeys(a for a, _ in rot):
            qs = [q for b, q in rot if b == a]
            self.queues.push(a, QueueEntry(g, QRole.EDGE_ROTATION, seq, qubit=qs[0] if len(qs) == 1 else None))
        for a in best.path:
            self.queues.push(a, QueueEntry(g, QRole.ROUTE_CNOT, seq))
        self.active[g] = seq
        self.plans[g] = _CnotPlan(best.anc_control, best.anc_target, list(best.path), rot)
        st = self.states[g]
        st.path = list(best.path)
        st.rotations = [q for _, q in rot]

    def _try_cnot(self, g: int) -> bool:
        plan = self.plans[g]
        st = self.states[g]
        moved = False
        for a, q in list(plan.rot_todo):
            if self.q_op[q] is None and self._can_take(a, g, QRole.EDGE_ROTATION):
                self._take(a, g)
                plan.rot_todo.remove((a, q))
                plan.rot_running += 1
                self._start_op(_Op(g, "rot", (a,), (q,), self.t, self.t + self.timing.rounds(self.timing.edge_rotation_cycles), q))
                st.start(self.t)
                st.phase = Phase.EXECUTING
                moved = True
        if plan.rot_todo or plan.rot_running:
            return moved
        if all(self._can_take(a, g, QRole.ROUTE_CNOT) for a in plan.path):
            for a in plan.path:
                self._take(a, g)
            gate = st.gate
            self._start_op(_Op(g, "cnot", tuple(plan.path), (gate.control, gate.target), self.t,
                               self.t + self.timing.rounds(self.timing.cnot_cycles)))
            st.start(self.t)
            st.phase = Phase.EXECUTING
            self._release_successor_rz(g)
            return True
        return moved

    # -- H ----------------------------------------------------------------------
    def _try_h(self, g: int) -> bool:
        a = self.h_anc[g]
        q = self.states[g].gate.qubits[0]
        if self.q_op[q] is None and self._can_take(a, g, QRole.HADAMARD_HELPER):
            self._take(a, g)
            self._start_op(_Op(g, "h", (a,), (q,), self.t, self.t + self.timing.rounds(self.timing.hadamard_cycles)))
            st = self.states[g]
            st.start(self.t)
            st.phase = Phase.EXECUTING
            self._release_successor_rz(g)
            return True
        return False

    # -- Rz ---------------------------------------------------------------------
    def _useful(self, e: QueueEntry) -> bool:
        rz = self.rz.get(e.gate)
        if rz is None:
            return False
        lv = e.level
        if lv < rz.level or lv > rz.level + 1 or lv >= MAX_CHAIN:
            return False
        if rz.held.get(lv):
            return False
        return not is_clifford(rz.angle_at(lv))

    def _try_inject(self, g: int) -> bool:
        rz = self.rz[g]
        if rz.injecting:
            return False
        holders = sorted(rz.held.get(rz.level, ()))
        if not holders:
            return False
        q = self.states[g].gate.qubits[0]
        if self.q_op[q] is not None:
            return False
        entries = {a: self.queues[a].find(g, QRole.PREPARE_RZ) for a in holders}
        order = [a for a in holders if entries[a].zz] + [a for a in holders if not entries[a].zz]
        for a in order:
            e = entries[a]
            if self.anc_op[a] is not None:
                continue
            if e.zz:
                ancs, cycles, kind = (a,), self.timing.zz_injection_cycles, "ZZ"
            else:
                h = e.helper
                if not self._can_take(h, g, QRole.ROUTE_RZ):
                    continue
                self._take(h, g)
                ancs, cycles, kind = (a, h), self.timing.cnot_injection_cycles, "CNOT"
            self._release_hold(a)
            rz.held[rz.level].discard(a)
            e.status = Status.EXECUTING
            rz.injecting = True
            rz.n_inj += 1
            st = self.states[g]
            st.injections += 1
            st.injection_kind = kind if st.injection_kind in (None, kind) else "mixed"
            st.start(self.t)
            st.phase = Phase.INJECTING
            self._start_op(_Op(g, "inj", ancs, (q,), self.t, self.t + self.timing.rounds(cycles)))
            return True
        return False

    def _injection_done(self, op: _Op):
        g = op.gate
        rz = self.rz[g]
        rz.injecting = False
        injector = op.ancillas[0]
        outcome = sample_injection(self.rng.spawn(0, g, rz.n_inj))
        nxt = rz.level + 1
        finished = outcome is Injection.SUCCESS or nxt >= MAX_CHAIN or is_clifford(rz.angle_at(nxt))
        if finished:
            self._finish_rz(g)
            return
        rz.level = nxt
        on_injection_result(g, False, False, injector, self.queues, nxt)
        # correction states prepared ahead of time keep their holders
        for lv, holders in rz.held.items():
            for a in holders:
                e = self.queues[a].find(g, QRole.PREPARE_RZ)
                e.status = Status.DONE_PREP
                e.level = lv
        if rz.held.get(nxt):
            self.queues[injector].find(g, QRole.PREPARE_RZ).level = nxt + 1
        self.states[g].phase = Phase.PREP

    def _finish_rz(self, g: int):
        for a in list(self.queues.by_gate.get(g, ())):
            p = self.anc_prep[a]
            if p is not None and p.gate == g:
                self._abort_prep(a, count=False)
            h = self.anc_hold[a]
            if h is not None and h[0] == g:
                self._release_hold(a)
        self.queues.remove(g)
        self.rz[g].held.clear()
        self._complete(g)

    def _start_prep(self, a: int, e: QueueEntry):
        key = (e.gate, e.level, a)
        attempt = self.prep_attempts.get(key, 0)
        self.prep_attempts[key] = attempt + 1
        dur = sample_prep_duration(self.rus, self.timing, 1, self.rng.spawn(1, e.gate, e.level, a, attempt))
        self._token += 1
        self.anc_prep[a] = _Prep(e.gate, e.level, self._token, self.t)
        e.status = Status.PREPARING
        self._occupy(a)
        self.stats["prep_started"] += 1
        self._push(self.t + dur, _EV_PREP, a, self._token)

    def _abort_prep(self, a: int, count: bool = True):
        p = self.anc_prep[a]
        self.log.add(("a", a), p.start, self.t, p.gate, "prep")
        self.anc_prep[a] = None
        e = self.queues[a].find(p.gate, QRole.PREPARE_RZ)
        if e is not None and e.status is Status.PREPARING:
            e.status = Status.READY
        if count:
            self.stats["prep_aborted"] += 1
            self.states[p.gate].prep_restarts += 1

    def _release_hold(self, a: int):
        g, since = self.anc_hold[a]
        self.log.add(("a", a), since, self.t, g, "hold")
        self.anc_hold[a] = None

    def _discard_hold(self, a: int):
        g, _ = self.anc_hold[a]
        self._release_hold(a)
        rz = self.rz[g]
        for holders in rz.held.values():
            holders.discard(a)
        e = self.queues[a].find(g, QRole.PREPARE_RZ)
        e.status = Status.READY
        self.stats["holds_discarded"] += 1
        self.states[g].prep_restarts += 1

    def _prep_done(self, a: int, token: int):
        p = self.anc_prep[a]
        if p is None or p.token != token:
            return  # aborted
        self.log.add(("a", a), p.start, self.t, p.gate, "prep")
        self.anc_prep[a] = None
        g = p.gate
        self.anc_hold[a] = (g, self.t)
        self._occupy(a)
        rz = self.rz[g]
        rz.held.setdefault(p.level, set()).add(a)
        for b in on_prep_success(g, a, self.queues):
            self._abort_prep(b, count=False)
        self.last_progress = self.t

    # -- ancilla arbitration ---------------------------------------------------
    def _transparent(self, e: QueueEntry) -> bool:
        if e.role is QRole.ROUTE_RZ:
            return e.status is not Status.EXECUTING
        if e.role is QRole.PREPARE_RZ:
            return e.status is Status.READY and not self._useful(e)
        return False

    def _can_take(self, a: int, g: int, role: QRole) -> bool:
        """Whether gate ``g`` may use ancilla ``a`` now: no running operation,
        and every senior entry ahead of ours is an idle Rz placeholder."""
        if self.anc_op[a] is not None:
            return False
        for e in self.queues[a].entries:
            if e.gate == g:
                return True
            if not self._transparent(e):
                return False
        return False

    def _take(self, a: int, g: int):
        """Claim ``a`` for ``g``; junior preparations or held states yield."""
        p = self.anc_prep[a]
        if p is not None and p.gate != g:
            self._abort_prep(a)
        h = self.anc_hold[a]
        if h is not None and h[0] != g:
            self._discard_hold(a)

    def _service(self, a: int) -> bool:
        """Start a preparation on an idle ancilla whose first live entry wants one."""
        if self.anc_op[a] is not None:
            return False
        for e in self.queues[a].entries:
            if self._transparent(e):
                continue
            if e.role is not QRole.PREPARE_RZ or e.status is not Status.READY:
                return False
            p = self.anc_prep[a]
            h = self.anc_hold[a]
            if (p is not None and p.gate == e.gate) or (h is not None and h[0] == e.gate):
                return False
            self._take(a, e.gate)
            self._start_prep(a, e)
            return True
        return False

    # -- operations -------------------------------------------------------------
    def _start_op(self, op: _Op):
        for a in op.ancillas:
            if self.anc_op[a] is not None:
                raise SchedulingError(f"ancilla {a} double-booked", self.dump())
            self.anc_op[a] = op
            self._occupy(a)
            for e in self.queues[a].entries:
                if e.gate == op.gate and e.role in _OP_ROLES[op.kind]:
                    e.status = Status.EXECUTING
        for q in op.qubits:
            if self.q_op[q] is not None:
                raise SchedulingError(f"data qubit {q} double-booked", self.dump())
            self.q_op[q] = op
        self.last_progress = self.t
        self._push(op.end, _EV_OP, op.ancillas[0], op)

    def _op_done(self, op: _Op):
        for a in op.ancillas:
            self.anc_op[a] = None
            self.log.add(("a", a), op.start, op.end, op.gate, op.kind)
        for q in op.qubits:
            self.q_op[q] = None
            self.log.add(("q", q), op.start, op.end, op.gate, op.kind)
        g = op.gate
        if op.kind == "rot":
            q = op.qubit
            self.orient[q] = self.orient[q].swapped()
            plan = self.plans[g]
            plan.rot_running -= 1
            if not plan.rot_todo and not plan.rot_running:
                self.queues.remove(g, QRole.EDGE_ROTATION)
            else:
                e = self.queues[op.ancillas[0]].find(g, QRole.EDGE_ROTATION)
                if e is not None:
                    e.status = Status.READY
        elif op.kind == "cnot":
            self.queues.remove(g)
            del self.plans[g]
            self._complete(g)
        elif op.kind == "h":
            self.queues.remove(g)
            self._complete(g)
        else:
            self._injection_done(op)

    def _pass(self):
        while True:
            moved = False
            while self.ready:
                batch = tie_break(self.ready, self.dag)
                self.ready = []
                for g in batch:
                    self._schedule(g)
                moved = True
            for g in sorted(self.active, key=lambda x: (self.active[x], x)):
                st = self.states[g]
                kind = st.gate.kind
                if kind is GateKind.CNOT:
                    if g in self.plans:
                        moved |= self._try_cnot(g)
                elif kind is GateKind.H:
                    if st.started_at is None:
                        moved |= self._try_h(g)
                elif kind is GateKind.RZ and st.phase is Phase.PREP:
                    moved |= self._try_inject(g)
            for a in range(self.fabric.num_ancillas):
                if self.queues[a].entries:
                    moved |= self._service(a)
            if not moved and not self.ready:
                return

    # -- expected free time ----------------------------------------------------
    def _entry_cost(self, e: QueueEntry) -> float:
        t = self.timing
        if e.role is QRole.ROUTE_CNOT:
            return t.cnot_cycles
        if e.role is QRole.EDGE_ROTATION:
            return t.edge_rotation_cycles * (2 if e.qubit is None else 1)
        if e.role is QRole.HADAMARD_HELPER:
            return t.hadamard_cycles
        if e.role is QRole.ROUTE_RZ:
            return t.cnot_injection_cycles if e.status is Status.EXECUTING else 0.0
        inj = t.zz_injection_cycles if e.zz else t.cnot_injection_cycles
        if e.status in (Status.DONE_PREP, Status.EXECUTING):
            return inj
        if e.status is Status.PREPARING or self._useful(e):
            return self.mean_prep_cycles + inj
        return 0.0

    def _efree(self, a: int, cache: dict[int, float]) -> float:
        hit = cache.get(a)
        if hit is not None:
            return hit
        op = self.anc_op[a]
        total = 0.0
        for e in self.queues[a].entries:
            if op is not None and e.gate == op.gate and e.status is not Status.READY:
                continue
            total += self._entry_cost(e)
        if op is not None:
            total += (op.end - self.t) / self.d
        cache[a] = total
        return total


def run_dynamic(circuit: Circuit, fabric: Fabric, timing: TimingConfig | None = None, rus: RusModel | None = None,
                k: int = 25, c: int = 100, tau: int = 100, seed: int = 0) -> tuple[MetricsRecord, list[TraceRecord]]:
    eng = DynamicEngine(circuit, fabric, timing or TimingConfig(), rus or RusModel(), k, c, tau, seed)
    return eng.run()
