"""Per-ancilla FIFO queues of pending roles and the Rz claim/promotion rules."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .circuit import Angle, DependencyDag, Gate, GateKind
from .fabric import DOWN, LEFT, RIGHT, UP, EdgeOrientation, Fabric


class QRole(str, Enum):
    PREPARE_RZ = "PrepareRz"
    ROUTE_RZ = "RouteRz"
    ROUTE_CNOT = "RouteCNOT"
    EDGE_ROTATION = "EdgeRotation"
    HADAMARD_HELPER = "HadamardHelper"


class Status(str, Enum):
    READY = "R"
    EXECUTING = "E"
    PREPARING = "P"
    DONE_PREP = "D"
    FINISHED = "F"


RZ_ROLES = (QRole.PREPARE_RZ, QRole.ROUTE_RZ)


@dataclass
class QueueEntry:
    gate: int
    role: QRole
    seq: int
    helper: int | None = None
    theta: Angle | None = None
    level: int = 0
    zz: bool = False          # prepared state touches the data qubit's Z edge
    qubit: int | None = None  # edge-rotation target
    status: Status = Status.READY

    @property
    def angle(self) -> Angle | None:
        if self.theta is None:
            return None
        return self.theta * (2 ** self.level)

    def to_dict(self) -> dict:
        out = {"gate": self.gate, "role": self.role.value, "status": self.status.value}
        if self.helper is not None:
            out["helper"] = self.helper
        if self.role is QRole.PREPARE_RZ:
            out["level"] = self.level
        if self.qubit is not None:
            out["qubit"] = self.qubit
        return out


@dataclass
class AncillaQueue:
    ancilla: int
    entries: list[QueueEntry] = field(default_factory=list)
    current_prep: tuple[Angle, int] | None = None  # (angle, round started)

    @property
    def head(self) -> QueueEntry | None:
        return self.entries[0] if self.entries else None

    def push(self, e: QueueEntry):
        if e.helper == self.ancilla:
            raise ValueError("an entry cannot name its own ancilla as helper")
        for x in self.entries:
            if x.gate == e.gate and x.role == e.role:
                raise ValueError(f"gate {e.gate} already queued on ancilla {self.ancilla} as {e.role.value}")
        self.entries.append(e)

    def find(self, gate: int, role: QRole | None = None) -> QueueEntry | None:
        for e in self.entries:
            if e.gate == gate and (role is None or e.role is role):
                return e
        return None

    def position(self, gate: int, role: QRole | None = None) -> int:
        for i, e in enumerate(self.entries):
            if e.gate == gate and (role is None or e.role is role):
                return i
        return -1

    def remove(self, gate: int, role: QRole | None = None) -> int:
        before = len(self.entries)
        self.entries = [e for e in self.entries if not (e.gate == gate and (role is None or e.role is role))]
        return before - len(self.entries)

    def __len__(self):
        return len(self.entries)


class QueueBook:
    """All ancilla queues plus a gate -> ancillas index."""

    def __init__(self, num_ancillas: int):
        self.queues = [AncillaQueue(a) for a in range(num_ancillas)]
        self.by_gate: dict[int, list[int]] = {}
        self._seq = 0

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def __getitem__(self, a: int) -> AncillaQueue:
        return self.queues[a]

    def push(self, a: int, e: QueueEntry):
        self.queues[a].push(e)
        lst = self.by_gate.setdefault(e.gate, [])
        if a not in lst:
            lst.append(a)

    def entries_of(self, gate: int, role: QRole | None = None) -> list[tuple[int, QueueEntry]]:
        out = []
        for a in self.by_gate.get(gate, ()):
            for e in self.queues[a].entries:
                if e.gate == gate and (role is None or e.role is role):
                    out.append((a, e))
        return out

    def remove(self, gate: int, role: QRole | None = None, ancillas: Iterable[int] | None = None) -> list[int]:
        touched = []
        for a in list(ancillas if ancillas is not None else self.by_gate.get(gate, ())):
            if self.queues[a].remove(gate, role):
                touched.append(a)
        lst = [a for a in self.by_gate.get(gate, ()) if self.queues[a].find(gate) is not None]
        if lst:
            self.by_gate[gate] = lst
        else:
            self.by_gate.pop(gate, None)
        return touched

    def is_empty(self) -> bool:
        return all(not q.entries for q in self.queues)

    def dump(self) -> dict:
        return {str(q.ancilla): [e.to_dict() for e in q.entries] for q in self.queues if q.entries}


# ---------------------------------------------------------------------------
# Rz claims
# ---------------------------------------------------------------------------

@dataclass
class RzClaim:
    prepare: list[tuple[int, bool, int | None]]  # (ancilla, zz, helper)
    route: list[int]

    @property
    def ancillas(self) -> set[int]:
        return {a for a, _, _ in self.prepare} | set(self.route)


def rz_claim(fabric: Fabric, q: int, orientation: EdgeOrientation) -> RzClaim:
    """Ancillas in the 3x3 neighbourhood of ``q`` that can serve an Rz.

    Z-side neighbours prepare for a ZZ injection.  Diagonal ancillas prepare
    for a CNOT injection routed through the X-side neighbour they touch.
    """
    prepare: list[tuple[int, bool, int | None]] = []
    route: list[int] = []
    for side, a in fabric.side_ancillas(q):
        if orientation.label(side) == "Z":
            prepare.append((a, True, None))
    for side, h in fabric.side_ancillas(q):
        if orientation.label(side) != "X":
            continue
        if side in (LEFT, RIGHT):
            diags = [fabric.diagonal_ancilla(q, UP, side), fabric.diagonal_ancilla(q, DOWN, side)]
        else:
            diags = [fabric.diagonal_ancilla(q, side, LEFT), fabric.diagonal_ancilla(q, side, RIGHT)]
        used = False
        for dg in diags:
            if dg is not None and all(dg != p for p, _, _ in prepare):
                prepare.append((dg, False, h))
                used = True
        if used:
            route.append(h)
    return RzClaim(prepare, route)


def enqueue_rz(gate: Gate, fabric: Fabric, queues: QueueBook,
               orientation: EdgeOrientation | None = None, theta: Angle | None = None) -> set[int]:
    """Push an Rz onto every ancilla able to prepare or route its rotation state.

    Returns the claimed ancilla set (empty when nothing is eligible; the
    caller retries later).
    """
    if gate.kind is not GateKind.RZ:
        raise ValueError("enqueue_rz needs an Rz gate")
    q = gate.qubits[0]
    orient = orientation if orientation is not None else fabric.orientation[q]
    claim = rz_claim(fabric, q, orient)
    if not claim.prepare:
        return set()
    seq = queues.next_seq()
    th = gate.theta if theta is None else theta
    for a, zz, helper in claim.prepare:
        queues.push(a, QueueEntry(gate.id, QRole.PREPARE_RZ, seq, helper=helper, theta=th, zz=zz))
    for h in claim.route:
        queues.push(h, QueueEntry(gate.id, QRole.ROUTE_RZ, seq, theta=th))
    return claim.ancillas


def on_prep_success(gate: int, winner: int, queues: QueueBook) -> list[int]:
    """Mark ``winner`` as holding the prepared state and promote every sibling
    entry aimed at the same angle to the doubled angle, in place.  Siblings
    working on a different level are left alone.

    Returns the sibling ancillas that were actively preparing and must now
    restart with the doubled angle.
    """
    we = queues[winner].find(gate, QRole.PREPARE_RZ)
    if we is None:
        raise KeyError(f"ancilla {winner} holds no entry for gate {gate}")
    we.status = Status.DONE_PREP
    restart = []
    for a, e in queues.entries_of(gate, QRole.PREPARE_RZ):
        if a == winner or e.status is Status.DONE_PREP:
            continue
        if e.level == we.level:
            e.level = we.level + 1
            if e.status is Status.PREPARING:
                e.status = Status.READY
                restart.append(a)
    return restart


def on_injection_result(gate: int, success: bool, next_is_clifford: bool, injector: int,
                        queues: QueueBook, new_level: int) -> list[int]:
    """Update queues after an injection.

    On success, or on failure whose doubled angle is Clifford (fixed in the
    frame), every entry for the gate is removed and the touched ancillas are
    returned.  Otherwise all entries below ``new_level`` are promoted and the
    injecting ancilla is reset to prepare the correction state; nothing is
    removed.
    """
    if success or next_is_clifford:
        return queues.remove(gate)
    for a, e in queues.entries_of(gate, QRole.PREPARE_RZ):
        if a == injector:
            e.status = Status.READY
            e.level = new_level
        elif e.level < new_level:
            e.level = new_level
            if e.status is Status.DONE_PREP:
                e.status = Status.READY
    for a, e in queues.entries_of(gate, QRole.ROUTE_RZ):
        e.status = Status.READY
    return []


def tie_break(candidates: Iterable[int], dag: DependencyDag) -> list[int]:
    """Deeper remaining circuit first, then lower gate id."""
    return sorted(candidates, key=lambda g: (-dag.remaining_depth[g], g))


def expected_free_time(queue: AncillaQueue, entry_cost) -> float:
    """Sum of expected durations (cycles) of everything queued on an ancilla."""
    return sum(entry_cost(e) for e in queue.entries)
