"""Stand-alone execution of one Rz on its claimed ancillas, without routing
contention.  Handy for checking injection statistics in isolation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..circuit import Gate, GateKind
from ..stochastic import (MAX_CHAIN, Injection, RusModel, SimRng, TimingConfig, as_exact, is_clifford,
                          sample_injection, sample_prep_duration)


@dataclass(frozen=True)
class InjectionRecord:
    level: int
    ancilla: int
    helper: int | None
    strategy: str          # "ZZ" or "CNOT"
    start: int
    end: int
    success: bool


@dataclass
class RzFragment:
    gate: int
    injections: int = 0
    rounds: int = 0
    clifford_fix: bool = False
    records: list[InjectionRecord] = field(default_factory=list)


def execute_rz_rus(gate: Gate, claims: Sequence[tuple[int, bool, int | None]], timing: TimingConfig,
                   rus: RusModel, rng: SimRng) -> RzFragment:
    """Run the preparation/injection chain for ``gate`` on ``claims``.

    ``claims`` lists ``(ancilla, zz, helper)`` triples as produced by
    :func:`rusched.queues.rz_claim`.  All claimers prepare in parallel; the
    first ready state is injected (ties: ZZ first, then lowest id).  While
    it is injected the other claimers already prepare the doubled angle, and
    the injecting ancilla joins them once it is free.  Random draws use the
    same stream keys as the engines.
    """
    if gate.kind is not GateKind.RZ:
        raise ValueError("execute_rz_rus needs an Rz gate")
    frag = RzFragment(gate.id)
    theta = as_exact(gate.theta)
    if is_clifford(theta):
        frag.clifford_fix = True
        return frag
    if not claims:
        raise ValueError("no claimed ancilla can prepare the rotation state")
    zz_rounds = timing.rounds(timing.zz_injection_cycles)
    cx_rounds = timing.rounds(timing.cnot_injection_cycles)
    free_at = {a: 0 for a, _, _ in claims}
    level = 0
    while True:
        ready = []
        for a, zz, helper in claims:
            dur = sample_prep_duration(rus, timing, 1, rng.spawn(1, gate.id, level, a, 0))
            ready.append((free_at[a] + dur, not zz, a, zz, helper))
        t, _, a, zz, helper = min(ready)
        t = max(t, frag.rounds)  # the data qubit is busy until the last injection ends
        end = t + (zz_rounds if zz else cx_rounds)
        frag.injections += 1
        ok = sample_injection(rng.spawn(0, gate.id, frag.injections)) is Injection.SUCCESS
        frag.records.append(InjectionRecord(level, a, None if zz else helper, "ZZ" if zz else "CNOT",
                                            t, end, ok))
        frag.rounds = end
        level += 1
        if ok or level >= MAX_CHAIN:
            return frag
        if is_clifford(theta * 2 ** level):
            frag.clifford_fix = True
            return frag
        for b in free_at:
            free_at[b] = end if b == a else t
