"""Timing constants and the stochastic repeat-until-success models.

The simulator clock ticks in syndrome rounds; one lattice-surgery cycle is
``d`` rounds.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable

import numpy as np

from .circuit import Angle

INJECTION_FAIL_PROB = 0.5
_FLOAT_TOL = 1e-12


@dataclass(frozen=True)
class TimingConfig:
    d: int = 7
    p: float = 1e-4
    cnot_cycles: int = 2
    edge_rotation_cycles: int = 3
    zz_injection_cycles: int = 1
    cnot_injection_cycles: int = 2
    hadamard_cycles: int = 3
    prep_attempt_rounds: int = 2
    expansion_rounds: int | None = None

    def __post_init__(self):
        if self.d < 3 or self.d % 2 == 0:
            raise ValueError(f"code distance must be odd and >= 3, got {self.d}")
        if not 0.0 <= self.p < 1.0:
            raise ValueError("physical error rate must lie in [0, 1)")
        for name in ("cnot_cycles", "edge_rotation_cycles", "zz_injection_cycles",
                     "cnot_injection_cycles", "hadamard_cycles", "prep_attempt_rounds"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.expansion_rounds is not None and self.expansion_rounds <= 0:
            raise ValueError("expansion_rounds must be positive")

    @property
    def cycle_rounds(self) -> int:
        return self.d

    @property
    def expand_rounds(self) -> int:
        return self.d if self.expansion_rounds is None else self.expansion_rounds

    def rounds(self, cycles: int) -> int:
        return cycles * self.d

    def to_dict(self) -> dict:
        out = asdict(self)
        out["expansion_rounds"] = self.expand_rounds
        out["cycle_rounds"] = self.cycle_rounds
        return out


def default_subpatches(d: int) -> int:
    """Disjoint [[4,1,1,2]] sub-patches that fit in one distance-d patch:
    1, 3, 6, 10 for d = 3, 5, 7, 9 (triangular in (d-1)/2)."""
    m = max(1, (d - 1) // 2)
    return m * (m + 1) // 2


@dataclass(frozen=True)
class RusModel:
    q0: float = 0.5
    expand_c: float = 10.0
    q_prep_fn: Callable[[float, int], float] | None = None
    q_expand_fn: Callable[[float, int], float] | None = None
    subpatch_table: tuple[tuple[int, int], ...] | None = None

    def q_prep(self, p: float, d: int) -> float:
        q = self.q_prep_fn(p, d) if self.q_prep_fn else self.q0
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"preparation success probability {q} outside [0, 1]")
        return q

    def q_expand(self, p: float, d: int) -> float:
        if self.q_expand_fn:
            q = self.q_expand_fn(p, d)
        else:
            q = min(1.0, max(0.5, 1.0 - self.expand_c * d * p))
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"expansion success probability {q} outside [0, 1]")
        return q

    def subpatches(self, d: int) -> int:
        if self.subpatch_table:
            table = dict(self.subpatch_table)
            if d in table:
                return table[d]
        return default_subpatches(d)

    def slot_success(self, t: TimingConfig, n_patches: int = 1) -> float:
        return 1.0 - (1.0 - self.q_prep(t.p, t.d)) ** (n_patches * self.subpatches(t.d))

    def mean_prep_rounds(self, t: TimingConfig, n_patches: int = 1) -> float:
        """Analytic mean of :func:`sample_prep_duration`."""
        s = self.slot_success(t, n_patches)
        qe = self.q_expand(t.p, t.d)
        if s <= 0 or qe <= 0:
            return math.inf
        per_try = t.prep_attempt_rounds / s + t.expand_rounds
        return per_try / qe

    def describe(self, t: TimingConfig) -> dict:
        return {
            "q_prep": self.q_prep(t.p, t.d),
            "q_expand": self.q_expand(t.p, t.d),
            "subpatches": self.subpatches(t.d),
            "injection_fail_prob": INJECTION_FAIL_PROB,
            "q0": self.q0,
            "expand_c": self.expand_c,
            "custom_q_prep": self.q_prep_fn is not None,
            "custom_q_expand": self.q_expand_fn is not None,
        }


class SimRng:
    """PCG64 stream derived from a seed plus an integer key path.

    ``spawn(*keys)`` returns an independent child stream that depends only
    on the parent's seed path and ``keys``, never on how much the parent has
    been consumed.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self._gen = None

    @property
    def gen(self) -> np.random.Generator:
        # built on first draw; most parents only ever spawn
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def spawn(self, *keys: int) -> "SimRng":
        return SimRng(self.seed, self.key + tuple(keys))

    def random(self) -> float:
        return float(self.gen.random())

    def geometric(self, p: float) -> int:
        return int(self.gen.geometric(p))


class Injection(str, Enum):
    SUCCESS = "success"
    FAIL = "fail"


def sample_prep_duration(model: RusModel, t: TimingConfig, n_patches: int, rng: SimRng) -> int:
    """Rounds until a rotation state is prepared on ``n_patches`` patches.

    Every attempt slot runs all sub-patches in parallel; the first success is
    expanded to the full patch, and a failed expansion restarts everything.
    """
    if n_patches < 1:
        raise ValueError("need at least one patch")
    s = model.slot_success(t, n_patches)
    qe = model.q_expand(t.p, t.d)
    if s <= 0 or qe <= 0:
        raise ValueError("preparation can never succeed with these parameters")
    total = 0
    while True:
        slots = 1 if s >= 1.0 else rng.geometric(s)
        total += slots * t.prep_attempt_rounds + t.expand_rounds
        if qe >= 1.0 or rng.random() < qe:
            return total


def sample_injection(rng: SimRng) -> Injection:
    return Injection.FAIL if rng.random() < INJECTION_FAIL_PROB else Injection.SUCCESS


# ---------------------------------------------------------------------------
# Angles and correction chains
# ---------------------------------------------------------------------------

def as_exact(theta: Angle) -> Angle:
    """Recover an exact multiple of pi from a float when it is one to 1e-12."""
    if isinstance(theta, Fraction):
        return theta
    approx = Fraction(theta / math.pi).limit_denominator(1 << 24)
    if abs(float(approx) * math.pi - theta) <= _FLOAT_TOL:
        return approx
    return float(theta)


def is_clifford(theta: Angle) -> bool:
    """True iff theta is a multiple of pi/2."""
    if isinstance(theta, Fraction):
        return (theta * 2).denominator == 1
    x = theta / (math.pi / 2)
    return abs(x - round(x)) <= _FLOAT_TOL


class CliffordClass(str, Enum):
    CLIFFORD = "Clifford"
    NON_CLIFFORD = "NonClifford"


def clifford_check(theta: Angle) -> CliffordClass:
    return CliffordClass.CLIFFORD if is_clifford(as_exact(theta)) else CliffordClass.NON_CLIFFORD


def doubled(theta: Angle, times: int = 1) -> Angle:
    return theta * (2 ** times)


# Beyond this many doublings an inexact angle is treated as never Clifford.
MAX_CHAIN = 64


def chain_length(theta: Angle) -> int | None:
    """Smallest K >= 1 with 2^K * theta Clifford, or None if none exists."""
    th = as_exact(theta)
    if is_clifford(th):
        raise ValueError("angle is already Clifford")
    if isinstance(th, Fraction):
        # 2^K * a/b * pi is Clifford iff b divides 2^(K+1); b must be a power of two.
        den = th.denominator
        if den & (den - 1):
            return None
        return max(1, den.bit_length() - 2)
    for k in range(1, MAX_CHAIN):
        if is_clifford(th * 2 ** k):
            return k
    return None


def expected_injections(theta: Angle) -> float:
    """Mean number of injections for Rz(theta) including its correction chain."""
    if is_clifford(as_exact(theta)):
        raise ValueError("Clifford angles need no injection")
    K = chain_length(theta)
    if K is None:
        return 2.0
    total = sum(Fraction(k, 2 ** k) for k in range(1, K + 1)) + Fraction(K, 2 ** K)
    return float(total)

