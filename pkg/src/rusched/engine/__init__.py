from .common import (GateState, MetricsRecord, Phase, ResourceLog, SchedulingError, TraceRecord, collect_metrics,
                     geomean, normalize, write_trace)
from .dynamic import DynamicEngine, run_dynamic
from .rus import InjectionRecord, RzFragment, execute_rz_rus
from .static import StaticEngine, run_static_greedy, run_static_layered

SCHEMES = ("dynamic", "static_greedy", "static_layered")


def run_scheme(scheme, circuit, fabric, timing=None, rus=None, *, k=25, c=100, tau=100, seed=0):
    if scheme == "dynamic":
        return run_dynamic(circuit, fabric, timing, rus, k=k, c=c, tau=tau, seed=seed)
    if scheme == "static_greedy":
        return run_static_greedy(circuit, fabric, timing, rus, seed=seed)
    if scheme == "static_layered":
        return run_static_layered(circuit, fabric, timing, rus, seed=seed)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
