import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from rusched.circuit import (Circuit, Gate, GateKind, QasmError, build_dag, generate_benchmark, load_circuit,
                             parse_angle, parse_qasm, to_qasm)

from oracles import longest_path_depths


def test_single_cnot():
    c = parse_qasm("qreg q[2]; cx q[0],q[1];")
    assert c.num_qubits == 2
    assert [(g.kind, g.qubits) for g in c.gates] == [(GateKind.CNOT, (0, 1))]


def test_rz_angle_is_exact_rational():
    c = parse_qasm("qreg q[1]; rz(pi/4) q[0];")
    assert c.gates[0].theta == Fraction(1, 4)
    assert isinstance(c.gates[0].theta, Fraction)


def test_out_of_range_index_reports_line():
    with pytest.raises(QasmError) as err:
        parse_qasm("OPENQASM 2.0;\nqreg q[3];\ncx q[0],q[5];\n")
    assert err.value.lineno == 3
    assert "out of range" in str(err.value)


def test_unsupported_gate_rejected():
    with pytest.raises(QasmError, match="unsupported gate"):
        parse_qasm("qreg q[2]; cz q[0],q[1];")


def test_missing_semicolon():
    with pytest.raises(QasmError, match="missing"):
        parse_qasm("qreg q[1]; h q[0]")


def test_measure_barrier_ignored_and_aliases_rewritten():
    text = """OPENQASM 2.0;
include "qelib1.inc";
qreg q[2]; creg c[2];
t q[0]; sdg q[1]; s q[0]; tdg q[1]; z q[0];
barrier q[0],q[1];
measure q[0] -> c[0];
"""
    c = parse_qasm(text)
    assert [g.theta for g in c.gates] == [Fraction(1, 4), Fraction(-1, 2), Fraction(1, 2), Fraction(-1, 4),
                                          Fraction(1)]


def test_multiple_registers_are_concatenated():
    c = parse_qasm("qreg a[2]; qreg b[3]; cx a[1],b[2];")
    assert c.num_qubits == 5
    assert c.gates[0].qubits == (1, 4)


@pytest.mark.parametrize("expr,expected", [
    ("pi/4", Fraction(1, 4)), ("-pi/8", Fraction(-1, 8)), ("3*pi/2", Fraction(3, 2)),
    ("pi*0.5", Fraction(1, 2)), ("2*pi/1024", Fraction(1, 512)),
])
def test_pi_expressions(expr, expected):
    assert parse_angle(expr) == expected


def test_non_pi_angle_stays_float():
    th = parse_angle("0.3")
    assert isinstance(th, float) and th == pytest.approx(0.3)


def test_gate_invariants():
    with pytest.raises(ValueError):
        Gate(GateKind.CNOT, (1, 1))
    with pytest.raises(ValueError):
        Gate(GateKind.H, (0,), Fraction(1, 4))
    with pytest.raises(ValueError):
        Gate(GateKind.RZ, (0,))
    with pytest.raises(ValueError):
        Circuit(1).append(GateKind.X, 3)


def test_dag_linear_chain():
    c = Circuit(2)
    c.append(GateKind.RZ, 0, theta=Fraction(1, 8))
    c.append(GateKind.CNOT, 0, 1)
    c.append(GateKind.RZ, 1, theta=Fraction(1, 8))
    dag = build_dag(c)
    assert dag.remaining_depth == [3, 2, 1]
    assert dag.preds == [[], [0], [1]]


def test_dag_parallel_gates():
    c = Circuit(2)
    c.append(GateKind.RZ, 0, theta=Fraction(1, 8))
    c.append(GateKind.RZ, 1, theta=Fraction(1, 8))
    dag = build_dag(c)
    assert dag.remaining_depth == [1, 1]
    assert dag.preds == [[], []] and dag.succs == [[], []]


def test_qft3_depths_match_brute_force():
    c = generate_benchmark("qft", 3)
    assert build_dag(c).remaining_depth == longest_path_depths([g.qubits for g in c.gates])


def test_qft3_counts_by_hand():
    # 3 controlled-phase pairs, each 2 CNOTs; each pair adds one Rz on the
    # control and one on the target, and the per-stage target corrections
    # merge into one Rz per target stage (2 stages have controls).
    c = generate_benchmark("qft", 3)
    assert c.count(GateKind.CNOT) == 2 * 3
    assert c.count(GateKind.H) == 3
    assert c.count(GateKind.RZ) == 2 * 3 + 2


def test_ghz3():
    c = generate_benchmark("ghz", 3)
    assert [g.kind for g in c.gates] == [GateKind.H, GateKind.CNOT, GateKind.CNOT]


def test_ising_ratio():
    c = generate_benchmark("ising_trotter", 4)
    assert c.count(GateKind.RZ) / c.count(GateKind.CNOT) == pytest.approx(1.25, abs=0.3)


@pytest.mark.parametrize("spec,rz,cnot", [("qft:18", 323, 306), ("wstate:27", 156, 52), ("ising:34", 83, 66)])
def test_suite_gate_counts(spec, rz, cnot):
    c = load_circuit(spec)
    assert (c.count(GateKind.RZ), c.count(GateKind.CNOT)) == (rz, cnot)


def test_generator_errors():
    with pytest.raises(ValueError):
        generate_benchmark("qft", 1)
    with pytest.raises(ValueError):
        generate_benchmark("nope", 4)


def test_load_circuit_from_file(tmp_path):
    p = tmp_path / "c.qasm"
    p.write_text("qreg q[2];\nh q[0];\ncx q[0],q[1];\n")
    c = load_circuit(str(p))
    assert len(c) == 2 and c.num_qubits == 2


def test_generators_deterministic():
    for fam in ("qft", "ising_trotter", "wstate", "ghz"):
        a, b = generate_benchmark(fam, 6), generate_benchmark(fam, 6)
        assert a.gates == b.gates


_gate = st.one_of(
    st.tuples(st.just("h"), st.integers(0, 4)),
    st.tuples(st.just("x"), st.integers(0, 4)),
    st.tuples(st.just("rz"), st.integers(0, 4), st.fractions(min_value=-4, max_value=4, max_denominator=64)),
    st.tuples(st.just("rzf"), st.integers(0, 4), st.floats(-6, 6, allow_nan=False)),
    st.tuples(st.just("cx"), st.integers(0, 4), st.integers(0, 4)).filter(lambda t: t[1] != t[2]),
)


def _build(ops):
    c = Circuit(5)
    for op in ops:
        if op[0] == "h":
            c.append(GateKind.H, op[1])
        elif op[0] == "x":
            c.append(GateKind.X, op[1])
        elif op[0] == "rz":
            c.append(GateKind.RZ, op[1], theta=op[2])
        elif op[0] == "rzf":
            c.append(GateKind.RZ, op[1], theta=float(op[2]))
        else:
            c.append(GateKind.CNOT, op[1], op[2])
    return c


@settings(max_examples=80, deadline=None)
@given(st.lists(_gate, max_size=40))
def test_qasm_round_trip(ops):
    c = _build(ops)
    again = parse_qasm(to_qasm(c))
    assert len(again.gates) == len(c.gates)
    for g, h in zip(c.gates, again.gates):
        assert (g.kind, g.qubits) == (h.kind, h.qubits)
        if isinstance(g.theta, Fraction):
            assert h.theta == g.theta
        elif g.theta is not None:
            assert math.isclose(float(h.theta if not isinstance(h.theta, Fraction) else h.theta * math.pi),
                                g.theta, rel_tol=1e-12, abs_tol=1e-12)
    assert parse_qasm(to_qasm(again)).gates == again.gates


@settings(max_examples=60, deadline=None)
@given(st.lists(_gate, max_size=14))
def test_dag_depth_matches_brute_force(ops):
    c = _build(ops)
    dag = build_dag(c)
    assert dag.remaining_depth == longest_path_depths([g.qubits for g in c.gates])
    for g, ps in enumerate(dag.preds):
        assert all(p < g for p in ps)  # program order makes it acyclic
