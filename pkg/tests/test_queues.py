from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from rusched.circuit import Circuit, Gate, GateKind, build_dag
from rusched.fabric import UP, build_star_grid, compress
from rusched.queues import (QRole, QueueBook, QueueEntry, Status, enqueue_rz, expected_free_time,
                            on_injection_result, on_prep_success, rz_claim, tie_break)


def _rz(q, gid=0, theta=Fraction(1, 16)):
    return Gate(GateKind.RZ, (q,), theta, gid)


def test_claim_matches_queue_figure_layout():
    # bottom-middle qubit of a 3x3 block grid: one Z-side ancilla above it,
    # two diagonal ancillas reached through its left and right X-side ancillas
    f = build_star_grid(9)
    q = 7
    r, c = f.data_pos[q]
    claim = rz_claim(f, q, f.orientation[q])
    prep = {a for a, _, _ in claim.prepare}
    assert len(prep) == 3 and len(claim.route) == 2
    z_side = f.ancilla_at((r - 1, c))
    assert [(a, zz) for a, zz, _ in claim.prepare if zz] == [(z_side, True)]
    left, right = f.ancilla_at((r, c - 1)), f.ancilla_at((r, c + 1))
    assert set(claim.route) == {left, right}
    helpers = {a: h for a, zz, h in claim.prepare if not zz}
    assert helpers == {f.ancilla_at((r - 1, c - 1)): left, f.ancilla_at((r - 1, c + 1)): right}


def test_enqueue_pushes_roles():
    f = build_star_grid(9)
    book = QueueBook(f.num_ancillas)
    claimed = enqueue_rz(_rz(7), f, book)
    claim = rz_claim(f, 7, f.orientation[7])
    assert claimed == claim.ancillas
    for a, _, h in claim.prepare:
        e = book[a].head
        assert e.role is QRole.PREPARE_RZ and e.helper == h
    for a in claim.route:
        assert book[a].head.role is QRole.ROUTE_RZ


def test_fully_compressed_block_claims_single_ancilla():
    g, _ = compress(build_star_grid(6), 1.0)
    q = 3
    assert [s for s, _ in g.side_ancillas(q)] == [UP]
    claim = rz_claim(g, q, g.orientation[q])
    assert claim.ancillas == {g.side_ancilla(q, UP)} and claim.route == []


def test_rotated_qubit_uses_new_z_edges():
    f = build_star_grid(9)
    o = f.orientation[4].swapped()
    claim = rz_claim(f, 4, o)
    zz = {a for a, z, _ in claim.prepare if z}
    r, c = f.data_pos[4]
    assert zz == {f.ancilla_at((r, c - 1)), f.ancilla_at((r, c + 1))}


def test_x_side_only_neighbourhoods():
    from rusched.fabric import Fabric
    f = Fabric.from_layout(["0A", ".A"])  # only an X-side neighbour plus its diagonal
    assert rz_claim(f, 0, f.orientation[0]).prepare == [(f.ancilla_at((1, 1)), False, f.ancilla_at((0, 1)))]
    g = Fabric.from_layout(["0A"])
    assert enqueue_rz(_rz(0), g, QueueBook(g.num_ancillas)) == set()


def test_shared_ancilla_keeps_enqueue_order():
    f = build_star_grid(9)
    book = QueueBook(f.num_ancillas)
    enqueue_rz(_rz(3, 0), f, book)
    enqueue_rz(_rz(4, 1), f, book)
    shared = rz_claim(f, 3, f.orientation[3]).ancillas & rz_claim(f, 4, f.orientation[4]).ancillas
    assert shared
    for a in shared:
        assert [e.gate for e in book[a].entries] == [0, 1]


def test_queue_entry_invariants():
    book = QueueBook(3)
    book.push(0, QueueEntry(5, QRole.ROUTE_CNOT, 1))
    with pytest.raises(ValueError):
        book.push(0, QueueEntry(5, QRole.ROUTE_CNOT, 2))
    with pytest.raises(ValueError):
        book.push(1, QueueEntry(6, QRole.PREPARE_RZ, 3, helper=1))


def _three_claimers():
    f = build_star_grid(9)
    book = QueueBook(f.num_ancillas)
    enqueue_rz(_rz(7), f, book)
    prep = [a for a, _, _ in rz_claim(f, 7, f.orientation[7]).prepare]
    return f, book, prep


def test_prep_success_promotes_siblings_in_place():
    f, book, prep = _three_claimers()
    for a in prep:
        book[a].head.status = Status.PREPARING
    lengths = [len(q) for q in book.queues]
    restart = on_prep_success(0, prep[0], book)
    assert book[prep[0]].head.status is Status.DONE_PREP and book[prep[0]].head.level == 0
    assert sorted(restart) == sorted(prep[1:])
    for a in prep[1:]:
        e = book[a].head
        assert e.level == 1 and e.angle == Fraction(1, 8) and e.status is Status.READY
    assert [len(q) for q in book.queues] == lengths


def test_single_claimer_success():
    g, _ = compress(build_star_grid(6), 1.0)
    book = QueueBook(g.num_ancillas)
    (a,) = enqueue_rz(_rz(3), g, book)
    book[a].head.status = Status.PREPARING
    assert on_prep_success(0, a, book) == []
    assert book[a].head.status is Status.DONE_PREP


def test_sibling_behind_other_gate_still_promoted():
    f = build_star_grid(9)
    book = QueueBook(f.num_ancillas)
    enqueue_rz(_rz(6, 0), f, book)      # occupies some of qubit 7's ancillas first
    enqueue_rz(_rz(7, 1), f, book)
    prep = [a for a, _, _ in rz_claim(f, 7, f.orientation[7]).prepare]
    behind = [a for a in prep if book[a].position(1) > 0]
    assert behind
    winner = next(a for a in prep if a not in behind)
    book[winner].find(1).status = Status.PREPARING
    on_prep_success(1, winner, book)
    for a in behind:
        e = book[a].find(1)
        assert e.level == 1 and e.status is Status.READY and book[a].position(1) == 1


def test_injection_success_removes_everything():
    f, book, prep = _three_claimers()
    claimed = rz_claim(f, 7, f.orientation[7]).ancillas
    before = {a: len(book[a]) for a in claimed}
    touched = on_injection_result(0, True, False, prep[0], book, 1)
    assert set(touched) == claimed
    assert all(len(book[a]) == before[a] - 1 for a in claimed)
    assert book.is_empty()


def test_injection_failure_to_clifford_finishes():
    f, book, prep = _three_claimers()
    on_injection_result(0, False, True, prep[0], book, 1)
    assert book.is_empty()


def test_injection_failure_promotes_and_resets_injector():
    f, book, prep = _three_claimers()
    book[prep[1]].head.level = 1
    book[prep[1]].head.status = Status.DONE_PREP
    assert on_injection_result(0, False, False, prep[0], book, 1) == []
    assert book[prep[0]].head.level == 1 and book[prep[0]].head.status is Status.READY
    assert book[prep[1]].head.status is Status.DONE_PREP  # eager state kept for immediate use
    assert all(book[a].head.level == 1 for a in prep)


def test_tie_break_orders():
    c = Circuit(3)
    c.append(GateKind.H, 0)
    c.append(GateKind.CNOT, 0, 1)
    c.append(GateKind.CNOT, 1, 2)
    c.append(GateKind.H, 2)
    c.append(GateKind.X, 1)
    dag = build_dag(c)
    assert dag.remaining_depth[0] > dag.remaining_depth[4]
    assert tie_break([4, 0], dag) == [0, 4]
    assert tie_break([3, 4], dag) == [3, 4]
    assert tie_break([4], dag) == [4]


def test_expected_free_time_is_additive():
    book = QueueBook(1)
    cost = {QRole.ROUTE_CNOT: 2.0, QRole.EDGE_ROTATION: 3.0}
    f = lambda e: cost[e.role]
    assert expected_free_time(book[0], f) == 0
    book.push(0, QueueEntry(1, QRole.ROUTE_CNOT, 1))
    before = expected_free_time(book[0], f)
    book.push(0, QueueEntry(2, QRole.EDGE_ROTATION, 2))
    assert expected_free_time(book[0], f) == before + 3.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=1, max_size=12), st.data())
def test_promotion_preserves_queue_lengths(qubits, data):
    f = build_star_grid(9)
    book = QueueBook(f.num_ancillas)
    for gid, q in enumerate(qubits):
        enqueue_rz(_rz(q, gid), f, book)
    lengths = [len(q) for q in book.queues]
    gid = data.draw(st.integers(0, len(qubits) - 1))
    prep = [a for a, e in book.entries_of(gid, QRole.PREPARE_RZ)]
    winner = data.draw(st.sampled_from(prep))
    book[winner].find(gid).status = Status.PREPARING
    on_prep_success(gid, winner, book)
    assert [len(q) for q in book.queues] == lengths
    order = [[(e.gate, e.role) for e in q.entries] for q in book.queues]
    on_injection_result(gid, False, False, winner, book, 1)
    assert [[(e.gate, e.role) for e in q.entries] for q in book.queues] == order
    on_injection_result(gid, True, False, winner, book, 1)
    assert all(e.gate != gid for q in book.queues for e in q.entries)
