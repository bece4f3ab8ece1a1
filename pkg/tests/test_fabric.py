import json

import pytest
from hypothesis import given, settings, strategies as st

from rusched.fabric import (DOWN, LEFT, RIGHT, UP, EdgeOrientation, Fabric, LayoutError, Role, build_star_grid,
                            compress, rotate_edges)


def _count(f: Fabric, role: Role) -> int:
    return sum(1 for row in f.roles for x in row if x is role)


def test_four_qubit_grid():
    f = build_star_grid(4)
    assert (f.rows, f.cols) == (4, 4)
    assert f.num_qubits == 4 and f.num_ancillas == 12


def test_single_block():
    f = build_star_grid(1)
    assert (f.rows, f.cols) == (2, 2)
    assert f.num_ancillas == 3
    assert f.data_pos[0] == (1, 0)  # bottom-left of its block


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7, 10, 18, 27, 34, 50, 100])
def test_three_ancillas_per_qubit_and_z_edge_coverage(n):
    f = build_star_grid(n)
    assert f.num_ancillas == 3 * n
    assert _count(f, Role.DATA) == n
    assert f.ancilla_graph_connected()
    for q in range(n):
        sides = dict(f.side_ancillas(q))
        assert UP in sides  # the Z edge faces an ancilla in every block
        assert f.orientation[q].label(UP) == "Z"


def test_row_major_placement():
    f = build_star_grid(9)
    rows = [f.data_pos[q][0] for q in range(9)]
    cols = [f.data_pos[q][1] for q in range(9)]
    assert rows == [1, 1, 1, 3, 3, 3, 5, 5, 5]
    assert cols[:3] == sorted(cols[:3])


def test_compress_zero_is_identity():
    f = build_star_grid(9)
    g, plan = compress(f, 0.0, seed=3)
    assert plan.compressed_set == ()
    assert g.roles == f.roles and g.num_ancillas == 27


def test_full_compression_keeps_right_column():
    n = 9
    g, plan = compress(build_star_grid(n), 1.0, seed=0)
    assert len(plan.compressed_set) == n
    assert g.ancilla_graph_connected()
    last_col = g.cols - 1
    assert all(g.role((r, last_col)) is Role.ANCILLA for r in range(g.rows) if r % 2 == 0)
    # one ancilla per block plus the preserved right column of each strip
    strips = 3
    assert g.num_ancillas == n + 2 * strips
    for q in range(n):
        assert g.side_ancilla(q, UP) is not None


@pytest.mark.parametrize("fraction", [0.25, 0.5, 0.75])
def test_compression_count_and_determinism(fraction):
    f = build_star_grid(20)
    g1, p1 = compress(f, fraction, seed=11)
    g2, p2 = compress(f, fraction, seed=11)
    assert len(p1.compressed_set) == round(fraction * 20)
    assert p1.compressed_set == p2.compressed_set and g1.roles == g2.roles


def test_compress_twice_at_full_changes_nothing():
    f = build_star_grid(12)
    g, _ = compress(f, 1.0, seed=1)
    h, _ = compress(g, 1.0, seed=7)
    assert g.roles == h.roles and g.data_pos == h.data_pos


def test_compress_rejects_bad_fraction():
    with pytest.raises(ValueError):
        compress(build_star_grid(4), 1.5)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.floats(0, 1), st.integers(0, 10_000))
def test_compression_preserves_connectivity_and_partition(n, fraction, seed):
    g, plan = compress(build_star_grid(n), fraction, seed)
    assert g.ancilla_graph_connected()
    assert _count(g, Role.DATA) == n
    seen = set()
    for q, p in enumerate(g.data_pos):
        assert g.role(p) is Role.DATA and p not in seen
        seen.add(p)
        assert g.side_ancillas(q)
    for a, p in enumerate(g.anc_pos):
        assert g.role(p) is Role.ANCILLA and p not in seen
    assert n <= g.num_ancillas <= 3 * n


def test_rotation_descriptor():
    f = build_star_grid(4)
    eff = rotate_edges(f, 0)
    assert eff.duration_cycles == 3 and eff.ancilla_needed == 1
    assert eff.orientation_after.label(LEFT) == "Z" and eff.orientation_after.label(UP) == "X"
    back = rotate_edges(f, 0, eff.orientation_after)
    assert back.orientation_after == f.orientation[0]


def test_rotation_without_ancilla_is_layout_bug():
    f = Fabric.from_layout(["A.", ".D"])
    with pytest.raises(LayoutError):
        rotate_edges(f, 0)


def test_orientation_invariants():
    o = EdgeOrientation()
    labels = [o.label(s) for s in (UP, DOWN, LEFT, RIGHT)]
    assert labels == ["Z", "Z", "X", "X"]
    assert o.swapped().swapped() == o
    with pytest.raises(ValueError):
        EdgeOrientation("Y")


def test_layout_parsing_and_json_dump():
    f = Fabric.from_layout(["AA1", "0.."])
    assert f.data_pos == [(1, 0), (0, 2)]
    assert f.side_ancillas(0) == [(UP, f.ancilla_at((0, 0)))]
    assert f.side_ancillas(1) == [(LEFT, f.ancilla_at((0, 1)))]
    d = json.loads(f.to_json())
    assert d["layout"] == ["AAD", "D.."]
    with pytest.raises(LayoutError):
        Fabric.from_layout(["AX"])


def test_prep_tile_is_top_right_of_full_block():
    f = build_star_grid(4)
    for q in range(4):
        r, c = f.data_pos[q]
        assert f.anc_pos[f.prep_tile(q)] == (r - 1, c + 1)
    g, _ = compress(f, 1.0)
    for q in range(4):
        assert f.anc_pos[f.prep_tile(q)] is not None
        assert g.prep_tile(q) in {a for _, a in g.side_ancillas(q)} | {
            g.ancilla_at((g.data_pos[q][0] - 1, g.data_pos[q][1] + 1))}
