import numpy as np
import pytest

from soras_lab.mesh import build_strip_mesh, node_depth_from_segment


@pytest.mark.parametrize("N, ny, expected", [(5, 60, 18361), (2, 60, 7381), (4, 60, 14701),
                                             (8, 60, 29341), (16, 60, 58621)])
def test_node_counts_match_reported_dofs(N, ny, expected):
    assert build_strip_mesh(N, ny).n_nodes == expected


def test_smallest_grid():
    m = build_strip_mesh(1, 1)
    assert m.n_nodes == 4
    assert m.n_triangles == 2
    assert m.h == pytest.approx(0.2)
    assert m.boundary_node.all()


@pytest.mark.parametrize("N, ny", [(1, 2), (2, 4), (3, 7), (5, 12)])
def test_mesh_invariants(N, ny):
    m = build_strip_mesh(N, ny)
    assert m.nx == N * ny
    assert m.n_nodes == (m.nx + 1) * (ny + 1)
    assert m.n_triangles == 2 * m.nx * ny
    areas = m.signed_areas()
    assert np.all(areas > 0)
    np.testing.assert_allclose(areas, m.h ** 2 / 2, rtol=1e-12)
    assert abs(areas.sum() - N * 0.2 * 0.2) <= 1e-12 * N * 0.04
    col, row = m.node_grid_index.T
    expected = (col == 0) | (col == m.nx) | (row == 0) | (row == ny)
    np.testing.assert_array_equal(m.boundary_node, expected)


def test_lexicographic_ordering_and_diagonal():
    m = build_strip_mesh(2, 2)
    # node k = row * (nx + 1) + col
    np.testing.assert_allclose(m.nodes[m.nx + 2], [m.h, m.h])
    # first square split along its lower-left to upper-right diagonal
    ll, lr, ul, ur = 0, 1, m.nx + 1, m.nx + 2
    assert m.triangles[0].tolist() == [ll, lr, ur]
    assert m.triangles[1].tolist() == [ll, ur, ul]


def test_deterministic():
    a, b = build_strip_mesh(3, 5), build_strip_mesh(3, 5)
    np.testing.assert_array_equal(a.nodes, b.nodes)
    np.testing.assert_array_equal(a.triangles, b.triangles)


@pytest.mark.parametrize("N, ny", [(0, 4), (2, 0), (-1, 3)])
def test_rejects_bad_sizes(N, ny):
    with pytest.raises(ValueError):
        build_strip_mesh(N, ny)


def test_node_depth():
    m = build_strip_mesh(5, 60)
    h = m.h
    at = int(m.node_index(60, 10))
    assert node_depth_from_segment(m, 0.2, at) == 0.0
    assert node_depth_from_segment(m, 0.2, int(m.node_index(61, 10))) == pytest.approx(h, abs=1e-15)
    assert node_depth_from_segment(m, 0.4, at) == pytest.approx(0.2, abs=1e-15)


def test_dump_format(tmp_path):
    m = build_strip_mesh(1, 1)
    path = tmp_path / "mesh.txt"
    m.dump(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "nodes 4 triangles 2"
    assert lines[1].split() == ["0", "0", "1"]
    assert lines[-1].split() == ["0", "3", "2"]
