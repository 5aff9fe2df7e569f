import numpy as np
import pytest

from anisouq.mesh import (
    build_base_mesh,
    prolongate,
    prolongation_matrix,
    read_mesh,
    refine,
    write_mesh,
)


def test_base_mesh_counts():
    m = build_base_mesh()
    assert m.level == 0 and m.n_tets == 48 and m.n_vertices == 27
    assert m.volumes.sum() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("level", range(4))
def test_counts_and_volumes(meshes, level):
    m = meshes[level]
    assert m.n_tets == 48 * 8**level
    assert m.n_vertices == (2 ** (level + 1) + 1) ** 3
    assert np.all(m.volumes > 0)
    assert abs(m.volumes.sum() - 1.0) < 1e-12
    # every tet of a Kuhn mesh has volume h^3 / 6
    np.testing.assert_allclose(m.volumes, m.h**3 / 6, rtol=1e-12)


def test_refine_examples(meshes):
    assert (meshes[1].n_tets, meshes[1].n_vertices) == (384, 125)
    assert meshes[2].n_tets == 3072


def test_boundary_flags(meshes):
    for m in meshes:
        on = np.any((np.abs(m.vertices) < 1e-14) | (np.abs(m.vertices - 1) < 1e-14), axis=1)
        np.testing.assert_array_equal(m.boundary, on)


def test_lexicographic_numbering(meshes):
    for m in meshes:
        order = np.lexsort((m.vertices[:, 2], m.vertices[:, 1], m.vertices[:, 0]))
        np.testing.assert_array_equal(order, np.arange(m.n_vertices))


def test_nested_vertices(meshes):
    for coarse, fine in zip(meshes, meshes[1:]):
        fine_set = {tuple(v) for v in np.round(fine.vertices, 12)}
        assert all(tuple(v) in fine_set for v in np.round(coarse.vertices, 12))


def test_children_carry_parent_volume(meshes):
    for coarse, fine in zip(meshes, meshes[1:]):
        np.testing.assert_allclose(fine.volumes, coarse.volumes[fine.parent_tet] / 8, rtol=1e-12)
        assert np.all(np.bincount(fine.parent_tet) == 8)


def test_kuhn_structure(meshes):
    # every edge of a Kuhn mesh is a lattice step with no mixed-sign coordinates
    for m in meshes:
        for i in range(4):
            for j in range(i + 1, 4):
                d = np.rint((m.vertices[m.tets[:, j]] - m.vertices[m.tets[:, i]]) / m.h)
                assert np.all(np.abs(d) <= 1)
                assert not np.any(np.any(d > 0, axis=1) & np.any(d < 0, axis=1))


def test_conforming(meshes):
    # interior faces are shared by exactly two tets, boundary faces by one
    for m in meshes[:3]:
        faces = np.sort(m.tets[:, [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]].reshape(-1, 3), axis=1)
        _, counts = np.unique(faces, axis=0, return_counts=True)
        assert set(counts) == {1, 2}
        n_boundary = 2 * 6 * m.cells_per_side**2
        assert np.sum(counts == 1) == n_boundary


def test_prolongate_linear_exact(meshes):
    coarse, fine = meshes[0], meshes[3]
    u = coarse.vertices[:, 0] + 2 * coarse.vertices[:, 1]
    np.testing.assert_allclose(prolongate(u, coarse, fine), fine.vertices[:, 0] + 2 * fine.vertices[:, 1], atol=1e-14)
    np.testing.assert_array_equal(prolongate(np.ones(coarse.n_vertices), coarse, fine), 1.0)


def test_prolongate_keeps_coarse_values(meshes):
    rng = np.random.default_rng(3)
    coarse, fine = meshes[1], meshes[3]
    u = rng.standard_normal(coarse.n_vertices)
    v = prolongate(u, coarse, fine)
    # coarse vertex (i,j,k) sits at fine lattice point 4*(i,j,k)
    n = fine.cells_per_side + 1
    ijk = np.rint(coarse.vertices * coarse.cells_per_side).astype(int) * 4
    idx = (ijk[:, 0] * n + ijk[:, 1]) * n + ijk[:, 2]
    np.testing.assert_array_equal(v[idx], u)
    assert np.all(prolongate(np.abs(u), coarse, fine) >= 0)


def test_prolongate_linear_map_and_matrix(meshes):
    rng = np.random.default_rng(4)
    coarse, fine = meshes[0], meshes[2]
    u, w = rng.standard_normal((2, coarse.n_vertices))
    P = prolongation_matrix(coarse, fine)
    np.testing.assert_allclose(prolongate(2 * u - w, coarse, fine), P @ (2 * u - w), atol=1e-13)
    np.testing.assert_allclose(prolongate(2 * u - w, coarse, fine), 2 * P @ u - P @ w, atol=1e-13)
    # vector-valued fields prolongate per component
    U = rng.standard_normal((coarse.n_vertices, 3))
    np.testing.assert_allclose(prolongate(U, coarse, fine)[:, 1], P @ U[:, 1], atol=1e-13)


def test_prolongate_level_mismatch(meshes):
    with pytest.raises(ValueError):
        prolongate(np.zeros(meshes[2].n_vertices), meshes[2], meshes[1])
    with pytest.raises(ValueError):
        prolongate(np.zeros(5), meshes[0], meshes[1])


def test_refine_is_deterministic(meshes):
    again = refine(meshes[1])
    np.testing.assert_array_equal(again.tets, meshes[2].tets)


def test_mesh_roundtrip(tmp_path, meshes):
    path = tmp_path / "m.txt"
    write_mesh(meshes[1], path)
    back = read_mesh(path)
    assert back.level == 1
    np.testing.assert_array_equal(back.tets, meshes[1].tets)
    np.testing.assert_allclose(back.vertices, meshes[1].vertices, rtol=0, atol=0)
    np.testing.assert_array_equal(back.boundary, meshes[1].boundary)
