import io

import numpy as np
import pytest

import ddfem
from ddfem.errors import (
    ConductivityPositivityError,
    MeshFormatError,
    MeshInvariantError,
    UnsupportedConfigError,
)
from ddfem.mesh import boundary_edges, mesh_to_text, normalize_numbering, validate_mesh

from conftest import ring_snap

SINGLE_TRIANGLE = """ddfem-mesh v1 d=2 p=1
node 1 0 0 0
node 2 1 0 0
node 3 0 1 0
elem 1 1 2 3
"""


def test_generator_counts_square():
    m1 = ddfem.gen_structured_square(1, p=1)
    assert (m1.n_elements, m1.n_nodes) == (2, 4)
    m2 = ddfem.gen_structured_square(2, p=1)
    assert (m2.n_elements, m2.n_nodes) == (8, 9)
    q1 = ddfem.gen_structured_square(1, p=2)
    assert q1.n_nodes == 9          # 4 corners + 5 edge midpoints
    assert q1.nodes_per_element == 6


def test_generator_counts_cube():
    c1 = ddfem.gen_structured_cube(1, p=1)
    assert (c1.n_elements, c1.n_nodes) == (6, 8)
    c2 = ddfem.gen_structured_cube(2, p=1)
    assert c2.n_elements == 48
    cq = ddfem.gen_structured_cube(1, p=2)
    assert cq.nodes_per_element == 10


def test_generator_marks_boundary_dirichlet():
    mesh = ddfem.gen_structured_square(2, p=1)
    assert mesh.n_free == 1
    free_node = mesh.nodes[0]
    np.testing.assert_allclose(free_node, [0.5, 0.5])
    none = ddfem.gen_structured_square(2, p=1, dirichlet="none")
    assert none.n_free == none.n_nodes


@pytest.mark.parametrize("gen,args", [
    (ddfem.gen_structured_square, (0,)),
    (ddfem.gen_structured_cube, (0,)),
    (ddfem.gen_structured_square, (2, 3)),
])
def test_generator_bad_arguments(gen, args):
    with pytest.raises(UnsupportedConfigError):
        gen(*args)


@pytest.mark.parametrize("d,p", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_structured_meshes_positively_oriented(d, p):
    # Assumption check by construction: every Gauss-point determinant positive.
    mesh = (ddfem.gen_structured_square(2, p=p) if d == 2
            else ddfem.gen_structured_cube(2, p=p))
    system = ddfem.build_system(mesh)
    for geom in system.geometries:
        assert np.all(geom.dets > 0)


def test_insert_midpoints_counts(two_triangle_square):
    refined = ddfem.insert_midpoints(two_triangle_square)
    assert refined.n_nodes == 9   # 4 corners + 5 unique edges
    assert refined.p == 2
    # shared edge midpoints deduplicated: each element has 6 distinct nodes
    for t in range(refined.n_elements):
        assert len(set(refined.elements[t].tolist())) == 6


def test_insert_midpoints_are_means(two_triangle_square):
    refined = ddfem.insert_midpoints(two_triangle_square)
    ref2 = ddfem.make_reference(2, 2)
    for t in range(refined.n_elements):
        coords = refined.nodes[refined.elements[t]]
        corners = {tuple(np.round(c, 12)) for c in coords[[0, 2, 5]]}
        for a, b, mid in ((0, 2, 1), (0, 5, 3), (2, 5, 4)):
            np.testing.assert_allclose(coords[mid], 0.5 * (coords[a] + coords[b]))
        assert len(corners) == 3
    assert tuple(ref2.ref_nodes[1]) == (0.5, 0.0)


def test_midpoint_dirichlet_inheritance():
    mesh = ddfem.gen_structured_square(1, p=1)   # all 4 corners Dirichlet
    refined = ddfem.insert_midpoints(mesh)
    # 4 boundary-edge midpoints become Dirichlet, the diagonal midpoint stays
    # free even though both its endpoints are Dirichlet.
    assert refined.n_free == 1
    np.testing.assert_allclose(refined.nodes[0], [0.5, 0.5])


def test_insert_midpoints_rejects_quadratic_input():
    refined = ddfem.insert_midpoints(ddfem.gen_structured_square(1, p=1))
    with pytest.raises(UnsupportedConfigError):
        ddfem.insert_midpoints(refined)


def test_snap_projector_moves_boundary_midpoints(quarter_ring_mesh):
    refined = ddfem.insert_midpoints(quarter_ring_mesh, snap=ring_snap)
    radii = np.linalg.norm(refined.nodes, axis=1)
    near_inner = radii[np.abs(radii - 1.0) < 0.05]
    near_outer = radii[np.abs(radii - 2.0) < 0.1]
    np.testing.assert_allclose(near_inner, 1.0, atol=1e-14)
    np.testing.assert_allclose(near_outer, 2.0, atol=1e-14)
    # interior (radial) midpoints stay put as arithmetic means
    assert np.any((radii > 1.2) & (radii < 1.8))


def test_boundary_edges_square(two_triangle_square):
    edges = boundary_edges(two_triangle_square)
    assert len(edges) == 4   # the diagonal is interior


def test_midpoint_dirichlet_inheritance_3d():
    # Only the main-diagonal midpoint is interior in the refined unit cube.
    refined = ddfem.gen_structured_cube(1, p=2)
    assert refined.n_free == 1
    np.testing.assert_allclose(refined.nodes[0], [0.5, 0.5, 0.5])

    bigger = ddfem.gen_structured_cube(2, p=2)
    free = bigger.nodes[:bigger.n_free]
    fixed = bigger.nodes[bigger.n_free:]
    assert np.all((free > 0) & (free < 1))
    assert np.all(np.any(np.isclose(fixed, 0.0) | np.isclose(fixed, 1.0), axis=1))


@pytest.mark.parametrize("maker", [
    lambda: ddfem.insert_midpoints(ddfem.gen_structured_square(1, p=1,
                                                               dirichlet="none")),
    lambda: ddfem.gen_structured_cube(2, p=2),
])
def test_roundtrip_identity(maker):
    mesh = maker()
    text = mesh_to_text(mesh)
    back = ddfem.load_mesh(text)
    np.testing.assert_array_equal(back.nodes, mesh.nodes)
    np.testing.assert_array_equal(back.elements, mesh.elements)
    np.testing.assert_array_equal(back.dirichlet, mesh.dirichlet)
    assert back.theta_elem is None


def test_roundtrip_theta(tmp_path):
    mesh = ddfem.gen_structured_square(2, p=1)
    withtheta = ddfem.Mesh(
        d=mesh.d, p=mesh.p, nodes=mesh.nodes, elements=mesh.elements,
        dirichlet=mesh.dirichlet,
        theta_elem=np.linspace(1.0, 2.0, mesh.n_elements))
    path = tmp_path / "m.mesh"
    ddfem.save_mesh(withtheta, path)
    back = ddfem.load_mesh(path)
    np.testing.assert_array_equal(back.theta_elem, withtheta.theta_elem)


def test_load_single_triangle():
    mesh = ddfem.load_mesh(SINGLE_TRIANGLE)
    assert mesh.n_elements == 1
    assert mesh.n_nodes == mesh.n_free == 3


def test_load_renumbers_dirichlet_last():
    text = SINGLE_TRIANGLE.replace("node 1 0 0 0", "node 1 0 0 1")
    mesh = ddfem.load_mesh(text)
    assert mesh.n_free == 2
    assert bool(mesh.dirichlet[2]) and not mesh.dirichlet[:2].any()
    np.testing.assert_allclose(mesh.nodes[2], [0.0, 0.0])
    assert mesh.permutation is not None
    # element still references the same geometry
    np.testing.assert_allclose(
        sorted(map(tuple, mesh.nodes[mesh.elements[0]])),
        [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)])


def test_parse_error_names_line():
    bad = SINGLE_TRIANGLE.replace("elem 1 1 2 3", "elem 1 1 2")
    with pytest.raises(MeshFormatError) as exc:
        ddfem.load_mesh(bad)
    assert exc.value.line == 5
    with pytest.raises(MeshFormatError):
        ddfem.load_mesh("not a mesh\n")
    with pytest.raises(MeshFormatError):
        ddfem.load_mesh(io.StringIO("ddfem-mesh v1 d=2 p=1\nnode 1 0 0 2\n"))


def test_invariant_violations():
    dup = SINGLE_TRIANGLE.replace("elem 1 1 2 3", "elem 1 1 2 2")
    with pytest.raises(MeshInvariantError):
        ddfem.load_mesh(dup)
    dangling = SINGLE_TRIANGLE.replace("elem 1 1 2 3", "elem 1 1 2 4")
    with pytest.raises(MeshInvariantError):
        ddfem.load_mesh(dangling)
    orphan = SINGLE_TRIANGLE + "node 4 2 2 0\n"
    orphan = orphan.replace("node 3 0 1 0", "node 3 0 1 0")
    with pytest.raises(MeshInvariantError):
        ddfem.load_mesh(orphan)


def test_normalize_numbering_stable():
    mesh = ddfem.Mesh(
        d=2, p=1,
        nodes=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        elements=np.array([[0, 1, 2]]),
        dirichlet=np.array([True, False, False]),
    )
    out = normalize_numbering(mesh)
    validate_mesh(out)
    np.testing.assert_array_equal(out.dirichlet, [False, False, True])
    np.testing.assert_allclose(out.nodes, [[1, 0], [0, 1], [0, 0]])
    np.testing.assert_array_equal(out.elements, [[2, 0, 1]])


def test_conductivity_modes():
    const = ddfem.ConductivityField.from_constant(1.0)
    assert ddfem.eval_conductivity(const, (0.3, 0.3)) == 1.0

    per = ddfem.ConductivityField.from_per_element([1.0, 100.0])
    assert ddfem.eval_conductivity(per, (0.9, 0.9), element=1) == 100.0
    with pytest.raises(UnsupportedConfigError):
        ddfem.eval_conductivity(per, (0.9, 0.9))

    expr = ddfem.ConductivityField.from_expression("1 + x**2")
    assert ddfem.eval_conductivity(expr, (1.0, 0.0)) == pytest.approx(2.0)


def test_conductivity_positivity():
    with pytest.raises(ConductivityPositivityError):
        ddfem.eval_conductivity(ddfem.ConductivityField.from_constant(0.0), (0, 0))
    expr = ddfem.ConductivityField.from_expression("x - 10")
    with pytest.raises(ConductivityPositivityError):
        ddfem.eval_conductivity(expr, (1.0, 0.0))


def test_conductivity_expression_rejects_unknown_names():
    with pytest.raises(UnsupportedConfigError):
        ddfem.ConductivityField.from_expression("__import__('os').getpid()")


def test_transform_mesh(two_triangle_square):
    doubled = ddfem.transform_mesh(two_triangle_square, lambda x: 2.0 * x)
    np.testing.assert_allclose(doubled.nodes, 2.0 * two_triangle_square.nodes)
    np.testing.assert_array_equal(doubled.elements, two_triangle_square.elements)
