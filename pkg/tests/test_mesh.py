"""Mesh construction, validation, red refinement and file I/O."""

import numpy as np
import pytest

from teig import mesh as meshmod
from teig.mesh import (Mesh, MeshError, MeshFormatError, build_builtin_domain,
                       load_mesh, mesh_size, refine_red, save_mesh, validate)


def square_mesh():
    """Two-triangle unit square, counter-clockwise."""
    vertices = [(0, 0), (1, 0), (1, 1), (0, 1)]
    triangles = [(0, 1, 2), (0, 2, 3)]
    boundary = [(0, 1), (1, 2), (2, 3), (3, 0)]
    return Mesh(vertices, triangles, boundary)


class TestValidate:
    def test_valid_square(self):
        assert validate(square_mesh()) == []

    def test_builtin_domains_valid(self):
        for name in ("unit_square", "right_triangle", "l_shape"):
            m = build_builtin_domain(name, 0.5)
            assert validate(m) == [], name

    def test_negative_orientation_reported(self):
        m = square_mesh()
        bad = Mesh(m.vertices, [(0, 2, 1), (0, 2, 3)], m.boundary_edges)
        report = validate(bad)
        assert any("non-positive area" in r for r in report)

    def test_hanging_node_reported(self):
        # vertex 4 sits on edge (0, 2) of the unrefined right triangle
        vertices = [(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)]
        triangles = [(0, 1, 4), (1, 2, 4), (0, 2, 3)]
        boundary = [(0, 1), (1, 2), (2, 3), (3, 0)]
        report = validate(Mesh(vertices, triangles, boundary))
        assert report  # conformity is broken one way or another

    def test_duplicate_vertex_reported(self):
        vertices = [(0, 0), (1, 0), (1, 1), (0, 1), (1, 0)]
        triangles = [(0, 1, 2), (0, 2, 3)]
        boundary = [(0, 1), (1, 2), (2, 3), (3, 0)]
        report = validate(Mesh(vertices, triangles, boundary))
        assert any("duplicated vertex" in r for r in report)

    def test_missing_boundary_tag_reported(self):
        m = square_mesh()
        bad = Mesh(m.vertices, m.triangles, [(0, 1), (1, 2), (2, 3)])
        report = validate(bad)
        assert any("not tagged" in r for r in report)


class TestBuiltinDomains:
    def test_unit_square_counts(self):
        m = build_builtin_domain("unit_square", 0.5)
        assert m.num_vertices == 9
        assert m.num_triangles == 8

    def test_right_triangle_coarsest(self):
        m = build_builtin_domain("right_triangle", 1.0)
        assert m.num_triangles >= 1
        assert validate(m) == []

    def test_l_shape(self):
        m = build_builtin_domain("l_shape", 0.5)
        assert m.num_vertices == 21
        assert m.num_triangles == 24
        # total area of the L-shaped domain [0,2]^2 \ [1,2]^2
        assert np.isclose(m.signed_areas().sum(), 3.0)

    def test_target_h_respected(self):
        for h in (0.5, 0.25, 0.126):
            m = build_builtin_domain("unit_square", h)
            assert mesh_size(m) <= 1.5 * h + 1e-12

    def test_polygon(self):
        verts = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
        m = build_builtin_domain("polygon", 0.3, polygon_vertices=verts)
        assert validate(m) == []
        assert np.isclose(m.signed_areas().sum(), 3.0)
        assert mesh_size(m) <= 1.5 * 0.3

    def test_polygon_clockwise_input_is_fixed(self):
        verts = [(0, 0), (0, 1), (1, 1), (1, 0)]  # clockwise
        m = build_builtin_domain("polygon", 0.6, polygon_vertices=verts)
        assert validate(m) == []
        assert np.all(m.signed_areas() > 0)

    def test_non_simple_polygon_rejected(self):
        bowtie = [(0, 0), (1, 1), (1, 0), (0, 1)]
        with pytest.raises(MeshError):
            build_builtin_domain("polygon", 0.5, polygon_vertices=bowtie)

    def test_unknown_domain(self):
        with pytest.raises(MeshError):
            build_builtin_domain("disk", 0.5)

    def test_bad_h(self):
        with pytest.raises(MeshError):
            build_builtin_domain("unit_square", 0.0)


class TestRefine:
    def test_counts_and_validity(self):
        m = square_mesh()
        f = refine_red(m)
        assert f.num_triangles == 4 * m.num_triangles
        assert f.level == m.level + 1
        assert validate(f) == []

    def test_h_halves_exactly(self):
        m = build_builtin_domain("unit_square", 0.5)
        f = refine_red(m)
        assert np.isclose(mesh_size(f), 0.5 * mesh_size(m), rtol=1e-14)

    def test_parent_map(self):
        m = square_mesh()
        f = refine_red(m)
        slots = {}
        for t, (p, slot) in enumerate(f.parent.triangle_parent):
            slots.setdefault(p, []).append(slot)
        assert all(sorted(v) == [0, 1, 2, 3] for v in slots.values())
        # every child triangle is contained in its parent (areas sum up)
        areas_f = f.signed_areas()
        areas_c = m.signed_areas()
        for p in range(m.num_triangles):
            mask = [i for i, (q, _) in enumerate(f.parent.triangle_parent)
                    if q == p]
            assert np.isclose(areas_f[mask].sum(), areas_c[p])

    def test_vertex_parent(self):
        m = square_mesh()
        f = refine_red(m)
        for v, rec in enumerate(f.parent.vertex_parent):
            if rec[0] == "v":
                assert np.allclose(f.vertices[v], m.vertices[rec[1]])
            else:
                _, a, b = rec
                mid = 0.5 * (m.vertices[a] + m.vertices[b])
                assert np.allclose(f.vertices[v], mid)

    def test_nested_area(self):
        m = build_builtin_domain("l_shape", 0.5)
        f = refine_red(m)
        assert np.isclose(f.signed_areas().sum(), m.signed_areas().sum())


class TestMeshFile:
    def test_round_trip(self, tmp_path):
        m = build_builtin_domain("l_shape", 0.5)
        path = tmp_path / "mesh.txt"
        save_mesh(m, path)
        m2 = load_mesh(path)
        assert np.allclose(m.vertices, m2.vertices)
        assert np.array_equal(m.triangles, m2.triangles)
        assert np.array_equal(m.boundary_edges, m2.boundary_edges)

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "mesh.txt"
        path.write_text("# comment\n\n3 1 3\n0 0\n1 0\n0 1\n"
                        "# another\n1 2 3\n1 2\n2 3\n3 1\n")
        m = load_mesh(path)
        assert m.num_vertices == 3 and m.num_triangles == 1

    def test_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 1 3\n0 0\n1 0\nnot-a-number 1\n1 2 3\n1 2\n2 3\n3 1\n")
        with pytest.raises(MeshFormatError) as err:
            load_mesh(path)
        assert "line 4" in str(err.value)

    def test_out_of_range_index(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 1 3\n0 0\n1 0\n0 1\n1 2 9\n1 2\n2 3\n3 1\n")
        with pytest.raises(MeshFormatError):
            load_mesh(path)

    def test_wrong_count(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 1 3\n0 0\n1 0\n0 1\n1 2 3\n1 2\n")
        with pytest.raises(MeshFormatError):
            load_mesh(path)
