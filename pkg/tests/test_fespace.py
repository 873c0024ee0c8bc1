"""Lagrange spaces, the six-field product space, and prolongation.

Oracle for prolongation: point evaluation — the prolonged coefficient
vector must represent the identical piecewise polynomial, so values at
random points agree to near machine precision.
"""

import numpy as np
import pytest

from teig import fespace
from teig.fespace import (COMPONENTS, NONE, ZERO_BOUNDARY, ZERO_MEAN,
                          FieldVector, LagrangeSpace, ProductSpace,
                          ReferenceElement, build_product_space, evaluate,
                          prolongate, prolongation_scalar)
from teig.mesh import Mesh, build_builtin_domain, refine_red


def square8():
    return build_builtin_domain("unit_square", 0.5)  # 9 vertices, 8 triangles


class TestReferenceElement:
    @pytest.mark.parametrize("degree,count", [(1, 3), (2, 6), (3, 10)])
    def test_node_count(self, degree, count):
        assert ReferenceElement(degree).num_nodes == count

    @pytest.mark.parametrize("degree", [1, 2, 3])
    def test_kronecker_property(self, degree):
        ref = ReferenceElement(degree)
        vals = ref.eval(ref.node_coords)
        assert np.allclose(vals, np.eye(ref.num_nodes), atol=1e-12)

    @pytest.mark.parametrize("degree", [1, 2, 3])
    def test_partition_of_unity(self, degree):
        ref = ReferenceElement(degree)
        pts = np.random.default_rng(1).random((50, 2))
        pts = pts[pts.sum(axis=1) <= 1.0]
        assert np.allclose(ref.eval(pts).sum(axis=1), 1.0, atol=1e-13)

    @pytest.mark.parametrize("degree", [1, 2, 3])
    def test_gradient_matches_finite_differences(self, degree):
        ref = ReferenceElement(degree)
        rng = np.random.default_rng(2)
        pts = rng.random((20, 2)) * 0.45
        eps = 1e-6
        g = ref.grad(pts)
        gx = (ref.eval(pts + [eps, 0]) - ref.eval(pts - [eps, 0])) / (2 * eps)
        gy = (ref.eval(pts + [0, eps]) - ref.eval(pts - [0, eps])) / (2 * eps)
        assert np.allclose(g[:, :, 0], gx, atol=1e-8)
        assert np.allclose(g[:, :, 1], gy, atol=1e-8)

    def test_unsupported_degree(self):
        with pytest.raises(ValueError):
            ReferenceElement(4)


class TestLagrangeSpace:
    def test_dimensions_on_square(self):
        m = square8()  # 9 vertices, 16 edges, 8 triangles
        assert LagrangeSpace(m, 1).dim == 9
        assert LagrangeSpace(m, 2).dim == 25
        assert LagrangeSpace(m, 3).dim == 49
        assert LagrangeSpace(m, 1, ZERO_BOUNDARY).dim == 1
        assert LagrangeSpace(m, 2, ZERO_BOUNDARY).dim == 9
        assert LagrangeSpace(m, 3, ZERO_BOUNDARY).dim == 25

    def test_zero_mean_keeps_all_dofs(self):
        m = square8()
        assert LagrangeSpace(m, 1, ZERO_MEAN).dim == 9

    def test_cell_dofs_mark_boundary(self):
        m = square8()
        sp = LagrangeSpace(m, 2, ZERO_BOUNDARY)
        assert np.sum(sp.cell_dofs == -1) > 0
        interior = sp.cell_dofs[sp.cell_dofs >= 0]
        assert interior.max() == sp.dim - 1

    def test_dof_coords_shared_across_cells(self):
        m = square8()
        sp = LagrangeSpace(m, 2)
        # continuity: a DOF shared by two triangles has one coordinate
        assert sp.dof_coords.shape == (25, 2)
        assert len({tuple(np.round(c, 12)) for c in sp.dof_coords}) == 25

    def test_evaluate_reproduces_linear(self):
        m = square8()
        sp = LagrangeSpace(m, 2)
        coeffs = np.array([x + 2 * y for x, y in sp.dof_coords])
        for pt in [(0.3, 0.4), (0.9, 0.1), (0.5, 0.5)]:
            assert evaluate(sp, coeffs, pt) == pytest.approx(
                pt[0] + 2 * pt[1], abs=1e-12)

    def test_evaluate_outside_raises(self):
        sp = LagrangeSpace(square8(), 1)
        with pytest.raises(ValueError):
            evaluate(sp, np.zeros(sp.dim), (2.0, 2.0))


class TestProductSpace:
    def test_component_dims_degree2(self):
        V = build_product_space(square8(), 2)
        assert V.component_dims == (9, 9, 9, 9, 9, 9, 9)
        assert V.total_dim == 63

    def test_component_dims_degree3(self):
        V = build_product_space(square8(), 3)
        # y, p: P2 (25); phi1, phi2, u, r: P3 zero-boundary (25);
        # sigma: P2 zero-mean (25)
        assert V.component_dims == (25, 25, 25, 25, 25, 25, 25)
        assert V.total_dim == 175

    def test_sigma_degree_option(self):
        V = build_product_space(square8(), 2, sigma_degree=2)
        assert V.component("sigma").degree == 2
        assert V.component("sigma").dim == 25
        with pytest.raises(ValueError):
            build_product_space(square8(), 2, sigma_degree=3)

    def test_slices_partition_everything(self):
        V = build_product_space(square8(), 2)
        covered = np.zeros(V.total_dim, dtype=int)
        for name in COMPONENTS:
            s = V.slice_of(name)
            covered[s] += 1
        assert np.all(covered == 1)

    def test_extract_matches_slice(self):
        V = build_product_space(square8(), 2)
        vec = np.arange(V.total_dim, dtype=float)
        for name in COMPONENTS:
            assert np.array_equal(V.extract(vec, name), vec[V.slice_of(name)])

    def test_invalid_degree(self):
        with pytest.raises(ValueError):
            build_product_space(square8(), 1)

    def test_field_vector_validation(self):
        V = build_product_space(square8(), 2)
        fv = FieldVector(V, np.zeros(V.total_dim))
        assert fv.component("u").shape == (9,)
        with pytest.raises(ValueError):
            FieldVector(V, np.zeros(V.total_dim + 5))


class TestProlongation:
    @pytest.mark.parametrize("degree,constraint", [
        (1, NONE), (2, NONE), (3, NONE),
        (2, ZERO_BOUNDARY), (3, ZERO_BOUNDARY), (1, ZERO_MEAN)])
    def test_point_evaluation_oracle(self, degree, constraint):
        coarse_mesh = square8()
        fine_mesh = refine_red(coarse_mesh)
        cs = LagrangeSpace(coarse_mesh, degree, constraint)
        fs = LagrangeSpace(fine_mesh, degree, constraint)
        P = prolongation_scalar(cs, fs)
        rng = np.random.default_rng(7)
        coeffs = rng.standard_normal(cs.dim)
        fine_coeffs = P @ coeffs
        pts = rng.random((100, 2))
        for pt in pts:
            vc = evaluate(cs, coeffs, pt)
            vf = evaluate(fs, fine_coeffs, pt)
            assert vf == pytest.approx(vc, abs=1e-12)

    def test_product_prolongation_shapes(self):
        mc = square8()
        mf = refine_red(mc)
        Vc = build_product_space(mc, 2)
        Vf = build_product_space(mf, 2)
        P = prolongate(Vc, Vf, bordered=True)
        assert P.shape == (Vf.total_dim + 1, Vc.total_dim + 1)
        # the border passes through untouched
        e = np.zeros(Vc.total_dim + 1)
        e[-1] = 1.0
        out = P @ e
        assert out[-1] == 1.0 and np.allclose(out[:-1], 0.0)

    def test_product_prolongation_componentwise(self):
        mc = square8()
        mf = refine_red(mc)
        Vc = build_product_space(mc, 2)
        Vf = build_product_space(mf, 2)
        P = prolongate(Vc, Vf, bordered=False)
        rng = np.random.default_rng(3)
        vec = rng.standard_normal(Vc.total_dim)
        out = P @ vec
        for name in COMPONENTS:
            cs, fs = Vc.component(name), Vf.component(name)
            Pn = prolongation_scalar(cs, fs)
            assert np.allclose(Vf.extract(out, name),
                               Pn @ Vc.extract(vec, name), atol=1e-14)

    def test_requires_nested_meshes(self):
        m1 = square8()
        m2 = build_builtin_domain("unit_square", 0.25)
        with pytest.raises(ValueError):
            prolongation_scalar(LagrangeSpace(m1, 2), LagrangeSpace(m2, 2))
