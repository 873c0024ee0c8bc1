"""Estimator front end: parameter plumbing, validation, fit/predict."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from teig.assembly import CaseError
from teig.estimator import (TransmissionEigenSolver, check_choice, check_mesh,
                            check_positive)
from teig.eigensolver import sort_eqslantless
from teig.mesh import build_builtin_domain


def tiny_mesh():
    return build_builtin_domain("unit_square", 0.25)


class TestValidationHelpers:
    def test_check_positive(self):
        assert check_positive(2.5, "x") == 2.5
        for bad in (0, -1, "a", True):
            with pytest.raises(ValueError):
                check_positive(bad, "x")
        with pytest.raises(ValueError):
            check_positive(2.5, "x", int)

    def test_check_choice(self):
        assert check_choice("a", "x", ("a", "b")) == "a"
        with pytest.raises(ValueError):
            check_choice("c", "x", ("a", "b"))

    def test_check_mesh(self):
        m = tiny_mesh()
        assert check_mesh(m) is m
        with pytest.raises(TypeError):
            check_mesh("unit_square")


class TestParams:
    def test_get_set_clone(self):
        est = TransmissionEigenSolver(n="16", k=4, levels=2, method="multi")
        params = est.get_params()
        assert params["k"] == 4 and params["method"] == "multi"
        est.set_params(k=5)
        assert est.k == 5
        dup = clone(est)
        assert dup.get_params() == est.get_params()

    def test_predict_before_fit(self):
        with pytest.raises(NotFittedError):
            TransmissionEigenSolver().predict()

    @pytest.mark.parametrize("kwargs", [
        {"degree": 4}, {"method": "turbo"}, {"levels": 0}, {"k": 0},
        {"tol": -1.0}])
    def test_invalid_params_raise_on_fit(self, kwargs):
        with pytest.raises(ValueError):
            TransmissionEigenSolver(**kwargs).fit(tiny_mesh())

    def test_non_mesh_input(self):
        with pytest.raises(TypeError):
            TransmissionEigenSolver().fit(np.zeros((3, 2)))


class TestFit:
    def test_single_level_fit_predict(self):
        est = TransmissionEigenSolver(n="16", k=4).fit(tiny_mesh())
        vals = est.predict()
        assert len(vals) >= 4
        # ascending in the modulus/argument preorder
        assert sort_eqslantless(list(vals)) == list(range(len(vals)))
        # coarse-mesh value of the first eigenvalue (converges to ~3.53)
        assert 3.3 <= vals[0].real <= 4.3
        assert est.run_ is None
        assert est.conjugate_violations_ == []

    def test_multi_level_fit(self):
        est = TransmissionEigenSolver(n="16", k=4, levels=2,
                                      method="multi").fit(tiny_mesh())
        assert est.run_ is not None
        assert len(est.run_.levels) == 2
        assert len(est.predict()) >= 4

    def test_constant_n_bounds_inferred(self):
        est = TransmissionEigenSolver(n="16", k=2).fit(tiny_mesh())
        assert est.hierarchy_.case == "I"

    def test_variable_n_requires_bounds(self):
        est = TransmissionEigenSolver(n="x1^2+x2^2+4", k=2)
        with pytest.raises(ValueError):
            est.fit(tiny_mesh())

    def test_variable_n_with_bounds(self):
        est = TransmissionEigenSolver(n="x1^2+x2^2+4", n_s=4.0, n_b=6.0,
                                      k=2).fit(tiny_mesh())
        assert len(est.predict()) >= 2

    def test_case_conflict_raises(self):
        est = TransmissionEigenSolver(n="16", case="II", k=2)
        with pytest.raises(CaseError):
            est.fit(tiny_mesh())

    def test_seed_determinism(self):
        v1 = TransmissionEigenSolver(k=3, seed=5).fit(tiny_mesh()).predict()
        v2 = TransmissionEigenSolver(k=3, seed=5).fit(tiny_mesh()).predict()
        assert np.array_equal(v1, v2)
