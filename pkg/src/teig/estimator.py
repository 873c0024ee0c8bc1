"""Scikit-learn style front end.

``TransmissionEigenSolver`` is a fit-shaped estimator: ``fit`` takes a
mesh (or a built-in domain name) and computes the lowest transmission
eigenvalues; ``get_params``/``set_params`` come from BaseEstimator so the
solver composes with the wider ecosystem.
"""

import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import mesh as meshmod, multilevel
from .coefficient import Coefficient, parse_coefficient
from .eigensolver import verify_conjugate_closure


def check_positive(value, name, kind=numbers.Real):
    if not isinstance(value, kind) or isinstance(value, bool) or value <= 0:
        raise ValueError("%s must be a positive %s, got %r"
                         % (name, "integer" if kind is numbers.Integral
                            else "number", value))
    return value


def check_choice(value, name, choices):
    if value not in choices:
        raise ValueError("%s must be one of %s, got %r"
                         % (name, sorted(choices), value))
    return value


def check_mesh(X):
    if isinstance(X, meshmod.Mesh):
        return X
    raise TypeError("fit expects a teig.mesh.Mesh, got %r" % type(X).__name__)


class TransmissionEigenSolver(BaseEstimator):
    """Compute transmission eigenvalues of a polygonal domain.

    Parameters
    ----------
    n : str or Coefficient
        Index of refraction, e.g. "16" or "x1^2+x2^2+4".
    n_s, n_b : float
        Declared bounds 0 < n_s <= n(x) <= n_b; drive case selection.
    degree : int, 2 or 3
        Polynomial degree m of the product space.
    sigma_degree : int or None
        Degree of the multiplier space; None means m - 1 (Taylor-Hood).
    levels : int
        Number of nested levels (1 = a single direct solve).
    k : int
        Number of eigenvalues requested.
    method : 'single' or 'multi'
        Direct fine-level solve or the multi-level correction scheme.
    shift : float
        Shift for the shift-invert transform.
    tol : float
        Residual acceptance tolerance.
    seed : int
        Seed of the Arnoldi start vector (reproducibility).

    Attributes
    ----------
    eigenvalues_ : complex ndarray, ascending in the modulus/argument order
    eigenpairs_ : list of EigenPair on the finest level
    hierarchy_ : the assembled LevelHierarchy
    run_ : MultiLevelRun (method='multi' only)
    """

    def __init__(self, n="16", n_s=None, n_b=None, case="auto", degree=2,
                 sigma_degree=None, levels=1, k=6, method="single",
                 shift=0.5, tol=1e-9, seed=0):
        self.n = n
        self.n_s = n_s
        self.n_b = n_b
        self.case = case
        self.degree = degree
        self.sigma_degree = sigma_degree
        self.levels = levels
        self.k = k
        self.method = method
        self.shift = shift
        self.tol = tol
        self.seed = seed

    def _coefficient(self):
        coeff = self.n if isinstance(self.n, Coefficient) \
            else parse_coefficient(str(self.n))
        ns, nb = self.n_s, self.n_b
        if ns is None and nb is None and coeff.is_constant:
            ns = nb = coeff.ast[1]
        if ns is None or nb is None:
            raise ValueError("declare n_s and n_b for non-constant n")
        return coeff.with_bounds(float(ns), float(nb))

    def fit(self, X, y=None):
        """Assemble the hierarchy on mesh ``X`` and solve."""
        mesh = check_mesh(X)
        check_choice(self.degree, "degree", (2, 3))
        check_choice(self.method, "method", ("single", "multi"))
        check_positive(self.levels, "levels", numbers.Integral)
        check_positive(self.k, "k", numbers.Integral)
        check_positive(self.tol, "tol")
        coeff = self._coefficient()

        self.hierarchy_ = multilevel.build_hierarchy(
            mesh, self.levels, self.degree, self.sigma_degree,
            coefficient=coeff, case=self.case)
        if self.method == "multi" and self.levels > 1:
            self.run_ = multilevel.algorithm_multilevel(
                self.hierarchy_, self.k, shift=self.shift, tol=self.tol,
                seed=self.seed)
            self.eigenpairs_ = self.run_.final_pairs
        else:
            self.run_ = None
            self.eigenpairs_ = multilevel.single_level_solve(
                self.hierarchy_, self.levels - 1, self.k,
                shift=self.shift, tol=self.tol, seed=self.seed)
        self.eigenvalues_ = np.array([p.value for p in self.eigenpairs_])
        self.conjugate_violations_ = verify_conjugate_closure(
            self.eigenvalues_, tol=1e-6)
        return self

    def predict(self, X=None):
        """Return the computed eigenvalues (fit must have been called)."""
        if not hasattr(self, "eigenvalues_"):
            raise NotFittedError("call fit before predict")
        return self.eigenvalues_
