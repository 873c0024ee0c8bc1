"""Linear algebra backends.

Sparse LU and the dense non-symmetric eigendecomposition are delegated to
SuperLU and LAPACK through scipy; this module owns the contracts the rest
of the solver relies on: explicit singularity errors, complex solves over
a real factorization, conjugate-pair ordering of dense spectra, and a
modified Gram-Schmidt with reorthogonalization.
"""

import numpy as np
import scipy.linalg
from scipy.sparse import csc_matrix, issparse
from scipy.sparse.linalg import LinearOperator, minres, splu


class SingularMatrixError(np.linalg.LinAlgError):
    """Factorization hit a (near-)singular pivot or a zero row/column."""


# Above this dimension the factorization is computed in single precision
# and each solve is polished by double-precision iterative refinement;
# the LU fill of the mixed saddle systems would not fit in memory in
# double precision at the largest suite sizes.
MIXED_PRECISION_DIM = 30000


class LUFactorization:
    """Sparse LU of a square real matrix, with COLAMD column ordering and
    threshold partial pivoting (SuperLU).

    Large matrices are factored in single precision; solves then run
    double-precision iterative refinement down to ``refine_tol`` (relative
    to the right-hand side), which restores full accuracy at half the
    factorization memory.
    """

    def __init__(self, matrix, refine_tol=1e-12, max_refine=8):
        A = csc_matrix(matrix)
        if A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        scale = max(abs(A).max(), 1e-300) if A.nnz else 0.0
        if A.nnz == 0:
            raise SingularMatrixError("matrix is all zeros")
        self._mixed = A.shape[0] >= MIXED_PRECISION_DIM
        self._A = A.astype(np.float64) if self._mixed else None
        self._refine_tol = refine_tol
        self._max_refine = max_refine
        try:
            self._lu = splu(A.astype(np.float32) if self._mixed
                            else A.astype(np.float64))
        except RuntimeError as exc:
            raise SingularMatrixError("factorization failed: %s" % exc) from exc
        du = np.abs(self._lu.U.diagonal())
        pivot_floor = 1e-6 if self._mixed else 1e-14
        if du.min() < pivot_floor * scale:
            raise SingularMatrixError(
                "numerically singular: pivot %.3e below threshold" % du.min())
        self.shape = A.shape

    def _solve_real(self, b):
        if not self._mixed:
            return self._lu.solve(np.ascontiguousarray(b, dtype=np.float64))
        x = self._lu.solve(np.ascontiguousarray(b, dtype=np.float32)) \
            .astype(np.float64)
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros_like(x)
        for _ in range(self._max_refine):
            r = b - self._A @ x
            if np.linalg.norm(r) <= self._refine_tol * bnorm:
                return x
            x = x + self._lu.solve(r.astype(np.float32)).astype(np.float64)
        r = b - self._A @ x
        if np.linalg.norm(r) > 1e-6 * bnorm:
            raise SingularMatrixError(
                "iterative refinement stalled at relative residual %.2e; "
                "matrix is numerically singular"
                % (np.linalg.norm(r) / bnorm))
        return x

    def solve(self, b):
        """Solve A x = b; complex right-hand sides split into real and
        imaginary solves."""
        b = np.asarray(b)
        if np.iscomplexobj(b):
            return self._solve_real(b.real) + 1j * self._solve_real(b.imag)
        return self._solve_real(b)


def lu_factorize(A):
    return LUFactorization(A)


class PreconditionedMinres:
    """MINRES solver for a symmetric (indefinite) sparse matrix with an
    SPD preconditioner, wrapped in outer iterative refinement.

    The direct factorization of the largest systems does not fit in
    memory, but with an operator (norm-equivalent block) preconditioner
    the iteration count is mesh-independent; each refinement pass drives
    the true residual down several orders of magnitude until
    ``refine_tol`` (relative to the right-hand side) is met.
    """

    def __init__(self, matrix, preconditioner, refine_tol=1e-11,
                 max_refine=8, rtol=1e-10, maxiter=3000):
        A = matrix.tocsr() if issparse(matrix) else csc_matrix(matrix).tocsr()
        if A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        self._A = A
        self._M = preconditioner if isinstance(preconditioner, LinearOperator) \
            else LinearOperator(A.shape, matvec=preconditioner)
        self._refine_tol = refine_tol
        self._max_refine = max_refine
        self._rtol = rtol
        self._maxiter = maxiter
        self.shape = A.shape

    def _solve_real(self, b):
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros_like(b)
        x = np.zeros_like(b)
        r = b
        for _ in range(self._max_refine):
            dx, _ = minres(self._A, r, M=self._M, rtol=self._rtol,
                           maxiter=self._maxiter)
            x = x + dx
            r = b - self._A @ x
            if np.linalg.norm(r) <= self._refine_tol * bnorm:
                return x
        if np.linalg.norm(r) > 1e-6 * bnorm:
            raise SingularMatrixError(
                "preconditioned MINRES stalled at relative residual %.2e"
                % (np.linalg.norm(r) / bnorm))
        return x

    def solve(self, b):
        """Solve A x = b; complex right-hand sides split into real and
        imaginary solves."""
        b = np.asarray(b)
        if np.iscomplexobj(b):
            return self._solve_real(b.real) + 1j * self._solve_real(b.imag)
        return self._solve_real(b)


def _pair_order(vals):
    """Index order that keeps complex conjugate eigenvalues adjacent,
    the negative-imaginary one first."""
    order = sorted(range(len(vals)),
                   key=lambda i: (vals[i].real, abs(vals[i].imag),
                                  vals[i].imag))
    return order


def dense_eig(M):
    """Eigenpairs of a dense real (or complex) square matrix.

    Returns (values, vectors) with vectors in columns; for real input the
    complex eigenvalues come in adjacent conjugate pairs.
    """
    M = np.asarray(M)
    vals, vecs = scipy.linalg.eig(M)
    order = _pair_order(vals)
    return vals[order], vecs[:, order]


def matvec(A, x):
    if issparse(A):
        if np.iscomplexobj(x):
            return A @ x.real + 1j * (A @ x.imag)
        return A @ x
    return np.asarray(A) @ x


def modified_gram_schmidt(V, tol=1e-8, drop_tol=1e-12):
    """Orthonormalize the columns of V by modified Gram-Schmidt with one
    reorthogonalization pass (a second pass triggers when the loss of
    orthogonality exceeds ``tol``).

    Returns (Q, kept_indices); columns that collapse below ``drop_tol``
    relative to their input norm are dropped.
    """
    V = np.array(V, dtype=complex if np.iscomplexobj(V) else float)
    n, m = V.shape
    Q = []
    kept = []
    for j in range(m):
        v = V[:, j].copy()
        norm0 = np.linalg.norm(v)
        if norm0 == 0:
            continue
        for _ in range(2):
            coeffs = np.zeros(len(Q), dtype=v.dtype)
            for i, q in enumerate(Q):
                c = np.vdot(q, v)
                v = v - c * q
                coeffs[i] = c
            if len(Q) == 0 or np.linalg.norm(coeffs) <= tol * max(norm0, 1.0):
                break
        norm = np.linalg.norm(v)
        if norm <= drop_tol * norm0:
            continue
        Q.append(v / norm)
        kept.append(j)
    if not Q:
        return np.zeros((n, 0), dtype=V.dtype), []
    return np.column_stack(Q), kept
