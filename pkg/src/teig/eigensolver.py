"""Generalized non-self-adjoint eigensolver A x = lambda B x.

Eigenvalues are ranked by a total preorder on the complex numbers:
modulus first, ties (both nonzero) broken by *descending* argument in
[0, 2pi), all zeros mutually equal.  The pencil has a singular B, so the
solve goes through shift-invert: Arnoldi (ARPACK) on the real operator
(A - shift B)^{-1} B for large problems, or the dense spectrum of the
same operator for small ones.  Ritz values near zero correspond to the
infinite eigenvalues introduced by the singular rows of B and are
discarded.
"""

from dataclasses import dataclass, field
from functools import cmp_to_key

import numpy as np
from scipy.sparse import issparse
from scipy.sparse.linalg import LinearOperator, eigs, ArpackNoConvergence

from .linalg import LUFactorization, SingularMatrixError, dense_eig

# Ritz values below this magnitude map to |lambda| beyond any physical
# eigenvalue of interest; they come from the zero rows of B.
NU_CUTOFF = 1e-10
LAMBDA_CUTOFF = 1e6


class ShiftError(ValueError):
    """A - shift*B is singular; perturb the shift and retry."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial or []


@dataclass
class EigenPair:
    """One accepted eigenpair: lambda = k^2, unit-norm complex vector, and
    the residual ||A x - lambda B x||_2 recorded at acceptance."""
    value: complex
    vector: np.ndarray
    residual: float = field(default=np.nan)

    def conjugate(self):
        return EigenPair(np.conj(self.value), np.conj(self.vector),
                         self.residual)


def compare_eqslantless(c1, c2, tol=0.0):
    """Three-way comparison in the modulus-then-descending-argument
    preorder: -1 if c1 precedes c2, 1 if c2 precedes c1, 0 if equal.

    ``tol`` treats moduli within tol*max(1, rho) as equal, which keeps
    conjugate pairs adjacent under floating-point noise.
    """
    c1, c2 = complex(c1), complex(c2)
    r1, r2 = abs(c1), abs(c2)
    if r1 == 0.0 and r2 == 0.0:
        return 0
    close = abs(r1 - r2) <= tol * max(1.0, r1, r2)
    if not close:
        if r1 < r2:
            return -1
        if r2 < r1:
            return 1
    if r1 == 0.0 or r2 == 0.0:
        # moduli differ but only one is zero: smaller modulus first
        return -1 if r1 < r2 else 1
    t1 = np.angle(c1) % (2.0 * np.pi)
    t2 = np.angle(c2) % (2.0 * np.pi)
    if t1 > t2:
        return -1
    if t1 < t2:
        return 1
    return 0


def sort_eqslantless(values, tol=1e-12):
    """Indices sorting ``values`` ascending in the preorder."""
    idx = list(range(len(values)))
    idx.sort(key=cmp_to_key(
        lambda i, j: compare_eqslantless(values[i], values[j], tol=tol)))
    return idx


def residual(A, B, pair):
    """||A x - lambda B x||_2 / ||x||_2 via real matvecs."""
    x = pair.vector
    lam = pair.value
    r = _complex_matvec(A, x) - lam * _complex_matvec(B, x)
    return float(np.linalg.norm(r) / np.linalg.norm(x))


def _complex_matvec(M, x):
    if np.iscomplexobj(x):
        return M @ x.real + 1j * (M @ x.imag)
    return M @ x


def _finalize(nus, vecs, A, B, shift, k, tol=None):
    """Map Ritz values of (A - shift B)^{-1} B back to the pencil, filter
    spurious modes, enforce conjugate closure, sort, and cut at k (keeping
    conjugate partners together even if that yields k+1)."""
    pairs = []
    for i in range(len(nus)):
        nu = nus[i]
        if abs(nu) < NU_CUTOFF:
            continue
        lam = shift + 1.0 / nu
        if abs(lam) > LAMBDA_CUTOFF:
            continue
        x = vecs[:, i]
        if abs(lam.imag) < 1e-12 * max(1.0, abs(lam.real)) \
                and np.max(np.abs(x.imag)) < 1e-10 * np.max(np.abs(x.real) + 1e-300):
            lam = complex(lam.real, 0.0)
            x = x.real.astype(complex)
        x = x / np.linalg.norm(x)
        pairs.append(EigenPair(lam, x))

    # conjugate closure: supply a missing partner explicitly
    done = []
    used = [False] * len(pairs)
    for i, p in enumerate(pairs):
        if used[i]:
            continue
        used[i] = True
        done.append(p)
        if p.value.imag != 0.0:
            partner = None
            for j in range(i + 1, len(pairs)):
                if not used[j] and abs(pairs[j].value - np.conj(p.value)) \
                        <= 1e-8 * max(1.0, abs(p.value)):
                    partner = j
                    break
            if partner is not None:
                used[partner] = True
                done.append(pairs[partner])
            else:
                done.append(p.conjugate())

    order = sort_eqslantless([p.value for p in done])
    done = [done[i] for i in order]

    kept = []
    i = 0
    while i < len(done) and len(kept) < k:
        p = done[i]
        kept.append(p)
        if p.value.imag != 0.0 and i + 1 < len(done) \
                and abs(done[i + 1].value - np.conj(p.value)) \
                <= 1e-6 * max(1.0, abs(p.value)):
            kept.append(done[i + 1])
            i += 1
        i += 1

    for p in kept:
        p.residual = residual(A, B, p)
    if tol is not None:
        bad = [p for p in kept if p.residual > tol]
        if bad:
            raise ConvergenceError(
                "%d eigenpairs exceed the residual tolerance %.1e"
                % (len(bad), tol), partial=kept)
    return kept


def solve_dense_pencil(A, B, shift, k, tol=None):
    """Whole-spectrum shift-invert solve; the reference route for small
    problems and the projected problems of the multi-level scheme."""
    Ad = A.toarray() if issparse(A) else np.asarray(A, dtype=float)
    Bd = B.toarray() if issparse(B) else np.asarray(B, dtype=float)
    try:
        C = np.linalg.solve(Ad - shift * Bd, Bd)
    except np.linalg.LinAlgError as exc:
        raise ShiftError("A - shift*B is singular at shift %g" % shift) from exc
    nus, vecs = dense_eig(C)
    return _finalize(nus, vecs, A, B, shift, k, tol=tol)


def shift_invert_arnoldi(A, B, shift, k, tol=1e-9, max_restart=300, seed=0,
                         ncv=None):
    """First k eigenpairs of A x = lambda B x nearest the shift, ascending
    in the preorder; complex pairs are returned jointly.

    A singular shifted matrix raises ShiftError; if ARPACK stops before
    convergence the converged subset is returned flagged inside a
    ConvergenceError (``exc.partial``).
    """
    n = A.shape[0]
    want = k + 4  # headroom for spurious Ritz values and split pairs
    if ncv is None:
        ncv = max(2 * want + 10, 30)
    if want >= n - 1 or ncv >= n:
        return solve_dense_pencil(A, B, shift, k, tol=tol)

    try:
        lu = LUFactorization(A - shift * B)
    except SingularMatrixError as exc:
        raise ShiftError(
            "A - shift*B is singular at shift %g; perturb the shift" % shift
        ) from exc

    op = LinearOperator((n, n), matvec=lambda x: lu.solve(B @ x), dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        nus, vecs = eigs(op, k=want, which="LM", v0=v0, ncv=ncv,
                         maxiter=max_restart * ncv, tol=0)
    except ArpackNoConvergence as exc:
        if len(exc.eigenvalues) == 0:
            raise ConvergenceError(
                "Arnoldi did not converge within %d restarts" % max_restart)
        kept = _finalize(exc.eigenvalues, exc.eigenvectors, A, B, shift,
                         min(k, len(exc.eigenvalues)))
        raise ConvergenceError(
            "Arnoldi converged only %d of %d requested Ritz values"
            % (len(exc.eigenvalues), want), partial=kept)
    return _finalize(nus, vecs, A, B, shift, k, tol=tol)


def verify_conjugate_closure(pairs, tol=1e-6):
    """Check that every non-real eigenvalue has a partner within tol of
    its conjugate; returns the list of violations (empty = closed)."""
    values = [complex(p.value) if isinstance(p, EigenPair) else complex(p)
              for p in pairs]
    violations = []
    for i, v in enumerate(values):
        if v.imag == 0.0:
            continue
        target = np.conj(v)
        ok = any(j != i and abs(values[j] - target) <= tol * max(1.0, abs(v))
                 for j in range(len(values)))
        if not ok:
            violations.append(v)
    return violations
