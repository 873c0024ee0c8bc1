"""Multi-level correction scheme over a nested mesh hierarchy.

One eigensolve on the coarsest level; on every finer level the previous
eigenvectors are prolonged and corrected by source solves
(A_i w = lambda B_i x, the discrete action of the solution operator), and
the coarse space enriched with the corrections hosts a small projected
eigenproblem.  The correct/project/solve cycle repeats a few times per
level, each pass restarting from the fresh Ritz pairs, which contracts the
distance to the direct fine-level solve geometrically.  Complex pairs
contribute their real and imaginary parts as two real enrichment columns
so the enriched real space contains both conjugates.
"""

from dataclasses import dataclass, field

import numpy as np

from . import assembly, fespace, mesh as meshmod
from .eigensolver import (EigenPair, residual, shift_invert_arnoldi,
                          solve_dense_pencil, sort_eqslantless,
                          verify_conjugate_closure)
from .linalg import LUFactorization, PreconditionedMinres

# Above this system size the per-level correction solves switch from a
# direct factorization to block-preconditioned MINRES (the A block of the
# pencil is symmetric); the LU fill of the largest levels does not fit in
# memory, while the preconditioned iteration count is mesh-independent.
ITERATIVE_CORRECTION_DIM = 25000

_GRAM_NORM = {"y": "L2", "p": "L2", "sigma": "L2",
              "phi1": "H1semi", "phi2": "H1semi", "u": "H1semi",
              "r": "H1semi"}


def _block_preconditioner(space):
    """SPD block-diagonal preconditioner in the natural norms of the six
    fields: L2 mass for the L2-type components, H1 stiffness for the
    H1-type ones, identity on the border row."""
    from scipy.sparse.linalg import splu

    factors = {}
    blocks = []
    for name in fespace.COMPONENTS:
        sub = space.component(name)
        key = (id(sub), _GRAM_NORM[name])
        if key not in factors:
            factors[key] = splu(
                assembly.assemble_gram(sub, _GRAM_NORM[name]).tocsc())
        blocks.append((space.slice_of(name), factors[key]))

    def apply(b):
        x = np.empty_like(b)
        for sl, lu in blocks:
            x[sl] = lu.solve(b[sl])
        x[-1] = b[-1]
        return x

    return apply


def _correction_solver(h, level):
    """Solver for A_level used by the correction steps: exact LU when the
    factorization is affordable, preconditioned MINRES above that."""
    if h.spaces[level].total_dim + 1 < ITERATIVE_CORRECTION_DIM:
        return LUFactorization(h.A[level])
    return PreconditionedMinres(h.A[level],
                                _block_preconditioner(h.spaces[level]))


@dataclass
class LevelHierarchy:
    meshes: list
    spaces: list
    A: list
    B: list
    prolongations: list   # prolongations[i]: level i -> i+1, bordered
    coefficient: object
    case: str
    degree: int
    sigma_degree: int

    @property
    def num_levels(self):
        return len(self.meshes)

    def composite_prolongation(self, src, dst):
        """Bordered prolongation from level src to level dst (src <= dst)."""
        if src > dst:
            raise ValueError("src level must not exceed dst")
        n = self.spaces[src].total_dim + 1
        P = None
        for i in range(src, dst):
            P = self.prolongations[i] if P is None else self.prolongations[i] @ P
        if P is None:
            from scipy.sparse import eye
            P = eye(n, format="csr")
        return P


def build_hierarchy(initial_mesh, levels, degree, sigma_degree=None,
                    coefficient=None, case="auto"):
    """Assemble meshes, spaces, matrices, and prolongations for ``levels``
    nested levels (``levels`` >= 1; level 0 is the initial mesh)."""
    if levels < 1:
        raise ValueError("need at least one level")
    if coefficient is None:
        raise ValueError("coefficient is required")
    case = assembly.select_case(coefficient, case)

    meshes = [initial_mesh]
    for _ in range(levels - 1):
        meshes.append(meshmod.refine_red(meshes[-1]))
    bad = meshmod.validate(meshes[0])
    if bad:
        raise meshmod.MeshError("invalid initial mesh: " + "; ".join(bad))

    spaces = [fespace.build_product_space(m, degree, sigma_degree)
              for m in meshes]
    A = [assembly.assemble_A(s, coefficient, case) for s in spaces]
    B = [assembly.assemble_B(s) for s in spaces]
    P = [fespace.prolongate(spaces[i], spaces[i + 1], bordered=True)
         for i in range(levels - 1)]
    return LevelHierarchy(meshes, spaces, A, B, P, coefficient, case,
                          degree, spaces[0].sigma_degree)


def single_level_solve(h, level, k, shift=0.5, tol=1e-9, seed=0):
    """First k eigenpairs of the level's pencil, ascending in the
    preorder (direct discretization, no correction)."""
    return shift_invert_arnoldi(h.A[level], h.B[level], shift, k,
                                tol=tol, seed=seed)


def _orthonormal_basis(P, W, drop_tol=1e-10, PTP=None):
    """Orthonormalize the enriched basis [P | W] in coefficient space
    through its Gram matrix; rank-deficient directions are dropped.

    Returns (S, dropped) such that [P | W] S has orthonormal columns.
    ``PTP`` may pass in a precomputed dense P.T @ P.
    """
    n0, nw = P.shape[1], W.shape[1]
    PW = np.asarray(P.T @ W) if nw else np.zeros((n0, 0))
    if PTP is None:
        PTP = np.asarray((P.T @ P).todense())
    G = np.block([[PTP, PW],
                  [PW.T, W.T @ W]])
    w, U = np.linalg.eigh(0.5 * (G + G.T))
    keep = w > drop_tol * max(w.max(), 1.0)
    S = U[:, keep] / np.sqrt(w[keep])
    return S, int((~keep).sum())


def _project_blocks(M, P, W, PTMP=None, MP=None):
    """Dense projection [P | W]^T M [P | W] without densifying P.

    ``PTMP``/``MP`` allow reusing the coarse-block products when only W
    changes between calls.
    """
    if MP is None:
        MP = M @ P
    if PTMP is None:
        PTMP = np.asarray((P.T @ MP).todense())
    MW = M @ W if W.shape[1] else np.zeros((M.shape[0], 0))
    top = np.hstack([PTMP, P.T @ MW])
    bottom = np.hstack([np.asarray((MP.T @ W).T), W.T @ MW])
    return np.vstack([top, bottom])


def _projected_solve(A, B, P, W, S, shift, k, cache=None):
    """Eigenpairs of the pencil restricted to span([P | W] S), lifted back
    to full vectors.  P is sparse (the prolonged coarse space), W dense
    (the correction columns), S the orthonormalizing coordinate map.
    ``cache`` holds the W-independent products across repeated calls."""
    cache = cache if cache is not None else {}
    if "A" not in cache:
        MP = A @ P
        cache["A"] = (np.asarray((P.T @ MP).todense()), MP)
        MP = B @ P
        cache["B"] = (np.asarray((P.T @ MP).todense()), MP)
    Ap = S.T @ _project_blocks(A, P, W, *cache["A"]) @ S
    Bp = S.T @ _project_blocks(B, P, W, *cache["B"]) @ S
    pairs = solve_dense_pencil(Ap, Bp, shift, k)
    n0 = P.shape[1]
    lifted = []
    for p in pairs:
        g = S @ p.vector
        x = (P @ g[:n0]) + (W @ g[n0:] if W.shape[1] else 0.0)
        x = x / np.linalg.norm(x)
        lifted.append(EigenPair(p.value, x))
    for p in lifted:
        p.residual = residual(A, B, p)
    return lifted


@dataclass
class LevelResult:
    level: int
    pairs: list
    enriched_dim: int
    dropped_columns: int


@dataclass
class MultiLevelRun:
    levels: list          # LevelResult per level
    warnings: list = field(default_factory=list)

    @property
    def final_pairs(self):
        return self.levels[-1].pairs


def _correction_columns(prev, B, lu):
    """One source solve per eigenvalue (conjugate pairs share a complex
    solve whose real and imaginary parts become two real columns)."""
    corrections = []
    handled_conjugates = set()
    for j, p in enumerate(prev):
        if j in handled_conjugates:
            continue
        x = np.asarray(p.vector)
        rhs = p.value * (B @ x.real + 1j * (B @ x.imag))
        w = lu.solve(rhs)
        w = w / np.linalg.norm(w)
        if p.value.imag == 0.0:
            corrections.append(w.real)
        else:
            # one solve covers the pair: real/imag parts span both
            corrections.append(w.real)
            corrections.append(w.imag)
            for jj in range(j + 1, len(prev)):
                if abs(prev[jj].value - np.conj(p.value)) \
                        <= 1e-6 * max(1.0, abs(p.value)):
                    handled_conjugates.add(jj)
                    break
    return corrections


def algorithm_multilevel(h, k, shift=0.5, tol=1e-9, seed=0, cycles=3):
    """Run the multi-level correction scheme on the hierarchy; returns a
    MultiLevelRun whose last level holds the finest eigenpairs.

    On each finer level the correct/project/small-eigensolve step is
    repeated ``cycles`` times, each cycle starting its source solves from
    the previous cycle's Ritz pairs.  Every cycle contracts the gap to
    the direct fine-level solve, reusing the level's single factorization
    and its cached coarse-space projections.
    """
    warnings = []
    coarse_pairs = single_level_solve(h, 0, k, shift=shift, tol=tol, seed=seed)
    results = [LevelResult(0, coarse_pairs, h.spaces[0].total_dim + 1, 0)]

    for i in range(1, h.num_levels):
        Pstep = h.prolongations[i - 1]
        lu = _correction_solver(h, i)
        P0i = h.composite_prolongation(0, i)
        PTP = np.asarray((P0i.T @ P0i).todense())
        cache = {}
        current = [
            EigenPair(p.value,
                      Pstep @ p.vector.real + 1j * (Pstep @ p.vector.imag))
            for p in results[-1].pairs]
        pairs, dropped, nw = current, 0, 0
        for _ in range(max(1, cycles)):
            corrections = _correction_columns(current, h.B[i], lu)
            W = np.column_stack(corrections) if corrections else \
                np.zeros((h.spaces[i].total_dim + 1, 0))
            S, dropped = _orthonormal_basis(P0i, W, PTP=PTP)
            pairs = _projected_solve(h.A[i], h.B[i], P0i, W, S, shift, k,
                                     cache=cache)
            current, nw = pairs, W.shape[1]
        if dropped:
            warnings.append("level %d: dropped %d rank-deficient enrichment "
                            "columns" % (i, dropped))
        results.append(LevelResult(i, pairs,
                                   P0i.shape[1] + nw - dropped,
                                   dropped))

    run = MultiLevelRun(results, warnings)
    for res in run.levels:
        bad = verify_conjugate_closure([p.value for p in res.pairs],
                                       tol=10 * max(tol, 1e-12))
        if bad:
            run.warnings.append(
                "level %d: conjugate closure violated for %s"
                % (res.level, bad))
    return run


def convergence_orders(values, reference=None):
    """Orders log2(|(ref - v[i-1]) / (ref - v[i])|) against the finest
    value, one per interior index; None where the formula divides by zero.

    ``values`` may be eigenvalues or error norms; with norms pass
    ``reference=0.0``.
    """
    values = list(values)
    if len(values) < 3:
        raise ValueError("need at least three levels for orders")
    ref = values[-1] if reference is None else reference
    upto = len(values) - 1 if reference is None else len(values)
    orders = []
    for i in range(1, upto):
        num = abs(ref - values[i - 1])
        den = abs(ref - values[i])
        if den == 0.0 or num == 0.0:
            orders.append(None)
        else:
            orders.append(float(np.log2(num / den)))
    return orders


def match_across_levels(per_level_values, tol=1e-12):
    """Greedy nearest matching of eigenvalue lists across levels.

    Returns index lists: result[j][i] is the position in level i matched
    to the j-th finest-level eigenvalue (ordered by the preorder on the
    finest level).  Conjugate partners are matched jointly by value.
    """
    finest = per_level_values[-1]
    order = sort_eqslantless(finest, tol=1e-9)
    tracks = []
    for j in order:
        track = []
        for lev in range(len(per_level_values)):
            vals = per_level_values[lev]
            dist = [abs(v - finest[j]) for v in vals]
            track.append(int(np.argmin(dist)))
        tracks.append(track)
    return tracks


@dataclass
class ConvergenceReport:
    """Per-eigenvalue level sequences, H1 error sequences of the u and phi
    components against the finest level, and the resulting orders."""
    tracks: list          # per track: eigenvalue at each level
    lambda_orders: list
    u_errors: list        # per track: error at levels 0..N-1
    phi_errors: list
    u_orders: list
    phi_orders: list
    is_real_track: list
    monotone_flags: list      # (track, ok) soft upper-bound check
    complex_persistence: list  # (track, im_coarse, im_fine, persists)


def _track_is_real(values, rtol=1e-8):
    return all(abs(v.imag) <= rtol * max(1.0, abs(v)) for v in values)


def build_convergence_report(h, per_level_pairs, k=None):
    """Assemble the convergence report from per-level eigenpair lists
    (either the levels of a multi-level run or repeated direct solves)."""
    N = len(per_level_pairs) - 1
    values = [[p.value for p in pairs] for pairs in per_level_pairs]
    tracks_idx = match_across_levels(values)
    if k is not None:
        tracks_idx = tracks_idx[:k]

    u_space = h.spaces[N].component("u")
    gram = assembly.assemble_gram(u_space, "L2") \
        + assembly.assemble_gram(u_space, "H1semi")
    prolong = [h.composite_prolongation(i, N) for i in range(N)]

    tracks, lam_orders = [], []
    u_errors, phi_errors, u_orders, phi_orders = [], [], [], []
    is_real, monotone, persistence = [], [], []
    space = h.spaces[N]

    def h1(space_slice, d):
        v = d[space_slice]
        return float(np.sqrt(abs(np.vdot(v, gram @ v))))

    for track in tracks_idx:
        lams = [values[i][track[i]] for i in range(N + 1)]
        tracks.append(lams)
        lam_orders.append(convergence_orders(lams)
                          if N + 1 >= 3 else [])

        ref = per_level_pairs[N][track[N]].vector
        eu, ephi = [], []
        for i in range(N):
            cand = prolong[i] @ per_level_pairs[i][track[i]].vector
            cand = align_eigenfunction(space, cand, ref, gram)
            d = (cand - ref)[:space.total_dim]
            eu.append(h1(space.slice_of("u"), d))
            ephi.append(float(np.sqrt(h1(space.slice_of("phi1"), d) ** 2
                                      + h1(space.slice_of("phi2"), d) ** 2)))
        u_errors.append(eu)
        phi_errors.append(ephi)
        u_orders.append(convergence_orders(eu, reference=0.0)
                        if len(eu) >= 3 else [])
        phi_orders.append(convergence_orders(ephi, reference=0.0)
                          if len(ephi) >= 3 else [])

        real = _track_is_real(lams)
        is_real.append(real)
        if real and N >= 2:
            tail = [v.real for v in lams[-3:]]
            scale = max(1.0, abs(tail[0]))
            ok = all(tail[j + 1] <= tail[j] + 1e-9 * scale
                     for j in range(len(tail) - 1))
            monotone.append(ok)
        else:
            monotone.append(None)
        if not real:
            im0, imN = abs(lams[0].imag), abs(lams[-1].imag)
            persistence.append((im0, imN, imN > 0.5 * im0))
        else:
            persistence.append(None)

    return ConvergenceReport(tracks, lam_orders, u_errors, phi_errors,
                             u_orders, phi_orders, is_real, monotone,
                             persistence)


def align_eigenfunction(space, candidate, reference, gram):
    """Rescale ``candidate`` by the complex scalar minimizing the
    gram-norm distance to ``reference``; both are full-space vectors on
    the same level (border row allowed and ignored)."""
    cu = np.asarray(candidate)[:space.total_dim]
    ru = np.asarray(reference)[:space.total_dim]
    u_sl = space.slice_of("u")
    cu_u, ru_u = cu[u_sl], ru[u_sl]
    denom = np.vdot(cu_u, gram @ cu_u)
    if abs(denom) < 1e-300:
        return np.asarray(candidate)
    scale = np.vdot(cu_u, gram @ ru_u) / denom
    return scale * np.asarray(candidate)
