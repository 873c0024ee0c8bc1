"""Assembly of the mixed transmission eigenvalue forms.

The left-hand form couples the six fields (y, phi, u, p, sigma, r); the
right-hand form b is case-independent and touches only (phi, u, p).  Both
are assembled as real sparse matrices over the product-space numbering,
with one extra bordered row/column enforcing the zero-mean constraint on
sigma exactly (the border of B is zero).

Case I (n > 1 everywhere) uses alpha = 1/(n-1); Case II (n < 1) uses
beta = n/(1-n).
"""

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from .fespace import COMPONENTS, _affine_maps
from .quadrature import QuadratureRule

CASE_I = "I"
CASE_II = "II"


class CaseError(ValueError):
    """Coefficient bounds incompatible with the requested case."""


def select_case(coefficient, case="auto"):
    """Validate or auto-select the reformulation case from the declared
    bounds of the coefficient."""
    if coefficient.lower is None or coefficient.upper is None:
        raise CaseError("coefficient bounds n_s, n_b must be declared")
    ns, nb = coefficient.lower, coefficient.upper
    if case == "auto":
        if ns > 1:
            return CASE_I
        if nb < 1:
            return CASE_II
        raise CaseError("bounds straddle 1: declare n_s > 1 or n_b < 1")
    if case == CASE_I and ns <= 1:
        raise CaseError("Case I requires n_s > 1 (declared n_s = %g)" % ns)
    if case == CASE_II and nb >= 1:
        raise CaseError("Case II requires n_b < 1 (declared n_b = %g)" % nb)
    if case not in (CASE_I, CASE_II):
        raise CaseError("unknown case %r" % case)
    return case


# operator tags on a scalar component
VAL, DX, DY = 0, 1, 2

# coefficient tags; resolved to quadrature-point values per case
C_ONE, C_A, C_1A = "1", "a", "1+a"

# Each term: (test component, trial component, test op, trial op, sign, coeff).
# rot phi = dx(phi2) - dy(phi1); div phi = dx(phi1) + dy(phi2).
_SHARED_TERMS = [
    ("y", "p", VAL, VAL, -1.0, C_ONE),        # -(p, z)
    ("phi1", "phi2", DY, DX, -1.0, C_ONE),    # (rot phi, rot psi)
    ("phi2", "phi1", DX, DY, -1.0, C_ONE),
    ("phi1", "phi1", DY, DY, +1.0, C_ONE),
    ("phi2", "phi2", DX, DX, +1.0, C_ONE),
    ("phi2", "sigma", DX, VAL, +1.0, C_ONE),  # (sigma, rot psi)
    ("phi1", "sigma", DY, VAL, -1.0, C_ONE),
    ("phi1", "r", VAL, DX, -1.0, C_ONE),      # -(grad r, psi)
    ("phi2", "r", VAL, DY, -1.0, C_ONE),
    ("u", "r", DX, DX, +1.0, C_ONE),          # (grad r, grad v)
    ("u", "r", DY, DY, +1.0, C_ONE),
    ("p", "y", VAL, VAL, -1.0, C_ONE),        # -(y, q)
    ("sigma", "phi2", VAL, DX, +1.0, C_ONE),  # (rot phi, tau)
    ("sigma", "phi1", VAL, DY, -1.0, C_ONE),
    ("r", "phi1", DX, VAL, -1.0, C_ONE),      # -(phi, grad s)
    ("r", "phi2", DY, VAL, -1.0, C_ONE),
    ("r", "u", DX, DX, +1.0, C_ONE),          # (grad u, grad s)
    ("r", "u", DY, DY, +1.0, C_ONE),
]

# Case I: ((1+alpha) y, z) + (alpha div phi, z) + (alpha y, div psi)
#         + (alpha div phi, div psi)
_CASE_I_TERMS = [
    ("y", "y", VAL, VAL, +1.0, C_1A),
    ("y", "phi1", VAL, DX, +1.0, C_A),
    ("y", "phi2", VAL, DY, +1.0, C_A),
    ("phi1", "y", DX, VAL, +1.0, C_A),
    ("phi2", "y", DY, VAL, +1.0, C_A),
    ("phi1", "phi1", DX, DX, +1.0, C_A),
    ("phi1", "phi2", DX, DY, +1.0, C_A),
    ("phi2", "phi1", DY, DX, +1.0, C_A),
    ("phi2", "phi2", DY, DY, +1.0, C_A),
]

# Case II: (beta y, z) + (beta div phi, z) + (beta y, div psi)
#          + ((1+beta) div phi, div psi)
_CASE_II_TERMS = [
    ("y", "y", VAL, VAL, +1.0, C_A),
    ("y", "phi1", VAL, DX, +1.0, C_A),
    ("y", "phi2", VAL, DY, +1.0, C_A),
    ("phi1", "y", DX, VAL, +1.0, C_A),
    ("phi2", "y", DY, VAL, +1.0, C_A),
    ("phi1", "phi1", DX, DX, +1.0, C_1A),
    ("phi1", "phi2", DX, DY, +1.0, C_1A),
    ("phi2", "phi1", DY, DX, +1.0, C_1A),
    ("phi2", "phi2", DY, DY, +1.0, C_1A),
]

_B_TERMS = [
    ("u", "phi1", DX, VAL, +1.0, C_ONE),  # (phi, grad v)
    ("u", "phi2", DY, VAL, +1.0, C_ONE),
    ("u", "p", VAL, VAL, -1.0, C_ONE),    # -(p, v)
    ("p", "u", VAL, VAL, -1.0, C_ONE),    # -(u, q)
]


class _ElementTables:
    """Per-space basis values/gradients at the quadrature points, pushed
    to the physical elements."""

    def __init__(self, mesh, quad):
        self.mesh = mesh
        self.quad = quad
        _, self.invJT, self.detJ = _affine_maps(mesh)
        px = mesh.vertices[mesh.triangles[:, 0]]
        d1 = mesh.vertices[mesh.triangles[:, 1]] - px
        d2 = mesh.vertices[mesh.triangles[:, 2]] - px
        q = quad.points
        # physical quadrature points, (nt, nq, 2)
        self.xq = (px[:, None, :] + q[None, :, 0, None] * d1[:, None, :]
                   + q[None, :, 1, None] * d2[:, None, :])
        self.wq = quad.weights[None, :] * self.detJ[:, None]
        self._cache = {}

    def tables(self, space):
        key = space.degree
        if key not in self._cache:
            phi = space.ref.eval(self.quad.points)          # (nq, nb)
            gref = space.ref.grad(self.quad.points)          # (nq, nb, 2)
            # physical gradient: J^{-T} grad_ref
            gphys = np.einsum("tij,qbj->tqbi", self.invJT, gref)
            self._cache[key] = (phi, gphys)
        return self._cache[key]

    def op_values(self, space, op):
        phi, gphys = self.tables(space)
        nt = self.mesh.num_triangles
        if op == VAL:
            return np.broadcast_to(phi[None, :, :], (nt,) + phi.shape)
        return gphys[:, :, :, op - 1]


def _coeff_values(tag, case, n_values):
    if tag == C_ONE:
        return np.ones_like(n_values)
    if case == CASE_I:
        alpha = 1.0 / (n_values - 1.0)
    else:
        alpha = n_values / (1.0 - n_values)
    return alpha if tag == C_A else 1.0 + alpha


def _assemble_terms(space, terms, tables, coeff_cache, shape_extra=0):
    rows, cols, vals = [], [], []
    for test, trial, top, sop, sign, ctag in terms:
        ts = space.component(test)
        rs = space.component(trial)
        tv = tables.op_values(ts, top)   # (nt, nq, nb_test)
        sv = tables.op_values(rs, sop)   # (nt, nq, nb_trial)
        w = tables.wq * coeff_cache[ctag]
        local = sign * np.einsum("tq,tqa,tqb->tab", w, tv, sv)
        tdofs = space.slice_of(test).start + ts.cell_dofs
        sdofs = space.slice_of(trial).start + rs.cell_dofs
        tmask = ts.cell_dofs >= 0
        smask = rs.cell_dofs >= 0
        keep = tmask[:, :, None] & smask[:, None, :]
        r = np.broadcast_to(tdofs[:, :, None], local.shape)[keep]
        c = np.broadcast_to(sdofs[:, None, :], local.shape)[keep]
        rows.append(r)
        cols.append(c)
        vals.append(local[keep])
    n = space.total_dim + shape_extra
    M = coo_matrix((np.concatenate(vals),
                    (np.concatenate(rows), np.concatenate(cols))),
                   shape=(n, n))
    return M


def _sigma_means(space, tables):
    """Integral of each sigma basis function over the domain."""
    ss = space.component("sigma")
    phi = tables.op_values(ss, VAL)
    local = np.einsum("tq,tqb->tb", tables.wq, phi)
    means = np.zeros(ss.dim)
    np.add.at(means, ss.cell_dofs.ravel(), local.ravel())
    return means


def assemble_A(space, coefficient, case="auto", quad_degree=None):
    """Left-hand matrix of the mixed eigenproblem, bordered for the
    zero-mean constraint; shape (total_dim + 1, total_dim + 1)."""
    case = select_case(coefficient, case)
    if quad_degree is None:
        quad_degree = 2 * space.degree + 2
    tables = _ElementTables(space.mesh, QuadratureRule(quad_degree))
    nvals = coefficient(tables.xq[..., 0], tables.xq[..., 1])
    coeff_cache = {tag: _coeff_values(tag, case, nvals)
                   for tag in (C_ONE, C_A, C_1A)}
    terms = _SHARED_TERMS + (_CASE_I_TERMS if case == CASE_I else _CASE_II_TERMS)
    M = _assemble_terms(space, terms, tables, coeff_cache, shape_extra=1).tolil()

    means = _sigma_means(space, tables)
    s = space.slice_of("sigma")
    border = space.total_dim
    M[border, s] = means
    M[s, border] = means[:, None]
    return csr_matrix(M)


def assemble_B(space, quad_degree=None):
    """Right-hand matrix b; same bordered shape as A with a zero border."""
    if quad_degree is None:
        quad_degree = 2 * space.degree + 2
    tables = _ElementTables(space.mesh, QuadratureRule(quad_degree))
    ones = np.ones_like(tables.wq)
    M = _assemble_terms(space, _B_TERMS, tables, {C_ONE: ones}, shape_extra=1)
    return csr_matrix(M)


def assemble_gram(space, norm="L2", quad_degree=None):
    """Mass ('L2') or stiffness ('H1semi') matrix of one scalar space."""
    if norm not in ("L2", "H1semi"):
        raise ValueError("norm must be 'L2' or 'H1semi'")
    if quad_degree is None:
        quad_degree = 2 * space.degree + 2
    tables = _ElementTables(space.mesh, QuadratureRule(quad_degree))
    if norm == "L2":
        v = tables.op_values(space, VAL)
        local = np.einsum("tq,tqa,tqb->tab", tables.wq, v, v)
    else:
        gx = tables.op_values(space, DX)
        gy = tables.op_values(space, DY)
        local = (np.einsum("tq,tqa,tqb->tab", tables.wq, gx, gx)
                 + np.einsum("tq,tqa,tqb->tab", tables.wq, gy, gy))
    mask = space.cell_dofs >= 0
    keep = mask[:, :, None] & mask[:, None, :]
    rows = np.broadcast_to(space.cell_dofs[:, :, None], local.shape)[keep]
    cols = np.broadcast_to(space.cell_dofs[:, None, :], local.shape)[keep]
    return csr_matrix(coo_matrix((local[keep], (rows, cols)),
                                 shape=(space.dim, space.dim)))


def assemble_vector_block(space, test, trial, test_op, trial_op,
                          quad_degree=None):
    """One scalar coupling block (component-local numbering), used by the
    structural checks and the inf-sup measurement."""
    if quad_degree is None:
        quad_degree = 2 * space.degree + 2
    tables = _ElementTables(space.mesh, QuadratureRule(quad_degree))
    ts = space.component(test)
    rs = space.component(trial)
    tv = tables.op_values(ts, test_op)
    sv = tables.op_values(rs, trial_op)
    local = np.einsum("tq,tqa,tqb->tab", tables.wq, tv, sv)
    tmask = ts.cell_dofs >= 0
    smask = rs.cell_dofs >= 0
    keep = tmask[:, :, None] & smask[:, None, :]
    rows = np.broadcast_to(ts.cell_dofs[:, :, None], local.shape)[keep]
    cols = np.broadcast_to(rs.cell_dofs[:, None, :], local.shape)[keep]
    return csr_matrix(coo_matrix((local[keep], (rows, cols)),
                                 shape=(ts.dim, rs.dim)))


def component_norms(space, vector):
    """Per-component L2 norms and H1 seminorms of a field vector.

    Returns {component: (l2, h1semi)}; accepts real or complex
    coefficients of length total_dim (border excluded).
    """
    values = np.asarray(vector)
    if values.shape[0] == space.total_dim + 1:
        values = values[:-1]
    out = {}
    grams = {}
    for name, sub in zip(COMPONENTS, space.spaces):
        key = (sub.degree, sub.constraint)
        if key not in grams:
            grams[key] = (assemble_gram(sub, "L2"), assemble_gram(sub, "H1semi"))
        Ml2, Mh1 = grams[key]
        v = space.extract(values, name)
        l2 = float(np.sqrt(abs(np.vdot(v, Ml2 @ v))))
        h1 = float(np.sqrt(abs(np.vdot(v, Mh1 @ v))))
        out[name] = (l2, h1)
    return out


def write_coo(matrix, path):
    """Export a sparse matrix as 'row col value' text, 1-based."""
    M = coo_matrix(matrix)
    with open(path, "w") as f:
        f.write("# %d %d %d\n" % (M.shape[0], M.shape[1], M.nnz))
        for r, c, v in zip(M.row, M.col, M.data):
            f.write("%d %d %.17g\n" % (r + 1, c + 1, v))


def rot_coupling_infsup(space):
    """Numerical inf-sup constant of the rot coupling.

    Smallest nonzero generalized singular value of the (rot psi, tau)
    block scaled by the vector H1-seminorm Gram of phi and the L2 Gram of
    sigma; the constant-sigma null direction is excluded.
    """
    from scipy.linalg import eigh
    from scipy.sparse.linalg import splu

    phi = space.component("phi1")
    sigma = space.component("sigma")
    # R[tau, (phi1, phi2)] = (rot phi, tau)
    R1 = -assemble_vector_block(space, "sigma", "phi1", VAL, DY)
    R2 = assemble_vector_block(space, "sigma", "phi2", VAL, DX)
    K = assemble_gram(phi, "H1semi")
    Msig = assemble_gram(sigma, "L2").toarray()

    lu = splu(K.tocsc())
    S = R1 @ lu.solve(R1.T.toarray()) + R2 @ lu.solve(R2.T.toarray())
    vals = eigh(S, Msig, eigvals_only=True)
    cutoff = 1e-10 * max(vals.max(), 1.0)
    nonzero = vals[vals > cutoff]
    return float(np.sqrt(nonzero.min()))
