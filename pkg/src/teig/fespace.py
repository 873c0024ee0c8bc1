"""Continuous Lagrange spaces of degree 1-3 on triangles.

A scalar space owns its cell-to-global DOF table and the node coordinates.
Global numbering is vertices first, then edge nodes (by global edge index,
oriented from the lower to the higher vertex index), then cell-interior
nodes; with the ``zero_boundary`` constraint, boundary nodes are removed
from the numbering altogether.  ``zero_mean`` removes nothing: that
constraint is enforced weakly by a bordered row/column at assembly.

The six-field product space keeps its components in the fixed order
[y | phi1 | phi2 | u | p | sigma | r].
"""

import numpy as np
from scipy.sparse import csr_matrix

NONE = "none"
ZERO_BOUNDARY = "zero_boundary"
ZERO_MEAN = "zero_mean"


def _lattice(degree):
    """Barycentric lattice nodes (l0, l1, l2) of the degree-m triangle,
    with a classification tag for each node."""
    nodes = []
    for i in range(degree + 1):          # weight on vertex 1
        for j in range(degree + 1 - i):  # weight on vertex 2
            k = degree - i - j           # weight on vertex 0
            nodes.append((k / degree, i / degree, j / degree))
    tagged = []
    for l0, l1, l2 in nodes:
        zeros = [abs(v) < 1e-12 for v in (l0, l1, l2)]
        if sum(zeros) == 2:
            tagged.append(("vertex", (l0, l1, l2)))
        elif sum(zeros) == 1:
            tagged.append(("edge", (l0, l1, l2)))
        else:
            tagged.append(("interior", (l0, l1, l2)))
    return tagged


class ReferenceElement:
    """Lagrange basis of one degree on the reference triangle
    (0,0)-(1,0)-(0,1), represented in the monomial basis."""

    def __init__(self, degree):
        if degree not in (1, 2, 3):
            raise ValueError("unsupported degree %d" % degree)
        self.degree = degree
        self.nodes = _lattice(degree)
        # reference coordinates: (xi, eta) = (l1, l2)
        self.node_coords = np.array([(l1, l2) for _, (l0, l1, l2) in self.nodes])
        self.monomials = [(a, b)
                          for total in range(degree + 1)
                          for a in range(total + 1)
                          for b in [total - a]]
        V = np.array([[x ** a * y ** b for a, b in self.monomials]
                      for x, y in self.node_coords])
        self.coeffs = np.linalg.inv(V)  # column i = basis function i

    @property
    def num_nodes(self):
        return len(self.nodes)

    def eval(self, points):
        """Basis values at (np, 2) reference points -> (np, nb)."""
        pts = np.atleast_2d(points)
        M = np.array([pts[:, 0] ** a * pts[:, 1] ** b
                      for a, b in self.monomials]).T
        return M @ self.coeffs

    def grad(self, points):
        """Reference gradients at (np, 2) points -> (np, nb, 2)."""
        pts = np.atleast_2d(points)
        x, y = pts[:, 0], pts[:, 1]
        dx = np.array([a * x ** max(a - 1, 0) * y ** b if a > 0 else 0 * x
                       for a, b in self.monomials]).T
        dy = np.array([b * x ** a * y ** max(b - 1, 0) if b > 0 else 0 * x
                       for a, b in self.monomials]).T
        return np.stack([dx @ self.coeffs, dy @ self.coeffs], axis=-1)


class LagrangeSpace:
    """Scalar continuous Lagrange space on a mesh.

    Attributes: ``dim`` (global DOF count), ``cell_dofs`` (nt x nb table,
    -1 marks an eliminated boundary DOF), ``dof_coords``.
    """

    def __init__(self, mesh, degree, constraint=NONE):
        if constraint not in (NONE, ZERO_BOUNDARY, ZERO_MEAN):
            raise ValueError("unknown constraint %r" % constraint)
        self.mesh = mesh
        self.degree = degree
        self.constraint = constraint
        self.ref = ReferenceElement(degree)
        self._build()

    def _build(self):
        mesh, degree = self.mesh, self.degree
        edges = mesh.edges()
        edge_index = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
        boundary_edges = {tuple(sorted(map(int, e))) for e in mesh.boundary_edges}
        boundary_vertices = {v for e in boundary_edges for v in e}

        nv = mesh.num_vertices
        ne = edges.shape[0]
        per_edge = degree - 1
        per_cell = self.ref.num_nodes - 3 - 3 * per_edge

        # node identity keys, before constraint elimination
        def node_key(tri, tag, bary):
            l0, l1, l2 = bary
            verts = [int(v) for v in tri]
            if tag == "vertex":
                local = int(np.argmax([l0, l1, l2]))
                return ("v", verts[local])
            if tag == "edge":
                zero = int(np.argmin([l0, l1, l2]))
                a_local, b_local = [i for i in range(3) if i != zero]
                a, b = verts[a_local], verts[b_local]
                # fraction along the edge measured from the smaller index
                t = [l0, l1, l2][b_local]
                if a > b:
                    a, b = b, a
                    t = 1.0 - t
                return ("e", edge_index[(a, b)], int(round(t * degree)))
            return None  # interior, handled per cell

        keys = {}
        nb_local = self.ref.num_nodes
        raw_cell = np.empty((mesh.num_triangles, nb_local), dtype=object)
        for t, tri in enumerate(mesh.triangles):
            interior_seen = 0
            for ln, (tag, bary) in enumerate(self.ref.nodes):
                key = node_key(tri, tag, bary)
                if key is None:
                    key = ("c", t, interior_seen)
                    interior_seen += 1
                raw_cell[t, ln] = key

        # global numbering: vertices, then edge nodes, then interiors
        def order(key):
            if key[0] == "v":
                return (0, key[1], 0)
            if key[0] == "e":
                return (1, key[1], key[2])
            return (2, key[1], key[2])

        unique_keys = sorted({k for row in raw_cell for k in row}, key=order)

        on_boundary = set()
        if self.constraint == ZERO_BOUNDARY:
            for key in unique_keys:
                if key[0] == "v" and key[1] in boundary_vertices:
                    on_boundary.add(key)
                elif key[0] == "e":
                    a, b = edges[key[1]]
                    if (int(a), int(b)) in boundary_edges:
                        on_boundary.add(key)

        numbering = {}
        coords = []
        for key in unique_keys:
            if key in on_boundary:
                numbering[key] = -1
                continue
            numbering[key] = len(coords)
            coords.append(self._key_coords(key, edges))
        self.dim = len(coords)
        self.dof_coords = np.array(coords).reshape(-1, 2)
        self.cell_dofs = np.array(
            [[numbering[raw_cell[t, ln]] for ln in range(nb_local)]
             for t in range(mesh.num_triangles)], dtype=int)
        self._full_count = nv + per_edge * ne + per_cell * mesh.num_triangles

    def _key_coords(self, key, edges):
        mesh = self.mesh
        if key[0] == "v":
            return mesh.vertices[key[1]]
        if key[0] == "e":
            a, b = edges[key[1]]
            t = key[2] / self.degree
            return (1 - t) * mesh.vertices[a] + t * mesh.vertices[b]
        # single interior node (degree 3): the centroid
        tri = mesh.triangles[key[1]]
        return mesh.vertices[tri].mean(axis=0)

    def boundary_dof_count(self):
        return self._full_count - self.dim


def _affine_maps(mesh):
    """Per-triangle affine data: inverse-transpose Jacobians and |det J|."""
    p = mesh.vertices[mesh.triangles]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    inv = np.empty_like(J)
    inv[:, 0, 0] = J[:, 1, 1]
    inv[:, 0, 1] = -J[:, 0, 1]
    inv[:, 1, 0] = -J[:, 1, 0]
    inv[:, 1, 1] = J[:, 0, 0]
    inv /= det[:, None, None]
    invJT = np.swapaxes(inv, 1, 2)
    return J, invJT, np.abs(det)


COMPONENTS = ("y", "phi1", "phi2", "u", "p", "sigma", "r")


class ProductSpace:
    """The six-field space [y | phi1 | phi2 | u | p | sigma | r].

    Degrees: y and p are m-1 (no constraint), phi and u and r are m with
    zero boundary, sigma is ``sigma_degree`` with the zero-mean
    constraint.  ``total_dim`` excludes the single bordered
    multiplier row appended at assembly for the zero-mean constraint.
    """

    def __init__(self, mesh, degree, sigma_degree=None):
        if degree not in (2, 3):
            raise ValueError("product space needs degree m in {2, 3}")
        if sigma_degree is None:
            sigma_degree = degree - 1
        if sigma_degree not in (degree - 1, degree):
            raise ValueError("sigma_degree must be m-1 or m")
        self.mesh = mesh
        self.degree = degree
        self.sigma_degree = sigma_degree

        sp_y = LagrangeSpace(mesh, degree - 1, NONE)
        sp_phi = LagrangeSpace(mesh, degree, ZERO_BOUNDARY)
        # p must live in the same space as the test functions z that
        # determine it, otherwise the pencil (A, B) is singular for every
        # shift: p directions untestable by z and v would sit in a common
        # null space of A and B
        sp_p = sp_y
        sp_sigma = LagrangeSpace(mesh, sigma_degree, ZERO_MEAN)
        self.spaces = (sp_y, sp_phi, sp_phi, sp_phi, sp_p, sp_sigma, sp_phi)

        dims = [s.dim for s in self.spaces]
        self.offsets = np.concatenate([[0], np.cumsum(dims)])
        self.total_dim = int(self.offsets[-1])

    @property
    def component_dims(self):
        return tuple(s.dim for s in self.spaces)

    def component(self, name):
        return self.spaces[COMPONENTS.index(name)]

    def slice_of(self, name):
        i = COMPONENTS.index(name)
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def extract(self, vector, name):
        return np.asarray(vector)[..., self.slice_of(name)]


class FieldVector:
    """Coefficient vector over a ProductSpace (real or complex)."""

    def __init__(self, space, values):
        values = np.asarray(values)
        if values.shape != (space.total_dim,):
            raise ValueError("coefficient length %d does not match space dim %d"
                             % (values.shape[0], space.total_dim))
        self.space = space
        self.values = values

    def component(self, name):
        return self.space.extract(self.values, name)


def build_space(mesh, degree, constraint=NONE):
    return LagrangeSpace(mesh, degree, constraint)


def build_product_space(mesh, degree, sigma_degree=None):
    return ProductSpace(mesh, degree, sigma_degree)


def evaluate(space, coefficients, point):
    """Value of the FE function at one physical point (brute-force
    triangle search; points on shared edges pick either triangle)."""
    mesh = space.mesh
    point = np.asarray(point, dtype=float)
    p0 = mesh.vertices[mesh.triangles[:, 0]]
    J, invJT, _ = _affine_maps(mesh)
    invJ = np.swapaxes(invJT, 1, 2)
    local = np.einsum("tij,tj->ti", invJ, point[None, :] - p0)
    inside = ((local[:, 0] >= -1e-12) & (local[:, 1] >= -1e-12)
              & (local.sum(axis=1) <= 1 + 1e-12))
    hits = np.nonzero(inside)[0]
    if hits.size == 0:
        raise ValueError("point %s is outside the mesh" % (point,))
    t = int(hits[0])
    phi = space.ref.eval(local[t][None, :])[0]
    dofs = space.cell_dofs[t]
    coeffs = np.asarray(coefficients)
    value = 0.0
    for ln, dof in enumerate(dofs):
        if dof >= 0:
            value += coeffs[dof] * phi[ln]
    return value


def prolongation_scalar(coarse, fine):
    """Prolongation matrix of a scalar space pair on nested meshes.

    Columns are coarse DOFs, rows fine DOFs; P c represents the identical
    piecewise polynomial on the fine mesh.
    """
    if fine.mesh.parent is None:
        raise ValueError("fine mesh does not record a refinement parent")
    if fine.degree != coarse.degree or fine.constraint != coarse.constraint:
        raise ValueError("mismatched spaces in prolongation")
    if len(fine.mesh.parent.triangle_parent) != fine.mesh.num_triangles \
            or fine.mesh.num_triangles != 4 * coarse.mesh.num_triangles:
        raise ValueError("fine mesh is not a red refinement of the coarse mesh")

    ref = coarse.ref
    cm = coarse.mesh
    p0 = cm.vertices[cm.triangles[:, 0]]
    _, invJT, _ = _affine_maps(cm)
    invJ = np.swapaxes(invJT, 1, 2)

    rows, cols, vals = [], [], []
    seen = np.zeros(fine.dim, dtype=bool)
    for tf, tri in enumerate(fine.mesh.triangles):
        tc, _ = fine.mesh.parent.triangle_parent[tf]
        fine_dofs = fine.cell_dofs[tf]
        todo = [(ln, d) for ln, d in enumerate(fine_dofs)
                if d >= 0 and not seen[d]]
        if not todo:
            continue
        coarse_dofs = coarse.cell_dofs[tc]
        for ln, dof in todo:
            seen[dof] = True
            x = fine.dof_coords[dof]
            local = invJ[tc] @ (x - p0[tc])
            phi = ref.eval(local[None, :])[0]
            for lc, cdof in enumerate(coarse_dofs):
                if cdof >= 0 and abs(phi[lc]) > 1e-13:
                    rows.append(dof)
                    cols.append(cdof)
                    vals.append(phi[lc])
    return csr_matrix((vals, (rows, cols)), shape=(fine.dim, coarse.dim))


def prolongate(coarse, fine, bordered=True):
    """Blockwise prolongation between ProductSpaces on nested meshes.

    With ``bordered=True`` (the default used by the solver stack) an extra
    unit row/column carries the zero-mean multiplier along.
    """
    if coarse.degree != fine.degree or coarse.sigma_degree != fine.sigma_degree:
        raise ValueError("mismatched product spaces in prolongation")
    from scipy.sparse import block_diag, eye

    blocks = []
    cache = {}
    for name, cs, fs in zip(COMPONENTS, coarse.spaces, fine.spaces):
        key = (cs.degree, cs.constraint)
        if key not in cache:
            cache[key] = prolongation_scalar(cs, fs)
        blocks.append(cache[key])
    if bordered:
        blocks.append(eye(1, format="csr"))
    return block_diag(blocks, format="csr")
