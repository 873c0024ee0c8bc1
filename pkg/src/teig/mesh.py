"""Conforming triangular meshes of polygonal domains.

Meshes are immutable after construction.  Uniform red refinement (each
triangle split into four similar children through the edge midpoints)
halves the mesh size per level and keeps the Lagrange spaces nested, which
is what the multi-level scheme relies on.
"""

import numpy as np


class MeshError(Exception):
    """Invalid mesh input (bad geometry, malformed file, ...)."""


class MeshFormatError(MeshError):
    """Malformed mesh file; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class ParentMap:
    """Links a refined mesh back to its parent.

    ``triangle_parent[t]`` is ``(parent_triangle, slot)`` with slot in
    0..3 (slots 0-2 sit at the parent corners, slot 3 is the central
    child).  ``vertex_parent[v]`` is ``('v', i)`` for an inherited coarse
    vertex or ``('e', i, j)`` for the midpoint of coarse edge ``(i, j)``.
    """

    def __init__(self, triangle_parent, vertex_parent):
        self.triangle_parent = triangle_parent
        self.vertex_parent = vertex_parent


class Mesh:
    """Conforming triangulation with boundary tags.

    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    boundary_edges : (nb, 2) int array
    """

    def __init__(self, vertices, triangles, boundary_edges, level=0, parent=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=int).reshape(-1, 3)
        self.boundary_edges = np.asarray(boundary_edges, dtype=int).reshape(-1, 2)
        self.level = level
        self.parent = parent

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def edges(self):
        """All undirected edges as a sorted (ne, 2) int array, ascending pairs."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0)

    def signed_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def __repr__(self):
        return "Mesh(level=%d, %d vertices, %d triangles)" % (
            self.level, self.num_vertices, self.num_triangles)


def mesh_size(m):
    """Maximum edge length of the mesh."""
    e = m.edges()
    d = m.vertices[e[:, 1]] - m.vertices[e[:, 0]]
    return float(np.max(np.hypot(d[:, 0], d[:, 1])))


def validate(m):
    """Check the mesh invariants; return a list of diagnostic strings.

    An empty list means the mesh is valid: positive triangle orientation,
    no hanging nodes, boundary edges exactly the once-used edges, Euler
    relation for a simply connected domain, no duplicated vertices.
    """
    report = []
    areas = m.signed_areas()
    for t in np.nonzero(areas <= 0)[0]:
        report.append("triangle %d has non-positive area %.3e" % (t, areas[t]))

    # duplicate coordinates create geometric hanging nodes even when the
    # index-based conformity check passes
    order = np.lexsort((m.vertices[:, 1], m.vertices[:, 0]))
    sv = m.vertices[order]
    same = np.all(np.abs(np.diff(sv, axis=0)) < 1e-14, axis=1)
    for i in np.nonzero(same)[0]:
        report.append("duplicated vertex: indices %d and %d coincide"
                      % (order[i], order[i + 1]))

    # edge usage counts
    t = m.triangles
    raw = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    raw = np.sort(raw, axis=1)
    uniq, counts = np.unique(raw, axis=0, return_counts=True)
    if np.any(counts > 2):
        for e in uniq[counts > 2]:
            report.append("edge (%d, %d) shared by more than two triangles"
                          % (e[0], e[1]))
    once = {tuple(e) for e in uniq[counts == 1]}
    tagged = {tuple(sorted(e)) for e in m.boundary_edges}
    for e in sorted(once - tagged):
        report.append("edge (%d, %d) used once but not tagged as boundary" % e)
    for e in sorted(tagged - once):
        report.append("boundary tag (%d, %d) does not match a once-used edge" % e)

    nv, ne, nt = m.num_vertices, uniq.shape[0], m.num_triangles
    if nv - ne + nt != 1:
        report.append("Euler relation violated: V-E+T = %d" % (nv - ne + nt))
    return report


def refine_red(m):
    """Red-refine: split each triangle into 4 via edge midpoints.

    The result carries a ParentMap and its level is ``m.level + 1``.
    """
    edges = m.edges()
    edge_index = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
    nv = m.num_vertices
    midpoints = 0.5 * (m.vertices[edges[:, 0]] + m.vertices[edges[:, 1]])
    vertices = np.vstack([m.vertices, midpoints])

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        return nv + edge_index[key]

    triangles = []
    triangle_parent = []
    for p, (a, b, c) in enumerate(m.triangles):
        a, b, c = int(a), int(b), int(c)
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        children = [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        for slot, tri in enumerate(children):
            triangles.append(tri)
            triangle_parent.append((p, slot))

    boundary = []
    for a, b in m.boundary_edges:
        a, b = int(a), int(b)
        mm = mid(a, b)
        boundary.append((a, mm))
        boundary.append((mm, b))

    vertex_parent = [('v', i) for i in range(nv)]
    vertex_parent += [('e', int(a), int(b)) for a, b in edges]

    return Mesh(vertices, triangles, boundary,
                level=m.level + 1,
                parent=ParentMap(triangle_parent, vertex_parent))


# ---------------------------------------------------------------------------
# built-in domains


def _grid_mesh(cells, x0, y0, step):
    """Triangulate a set of square cells (given as (ix, iy) pairs)."""
    vid = {}
    vertices = []

    def vertex(ix, iy):
        key = (ix, iy)
        if key not in vid:
            vid[key] = len(vertices)
            vertices.append((x0 + ix * step, y0 + iy * step))
        return vid[key]

    triangles = []
    for ix, iy in sorted(cells):
        v00 = vertex(ix, iy)
        v10 = vertex(ix + 1, iy)
        v01 = vertex(ix, iy + 1)
        v11 = vertex(ix + 1, iy + 1)
        triangles.append((v00, v10, v11))
        triangles.append((v00, v11, v01))

    cellset = set(cells)
    boundary = []
    for ix, iy in sorted(cells):
        if (ix, iy - 1) not in cellset:
            boundary.append((vertex(ix, iy), vertex(ix + 1, iy)))
        if (ix + 1, iy) not in cellset:
            boundary.append((vertex(ix + 1, iy), vertex(ix + 1, iy + 1)))
        if (ix, iy + 1) not in cellset:
            boundary.append((vertex(ix + 1, iy + 1), vertex(ix, iy + 1)))
        if (ix - 1, iy) not in cellset:
            boundary.append((vertex(ix, iy + 1), vertex(ix, iy)))
    return Mesh(vertices, triangles, boundary)


def _structured_triangle(n):
    """Subdivide the unit right triangle (legs on the axes) into n^2 cells."""
    h = 1.0 / n
    vid = {}
    vertices = []

    def vertex(i, j):
        if (i, j) not in vid:
            vid[(i, j)] = len(vertices)
            vertices.append((i * h, j * h))
        return vid[(i, j)]

    triangles = []
    for j in range(n):
        for i in range(n - j):
            triangles.append((vertex(i, j), vertex(i + 1, j), vertex(i, j + 1)))
            if i + j < n - 1:
                triangles.append((vertex(i + 1, j), vertex(i + 1, j + 1),
                                  vertex(i, j + 1)))
    boundary = []
    for i in range(n):
        boundary.append((vertex(i, 0), vertex(i + 1, 0)))
        boundary.append((vertex(n - i, i), vertex(n - i - 1, i + 1)))
        boundary.append((vertex(0, n - i), vertex(0, n - i - 1)))
    return Mesh(vertices, triangles, boundary)


def _polygon_area2(pts):
    x, y = pts[:, 0], pts[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-14 else (1 if v > 0 else -1)
    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _ear_clip(pts):
    """Triangulate a simple CCW polygon by ear clipping."""
    idx = list(range(len(pts)))
    triangles = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(pts) ** 2:
            raise MeshError("ear clipping failed; polygon may be degenerate")
        n = len(idx)
        clipped = False
        for k in range(n):
            a, b, c = idx[(k - 1) % n], idx[k], idx[(k + 1) % n]
            pa, pb, pc = pts[a], pts[b], pts[c]
            cross = ((pb[0] - pa[0]) * (pc[1] - pa[1])
                     - (pb[1] - pa[1]) * (pc[0] - pa[0]))
            if cross <= 1e-14:
                continue
            # no other polygon vertex inside the candidate ear
            ok = True
            for j in idx:
                if j in (a, b, c):
                    continue
                p = pts[j]
                s1 = ((pb[0] - pa[0]) * (p[1] - pa[1])
                      - (pb[1] - pa[1]) * (p[0] - pa[0]))
                s2 = ((pc[0] - pb[0]) * (p[1] - pb[1])
                      - (pc[1] - pb[1]) * (p[0] - pb[0]))
                s3 = ((pa[0] - pc[0]) * (p[1] - pc[1])
                      - (pa[1] - pc[1]) * (p[0] - pc[0]))
            # strictly inside or on the ear boundary blocks the clip
                if s1 >= -1e-14 and s2 >= -1e-14 and s3 >= -1e-14:
                    ok = False
                    break
            if ok:
                triangles.append((a, b, c))
                del idx[k]
                clipped = True
                break
        if not clipped:
            raise MeshError("ear clipping failed; polygon may be non-simple")
    triangles.append(tuple(idx))
    return triangles


def _polygon_mesh(vertices):
    pts = np.asarray(vertices, dtype=float)
    n = len(pts)
    if n < 3:
        raise MeshError("polygon needs at least 3 vertices")
    if abs(_polygon_area2(pts)) < 1e-14:
        raise MeshError("polygon is degenerate (zero area)")
    if _polygon_area2(pts) < 0:
        pts = pts[::-1]
    # simplicity: non-adjacent boundary segments must not cross
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(pts[i], pts[(i + 1) % n],
                               pts[j], pts[(j + 1) % n]):
                raise MeshError(
                    "non-simple polygon: edges %d-%d and %d-%d intersect"
                    % (i, (i + 1) % n, j, (j + 1) % n))
    triangles = _ear_clip(pts)
    boundary = [(i, (i + 1) % n) for i in range(n)]
    return Mesh(pts, triangles, boundary)


def build_builtin_domain(name, target_h, polygon_vertices=None):
    """Mesh one of the built-in polygonal domains.

    name: 'unit_square', 'right_triangle', 'l_shape' or 'polygon'
    (with polygon_vertices).  The returned mesh has maximum edge length
    at most 1.5 * target_h and represents the polygonal boundary exactly.
    """
    if target_h <= 0:
        raise MeshError("target_h must be positive")
    n = int(np.ceil(np.sqrt(2.0) / (1.5 * target_h)))
    if name == "unit_square":
        cells = [(i, j) for i in range(n) for j in range(n)]
        m = _grid_mesh(cells, 0.0, 0.0, 1.0 / n)
    elif name == "right_triangle":
        m = _structured_triangle(n)
    elif name == "l_shape":
        # [0,2]^2 minus [1,2]^2, grid step 1/n
        cells = [(i, j) for i in range(2 * n) for j in range(2 * n)
                 if i < n or j < n]
        m = _grid_mesh(cells, 0.0, 0.0, 1.0 / n)
    elif name == "polygon":
        if polygon_vertices is None:
            raise MeshError("polygon domain requires vertex list")
        m = _polygon_mesh(polygon_vertices)
        while mesh_size(m) > 1.5 * target_h:
            m = refine_red(m)
        m = Mesh(m.vertices, m.triangles, m.boundary_edges)  # reset level
    else:
        raise MeshError("unknown builtin domain %r" % name)
    return m


# ---------------------------------------------------------------------------
# file format: line 1 'NV NT NB'; NV lines 'x1 x2'; NT lines 'i j k' (1-based,
# CCW); NB lines 'i j'.  '#' starts a comment line.


def save_mesh(m, path):
    with open(path, "w") as f:
        f.write("# teig mesh\n")
        f.write("%d %d %d\n" % (m.num_vertices, m.num_triangles,
                                m.boundary_edges.shape[0]))
        for x, y in m.vertices:
            f.write("%.17g %.17g\n" % (x, y))
        for a, b, c in m.triangles:
            f.write("%d %d %d\n" % (a + 1, b + 1, c + 1))
        for a, b in m.boundary_edges:
            f.write("%d %d\n" % (a + 1, b + 1))


def load_mesh(path):
    rows = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            rows.append((lineno, text))
    if not rows:
        raise MeshFormatError("empty mesh file")

    def ints(row, count):
        lineno, text = row
        parts = text.split()
        if len(parts) != count:
            raise MeshFormatError("expected %d fields, got %d"
                                  % (count, len(parts)), lineno)
        try:
            return [int(p) for p in parts]
        except ValueError:
            raise MeshFormatError("invalid integer in %r" % text, lineno)

    nv, nt, nb = ints(rows[0], 3)
    if len(rows) != 1 + nv + nt + nb:
        raise MeshFormatError(
            "expected %d data lines, found %d" % (1 + nv + nt + nb, len(rows)),
            rows[-1][0])
    vertices = []
    for row in rows[1:1 + nv]:
        lineno, text = row
        parts = text.split()
        if len(parts) != 2:
            raise MeshFormatError("expected 2 coordinates", lineno)
        try:
            vertices.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise MeshFormatError("invalid coordinate in %r" % text, lineno)
    triangles = []
    for row in rows[1 + nv:1 + nv + nt]:
        i, j, k = ints(row, 3)
        for v in (i, j, k):
            if not 1 <= v <= nv:
                raise MeshFormatError("vertex index %d out of range" % v, row[0])
        triangles.append((i - 1, j - 1, k - 1))
    boundary = []
    for row in rows[1 + nv + nt:]:
        i, j = ints(row, 2)
        for v in (i, j):
            if not 1 <= v <= nv:
                raise MeshFormatError("vertex index %d out of range" % v, row[0])
        boundary.append((i - 1, j - 1))
    return Mesh(vertices, triangles, boundary)
