"""Conforming triangulations of rectangles with oriented edges and boundary tags.

Meshes are immutable after construction.  Triangles are stored with
counterclockwise vertex ordering, edges with a canonical global orientation
(low vertex index -> high vertex index).  The per-triangle edge signs record
whether the local traversal direction (CCW around the triangle) agrees with
the global edge direction; H(div) degree-of-freedom maps rely on this.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Local edge le of triangle (v0, v1, v2) runs from vertex le to vertex (le+1)%3.
LOCAL_EDGE_VERTICES = ((0, 1), (1, 2), (2, 0))


@dataclass(frozen=True)
class Mesh:
    """Triangulation with oriented edges and tagged boundary edges."""

    vertices: np.ndarray       # (nv, 2) float
    triangles: np.ndarray      # (nt, 3) int, CCW
    edges: np.ndarray          # (ne, 2) int, low index -> high index
    tri_edges: np.ndarray      # (nt, 3) int, global edge index of local edge
    tri_edge_signs: np.ndarray  # (nt, 3) int, +1 local agrees with global
    boundary_tags: dict = field(default_factory=dict)  # edge index -> tag name

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def num_edges(self):
        return len(self.edges)

    def triangle_coords(self):
        """Vertex coordinates per triangle, shape (nt, 3, 2)."""
        return self.vertices[self.triangles]

    def signed_areas(self):
        p = self.triangle_coords()
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def diameters(self):
        """Longest edge per triangle."""
        p = self.triangle_coords()
        lengths = np.stack(
            [np.linalg.norm(p[:, b] - p[:, a], axis=1) for a, b in LOCAL_EDGE_VERTICES],
            axis=1,
        )
        return lengths.max(axis=1)

    def edge_lengths(self):
        v = self.vertices
        return np.linalg.norm(v[self.edges[:, 1]] - v[self.edges[:, 0]], axis=1)

    def edge_tangents(self):
        """Unit tangents along the global direction (low -> high vertex)."""
        v = self.vertices
        t = v[self.edges[:, 1]] - v[self.edges[:, 0]]
        return t / np.linalg.norm(t, axis=1)[:, None]

    def edge_normals(self):
        """Unit normals, global tangent rotated by -90 degrees: n = (t_y, -t_x)."""
        t = self.edge_tangents()
        return np.stack([t[:, 1], -t[:, 0]], axis=1)

    def boundary_edges(self):
        counts = np.zeros(self.num_edges, dtype=int)
        np.add.at(counts, self.tri_edges.ravel(), 1)
        return np.nonzero(counts == 1)[0]

    def edges_with_tag(self, tag):
        return np.array(sorted(e for e, t in self.boundary_tags.items() if t == tag), dtype=int)

    def edge_owner(self):
        """For each edge, one incident triangle and the local edge index there.

        Boundary edges have exactly one owner; for interior edges the triangle
        with the lower index is reported.
        """
        owner = np.full(self.num_edges, -1, dtype=int)
        local = np.full(self.num_edges, -1, dtype=int)
        flat = self.tri_edges.ravel()
        tri_idx = np.repeat(np.arange(self.num_triangles), 3)
        loc_idx = np.tile(np.arange(3), self.num_triangles)
        # reversed writes: the first flat occurrence (lowest triangle) wins
        owner[flat[::-1]] = tri_idx[::-1]
        local[flat[::-1]] = loc_idx[::-1]
        return owner, local

    def tag_names(self):
        return sorted(set(self.boundary_tags.values()))


def _index_edges(triangles):
    """Build the global edge table and triangle->edge incidence with signs."""
    nt = len(triangles)
    pairs = []
    for le, (a, b) in enumerate(LOCAL_EDGE_VERTICES):
        va = triangles[:, a]
        vb = triangles[:, b]
        pairs.append(np.stack([np.minimum(va, vb), np.maximum(va, vb)], axis=1))
    all_pairs = np.concatenate(pairs, axis=0)          # (3*nt, 2)
    edges, inverse = np.unique(all_pairs, axis=0, return_inverse=True)
    tri_edges = inverse.reshape(3, nt).T.copy()
    signs = np.empty((nt, 3), dtype=int)
    for le, (a, b) in enumerate(LOCAL_EDGE_VERTICES):
        signs[:, le] = np.where(triangles[:, a] < triangles[:, b], 1, -1)
    return edges, tri_edges, signs


def _make_mesh(vertices, triangles, boundary_tagger):
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=int)
    edges, tri_edges, signs = _index_edges(triangles)
    mesh = Mesh(vertices, triangles, edges, tri_edges, signs, {})
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        raise ValueError("mesh contains a triangle with non-positive signed area")
    for e in mesh.boundary_edges():
        tag = boundary_tagger(vertices[edges[e, 0]], vertices[edges[e, 1]])
        mesh.boundary_tags[int(e)] = tag
    return mesh


DEFAULT_SIDE_TAGS = {"left": "left", "right": "right", "bottom": "bottom", "top": "top"}


def build_structured_mesh(nx, ny, Lx, Ly, tags=None):
    """Structured triangulation of (0,Lx) x (0,Ly) with 2*nx*ny triangles.

    Each grid cell is split along the bottom-left to top-right diagonal.
    ``tags`` maps the side names left/right/bottom/top to tag labels.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive")
    if Lx <= 0 or Ly <= 0:
        raise ValueError("Lx and Ly must be positive")
    side_tags = dict(DEFAULT_SIDE_TAGS)
    if tags:
        side_tags.update(tags)

    xs = np.linspace(0.0, Lx, nx + 1)
    ys = np.linspace(0.0, Ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    triangles = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            # diagonal v00 -> v11, both children CCW
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))

    def tagger(p0, p1):
        m = 0.5 * (p0 + p1)
        tol = 1e-12 * max(Lx, Ly)
        if abs(m[0]) < tol:
            return side_tags["left"]
        if abs(m[0] - Lx) < tol:
            return side_tags["right"]
        if abs(m[1]) < tol:
            return side_tags["bottom"]
        return side_tags["top"]

    return _make_mesh(vertices, np.array(triangles), tagger)


def refine_uniform(mesh):
    """Split every triangle into 4 congruent children via edge midpoints."""
    nv = mesh.num_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.concatenate([mesh.vertices, mids], axis=0)
    mid_id = nv + np.arange(mesh.num_edges)

    t = mesh.triangles
    m01 = mid_id[mesh.tri_edges[:, 0]]
    m12 = mid_id[mesh.tri_edges[:, 1]]
    m20 = mid_id[mesh.tri_edges[:, 2]]
    children = np.concatenate(
        [
            np.stack([t[:, 0], m01, m20], axis=1),
            np.stack([m01, t[:, 1], m12], axis=1),
            np.stack([m20, m12, t[:, 2]], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ],
        axis=0,
    )

    # child boundary edges inherit the parent edge tag
    tag_of_pair = {}
    for e, tag in mesh.boundary_tags.items():
        a, b = mesh.edges[e]
        m = mid_id[e]
        tag_of_pair[(min(a, m), max(a, m))] = tag
        tag_of_pair[(min(b, m), max(b, m))] = tag

    edges, tri_edges, signs = _index_edges(children)
    refined = Mesh(vertices, children, edges, tri_edges, signs, {})
    for e in refined.boundary_edges():
        a, b = int(edges[e, 0]), int(edges[e, 1])
        refined.boundary_tags[e] = tag_of_pair[(min(a, b), max(a, b))]
    return refined


def mesh_size(mesh):
    """h := maximum triangle diameter."""
    return float(mesh.diameters().max())


def write_mesh(mesh, path):
    """Plain-text mesh file.  Layout:

    line 1: ``poromix-mesh 1``
    line 2: ``<nv> <nt> <nbe>``
    nv lines of vertex coordinates ``x y``
    nt lines of triangle connectivity ``v0 v1 v2``
    nbe lines of tagged boundary edges ``v0 v1 tag``
    """
    lines = ["poromix-mesh 1"]
    tagged = sorted(mesh.boundary_tags.items())
    lines.append(f"{mesh.num_vertices} {mesh.num_triangles} {len(tagged)}")
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r}")
    for v0, v1, v2 in mesh.triangles:
        lines.append(f"{v0} {v1} {v2}")
    for e, tag in tagged:
        v0, v1 = mesh.edges[e]
        lines.append(f"{v0} {v1} {tag}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    with open(path) as fh:
        tokens = fh.read().split("\n")
    if not tokens or tokens[0].strip() != "poromix-mesh 1":
        raise ValueError(f"{path}: not a poromix mesh file")
    nv, nt, nbe = (int(s) for s in tokens[1].split())
    vertices = np.array([[float(s) for s in line.split()] for line in tokens[2:2 + nv]])
    triangles = np.array(
        [[int(s) for s in line.split()] for line in tokens[2 + nv:2 + nv + nt]]
    )
    pair_tags = {}
    for line in tokens[2 + nv + nt:2 + nv + nt + nbe]:
        a, b, tag = line.split()
        a, b = int(a), int(b)
        pair_tags[(min(a, b), max(a, b))] = tag

    edges, tri_edges, signs = _index_edges(triangles)
    mesh = Mesh(vertices, triangles, edges, tri_edges, signs, {})
    if np.any(mesh.signed_areas() <= 0):
        raise ValueError(f"{path}: triangle with non-positive area")
    for e in mesh.boundary_edges():
        a, b = int(edges[e, 0]), int(edges[e, 1])
        mesh.boundary_tags[e] = pair_tags[(a, b)]
    return mesh
