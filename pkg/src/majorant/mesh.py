"""Conforming triangulations of polygonal domains.

Triangles are stored counter-clockwise with the *newest vertex* first: for
``(v0, v1, v2)`` the refinement edge is ``(v1, v2)``.  Boundary edges carry
one of the tags ``"D"`` (Dirichlet), ``"N"`` (Neumann) or ``"R"`` (Robin).

Mesh text format
----------------
::

    # optional comment lines, anywhere
    VERTICES <n>
    <x> <y>                 (n lines, decimal floats)
    TRIANGLES <m>
    <v0> <v1> <v2>          (m lines, 0-based, newest vertex first)
    BOUNDARY <k>
    <a> <b> <tag>           (k lines, tag in D/N/R)

Sections appear in this order.  Floats are written with ``repr`` so a
save/load round trip is bitwise exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

TAGS = ("D", "N", "R")


class MeshError(ValueError):
    pass


class MeshFormatError(MeshError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True, eq=False)
class Mesh2D:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        t = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        b = np.array(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        g = np.array(self.boundary_tags, dtype="<U1").reshape(-1)
        for name, arr in (("vertices", v), ("triangles", t), ("boundary_edges", b), ("boundary_tags", g)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @cached_property
    def signed_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def areas(self):
        return np.abs(self.signed_areas)

    @cached_property
    def _edge_data(self):
        t = self.triangles
        # local edge k is opposite local vertex k
        loc = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)  # (M,3,2)
        pairs = np.sort(loc.reshape(-1, 2), axis=1)
        edges, inv = np.unique(pairs, axis=0, return_inverse=True)
        t2e = inv.reshape(-1, 3)
        sign = np.where(loc[:, :, 0] < loc[:, :, 1], 1, -1)
        return edges, t2e, sign

    @property
    def edges(self):
        """Unique edges ``(a, b)`` with ``a < b``; the global normal is the tangent ``b - a`` turned clockwise."""
        return self._edge_data[0]

    @property
    def t2e(self):
        return self._edge_data[1]

    @property
    def edge_signs(self):
        """+1 where the global edge normal points out of the element."""
        return self._edge_data[2]

    @cached_property
    def edge_triangles(self):
        """(E, 2) adjacent triangles, second column -1 on the boundary."""
        et = -np.ones((self.n_edges, 2), dtype=np.int64)
        flat = self.t2e.reshape(-1)
        tri = np.repeat(np.arange(self.n_triangles), 3)
        order = np.argsort(flat, kind="stable")
        fs, ts = flat[order], tri[order]
        first = np.ones(fs.size, dtype=bool)
        first[1:] = fs[1:] != fs[:-1]
        et[fs[first], 0] = ts[first]
        et[fs[~first], 1] = ts[~first]
        return et

    @cached_property
    def edge_tags(self):
        """Tag per global edge, ``""`` for interior edges."""
        tags = np.full(self.n_edges, "", dtype="<U1")
        if self.boundary_edges.size:
            idx = self._find_edges(self.boundary_edges)
            tags[idx] = self.boundary_tags
        return tags

    def _find_edges(self, pairs):
        key = self.edges[:, 0] * self.n_vertices + self.edges[:, 1]
        s = np.sort(pairs, axis=1)
        q = s[:, 0] * self.n_vertices + s[:, 1]
        idx = np.searchsorted(key, q)
        idx = np.clip(idx, 0, key.size - 1)
        if not np.all(key[idx] == q):
            raise MeshError("boundary edge is not an edge of the triangulation")
        return idx

    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def edge_normals(self):
        """Unit global normals."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        n = np.stack([d[:, 1], -d[:, 0]], axis=1)
        return n / np.hypot(d[:, 0], d[:, 1])[:, None]

    def tagged_edges(self, tag):
        return np.flatnonzero(self.edge_tags == tag)

    def tagged_vertices(self, tag):
        return np.unique(self.edges[self.tagged_edges(tag)])

    def boundary_element_edges(self, edge_ids):
        """For boundary edges, the owning element and the local edge index."""
        elems = self.edge_triangles[edge_ids, 0]
        local = np.argmax(self.t2e[elems] == np.asarray(edge_ids)[:, None], axis=1)
        return elems, local

    def outward_sign(self, edge_ids):
        """+1 where the global normal of a boundary edge points out of the domain."""
        elems, local = self.boundary_element_edges(edge_ids)
        return self.edge_signs[elems, local]

    def min_angle(self):
        p = self.vertices[self.triangles]
        angles = []
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            c = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(c, -1, 1))))
        return float(np.min(angles))

    def h_max(self):
        return float(self.edge_lengths().max())

    def validate(self):
        """Raise :class:`MeshError` unless every structural invariant holds."""
        if self.n_triangles == 0:
            raise MeshError("mesh has no triangles")
        if self.triangles.min() < 0 or self.triangles.max() >= self.n_vertices:
            raise MeshError("triangle references a missing vertex")
        if np.any(self.signed_areas <= 0):
            bad = int(np.flatnonzero(self.signed_areas <= 0)[0])
            raise MeshError(f"triangle {bad} is not positively oriented")
        counts = np.bincount(self.t2e.reshape(-1), minlength=self.n_edges)
        if counts.max() > 2:
            raise MeshError("an edge is shared by more than two triangles")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.triangles.reshape(-1)] = True
        if not used.all():
            raise MeshError("mesh has vertices not used by any triangle")
        if not set(np.unique(self.boundary_tags)) <= set(TAGS):
            raise MeshError(f"boundary tags must be among {TAGS}")
        if self.boundary_edges.size and (self.boundary_edges.min() < 0 or self.boundary_edges.max() >= self.n_vertices):
            raise MeshError("boundary edge references a missing vertex")
        topo = np.flatnonzero(counts == 1)
        listed = self._find_edges(self.boundary_edges) if self.boundary_edges.size else np.array([], dtype=np.int64)
        if listed.size != np.unique(listed).size:
            raise MeshError("boundary edge listed twice")
        if not np.array_equal(np.sort(listed), topo):
            raise MeshError("boundary edges do not cover exactly the topological boundary")
        # a hanging node shows up as a boundary vertex of odd boundary degree
        bdeg = np.bincount(self.edges[topo].reshape(-1), minlength=self.n_vertices)
        if np.any(bdeg[bdeg > 0] != 2):
            raise MeshError("boundary is not a union of closed polygons")
        return self


def build_rectangle(nx, ny, tag_predicate=None, bounds=(0.0, 1.0, 0.0, 1.0)):
    """Structured triangulation of a rectangle (default the unit square).

    Each cell is cut along its ``(i, j)-(i+1, j+1)`` diagonal, which is the
    refinement edge of both halves.  ``tag_predicate(x, y)`` maps an edge
    midpoint to a tag; the default tags every boundary edge ``"D"``.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    x0, x1, y0, y1 = bounds
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    verts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    a = j * (nx + 1) + i
    b = a + 1
    c = b + nx + 1
    d = a + nx + 1
    tris = np.empty((2 * a.size, 3), dtype=np.int64)
    tris[0::2] = np.stack([b, c, a], axis=1)
    tris[1::2] = np.stack([d, a, c], axis=1)
    bottom = [(k, k + 1) for k in range(nx)]
    right = [(k * (nx + 1) + nx, (k + 1) * (nx + 1) + nx) for k in range(ny)]
    top = [(ny * (nx + 1) + k + 1, ny * (nx + 1) + k) for k in range(nx)]
    left = [((k + 1) * (nx + 1), k * (nx + 1)) for k in range(ny)]
    bedges = np.array(bottom + right + top + left, dtype=np.int64)
    if tag_predicate is None:
        tags = np.full(len(bedges), "D")
    else:
        mids = 0.5 * (verts[bedges[:, 0]] + verts[bedges[:, 1]])
        tags = np.array([tag_predicate(float(mx), float(my)) for mx, my in mids], dtype="<U1")
    return Mesh2D(verts, tris, bedges, tags).validate()


def side_tags(left="D", right="D", bottom="D", top="D", bounds=(0.0, 1.0, 0.0, 1.0), tol=1e-12):
    """Tag predicate for the four sides of an axis-aligned rectangle."""
    x0, x1, y0, y1 = bounds

    def predicate(x, y):
        if abs(x - x0) < tol:
            return left
        if abs(x - x1) < tol:
            return right
        if abs(y - y0) < tol:
            return bottom
        if abs(y - y1) < tol:
            return top
        raise MeshError(f"point ({x}, {y}) is not on the rectangle boundary")

    return predicate


def _closure(mesh, marked):
    edge_marked = np.zeros(mesh.n_edges, dtype=bool)
    ref = mesh.t2e[:, 0]
    edge_marked[ref[marked]] = True
    while True:
        need = edge_marked[mesh.t2e].any(axis=1) & ~edge_marked[ref]
        if not need.any():
            return edge_marked
        edge_marked[ref[need]] = True


def bisect(mesh, marked):
    """Newest-vertex bisection of the ``marked`` triangles plus conformity closure.

    Returns a new mesh; boundary edges that are split pass their tag on to
    both halves.
    """
    marked = np.unique(np.asarray(sorted(set(int(k) for k in marked)), dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked.min() < 0 or marked.max() >= mesh.n_triangles:
        raise IndexError("marked triangle id out of range")
    edge_marked = _closure(mesh, marked)
    split = np.flatnonzero(edge_marked)
    nv = mesh.n_vertices
    new_ids = nv + np.arange(split.size)
    mids = 0.5 * (mesh.vertices[mesh.edges[split, 0]] + mesh.vertices[mesh.edges[split, 1]])
    verts = np.vstack([mesh.vertices, mids])
    keys = mesh.edges[split, 0] * nv + mesh.edges[split, 1]  # sorted since edges are sorted

    def midpoint(a, b):
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        q = lo * nv + hi
        idx = np.clip(np.searchsorted(keys, q), 0, keys.size - 1)
        hit = (keys[idx] == q) & (lo < nv) & (hi < nv)
        return np.where(hit, new_ids[idx], -1)

    tris = mesh.triangles
    while True:
        m = midpoint(tris[:, 1], tris[:, 2])
        cut = m >= 0
        if not cut.any():
            break
        t = tris[cut]
        mc = m[cut]
        children = np.empty((2 * t.shape[0], 3), dtype=np.int64)
        children[0::2] = np.stack([mc, t[:, 0], t[:, 1]], axis=1)
        children[1::2] = np.stack([mc, t[:, 2], t[:, 0]], axis=1)
        # each row expands in place to one (kept) or two (cut) rows
        new = np.empty((tris.shape[0] + t.shape[0], 3), dtype=np.int64)
        counts = np.where(cut, 2, 1)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        new[starts[~cut]] = tris[~cut]
        cs = starts[cut]
        new[cs] = children[0::2]
        new[cs + 1] = children[1::2]
        tris = new
    be = mesh.boundary_edges
    bm = midpoint(be[:, 0], be[:, 1])
    bcut = bm >= 0
    counts = np.where(bcut, 2, 1)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    nbe = np.empty((counts.sum(), 2), dtype=np.int64)
    ntags = np.empty(counts.sum(), dtype="<U1")
    nbe[starts[~bcut]] = be[~bcut]
    ntags[starts[~bcut]] = mesh.boundary_tags[~bcut]
    cs = starts[bcut]
    nbe[cs] = np.stack([be[bcut, 0], bm[bcut]], axis=1)
    nbe[cs + 1] = np.stack([bm[bcut], be[bcut, 1]], axis=1)
    ntags[cs] = mesh.boundary_tags[bcut]
    ntags[cs + 1] = mesh.boundary_tags[bcut]
    return Mesh2D(verts, tris, nbe, ntags)


def refine_uniform(mesh, times=1):
    """Bisect every triangle twice per round (one uniform red-type level)."""
    for _ in range(times):
        mesh = bisect(mesh, range(mesh.n_triangles))
        mesh = bisect(mesh, range(mesh.n_triangles))
    return mesh


def save(mesh, path):
    with open(path, "w") as fh:
        fh.write(dumps(mesh))


def dumps(mesh):
    lines = ["# triangular mesh: newest vertex first, boundary tags D/N/R"]
    lines.append(f"VERTICES {mesh.n_vertices}")
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"TRIANGLES {mesh.n_triangles}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"BOUNDARY {mesh.boundary_edges.shape[0]}")
    lines += [f"{a} {b} {t}" for (a, b), t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist())]
    return "\n".join(lines) + "\n"


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def loads(text):
    """Parse the mesh text format; raises :class:`MeshFormatError` with a line number."""
    rows = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    rows = [(i, ln) for i, ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise MeshFormatError("empty mesh file", 1)
    it = iter(rows)
    sections = {}
    for name, ncols, conv in (("VERTICES", 2, float), ("TRIANGLES", 3, int), ("BOUNDARY", 3, None)):
        try:
            lineno, header = next(it)
        except StopIteration:
            raise MeshFormatError(f"missing {name} section", rows[-1][0] + 1) from None
        parts = header.split()
        if len(parts) != 2 or parts[0] != name:
            raise MeshFormatError(f"expected '{name} <count>', got {header!r}", lineno)
        try:
            count = int(parts[1])
        except ValueError:
            raise MeshFormatError(f"invalid count {parts[1]!r}", lineno) from None
        if count < 0:
            raise MeshFormatError("negative count", lineno)
        recs = []
        for _ in range(count):
            try:
                ln_no, line = next(it)
            except StopIteration:
                raise MeshFormatError(f"{name} section ends early", rows[-1][0] + 1) from None
            fields = line.split()
            if len(fields) != ncols:
                raise MeshFormatError(f"expected {ncols} fields, got {len(fields)}", ln_no)
            try:
                if name == "BOUNDARY":
                    if fields[2] not in TAGS:
                        raise ValueError(fields[2])
                    recs.append((int(fields[0]), int(fields[1]), fields[2]))
                else:
                    vals = [conv(x) for x in fields]
                    if conv is float and not all(np.isfinite(vals)):
                        raise ValueError("non-finite coordinate")
                    recs.append(vals)
            except ValueError as exc:
                raise MeshFormatError(f"malformed record ({exc})", ln_no) from None
        sections[name] = (lineno, recs)
    extra = next(it, None)
    if extra is not None:
        raise MeshFormatError("unexpected content after BOUNDARY section", extra[0])
    verts = np.array(sections["VERTICES"][1], dtype=float).reshape(-1, 2)
    tris = np.array(sections["TRIANGLES"][1], dtype=np.int64).reshape(-1, 3)
    brecs = sections["BOUNDARY"][1]
    bedges = np.array([r[:2] for r in brecs], dtype=np.int64).reshape(-1, 2)
    btags = np.array([r[2] for r in brecs], dtype="<U1")
    mesh = Mesh2D(verts, tris, bedges, btags)
    try:
        mesh.validate()
    except MeshError as exc:
        raise MeshFormatError(f"invalid mesh: {exc}", sections["TRIANGLES"][0]) from None
    return mesh
