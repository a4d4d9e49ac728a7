"""Lowest-order conforming spaces on triangles and fields evaluated at points.

Points are addressed per element: ``Points(elems, bary)`` with ``bary`` of
shape ``(E, Q, 3)``.  Every field exposes ``value(mesh, pts)`` and the
derivative its role needs (``grad``, ``div`` or ``rot``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..quadrature import line_rule, triangle_rule

# 90 degree rotation: Q grad w = (d_y w, -d_x w)
Q = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class Points:
    elems: np.ndarray
    bary: np.ndarray

    def xy(self, mesh):
        p = mesh.vertices[mesh.triangles[self.elems]]  # (E,3,2)
        return np.einsum("eqk,ekd->eqd", self.bary, p)


def volume_points(mesh, degree, elems=None):
    """Quadrature points on ``elems`` and physical weights ``(E, Q)``."""
    elems = np.arange(mesh.n_triangles) if elems is None else np.asarray(elems)
    bary, w = triangle_rule(degree)
    pts = Points(elems, np.broadcast_to(bary, (elems.size,) + bary.shape))
    # reference area is 1/2
    weights = 2.0 * mesh.areas[elems][:, None] * w[None, :]
    return pts, weights


def edge_points(mesh, edge_ids, degree):
    """Gauss points on edges, seen from the first adjacent triangle.

    Returns ``(pts, weights)``; the parameter runs from ``edges[:, 0]``
    to ``edges[:, 1]``.
    """
    edge_ids = np.asarray(edge_ids, dtype=np.int64)
    t, w = line_rule(degree)
    elems = mesh.edge_triangles[edge_ids, 0]
    a = mesh.edges[edge_ids, 0]
    b = mesh.edges[edge_ids, 1]
    tri = mesh.triangles[elems]
    bary = np.zeros((edge_ids.size, t.size, 3))
    rows = np.arange(edge_ids.size)
    ka = np.argmax(tri == a[:, None], axis=1)
    kb = np.argmax(tri == b[:, None], axis=1)
    bary[rows, :, ka] = 1.0 - t
    bary[rows, :, kb] = t
    pts = Points(elems, bary)
    weights = mesh.edge_lengths()[edge_ids][:, None] * w[None, :]
    return pts, weights


def _grad_bary(mesh, elems):
    """Gradients of the barycentric coordinates, shape ``(E, 3, 2)``."""
    p = mesh.vertices[mesh.triangles[elems]]
    area2 = 2.0 * mesh.signed_areas[elems]
    g = np.empty((elems.size, 3, 2))
    for k in range(3):
        p1 = p[:, (k + 1) % 3]
        p2 = p[:, (k + 2) % 3]
        g[:, k, 0] = (p1[:, 1] - p2[:, 1]) / area2
        g[:, k, 1] = (p2[:, 0] - p1[:, 0]) / area2
    return g


class P1Space:
    """Continuous piecewise linears vanishing at vertices of edges tagged ``constrained_tag``."""

    def __init__(self, mesh, constrained_tag="D"):
        self.mesh = mesh
        self.constrained_tag = constrained_tag
        fixed = mesh.tagged_vertices(constrained_tag) if constrained_tag else np.array([], dtype=np.int64)
        mask = np.ones(mesh.n_vertices, dtype=bool)
        mask[fixed] = False
        self.free = np.flatnonzero(mask)
        self.fixed = np.flatnonzero(~mask)

    @property
    def n_dofs(self):
        return self.free.size

    @property
    def n_global(self):
        return self.mesh.n_vertices

    def local_dofs(self):
        return self.mesh.triangles

    def basis(self, pts):
        """Values ``(E, Q, 3)`` and gradients ``(E, 3, 2)`` of the local basis."""
        return pts.bary, _grad_bary(self.mesh, pts.elems)

    def expand(self, free_values, fixed_values=None):
        full = np.zeros(self.n_global, dtype=np.result_type(free_values, float))
        full[self.free] = free_values
        if fixed_values is not None:
            full[self.fixed] = fixed_values
        return full


class RT0Space:
    """Lowest-order Raviart-Thomas fields with zero normal flux on ``constrained_tag`` edges.

    The dof of edge ``E`` is the flux through ``E`` in the direction of the
    global edge normal.
    """

    def __init__(self, mesh, constrained_tag="N"):
        self.mesh = mesh
        self.constrained_tag = constrained_tag
        mask = np.ones(mesh.n_edges, dtype=bool)
        if constrained_tag:
            mask[mesh.tagged_edges(constrained_tag)] = False
        self.free = np.flatnonzero(mask)
        self.fixed = np.flatnonzero(~mask)

    @property
    def n_dofs(self):
        return self.free.size

    @property
    def n_global(self):
        return self.mesh.n_edges

    def local_dofs(self):
        return self.mesh.t2e

    def basis(self, pts):
        """Values ``(E, Q, 3, 2)`` and divergences ``(E, 3)`` of the signed local basis.

        Local function ``k`` is ``s_k (x - P_k) / (2|T|)``, with ``P_k`` the
        vertex opposite edge ``k`` and ``s_k`` the edge orientation sign.
        """
        mesh = self.mesh
        elems = pts.elems
        xy = pts.xy(mesh)
        p = mesh.vertices[mesh.triangles[elems]]
        area = mesh.areas[elems]
        s = mesh.edge_signs[elems].astype(float)
        vals = (xy[:, :, None, :] - p[:, None, :, :]) * (s / (2.0 * area[:, None]))[:, None, :, None]
        div = s / area[:, None]
        return vals, div

    expand = P1Space.expand


class P1Function:
    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs)
        if self.coeffs.shape != (space.n_global,):
            raise ValueError("P1 coefficient vector must hold one value per vertex")

    def value(self, mesh, pts):
        c = self.coeffs[mesh.triangles[pts.elems]]
        return np.einsum("eqk,ek->eq", pts.bary, c)

    def grad(self, mesh, pts):
        g = _grad_bary(mesh, pts.elems)
        c = self.coeffs[mesh.triangles[pts.elems]]
        gv = np.einsum("ekd,ek->ed", g, c)
        return np.broadcast_to(gv[:, None, :], pts.bary.shape[:2] + (2,))

    def grad_perp(self, mesh, pts):
        return self.grad(mesh, pts) @ Q.T


class RT0Function:
    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs)
        if self.coeffs.shape != (space.n_global,):
            raise ValueError("RT0 coefficient vector must hold one value per edge")

    def value(self, mesh, pts):
        vals, _ = self.space.basis(pts)
        c = self.coeffs[mesh.t2e[pts.elems]]
        return np.einsum("eqkd,ek->eqd", vals, c)

    def div(self, mesh, pts):
        _, d = self.space.basis(pts)
        c = self.coeffs[mesh.t2e[pts.elems]]
        dv = np.einsum("ek,ek->e", d, c)
        return np.broadcast_to(dv[:, None], pts.bary.shape[:2])


class RotatedRT0Function:
    """``E = Q^T v`` for an RT0 field ``v``, so that ``Q E = v`` and ``rot E = div v``."""

    def __init__(self, space, coeffs):
        self.rep = RT0Function(space, coeffs)
        self.space = space
        self.coeffs = self.rep.coeffs

    def value(self, mesh, pts):
        return self.rep.value(mesh, pts) @ Q  # row-vector form of Q^T v

    def rot(self, mesh, pts):
        return self.rep.div(mesh, pts)

    def rot_direct(self, mesh, pts):
        """``d_x E_2 - d_y E_1`` from the affine coefficients of ``E`` itself."""
        # E is affine on each element; recover its Jacobian by differencing at the vertices
        elems = pts.elems
        corners = Points(elems, np.broadcast_to(np.eye(3), (elems.size, 3, 3)))
        ev = self.value(mesh, corners)  # (E,3,2)
        g = _grad_bary(mesh, elems)  # (E,3,2)
        jac = np.einsum("ekc,ekd->ecd", ev, g)  # d E_c / d x_d
        r = jac[:, 1, 0] - jac[:, 0, 1]
        return np.broadcast_to(r[:, None], pts.bary.shape[:2])


class AnalyticScalar:
    """Closed-form scalar field with optional gradient."""

    def __init__(self, fn, grad=None):
        self.fn = fn
        self._grad = grad

    def value(self, mesh, pts):
        xy = pts.xy(mesh)
        return self.fn(xy[..., 0], xy[..., 1])

    def grad(self, mesh, pts):
        xy = pts.xy(mesh)
        return self._grad(xy[..., 0], xy[..., 1])

    def grad_perp(self, mesh, pts):
        return self.grad(mesh, pts) @ Q.T


class AnalyticVector:
    """Closed-form vector field with optional divergence and rotation."""

    def __init__(self, fn, div=None, rot=None):
        self.fn = fn
        self._div = div
        self._rot = rot

    def value(self, mesh, pts):
        xy = pts.xy(mesh)
        return self.fn(xy[..., 0], xy[..., 1])

    def div(self, mesh, pts):
        xy = pts.xy(mesh)
        return self._div(xy[..., 0], xy[..., 1])

    def rot(self, mesh, pts):
        xy = pts.xy(mesh)
        return self._rot(xy[..., 0], xy[..., 1])


def interpolate_p1(space, fn, fixed_from_fn=False):
    """Vertex interpolant of ``fn(x, y)``.

    Constrained vertices are set to zero unless ``fixed_from_fn`` is true,
    which yields an interpolant of inhomogeneous boundary data.
    """
    v = space.mesh.vertices
    vals = np.asarray(fn(v[:, 0], v[:, 1]))
    vals = np.broadcast_to(vals, (v.shape[0],)).copy()
    if not fixed_from_fn:
        vals[space.fixed] = 0.0
    return P1Function(space, vals)


def edge_fluxes(mesh, fn, degree=6, edge_ids=None):
    """Integrals of ``fn . n`` over edges (global normals), by Gauss quadrature."""
    edge_ids = np.arange(mesh.n_edges) if edge_ids is None else np.asarray(edge_ids)
    t, w = line_rule(max(degree, 6))
    a = mesh.vertices[mesh.edges[edge_ids, 0]]
    b = mesh.vertices[mesh.edges[edge_ids, 1]]
    xy = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    vals = fn(xy[..., 0], xy[..., 1])  # (E,Q,2)
    d = b - a
    # unnormalized normal (dy, -dx) has length L, so it also carries the edge measure
    nvec = np.stack([d[:, 1], -d[:, 0]], axis=1)
    return np.einsum("eqd,ed,q->e", vals, nvec, w)


def interpolate_rt0(space, fn, degree=6, fixed_from_fn=False):
    """Canonical RT0 interpolant: edge fluxes of ``fn``."""
    flux = edge_fluxes(space.mesh, fn, degree)
    if not fixed_from_fn:
        flux[space.fixed] = 0.0
    return RT0Function(space, flux)


def interpolate_rotated(space, fn, degree=6, fixed_from_fn=False):
    """Interpolant of ``E`` in the rotated space, via the RT0 interpolant of ``Q E``."""
    flux = edge_fluxes(space.mesh, lambda x, y: fn(x, y) @ Q.T, degree)
    if not fixed_from_fn:
        flux[space.fixed] = 0.0
    return RotatedRT0Function(space, flux)


def assemble(space_u, space_v, local):
    """Scatter local matrices ``(E, 3, 3)`` into a global sparse matrix.

    Rows follow ``space_v`` (test), columns ``space_u`` (trial).
    """
    du = space_u.local_dofs()
    dv = space_v.local_dofs()
    rows = np.repeat(dv, 3, axis=1).reshape(-1)
    cols = np.tile(du, (1, 3)).reshape(-1)
    mat = sp.coo_matrix((local.reshape(-1), (rows, cols)), shape=(space_v.n_global, space_u.n_global))
    return mat.tocsr()


def assemble_vector(space, local):
    out = np.zeros(space.n_global, dtype=local.dtype)
    np.add.at(out, space.local_dofs().reshape(-1), local.reshape(-1))
    return out
