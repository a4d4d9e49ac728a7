"""Complex linear algebra with weighted inner products.

All Hilbert-space structure in the package is expressed through the two
classes here: :class:`WeightedSpace` carries a Hermitian positive definite
weight (a material coefficient such as ``alpha_1``) and :class:`Operator`
carries a matrix ``A`` together with its adjoint (conjugate transpose).

Inner products are linear in the first and conjugate-linear in the second
argument, ``<u, v>_W = v^H W u``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DIRECT_LIMIT = 2000
HERMITIAN_TOL = 1e-12
RESIDUAL_TOL = 1e-10


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a Cholesky factorization breaks down."""

    def __init__(self, pivot):
        self.pivot = pivot
        super().__init__(f"matrix is not positive definite: factorization broke down at pivot {pivot}")


class WeightedSpace:
    """C^dim equipped with the inner product ``<W u, v>``.

    Parameters
    ----------
    weight : array_like, shape (dim, dim)
        Hermitian positive definite weight.  Scalars and 1-D arrays are
        promoted to ``weight * I`` and ``diag(weight)``.
    """

    def __init__(self, weight):
        w = np.asarray(weight)
        if w.ndim == 0:
            w = w * np.eye(1)
        elif w.ndim == 1:
            w = np.diag(w)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weight must be square, got shape {w.shape}")
        w = np.array(w, dtype=np.result_type(w.dtype, np.float64))
        scale = max(np.abs(w).max(), np.finfo(float).tiny)
        if np.abs(w - w.conj().T).max() > HERMITIAN_TOL * scale:
            raise ValueError("weight is not Hermitian")
        self._factor = _cholesky(w)
        w.setflags(write=False)
        self.weight = w

    @property
    def dim(self):
        return self.weight.shape[0]

    def apply(self, u):
        return self.weight @ u

    def solve(self, u):
        """Apply the inverse weight."""
        return sla.cho_solve((self._factor, False), u)

    def inverse(self):
        return WeightedSpace(np.linalg.inv(self.weight))

    def scaled(self, c):
        if not c > 0:
            raise ValueError("scaling factor must be positive")
        return WeightedSpace(c * self.weight)

    def __repr__(self):
        return f"WeightedSpace(dim={self.dim})"


class Operator:
    """Linear operator ``A: C^n -> C^m`` with adjoint ``A^H``."""

    def __init__(self, matrix):
        if sp.issparse(matrix):
            self.matrix = sp.csr_matrix(matrix)
        else:
            m = np.array(matrix, dtype=complex)
            if m.ndim != 2:
                raise ValueError("operator matrix must be 2-D")
            m.setflags(write=False)
            self.matrix = m

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, x):
        return self.matrix @ x

    def apply_adjoint(self, y):
        return self.matrix.conj().T @ y

    @property
    def H(self):
        return self.matrix.conj().T

    def dense(self):
        return self.matrix.toarray() if sp.issparse(self.matrix) else np.asarray(self.matrix)

    def adjoint_defect(self, rng, trials=100):
        """Largest relative defect of ``<A phi, psi> = <phi, A^H psi>`` over random pairs."""
        m, n = self.shape
        worst = 0.0
        for _ in range(trials):
            phi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            psi = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            lhs = np.vdot(psi, self.apply(phi))
            rhs = np.vdot(self.apply_adjoint(psi), phi)
            scale = max(1.0, np.linalg.norm(self.apply(phi)) * np.linalg.norm(psi))
            worst = max(worst, abs(lhs - rhs) / scale)
        return worst


def _check_dims(u, v, w):
    if u.shape != v.shape or u.shape[0] != w.dim:
        raise ValueError(f"dimension mismatch: {u.shape}, {v.shape}, weight dim {w.dim}")


def weighted_inner(u, v, w, inverse=False):
    """Return ``<W u, v>`` (or ``<W^{-1} u, v>`` with ``inverse=True``)."""
    u = np.asarray(u)
    v = np.asarray(v)
    _check_dims(u, v, w)
    wu = w.solve(u) if inverse else w.apply(u)
    return complex(np.vdot(v, wu))


def weighted_norm_sq(u, w, inverse=False):
    return weighted_inner(u, u, w, inverse=inverse).real


def _cholesky(m):
    m = np.asarray(m)
    potrf = sla.lapack.get_lapack_funcs("potrf", (m,))
    c, info = potrf(m, lower=False, clean=True)
    if info > 0:
        raise NotPositiveDefiniteError(int(info))
    if info < 0:
        raise ValueError(f"illegal argument {-info} to potrf")
    return c


def _relative_residual(m, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(m @ x - b)
    return r / nb if nb > 0 else r


def _pcg(m, b, rtol=RESIDUAL_TOL, maxiter=None):
    n = m.shape[0]
    diag = m.diagonal().real
    if np.any(diag <= 0):
        raise NotPositiveDefiniteError(int(np.argmin(diag)) + 1)
    precond = spla.LinearOperator(m.shape, matvec=lambda r: r / diag, dtype=m.dtype)
    x, info = spla.cg(m, b, rtol=rtol, atol=0.0, maxiter=maxiter or 10 * n, M=precond)
    if info != 0:
        raise np.linalg.LinAlgError(f"conjugate gradients did not converge in {maxiter or 10 * n} iterations")
    return x


def solve_hpd(m, b, method="auto"):
    """Solve ``M x = b`` for Hermitian positive definite ``M``.

    Dense systems up to ``DIRECT_LIMIT`` unknowns use a Cholesky
    factorization; breakdown raises :class:`NotPositiveDefiniteError` with
    the failing pivot.  Sparse systems use a sparse direct factorization
    and ``method="cg"`` selects Jacobi-preconditioned conjugate gradients.
    Every result is checked against the residual contract.
    """
    b = np.asarray(b)
    if np.linalg.norm(b) == 0:
        return np.zeros(m.shape[0], dtype=np.result_type(m.dtype, b.dtype))
    if method == "auto":
        if sp.issparse(m):
            method = "dense" if m.shape[0] <= 200 else "sparse"
        else:
            method = "dense" if m.shape[0] <= DIRECT_LIMIT else "cg"
    if method == "dense":
        md = m.toarray() if sp.issparse(m) else np.asarray(m)
        c = _cholesky(md)
        x = sla.cho_solve((c, False), b)
        # one step of iterative refinement
        x = x + sla.cho_solve((c, False), b - md @ x)
    elif method == "sparse":
        lu = spla.splu(sp.csc_matrix(m))
        x = lu.solve(b.astype(np.result_type(m.dtype, b.dtype)))
        x = x + lu.solve(b - m @ x)
    elif method == "cg":
        x = _pcg(sp.csr_matrix(m) if not sp.issparse(m) else m, b)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = _relative_residual(m, x, b)
    if res > RESIDUAL_TOL:
        raise np.linalg.LinAlgError(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    return x


def solve_general(m, b):
    """Solve a nonsingular (not necessarily Hermitian) system, with one refinement step."""
    b = np.asarray(b)
    if sp.issparse(m):
        lu = spla.splu(sp.csc_matrix(m, dtype=np.result_type(m.dtype, b.dtype, complex)))
        x = lu.solve(b.astype(complex))
        x = x + lu.solve(b - m @ x)
    else:
        lu = sla.lu_factor(np.asarray(m))
        x = sla.lu_solve(lu, b)
        x = x + sla.lu_solve(lu, b - m @ x)
    res = _relative_residual(m, x, b)
    if res > RESIDUAL_TOL:
        raise np.linalg.LinAlgError(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    return x


def null_space_basis(m, tol=1e-10):
    """Orthonormal basis of ``{v : |M v| <= tol |M| |v|}`` as a list of vectors."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    _, s, vh = np.linalg.svd(m)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return [vh[k].conj() for k in range(rank, m.shape[1])]


def least_squares_hpd(terms):
    """Minimize ``sum_k |B_k psi - c_k|^2_{W_k}`` over ``psi``.

    ``terms`` is a sequence of ``(B, c, W)`` where ``W`` is a
    :class:`WeightedSpace`, ``("inverse", WeightedSpace)`` for the inverse
    weight, or ``None`` for the Euclidean norm.  Raises ``ValueError`` when
    the Hessian ``sum B^H W B`` is not positive definite.
    """
    hess = None
    rhs = None
    for bmat, c, w in terms:
        bmat = np.atleast_2d(np.asarray(bmat, dtype=complex))
        wb = _apply_weight(w, bmat)
        h = bmat.conj().T @ wb
        g = wb.conj().T @ np.asarray(c, dtype=complex)
        hess = h if hess is None else hess + h
        rhs = g if rhs is None else rhs + g
    hess = 0.5 * (hess + hess.conj().T)
    try:
        return solve_hpd(hess, rhs, method="dense")
    except NotPositiveDefiniteError as exc:
        raise ValueError(f"quadratic form is not strictly convex ({exc})") from exc


def quadratic_value(terms, psi):
    total = 0.0
    for bmat, c, w in terms:
        r = np.atleast_2d(np.asarray(bmat)) @ psi - c
        total += np.vdot(r, _apply_weight(w, r)).real
    return total


def _apply_weight(w, v):
    if w is None:
        return v
    if isinstance(w, tuple):
        return w[1].solve(v)
    return w.apply(v)
