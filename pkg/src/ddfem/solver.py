"""Conjugate gradient solves with the graph Laplacian approximation as preconditioner.

The approximation is applied exactly through a sparse direct factorization
with a fill-reducing ordering, so the pair condition number is the only
variable in play.  The iteration monitors the true residual every step,
which removes any preconditioner-norm ambiguity from the convergence test.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla
from scipy.linalg import eigh_tridiagonal

from .assembly import SparseSymmetricMatrix
from .errors import SingularSystemError


def _as_csr(matrix):
    if isinstance(matrix, SparseSymmetricMatrix):
        return matrix.csr
    return sp.csr_matrix(matrix)


class KbarFactor:
    """Exact sparse factorization handle supporting repeated solves.

    Rejects singular input up front: a connected component of the matrix graph
    whose rows all sum to zero is a floating Laplacian block (no constrained
    node anywhere in the component), which has the component indicator in its
    nullspace.
    """

    def __init__(self, matrix):
        csc = _as_csr(matrix).tocsc()
        self.n = csc.shape[0]
        if self.n == 0:
            self._lu = None
            return
        row_sums = np.abs(np.asarray(csc.sum(axis=1)).reshape(-1))
        diag_scale = float(np.abs(csc.diagonal()).max()) or 1.0
        n_comp, labels = csgraph.connected_components(csc, directed=False)
        for comp in range(n_comp):
            members = np.flatnonzero(labels == comp)
            if row_sums[members].max() <= 1e-12 * diag_scale:
                raise SingularSystemError(
                    f"matrix is singular: component {comp + 1} (nodes "
                    f"{[int(i) + 1 for i in members[:8]]}"
                    f"{'...' if len(members) > 8 else ''}) has no constrained node",
                    component=members,
                )
        self._csc = csc
        # SPD-friendly settings: symmetric fill-reducing ordering, no pivoting.
        self._lu = spla.splu(csc, permc_spec="MMD_AT_PLUS_A",
                             diag_pivot_thresh=0.0,
                             options={"SymmetricMode": True})

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.n == 0:
            return np.zeros(0)
        x = self._lu.solve(rhs)
        # One refinement step keeps the solve residual at the 1e-12 contract
        # even for ill-scaled diagonals.
        x += self._lu.solve(rhs - self._csc @ x)
        return x


def factor_kbar(kbar) -> KbarFactor:
    """Factor the (SPD) approximation for repeated preconditioner applications."""
    return KbarFactor(kbar)


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    relative_residual: float
    converged: bool
    residual_history: list = field(default_factory=list)
    ritz_values: np.ndarray | None = None
    estimated_condition: float | None = None
    wall_time: float = 0.0


def _ritz_from_coefficients(alphas, betas) -> np.ndarray | None:
    # CG-Lanczos connection: tridiagonal with diag 1/a_j + b_{j-1}/a_{j-1}
    # and off-diagonal sqrt(b_{j-1})/a_{j-1}.
    s = len(alphas)
    if s == 0:
        return None
    diag = np.empty(s)
    off = np.empty(max(s - 1, 0))
    diag[0] = 1.0 / alphas[0]
    for j in range(1, s):
        diag[j] = 1.0 / alphas[j] + betas[j - 1] / alphas[j - 1]
        off[j - 1] = math.sqrt(betas[j - 1]) / alphas[j - 1]
    if s == 1:
        return diag.copy()
    return eigh_tridiagonal(diag, off, eigvals_only=True)


def pcg_solve(stiffness, rhs: np.ndarray, preconditioner: KbarFactor | None = None,
              tol: float = 1e-10, max_iter: int | None = None) -> SolveResult:
    """Preconditioned conjugate gradients with true-residual monitoring.

    Returns a non-convergence result (never raises) when ``max_iter`` runs
    out; the residual history is attached either way.
    """
    a = _as_csr(stiffness)
    n = a.shape[0]
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    if rhs.shape[0] != n:
        raise ValueError(f"rhs has length {rhs.shape[0]}, expected {n}")
    if max_iter is None:
        max_iter = max(10 * n, 100)
    start = time.perf_counter()

    rhs_norm = float(np.linalg.norm(rhs))
    if n == 0 or rhs_norm == 0.0:
        return SolveResult(x=np.zeros(n), iterations=0, relative_residual=0.0,
                           converged=True, residual_history=[],
                           wall_time=time.perf_counter() - start)

    x = np.zeros(n)
    r = rhs.copy()
    z = preconditioner.solve(r) if preconditioner is not None else r.copy()
    p = z.copy()
    rz = float(r @ z)
    history: list[float] = []
    alphas: list[float] = []
    betas: list[float] = []
    converged = False
    iterations = 0

    for _ in range(max_iter):
        ap = a @ p
        pap = float(p @ ap)
        if pap <= 0.0:
            break
        alpha = rz / pap
        alphas.append(alpha)
        x += alpha * p
        r -= alpha * ap
        iterations += 1
        true_res = float(np.linalg.norm(rhs - a @ x)) / rhs_norm
        history.append(true_res)
        if true_res <= tol:
            converged = True
            break
        z = preconditioner.solve(r) if preconditioner is not None else r.copy()
        rz_new = float(r @ z)
        beta = rz_new / rz
        betas.append(beta)
        p = z + beta * p
        rz = rz_new

    ritz = _ritz_from_coefficients(alphas, betas[:max(len(alphas) - 1, 0)])
    est = None
    if ritz is not None and ritz.min() > 0:
        est = float(ritz.max() / ritz.min())
    return SolveResult(
        x=x,
        iterations=iterations,
        relative_residual=history[-1] if history else 0.0,
        converged=converged,
        residual_history=history,
        ritz_values=ritz,
        estimated_condition=est,
        wall_time=time.perf_counter() - start,
    )


def cg_iteration_bound(kappa: float, tol: float) -> int:
    """Classic iteration bound for conjugate gradients, with a small safety pad."""
    return math.ceil(0.5 * math.sqrt(kappa) * math.log(2.0 / tol)) + 5
