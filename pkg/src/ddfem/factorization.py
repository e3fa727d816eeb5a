"""Explicit stiffness factorization into incidence, geometry and weight factors.

Every element contributes a star of l-1 arcs joining its local nodes 2..l to
local node 1.  Stacking the signed arc rows gives the incidence matrix A.
Per element, the gradient sample block is mapped through the scaled inverse
Jacobians (R), weighted by the positive diagonal of conductivity times volume
times quadrature weight (D).  The product of the middle factors, J = R S, is
well conditioned: its singular values are pinched between the gradient sample
extremes divided by the element's compression-stretch product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import ElementGeometry
from .mesh import Mesh
from .quadrature import QuadratureRule
from .reference_element import SqpMatrix


def spectral_norm(mat: np.ndarray) -> float:
    """Matrix 2-norm of a small d x d block.

    Closed form for 2 x 2; symmetric eigen-solve of M^T M for 3 x 3.
    """
    if mat.shape == (2, 2):
        t = float(np.sum(mat * mat))
        det = float(mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0])
        disc = max(t * t - 4.0 * det * det, 0.0)
        return math.sqrt(0.5 * (t + math.sqrt(disc)))
    return math.sqrt(float(np.linalg.eigvalsh(mat.T @ mat)[-1]))


@dataclass(frozen=True, eq=False)
class IncidenceMatrix:
    """Reduced node-arc incidence matrix of the element star multigraph.

    ``arcs`` holds one row per arc: (tail, head) as free-node column indices,
    with -1 marking an endpoint omitted because the node is constrained.
    Arc rows are ordered element-major, local node ascending, so rows
    t*(l-1) .. (t+1)*(l-1)-1 belong to element t.
    """

    n: int
    m: int
    l: int
    arcs: np.ndarray        # ((l-1)*m, 2) int
    matrix: sp.csr_matrix   # ((l-1)*m, n) with entries in {-1, 0, +1}

    def block(self, t: int) -> sp.csr_matrix:
        lm1 = self.l - 1
        return self.matrix[t * lm1:(t + 1) * lm1, :]


@dataclass(frozen=True, eq=False)
class ElementFactors:
    """Per-element factors of the stiffness identity.

    ``j`` is the (d*q) x (l-1) product of the scaled inverse-transpose
    Jacobian blocks with the shared gradient sample matrix; ``d_diag`` the
    positive diagonal weights.  The alpha scaling cancels between the two, so
    j^T diag(d_diag) j reproduces the element stiffness on arc differences.
    """

    t: int
    alpha: float
    beta: float
    r_blocks: np.ndarray    # (q, d, d), inverse transposes / alpha
    d_diag: np.ndarray      # (q*d,)
    j: np.ndarray           # (q*d, l-1)
    sqp: SqpMatrix

    def gram(self) -> np.ndarray:
        """j^T diag(d_diag) j, the (l-1) x (l-1) middle product."""
        return self.j.T @ (self.d_diag[:, None] * self.j)


def local_incidence(l: int) -> np.ndarray:
    """Unreduced (l-1) x l star incidence block: -1 on node 1, +1 on node mu."""
    out = np.zeros((l - 1, l))
    out[:, 0] = -1.0
    out[np.arange(l - 1), np.arange(1, l)] = 1.0
    return out


def build_incidence(mesh: Mesh) -> IncidenceMatrix:
    """Signed arc rows of every element star, Dirichlet columns omitted."""
    n = mesh.n_free
    l = mesh.nodes_per_element
    m = mesh.n_elements
    arcs = np.empty(((l - 1) * m, 2), dtype=int)
    rows, cols, vals = [], [], []
    r = 0
    for t in range(m):
        ids = mesh.elements[t]
        tail = ids[0] if ids[0] < n else -1
        for mu in range(1, l):
            head = ids[mu] if ids[mu] < n else -1
            arcs[r] = (tail, head)
            if head >= 0:
                rows.append(r)
                cols.append(head)
                vals.append(1.0)
            if tail >= 0:
                rows.append(r)
                cols.append(tail)
                vals.append(-1.0)
            r += 1
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=((l - 1) * m, n))
    return IncidenceMatrix(n=n, m=m, l=l, arcs=arcs, matrix=matrix)


def save_incidence(inc: IncidenceMatrix, target) -> None:
    """Debug dump as an edge list: ``arc <from> <to>``, 0 for an omitted endpoint."""
    close = False
    if isinstance(target, (str, Path)):
        fh = open(target, "w", encoding="utf-8")
        close = True
    else:
        fh = target
    try:
        for tail, head in inc.arcs:
            fh.write(f"arc {tail + 1 if tail >= 0 else 0} {head + 1 if head >= 0 else 0}\n")
    finally:
        if close:
            fh.close()


def build_element_factors(geom: ElementGeometry, sqp: SqpMatrix,
                          rule: QuadratureRule) -> ElementFactors:
    """Assemble the middle factors for one element.

    alpha is the worst 2-norm of the inverse Jacobians over the Gauss points
    (maximum compression), beta the worst 2-norm of the Jacobians themselves
    (maximum stretch).
    """
    q = rule.q
    d = geom.jacobians.shape[1]
    alpha = max(spectral_norm(geom.inverse_transposes[k]) for k in range(q))
    beta = max(spectral_norm(geom.jacobians[k]) for k in range(q))
    r_blocks = geom.inverse_transposes / alpha
    d_diag = np.empty(q * d)
    for k in range(q):
        w = alpha * alpha * geom.theta_vals[k] * geom.dets[k] * rule.weights[k]
        d_diag[k * d:(k + 1) * d] = w
    lm1 = sqp.entries.shape[1]
    j = np.empty((q * d, lm1))
    for k in range(q):
        j[k * d:(k + 1) * d, :] = r_blocks[k] @ sqp.entries[k * d:(k + 1) * d, :]
    return ElementFactors(t=geom.t, alpha=alpha, beta=beta, r_blocks=r_blocks,
                          d_diag=d_diag, j=j, sqp=sqp)


def build_all_factors(geometries, sqp: SqpMatrix, rule: QuadratureRule):
    return [build_element_factors(g, sqp, rule) for g in geometries]


@dataclass(frozen=True)
class FactorizationReport:
    """Residuals of the stiffness identity, element-wise and assembled."""

    element_residuals: np.ndarray
    max_element_residual: float
    global_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return (self.max_element_residual <= self.tolerance
                and self.global_residual <= self.tolerance)


def global_j_matrix(factors) -> sp.csr_matrix:
    """Block-diagonal middle factor over all elements (test/verify view only)."""
    return sp.block_diag([sp.csr_matrix(f.j) for f in factors], format="csr")


def global_d_diagonal(factors) -> np.ndarray:
    return np.concatenate([f.d_diag for f in factors])


def verify_first_factorization(mesh: Mesh, factors, incidence: IncidenceMatrix,
                               element_stiffness_list, global_stiffness=None,
                               tolerance: float = 1e-10) -> FactorizationReport:
    """Check element and assembled stiffness against the factored product.

    Element check: full local star incidence against the dense element matrix.
    Global check: sparse product A^T J^T D J A against the assembled matrix.
    """
    m = mesh.n_elements
    residuals = np.empty(m)
    for t in range(m):
        kt = element_stiffness_list[t]
        local_a = local_incidence(incidence.l)
        product = local_a.T @ factors[t].gram() @ local_a
        norm = np.linalg.norm(kt)
        residuals[t] = np.linalg.norm(product - kt) / norm if norm > 0 else 0.0

    global_residual = 0.0
    if global_stiffness is not None and incidence.n > 0:
        jmat = global_j_matrix(factors)
        dvec = global_d_diagonal(factors)
        ja = jmat @ incidence.matrix
        product = (ja.T @ sp.diags(dvec) @ ja).tocsr()
        diff = product - global_stiffness.csr
        denom = spla.norm(global_stiffness.csr)
        global_residual = float(spla.norm(diff) / denom) if denom > 0 else 0.0

    return FactorizationReport(
        element_residuals=residuals,
        max_element_residual=float(residuals.max()) if m else 0.0,
        global_residual=global_residual,
        tolerance=tolerance,
    )


def element_j_singular_values(factors) -> np.ndarray:
    """Extreme singular values of each element's middle factor, shape (m, 2)."""
    out = np.empty((len(factors), 2))
    for idx, f in enumerate(factors):
        s = np.linalg.svd(f.j, compute_uv=False)
        out[idx] = (s.max(), s.min())
    return out
