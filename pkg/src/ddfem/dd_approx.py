"""Diagonally dominant approximation of the stiffness matrix.

Replacing each element's middle product j^T diag(d) j by the scalar block
(min weight) * (min conductivity) * (min determinant) * alpha^2 * I turns the
assembled matrix into a weighted graph Laplacian on the element star arcs,
restricted by Dirichlet deletion.  The leftover middle matrix H measures the
loss: its condition number bounds the generalized condition number of the
pair, and is itself bounded by the purely mesh/rule-dependent quantity
chi3 = theta_hat * kappa1^2 * kappa2 * (M_q sigma^2) / (m_q tau^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import SparseSymmetricMatrix
from .factorization import ElementFactors, IncidenceMatrix
from .quadrature import QuadratureRule
from .quality import QualityReport


@dataclass(frozen=True)
class DbarBlocks:
    """Per-element scalar of the diagonal replacement block (times identity)."""

    scalars: np.ndarray  # (m,) m_q * f_t * g_t * alpha_t^2
    f: np.ndarray        # (m,) min conductivity over Gauss points
    g: np.ndarray        # (m,) min Jacobian determinant over Gauss points


@dataclass(frozen=True)
class HBlocks:
    """Per-element normalized middle matrices and their spectral extremes."""

    h: list                   # m dense (l-1) x (l-1) blocks
    sigma_max: np.ndarray     # (m,) largest singular value of each scaled block
    sigma_min: np.ndarray     # (m,)
    kappa_per_element: np.ndarray  # (m,) condition number of each block
    kappa_global: float       # condition number of the block-diagonal whole

    @property
    def max_kappa_element(self) -> float:
        return float(self.kappa_per_element.max())


@dataclass(frozen=True)
class DDApproximation:
    dbar: DbarBlocks
    kbar: SparseSymmetricMatrix
    h_blocks: HBlocks
    chi3_bound: float


def build_dbar(factors: list[ElementFactors], geometries,
               rule: QuadratureRule) -> DbarBlocks:
    """Scalar diagonal blocks: smallest weight times per-element minima."""
    m = len(factors)
    f = np.empty(m)
    g = np.empty(m)
    scalars = np.empty(m)
    for t in range(m):
        f[t] = float(geometries[t].theta_vals.min())
        g[t] = float(geometries[t].dets.min())
        scalars[t] = rule.m_q * f[t] * g[t] * factors[t].alpha ** 2
    return DbarBlocks(scalars=scalars, f=f, g=g)


def build_kbar(incidence: IncidenceMatrix, dbar: DbarBlocks) -> SparseSymmetricMatrix:
    """Weighted graph Laplacian on the star arcs, Dirichlet rows deleted.

    Scattered arc by arc with one stored value per unordered pair, so the
    result is exactly symmetric with nonpositive off-diagonal entries.
    """
    n = incidence.n
    lm1 = incidence.l - 1
    upper: dict[tuple[int, int], float] = {}
    for r, (tail, head) in enumerate(incidence.arcs):
        s = float(dbar.scalars[r // lm1])
        if tail >= 0:
            upper[(tail, tail)] = upper.get((tail, tail), 0.0) + s
        if head >= 0:
            upper[(head, head)] = upper.get((head, head), 0.0) + s
        if tail >= 0 and head >= 0:
            key = (tail, head) if tail <= head else (head, tail)
            upper[key] = upper.get(key, 0.0) - s
    return SparseSymmetricMatrix(n, upper)


def build_h_blocks(factors: list[ElementFactors], dbar: DbarBlocks) -> HBlocks:
    """Normalized middle blocks: scaled j with the diagonal replacement pulled out.

    The scaled block for element t is diag(d)^(1/2) j / sqrt(scalar_t); its
    Gram matrix is the element's H block.  Because the whole H is block
    diagonal, the global condition number is the worst squared singular value
    over all blocks divided by the best.
    """
    m = len(factors)
    h = []
    smax = np.empty(m)
    smin = np.empty(m)
    for t, fac in enumerate(factors):
        scaled = (np.sqrt(fac.d_diag)[:, None] * fac.j) / np.sqrt(dbar.scalars[t])
        h.append(scaled.T @ scaled)
        s = np.linalg.svd(scaled, compute_uv=False)
        smax[t] = s.max()
        smin[t] = s.min()
    kappa_elem = (smax / smin) ** 2
    kappa_global = float((smax.max() / smin.min()) ** 2)
    return HBlocks(h=h, sigma_max=smax, sigma_min=smin,
                   kappa_per_element=kappa_elem, kappa_global=kappa_global)


def chi3_bound(quality: QualityReport) -> float:
    """Analytic mesh-level bound on the condition number of the middle matrix."""
    return (quality.theta_hat * quality.kappa1 ** 2 * quality.kappa2
            * quality.M_q * quality.sigma_qp ** 2
            / (quality.m_q * quality.tau_qp ** 2))


def chi3_element_bounds(quality: QualityReport) -> np.ndarray:
    """Element-local version of the analytic bound (local spreads and shape)."""
    return (quality.theta_ratio * (quality.alpha * quality.beta) ** 2
            * quality.det_ratio * quality.M_q * quality.sigma_qp ** 2
            / (quality.m_q * quality.tau_qp ** 2))


def refactorization_residuals(factors: list[ElementFactors],
                              dbar: DbarBlocks, h_blocks: HBlocks) -> np.ndarray:
    """Relative error of middle-product = scalar * H per element (identity check)."""
    m = len(factors)
    out = np.empty(m)
    for t in range(m):
        gram = factors[t].gram()
        rebuilt = dbar.scalars[t] * h_blocks.h[t]
        norm = np.linalg.norm(gram)
        out[t] = np.linalg.norm(rebuilt - gram) / norm if norm > 0 else 0.0
    return out


def build_dd_approximation(incidence: IncidenceMatrix, factors, geometries,
                           rule: QuadratureRule,
                           quality: QualityReport) -> DDApproximation:
    dbar = build_dbar(factors, geometries, rule)
    return DDApproximation(
        dbar=dbar,
        kbar=build_kbar(incidence, dbar),
        h_blocks=build_h_blocks(factors, dbar),
        chi3_bound=chi3_bound(quality),
    )
