"""Mesh and problem quality scalars sampled at the Gauss points.

Per element: alpha (max compression, worst inverse-Jacobian 2-norm), beta
(max stretch, worst Jacobian 2-norm), the spread of the Jacobian determinant,
and the spread of the conductivity.  Mesh-level: kappa1 = worst alpha*beta,
kappa2 = worst determinant spread, theta_hat = worst conductivity spread.
All of these are rescaling invariant and at least 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factorization import spectral_norm
from .mesh import Mesh
from .quadrature import QuadratureRule
from .reference_element import SqpMatrix


@dataclass(frozen=True)
class QualityReport:
    alpha: np.ndarray        # (m,) max inverse-Jacobian 2-norm per element
    beta: np.ndarray         # (m,) max Jacobian 2-norm per element
    det_ratio: np.ndarray    # (m,) max det / min det over Gauss points
    theta_ratio: np.ndarray  # (m,) max theta / min theta over Gauss points
    kappa1: float
    kappa2: float
    theta_hat: float
    sigma_qp: float
    tau_qp: float
    m_q: float
    M_q: float

    def to_dict(self) -> dict:
        return {
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "theta_hat": self.theta_hat,
            "sigma_qp": self.sigma_qp,
            "tau_qp": self.tau_qp,
            "weight_ratio": self.M_q / self.m_q,
        }


def compute_quality(mesh: Mesh, geometries, rule: QuadratureRule,
                    sqp: SqpMatrix) -> QualityReport:
    """Reduce per-element geometry into the mesh quality report."""
    m = mesh.n_elements
    alpha = np.empty(m)
    beta = np.empty(m)
    det_ratio = np.empty(m)
    theta_ratio = np.empty(m)
    for t, geom in enumerate(geometries):
        alpha[t] = max(spectral_norm(g) for g in geom.inverse_transposes)
        beta[t] = max(spectral_norm(g) for g in geom.jacobians)
        det_ratio[t] = float(geom.dets.max() / geom.dets.min())
        theta_ratio[t] = float(geom.theta_vals.max() / geom.theta_vals.min())
    return QualityReport(
        alpha=alpha,
        beta=beta,
        det_ratio=det_ratio,
        theta_ratio=theta_ratio,
        kappa1=float((alpha * beta).max()),
        kappa2=float(det_ratio.max()),
        theta_hat=float(theta_ratio.max()),
        sigma_qp=sqp.sigma_qp,
        tau_qp=sqp.tau_qp,
        m_q=rule.m_q,
        M_q=rule.M_q,
    )
