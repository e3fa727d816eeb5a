"""Support numbers and condition numbers for symmetric positive semidefinite pairs.

The support number of A with respect to B is the supremum of x^T A x / x^T B x
over x outside the nullspace of B.  It is finite exactly when the nullspace of
B sits inside the nullspace of A, and then equals the largest eigenvalue of
the pencil restricted to the range of B.  The product of the two directed
support numbers is the condition number governing preconditioned conjugate
gradient behavior when one matrix preconditions the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dd_approx import chi3_element_bounds
from .errors import ConsistencyError, InfiniteSupportError, SizeLimitError

# Eigenvalues below this multiple of the largest count as nullspace; both the
# element matrices and their approximations carry exact constant nullspaces
# that arrive contaminated by roundoff at the 1e-16 scale.
NULLSPACE_RTOL = 1e-10

# Dense verification guardrail.
DEFAULT_DENSE_LIMIT = 2000


@dataclass(frozen=True)
class PencilSpectrum:
    """Eigenvalues of an SPSD pair restricted off the shared nullspace."""

    eigenvalues: np.ndarray
    support_ab: float
    support_ba: float
    kappa: float


def _range_split(mat: np.ndarray, rtol: float):
    """Orthonormal range and nullspace bases of a symmetric PSD matrix."""
    w, v = np.linalg.eigh(mat)
    top = float(w[-1]) if w.size else 0.0
    if top <= 0.0:
        return np.zeros((mat.shape[0], 0)), v
    keep = w > rtol * top
    return v[:, keep], v[:, ~keep]


def _check_containment(a: np.ndarray, null_b: np.ndarray, rtol: float) -> None:
    # Every nullspace direction of B must be annihilated by A.
    if null_b.shape[1] == 0:
        return
    scale = float(np.abs(a).max())
    if scale == 0.0:
        return
    for idx in range(null_b.shape[1]):
        v = null_b[:, idx]
        if np.linalg.norm(a @ v) > rtol * scale * max(np.linalg.norm(v), 1.0):
            raise InfiniteSupportError(v.copy())


def support_number(a: np.ndarray, b: np.ndarray, *,
                   null_rtol: float = NULLSPACE_RTOL) -> float:
    """Largest generalized Rayleigh quotient of a over b outside b's nullspace.

    Raises InfiniteSupportError (carrying the offending direction) when the
    quotient is unbounded.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q, null_b = _range_split(b, null_rtol)
    if q.shape[1] == 0:
        raise InfiniteSupportError(null_b[:, 0] if null_b.size else None)
    _check_containment(a, null_b, null_rtol)
    a_r = q.T @ a @ q
    b_r = q.T @ b @ q
    eig = scipy.linalg.eigh(a_r, b_r, eigvals_only=True)
    return float(eig[-1])


def condition_pair(a: np.ndarray, b: np.ndarray, *,
                   null_rtol: float = NULLSPACE_RTOL) -> PencilSpectrum:
    """Restricted pencil eigenvalues plus both directed support numbers.

    Requires the two nullspaces to agree (checked in both directions); the
    condition number is then the spread of the restricted eigenvalues.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q, null_b = _range_split(b, null_rtol)
    if q.shape[1] == 0:
        raise InfiniteSupportError(null_b[:, 0] if null_b.size else None)
    _check_containment(a, null_b, null_rtol)
    _, null_a = _range_split(a, null_rtol)
    _check_containment(b, null_a, null_rtol)
    a_r = q.T @ a @ q
    b_r = q.T @ b @ q
    eig = scipy.linalg.eigh(a_r, b_r, eigvals_only=True)
    lam_max = float(eig[-1])
    lam_min = float(eig[0])
    if lam_min <= 0.0:
        raise InfiniteSupportError(None)
    return PencilSpectrum(
        eigenvalues=np.asarray(eig, dtype=float),
        support_ab=lam_max,
        support_ba=1.0 / lam_min,
        kappa=lam_max / lam_min,
    )


@dataclass(frozen=True)
class ChiReport:
    """Element-level approximation quality and the analytic bound chain."""

    chi1: np.ndarray            # (m,) measured pair condition numbers
    chi2: np.ndarray            # (m,) middle-block condition numbers
    chi3_element: np.ndarray    # (m,) element-local analytic bounds
    chi3: float                 # mesh-level analytic bound
    support_k_kbar: np.ndarray  # (m,) directed supports of stiffness over approx
    support_kbar_k: np.ndarray  # (m,)
    max_chi1: float
    max_chi2: float

    def rows(self):
        for t in range(len(self.chi1)):
            yield t, self.chi1[t], self.chi2[t], self.chi3_element[t]


def chi_report(element_stiffness_list, element_kbar_list, h_blocks_list,
               quality, chi3_value: float, *, order_rtol: float = 1e-8,
               null_rtol: float = NULLSPACE_RTOL) -> ChiReport:
    """Per-element chain: measured pair condition, middle condition, bound.

    The chain chi1 <= chi2 <= chi3 holds in exact arithmetic; a violation
    beyond ``order_rtol`` relative slack raises ConsistencyError since it
    can only come from a broken construction.
    """
    m = len(element_stiffness_list)
    chi1 = np.empty(m)
    chi2 = np.empty(m)
    sup_ab = np.empty(m)
    sup_ba = np.empty(m)
    for t in range(m):
        pencil = condition_pair(element_stiffness_list[t], element_kbar_list[t],
                                null_rtol=null_rtol)
        chi1[t] = pencil.kappa
        sup_ab[t] = pencil.support_ab
        sup_ba[t] = pencil.support_ba
        hw = np.linalg.eigvalsh(h_blocks_list[t])
        chi2[t] = float(hw[-1] / hw[0])
    chi3_elem = chi3_element_bounds(quality)

    for t in range(m):
        if chi1[t] > chi2[t] * (1.0 + order_rtol):
            raise ConsistencyError(
                f"element {t + 1}: measured pair condition {chi1[t]:.6g} exceeds "
                f"middle-block condition {chi2[t]:.6g}"
            )
        if chi2[t] > chi3_elem[t] * (1.0 + order_rtol):
            raise ConsistencyError(
                f"element {t + 1}: middle-block condition {chi2[t]:.6g} exceeds "
                f"its analytic bound {chi3_elem[t]:.6g}"
            )
        if chi3_elem[t] > chi3_value * (1.0 + order_rtol):
            raise ConsistencyError(
                f"element {t + 1}: local analytic bound {chi3_elem[t]:.6g} exceeds "
                f"the mesh-level bound {chi3_value:.6g}"
            )
    return ChiReport(
        chi1=chi1, chi2=chi2, chi3_element=chi3_elem, chi3=chi3_value,
        support_k_kbar=sup_ab, support_kbar_k=sup_ba,
        max_chi1=float(chi1.max()), max_chi2=float(chi2.max()),
    )


@dataclass(frozen=True)
class GlobalSupportReport:
    """Dense verification of the assembled pair against element-wise bounds."""

    sigma_k_kbar: float
    sigma_kbar_k: float
    kappa: float
    max_element_sigma_k_kbar: float
    max_element_sigma_kbar_k: float
    kappa_h: float
    splitting_ok: bool
    condition_bound_ok: bool

    @property
    def passed(self) -> bool:
        return self.splitting_ok and self.condition_bound_ok


def global_support_check(stiffness, kbar, chi: ChiReport, kappa_h: float, *,
                         rtol: float = 1e-8,
                         size_limit: int = DEFAULT_DENSE_LIMIT,
                         null_rtol: float = NULLSPACE_RTOL) -> GlobalSupportReport:
    """Check that assembled support numbers obey the element-wise maxima.

    Verifies the splitting bound (each directed global support is at most the
    worst element value) and the middle-matrix route (the global pair condition
    is at most the condition of the block-diagonal middle matrix).  Dense
    eigen-solves only, guarded by ``size_limit``.
    """
    n = stiffness.n
    if n > size_limit:
        raise SizeLimitError(
            f"dense support verification limited to n <= {size_limit}, got n = {n}"
        )
    pencil = condition_pair(stiffness.toarray(), kbar.toarray(), null_rtol=null_rtol)
    max_ab = float(chi.support_k_kbar.max())
    max_ba = float(chi.support_kbar_k.max())
    splitting_ok = (pencil.support_ab <= max_ab * (1.0 + rtol)
                    and pencil.support_ba <= max_ba * (1.0 + rtol))
    condition_ok = pencil.kappa <= kappa_h * (1.0 + rtol)
    return GlobalSupportReport(
        sigma_k_kbar=pencil.support_ab,
        sigma_kbar_k=pencil.support_ba,
        kappa=pencil.kappa,
        max_element_sigma_k_kbar=max_ab,
        max_element_sigma_kbar_k=max_ba,
        kappa_h=kappa_h,
        splitting_ok=splitting_ok,
        condition_bound_ok=condition_ok,
    )
