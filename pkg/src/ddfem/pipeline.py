"""End-to-end wiring: mesh + conductivity -> stiffness, factors, approximation.

This is the layer the command line and the experiment scripts drive.  It
builds everything once, in a fixed order, and exposes a verification battery
whose check list mirrors the mathematical guarantees of the construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import assembly, dd_approx, factorization, quality, spectral
from .assembly import SparseSymmetricMatrix
from .errors import ConsistencyError, InfiniteSupportError
from .mesh import ConductivityField, Mesh, conductivity_from_mesh
from .quadrature import QuadratureRule, standard_rule, verify_exactness
from .reference_element import ReferenceElement, SqpMatrix, build_sqp, make_reference


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Everything derived from one (mesh, conductivity, rule) triple."""

    mesh: Mesh
    ref: ReferenceElement
    rule: QuadratureRule
    theta: ConductivityField
    sqp: SqpMatrix
    geometries: list
    element_stiffness: list          # m dense l x l blocks
    stiffness: SparseSymmetricMatrix  # reduced, n x n
    incidence: factorization.IncidenceMatrix
    factors: list                    # m ElementFactors


def build_system(mesh: Mesh, theta: ConductivityField | None = None,
                 rule: QuadratureRule | None = None) -> AssembledSystem:
    """Assemble the stiffness matrix and all factor data for a mesh."""
    if theta is None:
        theta = conductivity_from_mesh(mesh)
    if rule is None:
        rule = standard_rule(mesh.d, mesh.p)
    ref = make_reference(mesh.d, mesh.p)
    sqp = build_sqp(ref, rule)
    tables = assembly.reference_tables(ref, rule)
    geometries = [
        assembly.element_geometry(mesh, ref, rule, theta, t, tables=tables)
        for t in range(mesh.n_elements)
    ]
    element_k = [assembly.element_stiffness(g, ref, rule, tables=tables)
                 for g in geometries]
    stiffness = assembly.assemble_global(mesh, ref, rule, theta,
                                         geometries=geometries)
    incidence = factorization.build_incidence(mesh)
    factors = factorization.build_all_factors(geometries, sqp, rule)
    return AssembledSystem(
        mesh=mesh, ref=ref, rule=rule, theta=theta, sqp=sqp,
        geometries=geometries, element_stiffness=element_k,
        stiffness=stiffness, incidence=incidence, factors=factors,
    )


@dataclass(frozen=True, eq=False)
class ApproximationBundle:
    """Approximation, quality scalars and the measured chi chain for a system."""

    quality: quality.QualityReport
    dd: dd_approx.DDApproximation
    element_kbar: list               # m dense l x l star Laplacian blocks
    chi: spectral.ChiReport


def element_kbar_blocks(system: AssembledSystem,
                        dbar: dd_approx.DbarBlocks) -> list:
    """Full local approximation blocks: scalar times the star Laplacian."""
    local = factorization.local_incidence(system.ref.l)
    gram = local.T @ local
    return [float(s) * gram for s in dbar.scalars]


def approximate(system: AssembledSystem) -> ApproximationBundle:
    qual = quality.compute_quality(system.mesh, system.geometries, system.rule,
                                   system.sqp)
    dd = dd_approx.build_dd_approximation(system.incidence, system.factors,
                                          system.geometries, system.rule, qual)
    kbar_blocks = element_kbar_blocks(system, dd.dbar)
    chi = spectral.chi_report(system.element_stiffness, kbar_blocks,
                              dd.h_blocks.h, qual, dd.chi3_bound)
    return ApproximationBundle(quality=qual, dd=dd, element_kbar=kbar_blocks,
                               chi=chi)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class VerificationSummary:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _corrupted_kbar(kbar: SparseSymmetricMatrix) -> SparseSymmetricMatrix:
    # Debug hook: flip the sign of one off-diagonal entry so the diagonal
    # dominance check must fail.
    upper = {(i, j): v for i, j, v in kbar.upper_entries()}
    for (i, j), v in upper.items():
        if i != j and v != 0.0:
            upper[(i, j)] = -v
            break
    return SparseSymmetricMatrix(kbar.n, upper)


def verify_system(system: AssembledSystem, *, dense_limit: int = 600,
                  order_rtol: float = 1e-8, identity_tol: float = 1e-10,
                  corrupt_kbar: bool = False) -> VerificationSummary:
    """Run the full invariant battery on an assembled system.

    Checks, in order: quadrature exactness at the required degree, element
    factor singular value bounds, the stiffness factorization identity
    (element-wise and assembled), the middle-matrix refactorization identity,
    scaled-block singular value bounds, diagonal dominance of the
    approximation, the measured chi chain, and (when the reduced system is
    small enough) the dense global support bounds.
    """
    checks: list[CheckResult] = []

    def add(name, passed, detail):
        checks.append(CheckResult(name=name, passed=bool(passed), detail=detail))

    exact = verify_exactness(system.rule, 2 * system.mesh.p - 2)
    add("quadrature-exactness", exact.passed,
        f"degree {exact.degree}, max error {exact.max_error:.3e}")

    qual = quality.compute_quality(system.mesh, system.geometries, system.rule,
                                   system.sqp)
    sv = factorization.element_j_singular_values(system.factors)
    ab = qual.alpha * qual.beta
    upper_ok = bool(np.all(sv[:, 0] <= system.sqp.sigma_qp + 1e-10))
    lower_ok = bool(np.all(sv[:, 1] >= system.sqp.tau_qp / ab - 1e-10))
    add("element-factor-singular-values", upper_ok and lower_ok,
        f"max sigma {sv[:, 0].max():.6g} vs {system.sqp.sigma_qp:.6g}, "
        f"min margin {float((sv[:, 1] - system.sqp.tau_qp / ab).min()):.3e}")

    report = factorization.verify_first_factorization(
        system.mesh, system.factors, system.incidence,
        system.element_stiffness, system.stiffness, tolerance=identity_tol)
    add("factorization-identity", report.passed,
        f"element max {report.max_element_residual:.3e}, "
        f"assembled {report.global_residual:.3e}")

    dd = dd_approx.build_dd_approximation(system.incidence, system.factors,
                                          system.geometries, system.rule, qual)
    if corrupt_kbar:
        dd = dd_approx.DDApproximation(
            dbar=dd.dbar, kbar=_corrupted_kbar(dd.kbar),
            h_blocks=dd.h_blocks, chi3_bound=dd.chi3_bound)

    refac = dd_approx.refactorization_residuals(system.factors, dd.dbar,
                                                dd.h_blocks)
    add("refactorization-identity", bool(refac.max() <= identity_tol),
        f"max residual {refac.max():.3e}")

    jbar_upper = (qual.theta_ratio * qual.det_ratio
                  * qual.M_q / qual.m_q) ** 0.5 * system.sqp.sigma_qp
    jbar_lower = system.sqp.tau_qp / ab
    up_ok = bool(np.all(dd.h_blocks.sigma_max <= jbar_upper + 1e-10))
    low_ok = bool(np.all(dd.h_blocks.sigma_min >= jbar_lower - 1e-10))
    add("scaled-block-singular-values", up_ok and low_ok,
        f"margins {float((jbar_upper - dd.h_blocks.sigma_max).min()):.3e}, "
        f"{float((dd.h_blocks.sigma_min - jbar_lower).min()):.3e}")

    dd_ok, dd_detail = check_diagonal_dominance(dd.kbar)
    add("approximation-diagonal-dominance", dd_ok, dd_detail)

    try:
        kbar_blocks = element_kbar_blocks(system, dd.dbar)
        chi = spectral.chi_report(system.element_stiffness, kbar_blocks,
                                  dd.h_blocks.h, qual, dd.chi3_bound,
                                  order_rtol=order_rtol)
        add("chi-chain", True,
            f"max chi1 {chi.max_chi1:.6g} <= max chi2 {chi.max_chi2:.6g} "
            f"<= chi3 {dd.chi3_bound:.6g}")
    except ConsistencyError as exc:
        chi = None
        add("chi-chain", False, str(exc))

    n = system.stiffness.n
    if chi is not None and 0 < n <= dense_limit:
        try:
            glob = spectral.global_support_check(system.stiffness, dd.kbar, chi,
                                                 dd.h_blocks.kappa_global,
                                                 rtol=order_rtol)
            add("global-splitting-bound", glob.splitting_ok,
                f"sigma {glob.sigma_k_kbar:.6g} vs element max "
                f"{glob.max_element_sigma_k_kbar:.6g}")
            add("global-condition-bound", glob.condition_bound_ok,
                f"kappa {glob.kappa:.6g} vs middle-matrix {glob.kappa_h:.6g}")
        except InfiniteSupportError:
            add("global-splitting-bound", False,
                "assembled pair has mismatched nullspaces")
    return VerificationSummary(checks=checks)


def check_diagonal_dominance(kbar: SparseSymmetricMatrix,
                             off_tol: float = 1e-14,
                             row_rtol: float = 1e-12):
    """Off-diagonals nonpositive and every row diagonally dominant."""
    if kbar.n == 0:
        return True, "empty system"
    worst_off = 0.0
    row_off = np.zeros(kbar.n)
    diag = np.zeros(kbar.n)
    for i, j, v in kbar.upper_entries():
        if i == j:
            diag[i] = v
        else:
            worst_off = max(worst_off, v)
            row_off[i] += abs(v)
            row_off[j] += abs(v)
    slack = diag - row_off + row_rtol * np.abs(diag)
    ok = worst_off <= off_tol and bool(np.all(slack >= 0.0))
    return ok, (f"worst off-diagonal {worst_off:.3e}, "
                f"worst row slack {float(slack.min()):.3e}")
