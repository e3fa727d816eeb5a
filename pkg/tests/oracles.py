"""Independent reference computations for the test suite.

Nothing here shares code with the package: shape functions come from the
textbook barycentric formulas, pencil eigenvalues from an explicit
inverse-square-root construction, and exact element integrals from the
factorial formula applied to hand-expanded integrands.
"""

import numpy as np


def barycentric(d, z):
    z = np.asarray(z, dtype=float)
    return np.concatenate([[1.0 - z.sum()], z])


def closed_form_shapes(d, p, z):
    """Classic nodal polynomial values in the package's node order."""
    b = barycentric(d, z)
    if p == 1:
        return b
    if d == 2:
        b0, b1, b2 = b
        return np.array([
            b0 * (2 * b0 - 1),       # (0, 0)
            4 * b0 * b1,             # (1/2, 0)
            b1 * (2 * b1 - 1),       # (1, 0)
            4 * b0 * b2,             # (0, 1/2)
            4 * b1 * b2,             # (1/2, 1/2)
            b2 * (2 * b2 - 1),       # (0, 1)
        ])
    b0, b1, b2, b3 = b
    return np.array([
        b0 * (2 * b0 - 1),           # (0, 0, 0)
        4 * b0 * b1,                 # (1/2, 0, 0)
        b1 * (2 * b1 - 1),           # (1, 0, 0)
        4 * b0 * b2,                 # (0, 1/2, 0)
        4 * b1 * b2,                 # (1/2, 1/2, 0)
        b2 * (2 * b2 - 1),           # (0, 1, 0)
        4 * b0 * b3,                 # (0, 0, 1/2)
        4 * b1 * b3,                 # (1/2, 0, 1/2)
        4 * b2 * b3,                 # (0, 1/2, 1/2)
        b3 * (2 * b3 - 1),           # (0, 0, 1)
    ])


def restricted_pencil_eigenvalues(a, b, null_rtol=1e-10):
    """Brute-force eigenvalues of the pair restricted to the range of b.

    Builds an orthonormal range basis Q of b, then the symmetric eigenvalues
    of (Q^T b Q)^(-1/2) Q^T a Q (Q^T b Q)^(-1/2).
    """
    w, v = np.linalg.eigh(np.asarray(b, dtype=float))
    keep = w > null_rtol * w[-1]
    q = v[:, keep]
    b_r = q.T @ b @ q
    wb, vb = np.linalg.eigh(b_r)
    inv_sqrt = vb @ np.diag(1.0 / np.sqrt(wb)) @ vb.T
    mid = inv_sqrt @ (q.T @ a @ q) @ inv_sqrt
    return np.linalg.eigvalsh(mid)


def exact_p1_element_stiffness(coords, theta=1.0):
    """Exactly integrated order-1 element matrix from constant gradients.

    For an affine simplex the physical gradients are rows of the inverse
    Jacobian applied to the reference gradients, and the integrand is
    constant, so the matrix is theta * measure * G G^T.
    """
    coords = np.asarray(coords, dtype=float)
    d = coords.shape[1]
    jac = (coords[1:] - coords[0]).T
    det = np.linalg.det(jac)
    measure = det / (2.0 if d == 2 else 6.0)
    ref_grads = np.vstack([-np.ones((1, d)), np.eye(d)])     # (d+1, d)
    phys = ref_grads @ np.linalg.inv(jac)
    return theta * measure * (phys @ phys.T)


def random_psd_pair(rng, n, rank):
    """SPSD (a, b) with identical nullspaces, via a shared column space."""
    v = rng.standard_normal((n, rank))
    h_half = rng.standard_normal((rank, rank))
    h = h_half @ h_half.T + 0.1 * np.eye(rank)
    a = v @ h @ v.T
    b = v @ v.T
    return 0.5 * (a + a.T), 0.5 * (b + b.T)
