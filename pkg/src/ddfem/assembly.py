"""Element mappings, quadrature-based stiffness assembly, and load vectors.

The element map is the degree-p interpolant of the element's node positions,
so its Jacobian at a reference point z is sum_mu node_mu (x) grad N_mu(z).
Entry (i, j) of the assembled matrix sums, over elements containing both
nodes and over Gauss points,

    [J^-T grad N_mu] . theta [J^-T grad N_nu] det(J) omega_k,

with J the Jacobian at the Gauss point.  Element matrices are built dense
(at most 10 x 10) and scattered; the scatter keeps one value per unordered
index pair so the result is symmetric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ElementOrientationError, MeshFormatError, UnsupportedConfigError
from .mesh import ConductivityField, Mesh, eval_conductivity
from .quadrature import QuadratureRule
from .reference_element import ReferenceElement, shape_gradients, shape_values

# An element counts as degenerate when |det| falls below this multiple of the
# Jacobian's own scale to the d-th power.
DEGENERACY_RTOL = 1e-14

MATRIX_HEADER = "ddfem-matrix v1"


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Per-Gauss-point geometry of one element map."""

    t: int
    jacobians: np.ndarray            # (q, d, d)
    inverse_transposes: np.ndarray   # (q, d, d)
    dets: np.ndarray                 # (q,)
    theta_vals: np.ndarray           # (q,)


class SparseSymmetricMatrix:
    """Symmetric sparse matrix storing one value per unordered index pair."""

    def __init__(self, n: int, upper: dict[tuple[int, int], float]):
        self.n = n
        self._upper = dict(upper)
        rows, cols, vals = [], [], []
        for (i, j), v in upper.items():
            rows.append(i)
            cols.append(j)
            vals.append(v)
            if i != j:
                rows.append(j)
                cols.append(i)
                vals.append(v)
        self.csr = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csr @ x

    def __matmul__(self, x):
        return self.csr @ x

    def upper_entries(self):
        """Stored (i, j, value) triplets with i <= j, sorted."""
        for (i, j) in sorted(self._upper):
            yield i, j, self._upper[(i, j)]

    def save_text(self, target) -> None:
        close = False
        if isinstance(target, (str, Path)):
            fh = open(target, "w", encoding="utf-8")
            close = True
        else:
            fh = target
        try:
            fh.write(f"{MATRIX_HEADER} n={self.n} symmetric=upper\n")
            for i, j, v in self.upper_entries():
                fh.write(f"entry {i + 1} {j + 1} {v:.17g}\n")
        finally:
            if close:
                fh.close()

    @classmethod
    def load_text(cls, source) -> "SparseSymmetricMatrix":
        if isinstance(source, (str, Path)) and "\n" not in str(source):
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = source if isinstance(source, str) else source.read()
        lines = text.splitlines()
        if not lines:
            raise MeshFormatError("empty matrix file", line=1)
        head = lines[0].split()
        if (len(head) != 4 or " ".join(head[:2]) != MATRIX_HEADER
                or not head[2].startswith("n=") or head[3] != "symmetric=upper"):
            raise MeshFormatError(f"bad header {lines[0]!r}", line=1)
        try:
            n = int(head[2].removeprefix("n="))
        except ValueError:
            raise MeshFormatError(f"bad header {lines[0]!r}", line=1) from None
        upper: dict[tuple[int, int], float] = {}
        for ln, raw in enumerate(lines[1:], start=2):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tok = stripped.split()
            if len(tok) != 4 or tok[0] != "entry":
                raise MeshFormatError(f"bad entry line {raw!r}", line=ln)
            i, j, v = int(tok[1]) - 1, int(tok[2]) - 1, float(tok[3])
            if not (0 <= i <= j < n):
                raise MeshFormatError(f"entry indices out of range in {raw!r}", line=ln)
            upper[(i, j)] = v
        return cls(n, upper)


def _det_small(m: np.ndarray) -> float:
    if m.shape == (2, 2):
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    return float(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def _inverse_transpose_small(m: np.ndarray, det: float) -> np.ndarray:
    if m.shape == (2, 2):
        return np.array([[m[1, 1], -m[1, 0]], [-m[0, 1], m[0, 0]]]) / det
    cof = np.empty((3, 3))
    cof[0, 0] = m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    cof[0, 1] = -(m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
    cof[0, 2] = m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]
    cof[1, 0] = -(m[0, 1] * m[2, 2] - m[0, 2] * m[2, 1])
    cof[1, 1] = m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
    cof[1, 2] = -(m[0, 0] * m[2, 1] - m[0, 1] * m[2, 0])
    cof[2, 0] = m[0, 1] * m[1, 2] - m[0, 2] * m[1, 1]
    cof[2, 1] = -(m[0, 0] * m[1, 2] - m[0, 2] * m[1, 0])
    cof[2, 2] = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    # inverse = cof^T / det, so inverse-transpose = cof / det
    return cof / det


def reference_tables(ref: ReferenceElement, rule: QuadratureRule):
    """Shape values (q, l) and gradients (q, l, d) at the Gauss points."""
    vals = np.array([shape_values(ref, r) for r in rule.points])
    grads = np.array([shape_gradients(ref, r) for r in rule.points])
    return vals, grads


def element_geometry(mesh: Mesh, ref: ReferenceElement, rule: QuadratureRule,
                     theta: ConductivityField, t: int,
                     tables=None) -> ElementGeometry:
    """Jacobians, inverse transposes, determinants and conductivities for element t.

    Raises ElementOrientationError when a determinant is nonpositive (or
    vanishing relative to the Jacobian scale), and lets the conductivity
    field's own positivity error propagate.
    """
    vals, grads = tables if tables is not None else reference_tables(ref, rule)
    coords = mesh.nodes[mesh.elements[t]]          # (l, d)
    q, d = rule.q, mesh.d
    jac = np.empty((q, d, d))
    inv_t = np.empty((q, d, d))
    dets = np.empty(q)
    theta_vals = np.empty(q)
    for k in range(q):
        jk = coords.T @ grads[k]                   # (d, d)
        det = _det_small(jk)
        scale = float(np.abs(jk).max())
        if det <= DEGENERACY_RTOL * scale ** d:
            raise ElementOrientationError(t, k, det)
        jac[k] = jk
        dets[k] = det
        inv_t[k] = _inverse_transpose_small(jk, det)
        point = coords.T @ vals[k]
        theta_vals[k] = eval_conductivity(theta, point, element=t)
    return ElementGeometry(t=t, jacobians=jac, inverse_transposes=inv_t,
                           dets=dets, theta_vals=theta_vals)


def element_stiffness(geom: ElementGeometry, ref: ReferenceElement,
                      rule: QuadratureRule, tables=None) -> np.ndarray:
    """Dense l x l element stiffness matrix (no Dirichlet reduction)."""
    _, grads = tables if tables is not None else reference_tables(ref, rule)
    l = ref.l
    out = np.zeros((l, l))
    for k in range(rule.q):
        phys = geom.inverse_transposes[k] @ grads[k].T       # (d, l)
        w = rule.weights[k] * geom.theta_vals[k] * geom.dets[k]
        out += w * (phys.T @ phys)
    return out


def all_element_geometries(mesh: Mesh, ref: ReferenceElement, rule: QuadratureRule,
                           theta: ConductivityField) -> list[ElementGeometry]:
    tables = reference_tables(ref, rule)
    return [element_geometry(mesh, ref, rule, theta, t, tables=tables)
            for t in range(mesh.n_elements)]


def assemble_global(mesh: Mesh, ref: ReferenceElement, rule: QuadratureRule,
                    theta: ConductivityField,
                    geometries: list[ElementGeometry] | None = None,
                    ) -> SparseSymmetricMatrix:
    """Assemble the reduced stiffness matrix over the non-Dirichlet nodes."""
    tables = reference_tables(ref, rule)
    n = mesh.n_free
    upper: dict[tuple[int, int], float] = {}
    for t in range(mesh.n_elements):
        geom = geometries[t] if geometries is not None else element_geometry(
            mesh, ref, rule, theta, t, tables=tables)
        kt = element_stiffness(geom, ref, rule, tables=tables)
        ids = mesh.elements[t]
        for a in range(ref.l):
            i = ids[a]
            if i >= n:
                continue
            for b in range(a, ref.l):
                j = ids[b]
                if j >= n:
                    continue
                key = (i, j) if i <= j else (j, i)
                upper[key] = upper.get(key, 0.0) + kt[a, b]
    return SparseSymmetricMatrix(n, upper)


def assemble_load(mesh: Mesh, ref: ReferenceElement, rule: QuadratureRule,
                  theta: ConductivityField, source,
                  dirichlet_values=None, neumann=0.0,
                  geometries: list[ElementGeometry] | None = None) -> np.ndarray:
    """Load vector for the reduced system.

    ``source`` is a constant or a callable of the physical point.  Dirichlet
    data may be a constant, a callable, or an array over the constrained
    nodes; its coupling through the stiffness entries is subtracted here.
    Only the natural (zero flux) boundary condition is supported on the
    remaining boundary.
    """
    if neumann != 0.0:
        raise UnsupportedConfigError("only zero Neumann data is supported")
    vals, grads = reference_tables(ref, rule)
    n = mesh.n_free
    n_con = mesh.n_nodes - n

    if dirichlet_values is None:
        constrained = np.zeros(n_con)
    elif callable(dirichlet_values):
        constrained = np.array([dirichlet_values(x) for x in mesh.nodes[n:]])
    elif np.isscalar(dirichlet_values):
        constrained = np.full(n_con, float(dirichlet_values))
    else:
        constrained = np.asarray(dirichlet_values, dtype=float)
        if constrained.shape != (n_con,):
            raise UnsupportedConfigError(
                f"dirichlet values must have length {n_con}, got {constrained.shape}"
            )

    src = source if callable(source) else (lambda _x, _v=float(source): _v)
    load = np.zeros(n)
    for t in range(mesh.n_elements):
        geom = geometries[t] if geometries is not None else element_geometry(
            mesh, ref, rule, theta, t, tables=(vals, grads))
        coords = mesh.nodes[mesh.elements[t]]
        ids = mesh.elements[t]
        for k in range(rule.q):
            point = coords.T @ vals[k]
            w = rule.weights[k] * geom.dets[k] * src(point)
            for a in range(ref.l):
                if ids[a] < n:
                    load[ids[a]] += w * vals[k][a]
        if n_con and np.any(constrained):
            kt = element_stiffness(geom, ref, rule, tables=(vals, grads))
            for a in range(ref.l):
                if ids[a] >= n:
                    continue
                for b in range(ref.l):
                    if ids[b] >= n:
                        load[ids[a]] -= kt[a, b] * constrained[ids[b] - n]
    return load
