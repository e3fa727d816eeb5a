"""Simplicial mesh data model, text format, structured generators, refinement.

Internal numbering is 0-based; the text format is 1-based.  The data model
keeps every node with no essential (Dirichlet) boundary condition ahead of the
constrained ones, so the reduced stiffness system is simply the leading block.
Loading and generation both normalize to that ordering and record the applied
permutation.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    ConductivityPositivityError,
    MeshFormatError,
    MeshInvariantError,
    UnsupportedConfigError,
)
from .reference_element import make_reference, node_count

FORMAT_HEADER = "ddfem-mesh v1"


@dataclass(frozen=True, eq=False)
class Mesh:
    """Nodes, element connectivity, and Dirichlet flags.

    Attributes
    ----------
    d, p : int
        Space dimension and element order.
    nodes : ndarray, shape (n', d)
        Node coordinates, non-Dirichlet nodes first.
    elements : ndarray of int, shape (m, l)
        Per element, the global node index of each local node; local slot
        mu-1 corresponds to reference node mu.
    dirichlet : ndarray of bool, shape (n',)
        Essential boundary flag per node.
    theta_elem : optional ndarray, shape (m,)
        Per-element conductivity values carried by the mesh file, if any.
    permutation : optional ndarray of int, shape (n',)
        Maps pre-normalization node index to the stored index, identity if None.
    """

    d: int
    p: int
    nodes: np.ndarray
    elements: np.ndarray
    dirichlet: np.ndarray
    theta_elem: np.ndarray | None = None
    permutation: np.ndarray | None = None

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_free(self) -> int:
        return int((~self.dirichlet).sum())

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def nodes_per_element(self) -> int:
        return self.elements.shape[1]


def validate_mesh(mesh: Mesh) -> None:
    """Raise MeshInvariantError if the mesh breaks a structural invariant."""
    n = mesh.n_nodes
    expected_l = node_count(mesh.d, mesh.p)
    if mesh.nodes_per_element != expected_l:
        raise MeshInvariantError(
            f"elements carry {mesh.nodes_per_element} nodes, expected {expected_l} "
            f"for d={mesh.d}, p={mesh.p}"
        )
    if mesh.nodes.shape[1] != mesh.d:
        raise MeshInvariantError(
            f"node coordinates have {mesh.nodes.shape[1]} components, expected {mesh.d}"
        )
    if mesh.elements.size and (mesh.elements.min() < 0 or mesh.elements.max() >= n):
        raise MeshInvariantError("element references a node index out of range")
    for t in range(mesh.n_elements):
        row = mesh.elements[t]
        if len(set(row.tolist())) != len(row):
            raise MeshInvariantError(f"element {t + 1} repeats a node")
    referenced = np.zeros(n, dtype=bool)
    referenced[mesh.elements.reshape(-1)] = True
    if not referenced.all():
        orphan = int(np.flatnonzero(~referenced)[0])
        raise MeshInvariantError(f"node {orphan + 1} is not referenced by any element")
    free = ~mesh.dirichlet
    if free.size and not np.all(free[: mesh.n_free]):
        raise MeshInvariantError("non-Dirichlet nodes must precede Dirichlet nodes")
    if mesh.theta_elem is not None and len(mesh.theta_elem) != mesh.n_elements:
        raise MeshInvariantError("per-element conductivity length does not match m")


def normalize_numbering(mesh: Mesh) -> Mesh:
    """Reorder nodes so all non-Dirichlet nodes come first (stable).

    Returns the mesh unchanged if already ordered; otherwise the permutation
    applied (old index -> new index) is recorded on the result.
    """
    free = ~mesh.dirichlet
    if np.all(free[: int(free.sum())]):
        return mesh
    order = np.concatenate([np.flatnonzero(free), np.flatnonzero(~free)])
    perm = np.empty_like(order)
    perm[order] = np.arange(len(order))
    return replace(
        mesh,
        nodes=mesh.nodes[order],
        elements=perm[mesh.elements],
        dirichlet=mesh.dirichlet[order],
        permutation=perm,
    )


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def save_mesh(mesh: Mesh, target) -> None:
    """Write the mesh in the line-oriented text format (full 17-digit precision)."""
    close = False
    if isinstance(target, (str, Path)):
        fh = open(target, "w", encoding="utf-8")
        close = True
    else:
        fh = target
    try:
        fh.write(f"{FORMAT_HEADER} d={mesh.d} p={mesh.p}\n")
        for i in range(mesh.n_nodes):
            coords = " ".join(f"{c:.17g}" for c in mesh.nodes[i])
            flag = 1 if mesh.dirichlet[i] else 0
            fh.write(f"node {i + 1} {coords} {flag}\n")
        for t in range(mesh.n_elements):
            idx = " ".join(str(v + 1) for v in mesh.elements[t])
            fh.write(f"elem {t + 1} {idx}\n")
        if mesh.theta_elem is not None:
            for t, v in enumerate(mesh.theta_elem):
                fh.write(f"theta elem {t + 1} {v:.17g}\n")
    finally:
        if close:
            fh.close()


def load_mesh(source) -> Mesh:
    """Parse a mesh from a path, text, bytes, or file-like object.

    Node numbering is normalized (Dirichlet last) after parsing; the applied
    permutation, if any, is recorded on the mesh.
    """
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    lines = text.splitlines()
    if not lines:
        raise MeshFormatError("empty mesh file", line=1)
    header = lines[0].split()
    if len(header) != 4 or " ".join(header[:2]) != FORMAT_HEADER:
        raise MeshFormatError(f"bad header {lines[0]!r}", line=1)
    try:
        d = int(header[2].removeprefix("d="))
        p = int(header[3].removeprefix("p="))
    except ValueError:
        raise MeshFormatError(f"bad header {lines[0]!r}", line=1) from None
    if d not in (2, 3) or p not in (1, 2):
        raise MeshFormatError(f"unsupported d={d} p={p}", line=1)

    l = node_count(d, p)
    node_rows: dict[int, tuple[list[float], bool]] = {}
    elem_rows: dict[int, list[int]] = {}
    theta_rows: dict[int, float] = {}
    for ln, raw in enumerate(lines[1:], start=2):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tok = stripped.split()
        kind = tok[0]
        try:
            if kind == "node":
                if len(tok) != 3 + d:
                    raise ValueError(f"node line needs {3 + d} fields, got {len(tok)}")
                idx = int(tok[1])
                coords = [float(v) for v in tok[2:2 + d]]
                flag = int(tok[2 + d])
                if flag not in (0, 1):
                    raise ValueError(f"dirichlet flag must be 0 or 1, got {flag}")
                if idx in node_rows:
                    raise ValueError(f"duplicate node index {idx}")
                node_rows[idx] = (coords, bool(flag))
            elif kind == "elem":
                if len(tok) != 2 + l:
                    raise ValueError(f"elem line needs {2 + l} fields, got {len(tok)}")
                idx = int(tok[1])
                if idx in elem_rows:
                    raise ValueError(f"duplicate element index {idx}")
                elem_rows[idx] = [int(v) for v in tok[2:]]
            elif kind == "theta":
                if len(tok) != 4 or tok[1] != "elem":
                    raise ValueError("theta line must read 'theta elem <t> <value>'")
                theta_rows[int(tok[2])] = float(tok[3])
            else:
                raise ValueError(f"unknown record {kind!r}")
        except ValueError as exc:
            raise MeshFormatError(str(exc), line=ln) from None

    n_nodes = len(node_rows)
    if n_nodes == 0:
        raise MeshFormatError("mesh has no nodes", line=1)
    if sorted(node_rows) != list(range(1, n_nodes + 1)):
        raise MeshFormatError(f"node indices must be exactly 1..{n_nodes}")
    m = len(elem_rows)
    if m == 0:
        raise MeshFormatError("mesh has no elements")
    if sorted(elem_rows) != list(range(1, m + 1)):
        raise MeshFormatError(f"element indices must be exactly 1..{m}")

    nodes = np.array([node_rows[i + 1][0] for i in range(n_nodes)], dtype=float)
    dirichlet = np.array([node_rows[i + 1][1] for i in range(n_nodes)], dtype=bool)
    elements = np.array([elem_rows[t + 1] for t in range(m)], dtype=int) - 1
    theta = None
    if theta_rows:
        if sorted(theta_rows) != list(range(1, m + 1)):
            raise MeshFormatError("theta lines must cover every element exactly once")
        theta = np.array([theta_rows[t + 1] for t in range(m)], dtype=float)

    mesh = Mesh(d=d, p=p, nodes=nodes, elements=elements, dirichlet=dirichlet,
                theta_elem=theta)
    mesh = normalize_numbering(mesh)
    validate_mesh(mesh)
    return mesh


def mesh_to_text(mesh: Mesh) -> str:
    buf = io.StringIO()
    save_mesh(mesh, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Structured generators
# ---------------------------------------------------------------------------

def gen_structured_square(k: int, p: int = 1, dirichlet: str = "boundary") -> Mesh:
    """Unit square split into 2*k^2 right triangles.

    Each grid cell is cut along its up-diagonal.  Boundary nodes are marked
    Dirichlet unless ``dirichlet="none"``.  For p=2 midpoint nodes are
    inserted on every edge.
    """
    if k < 1:
        raise UnsupportedConfigError("subdivision count k must be >= 1")
    if dirichlet not in ("boundary", "none"):
        raise UnsupportedConfigError(f"unknown dirichlet mode {dirichlet!r}")
    side = k + 1
    xs = np.linspace(0.0, 1.0, side)
    nodes = np.array([(xs[i], xs[j]) for j in range(side) for i in range(side)])

    def gid(i, j):
        return j * side + i

    elements = []
    for j in range(k):
        for i in range(k):
            a = gid(i, j)
            b = gid(i + 1, j)
            c = gid(i, j + 1)
            dd = gid(i + 1, j + 1)
            elements.append((a, b, dd))
            elements.append((a, dd, c))
    flags = np.zeros(len(nodes), dtype=bool)
    if dirichlet == "boundary":
        for j in range(side):
            for i in range(side):
                if i in (0, k) or j in (0, k):
                    flags[gid(i, j)] = True
    mesh = normalize_numbering(
        Mesh(d=2, p=1, nodes=nodes, elements=np.array(elements, dtype=int),
             dirichlet=flags)
    )
    if p == 2:
        mesh = insert_midpoints(mesh)
    elif p != 1:
        raise UnsupportedConfigError(f"unsupported order p={p}")
    validate_mesh(mesh)
    return mesh


_CUBE_PERMS = [
    (0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0),
]


def gen_structured_cube(k: int, p: int = 1, dirichlet: str = "boundary") -> Mesh:
    """Unit cube split into 6*k^3 positively oriented tetrahedra.

    Every subcube is decomposed into the six path tetrahedra sharing its main
    diagonal, so neighboring subcubes conform.  Vertex order is flipped where
    needed to keep every Jacobian determinant positive.
    """
    if k < 1:
        raise UnsupportedConfigError("subdivision count k must be >= 1")
    if dirichlet not in ("boundary", "none"):
        raise UnsupportedConfigError(f"unknown dirichlet mode {dirichlet!r}")
    side = k + 1
    xs = np.linspace(0.0, 1.0, side)
    nodes = np.array(
        [(xs[i], xs[j], xs[kk])
         for kk in range(side) for j in range(side) for i in range(side)]
    )

    def gid(i, j, kk):
        return (kk * side + j) * side + i

    elements = []
    for kk in range(k):
        for j in range(k):
            for i in range(k):
                base = np.array([i, j, kk])
                for perm in _CUBE_PERMS:
                    corners = [base.copy()]
                    cur = base.copy()
                    for axis in perm:
                        cur = cur.copy()
                        cur[axis] += 1
                        corners.append(cur)
                    ids = [gid(*c) for c in corners]
                    vecs = nodes[ids[1:]] - nodes[ids[0]]
                    if np.linalg.det(vecs) < 0:
                        ids[2], ids[3] = ids[3], ids[2]
                    elements.append(tuple(ids))
    flags = np.zeros(len(nodes), dtype=bool)
    if dirichlet == "boundary":
        for kk in range(side):
            for j in range(side):
                for i in range(side):
                    if i in (0, k) or j in (0, k) or kk in (0, k):
                        flags[gid(i, j, kk)] = True
    mesh = normalize_numbering(
        Mesh(d=3, p=1, nodes=nodes, elements=np.array(elements, dtype=int),
             dirichlet=flags)
    )
    if p == 2:
        mesh = insert_midpoints(mesh)
    elif p != 1:
        raise UnsupportedConfigError(f"unsupported order p={p}")
    validate_mesh(mesh)
    return mesh


# ---------------------------------------------------------------------------
# Midpoint refinement (order 1 -> order 2)
# ---------------------------------------------------------------------------

def _element_edges(row) -> list[tuple[int, int]]:
    ids = row.tolist()
    return [(min(a, b), max(a, b))
            for idx, a in enumerate(ids) for b in ids[idx + 1:]]


def boundary_edges(mesh: Mesh) -> set[tuple[int, int]]:
    """Edges lying on the mesh boundary.

    2D: edges belonging to exactly one triangle.  3D: edges of faces belonging
    to exactly one tetrahedron.  Only order-1 meshes are supported.
    """
    if mesh.p != 1:
        raise UnsupportedConfigError("boundary detection expects an order-1 mesh")
    if mesh.d == 2:
        counts: dict[tuple[int, int], int] = {}
        for t in range(mesh.n_elements):
            for e in _element_edges(mesh.elements[t]):
                counts[e] = counts.get(e, 0) + 1
        return {e for e, c in counts.items() if c == 1}
    face_counts: dict[tuple[int, int, int], int] = {}
    for t in range(mesh.n_elements):
        ids = sorted(mesh.elements[t].tolist())
        for skip in range(4):
            face = tuple(v for idx, v in enumerate(ids) if idx != skip)
            face_counts[face] = face_counts.get(face, 0) + 1
    edges: set[tuple[int, int]] = set()
    for face, c in face_counts.items():
        if c == 1:
            a, b, cc = face
            edges.update([(a, b), (a, cc), (b, cc)])
    return edges


def insert_midpoints(mesh: Mesh, snap=None) -> Mesh:
    """Insert one node per unique edge, turning an order-1 mesh into order-2.

    Midpoints start as arithmetic means of the edge endpoints.  If ``snap`` is
    given, midpoints of boundary edges are replaced by ``snap(midpoint)``,
    which lets curved domains pull the new nodes onto the true boundary.  A
    midpoint is Dirichlet exactly when its edge is a boundary edge with both
    endpoints Dirichlet.
    """
    if mesh.p != 1:
        raise UnsupportedConfigError("midpoint insertion expects an order-1 mesh")
    on_boundary = boundary_edges(mesh)

    edge_ids: dict[tuple[int, int], int] = {}
    new_coords: list[np.ndarray] = []
    new_flags: list[bool] = []
    for t in range(mesh.n_elements):
        for e in _element_edges(mesh.elements[t]):
            if e in edge_ids:
                continue
            a, b = e
            mid = 0.5 * (mesh.nodes[a] + mesh.nodes[b])
            if snap is not None and e in on_boundary:
                mid = np.asarray(snap(mid), dtype=float)
            edge_ids[e] = mesh.n_nodes + len(new_coords)
            new_coords.append(mid)
            new_flags.append(
                e in on_boundary and bool(mesh.dirichlet[a] and mesh.dirichlet[b])
            )

    nodes = np.vstack([mesh.nodes, np.array(new_coords)])
    dirichlet = np.concatenate([mesh.dirichlet, np.array(new_flags, dtype=bool)])

    # Reference nodes of the order-2 element, by barycentric signature:
    # a corner maps to the matching order-1 corner, an edge node to the
    # midpoint of the two corners it straddles.
    ref2 = make_reference(mesh.d, 2)
    slots = []
    for z in ref2.ref_nodes:
        bary = np.concatenate([[1.0 - z.sum()], z])
        ones = np.flatnonzero(np.isclose(bary, 1.0))
        halves = np.flatnonzero(np.isclose(bary, 0.5))
        if len(ones) == 1:
            slots.append(("corner", int(ones[0])))
        else:
            assert len(halves) == 2
            slots.append(("edge", int(halves[0]), int(halves[1])))

    elements = np.zeros((mesh.n_elements, ref2.l), dtype=int)
    for t in range(mesh.n_elements):
        corners = mesh.elements[t]
        for s, slot in enumerate(slots):
            if slot[0] == "corner":
                elements[t, s] = corners[slot[1]]
            else:
                a, b = corners[slot[1]], corners[slot[2]]
                elements[t, s] = edge_ids[(min(a, b), max(a, b))]

    out = normalize_numbering(
        Mesh(d=mesh.d, p=2, nodes=nodes, elements=elements, dirichlet=dirichlet,
             theta_elem=mesh.theta_elem)
    )
    validate_mesh(out)
    return out


def transform_mesh(mesh: Mesh, fn) -> Mesh:
    """Apply a coordinate map to every node (connectivity and flags unchanged)."""
    moved = np.array([fn(x) for x in mesh.nodes], dtype=float)
    return replace(mesh, nodes=moved)


# ---------------------------------------------------------------------------
# Conductivity
# ---------------------------------------------------------------------------

_EXPR_NAMES = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": abs, "pi": np.pi, "e": np.e, "min": min, "max": max,
}


@dataclass(frozen=True, eq=False)
class ConductivityField:
    """Scalar conductivity, evaluated at mapped Gauss points.

    One of three modes: a single constant, one constant per element, or a
    closed-form expression in the coordinates (variables x, y, z).
    """

    kind: str
    constant: float = 1.0
    per_element: np.ndarray | None = None
    expression: str | None = None
    fn: object = None

    @staticmethod
    def from_constant(value: float) -> "ConductivityField":
        return ConductivityField(kind="constant", constant=float(value))

    @staticmethod
    def from_per_element(values) -> "ConductivityField":
        vals = np.asarray(values, dtype=float)
        return ConductivityField(kind="per_element", per_element=vals)

    @staticmethod
    def from_expression(text: str) -> "ConductivityField":
        code = compile(text, "<conductivity>", "eval")
        for name in code.co_names:
            if name not in _EXPR_NAMES and name not in ("x", "y", "z"):
                raise UnsupportedConfigError(
                    f"conductivity expression uses unknown name {name!r}"
                )

        def fn(point):
            env = dict(_EXPR_NAMES)
            env["x"] = point[0]
            env["y"] = point[1]
            env["z"] = point[2] if len(point) > 2 else 0.0
            return float(eval(code, {"__builtins__": {}}, env))

        return ConductivityField(kind="expression", expression=text, fn=fn)

    @staticmethod
    def from_callable(fn) -> "ConductivityField":
        return ConductivityField(kind="expression", expression=None, fn=fn)


def eval_conductivity(field: ConductivityField, x, element: int | None = None) -> float:
    """Evaluate the conductivity at a point (``element`` selects per-element mode).

    Raises ConductivityPositivityError if the value is not strictly positive.
    """
    if field.kind == "constant":
        value = field.constant
    elif field.kind == "per_element":
        if element is None:
            raise UnsupportedConfigError(
                "per-element conductivity needs the element index"
            )
        value = float(field.per_element[element])
    else:
        value = float(field.fn(np.asarray(x, dtype=float)))
    if not value > 0.0:
        raise ConductivityPositivityError(value, where=tuple(np.asarray(x).tolist()))
    return value


def conductivity_from_mesh(mesh: Mesh, default: float = 1.0) -> ConductivityField:
    """Per-element field from the mesh's theta records, or a constant fallback."""
    if mesh.theta_elem is not None:
        return ConductivityField.from_per_element(mesh.theta_elem)
    return ConductivityField.from_constant(default)
