"""P1 discretization of the zero-trace Orlicz-Sobolev space on boxes.

Interval and rectangle meshes with piecewise-linear fields; gradients are
elementwise constant (exact for P1), scalar integrands of the gradient use
the element midpoint rule (exact), and zero-order integrands use lumped
vertex quadrature. Lumping makes the reaction term separable per DOF, which
keeps the fibering scalar problems cheap and the nodal-splitting identity
exact on the reaction side.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BracketError, DomainError, MeshError


class Mesh:
    """Conforming simplex mesh on an interval or an axis-aligned rectangle.

    Immutable after construction. Lazily caches the linear stiffness
    factorization (the Riesz lift used for residual dual norms) and the
    vertex adjacency.
    """

    def __init__(self, kind, descriptor, vertices, elements, boundary_dofs):
        self.kind = kind
        self.descriptor = dict(descriptor)
        self.vertices = vertices
        self.elements = elements
        self.dim = vertices.shape[1]
        self.n_vertices = vertices.shape[0]
        self.n_elements = elements.shape[0]
        self.boundary_dofs = np.asarray(sorted(boundary_dofs), dtype=np.int64)
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_dofs] = False
        self.interior_dofs = np.nonzero(mask)[0]
        self._geometry()
        self._stiffness_solve = None
        self._stiffness_interior = None
        self._adjacency = None

    def _geometry(self):
        coords = self.vertices[self.elements]  # (nel, dim+1, dim)
        if self.dim == 1:
            length = coords[:, 1, 0] - coords[:, 0, 0]
            if np.any(length <= 0):
                raise MeshError("degenerate 1-d element")
            self.measures = length
            grads = np.empty((self.n_elements, 2, 1))
            grads[:, 0, 0] = -1.0 / length
            grads[:, 1, 0] = 1.0 / length
            self.basis_grads = grads
        else:
            d1 = coords[:, 1] - coords[:, 0]
            d2 = coords[:, 2] - coords[:, 0]
            det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
            if np.any(np.abs(det) <= 0):
                raise MeshError("degenerate triangle")
            self.measures = 0.5 * np.abs(det)
            # grad lambda_a = rot90(edge opposite a) / det, standard P1 formula
            grads = np.empty((self.n_elements, 3, 2))
            for a in range(3):
                pb = coords[:, (a + 1) % 3]
                pc = coords[:, (a + 2) % 3]
                grads[:, a, 0] = (pb[:, 1] - pc[:, 1]) / det
                grads[:, a, 1] = (pc[:, 0] - pb[:, 0]) / det
            self.basis_grads = grads
        lumped = np.zeros(self.n_vertices)
        share = self.measures / (self.dim + 1.0)
        for a in range(self.dim + 1):
            np.add.at(lumped, self.elements[:, a], share)
        self.lumped_weights = lumped

    # -- cached linear algebra ------------------------------------------

    def stiffness_interior(self):
        """Linear Laplacian stiffness restricted to interior DOFs (CSC)."""
        if self._stiffness_interior is None:
            nloc = self.dim + 1
            local = np.einsum("ead,ebd->eab", self.basis_grads, self.basis_grads)
            local *= self.measures[:, None, None]
            rows = np.repeat(self.elements, nloc, axis=1).ravel()
            cols = np.tile(self.elements, (1, nloc)).ravel()
            K = sp.coo_matrix((local.ravel(), (rows, cols)),
                              shape=(self.n_vertices, self.n_vertices)).tocsr()
            self._stiffness_interior = K[self.interior_dofs][:, self.interior_dofs].tocsc()
        return self._stiffness_interior

    def stiffness_solve(self, rhs_interior):
        """Solve K d = rhs on the interior DOFs (factorization cached)."""
        if self._stiffness_solve is None:
            self._stiffness_solve = spla.factorized(self.stiffness_interior())
        return self._stiffness_solve(rhs_interior)

    def adjacency(self):
        """Unique vertex-vertex edges of the mesh, shape (n_edges, 2)."""
        if self._adjacency is None:
            pairs = []
            nloc = self.dim + 1
            for a in range(nloc):
                for b in range(a + 1, nloc):
                    pairs.append(self.elements[:, [a, b]])
            edges = np.sort(np.concatenate(pairs, axis=0), axis=1)
            self._adjacency = np.unique(edges, axis=0)
        return self._adjacency

    def refine(self):
        """Uniformly refined mesh of the same extent (each n doubled)."""
        d = self.descriptor
        if self.kind == "interval":
            return interval_mesh(d["a"], d["b"], 2 * d["n"])
        return rectangle_mesh(d["ax"], d["bx"], d["ay"], d["by"],
                              2 * d["nx"], 2 * d["ny"])

    def __repr__(self):
        return (f"Mesh({self.kind}, {self.n_vertices} vertices, "
                f"{self.n_elements} elements)")


def interval_mesh(a, b, n):
    if not b > a:
        raise MeshError(f"need a < b, got a={a}, b={b}")
    if n < 2:
        raise MeshError("need n >= 2 subintervals")
    x = np.linspace(a, b, n + 1)
    vertices = x[:, None]
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)]).astype(np.int64)
    return Mesh("interval", {"a": float(a), "b": float(b), "n": int(n)},
                vertices, elements, [0, n])


def rectangle_mesh(ax, bx, ay, by, nx, ny):
    if not (bx > ax and by > ay):
        raise MeshError("need ax < bx and ay < by")
    if nx < 2 or ny < 2:
        raise MeshError("need nx, ny >= 2 cells")
    x = np.linspace(ax, bx, nx + 1)
    y = np.linspace(ay, by, ny + 1)
    X, Y = np.meshgrid(x, y, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    elements = []
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            elements.append([v00, v10, v11])
            elements.append([v00, v11, v01])
    elements = np.asarray(elements, dtype=np.int64)
    boundary = [vid(i, j) for j in range(ny + 1) for i in range(nx + 1)
                if i in (0, nx) or j in (0, ny)]
    return Mesh("rectangle",
                {"ax": float(ax), "bx": float(bx), "ay": float(ay),
                 "by": float(by), "nx": int(nx), "ny": int(ny)},
                vertices, elements, boundary)


def build_mesh(descriptor):
    """Mesh from its JSON descriptor: {"kind": "interval"|"rectangle", ...}."""
    if not isinstance(descriptor, dict) or "kind" not in descriptor:
        raise MeshError("mesh descriptor must be an object with a 'kind' key")
    kind = descriptor["kind"]
    known = {"interval": {"kind", "a", "b", "n"},
             "rectangle": {"kind", "ax", "bx", "ay", "by", "nx", "ny"}}
    if kind not in known:
        raise MeshError(f"unknown mesh kind {kind!r}")
    extra = set(descriptor) - known[kind]
    if extra:
        raise MeshError(f"unknown keys in mesh descriptor: {sorted(extra)}")
    try:
        if kind == "interval":
            return interval_mesh(descriptor["a"], descriptor["b"], int(descriptor["n"]))
        return rectangle_mesh(descriptor["ax"], descriptor["bx"], descriptor["ay"],
                              descriptor["by"], int(descriptor["nx"]),
                              int(descriptor["ny"]))
    except KeyError as exc:
        raise MeshError(f"missing key in mesh descriptor: {exc}") from exc


class Field:
    """Nodal values of a P1 function vanishing on the boundary."""

    __slots__ = ("mesh", "values")

    def __init__(self, mesh, values, check_boundary=True):
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.n_vertices,):
            raise DomainError(f"field needs {mesh.n_vertices} DOF values")
        if check_boundary and np.any(values[mesh.boundary_dofs] != 0.0):
            raise DomainError("field values must vanish at boundary DOFs")
        self.mesh = mesh
        self.values = values

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros(mesh.n_vertices), check_boundary=False)

    @classmethod
    def interpolate(cls, mesh, fn):
        """Nodal interpolant of a callable; boundary values are zeroed."""
        if mesh.dim == 1:
            vals = np.asarray(fn(mesh.vertices[:, 0]), dtype=float)
        else:
            vals = np.asarray(fn(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float)
        vals = vals.copy()
        vals[mesh.boundary_dofs] = 0.0
        return cls(mesh, vals, check_boundary=False)

    def copy(self):
        return Field(self.mesh, self.values.copy(), check_boundary=False)

    def __add__(self, other):
        return Field(self.mesh, self.values + other.values, check_boundary=False)

    def __sub__(self, other):
        return Field(self.mesh, self.values - other.values, check_boundary=False)

    def __mul__(self, c):
        return Field(self.mesh, self.values * float(c), check_boundary=False)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.mesh, -self.values, check_boundary=False)

    def linf(self):
        return float(np.max(np.abs(self.values)))

    def is_zero(self):
        return not np.any(self.values)

    def __repr__(self):
        return f"Field({self.mesh.kind}, linf={self.linf():.6g})"


def grad_on_elements(u):
    """Constant gradient of the P1 interpolant on each element, (nel, dim)."""
    mesh = u.mesh
    return np.einsum("ead,ea->ed", mesh.basis_grads, u.values[mesh.elements])


def grad_magnitudes(u):
    g = grad_on_elements(u)
    if u.mesh.dim == 1:
        return np.abs(g[:, 0])
    return np.hypot(g[:, 0], g[:, 1])


def integrate(mesh, element_values):
    """Midpoint-rule integral of elementwise-constant data."""
    element_values = np.asarray(element_values, dtype=float)
    if element_values.shape != (mesh.n_elements,):
        raise DomainError(f"need one value per element ({mesh.n_elements})")
    return float(np.dot(element_values, mesh.measures))


def integrate_vertices(mesh, vertex_values):
    """Lumped (mass-lumping) integral of vertex data."""
    vertex_values = np.asarray(vertex_values, dtype=float)
    if vertex_values.shape != (mesh.n_vertices,):
        raise DomainError(f"need one value per vertex ({mesh.n_vertices})")
    return float(np.dot(vertex_values, mesh.lumped_weights))


def positive_part(u):
    """Nodal clamp u+ = max(u, 0)."""
    return Field(u.mesh, np.maximum(u.values, 0.0), check_boundary=False)


def negative_part(u):
    """Nodal clamp u- = min(u, 0); u+ + u- = u at every DOF."""
    return Field(u.mesh, np.minimum(u.values, 0.0), check_boundary=False)


def modular(values, weights, phi_spec, lam):
    """sum_k Phi(v_k / lam) w_k, the Orlicz modular at scale lam."""
    return float(np.dot(np.asarray(phi_spec.big_phi(values / lam)), weights))


def luxemburg_norm(values, weights, phi_spec, tol=1e-10):
    """Luxemburg norm: the lam > 0 with sum Phi(v/lam) w = 1 (0 for v = 0).

    Found by bracketed bisection on lam; the modular is strictly decreasing
    in lam by convexity of Phi.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    vmax = np.max(np.abs(values)) if values.size else 0.0
    if vmax == 0.0:
        return 0.0

    lam = vmax
    m = modular(values, weights, phi_spec, lam)
    lo = hi = lam
    if m > 1.0:
        for _ in range(200):
            hi *= 2.0
            if modular(values, weights, phi_spec, hi) <= 1.0:
                break
            lo = hi
        else:
            raise BracketError("Luxemburg bracket expansion failed (upward)")
    else:
        for _ in range(200):
            lo *= 0.5
            if modular(values, weights, phi_spec, lo) >= 1.0:
                break
            hi = lo
        else:
            raise BracketError("Luxemburg bracket expansion failed (downward)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * hi:
            break
        if modular(values, weights, phi_spec, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    if abs(modular(values, weights, phi_spec, lam) - 1.0) > max(tol, 1e-10) * 100:
        raise BracketError("Luxemburg bisection did not resolve the modular")
    return float(lam)


def field_luxemburg_norm(u, phi_spec):
    """Luxemburg norm of the DOF field under lumped quadrature."""
    return luxemburg_norm(u.values, u.mesh.lumped_weights, phi_spec)


def gradient_luxemburg_norm(u, phi_spec):
    """The working norm ||u|| := || |grad u| ||_Phi (exact under P1)."""
    return luxemburg_norm(grad_magnitudes(u), u.mesh.measures, phi_spec)


def random_smooth_field(mesh, rng, passes=2):
    """Smoothed, boundary-zeroed, sup-normalized noise field.

    Raw white noise has mesh-scale gradients that swamp the reaction term;
    a few neighbor-averaging passes (the 3-point kernel in 1-d) restore a
    usable balance.
    """
    z = rng.standard_normal(mesh.n_vertices)
    edges = mesh.adjacency()
    deg = np.zeros(mesh.n_vertices)
    np.add.at(deg, edges[:, 0], 1.0)
    np.add.at(deg, edges[:, 1], 1.0)
    for _ in range(passes):
        acc = np.zeros(mesh.n_vertices)
        np.add.at(acc, edges[:, 0], z[edges[:, 1]])
        np.add.at(acc, edges[:, 1], z[edges[:, 0]])
        z = 0.5 * (z + acc / np.maximum(deg, 1.0))
    z[mesh.boundary_dofs] = 0.0
    m = np.max(np.abs(z))
    if m == 0.0:  # vanishingly unlikely; keep the sampler total
        z[mesh.interior_dofs[0]] = 1.0
        m = 1.0
    return Field(mesh, z / m, check_boundary=False)


def nodal_domain_count(u, rel_threshold=1e-6):
    """Number of connected same-sign regions of |u| > rel_threshold * max|u|."""
    vals = u.values
    scale = np.max(np.abs(vals))
    if scale == 0.0:
        return 0
    active = np.abs(vals) > rel_threshold * scale
    sign = np.sign(vals)
    parent = np.arange(u.mesh.n_vertices)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in u.mesh.adjacency():
        if active[a] and active[b] and sign[a] == sign[b]:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    roots = {find(i) for i in np.nonzero(active)[0]}
    return len(roots)


def prolong(u, fine_mesh):
    """P1-exact transfer of a field to the uniformly refined mesh."""
    mesh = u.mesh
    if mesh.kind == "interval":
        n = mesh.descriptor["n"]
        if fine_mesh.descriptor["n"] != 2 * n:
            raise MeshError("prolongation expects the doubled mesh")
        fine = np.zeros(fine_mesh.n_vertices)
        fine[0::2] = u.values
        fine[1::2] = 0.5 * (u.values[:-1] + u.values[1:])
        return Field(fine_mesh, fine, check_boundary=False)
    nx, ny = mesh.descriptor["nx"], mesh.descriptor["ny"]
    if (fine_mesh.descriptor["nx"], fine_mesh.descriptor["ny"]) != (2 * nx, 2 * ny):
        raise MeshError("prolongation expects the doubled mesh")
    coarse = u.values.reshape(ny + 1, nx + 1)
    fine = np.zeros((2 * ny + 1, 2 * nx + 1))
    fine[0::2, 0::2] = coarse
    fine[0::2, 1::2] = 0.5 * (coarse[:, :-1] + coarse[:, 1:])
    fine[1::2, 0::2] = 0.5 * (coarse[:-1, :] + coarse[1:, :])
    # cell centers sit on the coarse diagonal (v00, v11) of each cell
    fine[1::2, 1::2] = 0.5 * (coarse[:-1, :-1] + coarse[1:, 1:])
    return Field(fine_mesh, fine.ravel(), check_boundary=False)
