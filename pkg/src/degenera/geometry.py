"""Domains, graded meshes, composite quadrature and radial reduction.

Meshes are simplicial: intervals in 1D, triangles in 2D. Every mesh keeps
its node coordinates as an ``(n_nodes, d)`` array and its cells as an
``(n_cells, d + 1)`` index array, positively oriented.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import special

from .errors import InvalidArgument, SingularEvaluationError


@dataclass(frozen=True)
class Domain:
    """A bounded open set: ``interval(a, b)``, ``disk(R)`` or ``square(a, b)^2``."""

    kind: str
    a: float = 0.0
    b: float = 1.0
    radius: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if self.kind in ("interval", "square"):
            if not self.a < self.b:
                raise InvalidArgument(f"need a < b, got ({self.a}, {self.b})")
        elif self.kind == "disk":
            if not self.radius > 0:
                raise InvalidArgument(f"disk radius must be positive, got {self.radius}")
        else:
            raise InvalidArgument(f"unknown domain kind {self.kind!r}")

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        return cls("interval", a=float(a), b=float(b), dim=1)

    @classmethod
    def disk(cls, radius: float = 1.0) -> "Domain":
        return cls("disk", radius=float(radius), dim=2)

    @classmethod
    def square(cls, a: float, b: float) -> "Domain":
        return cls("square", a=float(a), b=float(b), dim=2)

    @property
    def diameter(self) -> float:
        if self.kind == "interval":
            return self.b - self.a
        if self.kind == "disk":
            return 2.0 * self.radius
        return math.sqrt(2.0) * (self.b - self.a)

    @property
    def width(self) -> float:
        """Smallest slab width containing the domain."""
        if self.kind == "disk":
            return 2.0 * self.radius
        return self.b - self.a

    @property
    def measure(self) -> float:
        if self.kind == "interval":
            return self.b - self.a
        if self.kind == "disk":
            return math.pi * self.radius**2
        return (self.b - self.a) ** 2

    def contains(self, x, closed: bool = True) -> np.ndarray:
        x = as_points(x, self.dim)
        if self.kind == "interval":
            t = x[:, 0]
            return (t >= self.a) & (t <= self.b) if closed else (t > self.a) & (t < self.b)
        if self.kind == "disk":
            r = np.linalg.norm(x, axis=1)
            return r <= self.radius if closed else r < self.radius
        inside = (x >= self.a) & (x <= self.b) if closed else (x > self.a) & (x < self.b)
        return inside.all(axis=1)

    def to_dict(self) -> dict:
        if self.kind == "disk":
            return {"kind": "disk", "radius": self.radius}
        return {"kind": self.kind, "a": self.a, "b": self.b}


def as_points(x, d: int) -> np.ndarray:
    """Coerce scalars, 1D arrays or ``(n, d)`` arrays to an ``(n, d)`` array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1) if d == 1 else x.reshape(1, 1).repeat(d, axis=1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if d == 1 else x.reshape(1, -1)
    if x.shape[1] != d:
        raise InvalidArgument(f"expected points of dimension {d}, got shape {x.shape}")
    return x


# --------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-type rule of order ``g`` on the reference simplex.

    The reference interval is ``[0, 1]``; the reference triangle has
    vertices ``(0,0), (1,0), (0,1)``. Both rules integrate polynomials of
    degree ``2g - 1`` exactly.
    """

    order: int = 5
    dim: int = 1
    points: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.order < 1:
            raise InvalidArgument(f"quadrature order must be >= 1, got {self.order}")
        t, w = special.roots_legendre(self.order)
        u = 0.5 * (t + 1.0)
        wu = 0.5 * w
        if self.dim == 1:
            pts, wts = u.reshape(-1, 1), wu
        elif self.dim == 2:
            # collapsed rule: Gauss-Jacobi with weight (1 - s) in the first slot
            tj, wj = special.roots_jacobi(self.order, 1.0, 0.0)
            s = 0.5 * (tj + 1.0)
            ws = 0.25 * wj
            S, U = np.meshgrid(s, u, indexing="ij")
            WS, WU = np.meshgrid(ws, wu, indexing="ij")
            pts = np.column_stack([S.ravel(), (U * (1.0 - S)).ravel()])
            wts = (WS * WU).ravel()
        else:
            raise InvalidArgument(f"quadrature only on 1D/2D simplices, got dim={self.dim}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)


# --------------------------------------------------------------------------
# meshes


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray
    domain: Domain
    grading: tuple = (1.0, None)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    def jacobians(self) -> np.ndarray:
        """Cell Jacobians ``(n_cells, d, d)``: columns are edge vectors."""
        v = self.nodes[self.cells]
        return np.transpose(v[:, 1:, :] - v[:, :1, :], (0, 2, 1))

    def cell_measures(self) -> np.ndarray:
        det = np.linalg.det(self.jacobians())
        return det / math.factorial(self.dim)

    def cell_centers(self) -> np.ndarray:
        return self.nodes[self.cells].mean(axis=1)

    def quadrature(self, rule: QuadratureRule | None = None):
        """Physical quadrature points ``(n_cells, nq, d)`` and weights ``(n_cells, nq)``."""
        rule = rule or QuadratureRule(dim=self.dim)
        if rule.dim != self.dim:
            raise InvalidArgument("quadrature rule dimension does not match mesh")
        v0 = self.nodes[self.cells[:, 0]]
        J = self.jacobians()
        pts = v0[:, None, :] + np.einsum("cij,qj->cqi", J, rule.points)
        det = np.abs(np.linalg.det(J))
        wts = det[:, None] * rule.weights[None, :]
        return pts, wts

    def boundary_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    def interior_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)


def build_interval_mesh(a: float, b: float, N: int, q: float = 1.0, c: float | None = None) -> Mesh:
    """Interval mesh with ``N`` cells, graded toward ``c`` with exponent ``q``.

    Nodes sit at ``c -/+ L * (i / N_side)**q`` on each side of ``c``, the
    cells being split between the sides in proportion to their lengths.
    ``q = 1`` gives a uniform mesh regardless of ``c``.
    """
    if N < 1:
        raise InvalidArgument(f"need at least one cell, got N={N}")
    if q < 1:
        raise InvalidArgument(f"grading exponent must be >= 1, got q={q}")
    if not a < b:
        raise InvalidArgument(f"need a < b, got ({a}, {b})")
    if q == 1 or c is None:
        if c is not None and not a <= c <= b:
            raise InvalidArgument(f"grading center {c} outside [{a}, {b}]")
        x = a + (b - a) * np.arange(N + 1) / N
        if q != 1:
            x = a + (b - a) * (np.arange(N + 1) / N) ** q
            c = a
    else:
        if not a <= c <= b:
            raise InvalidArgument(f"grading center {c} outside [{a}, {b}]")
        left, right = c - a, b - c
        if N < 2 and left > 0 and right > 0:
            raise InvalidArgument("an interior grading center needs N >= 2")
        n_left = int(round(N * left / (b - a)))
        if left > 0 and n_left == 0:
            n_left = 1
        if right > 0 and n_left == N:
            n_left = N - 1
        n_right = N - n_left
        parts = []
        if n_left:
            parts.append(c - left * (np.arange(n_left, 0, -1) / n_left) ** q)
        parts.append(np.array([c]))
        if n_right:
            parts.append(c + right * (np.arange(1, n_right + 1) / n_right) ** q)
        x = np.concatenate(parts)
    x[0], x[-1] = a, b
    cells = np.column_stack([np.arange(N), np.arange(1, N + 1)])
    boundary = np.zeros(N + 1, dtype=bool)
    boundary[[0, N]] = True
    return Mesh(x.reshape(-1, 1), cells, boundary, Domain.interval(a, b), (float(q), c))


def insert_nodes(mesh: Mesh, points: Iterable[float]) -> Mesh:
    """Return a 1D mesh with extra nodes inserted (e.g. at kinks of an integrand)."""
    if mesh.dim != 1:
        raise InvalidArgument("node insertion is only supported on interval meshes")
    dom = mesh.domain
    extra = [p for p in points if dom.a < p < dom.b]
    x = np.unique(np.concatenate([mesh.nodes[:, 0], np.asarray(extra, dtype=float)]))
    n = x.size - 1
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    boundary = np.zeros(n + 1, dtype=bool)
    boundary[[0, n]] = True
    return Mesh(x.reshape(-1, 1), cells, boundary, dom, mesh.grading)


def refine(mesh: Mesh) -> Mesh:
    """Uniform refinement: intervals are halved, triangles split in four."""
    if mesh.dim == 1:
        x = mesh.nodes[:, 0]
        mid = 0.5 * (x[:-1] + x[1:])
        xs = np.empty(2 * x.size - 1)
        xs[0::2], xs[1::2] = x, mid
        n = xs.size - 1
        cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        boundary = np.zeros(n + 1, dtype=bool)
        boundary[[0, n]] = True
        return Mesh(xs.reshape(-1, 1), cells, boundary, mesh.domain, mesh.grading)
    edges = {}
    nodes = [row for row in mesh.nodes]
    bnd = list(mesh.boundary)

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in edges:
            edges[key] = len(nodes)
            nodes.append(0.5 * (mesh.nodes[i] + mesh.nodes[j]))
            bnd.append(False)
        return edges[key]

    new_cells = []
    for a, b, c in mesh.cells:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_cells += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    # a new node is on the boundary iff its edge is a boundary edge (used once)
    count: dict = {}
    for a, b, c in mesh.cells:
        for i, j in ((a, b), (b, c), (c, a)):
            key = (min(i, j), max(i, j))
            count[key] = count.get(key, 0) + 1
    for key, idx in edges.items():
        if count[key] == 1:
            bnd[idx] = True
    return Mesh(np.array(nodes), np.array(new_cells), np.array(bnd), mesh.domain, mesh.grading)


def build_disk_mesh(R: float, rings: int, sectors: int, q: float = 3.0) -> Mesh:
    """Polar-structured triangulation of the disk of radius ``R``.

    Ring radii are ``R * (k / rings)**q``; the innermost ring is joined to
    the center by a triangle fan, the others by quadrilaterals split into
    two triangles. Nodes on the outer ring are marked as boundary.
    """
    if rings < 1:
        raise InvalidArgument(f"need rings >= 1, got {rings}")
    if sectors < 3:
        raise InvalidArgument(f"need sectors >= 3, got {sectors}")
    if not R > 0:
        raise InvalidArgument(f"disk radius must be positive, got {R}")
    radii = R * (np.arange(1, rings + 1) / rings) ** q
    theta = 2.0 * np.pi * np.arange(sectors) / sectors
    ring_pts = radii[:, None, None] * np.stack([np.cos(theta), np.sin(theta)], axis=-1)[None]
    nodes = np.vstack([np.zeros((1, 2)), ring_pts.reshape(-1, 2)])

    def idx(k, j):
        return 1 + k * sectors + (j % sectors)

    j = np.arange(sectors)
    cells = [np.column_stack([np.zeros(sectors, dtype=int), idx(0, j), idx(0, j + 1)])]
    for k in range(rings - 1):
        a, b, c, e = idx(k, j), idx(k + 1, j), idx(k + 1, j + 1), idx(k, j + 1)
        cells.append(np.column_stack([a, b, c]))
        cells.append(np.column_stack([a, c, e]))
    boundary = np.zeros(nodes.shape[0], dtype=bool)
    boundary[idx(rings - 1, j)] = True
    return Mesh(nodes, np.vstack(cells).astype(int), boundary, Domain.disk(R), (float(q), (0.0, 0.0)))


def build_square_mesh(a: float, b: float, N: int) -> Mesh:
    """Structured right-triangle mesh of ``(a, b)^2`` with ``N`` cells per side."""
    if N < 1:
        raise InvalidArgument(f"need N >= 1, got {N}")
    t = a + (b - a) * np.arange(N + 1) / N
    X, Y = np.meshgrid(t, t, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return i * (N + 1) + j

    cells = []
    for i in range(N):
        for j in range(N):
            p, r, s, u = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            cells += [(p, r, s), (p, s, u)]
    on = (np.isclose(nodes, a) | np.isclose(nodes, b)).any(axis=1)
    return Mesh(nodes, np.array(cells), on, Domain.square(a, b))


def polygon_area(R: float, sectors: int) -> float:
    """Area of the regular ``sectors``-gon inscribed in the circle of radius ``R``."""
    return 0.5 * sectors * R**2 * math.sin(2.0 * math.pi / sectors)


def dump_mesh(mesh: Mesh, stream) -> None:
    """Write a plain-text node/cell listing (debugging aid, not a stable format)."""
    for i, (x, marker) in enumerate(zip(mesh.nodes, mesh.boundary)):
        coords = " ".join(repr(float(c)) for c in x)
        stream.write(f"node {i} {coords} {int(marker)}\n")
    for i, cell in enumerate(mesh.cells):
        stream.write(f"cell {i} {' '.join(str(int(v)) for v in cell)}\n")


# --------------------------------------------------------------------------
# integration


def evaluate_on(field: Callable, pts: np.ndarray) -> np.ndarray:
    """Evaluate ``field`` on an ``(..., d)`` point array, checking finiteness."""
    shape = pts.shape[:-1]
    flat = pts.reshape(-1, pts.shape[-1])
    vals = np.asarray(field(flat), dtype=float)
    if vals.ndim == 0:
        vals = np.full(flat.shape[0], float(vals))
    vals = vals.reshape(shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        where = pts[bad][0]
        raise SingularEvaluationError(
            f"non-finite field value at point {tuple(float(c) for c in where)}",
            point=tuple(float(c) for c in where),
        )
    return vals


def integrate(field: Callable, mesh: Mesh, rule: QuadratureRule | None = None) -> float:
    """Composite quadrature of ``field`` over ``mesh``.

    Cell contributions are formed in cell order and reduced by numpy's
    pairwise summation, so results are bit-stable for a given mesh.
    """
    pts, wts = mesh.quadrature(rule)
    extra = _center_layers(mesh, rule)
    if extra is None:
        vals = evaluate_on(field, pts)
        return float(np.sum(np.sum(vals * wts, axis=1)))
    cells, epts, ewts = extra
    wts = wts.copy()
    wts[cells] = 0.0
    vals = evaluate_on(field, pts)
    evals = evaluate_on(field, epts)
    total = np.sum(vals * wts, axis=1)
    total[cells] = np.sum(evals * ewts, axis=1)
    return float(np.sum(total))


CENTER_RATIO = 0.2
CENTER_LAYERS = 12


def _center_layers(mesh: Mesh, rule: QuadratureRule | None):
    """Geometric sub-rules for interval cells touching the grading center.

    A cell ``[c, c + h]`` is split at ``c + h * 0.2**j`` (``j <= 12``) so
    integrable endpoint singularities are resolved; returns ``None`` when
    the mesh is ungraded or not 1D.
    """
    q, c = mesh.grading
    if mesh.dim != 1 or c is None or q <= 1:
        return None
    c = float(np.ravel(c)[0])
    ends = mesh.nodes[mesh.cells][:, :, 0]
    touching = np.flatnonzero(np.any(ends == c, axis=1))
    if touching.size == 0:
        return None
    rule = rule or QuadratureRule(dim=1)
    t, w = rule.points[:, 0], rule.weights
    scale = CENTER_RATIO ** np.arange(CENTER_LAYERS + 1)
    pts, wts = [], []
    for cell in touching:
        far = ends[cell, 1] if ends[cell, 0] == c else ends[cell, 0]
        nodes = c + (far - c) * np.concatenate([scale, [0.0]])
        lo, hi = nodes[1:], nodes[:-1]
        length = np.abs(hi - lo)
        pts.append((lo[:, None] + (hi - lo)[:, None] * t[None, :]).ravel())
        wts.append((length[:, None] * w[None, :]).ravel())
    return touching, np.array(pts)[..., None], np.array(wts)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _radial_level(g, d, R, N, q, rule):
    mesh = build_interval_mesh(0.0, R, N, q=q, c=0.0)
    return integrate(lambda r: g(r[:, 0]) * r[:, 0] ** (d - 1), mesh, rule)


def integrate_radial(
    g: Callable,
    d: int,
    R: float = 1.0,
    rule: QuadratureRule | None = None,
    *,
    n_cells: int = 32,
    grading: float = 3.0,
    check_divergence: bool = True,
) -> float:
    """Integrate the radial field ``x -> g(|x|)`` over the ball of radius ``R`` in R^d.

    The 1D integral ``int_0^R g(r) r^(d-1) dr`` is computed on meshes graded
    toward ``r = 0`` at three refinement levels. If its magnitude grows by
    more than 10% per level, the integral is declared divergent and
    ``math.inf`` is returned.
    """
    if d < 1:
        raise InvalidArgument(f"dimension must be >= 1, got {d}")
    vals = [_radial_level(g, d, R, n_cells * 2**k, grading, rule) for k in range(3)]
    if check_divergence:
        a = [abs(v) for v in vals]
        if a[1] > 1.1 * a[0] and a[2] > 1.1 * a[1]:
            return math.inf
    return sphere_area(d) * vals[-1] if d > 1 else 2.0 * vals[-1]


# --------------------------------------------------------------------------
# sample plans


def sample_points(domain: Domain, n: int = 4000, avoid=(), exclusion: float = 1e-8) -> np.ndarray:
    """Deterministic sample grid of ``domain`` refined geometrically toward ``avoid``.

    Points closer than ``exclusion * diameter`` to a point of ``avoid`` are
    dropped, so ratios with declared zeros in the denominator stay finite.
    """
    scale = domain.diameter
    avoid = [np.atleast_1d(np.asarray(z, dtype=float)) for z in avoid]
    if domain.kind == "interval":
        a, b = domain.a, domain.b
        pts = [np.linspace(a, b, n)]
        geo = np.geomspace(exclusion * scale, scale, max(n // 2, 16))
        for z in avoid:
            pts += [z[0] - geo, z[0] + geo]
        x = np.concatenate(pts)
        x = x[(x >= a) & (x <= b)]
        x = np.unique(x).reshape(-1, 1)
    elif domain.kind == "disk":
        R = domain.radius
        nr = max(int(math.sqrt(n)), 8)
        radii = np.concatenate([np.linspace(0.0, R, nr), np.geomspace(exclusion * R, R, nr)])
        radii = np.unique(radii)
        th = 2.0 * np.pi * np.arange(nr) / nr + 0.5 / nr
        Rr, T = np.meshgrid(radii, th, indexing="ij")
        x = np.column_stack([(Rr * np.cos(T)).ravel(), (Rr * np.sin(T)).ravel()])
        x = np.unique(x, axis=0)
    else:
        nr = max(int(math.sqrt(n)), 8)
        t = np.linspace(domain.a, domain.b, nr)
        X, Y = np.meshgrid(t, t, indexing="ij")
        x = [np.column_stack([X.ravel(), Y.ravel()])]
        geo = np.geomspace(exclusion * scale, scale, nr)
        diag = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1], [1, 0], [0, 1], [-1, 0], [0, -1]]) / 1.0
        for z in avoid:
            for dvec in diag:
                x.append(z[None, :] + geo[:, None] * dvec[None, :] / np.linalg.norm(dvec))
        x = np.vstack(x)
        x = x[domain.contains(x)]
    for z in avoid:
        if z.size != x.shape[1]:
            continue
        far = np.linalg.norm(x - z[None, :], axis=1) > 0.5 * exclusion * scale
        x = x[far]
    return x


def radial_directions(d: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit vectors in R^d (axes, diagonals, then seeded draws)."""
    dirs = [np.eye(d)[i] for i in range(d)]
    dirs.append(np.ones(d) / math.sqrt(d))
    rng = np.random.default_rng(seed)
    while len(dirs) < count:
        v = rng.standard_normal(d)
        dirs.append(v / np.linalg.norm(v))
    return np.array(dirs[:count])
