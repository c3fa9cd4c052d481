"""Classical iterated function systems on the interval, the unit square and the sphere.

Points are stored as plain coordinates: floats on ``[0, 1]``, pairs on
``[0, 1]^2`` and unit vectors in R^3 on the sphere.  Measures live on
regular grids; see :class:`PhaseSpace` for the cell conventions.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, PreconditionError

PROB_SUM_TOL = 1e-12
OCCUPANCY_THRESHOLD = 1e-9
# sampled Lipschitz ratios approach 1 from below for isometric directions
CONTRACTION_MARGIN = 1e-6
_ULP = 2.0 ** -52


# ---------------------------------------------------------------------------
# Phase spaces and grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSpace:
    """One of ``"interval"``, ``"square"`` or ``"sphere"``.

    Grid cells are half-open ``[l/M, (l+1)/M)`` with the right endpoint 1
    assigned to the last cell.  The sphere uses an equal-area grid: ``M``
    bins in ``z = cos(theta)`` over ``[-1, 1]`` times ``M`` bins in ``phi``
    over ``[0, 2 pi)``, so the Lebesgue measure has equal cell weights.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in ("interval", "square", "sphere"):
            raise ValueError(f"unknown phase space {self.kind!r}")

    @property
    def ndim(self) -> int:
        return {"interval": 1, "square": 2, "sphere": 3}[self.kind]

    def grid_shape(self, m: int) -> tuple:
        return (m,) if self.kind == "interval" else (m, m)

    def as_points(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if self.kind == "interval":
            return p.reshape(-1)
        return p.reshape(-1, self.ndim)

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        p = self.as_points(points)
        if self.kind == "sphere":
            return np.abs(np.linalg.norm(p, axis=1) - 1.0) <= tol
        inside = (p >= -tol) & (p <= 1.0 + tol)
        return inside if p.ndim == 1 else inside.all(axis=1)

    def distance(self, x, y) -> np.ndarray:
        """Euclidean distance, or great-circle distance on the sphere."""
        a, b = self.as_points(x), self.as_points(y)
        if self.kind == "interval":
            return np.abs(a - b)
        chord = np.linalg.norm(a - b, axis=1)
        if self.kind == "square":
            return chord
        return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))

    def cell_index(self, points, m: int) -> np.ndarray:
        """Flat grid index of each point."""
        p = self.as_points(points)
        if self.kind == "interval":
            return np.clip(np.floor(p * m), 0, m - 1).astype(np.int64)
        if self.kind == "square":
            ix = np.clip(np.floor(p[:, 0] * m), 0, m - 1).astype(np.int64)
            iy = np.clip(np.floor(p[:, 1] * m), 0, m - 1).astype(np.int64)
            return ix * m + iy
        z = np.clip(p[:, 2], -1.0, 1.0)
        iz = np.clip(np.floor((z + 1.0) * 0.5 * m), 0, m - 1).astype(np.int64)
        phi = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)
        iphi = np.clip(np.floor(phi / (2 * np.pi) * m), 0, m - 1).astype(np.int64)
        return iz * m + iphi

    def cell_centers(self, m: int) -> np.ndarray:
        c = (np.arange(m) + 0.5) / m
        if self.kind == "interval":
            return c
        if self.kind == "square":
            gx, gy = np.meshgrid(c, c, indexing="ij")
            return np.column_stack([gx.ravel(), gy.ravel()])
        z = 2.0 * c - 1.0
        phi = 2 * np.pi * c
        gz, gphi = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1.0 - gz ** 2)
        return np.column_stack([(s * np.cos(gphi)).ravel(), (s * np.sin(gphi)).ravel(), gz.ravel()])

    def uniform_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "interval":
            return rng.random(n)
        if self.kind == "square":
            return rng.random((n, 2))
        v = rng.normal(size=(n, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def landmarks(self) -> np.ndarray:
        """Boundary points every empirical check should include."""
        if self.kind == "interval":
            return np.array([0.0, 0.5, 1.0])
        if self.kind == "square":
            return np.array([[0, 0], [0, 1], [1, 0], [1, 1], [0.5, 0.5]], dtype=float)
        return np.array([[0, 0, 1], [0, 0, -1], [1, 0, 0], [0, 1, 0]], dtype=float)


INTERVAL = PhaseSpace("interval")
SQUARE = PhaseSpace("square")
SPHERE = PhaseSpace("sphere")


def spherical_to_vector(theta, phi) -> np.ndarray:
    theta, phi = np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def vector_to_spherical(v) -> tuple:
    v = np.asarray(v, dtype=float)
    theta = np.arccos(np.clip(v[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2 * np.pi)
    return theta, phi


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Right-handed rotation by ``angle`` about ``axis`` (Rodrigues formula)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * kx + (1 - math.cos(angle)) * (kx @ kx)


# ---------------------------------------------------------------------------
# Maps
# ---------------------------------------------------------------------------

class ClassicalMap:
    """Base class.  ``__call__`` is vectorized; ``point`` is the scalar fast path."""

    space: str = "interval"
    expanding: bool = False
    invertible: bool = False
    discontinuities: tuple = ()

    def __call__(self, points) -> np.ndarray:
        raise NotImplementedError

    def point(self, x):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Affine1D(ClassicalMap):
    """``x -> a x + b`` on the unit interval."""

    a: float
    b: float
    space = "interval"

    @property
    def invertible(self) -> bool:
        return self.a != 0

    def __call__(self, points):
        return self.a * np.asarray(points, dtype=float) + self.b

    def point(self, x):
        return self.a * x + self.b

    def inverse(self, y):
        return (np.asarray(y, dtype=float) - self.b) / self.a

    def inverse_derivative(self, y):
        return np.full_like(np.asarray(y, dtype=float), 1.0 / abs(self.a))

    def image(self) -> tuple:
        lo, hi = sorted((self.b, self.a + self.b))
        return lo, hi

    def to_dict(self):
        return {"kind": "affine1d", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Affine2D(ClassicalMap):
    """``v -> A v + c`` on the unit square."""

    matrix: tuple
    offset: tuple = (0.0, 0.0)
    space = "square"

    def __post_init__(self):
        object.__setattr__(self, "matrix", tuple(tuple(float(x) for x in row) for row in self.matrix))
        object.__setattr__(self, "offset", tuple(float(x) for x in self.offset))

    def __call__(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return p @ np.asarray(self.matrix).T + np.asarray(self.offset)

    def point(self, v):
        (a, b), (c, d) = self.matrix
        x, y = v
        return (a * x + b * y + self.offset[0], c * x + d * y + self.offset[1])

    def to_dict(self):
        return {"kind": "affine2d", "matrix": [list(r) for r in self.matrix], "offset": list(self.offset)}


@dataclass(frozen=True)
class Tent(ClassicalMap):
    """``2x`` on ``[0, 1/2)`` and ``2(1 - x)`` on ``[1/2, 1]``."""

    space = "interval"
    expanding = True

    def __call__(self, points):
        x = np.asarray(points, dtype=float)
        return np.where(x < 0.5, 2 * x, 2 * (1 - x))

    def point(self, x):
        return 2 * x if x < 0.5 else 2 * (1 - x)

    def to_dict(self):
        return {"kind": "tent"}


@dataclass(frozen=True)
class Bernoulli(ClassicalMap):
    """Doubling map ``2x mod 1`` (discontinuous at 1/2 on the interval)."""

    space = "interval"
    expanding = True
    discontinuities = (0.5,)

    def __call__(self, points):
        x = np.asarray(points, dtype=float)
        return np.where(x < 0.5, 2 * x, 2 * x - 1)

    def point(self, x):
        return 2 * x if x < 0.5 else 2 * x - 1

    def to_dict(self):
        return {"kind": "bernoulli"}


@dataclass(frozen=True)
class SphereRotation(ClassicalMap):
    """Rigid rotation of S^2 by ``angle`` radians about ``axis``."""

    axis: tuple
    angle: float
    space = "sphere"

    def __post_init__(self):
        ax = np.asarray(self.axis, dtype=float)
        ax = ax / np.linalg.norm(ax)
        object.__setattr__(self, "axis", tuple(ax.tolist()))
        object.__setattr__(self, "_rot", rotation_matrix(ax, self.angle))
        object.__setattr__(self, "_rows", tuple(tuple(r) for r in self._rot.tolist()))

    def __call__(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 3) @ self._rot.T

    def point(self, v):
        (a, b, c), (d, e, f), (g, h, i) = self._rows
        x, y, z = v
        return (a * x + b * y + c * z, d * x + e * y + f * z, g * x + h * y + i * z)

    def to_dict(self):
        return {"kind": "rotation", "axis": list(self.axis), "angle": self.angle}


@dataclass(frozen=True)
class ClassicalKickedTop(ClassicalMap):
    """Rotation about x by ``alpha``, then about z by the angle ``beta * z``."""

    alpha: float
    beta: float
    space = "sphere"

    def __post_init__(self):
        object.__setattr__(self, "_ca", math.cos(self.alpha))
        object.__setattr__(self, "_sa", math.sin(self.alpha))

    def __call__(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        x = p[:, 0]
        y = self._ca * p[:, 1] - self._sa * p[:, 2]
        z = self._sa * p[:, 1] + self._ca * p[:, 2]
        w = self.beta * z
        c, s = np.cos(w), np.sin(w)
        return np.column_stack([c * x - s * y, s * x + c * y, z])

    def point(self, v):
        x, y0, z0 = v
        y = self._ca * y0 - self._sa * z0
        z = self._sa * y0 + self._ca * z0
        c, s = math.cos(self.beta * z), math.sin(self.beta * z)
        return (c * x - s * y, s * x + c * y, z)

    def to_dict(self):
        return {"kind": "kicked-top", "alpha": self.alpha, "beta": self.beta}


def map_from_dict(doc: dict) -> ClassicalMap:
    kind = doc.get("kind")
    args = {k: v for k, v in doc.items() if k != "kind"}
    try:
        cls = {
            "affine1d": Affine1D,
            "affine2d": Affine2D,
            "tent": Tent,
            "bernoulli": Bernoulli,
            "rotation": SphereRotation,
            "kicked-top": ClassicalKickedTop,
        }[kind]
    except KeyError:
        raise ValueError(f"unknown map kind {kind!r}") from None
    return cls(**args)


# ---------------------------------------------------------------------------
# Probability functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"probability {self.value} outside [0, 1]")

    def __call__(self, points, space: PhaseSpace):
        return np.full(len(space.as_points(points)), float(self.value))

    def point(self, x):
        return self.value

    def to_dict(self):
        return self.value


def _coord(points, space, axis):
    p = space.as_points(points)
    return p if p.ndim == 1 else p[:, axis]


_FORMS = {
    # name: (vectorized, scalar)
    "x": (lambda p, s: _coord(p, s, 0), lambda x: x if isinstance(x, float) else x[0]),
    "1-x": (lambda p, s: 1 - _coord(p, s, 0), lambda x: 1 - (x if isinstance(x, float) else x[0])),
    "y": (lambda p, s: _coord(p, s, 1), lambda x: x[1]),
    "1-y": (lambda p, s: 1 - _coord(p, s, 1), lambda x: 1 - x[1]),
    "(1+cos theta)/2": (lambda p, s: (1 + _coord(p, s, 2)) / 2, lambda x: (1 + x[2]) / 2),
    "(1-cos theta)/2": (lambda p, s: (1 - _coord(p, s, 2)) / 2, lambda x: (1 - x[2]) / 2),
}


@dataclass(frozen=True)
class PlaceDependent:
    """A named place-dependent probability, e.g. ``"x"`` or ``"(1+cos theta)/2"``."""

    form: str

    def __post_init__(self):
        if self.form not in _FORMS:
            raise ValueError(f"unknown probability form {self.form!r}; known: {sorted(_FORMS)}")

    def __call__(self, points, space: PhaseSpace):
        return np.asarray(_FORMS[self.form][0](points, space), dtype=float)

    def point(self, x):
        return _FORMS[self.form][1](x)

    def to_dict(self):
        return {"form": self.form}


def prob_from_dict(doc):
    if isinstance(doc, (int, float)):
        return Constant(float(doc))
    return PlaceDependent(doc["form"])


# ---------------------------------------------------------------------------
# The IFS itself
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassicalIFS:
    space: PhaseSpace
    maps: tuple
    probs: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "probs", tuple(
            p if not isinstance(p, (int, float)) else Constant(float(p)) for p in self.probs))
        if len(self.maps) != len(self.probs):
            raise DimensionError("need one probability function per map")
        for m in self.maps:
            if m.space != self.space.kind:
                raise DimensionError(f"map {m!r} acts on {m.space}, not {self.space.kind}")
        if self.constant_probabilities:
            self.check_probabilities(self.space.landmarks()[:1])

    @property
    def k(self) -> int:
        return len(self.maps)

    @property
    def constant_probabilities(self) -> bool:
        return all(isinstance(p, Constant) for p in self.probs)

    def probabilities(self, points) -> np.ndarray:
        """Array of shape ``(k, n)`` with ``p_i`` at each point."""
        return np.vstack([p(points, self.space) for p in self.probs])

    def check_probabilities(self, points) -> float:
        """Maximum deviation of ``sum_i p_i`` from 1 over ``points``."""
        dev = float(np.max(np.abs(self.probabilities(points).sum(axis=0) - 1.0)))
        if dev > PROB_SUM_TOL:
            raise PreconditionError(f"probabilities sum to 1 +- {dev:.3g}")
        return dev

    def to_dict(self) -> dict:
        return {
            "space": self.space.kind,
            "maps": [m.to_dict() for m in self.maps],
            "probs": [p.to_dict() for p in self.probs],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClassicalIFS":
        return cls(
            PhaseSpace(doc["space"]),
            [map_from_dict(m) for m in doc["maps"]],
            [prob_from_dict(p) for p in doc["probs"]],
            name=doc.get("name", ""),
        )


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Nonnegative mass per grid cell (counts for sampled measures)."""

    space: PhaseSpace
    resolution: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(self.space.grid_shape(self.resolution))
        if np.any(w < 0):
            raise ValueError("measure weights must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def normalized(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    @classmethod
    def uniform(cls, space: PhaseSpace, m: int) -> "EmpiricalMeasure":
        shape = space.grid_shape(m)
        return cls(space, m, np.full(shape, 1.0 / np.prod(shape)))

    @classmethod
    def point_mass(cls, space: PhaseSpace, m: int, x) -> "EmpiricalMeasure":
        w = np.zeros(int(np.prod(space.grid_shape(m))))
        w[space.cell_index(x, m)[0]] = 1.0
        return cls(space, m, w)

    @classmethod
    def from_points(cls, space: PhaseSpace, m: int, points) -> "EmpiricalMeasure":
        size = int(np.prod(space.grid_shape(m)))
        counts = np.bincount(space.cell_index(points, m), minlength=size)
        return cls(space, m, counts.astype(float))

    def coarsen(self, factor: int) -> np.ndarray:
        """Sum blocks of ``factor`` cells along every axis."""
        m = self.resolution
        if m % factor:
            raise PreconditionError(f"coarsening factor {factor} does not divide resolution {m}")
        c = m // factor
        if self.weights.ndim == 1:
            return self.weights.reshape(c, factor).sum(axis=1)
        return self.weights.reshape(c, factor, c, factor).sum(axis=(1, 3))

    def l1_distance(self, other: "EmpiricalMeasure") -> float:
        if other.resolution != self.resolution or other.space != self.space:
            raise DimensionError("measures live on different grids")
        return float(np.abs(self.normalized() - other.normalized()).sum())


# ---------------------------------------------------------------------------
# Chaos game
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChaosGameResult:
    points: np.ndarray
    measure: EmpiricalMeasure
    seed: int
    streams: int


def _refill(y: float, r: float) -> float:
    # expanding maps shift one mantissa bit out per step; without refilling the
    # float orbit collapses onto a dyadic fixed point within ~60 steps
    z = y + r * _ULP
    return z if z < 1.0 else y - r * _ULP


def _run_stream(ifs: ClassicalIFS, x0, n_keep: int, burn_in: int, seed_seq, keep: bool):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    total = burn_in + n_keep
    u = rng.random(total)
    maps = [m.point for m in ifs.maps]
    expanding = [m.expanding for m in ifs.maps]
    refill = rng.random(total) if any(expanding) else None
    k = ifs.k

    x = float(x0) if ifs.space.kind == "interval" else tuple(float(c) for c in np.ravel(x0))
    out = []
    append = out.append
    if ifs.constant_probabilities:
        p = np.array([q.value for q in ifs.probs])
        dev = abs(p.sum() - 1.0)
        if dev > PROB_SUM_TOL:
            raise PreconditionError(f"probabilities sum to 1 +- {dev:.3g}")
        cdf = np.cumsum(np.where(p < 1e-15, 0.0, p))
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), k - 1).tolist()
        for j in range(total):
            i = idx[j]
            x = maps[i](x)
            if refill is not None and expanding[i]:
                x = _refill(x, refill[j])
            if j >= burn_in and keep:
                append(x)
    else:
        pf = [q.point for q in ifs.probs]
        ul = u.tolist()
        for j in range(total):
            ps = [f(x) for f in pf]
            s = sum(ps)
            if abs(s - 1.0) > PROB_SUM_TOL:
                raise PreconditionError(f"probabilities sum to {s!r} at visited point {x!r}")
            uj = ul[j]
            acc = 0.0
            i = k - 1
            for t in range(k):
                pt = ps[t] if ps[t] >= 1e-15 else 0.0
                acc += pt
                if uj < acc:
                    i = t
                    break
            x = maps[i](x)
            if refill is not None and expanding[i]:
                x = _refill(x, refill[j])
            if j >= burn_in and keep:
                append(x)
    return np.asarray(out, dtype=float)


def chaos_game(
    ifs: ClassicalIFS,
    x0,
    n: int,
    seed: int,
    resolution: int = 243,
    burn_in: int = 100,
    streams: int = 1,
    workers: int = 1,
) -> ChaosGameResult:
    """Random iteration of ``ifs`` from ``x0``; returns samples and their histogram.

    The budget ``n`` is split over ``streams`` independent PCG64 streams
    spawned from ``seed``; each stream discards its own ``burn_in`` prefix.
    Output depends only on ``(seed, streams)``, never on ``workers``.
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if not ifs.space.contains(x0).all():
        raise PreconditionError(f"starting point {x0!r} is not in the {ifs.space.kind}")
    children = np.random.SeedSequence(seed).spawn(streams)
    sizes = [n // streams + (1 if s < n % streams else 0) for s in range(streams)]
    jobs = [(ifs, x0, sizes[s], burn_in, children[s], True) for s in range(streams)]
    if workers > 1 and streams > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_stream_args, jobs))
    else:
        parts = [_run_stream(*job) for job in jobs]
    pts = np.concatenate(parts) if len(parts) > 1 else parts[0]
    if ifs.space.kind != "interval":
        pts = pts.reshape(-1, ifs.space.ndim)
    measure = EmpiricalMeasure.from_points(ifs.space, resolution, pts)
    return ChaosGameResult(pts, measure, seed, streams)


def _run_stream_args(args):
    return _run_stream(*args)


# ---------------------------------------------------------------------------
# Markov operator on measures and densities
# ---------------------------------------------------------------------------

def push_measure(ifs: ClassicalIFS, mu: EmpiricalMeasure) -> EmpiricalMeasure:
    """One step of the Markov operator on a grid measure.

    Each cell's mass is sent through every map to the cell containing the
    image of the cell center, weighted by ``p_i`` at the center.  This is a
    first-order scheme; refine ``resolution`` for accuracy.
    """
    if mu.space != ifs.space:
        raise DimensionError("measure and IFS live on different spaces")
    m = mu.resolution
    centers = ifs.space.cell_centers(m)
    probs = ifs.probabilities(centers)
    probs = probs / probs.sum(axis=0, keepdims=True)
    mass = mu.weights.reshape(-1)
    size = mass.size
    out = np.zeros(size)
    for f, p in zip(ifs.maps, probs):
        dest = ifs.space.cell_index(f(centers), m)
        out += np.bincount(dest, weights=p * mass, minlength=size)
    return EmpiricalMeasure(ifs.space, m, out)


def iterate_measure(ifs: ClassicalIFS, mu: EmpiricalMeasure, steps: int) -> EmpiricalMeasure:
    for _ in range(steps):
        mu = push_measure(ifs, mu)
    return mu


def push_density(ifs: ClassicalIFS, grid, gamma) -> np.ndarray:
    """Transfer operator on densities sampled at ``grid`` (ascending, on [0, 1]).

    Values between grid points are linearly interpolated.  The result is
    renormalized to unit trapezoid integral, which removes the O(h) error
    introduced where the image intervals end between grid points.
    """
    if ifs.space.kind != "interval":
        raise PreconditionError("densities are supported on the interval only")
    for f in ifs.maps:
        if not isinstance(f, Affine1D) or not f.invertible:
            raise PreconditionError(f"map {f!r} is not an invertible C^1 map")
    x = np.asarray(grid, dtype=float)
    g = np.asarray(gamma, dtype=float)
    if x.shape != g.shape or x.ndim != 1:
        raise DimensionError("grid and density must be 1-D arrays of equal length")
    if np.any(g < 0):
        raise PreconditionError("density must be nonnegative")
    mass = np.trapezoid(g, x)
    if abs(mass - 1.0) > 1e-6:
        raise PreconditionError(f"density integrates to {mass!r}, expected 1")
    out = np.zeros_like(x)
    for f, p in zip(ifs.maps, ifs.probs):
        lo, hi = f.image()
        inside = (x >= lo - 1e-12) & (x <= hi + 1e-12)
        y = np.clip(f.inverse(x[inside]), 0.0, 1.0)
        out[inside] += p(y, ifs.space) * np.interp(y, x, g) * f.inverse_derivative(y)
    total = np.trapezoid(out, x)
    return out / total


# ---------------------------------------------------------------------------
# Box counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxCountingResult:
    dimension: float
    residual: float
    scales: tuple
    counts: tuple


def box_counting_dimension(mu: EmpiricalMeasure, scales: Sequence[float]) -> BoxCountingResult:
    """Least-squares slope of ``log N(eps)`` against ``log(1/eps)``.

    Each box size ``eps`` must be an integer multiple of the grid spacing
    that divides the resolution.  A box is occupied when its weight exceeds
    ``1e-9`` times the total.
    """
    if len(scales) < 3:
        raise PreconditionError("need at least three scales")
    m = mu.resolution
    thresh = mu.total * OCCUPANCY_THRESHOLD
    counts = []
    for eps in scales:
        factor = eps * m
        fi = int(round(factor))
        if fi < 1 or abs(factor - fi) > 1e-9 * max(1.0, factor) or m % fi:
            raise PreconditionError(f"box size {eps} is not a divisor-style coarsening of a {m}-grid")
        counts.append(int(np.count_nonzero(mu.coarsen(fi) > thresh)))
    lx = np.log(1.0 / np.asarray(scales, dtype=float))
    ly = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return BoxCountingResult(float(slope), resid, tuple(float(s) for s in scales), tuple(counts))


# ---------------------------------------------------------------------------
# Hyperbolicity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperbolicityReport:
    lipschitz: tuple
    min_probabilities: tuple
    contractive: bool
    positive: bool
    hyperbolic: bool
    method: str = "empirical"


def _local_partner(space: PhaseSpace, pts, rng, scale=1e-4):
    if space.kind == "interval":
        d = scale * (2 * rng.random(len(pts)) - 1)
        return np.clip(pts + d, 0.0, 1.0)
    if space.kind == "square":
        return np.clip(pts + scale * (2 * rng.random(pts.shape) - 1), 0.0, 1.0)
    q = pts + scale * rng.normal(size=pts.shape)
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def classify_hyperbolic(ifs: ClassicalIFS, samples: int = 10_000, seed: int = 0) -> HyperbolicityReport:
    """Empirical check of contraction and positivity.

    Lipschitz constants are the largest sampled ratio ``d(f x, f y) / d(x, y)``
    over random and nearby pairs; they are lower bounds.  Pairs straddling a
    map's declared discontinuity are skipped, so the estimate is the
    constant on each continuity piece.
    """
    rng = np.random.default_rng(seed)
    space = ifs.space
    half = samples // 2
    x = np.concatenate([space.as_points(space.uniform_points(half, rng)),
                        space.as_points(space.uniform_points(samples - half, rng))])
    y = np.concatenate([space.as_points(space.uniform_points(half, rng)),
                        _local_partner(space, x[half:], rng)])
    dxy = space.distance(x, y)
    ok = dxy > 1e-14
    lips = []
    for f in ifs.maps:
        keep = ok.copy()
        for c in f.discontinuities:
            keep &= ~((np.minimum(x, y) < c) & (np.maximum(x, y) >= c))
        ratio = space.distance(f(x[keep]), f(y[keep])) / dxy[keep]
        lips.append(float(ratio.max()))
    probe = np.concatenate([space.as_points(space.landmarks()), x])
    pmin = tuple(float(v) for v in ifs.probabilities(probe).min(axis=1))
    contractive = all(l < 1.0 - CONTRACTION_MARGIN for l in lips)
    positive = all(p > 0.0 for p in pmin)
    return HyperbolicityReport(tuple(lips), pmin, contractive, positive, contractive and positive)


# ---------------------------------------------------------------------------
# Named constructions
# ---------------------------------------------------------------------------

def cantor_ifs() -> ClassicalIFS:
    """Two thirds-contractions with equal weights (middle-thirds Cantor set)."""
    return ClassicalIFS(INTERVAL, [Affine1D(1 / 3, 0.0), Affine1D(1 / 3, 2 / 3)], [0.5, 0.5], "cantor")


def weighted_cantor_ifs() -> ClassicalIFS:
    """Cantor maps with place-dependent weights ``p1 = x``, ``p2 = 1 - x``."""
    return ClassicalIFS(INTERVAL, [Affine1D(1 / 3, 0.0), Affine1D(1 / 3, 2 / 3)],
                        [PlaceDependent("x"), PlaceDependent("1-x")], "weighted-cantor")


def cantor_product_ifs() -> ClassicalIFS:
    """Four one-axis thirds-contractions of the unit square."""
    sx = ((1 / 3, 0.0), (0.0, 1.0))
    sy = ((1.0, 0.0), (0.0, 1 / 3))
    maps = [Affine2D(sx), Affine2D(sx, (2 / 3, 0.0)), Affine2D(sy), Affine2D(sy, (0.0, 2 / 3))]
    return ClassicalIFS(SQUARE, maps, [0.25] * 4, "cantor-product")


def sphere_rotation_ifs(chi1: float, chi2: float, tilt: float) -> ClassicalIFS:
    """Rotation about z by ``chi1`` and about an axis tilted by ``tilt`` from z by ``chi2``."""
    axis2 = (math.sin(tilt), 0.0, math.cos(tilt))
    return ClassicalIFS(SPHERE, [SphereRotation((0, 0, 1), chi1), SphereRotation(axis2, chi2)],
                        [0.5, 0.5], "sphere-rotations")


def tent_bernoulli_ifs() -> ClassicalIFS:
    return ClassicalIFS(INTERVAL, [Tent(), Bernoulli()], [0.5, 0.5], "tent-bernoulli")


def zx_rotation_ifs(theta1: float, theta2: float, latitude_weights: bool = False) -> ClassicalIFS:
    """``R_z(theta1)`` and ``R_x(theta2)``; optionally weighted ``(1 +- cos theta)/2``."""
    maps = [SphereRotation((0, 0, 1), theta1), SphereRotation((1, 0, 0), theta2)]
    probs = ([PlaceDependent("(1+cos theta)/2"), PlaceDependent("(1-cos theta)/2")]
             if latitude_weights else [0.5, 0.5])
    return ClassicalIFS(SPHERE, maps, probs, "zx-rotations")


def kicked_top_ifs(alpha: float, beta: float, delta: float) -> ClassicalIFS:
    """Classical top kicked with strength ``beta`` or ``beta + delta``."""
    return ClassicalIFS(SPHERE, [ClassicalKickedTop(alpha, beta), ClassicalKickedTop(alpha, beta + delta)],
                        [0.5, 0.5], "kicked-top")


def cantor_profile(level: int, resolution: int | None = None) -> np.ndarray:
    """Exact self-similar Cantor measure of the level-``level`` cylinders.

    Returned on ``resolution`` equal bins (default ``3**level``); each
    cylinder's mass ``2**-level`` is spread uniformly over its bins.
    """
    n = 3 ** level
    digits = np.arange(n)
    mask = np.ones(n, dtype=bool)
    for _ in range(level):
        mask &= digits % 3 != 1
        digits //= 3
    prof = mask / mask.sum()
    m = n if resolution is None else resolution
    if m % n == 0:
        return np.repeat(prof, m // n) / (m // n)
    if n % m == 0:
        return prof.reshape(m, n // m).sum(axis=1)
    raise PreconditionError(f"resolution {m} is not commensurate with 3**{level}")
