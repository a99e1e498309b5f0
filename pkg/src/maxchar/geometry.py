"""Points, boxes, uniform grids, and exact segment geometry in d = 1, 2."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Volume of the unit ball, hard-coded for the two supported dimensions.
UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi}

SUPPORTED_DIMENSIONS = (1, 2)


def ball_volume(dimension: int, r: float) -> float:
    """Volume of the open ball of radius r (boundary has measure zero)."""
    return UNIT_BALL_VOLUME[dimension] * r**dimension


def as_point(x, dimension: int) -> tuple[float, ...]:
    """Coerce a scalar or coordinate sequence to a finite tuple of length d."""
    if np.isscalar(x):
        pt = (float(x),)
    else:
        pt = tuple(float(c) for c in x)
    if len(pt) != dimension:
        raise ValueError(f"expected {dimension} coordinates, got {len(pt)}")
    if not all(math.isfinite(c) for c in pt):
        raise ValueError(f"non-finite coordinates: {pt}")
    return pt


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo, hi] per axis.  Containment is closed."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(c) for c in self.lo)
        hi = tuple(float(c) for c in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo/hi dimension mismatch")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty box: {lo} .. {hi}")

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def diameter(self) -> float:
        return math.dist(self.lo, self.hi)

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        """Row-wise closed containment test for an (n, d) array."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def contains_box(self, other: "Box") -> bool:
        return all(a <= b for a, b in zip(self.lo, other.lo)) and all(
            a >= b for a, b in zip(self.hi, other.hi)
        )


@dataclass(frozen=True)
class UniformGrid:
    """Uniform node lattice: node i sits at origin + i * spacing per axis.

    `extents` counts nodes per axis.  A node doubles as the center of a cell
    of side `spacing`, so a grid carrying a density covers the box
    [origin - h/2, last node + h/2] exactly and the covered volume is
    prod(extents) * spacing**d.
    """

    origin: tuple[float, ...]
    spacing: float
    extents: tuple[int, ...]

    def __post_init__(self):
        origin = tuple(float(c) for c in self.origin)
        extents = tuple(int(n) for n in self.extents)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "spacing", float(self.spacing))
        if self.spacing <= 0 or not math.isfinite(self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if len(origin) != len(extents):
            raise ValueError("origin/extents dimension mismatch")
        if len(origin) not in SUPPORTED_DIMENSIONS:
            raise ValueError(f"unsupported dimension {len(origin)}")
        if any(n < 1 for n in extents):
            raise ValueError(f"extents must be >= 1, got {extents}")
        if not all(math.isfinite(c) for c in origin):
            raise ValueError("non-finite origin")

    @property
    def dimension(self) -> int:
        return len(self.origin)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.extents))

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def axis(self, k: int) -> np.ndarray:
        return self.origin[k] + self.spacing * np.arange(self.extents[k])

    def points(self) -> np.ndarray:
        """All nodes as an (n, d) array, row-major in node index order."""
        if self.dimension == 1:
            return self.axis(0)[:, None]
        c0, c1 = np.meshgrid(self.axis(0), self.axis(1), indexing="ij")
        return np.column_stack([c0.ravel(), c1.ravel()])

    def node_box(self) -> Box:
        lo = self.origin
        hi = tuple(self.origin[k] + self.spacing * (self.extents[k] - 1)
                   for k in range(self.dimension))
        return Box(lo, hi)

    def cell_box(self) -> Box:
        """Box covered by the cells (nodes padded by half a spacing)."""
        half = 0.5 * self.spacing
        nb = self.node_box()
        return Box(tuple(c - half for c in nb.lo), tuple(c + half for c in nb.hi))

    @classmethod
    def span_nodes(cls, lo, hi, spacing: float) -> "UniformGrid":
        """Grid whose nodes run from lo to hi inclusive (endpoints on nodes)."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        extents = tuple(int(round((b - a) / spacing)) + 1 for a, b in zip(lo, hi))
        return cls(tuple(lo), spacing, extents)

    @classmethod
    def cover_cells(cls, lo, hi, spacing: float) -> "UniformGrid":
        """Cell-centered grid covering [lo, hi]: first node at lo + h/2."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        extents = tuple(max(1, int(round((b - a) / spacing))) for a, b in zip(lo, hi))
        origin = tuple(a + 0.5 * spacing for a in lo)
        return cls(origin, spacing, extents)


def segment_ball_chord(a: np.ndarray, b: np.ndarray, center: np.ndarray,
                       r) -> np.ndarray:
    """Length of segment [a, b] inside the ball of radius r around center.

    All of a, b may be (m, d) stacks; center is a single point; r is a scalar
    or an array broadcastable against the m segments.  Open versus closed
    makes no difference to the length.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    center = np.asarray(center, dtype=float)
    u = b - a
    seg2 = np.einsum("ij,ij->i", u, u)
    w = a - center
    # |w + t u|^2 < r^2 as a quadratic in t
    bq = 2.0 * np.einsum("ij,ij->i", w, u)
    cq = np.einsum("ij,ij->i", w, w) - np.asarray(r, dtype=float) ** 2
    disc = bq * bq - 4.0 * seg2 * cq
    out = np.zeros(len(a))
    ok = (disc > 0) & (seg2 > 0)
    if np.any(ok):
        sq = np.sqrt(disc[ok])
        t0 = (-bq[ok] - sq) / (2.0 * seg2[ok])
        t1 = (-bq[ok] + sq) / (2.0 * seg2[ok])
        t0 = np.clip(t0, 0.0, 1.0)
        t1 = np.clip(t1, 0.0, 1.0)
        out[ok] = (t1 - t0) * np.sqrt(seg2[ok])
    return out


def segment_ball_chords_at(a: np.ndarray, b: np.ndarray, centers: np.ndarray,
                           radii: np.ndarray) -> np.ndarray:
    """Total chord length of one segment inside per-center balls.

    centers is (n, d), radii is (n,), the segment is fixed.  Returns (n,).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.asarray(radii, dtype=float)
    u = b - a
    seg2 = float(u @ u)
    if seg2 == 0.0:
        return np.zeros(len(centers))
    w = a - centers  # (n, d)
    bq = 2.0 * (w @ u)
    cq = np.einsum("ij,ij->i", w, w) - radii**2
    disc = bq * bq - 4.0 * seg2 * cq
    out = np.zeros(len(centers))
    ok = disc > 0
    if np.any(ok):
        sq = np.sqrt(disc[ok])
        t0 = np.clip((-bq[ok] - sq) / (2.0 * seg2), 0.0, 1.0)
        t1 = np.clip((-bq[ok] + sq) / (2.0 * seg2), 0.0, 1.0)
        out[ok] = (t1 - t0) * math.sqrt(seg2)
    return out


def segment_box_overlap(a: np.ndarray, b: np.ndarray, box: Box) -> float:
    """Arclength of segment [a, b] inside a closed box (Liang-Barsky clip)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u = b - a
    t0, t1 = 0.0, 1.0
    for k in range(box.dimension):
        if u[k] == 0.0:
            if a[k] < box.lo[k] or a[k] > box.hi[k]:
                return 0.0
            continue
        ta = (box.lo[k] - a[k]) / u[k]
        tb = (box.hi[k] - a[k]) / u[k]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 >= t1:
            return 0.0
    return (t1 - t0) * float(np.linalg.norm(u))


def point_segment_distance(pts: np.ndarray, a: np.ndarray,
                           b: np.ndarray) -> np.ndarray:
    """Distance from each row of pts (n, d) to segment [a, b]."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u = b - a
    seg2 = float(u @ u)
    if seg2 == 0.0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip(((pts - a) @ u) / seg2, 0.0, 1.0)
    proj = a + t[:, None] * u
    return np.linalg.norm(pts - proj, axis=1)
