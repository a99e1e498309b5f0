"""Radius-sweep evaluation of the maximal operators and the oscillation field.

Variants:
  M     sup_r |mu|(B(x,r)) / (omega_d r^d)
  Mbar  sup_r |mu(B(x,r))| / (omega_d r^d)       (signed mass, cancellation)
  Mtau  as M but restricted to radii r < tau
  A     sup_r (1/r) avg_{B(x,r)} |f - mean_{B(x,r)} f|   (on grid functions)

The supremum is discretized over a geometric radius grid augmented with
event radii: for every evaluation point, the exact distances to each atom
(evaluated as the closed-ball limit from above) and to each sharp density
edge.  On purely atomic measures the augmented sweep attains the exact
supremum for every point farther than r_min from the support; the result is
always a lower bound of the true supremum and it is nondecreasing under
radius-grid refinement.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import WindowTooSmallError
from .geometry import UNIT_BALL_VOLUME, UniformGrid
from .measure import GridFunction, Measure

VARIANTS = ("M", "Mbar", "Mtau", "A")


@dataclass(frozen=True)
class RadiusGrid:
    """Strictly increasing positive candidate radii."""

    radii: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or len(r) < 2:
            raise ValueError("need at least two radii")
        if r[0] <= 0 or not np.all(np.diff(r) > 0):
            raise ValueError("radii must be positive and strictly increasing")
        object.__setattr__(self, "radii", r)

    @property
    def r_min(self) -> float:
        return float(self.radii[0])

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def count(self) -> int:
        return len(self.radii)

    @classmethod
    def geometric(cls, r_min: float, r_max: float,
                  per_decade: int = 64) -> "RadiusGrid":
        if not (0 < r_min < r_max):
            raise ValueError(f"bad radius range [{r_min}, {r_max}]")
        decades = math.log10(r_max / r_min)
        count = max(2, int(math.ceil(per_decade * decades)) + 1)
        return cls(np.geomspace(r_min, r_max, count))

    def refined(self, factor: int = 2) -> "RadiusGrid":
        """Superset grid with (factor x) denser geometric sampling."""
        dense = np.geomspace(self.r_min, self.r_max,
                             (self.count - 1) * factor + 1)
        return RadiusGrid(np.unique(np.concatenate([self.radii, dense])))

    def union(self, other: "RadiusGrid") -> "RadiusGrid":
        return RadiusGrid(np.unique(np.concatenate([self.radii, other.radii])))


@dataclass(frozen=True)
class MaximalField:
    """Node-wise values of one maximal variant over an evaluation grid.

    flags marks truncation-limited nodes: for M/Mbar/Mtau, nodes closer than
    r_min to the singular support (values there are finite lower bounds of a
    possibly divergent supremum); for A, nodes where every radius was
    rejected by the boundary rule.
    """

    grid: UniformGrid
    values: np.ndarray
    variant: str
    radius_grid: RadiusGrid
    tau: Optional[float] = None
    flags: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        values = np.asarray(self.values, dtype=float).reshape(self.grid.extents)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite and nonnegative")
        object.__setattr__(self, "values", values)
        flags = self.flags
        if flags is None:
            flags = np.zeros(self.grid.extents, dtype=bool)
        flags = np.asarray(flags, dtype=bool).reshape(self.grid.extents)
        object.__setattr__(self, "flags", flags)

    @property
    def flagged_fraction(self) -> float:
        return float(np.mean(self.flags))


def _chunked_max(radii: np.ndarray, worker, threads: int):
    """Elementwise max of worker(radius_chunk) results, schedule-independent."""
    if threads <= 1 or len(radii) < 4:
        return worker(radii)
    chunks = np.array_split(radii, min(threads, len(radii)))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(worker, chunks))
    out = parts[0]
    for p in parts[1:]:
        out = np.maximum(out, p)
    return out


def maximal_values_at(mu: Measure, points: np.ndarray, rg: RadiusGrid,
                      variant: str = "M", tau: Optional[float] = None,
                      threads: int = 1):
    """Maximal values at arbitrary points; returns (values, flags).

    flags marks points within r_min of the singular support, where the
    truncated sweep cannot chase the blow-up.
    """
    if variant not in ("M", "Mbar", "Mtau"):
        raise ValueError(f"not a measure variant: {variant!r}")
    d = mu.dimension
    omega = UNIT_BALL_VOLUME[d]
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)

    radii = rg.radii
    if variant == "Mtau":
        if tau is None or not (rg.r_min < tau <= rg.r_max):
            raise ValueError("Mtau needs tau in (r_min, r_max]")
        radii = radii[radii < tau]
    signed = variant == "Mbar"

    atom_dist = None
    if d == 2 and len(mu._apos):
        atom_dist = np.linalg.norm(
            points[:, None, :] - mu._apos[None, :, :], axis=2)

    def sweep(rs):
        best = np.zeros(n)
        for r in rs:
            m = mu.ball_masses(points, float(r), absolute=not signed,
                               closed=False, _atom_dist=atom_dist)
            if signed:
                np.abs(m, out=m)
            np.maximum(best, m / (omega * r**d), out=best)
        return best

    best = _chunked_max(radii, sweep, threads)

    # event radii: exact atom distances (closed-ball limit) and sharp
    # density edges (open), both capped by the sweep truncation range
    def apply_events(dist, closed):
        ok = (dist > 0) & (dist >= rg.r_min)
        if variant == "Mtau":
            ok &= dist < tau
        else:
            ok &= dist <= rg.r_max
        if not np.any(ok):
            return
        sub_dist = atom_dist[ok] if atom_dist is not None else None
        m = mu.ball_masses(points[ok], dist[ok], absolute=not signed,
                           closed=closed, _atom_dist=sub_dist)
        if signed:
            np.abs(m, out=m)
        best[ok] = np.maximum(best[ok], m / (omega * dist[ok]**d))

    for j in range(len(mu._apos)):
        if d == 1:
            dist = np.abs(points[:, 0] - mu._apos[j, 0])
        else:
            dist = atom_dist[:, j]
        apply_events(dist, closed=True)
    for e in mu.density_sharp_edges():
        apply_events(np.abs(points[:, 0] - e), closed=False)

    flags = mu.singular_support_distance(points) < rg.r_min
    return best, flags


def maximal_point(mu: Measure, x, rg: RadiusGrid, variant: str = "M",
                  tau: Optional[float] = None) -> float:
    pt = np.asarray(x, dtype=float).reshape(1, mu.dimension)
    values, _ = maximal_values_at(mu, pt, rg, variant=variant, tau=tau)
    return float(values[0])


def maximal_field(mu: Measure, eval_grid: UniformGrid, rg: RadiusGrid,
                  variant: str = "M", tau: Optional[float] = None,
                  threads: int = 1) -> MaximalField:
    """Node-wise maximal values over an evaluation grid.

    Complexity O(nodes * radii * query): atomic queries cost O(log k) in 1D
    via sorted prefix sums, density queries O(1) amortized per row via
    cumulative sums; node evaluations are independent.
    """
    if eval_grid.dimension != mu.dimension:
        raise ValueError("grid dimension mismatch")
    support = mu.support_box()
    if support is not None and not eval_grid.cell_box().contains_box(support):
        raise WindowTooSmallError(
            f"support {support} not covered by evaluation window "
            f"{eval_grid.cell_box()}")
    values, flags = maximal_values_at(mu, eval_grid.points(), rg,
                                      variant=variant, tau=tau,
                                      threads=threads)
    return MaximalField(eval_grid, values.reshape(eval_grid.extents),
                        variant, rg, tau=tau,
                        flags=flags.reshape(eval_grid.extents))


# ----------------------------------------------------------------------
# oscillation functional


class OscillationValue(NamedTuple):
    value: float
    skipped_all: bool  # every radius was rejected by the boundary rule


def _node_window(r: float, h: float) -> int:
    """Largest integer offset with offset * h < r (guarded against fp)."""
    return int(math.ceil(r / h - 1e-9)) - 1


def _span_margin(r: float, h: float) -> int:
    """Smallest node index whose ball (x-r, x+r) stays inside the covered
    span (nodes padded by h/2); balls sticking out are rejected, not
    renormalized."""
    return max(0, int(math.ceil(r / h - 0.5 - 1e-9)))


def oscillation_point(f: GridFunction, x, rg: RadiusGrid) -> OscillationValue:
    """A f(x) over the radius grid; clipped balls are skipped."""
    grid = f.grid
    h = grid.spacing
    d = grid.dimension
    x = np.asarray(x, dtype=float).reshape(d)
    best = 0.0
    admitted = False
    if d == 1:
        ax = grid.axis(0)
        vals = f.values
        prefix = np.concatenate([[0.0], np.cumsum(vals)])
        lo_edge = ax[0] - 0.5 * h
        hi_edge = ax[-1] + 0.5 * h
        for r in rg.radii:
            if x[0] - r < lo_edge - 1e-12 or x[0] + r > hi_edge + 1e-12:
                continue
            lo = int(np.searchsorted(ax, x[0] - r, side="right"))
            hi = int(np.searchsorted(ax, x[0] + r, side="left")) - 1
            if hi < lo:
                continue
            cnt = hi - lo + 1
            mean = (prefix[hi + 1] - prefix[lo]) / cnt
            dev = float(np.sum(np.abs(vals[lo:hi + 1] - mean))) / cnt
            best = max(best, dev / r)
            admitted = True
    else:
        pts = grid.points()
        vals = f.values.ravel()
        box = grid.cell_box()
        for r in rg.radii:
            if any(x[k] - r < box.lo[k] - 1e-12 or x[k] + r > box.hi[k] + 1e-12
                   for k in range(2)):
                continue
            mask = np.linalg.norm(pts - x, axis=1) < r
            cnt = int(np.sum(mask))
            if cnt == 0:
                continue
            sel = vals[mask]
            mean = float(np.mean(sel))
            dev = float(np.mean(np.abs(sel - mean)))
            best = max(best, dev / r)
            admitted = True
    return OscillationValue(best, not admitted)


def _oscillation_field_1d(f: GridFunction, rg: RadiusGrid, threads: int):
    vals = f.values
    n = len(vals)
    h = f.grid.spacing
    prefix = np.concatenate([[0.0], np.cumsum(vals)])

    def sweep(rs):
        best = np.zeros(n)
        admitted = np.zeros(n, dtype=bool)
        for r in rs:
            K = _node_window(r, h)
            i_lo = max(K, _span_margin(r, h))
            i_hi = n - 1 - i_lo
            if i_lo > i_hi:
                continue
            admitted[i_lo:i_hi + 1] = True
            if K == 0:
                continue  # single-node window, deviation 0
            W = 2 * K + 1
            centers = np.arange(i_lo, i_hi + 1)
            means = (prefix[centers + K + 1] - prefix[centers - K]) / W
            windows = sliding_window_view(vals, W)
            block = max(1, int(4_000_000 // W))
            for b in range(0, len(centers), block):
                e = min(b + block, len(centers))
                segs = windows[i_lo - K + b:i_lo - K + e]
                dev = np.mean(np.abs(segs - means[b:e, None]), axis=1)
                out = slice(i_lo + b, i_lo + e)
                np.maximum(best[out], dev / r, out=best[out])
        return best, admitted

    if threads <= 1 or rg.count < 4:
        best, admitted = sweep(rg.radii)
    else:
        chunks = np.array_split(rg.radii, min(threads, rg.count))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(sweep, chunks))
        best = parts[0][0]
        admitted = parts[0][1]
        for b, a in parts[1:]:
            best = np.maximum(best, b)
            admitted |= a
    return best, ~admitted


def _oscillation_field_2d(f: GridFunction, rg: RadiusGrid):
    vals = f.values
    n0, n1 = vals.shape
    h = f.grid.spacing
    best = np.zeros_like(vals)
    admitted = np.zeros(vals.shape, dtype=bool)
    for r in rg.radii:
        K = _node_window(r, h)
        m = max(K, _span_margin(r, h))
        if 2 * m >= n0 or 2 * m >= n1:
            continue
        di, dj = np.meshgrid(np.arange(-K, K + 1), np.arange(-K, K + 1),
                             indexing="ij")
        keep = (di**2 + dj**2) * h**2 < r**2
        offs = list(zip(di[keep].ravel(), dj[keep].ravel()))
        core = (slice(m, n0 - m), slice(m, n1 - m))
        admitted[core] = True
        if len(offs) <= 1:
            continue
        acc = np.zeros((n0 - 2 * m, n1 - 2 * m))
        for a, b in offs:
            acc += vals[m + a:n0 - m + a, m + b:n1 - m + b]
        mean = acc / len(offs)
        dev = np.zeros_like(acc)
        for a, b in offs:
            dev += np.abs(vals[m + a:n0 - m + a, m + b:n1 - m + b] - mean)
        dev /= len(offs) * r
        best[core] = np.maximum(best[core], dev)
    return best.ravel(), ~admitted.ravel()


def oscillation_field(f: GridFunction, rg: RadiusGrid,
                      threads: int = 1) -> MaximalField:
    """A f at every node.  Nodes where all radii were skipped carry value 0
    and a flag."""
    if f.grid.dimension == 1:
        best, flags = _oscillation_field_1d(f, rg, threads)
    else:
        best, flags = _oscillation_field_2d(f, rg)
    return MaximalField(f.grid, best.reshape(f.grid.extents), "A", rg,
                        flags=flags.reshape(f.grid.extents))
