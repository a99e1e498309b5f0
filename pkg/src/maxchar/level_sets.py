"""Distribution curves of maximal fields and the verdicts built on them.

The central object is the map lambda -> lambda * vol({field > lambda}),
computed on the field's evaluation window.  Tail statistics of that curve
over its top decade classify the input (singular mass persists, absolutely
continuous mass decays).  The module also carries the point inequality
checks that share this machinery: the reverse weak (1,1) bound, the almost
semigroup property of mollified averages, and divergence of mollifications
on singular support.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import TruncationError
from .geometry import Box, UniformGrid, ball_volume
from .maximal import MaximalField, RadiusGrid, maximal_field, \
    oscillation_field
from .measure import GridFunction, Measure

_FP = 1e-12


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly increasing geometric grid of threshold levels."""

    lambdas: tuple

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.size < 2:
            raise ValueError("need at least two levels")
        if lam[0] <= 0 or not np.all(np.isfinite(lam)):
            raise ValueError("levels must be positive and finite")
        if not np.all(np.diff(lam) > 0):
            raise ValueError("levels must be strictly increasing")
        object.__setattr__(self, "lambdas", tuple(lam))
        object.__setattr__(self, "_lam", lam)

    @classmethod
    def geometric(cls, lam_min: float, lam_max: float,
                  per_decade: int = 48) -> "LambdaGrid":
        if not (0 < lam_min < lam_max):
            raise ValueError("need 0 < lam_min < lam_max")
        decades = math.log10(lam_max / lam_min)
        count = max(2, int(math.ceil(per_decade * decades)) + 1)
        return cls(tuple(np.geomspace(lam_min, lam_max, count)))

    @property
    def decades(self) -> float:
        return math.log10(self._lam[-1] / self._lam[0])


def superlevel_volume(field: MaximalField, lam: float):
    """Volume of {field > lam} inside the window, with a boundary flag.

    In d=1 the set is resolved below grid scale: between adjacent nodes the
    field is modeled as harmonic in position (1/value affine), which is the
    exact profile of a far-field atom; the level crossing lands at the
    matching subcell fraction.  Cells whose lower node is zero fall back to
    affine interpolation.  In d=2 the volume is the node count times the
    cell area.  The flag reports the set touching the window boundary.
    """
    v = field.values
    h = field.grid.spacing
    if field.grid.dimension == 1:
        a, b = v[:-1], v[1:]
        above_a = a > lam
        above_b = b > lam
        volume = h * float(np.count_nonzero(above_a & above_b))
        cross = above_a != above_b
        if np.any(cross):
            hi = np.maximum(a[cross], b[cross])
            lo = np.minimum(a[cross], b[cross])
            frac = np.empty(hi.shape)
            pos = lo > 0
            frac[pos] = ((1.0 / lam - 1.0 / hi[pos])
                         / (1.0 / lo[pos] - 1.0 / hi[pos]))
            frac[~pos] = (hi[~pos] - lam) / (hi[~pos] - lo[~pos])
            volume += h * float(np.sum(frac))
        touches = bool(above_a[0] or above_b[-1]) if v.size > 1 else bool(v[0] > lam)
        if v.size > 1:
            # end nodes own half a cell beyond the pairwise intervals
            volume += 0.5 * h * (float(above_a[0]) + float(above_b[-1]))
        elif v[0] > lam:
            volume += h
        return volume, touches
    grid2 = v.reshape(field.grid.extents)
    above = grid2 > lam
    volume = float(np.count_nonzero(above)) * h * h
    touches = bool(above[0, :].any() or above[-1, :].any()
                   or above[:, 0].any() or above[:, -1].any())
    return volume, touches


def superlevel_nodes(field: MaximalField, lam: float) -> np.ndarray:
    """Boolean node mask of {field > lam}; the raw set behind the volume."""
    return field.values > lam


@dataclass(frozen=True)
class DistributionCurve:
    lambdas: tuple
    volumes: tuple
    flags: tuple
    window: Box
    variant: str

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        vol = np.asarray(self.volumes, dtype=float)
        flg = np.asarray(self.flags, dtype=bool)
        if not (lam.size == vol.size == flg.size):
            raise ValueError("mismatched sample arrays")
        if np.any(vol < 0):
            raise ValueError("negative volume")
        slack = _FP * (1.0 + vol.max(initial=0.0))
        if np.any(np.diff(vol) > slack):
            raise ValueError("superlevel volumes must be nonincreasing")
        object.__setattr__(self, "lambdas", tuple(lam))
        object.__setattr__(self, "volumes", tuple(vol))
        object.__setattr__(self, "flags", tuple(bool(f) for f in flg))
        object.__setattr__(self, "_lam", lam)
        object.__setattr__(self, "_vol", vol)
        object.__setattr__(self, "_flg", flg)

    @property
    def products(self) -> np.ndarray:
        return self._lam * self._vol

    def __len__(self) -> int:
        return len(self.lambdas)


def distribution_curve(field: MaximalField, lg: LambdaGrid,
                       threads: int = 1) -> DistributionCurve:
    """Sample lambda -> vol({field > lambda}) over the level grid."""
    if field.flagged_fraction > 0.5:
        raise TruncationError(
            f"{field.flagged_fraction:.0%} of nodes are below the resolved "
            "radius scale; refine the grid or shrink r_min")
    lam = np.asarray(lg.lambdas)

    def run(idx: np.ndarray):
        return [superlevel_volume(field, lam[i]) for i in idx]

    order = np.arange(lam.size)
    if threads > 1 and lam.size > 8:
        chunks = np.array_split(order, min(threads, lam.size))
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run, chunks))
        results = [r for part in parts for r in part]
    else:
        results = run(order)
    volumes = tuple(r[0] for r in results)
    flags = tuple(r[1] for r in results)
    return DistributionCurve(lambdas=tuple(lam), volumes=volumes, flags=flags,
                             window=field.grid.cell_box(), variant=field.variant)


# ----------------------------------------------------------------------
# tail classification


DECAYS = "decays_to_zero"
PERSISTS = "bounded_away_from_zero"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TailVerdict:
    classification: str
    tail_min: float
    tail_max: float
    tail_last: float
    monotone: bool
    threshold: float
    reason: str = ""

    def __post_init__(self):
        if not (self.tail_min - _FP <= self.tail_last <= self.tail_max + _FP):
            raise ValueError("tail stats out of order")


def tail_verdict(curve: DistributionCurve, threshold: float) -> TailVerdict:
    """Classify the curve by its products over the top decade of levels.

    decays_to_zero if the whole decade sits below the threshold,
    bounded_away_from_zero if it sits above; anything else, including a
    window-boundary flag inside the decade, is inconclusive.
    """
    lam = np.asarray(curve.lambdas)
    if lam[-1] / lam[0] < 10.0 * (1 - 1e-9):
        raise ValueError("curve must span at least one decade of levels")
    decade = lam >= lam[-1] / 10.0 * (1 - _FP)
    prods = curve.products[decade]
    tail_min = float(prods.min())
    tail_max = float(prods.max())
    tail_last = float(prods[-1])
    diffs = np.diff(prods)
    scale = 0.05 * max(tail_max, threshold)  # 5% ripple allowance
    monotone = bool(np.all(diffs <= scale) or np.all(diffs >= -scale))
    flagged = bool(np.any(np.asarray(curve.flags)[decade]))
    if flagged:
        cls, reason = INCONCLUSIVE, "superlevel set reaches the window boundary"
    elif tail_max < threshold:
        cls, reason = DECAYS, ""
    elif tail_min > threshold:
        cls, reason = PERSISTS, ""
    else:
        cls = INCONCLUSIVE
        reason = "tail straddles threshold" + ("" if monotone else
                                               " and is not monotone")
    return TailVerdict(cls, tail_min, tail_max, tail_last, monotone,
                       float(threshold), reason)


def weak11_constant(curve: DistributionCurve, total_mass: float) -> float:
    """sup_lambda lambda*vol({field > lambda}) normalized by the input mass."""
    if total_mass <= 0:
        raise ValueError("total mass must be positive")
    return float(curve.products.max()) / total_mass


# ----------------------------------------------------------------------
# evaluation window sizing


def evaluation_window(mu: Measure, lam_min: float,
                      cushion: float = 1.05) -> Box:
    """Support box padded so that {M|mu| > lam_min} cannot escape it.

    A ball reaching the support from distance t has radius > t, hence
    average mass at most |mu| / (omega_d t^d); the margin inverts that at
    lam_min, the cushion keeps the crossing strictly inside.
    """
    if lam_min <= 0:
        raise ValueError("lam_min must be positive")
    if cushion < 1:
        raise ValueError("cushion must be at least 1")
    d = mu.dimension
    total = mu.total_variation()
    if total == 0:
        return Box((-1.0,) * d, (1.0,) * d)
    margin = cushion * (total / (ball_volume(d, 1.0) * lam_min)) ** (1.0 / d)
    sb = mu.support_box()
    lo = tuple(c - margin for c in sb.lo)
    hi = tuple(c + margin for c in sb.hi)
    return Box(lo, hi)


def evaluation_grid(mu: Measure, lam_min: float, spacing: float,
                    cushion: float = 1.05) -> UniformGrid:
    window = evaluation_window(mu, lam_min, cushion)
    return UniformGrid.cover_cells(window.lo, window.hi, spacing)


# ----------------------------------------------------------------------
# inequality checks sharing the level-set machinery


class ExperimentResult(NamedTuple):
    field: MaximalField
    curve: DistributionCurve
    verdict: TailVerdict


def distribution_experiment(mu: Measure, variant: str = "M",
                            tau: Optional[float] = None, h: float = 1e-3,
                            radii_per_decade: int = 64,
                            lambda_decades: float = 2.0,
                            lam_max: Optional[float] = None,
                            threshold: Optional[float] = None,
                            cushion: float = 1.05,
                            threads: int = 1) -> ExperimentResult:
    """Full pipeline measure -> field -> curve -> verdict.

    Default level range tops out where a superlevel component is still a
    few cells wide (lam_max = |mu| / (omega_d (5h)^d)), spanning
    lambda_decades downward; the window follows the containment rule at
    lam_min.  Threshold defaults to 5% of the total mass.
    """
    d = mu.dimension
    total = mu.total_variation()
    if total == 0:
        grid = UniformGrid.cover_cells((-1.0,) * d, (1.0,) * d, 0.5)
        rg = RadiusGrid.geometric(0.5, 4.0, 8)
        fld = maximal_field(mu, grid, rg, variant, tau=None)
        curve = distribution_curve(fld, LambdaGrid.geometric(0.1, 10.0, 8))
        verdict = tail_verdict(curve, threshold if threshold else 1e-12)
        return ExperimentResult(fld, curve, verdict)
    if lam_max is None:
        lam_max = total / (ball_volume(d, 1.0) * (5.0 * h) ** d)
    lam_min = lam_max / 10.0 ** lambda_decades
    grid = evaluation_grid(mu, lam_min, h, cushion)
    rg = RadiusGrid.geometric(h, 1.2 * grid.cell_box().diameter(),
                              radii_per_decade)
    fld = maximal_field(mu, grid, rg, variant, tau=tau, threads=threads)
    curve = distribution_curve(fld, LambdaGrid.geometric(lam_min, lam_max,
                                                         48),
                               threads=threads)
    thr = threshold if threshold is not None else 0.05 * total
    return ExperimentResult(fld, curve, tail_verdict(curve, thr))


def sobolev_experiment(f, h: float = 1e-3, radii_per_decade: int = 48,
                       lambda_decades: float = 2.0,
                       threshold: Optional[float] = None,
                       threads: int = 1) -> ExperimentResult:
    """Oscillation-field pipeline for a 1D function of bounded variation.

    The slope grid starts at 4h (single-cell balls see no variation of a
    sampled function, so the smallest meaningful radius spans a few cells)
    and levels top out at 1/(16h), the largest slope scale the radius floor
    resolves.  The window pads the variation span so that oscillation
    values past the pad sit below lam_min: shifting by the left tail value
    makes f summable on one side, giving the L1/s^2 envelope, and a
    nonvanishing right tail adds its TV/(4s) term.
    """
    r_min = 4.0 * h
    lam_max = 1.0 / (4.0 * r_min)
    lam_min = lam_max / 10.0 ** lambda_decades
    lo, hi = f.support_span()
    if hi <= lo:
        hi = lo + 1.0
    shift = f.value(lo - 1.0)
    tv = f.total_variation()
    l1 = f.abs_deviation_integral(lo, hi, shift)
    base = 4.0 * r_min
    m_left = 1.05 * max(base, math.sqrt(l1 / lam_min))
    m_right = m_left
    tail = abs(f.value(hi + 1.0) - shift)
    if tail > 1e-12:
        m_right = 1.05 * max(base, math.sqrt(l1 / lam_min),
                             tv / (4.0 * lam_min))
    grid = UniformGrid.cover_cells([lo - m_left], [hi + m_right], h)
    gf = GridFunction(grid, f.value(grid.axis(0)) - shift)
    rg = RadiusGrid.geometric(r_min, 1.2 * grid.cell_box().diameter(),
                              radii_per_decade)
    fld = oscillation_field(gf, rg, threads=threads)
    curve = distribution_curve(fld, LambdaGrid.geometric(lam_min, lam_max,
                                                         48),
                               threads=threads)
    thr = threshold if threshold is not None else max(0.05 * tv, 1e-12)
    return ExperimentResult(fld, curve, tail_verdict(curve, thr))


class ReverseWeakResult(NamedTuple):
    lhs: float
    rhs: float
    ratio: float
    holds: bool


def reverse_weak11_check(f: GridFunction, t: float, big_c: float = 1.0,
                         c_emp: float = 0.1,
                         radius_grid: Optional[RadiusGrid] = None,
                         cube: Optional[Box] = None,
                         threads: int = 1) -> ReverseWeakResult:
    """Reverse-direction weak (1,1) bound for a nonnegative grid density:

        t * vol({Mf > big_c * t})  >=  c_emp * integral of f over {f > t} ?

    With cube given, f is first restricted to it and t must exceed the mean
    of f over the cube (the local form of the inequality).
    """
    if t <= 0:
        raise ValueError("level t must be positive")
    values = np.asarray(f.values, dtype=float).reshape(-1)
    if np.any(values < 0):
        raise ValueError("density must be nonnegative")
    h = f.grid.spacing
    d = f.grid.dimension
    cell = h ** d
    if cube is not None:
        inside = cube.contains_points(f.grid.points())
        if not np.any(inside):
            raise ValueError("cube misses the grid")
        if t <= float(values[inside].mean()):
            raise ValueError("local form needs t above the cube mean")
        values = np.where(inside, values, 0.0)
        f = GridFunction(f.grid, values.reshape(np.asarray(f.values).shape))
    rhs = cell * float(np.sum(values[values > t]))
    mu = f.as_density_measure()
    level = big_c * t
    if mu.total_variation() == 0:
        return ReverseWeakResult(0.0, rhs, math.inf if rhs == 0 else 0.0,
                                 rhs == 0)
    grid = evaluation_grid(mu, level, h)
    if radius_grid is None:
        radius_grid = RadiusGrid.geometric(h, 1.2 * grid.cell_box().diameter())
    fld = maximal_field(mu, grid, radius_grid, "M", threads=threads)
    volume, _ = superlevel_volume(fld, level)
    lhs = t * volume
    ratio = lhs / rhs if rhs > 0 else math.inf
    holds = lhs >= c_emp * rhs - _FP * (1.0 + rhs)
    return ReverseWeakResult(lhs, rhs, ratio, holds)


class SemigroupResult(NamedTuple):
    avg: float
    bound: float
    holds: bool
    nodes: int


def semigroup_check(mu: Measure, x, r: float, eps: float,
                    tolerance: float = 1e-6) -> SemigroupResult:
    """Grid average of the eps-mollification over B(x, r) against the
    2^d-inflated mollification at scale r + eps.

    The sampling grid is symmetric about x with spacing min(eps, r)/24 in
    d=1 (12 in d=2), fine enough that the discrete average cannot overshoot
    the continuum bound for the stress ranges used in the test suite.
    """
    if r <= 0 or eps <= 0:
        raise ValueError("r and eps must be positive")
    d = mu.dimension
    x = np.asarray(x, dtype=float).reshape(d)
    delta = min(eps, r) / (24.0 if d == 1 else 12.0)
    k = int(math.floor(r * (1 - _FP) / delta))
    offsets = delta * np.arange(-k, k + 1)
    if d == 1:
        pts = x[0] + offsets.reshape(-1, 1)
    else:
        oi, oj = np.meshgrid(offsets, offsets, indexing="ij")
        keep = oi ** 2 + oj ** 2 < r * r * (1 - _FP)
        pts = np.stack([x[0] + oi[keep], x[1] + oj[keep]], axis=1)
    vals = mu.mollified_density_points(pts, eps)
    avg = float(vals.mean())
    bound = (2.0 ** d) * mu.mollified_density(x, r + eps)
    holds = avg <= bound * (1.0 + tolerance) + _FP
    return SemigroupResult(avg, bound, holds, len(pts))


class BlowupReport(NamedTuple):
    points: tuple
    eps: tuple
    values: np.ndarray  # (n_points, n_eps)
    monotone_from: tuple
    holds: bool


def blowup_check(mu: Measure, samples: Sequence, eps_sequence: Sequence,
                 level: float = 1e6) -> BlowupReport:
    """Divergence of mollified densities along shrinking scales.

    For each sample point the mollification sequence must be nondecreasing
    from some index on and end above `level`; points off the singular
    support fail by decaying to zero instead.
    """
    eps = np.asarray(eps_sequence, dtype=float)
    if eps.size < 2 or np.any(np.diff(eps) >= 0) or eps[-1] <= 0:
        raise ValueError("need a strictly decreasing positive eps sequence")
    d = mu.dimension
    pts = np.asarray([np.asarray(p, dtype=float).reshape(d) for p in samples])
    vals = np.stack([mu.mollified_density_points(pts, e) for e in eps], axis=1)
    monotone_from = []
    ok = True
    for row in vals:
        increases = np.diff(row) >= -_FP * (1.0 + np.abs(row[:-1]))
        idx = len(row) - 1
        while idx > 0 and increases[idx - 1]:
            idx -= 1
        monotone_from.append(idx)
        ok = ok and idx <= len(row) - 2 and row[-1] >= level
    return BlowupReport(tuple(map(tuple, pts)), tuple(eps), vals,
                        tuple(monotone_from), ok)
