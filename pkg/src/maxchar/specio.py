"""Spec-file loading and artifact serialization.

Input specs are JSON.  The top-level keys discriminate the payload:
"breakpoints" marks a piecewise-affine function, "times" a time-dependent
derivative field, "dimension" a measure.  Schema problems raise
SpecSchemaError carrying the file path and the line of the offending key,
so CLI diagnostics stay line-precise.

Output artifacts are CSV with fixed 12-significant-digit formatting and
key=value verdict blocks; identical inputs serialize byte-identically.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .bv import BVFunction1D, derivative_measure
from .decay import DecayReport, TimeField
from .errors import SpecSchemaError
from .geometry import UniformGrid
from .level_sets import DistributionCurve, TailVerdict
from .measure import Measure


def fmt(x) -> str:
    return format(float(x), ".12g")


def _line_of(text: str, key: str) -> int:
    idx = text.find(f'"{key}"')
    if idx < 0:
        return 1
    return text.count("\n", 0, idx) + 1


class _Ctx:
    """Carries the raw text so nested helpers can report key lines."""

    def __init__(self, path, text: str):
        self.path = str(path)
        self.text = text

    def fail(self, message: str, key: str = "") -> SpecSchemaError:
        line = _line_of(self.text, key) if key else 1
        return SpecSchemaError(message, path=self.path, line=line)

    def need(self, obj: dict, key: str, kinds, where: str):
        if key not in obj:
            raise self.fail(f"missing required key '{key}' in {where}", where)
        val = obj[key]
        if not isinstance(val, kinds):
            raise self.fail(
                f"key '{key}' in {where} has type {type(val).__name__}", key)
        return val


def _parse_density(spec: dict, dimension: int, ctx: _Ctx):
    origin = ctx.need(spec, "origin", list, "density")
    spacing = ctx.need(spec, "spacing", (int, float), "density")
    values = np.asarray(ctx.need(spec, "values", list, "density"),
                        dtype=float)
    if dimension == 1:
        if values.ndim != 1:
            raise ctx.fail("1D density values must be a flat list", "values")
        extents = (values.size,)
    else:
        if values.ndim != 2:
            raise ctx.fail("2D density values must be a list of rows",
                           "values")
        extents = values.shape
    try:
        grid = UniformGrid(tuple(origin), float(spacing), extents)
    except ValueError as e:
        raise ctx.fail(f"bad density grid: {e}", "density")
    return (grid, values)


def _parse_measure(obj: dict, ctx: _Ctx) -> Measure:
    d = ctx.need(obj, "dimension", int, "measure")
    if d not in (1, 2):
        raise ctx.fail(f"dimension must be 1 or 2, got {d}", "dimension")
    atoms = []
    for i, entry in enumerate(obj.get("atoms", [])):
        if not isinstance(entry, dict):
            raise ctx.fail(f"atom #{i} must be an object", "atoms")
        loc = ctx.need(entry, "location", (list, int, float), "atom")
        w = ctx.need(entry, "weight", (int, float), "atom")
        loc = [loc] if isinstance(loc, (int, float)) else loc
        atoms.append((tuple(float(c) for c in loc), float(w)))
    density = None
    if obj.get("density") is not None:
        density = _parse_density(ctx.need(obj, "density", dict, "measure"),
                                 d, ctx)
    curves = []
    for i, entry in enumerate(obj.get("curves", [])):
        if not isinstance(entry, dict):
            raise ctx.fail(f"curve #{i} must be an object", "curves")
        pts = np.asarray(ctx.need(entry, "points", list, "curve"),
                         dtype=float)
        rho = float(ctx.need(entry, "density", (int, float), "curve"))
        curves.append((pts, rho))
    try:
        return Measure(d, atoms=tuple(atoms), density=density,
                       curves=tuple(curves))
    except ValueError as e:
        raise ctx.fail(f"invalid measure: {e}", "dimension")


def _parse_bv(obj: dict, ctx: _Ctx) -> BVFunction1D:
    bp = tuple(ctx.need(obj, "breakpoints", list, "function"))
    slopes = tuple(obj.get("slopes", []))
    jumps = []
    for i, entry in enumerate(obj.get("jumps", [])):
        if not (isinstance(entry, list) and len(entry) == 2):
            raise ctx.fail(f"jump #{i} must be a [location, height] pair",
                           "jumps")
        jumps.append((float(entry[0]), float(entry[1])))
    try:
        return BVFunction1D(
            breakpoints=bp, slopes=slopes, jumps=tuple(jumps),
            initial_value=float(obj.get("initial_value", 0.0)),
            compact_support=bool(obj.get("compact_support", False)))
    except ValueError as e:
        raise ctx.fail(f"invalid function: {e}", "breakpoints")


def _parse_timefield(obj: dict, ctx: _Ctx) -> TimeField:
    times = ctx.need(obj, "times", list, "time field")
    raw_slices = ctx.need(obj, "slices", list, "time field")
    if len(raw_slices) != len(times):
        raise ctx.fail(
            f"{len(times)} times but {len(raw_slices)} slices", "slices")
    slices = []
    for i, entry in enumerate(raw_slices):
        if not isinstance(entry, dict):
            raise ctx.fail(f"slice #{i} must be an object", "slices")
        if "breakpoints" in entry:
            slices.append(derivative_measure(_parse_bv(entry, ctx)))
        elif "dimension" in entry:
            slices.append(_parse_measure(entry, ctx))
        else:
            raise ctx.fail(
                f"slice #{i} is neither a function (breakpoints) nor a "
                "measure (dimension)", "slices")
    ball = ctx.need(obj, "ball", dict, "time field")
    center = ctx.need(ball, "center", (list, int, float), "ball")
    center = [center] if isinstance(center, (int, float)) else center
    radius = float(ctx.need(ball, "radius", (int, float), "ball"))
    horizon = float(obj.get("T", 1.0))
    try:
        return TimeField(times=tuple(float(t) for t in times),
                         slices=tuple(slices),
                         ball_center=tuple(float(c) for c in center),
                         ball_radius=radius, horizon=horizon)
    except ValueError as e:
        raise ctx.fail(f"invalid time field: {e}", "times")


def _read(path) -> _Ctx:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise SpecSchemaError(str(e), path=str(path))
    return _Ctx(p, text)


def _parse_root(ctx: _Ctx) -> dict:
    try:
        obj = json.loads(ctx.text)
    except json.JSONDecodeError as e:
        raise SpecSchemaError(f"invalid JSON: {e.msg}", path=ctx.path,
                              line=e.lineno)
    if not isinstance(obj, dict):
        raise ctx.fail("top level must be a JSON object")
    return obj


def load_measure(path) -> Measure:
    ctx = _read(path)
    return _parse_measure(_parse_root(ctx), ctx)


def load_bv(path) -> BVFunction1D:
    ctx = _read(path)
    return _parse_bv(_parse_root(ctx), ctx)


def load_timefield(path) -> TimeField:
    ctx = _read(path)
    return _parse_timefield(_parse_root(ctx), ctx)


def load_input(path) -> Union[Measure, BVFunction1D, TimeField]:
    """Load any spec file, discriminated by its top-level keys."""
    ctx = _read(path)
    obj = _parse_root(ctx)
    if "breakpoints" in obj:
        return _parse_bv(obj, ctx)
    if "times" in obj:
        return _parse_timefield(obj, ctx)
    if "dimension" in obj:
        return _parse_measure(obj, ctx)
    raise ctx.fail("cannot classify spec: expected one of the keys "
                   "'breakpoints', 'times', 'dimension'")


# ----------------------------------------------------------------------
# artifact writers


def distribution_csv(curve: DistributionCurve) -> str:
    lines = ["lambda,volume,product,flag"]
    for lam, vol, flag in zip(curve.lambdas, curve.volumes, curve.flags):
        lines.append(f"{fmt(lam)},{fmt(vol)},{fmt(lam * vol)},{int(flag)}")
    return "\n".join(lines) + "\n"


def decay_csv(report: DecayReport) -> str:
    lines = ["delta,Q"]
    for d, q in zip(report.deltas, report.q_values):
        lines.append(f"{fmt(d)},{fmt(q)}")
    return "\n".join(lines) + "\n"


def verdict_block(v: TailVerdict) -> str:
    lines = [f"classification={v.classification}",
             f"tail_min={fmt(v.tail_min)}",
             f"tail_max={fmt(v.tail_max)}",
             f"tail_last={fmt(v.tail_last)}",
             f"threshold={fmt(v.threshold)}"]
    if v.reason:
        lines.append(f"reason={v.reason}")
    return "\n".join(lines) + "\n"


def decay_block(r: DecayReport) -> str:
    lines = [f"verdict={r.verdict}",
             f"liminf_est={fmt(r.liminf_est)}",
             f"limsup_est={fmt(r.limsup_est)}",
             f"singular_mass_timeintegral={fmt(r.singular_mass_timeintegral)}",
             "singular_mass_timeintegral_closed="
             + fmt(r.singular_mass_timeintegral_closed),
             f"threshold={fmt(r.threshold)}"]
    return "\n".join(lines) + "\n"


def write_text(path, content: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(content)
