"""Distribution curves, tail verdicts, and the pointwise checks."""

import math

import numpy as np
import pytest

from maxchar.bv import BVFunction1D
from maxchar.errors import TruncationError
from maxchar.geometry import Box, UniformGrid
from maxchar.level_sets import (
    DECAYS,
    INCONCLUSIVE,
    PERSISTS,
    DistributionCurve,
    LambdaGrid,
    TailVerdict,
    blowup_check,
    distribution_curve,
    distribution_experiment,
    evaluation_window,
    reverse_weak11_check,
    semigroup_check,
    sobolev_experiment,
    superlevel_nodes,
    superlevel_volume,
    tail_verdict,
    weak11_constant,
)
from maxchar.maximal import RadiusGrid, maximal_field
from maxchar.measure import GridFunction, Measure, unit_atom


def atom_field(h=1e-3, half_width=2.0, per_decade=64):
    mu = unit_atom(0.0)
    grid = UniformGrid.cover_cells([-half_width], [half_width], h)
    rg = RadiusGrid.geometric(h, 4.0 * half_width, per_decade)
    return maximal_field(mu, grid, rg, "M")


def synthetic_curve(lambdas, volumes, flags=None):
    lambdas = tuple(lambdas)
    if flags is None:
        flags = (False,) * len(lambdas)
    return DistributionCurve(lambdas=lambdas, volumes=tuple(volumes),
                             flags=tuple(flags), window=Box((0.0,), (1.0,)),
                             variant="M")


class TestLambdaGrid:
    def test_geometric_span(self):
        lg = LambdaGrid.geometric(0.1, 10.0, per_decade=8)
        assert lg.lambdas[0] == pytest.approx(0.1)
        assert lg.lambdas[-1] == pytest.approx(10.0)
        assert lg.decades == pytest.approx(2.0)
        assert len(lg.lambdas) == 17

    def test_validation(self):
        with pytest.raises(ValueError):
            LambdaGrid((1.0,))
        with pytest.raises(ValueError):
            LambdaGrid((0.0, 1.0))
        with pytest.raises(ValueError):
            LambdaGrid((2.0, 1.0))
        with pytest.raises(ValueError):
            LambdaGrid.geometric(1.0, 0.5)


class TestSuperlevelVolume:
    def test_atom_volume_is_exact(self):
        # M for a unit atom is 1/(2|x|); {M > lam} = (-1/(2 lam), 1/(2 lam)).
        # 1/value is affine in |x|, so the harmonic subcell model is exact.
        fld = atom_field()
        for lam in (0.5, 1.0, 5.0, 20.0):
            vol, touches = superlevel_volume(fld, lam)
            assert vol == pytest.approx(1.0 / lam, rel=1e-10)
            assert not touches

    def test_boundary_flag(self):
        fld = atom_field(half_width=1.0)
        # {M > 0.3} = (-5/3, 5/3) spills out of [-1, 1]
        vol, touches = superlevel_volume(fld, 0.3)
        assert touches
        assert vol == pytest.approx(2.0, rel=1e-6)

    def test_single_node_window(self):
        mu = unit_atom(0.5)
        grid = UniformGrid.cover_cells([0.0], [1.0], 1.0)
        fld = maximal_field(mu, grid, RadiusGrid.geometric(0.5, 2.0, 8), "M")
        vol, touches = superlevel_volume(fld, 0.5)
        assert vol == 1.0 and touches
        vol, touches = superlevel_volume(fld, 2.0)
        assert vol == 0.0 and not touches

    def test_2d_counts_nodes(self):
        mu = unit_atom([0.0, 0.0], dimension=2)
        grid = UniformGrid.cover_cells([-1.5, -1.5], [1.5, 1.5], 0.25)
        fld = maximal_field(mu, grid, RadiusGrid.geometric(0.25, 6.0, 16), "M")
        lam = 1.0 / math.pi  # level set is the unit disk, area pi
        vol, touches = superlevel_volume(fld, lam)
        assert vol == pytest.approx(math.pi, rel=0.15)
        assert not touches
        _, touches_low = superlevel_volume(fld, 0.05)
        assert touches_low

    def test_node_mask(self):
        fld = atom_field(h=0.01, half_width=0.5, per_decade=16)
        mask = superlevel_nodes(fld, 1.0)
        xs = fld.grid.axis(0)
        np.testing.assert_array_equal(mask, np.asarray(fld.values) > 1.0)
        assert np.all(np.abs(xs[mask]) < 0.5)


class TestDistributionCurve:
    def test_products(self):
        c = synthetic_curve((1.0, 2.0, 4.0), (1.0, 0.5, 0.25))
        np.testing.assert_allclose(c.products, [1.0, 1.0, 1.0])
        assert len(c) == 3

    def test_rejects_increasing_volumes(self):
        with pytest.raises(ValueError, match="nonincreasing"):
            synthetic_curve((1.0, 2.0), (0.5, 1.0))

    def test_rejects_negative_volume(self):
        with pytest.raises(ValueError, match="negative"):
            synthetic_curve((1.0, 2.0), (1.0, -0.1))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatched"):
            DistributionCurve(lambdas=(1.0, 2.0), volumes=(1.0,),
                              flags=(False, False),
                              window=Box((0.0,), (1.0,)), variant="M")

    def test_truncation_guard(self):
        # every node closer to the atom than r_min gets flagged
        mu = unit_atom(0.0)
        grid = UniformGrid.cover_cells([-0.01], [0.01], 1e-3)
        fld = maximal_field(mu, grid, RadiusGrid.geometric(0.05, 1.0, 8), "M")
        assert fld.flagged_fraction == 1.0
        with pytest.raises(TruncationError):
            distribution_curve(fld, LambdaGrid.geometric(0.1, 10.0))

    def test_threads_match_serial(self):
        fld = atom_field(h=5e-3, half_width=1.0, per_decade=32)
        lg = LambdaGrid.geometric(0.6, 60.0, 24)
        a = distribution_curve(fld, lg, threads=1)
        b = distribution_curve(fld, lg, threads=3)
        assert a.volumes == b.volumes
        assert a.flags == b.flags


class TestTailVerdict:
    def test_persists(self):
        lam = np.geomspace(1.0, 100.0, 60)
        v = tail_verdict(synthetic_curve(lam, 1.0 / lam), threshold=0.05)
        assert v.classification == PERSISTS
        assert v.tail_min == pytest.approx(1.0)
        assert v.tail_last == pytest.approx(1.0)
        assert v.monotone

    def test_decays(self):
        lam = np.geomspace(1.0, 100.0, 60)
        v = tail_verdict(synthetic_curve(lam, 1e-6 / lam), threshold=0.01)
        assert v.classification == DECAYS
        assert v.tail_max < 0.01

    def test_straddle_is_inconclusive(self):
        lam = np.geomspace(1.0, 10.0, 40)
        v = tail_verdict(synthetic_curve(lam, 0.5 / lam ** 2), threshold=0.1)
        assert v.classification == INCONCLUSIVE
        assert v.reason == "tail straddles threshold"
        assert v.monotone

    def test_boundary_flag_is_inconclusive(self):
        lam = np.geomspace(1.0, 100.0, 60)
        flags = [False] * 59 + [True]
        v = tail_verdict(synthetic_curve(lam, 1.0 / lam, flags),
                         threshold=0.05)
        assert v.classification == INCONCLUSIVE
        assert "boundary" in v.reason

    def test_flag_below_decade_is_ignored(self):
        lam = np.geomspace(1.0, 100.0, 61)
        flags = [True] + [False] * 60
        v = tail_verdict(synthetic_curve(lam, 1.0 / lam, flags),
                         threshold=0.05)
        assert v.classification == PERSISTS

    def test_needs_a_full_decade(self):
        lam = np.geomspace(1.0, 5.0, 20)
        with pytest.raises(ValueError, match="decade"):
            tail_verdict(synthetic_curve(lam, 1.0 / lam), threshold=0.05)

    def test_stat_order_validated(self):
        with pytest.raises(ValueError, match="out of order"):
            TailVerdict(PERSISTS, tail_min=1.0, tail_max=2.0, tail_last=5.0,
                        monotone=True, threshold=0.1)


class TestWeak11Constant:
    def test_atom_normalization(self):
        fld = atom_field(h=2e-3, half_width=1.0, per_decade=48)
        curve = distribution_curve(fld, LambdaGrid.geometric(1.0, 100.0, 24))
        assert weak11_constant(curve, 1.0) == pytest.approx(1.0, rel=1e-6)

    def test_rejects_zero_mass(self):
        c = synthetic_curve((1.0, 2.0), (1.0, 0.5))
        with pytest.raises(ValueError):
            weak11_constant(c, 0.0)


class TestEvaluationWindow:
    def test_margin_inverts_the_mass_bound(self):
        box = evaluation_window(unit_atom(0.0), lam_min=0.1, cushion=1.05)
        assert box.lo[0] == pytest.approx(-5.25)
        assert box.hi[0] == pytest.approx(5.25)

    def test_2d_margin(self):
        box = evaluation_window(unit_atom([0.0, 0.0], dimension=2),
                                lam_min=0.1, cushion=1.0)
        want = math.sqrt(1.0 / (math.pi * 0.1))
        assert box.hi[0] == pytest.approx(want)

    def test_zero_measure_default_box(self):
        assert evaluation_window(Measure(1), 1.0) == Box((-1.0,), (1.0,))

    def test_validation(self):
        with pytest.raises(ValueError):
            evaluation_window(unit_atom(0.0), 0.0)
        with pytest.raises(ValueError):
            evaluation_window(unit_atom(0.0), 1.0, cushion=0.9)


class TestDistributionExperiment:
    def test_atom_persists_with_unit_products(self):
        res = distribution_experiment(unit_atom(0.0), "M", h=2e-3)
        assert res.verdict.classification == PERSISTS
        assert res.verdict.tail_last == pytest.approx(1.0, rel=1e-3)
        assert weak11_constant(res.curve, 1.0) == pytest.approx(1.0, rel=1e-3)

    def test_uniform_density_decays(self):
        grid = UniformGrid.cover_cells([0.0], [1.0], 2e-3)
        chi = Measure(1, density=(grid, np.ones(grid.extents[0])))
        res = distribution_experiment(chi, "M", h=2e-3)
        # M of a unit-height density never exceeds 1, so the top decade
        # (levels up to 100) carries empty superlevel sets
        assert res.verdict.classification == DECAYS
        assert res.verdict.tail_max == 0.0

    def test_zero_measure_short_circuits(self):
        res = distribution_experiment(Measure(1))
        assert res.verdict.classification == DECAYS

    def test_lam_max_override(self):
        res = distribution_experiment(unit_atom(0.0), "M", h=5e-3,
                                      lam_max=50.0, radii_per_decade=32)
        assert res.curve.lambdas[-1] == pytest.approx(50.0)
        assert res.curve.lambdas[0] == pytest.approx(0.5)

    def test_stopped_variant_requires_small_radii(self):
        res = distribution_experiment(unit_atom(0.0), "Mtau", tau=0.05,
                                      h=5e-3, radii_per_decade=32)
        # radii stop at tau, so {Mtau > lam} is empty below 1/(2 tau) = 10
        # and the default two-decade tail still ends at lam_max = 100
        assert res.verdict.classification == INCONCLUSIVE or \
            res.verdict.tail_last == pytest.approx(1.0, rel=1e-3)


class TestSobolevExperiment:
    def test_tent_decays(self):
        f = BVFunction1D(breakpoints=(-1.0, 0.0, 1.0), slopes=(1.0, -1.0),
                         compact_support=True)
        res = sobolev_experiment(f, h=2e-3)
        assert res.verdict.classification == DECAYS
        assert max(res.field.values) < 0.56

    def test_step_persists(self):
        f = BVFunction1D(jumps=((0.0, 1.0), (1.0, -1.0)),
                         compact_support=True)
        res = sobolev_experiment(f, h=2e-3)
        assert res.verdict.classification == PERSISTS
        assert res.verdict.tail_min >= 0.5

    def test_constant_function_decays(self):
        res = sobolev_experiment(BVFunction1D(initial_value=3.0), h=5e-3)
        assert res.verdict.classification == DECAYS
        assert res.verdict.tail_max == 0.0


class TestReverseWeak11:
    @staticmethod
    def chi_function(h=1e-3, pad=1.0):
        grid = UniformGrid.cover_cells([-pad], [1.0 + pad], h)
        xs = grid.axis(0)
        vals = ((xs > 0.0) & (xs < 1.0)).astype(float)
        return GridFunction(grid, vals)

    def test_indicator_at_half(self):
        res = reverse_weak11_check(self.chi_function(), t=0.5)
        assert res.rhs == pytest.approx(1.0, rel=2e-3)
        assert res.lhs == pytest.approx(0.5, rel=2e-2)
        assert res.holds

    def test_local_form_needs_level_above_cube_mean(self):
        f = self.chi_function()
        with pytest.raises(ValueError, match="cube mean"):
            reverse_weak11_check(f, t=0.5, cube=Box((0.25,), (0.75,)))
        res = reverse_weak11_check(f, t=0.5, cube=Box((-1.0,), (2.0,)))
        assert res.holds

    def test_validation(self):
        f = self.chi_function(h=0.01)
        with pytest.raises(ValueError):
            reverse_weak11_check(f, t=0.0)
        bad = GridFunction(f.grid, np.full_like(np.asarray(f.values), -1.0))
        with pytest.raises(ValueError, match="nonnegative"):
            reverse_weak11_check(bad, t=0.5)

    def test_zero_density(self):
        grid = UniformGrid.cover_cells([0.0], [1.0], 0.1)
        f = GridFunction(grid, np.zeros(grid.extents[0]))
        res = reverse_weak11_check(f, t=1.0)
        assert res.holds and res.rhs == 0.0


class TestSemigroup:
    def test_atom_cases_hold(self):
        mu = unit_atom(0.0)
        for x, r, eps in [(0.3, 0.2, 0.1), (0.0, 0.5, 0.5), (1.0, 0.3, 0.05)]:
            res = semigroup_check(mu, [x], r, eps)
            assert res.holds
            assert res.avg <= res.bound * (1.0 + 1e-6) + 1e-12

    def test_2d_case_holds(self):
        mu = unit_atom([0.2, -0.1], dimension=2)
        res = semigroup_check(mu, [0.0, 0.0], 0.4, 0.2)
        assert res.holds and res.nodes > 100

    def test_validation(self):
        with pytest.raises(ValueError):
            semigroup_check(unit_atom(0.0), [0.0], 0.0, 0.1)
        with pytest.raises(ValueError):
            semigroup_check(unit_atom(0.0), [0.0], 0.1, -1.0)


class TestBlowup:
    def test_atom_diverges_on_support(self):
        eps = tuple(np.geomspace(1e-1, 1e-7, 13))
        rep = blowup_check(unit_atom(0.0), [[0.0]], eps)
        assert rep.holds
        assert rep.values[0, -1] == pytest.approx(1.0 / (2e-7), rel=1e-9)
        assert rep.monotone_from[0] == 0

    def test_point_off_support_fails(self):
        eps = tuple(np.geomspace(1e-1, 1e-6, 11))
        rep = blowup_check(unit_atom(0.0), [[0.0], [3.0]], eps)
        assert not rep.holds
        assert rep.values[1, -1] == 0.0

    def test_eps_must_decrease(self):
        with pytest.raises(ValueError):
            blowup_check(unit_atom(0.0), [[0.0]], (1e-3, 1e-2))
