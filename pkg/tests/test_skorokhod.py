"""Band regularization, crossing counts, the Banach indicatrix, and the
three Stieltjes integral routes."""

import numpy as np
import pytest

from leveltime import (
    LevelGrid,
    SampledCadlagPath,
    banach_indicatrix,
    banach_indicatrix_integral,
    count_crossings,
    crossing_count_field,
    interval_crossing_local_time,
    j_of_regularized,
    j_pi,
    make_abs,
    make_mix,
    make_square,
    monotone_segments,
    skorokhod_map,
    stieltjes_integral_band,
    stieltjes_integral_fprime,
    stieltjes_integral_ibp,
    total_variation,
)
from leveltime.skorokhod import exceptional_levels


def tent_path():
    return SampledCadlagPath([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])


def zigzag4():
    return SampledCadlagPath([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 0.0, 1.0])


class TestSkorokhodMap:
    def test_tent_with_unit_band(self):
        sol = skorokhod_map(tent_path(), 1.0)
        np.testing.assert_allclose(sol.regularized.values, [0.0, 0.5, 0.5])
        np.testing.assert_allclose(sol.deviation, [0.0, 0.5, -0.5])
        assert sol.half_width == 0.5
        assert total_variation(sol.regularized) == pytest.approx(0.5)

    def test_eps_must_be_positive(self):
        with pytest.raises(ValueError, match="positive"):
            skorokhod_map(tent_path(), 0.0)

    def test_regularized_keeps_times_and_marks(self, step_path):
        p = step_path(61, jump_rate=8.0)
        sol = skorokhod_map(p, 0.3)
        np.testing.assert_array_equal(sol.regularized.times, p.times)
        np.testing.assert_array_equal(sol.regularized.jump_mask, p.jump_mask)

    @pytest.mark.parametrize("eps", [1.0, 0.25, 0.04])
    def test_band_invariants(self, eps, step_path):
        for seed in (62, 63, 64):
            p = step_path(seed)
            sol = skorokhod_map(p, eps)
            reg = sol.regularized.values
            half = 0.5 * eps
            # the deviation never leaves the band
            assert np.max(np.abs(p.values - reg)) <= half
            # movement happens only with the deviation pinned on a barrier
            moved = np.diff(reg) != 0.0
            assert np.all(np.abs(sol.deviation[1:][moved]) == half)
            # stalls copy the previous regularized value bit for bit
            assert np.all(reg[1:][~moved] == reg[:-1][~moved])

    def test_variation_monotone_in_band_width(self, step_path):
        # a wider band absorbs more oscillation, so TV(x^eps) shrinks as eps
        # grows (this is the truncated variation in disguise)
        for seed in (65, 66):
            p = step_path(seed)
            tvs = [
                total_variation(skorokhod_map(p, eps).regularized)
                for eps in (0.8, 0.4, 0.2, 0.1)
            ]
            assert all(a <= b + 1e-12 for a, b in zip(tvs[:-1], tvs[1:]))
            assert tvs[0] <= total_variation(p)

    def test_segments_tile_the_index_range(self, step_path):
        p = step_path(67)
        sol = skorokhod_map(p, 0.2)
        segs = sol.monotone_segments
        assert segs[0][0] == 0
        assert segs[-1][1] == p.n_samples - 1
        for (s0, e0, d0), (s1, e1, d1) in zip(segs[:-1], segs[1:]):
            assert s1 == e0
            assert d0 != 0 and d1 != 0 and d0 != d1


class TestMonotoneSegments:
    def test_constant(self):
        assert monotone_segments([2.0, 2.0, 2.0]) == ((0, 2, 0),)

    def test_single_sample(self):
        assert monotone_segments([1.0]) == ((0, 0, 0),)

    def test_flat_steps_stay_in_run(self):
        segs = monotone_segments([0.0, 1.0, 1.0, 2.0, 0.0])
        assert segs == ((0, 3, 1), (3, 4, -1))


class TestCrossingCounts:
    def test_zigzag_band_counts_by_hand(self):
        p = zigzag4()
        tally = count_crossings(p, 0.5, 0.4)
        assert (tally.up, tally.down) == (2, 1)
        assert tally.total == 3
        assert (tally.strict_up, tally.strict_down) == (2, 1)

    def test_zero_width_needs_strict(self):
        p = zigzag4()
        with pytest.raises(ValueError, match="non-strict"):
            count_crossings(p, 0.5, 0.0, strict=False)
        tally = count_crossings(p, 0.5, 0.0)
        assert tally.up is None and tally.down is None and tally.total is None
        assert tally.strict_total == 3

    def test_negative_width_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            count_crossings(zigzag4(), 0.5, -0.1)

    def test_time_clipping(self):
        p = zigzag4()
        early = count_crossings(p, 0.5, 0.4, t=1.0)
        assert (early.up, early.down) == (1, 0)

    def test_field_matches_scalar_counts(self, step_path):
        p = step_path(71)
        grid = LevelGrid.for_path(p, 0.05, margin=0.2)
        eps = 0.2
        field = crossing_count_field(p, grid, eps)
        for k in range(0, grid.n_levels, 5):
            tally = count_crossings(p, float(grid.levels[k]), eps)
            assert field[k] == tally.total

    def test_field_rejects_zero_width_non_strict(self, step_path):
        p = step_path(72)
        grid = LevelGrid.for_path(p, 0.1, margin=0.1)
        with pytest.raises(ValueError, match="eps > 0"):
            crossing_count_field(p, grid, 0.0, strict=False)


class TestBanachIndicatrix:
    def test_tent_counts(self):
        sol = skorokhod_map(tent_path(), 0.2)
        # reg = [0, 0.9, 0.1]: up segment then down segment
        assert banach_indicatrix(sol, 0.5) == 2
        assert banach_indicatrix(sol, 0.05) == 1
        assert banach_indicatrix(sol, 0.95) == 0

    def test_integral_equals_total_variation(self, step_path):
        for seed in (73, 74):
            p = step_path(seed)
            for eps in (0.3, 0.08):
                sol = skorokhod_map(p, eps)
                tv = total_variation(sol.regularized)
                assert banach_indicatrix_integral(sol) == pytest.approx(
                    tv, abs=1e-9 * (1.0 + tv)
                )

    def test_time_restricted_integral(self, step_path):
        p = step_path(75)
        sol = skorokhod_map(p, 0.2)
        partial = banach_indicatrix_integral(sol, t=0.5)
        full = banach_indicatrix_integral(sol)
        assert 0.0 <= partial <= full + 1e-12

    def test_comparison_lemma_off_exceptional_levels(self, step_path):
        # strict band counts of x and the indicatrix of x^eps agree to
        # within 2 at every level clear of the exceptional set
        for seed in (76, 77, 78):
            p = step_path(seed)
            for eps in (0.4, 0.15):
                sol = skorokhod_map(p, eps)
                exc = exceptional_levels(sol)
                zs = np.linspace(p.values.min() - 0.1, p.values.max() + 0.1, 61)
                for z in zs:
                    if np.min(np.abs(exc - z)) < 1e-9:
                        continue
                    n = count_crossings(p, z, eps, strict=True).strict_total
                    assert abs(n - banach_indicatrix(sol, z)) <= 2

    def test_exceptional_levels_cover_shifted_samples(self):
        sol = skorokhod_map(tent_path(), 0.2)
        exc = exceptional_levels(sol)
        for v in (0.9, 1.1, -0.1, 0.1):
            assert np.min(np.abs(exc - v)) < 1e-12


class TestIntervalCrossingLocalTime:
    def test_fields_scale_counts_by_width(self, step_path):
        p = step_path(81)
        grid = LevelGrid.for_path(p, 0.05, margin=0.5)
        fields = interval_crossing_local_time(p, widths=(0.4, 0.2), grid=grid)
        assert [f.width for f in fields] == [0.4, 0.2]
        for f, c in zip(fields, (0.4, 0.2)):
            assert f.kind == "L_interval"
            counts = crossing_count_field(p, grid, c)
            np.testing.assert_allclose(f.level_values(), c * counts, atol=0.0)

    def test_width_ladder_validation(self, step_path):
        p = step_path(82)
        grid = LevelGrid.for_path(p, 0.05, margin=0.1)
        with pytest.raises(ValueError, match="positive"):
            interval_crossing_local_time(p, widths=(), grid=grid)
        with pytest.raises(ValueError, match="decreasing"):
            interval_crossing_local_time(p, widths=(0.2, 0.4), grid=grid)
        with pytest.raises(ValueError, match="grid"):
            interval_crossing_local_time(p, widths=(0.2,))


class TestStieltjesRoutes:
    def test_tent_square_frozen_value(self):
        p = tent_path()
        sol = skorokhod_map(p, 1.0)
        f = make_square()
        assert stieltjes_integral_fprime(p, sol, f) == pytest.approx(-0.5, abs=1e-15)
        assert stieltjes_integral_ibp(p, sol, f) == pytest.approx(-0.5, abs=1e-15)
        assert stieltjes_integral_band(p, sol, f) == pytest.approx(-0.5, abs=1e-15)

    def test_fprime_and_ibp_agree_always(self, step_path):
        for seed in (83, 84):
            p = step_path(seed)
            sol = skorokhod_map(p, 0.25)
            for f in (make_square(), make_abs(0.1, 0.7), make_mix()):
                a = stieltjes_integral_fprime(p, sol, f)
                b = stieltjes_integral_ibp(p, sol, f)
                assert a == pytest.approx(b, abs=1e-10 * (1 + abs(a)))

    def test_band_route_exact_for_convex_f(self, step_path):
        # where f'(x^eps) moves, the deviation is pinned at +-eps/2 with the
        # matching sign, so the barrier form loses nothing for convex f
        for seed in (85, 86):
            p = step_path(seed)
            for eps in (0.5, 0.12):
                sol = skorokhod_map(p, eps)
                for f in (make_square(), make_abs(0.0, 0.5)):
                    a = stieltjes_integral_fprime(p, sol, f)
                    c = stieltjes_integral_band(p, sol, f)
                    assert a == pytest.approx(c, abs=1e-12 * (1 + abs(a)))

    def test_band_route_is_a_lower_bound_in_general(self, step_path):
        for seed in (87, 88):
            p = step_path(seed)
            sol = skorokhod_map(p, 0.3)
            f = make_mix()
            a = stieltjes_integral_fprime(p, sol, f)
            c = stieltjes_integral_band(p, sol, f)
            assert c <= a + 1e-10 * (1 + abs(a))

    def test_single_sample_integrals_vanish(self):
        p = SampledCadlagPath([0.0], [1.0])
        sol = skorokhod_map(p, 0.5)
        f = make_square()
        assert stieltjes_integral_fprime(p, sol, f) == 0.0
        assert stieltjes_integral_ibp(p, sol, f) == 0.0
        assert stieltjes_integral_band(p, sol, f) == 0.0


class TestJOfRegularized:
    def test_mass_dominated_by_path_jump_field(self, step_path):
        # the clamp shrinks every increment, marked ones included, so the
        # jump field of x^eps never outweighs the jump field of x
        for seed in (91, 92):
            p = step_path(seed, jump_rate=8.0)
            grid = LevelGrid.for_path(p, 0.04, margin=0.3)
            J_x = j_pi(p, grid=grid, mode="cell")
            for eps in (0.5, 0.1):
                sol = skorokhod_map(p, eps)
                J_reg = j_of_regularized(p, sol, grid=grid, mode="cell")
                assert J_reg.masses()[0] <= J_x.masses()[0] + 1e-9

    def test_needs_grid(self, step_path):
        p = step_path(93)
        sol = skorokhod_map(p, 0.2)
        with pytest.raises(ValueError, match="grid"):
            j_of_regularized(p, sol)
