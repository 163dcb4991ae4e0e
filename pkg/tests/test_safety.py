import math

import numpy as np
import pytest

from railwarn.safety import (
    DEFAULT_BRAKING_TABLE,
    SafenessCategory,
    TimingBudget,
    TrainKinematics,
    VehicleBrakingTable,
    braking_time,
    minimum_required_range,
    protection_time,
    safeness_curve,
    safeness_level,
    time_to_avoid_collision,
    time_to_crossing,
)
from railwarn.units import mph_to_mps

# Published stopping-time columns for the five tabulated speeds (seconds).
TB_DRY = (2.3, 2.66, 2.96, 3.27, 3.57)
TB_WET = (4.62, 5.32, 5.91, 6.52, 7.15)
TABLE_SPEEDS_MPH = (25, 35, 45, 55, 65)


class TestBrakingTable:
    def test_reproduces_published_times_within_tolerance(self):
        for speed, dry, wet in zip(TABLE_SPEEDS_MPH, TB_DRY, TB_WET):
            assert braking_time(speed, "dry") == pytest.approx(dry, abs=0.02)
            assert braking_time(speed, "wet") == pytest.approx(wet, abs=0.02)

    def test_wet_never_shorter_than_dry(self):
        for row in DEFAULT_BRAKING_TABLE.rows:
            assert row.wet_m >= row.dry_m

    def test_rows_strictly_increasing_in_speed(self):
        speeds = [row.speed_mph for row in DEFAULT_BRAKING_TABLE.rows]
        assert speeds == sorted(speeds)
        assert len(set(speeds)) == len(speeds)

    def test_self_consistency_distance_over_speed(self):
        # t_b must equal d_b / v with the tabulated m/s column.
        for row, dry, wet in zip(DEFAULT_BRAKING_TABLE.rows, TB_DRY, TB_WET):
            assert row.dry_m / row.speed_mps == pytest.approx(dry, abs=0.02)
            assert row.wet_m / row.speed_mps == pytest.approx(wet, abs=0.02)

    def test_interpolation_uses_midpoint_convention(self):
        # Independent oracle: linear midpoint of both the distance and the
        # tabulated m/s columns between the 25 and 35 mph rows.
        distance = (25.5 + 41.4) / 2
        speed_mps = (11.11 + 15.55) / 2
        expected = distance / speed_mps
        assert braking_time(30, "dry") == pytest.approx(expected, rel=1e-12)
        assert braking_time(30, "dry") == pytest.approx(2.51, abs=0.01)

    def test_out_of_range_speeds_rejected(self):
        with pytest.raises(ValueError, match="outside tabulated range"):
            braking_time(20, "dry")
        with pytest.raises(ValueError, match="outside tabulated range"):
            braking_time(66, "wet")

    def test_bad_road_rejected(self):
        with pytest.raises(ValueError, match="road"):
            braking_time(30, "icy")

    def test_csv_override(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text(
            "speed_mph,speed_mps,db_dry_m,db_wet_m\n"
            "10,4.47,10.0,20.0\n"
            "20,8.94,30.0,60.0\n"
        )
        table = VehicleBrakingTable.from_csv(path)
        assert braking_time(10, "dry", table) == pytest.approx(10.0 / 4.47)
        assert braking_time(15, "wet", table) == pytest.approx(40.0 / ((4.47 + 8.94) / 2))

    def test_invalid_tables_rejected(self):
        from railwarn.safety import BrakingRow

        with pytest.raises(ValueError, match="strictly increasing"):
            VehicleBrakingTable(
                rows=(BrakingRow(25, 11.11, 25.5, 51.3), BrakingRow(25, 11.11, 30, 60))
            )
        with pytest.raises(ValueError, match="wet"):
            VehicleBrakingTable(
                rows=(BrakingRow(25, 11.11, 51.3, 25.5), BrakingRow(35, 15.55, 41.4, 82.8))
            )


class TestTimeToCrossing:
    def test_20mph_500m_matches_published_rounding(self):
        value = time_to_crossing(500.0, mph_to_mps(20))
        assert value == pytest.approx(500.0 / 8.9408, rel=1e-12)
        assert value == pytest.approx(56.0, abs=1.0)

    def test_at_crossing_is_zero(self):
        assert time_to_crossing(0.0, 12.0) == 0.0

    def test_79mph_450m(self):
        value = time_to_crossing(450.0, mph_to_mps(79))
        assert value == pytest.approx(12.74, abs=0.01)
        assert value == pytest.approx(12.0, abs=1.0)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            time_to_crossing(100.0, 0.0)
        with pytest.raises(ValueError):
            time_to_crossing(100.0, -3.0)
        with pytest.raises(ValueError):
            time_to_crossing(-1.0, 3.0)

    def test_kinematics_wrapper(self):
        train = TrainKinematics(distance_to_crossing_m=-500.0, speed_mps=mph_to_mps(20))
        assert train.approach_distance_m == 500.0
        assert train.time_to_crossing_s() == pytest.approx(55.92, abs=0.01)
        passed = TrainKinematics(distance_to_crossing_m=10.0, speed_mps=5.0)
        assert passed.approach_distance_m == 0.0
        with pytest.raises(ValueError):
            TrainKinematics(distance_to_crossing_m=-10.0, speed_mps=0.0)


class TestTimeToAvoidCollision:
    def test_50mph_500m(self):
        value = time_to_avoid_collision(500.0, mph_to_mps(50))
        assert value == pytest.approx(500.0 / 22.352, rel=1e-12)
        assert value == pytest.approx(22.0, abs=1.0)

    def test_10mph_200m(self):
        assert time_to_avoid_collision(200.0, mph_to_mps(10)) == pytest.approx(
            200.0 / 4.4704, rel=1e-12
        )

    def test_zero_range(self):
        assert time_to_avoid_collision(0.0, 9.0) == 0.0

    def test_domain_error(self):
        with pytest.raises(ValueError):
            time_to_avoid_collision(100.0, 0.0)


class TestProtectionTime:
    def test_indirect_band_examples(self):
        assert protection_time(44.74, 3.5, 0.005, 2.3) == pytest.approx(38.935, abs=1e-9)
        assert protection_time(44.74, 3.5, 0.005, 7.15) == pytest.approx(34.085, abs=1e-9)

    def test_negative_result_is_meaningful(self):
        assert protection_time(5.0, 3.5, 0.005, 2.3) == pytest.approx(-0.805, abs=1e-9)

    def test_budget_identity_property(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            d = rng.uniform(1.0, 2000.0)
            v = rng.uniform(0.5, 40.0)
            tr, ts, tb = rng.uniform(0.0, 10.0, size=3)
            prot = protection_time(time_to_avoid_collision(d, v), tr, ts, tb)
            assert math.isclose(prot + tr + ts + tb, d / v, rel_tol=1e-12, abs_tol=1e-12)

    def test_decreasing_in_train_speed(self):
        values = [
            protection_time(time_to_avoid_collision(200.0, v), 3.5, 0.005, 2.3)
            for v in (2.0, 4.0, 8.0, 16.0)
        ]
        assert values == sorted(values, reverse=True)


class TestTimingBudget:
    def test_identity_by_construction(self):
        budget = TimingBudget.from_time_to_avoid(44.74, 3.5, 0.005, 2.3)
        total = budget.reaction_s + budget.system_delay_s + budget.braking_s + budget.protection_s
        assert total == budget.time_to_avoid_collision_s
        assert not budget.system_failed

    def test_failure_flag(self):
        budget = TimingBudget.from_time_to_avoid(5.0, 3.5, 0.005, 2.3)
        assert budget.system_failed

    def test_negative_components_rejected(self):
        with pytest.raises(ValueError):
            TimingBudget.from_components(-1.0, 0.0, 2.0, 3.0)


class TestSafenessLevel:
    def test_level_one_exactly_at_full_budget(self):
        result = safeness_level(44.74, 44.74, 3.5, 0.005, 2.3)
        assert result.level == 1.0
        assert result.category is SafenessCategory.NO_RISK
        assert not result.system_failed

    def test_level_zero_exactly_at_stop_budget(self):
        stop = 3.5 + 0.005 + 2.3
        result = safeness_level(stop, 44.74, 3.5, 0.005, 2.3)
        assert result.level == 0.0
        assert result.category is SafenessCategory.SAFE_BUT_CLOSE

    def test_intermediate_value(self):
        stop = 3.5 + 0.005 + 2.3
        expected = (20.0 - stop) / (44.74 - stop)
        result = safeness_level(20.0, 44.74, 3.5, 0.005, 2.3)
        assert result.level == pytest.approx(expected, rel=1e-12)
        assert result.level == pytest.approx(0.3646, abs=1e-4)
        assert result.category is SafenessCategory.SAFE_BUT_CLOSE

    def test_singular_denominator_is_failure_with_undefined_level(self):
        stop = 3.5 + 0.005 + 2.3
        result = safeness_level(10.0, stop, 3.5, 0.005, 2.3)
        assert result.system_failed
        assert math.isnan(result.level)
        assert result.category is SafenessCategory.NOT_SAFE

    def test_negative_over_negative_trap(self):
        # Both numerator and denominator negative: raw level is positive but
        # the system has failed and must classify as not safe.
        result = safeness_level(2.0, 4.0, 3.5, 0.005, 2.3)
        assert result.level > 0
        assert result.system_failed
        assert result.category is SafenessCategory.NOT_SAFE

    def test_classification_equivalences_randomized(self):
        rng = np.random.default_rng(99)
        for _ in range(2000):
            tr, ts, tb = rng.uniform(0.0, 8.0, size=3)
            stop = tr + ts + tb
            t_tac = rng.uniform(0.0, 60.0)
            t_t = rng.uniform(0.0, 60.0)
            result = safeness_level(t_t, t_tac, tr, ts, tb)
            if t_tac - stop <= 0:
                assert result.system_failed
                assert result.category is SafenessCategory.NOT_SAFE
            else:
                assert not result.system_failed
                if t_t >= t_tac:
                    assert result.category is SafenessCategory.NO_RISK
                elif t_t >= stop:
                    assert result.category is SafenessCategory.SAFE_BUT_CLOSE
                else:
                    assert result.category is SafenessCategory.NOT_SAFE

    def test_strictly_increasing_in_time_to_crossing(self):
        levels = [
            safeness_level(t, 44.74, 3.5, 0.005, 2.3).level for t in (5.0, 15.0, 30.0, 44.0)
        ]
        assert levels == sorted(levels)
        assert len(set(levels)) == len(levels)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            safeness_level(-1.0, 10.0, 3.5, 0.005, 2.3)
        with pytest.raises(ValueError):
            safeness_level(1.0, -10.0, 3.5, 0.005, 2.3)


class TestMinimumRequiredRange:
    def test_35mph_train_with_worst_braking(self):
        v = mph_to_mps(35)
        expected = v * (3.5 + 7.15)
        assert minimum_required_range(v, 3.5, 7.15) == pytest.approx(expected, rel=1e-12)
        assert minimum_required_range(v, 3.5, 7.15) == pytest.approx(166.6, abs=0.1)

    def test_10mph_train(self):
        assert minimum_required_range(mph_to_mps(10), 3.5, 2.3) == pytest.approx(25.9, abs=0.05)

    def test_zero_times(self):
        assert minimum_required_range(12.0, 0.0, 0.0) == 0.0

    def test_optional_system_delay_inclusion(self):
        base = minimum_required_range(10.0, 3.5, 2.3)
        with_delay = minimum_required_range(10.0, 3.5, 2.3, system_delay_s=0.005)
        assert with_delay == pytest.approx(base + 10.0 * 0.005, rel=1e-12)


class TestSafenessCurve:
    def test_indirect_case_crossings(self):
        v = mph_to_mps(10)
        curve = safeness_curve(v, 200.0, 25, "dry")
        stop = curve.reaction_s + curve.system_delay_s + curve.braking_s
        assert curve.one_cross_distance_m == 200.0
        assert curve.zero_cross_distance_m == v * stop
        assert curve.zero_cross_distance_m == pytest.approx(25.95, abs=0.05)
        # Time separation between the crossings equals the protection time.
        gap = (curve.one_cross_distance_m - curve.zero_cross_distance_m) / v
        assert gap == pytest.approx(curve.protection_s, rel=1e-9)
        assert curve.protection_s == pytest.approx(38.9, abs=0.1)
        assert not curve.system_failed

    def test_direct_case_gap(self):
        v = mph_to_mps(10)
        curve = safeness_curve(v, 130.0, 25, "dry")
        expected = 130.0 / v - (3.5 + 0.005 + curve.braking_s)
        assert curve.protection_s == pytest.approx(expected, rel=1e-12)
        assert curve.protection_s == pytest.approx(23.3, abs=0.1)

    def test_fast_train_shrinks_protection(self):
        v = mph_to_mps(35)
        curve = safeness_curve(v, 200.0, 65, "wet")
        assert curve.protection_s == pytest.approx(2.13, abs=0.01)

    def test_level_is_one_at_warning_range_sample(self):
        v = mph_to_mps(10)
        curve = safeness_curve(v, 200.0, 25, "dry", distances_m=[0.0, 100.0, 200.0, 250.0])
        by_distance = dict(zip(curve.distances_m, curve.levels))
        assert by_distance[200.0] == 1.0
        assert by_distance[0.0] < 0.0
        assert by_distance[250.0] > 1.0

    def test_levels_increase_along_sweep(self):
        curve = safeness_curve(mph_to_mps(10), 200.0, 45, "wet")
        assert list(curve.levels) == sorted(curve.levels)

    def test_sweep_must_reach_warning_range(self):
        with pytest.raises(ValueError, match="sweep"):
            safeness_curve(5.0, 200.0, 25, "dry", distances_m=[0.0, 100.0])

    def test_failed_system_flagged(self):
        # Tiny range: the budget cannot cover even the stop time.
        curve = safeness_curve(mph_to_mps(35), 20.0, 65, "wet")
        assert curve.system_failed
        assert curve.protection_s < 0
