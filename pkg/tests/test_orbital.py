import math

import pytest

from constel_maint.errors import AltitudeOrderError, ZeroDriftError
from constel_maint.orbital import (
    EARTH,
    OrbitGeometry,
    PropulsionSpec,
    alignment_intervals,
    plan_transfer,
    raan_drift_rate,
    relative_raan_drift,
    transfer_delta_v,
    transfer_fuel_and_time,
)

# Frozen from an independent one-line evaluation of the J2 regression, Edelbaum
# and rocket equations with the standard constants (not using this package).
ORACLE_DRIFT_1200_60 = -5.504628072755636e-07
ORACLE_DRIFT_800_0 = -1.3310226909172683e-06
ORACLE_REL_700_1200_60 = -1.4854204206448872e-07
ORACLE_DV_700_1200 = 0.25178775580098645
ORACLE_DV_500_1000 = 0.2624695436105533
ORACLE_FUEL = 3.2439810734840147
ORACLE_TOF = 2495370.056526165

PROP = PropulsionSpec(150.0, 1200.0, 1.3e-6)


def r(h):
    return EARTH.earth_radius + h


class TestOrbitGeometry:
    @pytest.mark.parametrize("kwargs", [dict(altitude=0, inclination=10), dict(altitude=500, inclination=181),
                                        dict(altitude=500, inclination=10, eccentricity=1.0)])
    def test_invariants(self, kwargs):
        with pytest.raises(ValueError):
            OrbitGeometry(**kwargs)

    def test_propulsion_exhaust_velocity(self):
        assert PROP.exhaust_velocity == pytest.approx(1200 * 9.80665 / 1000, rel=1e-12)
        with pytest.raises(ValueError):
            PropulsionSpec(0, 1200, 1e-6)


class TestRaanDrift:
    def test_polar_orbit_has_no_drift(self):
        assert raan_drift_rate(OrbitGeometry(1234.0, 90.0)) == 0.0

    def test_oracle_values(self):
        assert raan_drift_rate(OrbitGeometry(1200, 60)) == pytest.approx(ORACLE_DRIFT_1200_60, rel=1e-12)
        assert raan_drift_rate(OrbitGeometry(800, 0)) == pytest.approx(ORACLE_DRIFT_800_0, rel=1e-12)
        deg_per_day = math.degrees(ORACLE_DRIFT_800_0) * 86400
        assert deg_per_day == pytest.approx(-6.59, abs=0.01)

    def test_retrograde_orbit_drifts_east(self):
        assert raan_drift_rate(OrbitGeometry(800, 120)) > 0

    def test_relative_drift(self):
        park, plane = OrbitGeometry(700, 60), OrbitGeometry(1200, 60)
        assert relative_raan_drift(park, plane) == pytest.approx(ORACLE_REL_700_1200_60, rel=1e-12)
        assert relative_raan_drift(park, plane) < 0  # the lower orbit regresses faster

    def test_relative_drift_requires_lower_parking(self):
        o = OrbitGeometry(700, 60)
        with pytest.raises(AltitudeOrderError):
            relative_raan_drift(o, o)
        with pytest.raises(AltitudeOrderError):
            relative_raan_drift(OrbitGeometry(1300, 60), OrbitGeometry(1200, 60))


class TestTransfer:
    def test_delta_v_oracle(self):
        assert transfer_delta_v(r(700), r(1200)) == pytest.approx(ORACLE_DV_700_1200, rel=1e-12)
        assert transfer_delta_v(r(500), r(1000)) == pytest.approx(ORACLE_DV_500_1000, rel=1e-12)

    def test_delta_v_continuity(self):
        assert transfer_delta_v(r(1200) - 1e-9, r(1200)) == pytest.approx(0.0, abs=1e-9)

    def test_delta_v_order(self):
        with pytest.raises(AltitudeOrderError):
            transfer_delta_v(r(1200), r(700))

    def test_fuel_and_time_oracle(self):
        fuel, tof = transfer_fuel_and_time(ORACLE_DV_700_1200, PROP)
        assert fuel == pytest.approx(ORACLE_FUEL, rel=1e-12)
        assert tof == pytest.approx(ORACLE_TOF, rel=1e-12)
        assert tof / (7 * 86400) == pytest.approx(4.126, abs=1e-3)

    def test_zero_dv(self):
        assert transfer_fuel_and_time(0.0, PROP) == (0.0, 0.0)
        with pytest.raises(ValueError):
            transfer_fuel_and_time(-0.1, PROP)

    def test_fuel_increasing_and_convex(self):
        dvs = [0.05 * k for k in range(20)]
        fuel = [transfer_fuel_and_time(dv, PROP)[0] for dv in dvs]
        steps = [b - a for a, b in zip(fuel, fuel[1:])]
        assert all(s > 0 for s in steps)
        assert all(b > a for a, b in zip(steps, steps[1:]))

    def test_plan_transfer_units(self):
        plan = plan_transfer(OrbitGeometry(700, 60), OrbitGeometry(1200, 60), PROP)
        week = 7 * 86400
        assert plan.omega_rel == pytest.approx(ORACLE_REL_700_1200_60 * week, rel=1e-12)
        assert plan.t_trans == pytest.approx(ORACLE_TOF / week, rel=1e-12)
        assert plan.fuel_mass == pytest.approx(ORACLE_FUEL, rel=1e-12)


class TestAlignmentIntervals:
    def test_single_parking_orbit_covers_synodic_period(self):
        (lo, hi), = alignment_intervals(1, -2.0, 0.5)
        assert lo == 0.5
        assert hi == pytest.approx(math.pi + 0.5)

    def test_partition(self):
        w = alignment_intervals(7, ORACLE_REL_700_1200_60, 3.0)
        assert w[0][0] == 3.0
        assert all(a[1] == pytest.approx(b[0]) for a, b in zip(w, w[1:]))
        assert w[-1][1] - w[0][0] == pytest.approx(2 * math.pi / abs(ORACLE_REL_700_1200_60), rel=1e-12)

    def test_width_from_oracle_drift(self):
        lo, hi = alignment_intervals(7, ORACLE_REL_700_1200_60, 0.0)[0]
        assert hi - lo == pytest.approx(2 * math.pi / (7 * abs(ORACLE_REL_700_1200_60)), rel=1e-12)

    def test_errors(self):
        with pytest.raises(ZeroDriftError):
            alignment_intervals(3, 0.0, 1.0)
        with pytest.raises(ValueError):
            alignment_intervals(0, -1.0, 1.0)
