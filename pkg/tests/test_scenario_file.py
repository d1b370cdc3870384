import json

import pytest

from constel_maint.errors import ParseError, SchemaError, UnitError
from constel_maint.scenario_file import (
    REQUIRED_SECTIONS,
    bundled_scenarios,
    parse_scenario,
    parse_scenario_text,
    resolve_scenario_path,
)


@pytest.fixture(scope="module")
def baseline_file():
    return parse_scenario(resolve_scenario_path("baseline"))


def baseline_dict(baseline_file):
    return json.loads(baseline_file.to_json())


class TestBundled:
    def test_names(self):
        names = [p.stem for p in bundled_scenarios()]
        assert "baseline" in names
        assert {f"instance_{k}-{j}" for k in range(1, 6) for j in (1, 2)} <= set(names)

    def test_baseline_values(self, baseline_file):
        sc = baseline_file.to_scenario()
        c = sc.constellation
        assert (c.n_plane, c.n_sat, c.plane_orbit.altitude, c.plane_orbit.inclination) == (40, 40, 1200.0, 60.0)
        assert (c.sat_failure_rate, c.n_t, c.lifespan) == (0.2, 52, 30.0)
        assert (sc.launch.cost, sc.launch.t_lau, 1 / sc.launch.psi_lau, sc.launch.capacity) == (67.0, 12.0, 8.0, 40)
        assert sc.r_oos == 0.25
        assert (sc.costs.c_manufac, sc.costs.c_hold, sc.costs.eps_fuel) == (0.5, 0.5, 0.01)
        p = sc.propulsion
        assert (p.dry_mass, p.specific_impulse, p.mass_flow_rate) == (150.0, 1200.0, 1.3e-6)
        cr = sc.cost_response
        assert (cr.c_min, cr.mu_ideal, cr.alpha1, cr.alpha2) == (0.5, 0.5, 1.0, 1.0)
        assert sc.requirements.amc_ref == 925.1
        assert sc.bounds.mttr == (2.0, 12.0)

    @pytest.mark.parametrize("name, field, value", [
        ("instance_1-1", "r_oos", 0.5), ("instance_1-2", "r_oos", 0.1),
        ("instance_2-1", "c_min", 1.0), ("instance_2-2", "c_min", 0.25),
        ("instance_3-1", "mu_ideal", 1.0), ("instance_3-2", "mu_ideal", 0.25),
        ("instance_4-1", "alpha1", 2.0), ("instance_4-2", "alpha1", 0.5),
        ("instance_5-1", "alpha2", 2.0), ("instance_5-2", "alpha2", 0.5),
    ])
    def test_instances(self, name, field, value):
        sc = parse_scenario(resolve_scenario_path(name)).to_scenario()
        actual = sc.r_oos if field == "r_oos" else getattr(sc.cost_response, field)
        assert actual == value

    def test_round_trip_and_digest(self, baseline_file):
        again = parse_scenario_text(baseline_file.to_json())
        assert again == baseline_file
        assert again.digest() == baseline_file.digest()
        assert len(baseline_file.digest()) == 64


class TestErrors:
    def test_empty_file_lists_required_sections(self):
        with pytest.raises(SchemaError) as info:
            parse_scenario_text("{}")
        for section in REQUIRED_SECTIONS:
            assert section in str(info.value)

    def test_syntax_error_has_location(self):
        with pytest.raises(ParseError, match=r"2:\d+"):
            parse_scenario_text('{\n  "name": ,\n}')

    def test_inverted_bounds(self, baseline_file):
        data = baseline_dict(baseline_file)
        data["bounds"] = {"parking_altitude_km": [1000, 500]}
        with pytest.raises(SchemaError, match="inverted"):
            parse_scenario_text(json.dumps(data))

    def test_unknown_key(self, baseline_file):
        data = baseline_dict(baseline_file)
        data["launch"]["cost_usd"] = 1
        with pytest.raises(SchemaError):
            parse_scenario_text(json.dumps(data))

    def test_parking_above_plane_is_unit_error(self, baseline_file):
        data = baseline_dict(baseline_file)
        data["decision"]["parking_altitude_km"] = 1500.0
        with pytest.raises(UnitError):
            parse_scenario_text(json.dumps(data))

    def test_missing_file(self, tmp_path):
        with pytest.raises((FileNotFoundError, ParseError)):
            resolve_scenario_path(str(tmp_path / "nope.scenario"))
