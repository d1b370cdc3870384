import json
import math
from importlib import resources

import numpy as np
import pytest

from constel_maint.errors import SamplingExhausted
from constel_maint.inventory import ConstellationConfig
from constel_maint.model import evaluate_decision
from constel_maint.simulator import (
    METRICS,
    SimConfig,
    aggregate,
    analytic_metrics,
    estimate,
    replication_seeds,
    run_replication,
    sample_validation_instances,
    validation_errors,
)


def _data(name):
    return json.loads((resources.files("constel_maint") / "data" / name).read_text())


@pytest.fixture(scope="module")
def small(baseline):
    """A 6-plane version of the baseline that simulates in well under a second."""
    c = baseline.constellation
    return baseline.replace(constellation=ConstellationConfig(6, 20, c.plane_orbit, 0.2, c.n_t, c.lifespan))


@pytest.fixture(scope="module")
def small_x(baseline):
    return baseline.decision.replace(s=2, q=3, k_s=2, k_q=3, n_parking=3)


SHORT = SimConfig(horizon_years=20, warmup_years=2, replications=4, rng_seed=7)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(horizon_years=0), dict(replications=0), dict(warmup_years=-1),
                                    dict(horizon_years=5, warmup_years=6), dict(step=2)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw)

    def test_seeds_are_reproducible_and_distinct(self):
        a = replication_seeds(12345, 10)
        assert a == replication_seeds(12345, 10)
        assert len(set(a)) == 10
        assert replication_seeds(12345, 5) == a[:5]


class TestReplication:
    def test_same_seed_bit_identical(self, small, small_x):
        assert run_replication(small, small_x, SHORT, 99) == run_replication(small, small_x, SHORT, 99)

    def test_different_seeds_differ(self, small, small_x):
        assert run_replication(small, small_x, SHORT, 1) != run_replication(small, small_x, SHORT, 2)

    def test_no_failures(self, small, small_x):
        c = small.constellation
        quiet = small.replace(constellation=ConstellationConfig(c.n_plane, c.n_sat, c.plane_orbit, 0.0))
        rec = run_replication(quiet, small_x, SHORT, 3)
        assert (rec.failures, rec.services, rec.plane_orders, rec.launches) == (0, 0, 0, 0)
        assert (rec.f_plane, rec.f_parking, rec.f_oos) == (0.0, 0.0, 0.0)
        assert small_x.s + 1 <= rec.s_plane <= small_x.s + small_x.q
        assert small_x.k_s + 1 <= rec.s_parking <= small_x.k_s + small_x.k_q
        assert math.isnan(rec.beta_plane)

    def test_invariants_hold_throughout(self, small, small_x):
        cfg = SimConfig(horizon_years=10, warmup_years=1, replications=1, check_invariants=True)
        rec = run_replication(small, small_x, cfg, 5)
        assert rec.failures > 0 and rec.services > 0
        assert rec.max_service_count <= small_x.n_oos

    def test_service_count_cap(self, small, small_x):
        rec = run_replication(small.replace(r_oos=1.0), small_x.replace(n_oos=1), SHORT, 11)
        assert rec.max_service_count == 1


class TestEstimate:
    def test_single_replication(self, small, small_x):
        cfg = SimConfig(horizon_years=10, warmup_years=1, replications=1)
        est = estimate(small, small_x, cfg)
        rec = est.records[0]
        assert est.mean == rec.metrics()
        assert all(v is None for v in est.stderr.values())

    def test_parallel_matches_sequential(self, small, small_x):
        assert estimate(small, small_x, SHORT, jobs=2).mean == estimate(small, small_x, SHORT, jobs=1).mean

    def test_standard_error_scaling(self, small, small_x):
        base = dict(horizon_years=15, warmup_years=2, rng_seed=3)
        se1 = estimate(small, small_x, SimConfig(replications=30, **base)).stderr
        se2 = estimate(small, small_x, SimConfig(replications=60, **base)).stderr
        ratios = [se1[m] / se2[m] for m in METRICS if se1[m] and se2[m]]
        assert len(ratios) >= 8
        assert np.mean(ratios) == pytest.approx(math.sqrt(2), rel=0.2)

    def test_aggregate_ignores_nan(self, small, small_x):
        recs = [run_replication(small, small_x, SHORT, s) for s in (1, 2)]
        recs.append(recs[0].__class__(**{**recs[0].as_dict(), "seed": 3, "beta_plane": math.nan}))
        est = aggregate(recs)
        assert est.mean["beta_plane"] == pytest.approx((recs[0].beta_plane + recs[1].beta_plane) / 2)


class TestValidationErrors:
    def test_identical_is_zero(self, baseline, table8):
        model = analytic_metrics(evaluate_decision(baseline, table8))
        errs = validation_errors(model, model)
        assert all(e.error == 0.0 for e in errs.values())

    def test_sign_insensitive(self):
        a = {m: 1.0 for m in METRICS}
        b = {m: 1.1 for m in METRICS}
        ab, ba = validation_errors(a, b), validation_errors(b, a)
        for m in ("beta_plane", "beta_parking"):
            assert ab[m].error == pytest.approx(ba[m].error)
            assert ab[m].kind == "absolute"
        assert ab["amc"].error == pytest.approx(100 * 0.1 / 1.1)
        assert ba["amc"].error == pytest.approx(100 * 0.1 / 1.0)

    def test_zero_simulated_mean_is_undefined(self):
        a = {m: 1.0 for m in METRICS}
        b = {**a, "f_oos": 0.0}
        assert validation_errors(a, b)["f_oos"].error is None


class TestSampling:
    def test_zero(self):
        res = sample_validation_instances(0, _data("validation_trade_space.json"), _data("validation_fixed.json"))
        assert res.instances == [] and res.attempts == 0

    def test_conditions(self):
        res = sample_validation_instances(3, _data("validation_trade_space.json"), _data("validation_fixed.json"),
                                          seed=1)
        assert len(res.instances) == 3
        for inst in res.instances:
            ev = inst.evaluation
            assert ev.result.plane.fill_rate >= 0.98 and ev.result.parking.fill_rate >= 0.98
            assert inst.decision.s <= inst.decision.q and inst.decision.k_s <= inst.decision.k_q
            assert ev.disposal.t_d_years <= inst.scenario.constellation.lifespan

    def test_deterministic(self):
        args = (2, _data("validation_trade_space.json"), _data("validation_fixed.json"))
        a, b = sample_validation_instances(*args, seed=4), sample_validation_instances(*args, seed=4)
        assert [i.params for i in a.instances] == [i.params for i in b.instances]

    def test_unattainable_requirement(self):
        fixed = {**_data("validation_fixed.json"), "beta_plane": 1.0, "beta_parking": 1.0}
        with pytest.raises(SamplingExhausted) as info:
            sample_validation_instances(1, _data("validation_trade_space.json"), fixed, max_attempts=300)
        assert info.value.attempts == 300


class TestCrossModule:
    def test_no_oos_instance_matches_model(self):
        trade = {**_data("validation_trade_space.json"), "r_oos": [0.0, 0.0]}
        inst = sample_validation_instances(1, trade, _data("validation_fixed.json"), seed=2).instances[0]
        est = estimate(inst.scenario, inst.decision, SimConfig(horizon_years=60, replications=30, rng_seed=1))
        errs = validation_errors(inst.evaluation, est)
        for m in ("s_plane", "s_parking", "f_plane", "f_parking", "amc"):
            assert errs[m].error <= 5.0, (m, errs[m])
        assert errs["beta_plane"].error <= 0.5
        assert errs["beta_parking"].error <= 0.5

    @pytest.mark.xfail(strict=True, reason="deterministic RAAN phasing correlates successive in-plane lead "
                                           "times; the simulated fill rate sits about 0.9%p below the model")
    def test_table5_fill_rate(self, baseline_no_oos, table5):
        est = estimate(baseline_no_oos, table5, SimConfig(replications=100))
        assert est.mean["beta_plane"] == pytest.approx(0.980, abs=0.005)
