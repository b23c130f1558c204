"""Tests for scenario configuration, the run driver, and parameter sweeps.

Determinism, seeded stream behaviour, config validation and round-trips,
and the statistical behaviour of full runs at moderate scale.
"""

import dataclasses

import numpy as np
import pytest

from lsasim.enforcement import EnforcementConfig, PenaltyFunction
from lsasim.presets import DEFAULT_SEED, get_preset
from lsasim.sim import (
    ConfigError,
    DemandModel,
    ScenarioConfig,
    run_scenario,
    sweep,
    warmup,
)


def base_config(**overrides):
    fields = dict(
        protocol="fair_l1",
        n_operators=4,
        n_incumbents=1,
        window=20,
        instants=300,
        seed=7,
        demands=tuple(DemandModel.fixed(100.0) for _ in range(4)),
        supplies=(100.0,),
    )
    fields.update(overrides)
    return ScenarioConfig(**fields)


def multi_config(**overrides):
    fields = dict(
        protocol="oos",
        n_operators=4,
        n_incumbents=2,
        window=20,
        instants=300,
        seed=7,
        demands=tuple(DemandModel.choice((50.0, 100.0)) for _ in range(4)),
        supplies=(100.0, 100.0),
    )
    fields.update(overrides)
    return ScenarioConfig(**fields)


# -- demand models ----------------------------------------------------------


def test_fixed_demand_never_touches_the_stream():
    rng = np.random.default_rng(0)
    before = rng.bit_generator.state["state"]["state"]
    model = DemandModel.fixed(80.0)
    assert model.sample(rng) == 80.0
    assert rng.bit_generator.state["state"]["state"] == before


def test_choice_demand_draws_once_even_for_one_value():
    rng = np.random.default_rng(0)
    before = rng.bit_generator.state["state"]["state"]
    model = DemandModel.choice((80.0,))
    assert model.sample(rng) == 80.0
    assert rng.bit_generator.state["state"]["state"] != before


def test_choice_demand_frequencies_are_near_uniform():
    rng = np.random.default_rng(1)
    model = DemandModel.choice((50.0, 100.0))
    draws = np.array([model.sample(rng) for _ in range(10_000)])
    assert abs((draws == 50.0).mean() - 0.5) < 0.02
    assert abs((draws == 100.0).mean() - 0.5) < 0.02


def test_demand_model_validation():
    with pytest.raises(ValueError):
        DemandModel.fixed(-5.0)
    with pytest.raises(ValueError):
        DemandModel.choice(())
    with pytest.raises(ValueError):
        DemandModel.choice((50.0, -1.0))
    with pytest.raises(ValueError):
        DemandModel("weird", (1.0,))


def test_fixed_versus_single_choice_changes_downstream_draws():
    """A one-value random demand still consumes a draw, which shifts every
    later draw from the shared demand stream; a constant demand does not."""
    fixed = base_config(
        demands=(DemandModel.fixed(100.0), DemandModel.choice((50.0, 100.0))),
        n_operators=2,
        instants=100,
    )
    choosy = base_config(
        demands=(DemandModel.choice((100.0,)), DemandModel.choice((50.0, 100.0))),
        n_operators=2,
        instants=100,
    )
    run_fixed = run_scenario(fixed)
    run_choosy = run_scenario(choosy)
    # operator 0's demand values agree, but operator 1 sees shifted draws
    assert np.all(run_fixed.trace.demands[:, 0] == 100.0)
    assert np.all(run_choosy.trace.demands[:, 0] == 100.0)
    assert not np.array_equal(
        run_fixed.trace.demands[:, 1], run_choosy.trace.demands[:, 1]
    )


# -- config validation ------------------------------------------------------


def test_validation_error_messages_name_the_field():
    cases = [
        (dict(protocol="bogus"), "protocol"),
        (dict(n_operators=0), "operators"),
        (dict(n_incumbents=2, supplies=(100.0, 100.0)), "incumbents"),
        (dict(window=0), "window"),
        (dict(instants=10), "instants"),
        (dict(seed=-1), "seed"),
        (dict(supplies=(100.0, 50.0)), "supplies"),
        (dict(supplies=(-3.0,)), "supplies"),
        (dict(demands=(DemandModel.fixed(1.0),)), "demands"),
        (dict(enforcement=EnforcementConfig()), "enforcement"),
        (dict(violation_probs=(0.1, 0.1, 0.1, 0.1)), "violation_probs"),
    ]
    for overrides, field in cases:
        with pytest.raises(ConfigError, match=f"^{field}"):
            base_config(**overrides).validate()


def test_validation_rejects_bad_probabilities_and_coalitions():
    with pytest.raises(ConfigError, match="violation_probs"):
        base_config(
            protocol="enforced_l1", violation_probs=(0.0, 0.1, 0.2, 1.5)
        ).validate()
    with pytest.raises(ConfigError, match="coalitions"):
        multi_config(coalitions=((0, 1), ())).validate()
    with pytest.raises(ConfigError, match="coalitions"):
        multi_config(coalitions=((0, 1), (2, 9))).validate()
    with pytest.raises(ConfigError, match="coalitions"):
        multi_config(coalitions=((0, 0), (1, 2))).validate()


def test_validation_requires_exactly_one_supply_form():
    with pytest.raises(ConfigError, match="supplies"):
        base_config(supplies=None).validate()
    schedule = tuple((100.0,) for _ in range(300))
    cfg = base_config(supplies=None, supply_schedule=schedule)
    cfg.validate()
    with pytest.raises(ConfigError, match="supplies"):
        base_config(supply_schedule=schedule).validate()
    with pytest.raises(ConfigError, match="supplies"):
        base_config(supplies=None, supply_schedule=schedule[:-1]).validate()


def test_supplies_at_reads_constant_or_schedule():
    assert base_config().supplies_at(123).tolist() == [100.0]
    rows = tuple((float(k), 50.0) for k in range(300))
    cfg = multi_config(supplies=None, supply_schedule=rows)
    assert cfg.supplies_at(0).tolist() == [0.0, 50.0]
    assert cfg.supplies_at(299).tolist() == [299.0, 50.0]


# -- dict round trip --------------------------------------------------------


def test_config_round_trips_through_dict():
    cfg = base_config(
        protocol="enforced_l1",
        enforcement=EnforcementConfig(
            fairness_weight=0.4,
            exclusion_cutoff=0.9,
            cooloff_slots=3,
            penalty=PenaltyFunction("power", 2.0),
        ),
        violation_probs=(0.0, 0.1, 0.2, 0.3),
        demands=(
            DemandModel.fixed(100.0),
            DemandModel.choice((50.0, 100.0)),
            DemandModel.fixed(25.0),
            DemandModel.choice((10.0, 20.0, 30.0)),
        ),
    )
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_multi_incumbent_config_round_trips_with_schedule():
    rows = tuple((100.0, float(50 + k % 3)) for k in range(300))
    cfg = multi_config(
        protocol="mcs",
        supplies=None,
        supply_schedule=rows,
        coalitions=((0, 1, 2), (1, 2, 3)),
        emit_moving_average=True,
    )
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_from_dict_rejects_unknown_and_missing_keys():
    good = base_config().to_dict()
    bad = dict(good)
    bad["windw"] = 20
    with pytest.raises(ConfigError, match="unknown key"):
        ScenarioConfig.from_dict(bad)
    missing = dict(good)
    del missing["supplies"]
    with pytest.raises(ConfigError, match="missing required key"):
        ScenarioConfig.from_dict(missing)
    with pytest.raises(ConfigError, match="expected a mapping"):
        ScenarioConfig.from_dict([1, 2])


def test_from_dict_rejects_wrong_types():
    good = base_config().to_dict()
    for key, value in (
        ("operators", "four"),
        ("protocol", 3),
        ("window", True),
        ("demands", 100),
    ):
        bad = dict(good)
        bad[key] = value
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(bad)


# -- run driver -------------------------------------------------------------


def test_same_seed_reproduces_the_trace_exactly():
    for make in (base_config, multi_config):
        a = run_scenario(make())
        b = run_scenario(make())
        assert a.trace.equals(b.trace)
        assert np.array_equal(a.report.mean_shares, b.report.mean_shares)


def test_different_seeds_give_different_traces():
    a = run_scenario(base_config(seed=1))
    b = run_scenario(base_config(seed=2))
    assert not a.trace.equals(b.trace)


def test_warmup_trackers_start_inside_the_unit_interval():
    cfg = multi_config()
    trackers = warmup(cfg, np.random.default_rng(3))
    assert len(trackers) == cfg.n_incumbents
    for tracker in trackers:
        prio = tracker.priorities()
        assert prio.shape == (cfg.n_operators,)
        assert np.all((prio >= 0.0) & (prio <= 1.0))


def test_warm_start_priorities_steer_early_allocations():
    """With identical constant demands, only the warm-start draws distinguish
    the operators, so different seeds must reorder the early winners."""
    a = run_scenario(base_config(seed=11, instants=25))
    b = run_scenario(base_config(seed=12, instants=25))
    assert np.array_equal(a.trace.demands, b.trace.demands)  # both constant
    assert not np.array_equal(a.trace.allocated[0], b.trace.allocated[0])


def test_single_incumbent_run_fields():
    result = run_scenario(base_config())
    assert result.rounds is None
    assert result.fictitious is None
    assert result.trace.n_instants == 300
    assert result.report.moving_averages.shape == (300 - 20 + 1, 4)


def test_multi_incumbent_run_records_round_counts():
    cfg = multi_config(protocol="mcs")
    result = run_scenario(cfg)
    assert result.rounds is not None
    assert result.rounds.shape == (cfg.instants,)
    assert np.all(result.rounds >= 1)
    assert np.all(result.rounds <= max(cfg.n_operators, cfg.n_incumbents))


def test_enforced_run_with_full_weight_matches_plain_fair_run():
    plain = run_scenario(base_config())
    enforced = run_scenario(
        base_config(
            protocol="enforced_l1",
            enforcement=EnforcementConfig(fairness_weight=1.0),
        )
    )
    assert enforced.trace.equals(plain.trace)
    assert np.array_equal(enforced.fictitious, plain.trace.allocated[:, :, 0])


def test_enforced_shadow_stream_matches_standalone_fair_run():
    enforced = run_scenario(
        base_config(
            protocol="enforced_l1",
            enforcement=EnforcementConfig(fairness_weight=0.3),
            violation_probs=(0.0, 0.1, 0.2, 0.3),
        )
    )
    plain = run_scenario(base_config())
    assert (
        enforced.fictitious.tobytes() == plain.trace.allocated[:, :, 0].tobytes()
    )
    # the real allocations themselves diverge once penalties bite
    assert not np.array_equal(
        enforced.trace.allocated, plain.trace.allocated
    )
    assert enforced.trace.violations.any()


def test_violations_only_hit_operators_that_were_served():
    result = run_scenario(
        base_config(
            protocol="enforced_l1",
            enforcement=EnforcementConfig(fairness_weight=0.0),
            violation_probs=(1.0, 1.0, 1.0, 1.0),
        )
    )
    served = result.trace.allocated[:, :, 0] > 1e-9
    assert np.array_equal(result.trace.violations, served)


# -- statistical behaviour --------------------------------------------------


def test_saturated_fair_run_splits_evenly_for_several_seeds():
    for seed in (3, 4, 5):
        result = run_scenario(base_config(seed=seed, instants=5000))
        assert np.allclose(result.report.mean_shares, 0.25, atol=0.02)


def test_low_demand_operator_keeps_a_low_share():
    cfg = base_config(
        demands=(
            DemandModel.fixed(10.0),
            DemandModel.fixed(100.0),
            DemandModel.fixed(100.0),
            DemandModel.fixed(100.0),
        ),
        instants=5000,
    )
    shares = run_scenario(cfg).report.mean_shares
    assert shares[0] == pytest.approx(0.1, abs=0.01)
    assert np.all(shares[1:] > 0.25)


def test_mean_shares_are_stable_across_seeds():
    cfg = get_preset("fig2a")
    results = sweep(cfg, "seed", [DEFAULT_SEED + k for k in range(5)])
    shares = np.vstack([r.report.mean_shares for r in results])
    assert np.all(shares.std(axis=0) < 0.01)


# -- sweeps -----------------------------------------------------------------


def test_sweep_assigns_values_and_shares_the_base_seed():
    cfg = base_config(
        protocol="enforced_l1",
        enforcement=EnforcementConfig(fairness_weight=1.0),
        instants=50,
        window=10,
    )
    results = sweep(cfg, "fairness_weight", [1.0, 0.5, 0.0])
    assert [r.config.enforcement.fairness_weight for r in results] == [1.0, 0.5, 0.0]
    # one shared seed: every run sees the same demand draws
    assert [r.config.seed for r in results] == [7, 7, 7]
    assert np.array_equal(results[0].trace.demands, results[2].trace.demands)


def test_single_value_weight_sweep_reproduces_the_plain_run():
    cfg = base_config(
        protocol="enforced_l1",
        enforcement=EnforcementConfig(fairness_weight=0.6),
        instants=100,
    )
    direct = run_scenario(cfg)
    swept = sweep(cfg, "fairness_weight", [0.6])
    assert len(swept) == 1
    assert swept[0].trace.equals(direct.trace)


def test_exponent_sweep_swaps_in_power_penalties():
    cfg = base_config(
        protocol="enforced_l1",
        enforcement=EnforcementConfig(fairness_weight=0.5),
        instants=50,
        window=10,
    )
    results = sweep(cfg, "exponent", [1.0, 2.0, 4.0])
    kinds = {r.config.enforcement.penalty.kind for r in results}
    assert kinds == {"power"}
    assert [r.config.enforcement.penalty.exponent for r in results] == [1.0, 2.0, 4.0]


def test_seed_sweep_uses_the_values_as_seeds():
    results = sweep(base_config(instants=30, window=10), "seed", [100, 200])
    assert [r.config.seed for r in results] == [100, 200]
    assert not results[0].trace.equals(results[1].trace)


def test_sweep_validates_parameter_and_values():
    with pytest.raises(ConfigError, match="sweep"):
        sweep(base_config(), "cutoff", [0.5])
    with pytest.raises(ConfigError, match="sweep"):
        sweep(base_config(), "fairness_weight", [])
    with pytest.raises(ConfigError, match="sweep"):
        sweep(base_config(), "fairness_weight", [0.5])  # fairness_weight needs the enforced protocol


def test_with_updates_revalidates():
    cfg = base_config()
    with pytest.raises(ConfigError):
        cfg.with_updates(window=0)
    assert cfg.with_updates(seed=99).seed == 99
    assert dataclasses.replace(cfg) == cfg
