from __future__ import annotations

import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ntnsplit import feasibility, linkbudget, optimizer, splits
from ntnsplit.errors import ConfigError, InfeasibleEpochError
from ntnsplit.optimizer import EpochState, PowerModel, SplitContext
from ntnsplit.splits import ProtocolFunction as F

MC = linkbudget.modcod_by_name("256APSK 3/4")
CTX32 = SplitContext(harq=splits.HarqConfig(n_processes=32))


def epoch(power=1e4, load=1.0, cap=400e9, delay=1e-4, t=0.0, eclipse=False):
    return EpochState(t, eclipse, power, load, cap, delay)


def oracle_power(sid, load):
    table = optimizer.DEFAULT_FUNCTION_POWER_W
    total = table[F.RF]
    for fn in splits.onboard_function_set(sid):
        if fn is F.RF:
            continue
        p = table[fn] * optimizer.DEFAULT_PHY_LOW_SHARE.get(sid, 1.0) if fn is F.PHY_LOW else table[fn]
        total += p * load
    return total


@pytest.mark.parametrize("sid", splits.SPLIT_IDS)
@pytest.mark.parametrize("load", [0.0, 0.5, 1.0])
def test_onboard_power_matches_function_sum(sid, load):
    assert optimizer.onboard_power(sid, PowerModel(), load) == pytest.approx(oracle_power(sid, load))


def test_frozen_power_table():
    got = [optimizer.onboard_power(s, PowerModel(), 1.0) for s in splits.CENTRALIZATION_ORDER]
    assert got == [89.0, 86.0, 83.0, 80.0, 75.0, 70.0, 42.0, 34.0, 26.0, 10.0]


def test_sri_power_oracle():
    sri = optimizer.SriTxModel(MC)
    rate = 86e9
    bw = rate / 5.9
    cn0 = 24.02 + 10 * math.log10(bw)
    loss = 20 * math.log10(4 * math.pi * 1931.6e3 * 17e9 / 299_792_458.0)
    ptx = cn0 + loss + 1.97 - 40 - 30 - 228.6
    assert sri.power_w(rate) == pytest.approx(10 ** (ptx / 10) / 0.3, rel=1e-12)
    assert sri.power_w(0) == 0.0
    model = PowerModel(sri=sri)
    assert optimizer.onboard_power("8", model, 1.0) == pytest.approx(102.31, abs=0.01)
    assert optimizer.onboard_power("7.1", model, 1.0) == pytest.approx(76.5, abs=0.05)


def test_feasible_splits_respects_each_constraint():
    assert optimizer.feasible_splits(epoch(delay=6e-3), CTX32) == {"1", "2", "3"}
    assert "8" not in optimizer.feasible_splits(epoch(cap=100e9), CTX32)
    assert optimizer.feasible_splits(epoch(power=30.0), CTX32) == {"7.1", "8"}
    capped = dataclasses.replace(CTX32, power_model=PowerModel(function_cap_w=32.0))
    assert optimizer.feasible_splits(epoch(), capped) == {"7.3", "7.2", "7.1", "8"}


def test_min_energy_prefers_most_centralised():
    plan = optimizer.optimize([epoch()] * 3, CTX32)
    assert plan.splits == ("8", "8", "8")
    assert plan.total_energy_j == pytest.approx(3 * 10.0 * 60)


def test_ties_go_to_higher_rank():
    flat = {fn: 0.0 for fn in F}
    flat[F.RF] = 5.0
    ctx = dataclasses.replace(CTX32, power_model=PowerModel(function_power_w=flat))
    plan = optimizer.optimize([epoch(delay=6e-3)] * 2, ctx)
    assert plan.splits == ("3", "3")


def test_switch_cost_suppresses_short_excursion():
    ctx = dataclasses.replace(CTX32, power_model=PowerModel(sri=optimizer.SriTxModel(MC)))
    epochs = [epoch(power=200.0), epoch(power=80.0), epoch(power=200.0)]
    cheap = optimizer.optimize(epochs, ctx, switch_cost_j=0.0, objective=optimizer.MAX_FEEDER)
    assert cheap.splits == ("8", "7.1", "8")
    costly = optimizer.optimize(epochs, ctx, switch_cost_j=1e6, objective=optimizer.MAX_FEEDER)
    assert costly.switch_count == 0


def test_infeasible_epoch_raises_with_reasons():
    with pytest.raises(InfeasibleEpochError) as info:
        optimizer.optimize([epoch(), epoch(delay=20e-3)], CTX32)
    assert info.value.epoch_index == 1
    assert set(info.value.reasons.values()) == {"latency"}


def test_infinite_switch_cost_without_common_split():
    epochs = [epoch(delay=6e-3, power=85.0), epoch(power=20.0)]
    with pytest.raises(ConfigError):
        optimizer.optimize(epochs, CTX32, switch_cost_j=math.inf)


def test_bad_arguments():
    with pytest.raises(ConfigError):
        optimizer.optimize([], CTX32)
    with pytest.raises(ConfigError):
        optimizer.optimize([epoch()], CTX32, objective="fastest")
    with pytest.raises(ConfigError):
        optimizer.optimize([epoch()], CTX32, switch_cost_j=-1)
    with pytest.raises(ConfigError):
        optimizer.brute_force([epoch()] * 9, CTX32)
    with pytest.raises(ConfigError):
        EpochState(0, False, 0.0, 1.0, 1e9, 1e-3)


def test_power_timeline_levels():
    orbit = feasibility.Scenario().orbit
    levels = optimizer.power_timeline(orbit, 200, 80, [0.0, 2900.0])
    assert levels == [200, 80]
    with pytest.raises(ConfigError):
        optimizer.power_timeline(orbit, 50, 80, [0.0])


def test_epochs_from_scenario_geometric_delay():
    sc = feasibility.Scenario()
    s = optimizer.OptimizeSettings(horizon_s=600, epoch_s=60, feeder_delay="geometric",
                                   traffic_load=(0.2, 0.8))
    eps = optimizer.epochs_from_scenario(sc, s)
    assert len(eps) == 10
    assert [e.traffic_load for e in eps[:3]] == [0.2, 0.8, 0.2]
    worst = feasibility.worst_feeder_delay(sc)
    assert all(e.feeder_delay_s <= worst + 1e-15 for e in eps)
    assert eps[0].feeder_delay_s == pytest.approx(2.0014e-3, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(powers=st.lists(st.sampled_from([30.0, 50.0, 80.0, 1e4]), min_size=1, max_size=6),
       cost=st.sampled_from([0.0, 10.0, 1e3]),
       objective=st.sampled_from([optimizer.MIN_ENERGY, optimizer.MAX_FEEDER]))
def test_dp_equals_enumeration(powers, cost, objective):
    eps = [epoch(power=p) for p in powers]
    plan = optimizer.optimize(eps, CTX32, cost, objective)
    best, seq = optimizer.brute_force(eps, CTX32, cost, objective)
    assert plan.objective_value == pytest.approx(best, rel=1e-9, abs=1e-9)
    for sid, ep in zip(plan.splits, eps):
        assert sid in optimizer.feasible_splits(ep, CTX32)


@settings(max_examples=40, deadline=None)
@given(load=st.floats(0, 1), a=st.sampled_from(splits.CENTRALIZATION_ORDER),
       b=st.sampled_from(splits.CENTRALIZATION_ORDER))
def test_power_non_increasing_with_centralisation(load, a, b):
    ra, rb = splits.CENTRALIZATION_ORDER.index(a), splits.CENTRALIZATION_ORDER.index(b)
    if ra <= rb:
        assert optimizer.onboard_power(a, PowerModel(), load) >= \
            optimizer.onboard_power(b, PowerModel(), load)
