"""Dynamic split selection over a horizon of epochs.

The state space is ``epochs x splits`` with a fixed penalty per split change,
so the optimum is found exactly by dynamic programming. :func:`brute_force`
enumerates every sequence and exists to check the DP on small horizons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import geometry, linkbudget, splits
from .errors import ConfigError, InfeasibleEpochError
from .geometry import OrbitConfig
from .linkbudget import ModCod
from .splits import CellConfig, HarqConfig, ProtocolFunction, SplitOption

MIN_ENERGY = "min_energy"
MAX_FEEDER = "max_feeder_exploitation"

# relative tolerance for treating two objective values as a tie
_TIE_RTOL = 1e-9

DEFAULT_FUNCTION_POWER_W = {
    ProtocolFunction.RRC: 2.0,
    ProtocolFunction.PDCP: 3.0,
    ProtocolFunction.RLC_HIGH: 3.0,
    ProtocolFunction.RLC_LOW: 3.0,
    ProtocolFunction.MAC_HIGH: 5.0,
    ProtocolFunction.MAC_LOW: 5.0,
    ProtocolFunction.PHY_HIGH: 20.0,
    ProtocolFunction.PHY_LOW: 40.0,
    ProtocolFunction.RF: 10.0,
}

# share of the low-PHY chain left on board by each option-7 variant:
# 7.1 keeps the FFT, 7.2 adds precoding and RE mapping, 7.3 adds
# scrambling, modulation and layer mapping
DEFAULT_PHY_LOW_SHARE = {"7.1": 0.4, "7.2": 0.6, "7.3": 0.8}


@dataclass(frozen=True)
class SriTxModel:
    """Satellite return-feeder transmit power needed to carry a given rate.

    The occupied bandwidth is ``rate / efficiency``; the C/N0 target follows
    from the ModCod, and the RF power from the link budget at ``distance_km``,
    divided by the amplifier efficiency.
    """

    modcod: ModCod
    carrier_ghz: float = 17.0
    distance_km: float = 1931.6
    extra_losses_db: float = 1.97
    tx_gain_dbi: float = 40.0
    gt_dbk: float = 30.0
    amplifier_efficiency: float = 0.3

    def power_w(self, rate_bps: float) -> float:
        if rate_bps <= 0:
            return 0.0
        bandwidth = rate_bps / self.modcod.spectral_efficiency_bps_hz
        cn0 = linkbudget.required_cn0(self.modcod, bandwidth)
        loss = linkbudget.fspl(self.distance_km, self.carrier_ghz)
        ptx = linkbudget.required_ptx(cn0, loss, self.extra_losses_db, self.tx_gain_dbi, self.gt_dbk)
        return 10.0 ** (ptx / 10.0) / self.amplifier_efficiency


@dataclass(frozen=True)
class PowerModel:
    function_power_w: Mapping[ProtocolFunction, float] = field(
        default_factory=lambda: dict(DEFAULT_FUNCTION_POWER_W))
    load_exponent: float = 1.0
    idle_fraction: float = 0.0
    phy_low_share: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_PHY_LOW_SHARE))
    function_cap_w: float | None = None
    sri: SriTxModel | None = None

    def __post_init__(self):
        if any(p < 0 for p in self.function_power_w.values()):
            raise ConfigError("per-function powers must be >= 0")
        if not self.function_power_w.get(ProtocolFunction.RF, 0.0) > 0:
            raise ConfigError("RF power must be > 0")
        if not 0.0 <= self.idle_fraction <= 1.0:
            raise ConfigError("idle_fraction must be in [0, 1]")
        if self.load_exponent < 0:
            raise ConfigError("load_exponent must be >= 0")


@dataclass(frozen=True)
class EpochState:
    t: float
    in_eclipse: bool
    available_power_w: float
    traffic_load: float
    feeder_capacity_bps: float
    feeder_delay_s: float

    def __post_init__(self):
        if not self.available_power_w > 0:
            raise ConfigError(f"epoch at t={self.t}: available_power_w must be > 0")
        if not 0.0 <= self.traffic_load <= 1.0:
            raise ConfigError(f"epoch at t={self.t}: traffic_load must be in [0, 1]")


@dataclass(frozen=True)
class SplitContext:
    """Everything besides the epoch that decides whether a split can run."""

    catalog: tuple[SplitOption, ...] = field(default_factory=lambda: tuple(splits.catalog()))
    harq: HarqConfig = field(default_factory=HarqConfig)
    cell: CellConfig = field(default_factory=CellConfig)
    power_model: PowerModel = field(default_factory=PowerModel)
    n_dus: int = 1
    duplexing: str = "max"


@dataclass(frozen=True)
class Plan:
    splits: tuple[str, ...]
    powers_w: tuple[float, ...]
    total_energy_j: float
    switch_count: int
    objective: str
    objective_value: float
    epoch_s: float


def _function_load_factor(model: PowerModel, load: float) -> float:
    return model.idle_fraction + (1.0 - model.idle_fraction) * load**model.load_exponent


def processing_power(split_id: str, power_model: PowerModel, load: float) -> float:
    """Power (W) of the on-board protocol functions other than RF."""
    factor = _function_load_factor(power_model, load)
    total = 0.0
    for fn in splits.onboard_function_set(split_id):
        if fn is ProtocolFunction.RF:
            continue
        p = power_model.function_power_w.get(fn, 0.0)
        if fn is ProtocolFunction.PHY_LOW and split_id in power_model.phy_low_share:
            p *= power_model.phy_low_share[split_id]
        total += p * factor
    return total


def onboard_power(split_id: str, power_model: PowerModel, load: float,
                  cell: CellConfig | None = None, options=None) -> float:
    """Payload power (W) of one DU running ``split_id`` at ``load``.

    RF always draws full power; every other on-board function scales with
    load. With an SRI model attached, the return-feeder transmit power for
    the split's UL fronthaul rate is added.
    """
    if not 0.0 <= load <= 1.0:
        raise ConfigError(f"load must be in [0, 1], got {load}")
    total = power_model.function_power_w[ProtocolFunction.RF]
    total += processing_power(split_id, power_model, load)
    if power_model.sri is not None:
        option = splits.get(split_id, options)
        _, ul = splits.required_fronthaul_rate(option, cell or CellConfig(), load)
        total += power_model.sri.power_w(ul)
    return total


def _check(split: SplitOption, epoch: EpochState, ctx: SplitContext) -> str | None:
    """Name of the first constraint ``split`` violates in ``epoch``, or ``None``."""
    if splits.latency_limit(split, ctx.harq) < epoch.feeder_delay_s:
        return "latency"
    demand = ctx.n_dus * splits.per_du_rate(split, ctx.cell, epoch.traffic_load, ctx.duplexing)
    if demand > epoch.feeder_capacity_bps:
        return "capacity"
    model = ctx.power_model
    if model.function_cap_w is not None \
            and processing_power(split.id, model, epoch.traffic_load) > model.function_cap_w:
        return "compute"
    if ctx.n_dus * _power(split, epoch, ctx) > epoch.available_power_w:
        return "power"
    return None


def _power(split: SplitOption, epoch: EpochState, ctx: SplitContext) -> float:
    return onboard_power(split.id, ctx.power_model, epoch.traffic_load, ctx.cell, ctx.catalog)


def feasible_splits(epoch: EpochState, ctx: SplitContext | None = None) -> set[str]:
    """Split ids meeting latency, capacity, compute and power limits in ``epoch``."""
    ctx = ctx or SplitContext()
    return {s.id for s in ctx.catalog if _check(s, epoch, ctx) is None}


def _stage_costs(epochs, ctx, objective, epoch_s):
    """Per-epoch cost for every split; ``inf`` where infeasible."""
    costs = np.full((len(epochs), len(ctx.catalog)), math.inf)
    energy = np.zeros_like(costs)
    for i, ep in enumerate(epochs):
        reasons = {}
        for j, split in enumerate(ctx.catalog):
            why = _check(split, ep, ctx)
            if why is not None:
                reasons[split.id] = why
                continue
            p = ctx.n_dus * _power(split, ep, ctx)
            energy[i, j] = p * epoch_s
            if objective == MIN_ENERGY:
                costs[i, j] = p * epoch_s
            else:
                dl, ul = splits.required_fronthaul_rate(split, ctx.cell, ep.traffic_load)
                # utility in Gbit carried per epoch, negated for minimisation
                costs[i, j] = -ctx.n_dus * (dl + ul) * epoch_s / 1e9
        if len(reasons) == len(ctx.catalog):
            raise InfeasibleEpochError(i, reasons)
    return costs, energy


def _less(a: float, b: float) -> bool:
    return a < b - _TIE_RTOL * max(1.0, abs(a), abs(b))


def optimize(epochs: Sequence[EpochState], ctx: SplitContext | None = None,
             switch_cost_j: float = 0.0, objective: str = MIN_ENERGY,
             epoch_s: float = 60.0) -> Plan:
    """Cost-optimal split sequence over ``epochs``.

    Ties go to the more centralised split, then to staying on the current
    one. ``switch_cost_j`` is added once per change; under the
    feeder-exploitation objective it is a penalty in Gbit-equivalents.
    """
    ctx = ctx or SplitContext()
    if objective not in (MIN_ENERGY, MAX_FEEDER):
        raise ConfigError(f"unknown objective {objective!r}")
    if switch_cost_j < 0:
        raise ConfigError("switch_cost_j must be >= 0")
    if not epochs:
        raise ConfigError("need at least one epoch")
    costs, energy = _stage_costs(epochs, ctx, objective, epoch_s)
    n, m = costs.shape
    ranks = [s.rank for s in ctx.catalog]

    def step_cost(j_from: int, j_to: int) -> float:
        return 0.0 if j_from == j_to else switch_cost_j

    # value[i, j]: optimal cost of epochs i..n-1 given split j in epoch i
    value = np.full((n, m), math.inf)
    value[-1] = costs[-1]
    for i in range(n - 2, -1, -1):
        for j in range(m):
            if math.isinf(costs[i, j]):
                continue
            tail = min(step_cost(j, k) + value[i + 1, k] for k in range(m))
            value[i, j] = costs[i, j] + tail
    if np.all(np.isinf(value[0])):
        raise ConfigError("no split sequence has finite cost (switch cost too high?)")

    def pick(candidates, stay=None):
        best = None
        for score, j in candidates:
            if math.isinf(score):
                continue
            if best is None or _less(score, best[0]):
                best = (score, j)
            elif not _less(best[0], score):
                # tie: prefer centralisation, then staying put
                if (ranks[j], j == stay) > (ranks[best[1]], best[1] == stay):
                    best = (score, j)
        return best[1]

    chosen = [pick((value[0, j], j) for j in range(m))]
    for i in range(1, n):
        prev = chosen[-1]
        chosen.append(pick(((step_cost(prev, k) + value[i, k], k) for k in range(m)), stay=prev))

    switches = sum(a != b for a, b in zip(chosen, chosen[1:]))
    stage_energy = [float(energy[i, j]) for i, j in enumerate(chosen)]
    # the switch penalty counts as energy only under the energy objective
    total_energy = sum(stage_energy)
    if objective == MIN_ENERGY and switches:
        total_energy += switch_cost_j * switches
    return Plan(
        splits=tuple(ctx.catalog[j].id for j in chosen),
        powers_w=tuple(e / epoch_s for e in stage_energy),
        total_energy_j=float(total_energy),
        switch_count=switches,
        objective=objective,
        objective_value=float(value[0, chosen[0]]),
        epoch_s=epoch_s,
    )


def brute_force(epochs: Sequence[EpochState], ctx: SplitContext | None = None,
                switch_cost_j: float = 0.0, objective: str = MIN_ENERGY,
                epoch_s: float = 60.0) -> tuple[float, tuple[str, ...]]:
    """Exhaustive search over every feasible split sequence.

    Builds the full cost tensor (one axis per epoch) from
    :func:`feasible_splits` and :func:`onboard_power` and returns its minimum
    as ``(cost, sequence)``. Limited to 8 epochs.
    """
    ctx = ctx or SplitContext()
    if len(epochs) > 8:
        raise ConfigError("brute force is limited to 8 epochs")
    choices, stage = [], []
    for i, ep in enumerate(epochs):
        ids = sorted(feasible_splits(ep, ctx), key=lambda sid: float(sid))
        if not ids:
            raise InfeasibleEpochError(i, {"all": "no feasible split"})
        vals = []
        for sid in ids:
            if objective == MIN_ENERGY:
                vals.append(ctx.n_dus * onboard_power(sid, ctx.power_model, ep.traffic_load,
                                                      ctx.cell, ctx.catalog) * epoch_s)
            else:
                dl, ul = splits.required_fronthaul_rate(splits.get(sid, ctx.catalog), ctx.cell,
                                                        ep.traffic_load)
                vals.append(-ctx.n_dus * (dl + ul) * epoch_s / 1e9)
        choices.append(ids)
        stage.append(np.array(vals))
    n = len(epochs)
    total = np.zeros([len(c) for c in choices])
    for i in range(n):
        shape = [1] * n
        shape[i] = len(choices[i])
        total = total + stage[i].reshape(shape)
        if i + 1 < n:
            differs = np.array([[a != b for b in choices[i + 1]] for a in choices[i]], dtype=float)
            shape[i + 1] = len(choices[i + 1])
            penalty = np.where(differs > 0, switch_cost_j, 0.0)
            total = total + penalty.reshape(shape)
    flat = int(np.argmin(total))
    idx = np.unravel_index(flat, total.shape)
    return float(total[idx]), tuple(choices[i][j] for i, j in enumerate(idx))


def power_timeline(orbit: OrbitConfig, solar_power_w: float, eclipse_power_w: float,
                   epochs: Sequence[float], sun_phase_deg: float = 0.0) -> list[float]:
    """Available payload power at each epoch time: two levels, eclipse or sunlit."""
    if not solar_power_w >= eclipse_power_w >= 0:
        raise ConfigError("need solar_power_w >= eclipse_power_w >= 0")
    shadow = np.atleast_1d(geometry.in_eclipse(orbit, np.asarray(epochs, dtype=float), sun_phase_deg))
    return [eclipse_power_w if s else solar_power_w for s in shadow]


@dataclass(frozen=True)
class OptimizeSettings:
    horizon_s: float = 5400.0
    epoch_s: float = 60.0
    t0_s: float = 0.0
    switch_cost_j: float = 0.0
    objective: str = MIN_ENERGY
    solar_power_w: float = 400.0
    eclipse_power_w: float = 150.0
    sun_phase_deg: float = 0.0
    feeder_delay: str = "worst_case"
    traffic_load: tuple[float, ...] | None = None
    feeder_capacity_bps: float | None = None
    n_dus: int | None = None

    def __post_init__(self):
        if not (self.horizon_s > 0 and self.epoch_s > 0):
            raise ConfigError("optimize.horizon_s and optimize.epoch_s must be > 0")
        if self.objective not in (MIN_ENERGY, MAX_FEEDER):
            raise ConfigError(f"optimize.objective must be {MIN_ENERGY} or {MAX_FEEDER}")
        if self.feeder_delay not in ("worst_case", "geometric"):
            raise ConfigError("optimize.feeder_delay must be worst_case or geometric")


def epoch_times(settings: OptimizeSettings) -> list[float]:
    n = max(1, int(math.floor(settings.horizon_s / settings.epoch_s + 1e-9)))
    return [settings.t0_s + i * settings.epoch_s for i in range(n)]


def epochs_from_scenario(scenario, settings: OptimizeSettings) -> list[EpochState]:
    """Epoch KPIs along the scenario orbit.

    Power follows the eclipse timeline. Feeder delay is either the worst case
    at the gateway minimum elevation or, with ``feeder_delay='geometric'``,
    the delay at the current gateway elevation clamped to that minimum.
    """
    from . import feasibility

    times = epoch_times(settings)
    power = power_timeline(scenario.orbit, settings.solar_power_w, settings.eclipse_power_w,
                           times, settings.sun_phase_deg)
    shadow = np.atleast_1d(geometry.in_eclipse(scenario.orbit, times, settings.sun_phase_deg))
    loads = settings.traffic_load or (scenario.traffic_load,)
    capacity = settings.feeder_capacity_bps
    if capacity is None:
        capacity = scenario.feeder_capacity_bps
    if settings.feeder_delay == "geometric":
        elev = geometry.elevation_series(scenario.orbit, scenario.gateway, times)
        elev = np.clip(elev, scenario.gateway.min_elevation_deg, 90.0)
        delays = [feasibility.feeder_delay_at(scenario, float(e)) for e in elev]
    else:
        delays = [feasibility.worst_feeder_delay(scenario)] * len(times)
    return [
        EpochState(t=t, in_eclipse=bool(shadow[i]), available_power_w=power[i],
                   traffic_load=loads[i % len(loads)], feeder_capacity_bps=capacity,
                   feeder_delay_s=delays[i])
        for i, t in enumerate(times)
    ]
