"""Per-split feasibility of F1 over the feeder link for a scenario.

Latency is gated by the worst case over a pass, i.e. the one-way feeder
delay at the gateway's minimum elevation, because F1 needs a persistent
connection. Capacity compares the aggregate per-DU demand of all DUs needed
by the satellite's beams against one shared feeder capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import geometry, linkbudget, splits
from .errors import ConfigError
from .geometry import BEAM_CENTER, GroundSite, OrbitConfig
from .linkbudget import BandConfig, ModCod
from .splits import CellConfig, HarqConfig, SplitOption

BEAMS_PER_DU = 64

LATENCY = "latency"
CAPACITY = "capacity"
NONE = "none"


@dataclass(frozen=True)
class Scenario:
    orbit: OrbitConfig = field(default_factory=OrbitConfig)
    gateway: GroundSite = field(default_factory=lambda: GroundSite(min_elevation_deg=10.0))
    user_site: GroundSite = field(
        default_factory=lambda: GroundSite(min_elevation_deg=30.0, role=BEAM_CENTER))
    beam_diameter_km: float = 50.0
    band: BandConfig = field(default_factory=lambda: linkbudget.default_band("Ka"))
    modcod: ModCod = field(default_factory=lambda: linkbudget.modcod_by_name("256APSK 3/4"))
    cell: CellConfig = field(default_factory=CellConfig)
    harq: HarqConfig = field(default_factory=HarqConfig)
    n_satellite_beams: int = 64
    traffic_load: float = 1.0
    duplexing: str = "max"
    catalog: tuple[SplitOption, ...] = field(default_factory=lambda: tuple(splits.catalog()))

    def __post_init__(self):
        if self.n_satellite_beams < 1:
            raise ConfigError("n_satellite_beams must be >= 1")
        if not 0.0 <= self.traffic_load <= 1.0:
            raise ConfigError("traffic_load must be in [0, 1]")
        if self.beam_diameter_km < 0:
            raise ConfigError("beam_diameter_km must be >= 0")

    @property
    def feeder_capacity_bps(self) -> float:
        return linkbudget.link_capacity(self.band, self.modcod)


@dataclass(frozen=True)
class SplitVerdict:
    split_id: str
    latency_ok: bool
    latency_margin_s: float
    capacity_ok: bool
    max_dus: int | None
    dus_needed: int
    binding_constraint: str
    feasible: bool
    latency_limit_s: float
    feeder_delay_s: float
    per_du_rate_bps: float
    user_link_delay_s: float | None = None


def dus_needed(n_satellite_beams: int) -> int:
    """DUs required to serve all beams, 64 NR beams per DU."""
    if n_satellite_beams < 1:
        raise ValueError("need at least one beam")
    return -(-n_satellite_beams // BEAMS_PER_DU)


def max_dus(split: SplitOption, cell: CellConfig, load: float, feeder_capacity_bps: float,
            duplexing: str = "max") -> int | None:
    """How many DUs fit in the feeder capacity; ``None`` means no capacity limit."""
    if feeder_capacity_bps < 0:
        raise ValueError("feeder capacity must be >= 0")
    demand = splits.per_du_rate(split, cell, load, duplexing)
    if demand == 0:
        return None
    return math.floor(feeder_capacity_bps / demand)


def feeder_delay_at(scenario: Scenario, elevation_deg: float) -> float:
    orbit = scenario.orbit
    return geometry.propagation_delay(
        geometry.slant_range(orbit.altitude_km, elevation_deg, orbit.earth_radius_km))


def worst_feeder_delay(scenario: Scenario) -> float:
    return feeder_delay_at(scenario, scenario.gateway.min_elevation_deg)


def worst_user_delay(scenario: Scenario) -> float | None:
    try:
        return geometry.user_link_worst_delay(
            scenario.orbit, scenario.user_site.min_elevation_deg, scenario.beam_diameter_km,
            scenario.user_site.min_elevation_deg)
    except geometry.InfeasibleGeometryError:
        return None


def assess(scenario: Scenario) -> list[SplitVerdict]:
    """One verdict per catalog entry, in catalog order."""
    delay = worst_feeder_delay(scenario)
    needed = dus_needed(scenario.n_satellite_beams)
    capacity = scenario.feeder_capacity_bps
    user_delay = worst_user_delay(scenario)
    verdicts = []
    for split in scenario.catalog:
        limit = splits.latency_limit(split, scenario.harq)
        latency_ok = delay <= limit
        fit = max_dus(split, scenario.cell, scenario.traffic_load, capacity, scenario.duplexing)
        capacity_ok = fit is None or fit >= needed
        if not latency_ok:
            binding = LATENCY
        elif not capacity_ok:
            binding = CAPACITY
        else:
            binding = NONE
        verdicts.append(SplitVerdict(
            split_id=split.id,
            latency_ok=latency_ok,
            latency_margin_s=limit - delay,
            capacity_ok=capacity_ok,
            max_dus=fit,
            dus_needed=needed,
            binding_constraint=binding,
            feasible=latency_ok and capacity_ok,
            latency_limit_s=limit,
            feeder_delay_s=delay,
            per_du_rate_bps=splits.per_du_rate(split, scenario.cell, scenario.traffic_load,
                                               scenario.duplexing),
            user_link_delay_s=user_delay,
        ))
    return verdicts


def crossover_elevation(split: SplitOption, scenario: Scenario,
                        tol_deg: float = 0.01) -> float | None:
    """Lowest gateway elevation (deg) at which ``split`` meets its latency budget.

    Returns the configured minimum elevation when the split is already
    feasible there and ``None`` when it fails even at zenith.
    """
    limit = splits.latency_limit(split, scenario.harq)
    lo = scenario.gateway.min_elevation_deg
    if feeder_delay_at(scenario, lo) <= limit:
        return lo
    hi = 90.0
    if feeder_delay_at(scenario, hi) > limit:
        return None
    while hi - lo > tol_deg:
        mid = 0.5 * (lo + hi)
        if feeder_delay_at(scenario, mid) <= limit:
            hi = mid
        else:
            lo = mid
    return hi
