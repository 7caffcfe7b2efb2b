"""Functional-split catalog, HARQ-aware latency budgets and fronthaul rates.

Reference values are for one gNB with a 100 MHz carrier, 256QAM and 8 MIMO
layers. Published ranges are pinned to single numbers: options 2 and 3 take
the 10 ms upper end of theirs and option 5 takes 500 us. The single
option 7 row is read as 7.1; the 7.2 and 7.3 rows are fixtures
(``published=False``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import ConfigError

CONSTANT = "constant"
LOAD_SCALED = "load_scaled"

SPLIT_IDS = ("1", "2", "3", "4", "5", "6", "7.1", "7.2", "7.3", "8")

# 7.3 keeps the most PHY on board and 7.1 the least (FFT only), so within
# option 7 centralisation runs opposite to the numeric sub-id.
CENTRALIZATION_ORDER = ("1", "2", "3", "4", "5", "6", "7.3", "7.2", "7.1", "8")

# fallback budget when HARQ feedback is disabled: the RAN-core interface bound
NO_FEEDBACK_LIMIT_S = 10e-3


class ProtocolFunction(enum.Enum):
    RRC = "RRC"
    PDCP = "PDCP"
    RLC_HIGH = "RLC_high"
    RLC_LOW = "RLC_low"
    MAC_HIGH = "MAC_high"
    MAC_LOW = "MAC_low"
    PHY_HIGH = "PHY_high"
    PHY_LOW = "PHY_low"
    RF = "RF"


STACK = tuple(ProtocolFunction)

# index into STACK of the first function left in the DU
_FIRST_ONBOARD = {"1": 1, "2": 2, "3": 3, "4": 4, "5": 5, "6": 6,
                  "7.1": 7, "7.2": 7, "7.3": 7, "8": 8}


def onboard_function_set(split_id: str) -> frozenset[ProtocolFunction]:
    """Protocol functions hosted by the on-board DU for ``split_id``."""
    try:
        first = _FIRST_ONBOARD[str(split_id)]
    except KeyError:
        raise ConfigError(f"unknown split id {split_id!r}") from None
    return frozenset(STACK[first:])


@dataclass(frozen=True)
class SplitOption:
    id: str
    name: str
    latency_limit_s: float
    dl_rate_bps: float
    ul_rate_bps: float
    rate_model: str
    harq_bound: bool
    onboard_functions: frozenset = field(default=frozenset())
    published: bool = True

    def __post_init__(self):
        if self.id not in SPLIT_IDS:
            raise ConfigError(f"unknown split id {self.id!r}")
        if not self.latency_limit_s > 0:
            raise ConfigError(f"split {self.id}: latency_limit_s must be > 0")
        if not (self.dl_rate_bps > 0 and self.ul_rate_bps > 0):
            raise ConfigError(f"split {self.id}: rates must be > 0")
        if self.rate_model not in (CONSTANT, LOAD_SCALED):
            raise ConfigError(f"split {self.id}: rate_model must be constant or load_scaled")
        if not self.onboard_functions:
            object.__setattr__(self, "onboard_functions", onboard_function_set(self.id))

    @property
    def rank(self) -> int:
        """Position in the centralisation order (higher = fewer functions on board)."""
        return CENTRALIZATION_ORDER.index(self.id)

    @property
    def sort_key(self) -> float:
        return float(self.id)


@dataclass(frozen=True)
class CellConfig:
    channel_bandwidth_mhz: float = 100.0
    modulation_order_bits: int = 8
    mimo_layers: int = 8
    antenna_ports: int = 8

    def __post_init__(self):
        for name in ("channel_bandwidth_mhz", "modulation_order_bits", "mimo_layers", "antenna_ports"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"cell.{name} must be > 0")


@dataclass(frozen=True)
class HarqConfig:
    n_processes: int = 16
    feedback_enabled: bool = True
    harq_window_s: float = 5e-3
    fixed_overhead_s: float = 4.75e-3

    def __post_init__(self):
        if self.n_processes < 1:
            raise ConfigError("harq.n_processes must be >= 1")
        if self.feedback_enabled and self.n_processes >= 16 \
                and not self.harq_window_s > self.fixed_overhead_s:
            raise ConfigError("harq.harq_window_s must exceed harq.fixed_overhead_s")


_G = 1e9
_CATALOG = (
    SplitOption("1", "RRC/PDCP", 10e-3, 4 * _G, 3 * _G, LOAD_SCALED, False),
    SplitOption("2", "PDCP/RLC", 10e-3, 4 * _G, 3 * _G, LOAD_SCALED, False),
    SplitOption("3", "Intra-RLC", 10e-3, 4 * _G, 3 * _G, LOAD_SCALED, False),
    SplitOption("4", "RLC/MAC", 100e-6, 4 * _G, 3 * _G, LOAD_SCALED, False),
    SplitOption("5", "Intra-MAC", 500e-6, 4 * _G, 3 * _G, LOAD_SCALED, True),
    SplitOption("6", "MAC/PHY", 250e-6, 4 * _G, 5 * _G, LOAD_SCALED, True),
    SplitOption("7.1", "Low PHY", 250e-6, 22.2 * _G, 86 * _G, CONSTANT, True),
    SplitOption("7.2", "Low PHY/High PHY", 250e-6, 10 * _G, 20 * _G, LOAD_SCALED, True, published=False),
    SplitOption("7.3", "High PHY", 250e-6, 6 * _G, 8 * _G, LOAD_SCALED, True, published=False),
    SplitOption("8", "PHY/RF", 250e-6, 157.3 * _G, 157.3 * _G, CONSTANT, True),
)


def catalog() -> list[SplitOption]:
    """The ten reference split options, ordered by id."""
    return list(_CATALOG)


def get(split_id, options: Iterable[SplitOption] | None = None) -> SplitOption:
    for opt in options if options is not None else _CATALOG:
        if opt.id == str(split_id):
            return opt
    raise ConfigError(f"unknown split id {split_id!r}")


def with_overrides(options: Iterable[SplitOption],
                   overrides: Mapping[str, Mapping[str, object]]) -> list[SplitOption]:
    """Copy of ``options`` with per-id field overrides applied."""
    by_id = {o.id: o for o in options}
    for sid, fields in overrides.items():
        if sid not in by_id:
            raise ConfigError(f"override for unknown split id {sid!r}")
        bad = set(fields) - {"name", "latency_limit_s", "dl_rate_bps", "ul_rate_bps",
                             "rate_model", "harq_bound"}
        if bad:
            raise ConfigError(f"split {sid}: cannot override {sorted(bad)}")
        by_id[sid] = replace(by_id[sid], published=False, **fields)
    return sorted(by_id.values(), key=lambda o: o.sort_key)


def harq_budget(harq: HarqConfig) -> float:
    """F1 transport time left inside the (possibly extended) HARQ loop."""
    return harq.n_processes / 16.0 * harq.harq_window_s - harq.fixed_overhead_s


def latency_limit(split: SplitOption, harq: HarqConfig) -> float:
    """One-way F1 transport budget (s) for ``split`` under ``harq``.

    HARQ-bound options get ``max(catalog limit, HARQ budget)``, so option 5
    keeps its 500 us at 16 processes while every HARQ-bound option reaches
    5.25 ms at 32 processes.
    """
    if not split.harq_bound:
        return split.latency_limit_s
    if not harq.feedback_enabled:
        return NO_FEEDBACK_LIMIT_S
    budget = harq_budget(harq)
    if budget <= 0:
        raise ConfigError(
            f"HARQ configuration leaves no transport budget ({budget * 1e3:.3f} ms)"
        )
    return max(split.latency_limit_s, budget)


def required_fronthaul_rate(split: SplitOption, cell: CellConfig,
                            load_fraction: float) -> tuple[float, float]:
    """Per-DU (DL, UL) F1 rate in bit/s for a cell configuration and load."""
    if not 0.0 <= load_fraction <= 1.0:
        raise ConfigError(f"load_fraction must be in [0, 1], got {load_fraction}")
    scale = cell.channel_bandwidth_mhz / 100.0
    if split.id == "8":
        scale *= cell.antenna_ports / 8.0
    else:
        scale *= cell.mimo_layers / 8.0
    if split.rate_model == LOAD_SCALED:
        scale *= cell.modulation_order_bits / 8.0 * load_fraction
    return split.dl_rate_bps * scale, split.ul_rate_bps * scale


def per_du_rate(split: SplitOption, cell: CellConfig, load_fraction: float,
                duplexing: str = "max") -> float:
    """Feeder demand of one DU: ``max(DL, UL)`` or ``DL + UL``."""
    dl, ul = required_fronthaul_rate(split, cell, load_fraction)
    if duplexing == "max":
        return max(dl, ul)
    if duplexing == "sum":
        return dl + ul
    raise ConfigError(f"duplexing must be 'max' or 'sum', got {duplexing!r}")

