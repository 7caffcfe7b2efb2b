"""Discrete-time simulation of F1 PDU delivery across feeder/ISL handovers.

The CU sits on the ground behind every gateway. Each on-board DU receives one
periodic PDU stream that the CI routes over the current shortest-delay path
``gateway -> satellite (-> ISL hops) -> DU``.

Control decisions happen on a tick grid. Link availability is continuous:
every feeder link and ISL has precomputed visibility windows, and a PDU is
lost when any link on its path is down at emission or drops before the PDU
arrives. Without a predictor the CI only notices a broken path at the next
tick and keeps its route until then. With the perfect predictor the CI looks
``lookahead_s`` ahead and moves to an alternate path ``guard_s`` before the
drop, or one path delay before it if that is earlier, so nothing is
dispatched on a link that will drop first.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from typing import IO, Iterable

import networkx as nx
import numpy as np

from . import geometry
from .errors import ConfigError
from .geometry import GroundSite, OrbitConfig, Window

DELIVERED = "delivered"
LATE = "late"
LOST = "lost"

NO_PREDICTOR = "none"
PERFECT = "perfect"

REACTIVE = "reactive"
PREDICTIVE = "predictive"

# ISLs must clear the Earth by this much (km) to be usable
ISL_GRAZING_ALTITUDE_KM = 80.0

_CU = "CU"


@dataclass(frozen=True)
class Predictor:
    kind: str = NO_PREDICTOR
    lookahead_s: float = 30.0
    guard_s: float = 0.05

    def __post_init__(self):
        if self.kind not in (NO_PREDICTOR, PERFECT):
            raise ConfigError(f"predictor kind must be 'none' or 'perfect', got {self.kind!r}")
        if self.kind == PERFECT and not (self.lookahead_s > 0 and self.guard_s > 0):
            raise ConfigError("perfect predictor needs lookahead_s > 0 and guard_s > 0")


@dataclass(frozen=True)
class SimConfig:
    duration_s: float
    satellites: tuple[OrbitConfig, ...]
    gateways: tuple[GroundSite, ...]
    tick_s: float = 0.1
    isl_topology: tuple[tuple[int, int], ...] | None = None
    pdu_interval_s: float = 0.01
    processing_delay_s: float = 1e-3
    latency_bound_s: float = 10e-3
    predictor: Predictor = field(default_factory=Predictor)
    seed: int = 0
    jitter_s: float = 0.0
    du_satellites: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigError("simulation.duration_s must be > 0")
        if not self.tick_s > 0:
            raise ConfigError("simulation.tick_s must be > 0")
        if not self.pdu_interval_s > 0:
            raise ConfigError("simulation.pdu_interval_s must be > 0")
        if self.processing_delay_s < 0 or self.jitter_s < 0:
            raise ConfigError("processing_delay_s and jitter_s must be >= 0")
        if not self.latency_bound_s > 0:
            raise ConfigError("simulation.latency_bound_s must be > 0")
        if not self.satellites:
            raise ConfigError("simulation needs at least one satellite")
        if not self.gateways:
            raise ConfigError("simulation needs at least one gateway")
        n = len(self.satellites)
        for a, b in self.isl_topology or ():
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise ConfigError(f"invalid ISL ({a}, {b}) for {n} satellites")
        for i in self.du_satellites or ():
            if not 0 <= i < n:
                raise ConfigError(f"DU satellite index {i} out of range")


@dataclass(frozen=True)
class PduRecord:
    du: int
    emit_time_s: float
    route: tuple[str, ...]
    deliver_time_s: float | None
    status: str


@dataclass(frozen=True)
class Handover:
    du: int
    time_s: float
    kind: str
    old_route: tuple[str, ...]
    new_route: tuple[str, ...]
    drop_time_s: float | None = None


@dataclass(frozen=True)
class Metrics:
    emitted: int
    delivered: int
    late: int
    lost: int
    handovers: int

    @property
    def loss_rate(self) -> float:
        return self.lost / self.emitted if self.emitted else 0.0

    @property
    def late_rate(self) -> float:
        return self.late / self.emitted if self.emitted else 0.0

    def as_dict(self) -> dict:
        return {
            "emitted": self.emitted,
            "delivered": self.delivered,
            "late": self.late,
            "lost": self.lost,
            "handovers": self.handovers,
            "loss_rate": self.loss_rate,
            "late_rate": self.late_rate,
        }


@dataclass
class SimResult:
    metrics: Metrics
    trace: list[PduRecord]
    handovers: list[Handover]


@dataclass(frozen=True)
class Route:
    nodes: tuple[str, ...]
    links: tuple[tuple, ...]
    delay_s: float


def sat_node(i: int) -> str:
    return f"SAT{i}"


def gw_node(g: int) -> str:
    return f"GW{g}"


def feeder_link(g: int, i: int) -> tuple:
    return ("feeder", g, i)


def isl_link(i: int, j: int) -> tuple:
    return ("isl", min(i, j), max(i, j))


def ring_topology(satellites: Iterable[OrbitConfig]) -> tuple[tuple[int, int], ...]:
    """Intra-plane rings: neighbours by phase within each orbital plane."""
    planes: dict[tuple, list[int]] = {}
    sats = list(satellites)
    for i, s in enumerate(sats):
        key = (round(s.altitude_km, 6), round(s.inclination_deg, 6), round(s.raan_deg % 360.0, 6))
        planes.setdefault(key, []).append(i)
    edges = set()
    for members in planes.values():
        members.sort(key=lambda i: sats[i].initial_phase_deg % 360.0)
        if len(members) == 2:
            edges.add(tuple(members))
        elif len(members) > 2:
            for a, b in zip(members, members[1:] + members[:1]):
                edges.add((min(a, b), max(a, b)))
    return tuple(sorted(edges))


def predict_drop(windows: list[Window], t: float, lookahead_s: float) -> float | None:
    """End of the window containing ``t`` if it falls in ``(t, t + lookahead_s]``."""
    w = _window_at(windows, t)
    if w is None or not math.isfinite(w.end):
        return None
    return w.end if w.end <= t + lookahead_s else None


def _window_at(windows: list[Window], t: float) -> Window | None:
    i = bisect.bisect_right(windows, (t, math.inf)) - 1
    if i >= 0 and windows[i].start <= t < windows[i].end:
        return windows[i]
    return None


class Network:
    """Satellites, gateways and link availability over a simulation horizon."""

    def __init__(self, satellites, gateways, isl_topology=None, processing_delay_s=1e-3,
                 horizon_s=600.0, step_s=0.1):
        self.satellites = tuple(satellites)
        self.gateways = tuple(gateways)
        self.isl = tuple(isl_topology) if isl_topology is not None else ring_topology(satellites)
        self.processing_delay_s = processing_delay_s
        self.horizon_s = horizon_s
        self.windows: dict[tuple, list[Window]] = {}
        self._step = step_s
        self._n_grid = int(math.floor(horizon_s / step_s)) + 1
        self._grid_delays: dict[tuple, np.ndarray] = {}
        for g, site in enumerate(self.gateways):
            for i, orbit in enumerate(self.satellites):
                ws = geometry.visibility_windows(orbit, site, 0.0, horizon_s, step_s)
                self.windows[feeder_link(g, i)] = self._open_ended(ws)
        for a, b in self.isl:
            ws = geometry.find_windows(lambda ts, a=a, b=b: self._isl_margin(a, b, ts),
                                       0.0, horizon_s, step_s)
            self.windows[isl_link(a, b)] = self._open_ended(ws)

    def _open_ended(self, windows):
        # a window reaching the horizon has no known end
        return [Window(w.start, math.inf) if w.end >= self.horizon_s else w for w in windows]

    def _isl_margin(self, a, b, times):
        p1 = geometry.satellite_position_km(self.satellites[a], times)
        p2 = geometry.satellite_position_km(self.satellites[b], times)
        d = p2 - p1
        s = np.clip(-np.sum(p1 * d, axis=-1) / np.maximum(np.sum(d * d, axis=-1), 1e-12), 0.0, 1.0)
        closest = np.linalg.norm(p1 + s[..., None] * d, axis=-1)
        re = self.satellites[a].earth_radius_km
        return closest - (re + ISL_GRAZING_ALTITUDE_KM)

    def is_up(self, link, t: float) -> bool:
        return _window_at(self.windows[link], t) is not None

    def window_end(self, link, t: float) -> float | None:
        w = _window_at(self.windows[link], t)
        return None if w is None else w.end

    def link_delay(self, link, t: float) -> float:
        k = int(round(t / self._step))
        if 0 <= k < self._n_grid and k * self._step == t:
            # tick instants come from a table filled once per link
            table = self._grid_delays.get(link)
            if table is None:
                table = self._link_delays(link, np.arange(self._n_grid) * self._step)
                self._grid_delays[link] = table
            return float(table[k])
        return float(self._link_delays(link, np.array([t]))[0])

    def _link_delays(self, link, times: np.ndarray) -> np.ndarray:
        if link[0] == "feeder":
            _, g, i = link
            dist = geometry.slant_range_series(self.satellites[i], self.gateways[g], times)
        else:
            _, a, b = link
            p = geometry.satellite_position_km(self.satellites[a], times)
            q = geometry.satellite_position_km(self.satellites[b], times)
            dist = np.linalg.norm(p - q, axis=-1)
        return dist * 1e3 / geometry.SPEED_OF_LIGHT_M_S + self.processing_delay_s

    def path_delay(self, links, t: float) -> float:
        return sum(self.link_delay(link, t) for link in links)

    def graph(self, t: float, exclude=frozenset()) -> nx.Graph:
        graph = nx.Graph()
        for g in range(len(self.gateways)):
            graph.add_edge(_CU, gw_node(g), weight=0.0, link=None)
        for link in self.windows:
            if link in exclude or not self.is_up(link, t):
                continue
            if link[0] == "feeder":
                u, v = gw_node(link[1]), sat_node(link[2])
            else:
                u, v = sat_node(link[1]), sat_node(link[2])
            graph.add_edge(u, v, weight=self.link_delay(link, t), link=link)
        return graph


def route(network: Network, t: float, du: int, exclude=frozenset()) -> Route | None:
    """Shortest-delay path from the CU to the DU on satellite ``du`` at time ``t``."""
    graph = network.graph(t, exclude)
    target = sat_node(du)
    if target not in graph:
        return None
    try:
        delay, nodes = nx.single_source_dijkstra(graph, _CU, target, weight="weight")
    except nx.NetworkXNoPath:
        return None
    hops = tuple(nodes[1:])
    links = tuple(graph.edges[u, v]["link"] for u, v in zip(hops, hops[1:]))
    return Route(hops, links, delay)


def _emission_times(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    n = int(math.ceil(config.duration_s / config.pdu_interval_s))
    times = np.arange(n) * config.pdu_interval_s
    if config.jitter_s > 0:
        times = np.sort(times + rng.uniform(0.0, config.jitter_s, size=n))
    return times[times < config.duration_s]


def _route_is_up(network: Network, r: Route, t: float) -> bool:
    return all(network.is_up(link, t) for link in r.links)


def _run_stream(network: Network, config: SimConfig, du: int, emissions: np.ndarray,
                trace: list[PduRecord], handovers: list[Handover]) -> None:
    pred = config.predictor
    tick = config.tick_s
    n_ticks = int(math.ceil(config.duration_s / tick))
    current: Route | None = None
    pending: tuple[float, Route, float] | None = None
    ptr = 0

    def switch():
        nonlocal current, pending
        t_h, new, t_d = pending
        handovers.append(Handover(du, t_h, PREDICTIVE, current.nodes, new.nodes, t_d))
        current, pending = new, None

    for k in range(n_ticks):
        t = k * tick
        t_next = min((k + 1) * tick, config.duration_s)

        if current is not None and not _route_is_up(network, current, t):
            pending = None
            new = route(network, t, du)
            if new is not None:
                handovers.append(Handover(du, t, REACTIVE, current.nodes, new.nodes))
            current = new
        if current is None:
            current = route(network, t, du)

        if pred.kind == PERFECT and current is not None and pending is None:
            drops = {link: predict_drop(network.windows[link], t, pred.lookahead_s)
                     for link in current.links}
            drops = {link: d for link, d in drops.items() if d is not None}
            if drops:
                t_d = min(drops.values())
                # slack covers delay drift between the probe instants and dispatch
                d_old = max(network.path_delay(current.links, t),
                            network.path_delay(current.links, t_d)) + 1e-4
                t_h = max(t, t_d - max(pred.guard_s, d_old))
                dropping = frozenset(link for link, d in drops.items() if d <= t_d)
                alt = route(network, t_h, du, exclude=dropping)
                if alt is not None:
                    pending = (t_h, alt, t_d)

        delay = network.path_delay(current.links, t) if current is not None else None
        while ptr < len(emissions) and emissions[ptr] < t_next:
            e = float(emissions[ptr])
            ptr += 1
            if pending is not None and pending[0] <= e:
                switch()
                delay = network.path_delay(current.links, t)
            if current is None:
                trace.append(PduRecord(du, e, (), None, LOST))
                continue
            arrival = e + delay
            ok = True
            for link in current.links:
                end = network.window_end(link, e)
                if end is None or end < arrival:
                    ok = False
                    break
            if not ok:
                trace.append(PduRecord(du, e, current.nodes, None, LOST))
            else:
                status = DELIVERED if delay <= config.latency_bound_s else LATE
                trace.append(PduRecord(du, e, current.nodes, arrival, status))
        if pending is not None and pending[0] < t_next:
            switch()


def build_network(config: SimConfig) -> Network:
    lookahead = config.predictor.lookahead_s if config.predictor.kind == PERFECT else 0.0
    return Network(
        config.satellites, config.gateways, config.isl_topology, config.processing_delay_s,
        horizon_s=config.duration_s + lookahead + config.tick_s, step_s=config.tick_s,
    )


def run(config: SimConfig, network: Network | None = None) -> SimResult:
    """Simulate every DU stream and return metrics, trace and handovers."""
    network = network or build_network(config)
    rng = np.random.default_rng(config.seed)
    dus = config.du_satellites if config.du_satellites is not None else range(len(config.satellites))
    trace: list[PduRecord] = []
    handovers: list[Handover] = []
    emitted = 0
    for du in dus:
        emissions = _emission_times(config, rng)
        emitted += len(emissions)
        _run_stream(network, config, du, emissions, trace, handovers)
    counts = {DELIVERED: 0, LATE: 0, LOST: 0}
    for rec in trace:
        counts[rec.status] += 1
    metrics = Metrics(emitted, counts[DELIVERED], counts[LATE], counts[LOST], len(handovers))
    return SimResult(metrics, trace, handovers)


def write_trace_csv(trace: Iterable[PduRecord], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["du", "emit_time_s", "route", "deliver_time_s", "status"])
    for rec in trace:
        writer.writerow([
            rec.du, repr(rec.emit_time_s), ">".join(rec.route),
            "" if rec.deliver_time_s is None else repr(rec.deliver_time_s), rec.status,
        ])
