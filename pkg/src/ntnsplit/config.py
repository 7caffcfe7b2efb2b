"""Scenario files: one YAML document driving every command.

Every key is optional and units are part of key names. Unknown keys are
rejected with the dotted path of the offending field, e.g.
``simulation.predictor.guard_ms: unknown key``. The layout::

    orbit:        {altitude_km, inclination_deg, raan_deg, initial_phase_deg,
                   earth_radius_km, mu_km3_s2, earth_rotation}
    gateway:      {latitude_deg, longitude_deg, min_elevation_deg, name}
    user_site:    {latitude_deg, longitude_deg, min_elevation_deg}
    beam_diameter_km, n_satellite_beams, traffic_load, duplexing (max|sum)
    band:         {name: Ka|Ku|QV|W, ...field overrides} or a full band
    modcod:       "256APSK 3/4" or {name, spectral_efficiency_bps_hz, required_cn_db}
    modcods:      [ModCod mappings]  # replaces the built-in DVB-S2X subset
    cell:         {channel_bandwidth_mhz, modulation_order_bits, mimo_layers, antenna_ports}
    harq:         {n_processes, feedback_enabled, harq_window_s, fixed_overhead_s}
    splits:       [{id, latency_limit_s, dl_rate_bps, ul_rate_bps, rate_model, ...}]
    simulation:   {duration_s, tick_s, pdu_interval_s, processing_delay_s,
                   latency_bound_s | latency_split, seed, jitter_s,
                   predictor: {kind, lookahead_s, guard_s},
                   satellites: [orbit...], gateways: [site...],
                   isl: ring|none|[[a, b], ...], du_satellites: [i...]}
    power_model:  {function_power_w: {RRC: W, ...}, load_exponent, idle_fraction,
                   phy_low_share: {"7.1": x, ...}, function_cap_w, sri: {...}}
    optimize:     {horizon_s, epoch_s, t0_s, switch_cost_j, objective,
                   solar_power_w, eclipse_power_w, sun_phase_deg,
                   feeder_delay (worst_case|geometric), traffic_load (x or [x...]),
                   feeder_capacity_bps, n_dus}

``NTNSPLIT_CONFIG_DIR`` names a directory searched for relative scenario
paths; its ``scenario.yaml`` is used when no path is given.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from . import feasibility, handover, linkbudget, optimizer, splits
from .errors import ConfigError
from .geometry import BEAM_CENTER, GATEWAY, GroundSite, OrbitConfig

CONFIG_DIR_ENV = "NTNSPLIT_CONFIG_DIR"
DEFAULT_FILENAME = "scenario.yaml"

_TOP_LEVEL = {
    "orbit", "gateway", "user_site", "beam_diameter_km", "n_satellite_beams", "traffic_load",
    "duplexing", "band", "modcod", "modcods", "cell", "harq", "splits", "simulation",
    "power_model", "optimize",
}


@dataclass(frozen=True)
class ScenarioFile:
    scenario: feasibility.Scenario = field(default_factory=feasibility.Scenario)
    simulation: handover.SimConfig | None = None
    power_model: optimizer.PowerModel = field(default_factory=optimizer.PowerModel)
    optimize: optimizer.OptimizeSettings = field(default_factory=optimizer.OptimizeSettings)
    modcods: tuple[linkbudget.ModCod, ...] = linkbudget.DVB_S2X_MODCODS
    source: str | None = None


def _require_mapping(data, path):
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping, got {type(data).__name__}", path)
    return data


def _check_keys(data: dict, allowed, path: str):
    for key in data:
        if key not in allowed:
            raise ConfigError("unknown key", f"{path}.{key}" if path else str(key))


def _coerce(value, kind: str, path: str):
    kind = kind.replace(" ", "")
    if isinstance(value, str) and (kind.startswith("float") or kind.startswith("int")):
        # YAML 1.1 reads "1e9" as a string
        try:
            value = float(value) if kind.startswith("float") else int(value)
        except ValueError:
            pass
    if kind.startswith("float") or kind == "int|float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            if kind.endswith("|None") and value is None:
                return None
            raise ConfigError(f"expected a number, got {value!r}", path)
        return float(value)
    if kind.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            if kind.endswith("|None") and value is None:
                return None
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", path)
        return value
    if kind == "str":
        if not isinstance(value, (str, int, float)) or isinstance(value, bool):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return str(value)
    return value


def _build(cls, data, path: str, base=None, skip=()):
    """Instantiate dataclass ``cls`` from a mapping, coercing scalar fields."""
    data = _require_mapping(data, path)
    fields = {f.name: f for f in dataclasses.fields(cls) if f.name not in skip}
    _check_keys(data, fields, path)
    kwargs = {k: _coerce(v, str(fields[k].type), f"{path}.{k}") for k, v in data.items()}
    try:
        if base is not None:
            return dataclasses.replace(base, **kwargs)
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(str(exc), path) from None
    except TypeError as exc:
        raise ConfigError(str(exc), path) from None


def _site(data, path, default_min, role):
    data = dict(_require_mapping(data, path))
    data.setdefault("min_elevation_deg", default_min)
    data.setdefault("role", role)
    return _build(GroundSite, data, path)


def _modcod(data, path, catalog):
    if isinstance(data, str):
        try:
            return linkbudget.modcod_by_name(data, catalog)
        except ConfigError as exc:
            raise ConfigError(str(exc), path) from None
    return _build(linkbudget.ModCod, data, path)


def _band(data, path):
    data = dict(_require_mapping(data, path))
    base = None
    name = data.get("name", "Ka")
    try:
        base = linkbudget.default_band(str(name))
    except ConfigError:
        if "carrier_ghz" not in data or "bandwidth_hz" not in data:
            raise ConfigError(f"unknown band {name!r} needs carrier_ghz and bandwidth_hz", path)
    return _build(linkbudget.BandConfig, data, path, base=base)


def _split_overrides(data, path):
    if not isinstance(data, list):
        raise ConfigError("expected a list of split overrides", path)
    overrides: dict[str, dict] = {}
    for i, item in enumerate(data):
        item_path = f"{path}[{i}]"
        item = dict(_require_mapping(item, item_path))
        if "id" not in item:
            raise ConfigError("missing id", item_path)
        sid = str(item.pop("id"))
        if sid in overrides:
            raise ConfigError(f"duplicate split id {sid!r}", f"{item_path}.id")
        allowed = {"name", "latency_limit_s", "dl_rate_bps", "ul_rate_bps", "rate_model", "harq_bound"}
        _check_keys(item, allowed, item_path)
        kinds = {"name": "str", "rate_model": "str", "harq_bound": "bool"}
        overrides[sid] = {k: _coerce(v, kinds.get(k, "float"), f"{item_path}.{k}")
                          for k, v in item.items()}
    try:
        return tuple(splits.with_overrides(splits.catalog(), overrides))
    except ConfigError as exc:
        raise ConfigError(str(exc), path) from None


def _power_model(data, path, modcods):
    data = dict(_require_mapping(data, path))
    _check_keys(data, {"function_power_w", "load_exponent", "idle_fraction", "phy_low_share",
                       "function_cap_w", "sri"}, path)
    kwargs: dict[str, Any] = {}
    if "function_power_w" in data:
        fp = _require_mapping(data.pop("function_power_w"), f"{path}.function_power_w")
        powers = dict(optimizer.DEFAULT_FUNCTION_POWER_W)
        names = {fn.value: fn for fn in splits.ProtocolFunction}
        for key, val in fp.items():
            if key not in names:
                raise ConfigError("unknown protocol function", f"{path}.function_power_w.{key}")
            powers[names[key]] = _coerce(val, "float", f"{path}.function_power_w.{key}")
        kwargs["function_power_w"] = powers
    if "phy_low_share" in data:
        share = _require_mapping(data.pop("phy_low_share"), f"{path}.phy_low_share")
        kwargs["phy_low_share"] = {
            str(k): _coerce(v, "float", f"{path}.phy_low_share.{k}") for k, v in share.items()}
    if "sri" in data:
        sri = data.pop("sri")
        if sri is not None:
            sri = dict(_require_mapping(sri, f"{path}.sri"))
            mc = _modcod(sri.pop("modcod", "256APSK 3/4"), f"{path}.sri.modcod", modcods)
            kwargs["sri"] = _build(optimizer.SriTxModel, sri, f"{path}.sri", skip=("modcod",),
                                   base=optimizer.SriTxModel(mc))
    for key, val in data.items():
        kwargs[key] = _coerce(val, "float|None", f"{path}.{key}")
    try:
        return optimizer.PowerModel(**kwargs)
    except ConfigError as exc:
        raise ConfigError(str(exc), path) from None


def _optimize(data, path):
    data = dict(_require_mapping(data, path))
    load = data.pop("traffic_load", None)
    settings = _build(optimizer.OptimizeSettings, data, path, skip=("traffic_load",))
    if load is not None:
        values = load if isinstance(load, list) else [load]
        loads = tuple(_coerce(v, "float", f"{path}.traffic_load") for v in values)
        if not loads or any(not 0.0 <= x <= 1.0 for x in loads):
            raise ConfigError("loads must be in [0, 1]", f"{path}.traffic_load")
        settings = dataclasses.replace(settings, traffic_load=loads)
    return settings


def _simulation(data, path, scenario: feasibility.Scenario):
    data = dict(_require_mapping(data, path))
    allowed = {f.name for f in dataclasses.fields(handover.SimConfig)} - {"isl_topology"}
    allowed |= {"isl", "latency_split"}
    _check_keys(data, allowed, path)

    sats = data.pop("satellites", None)
    if sats is None:
        satellites = (scenario.orbit,)
    else:
        if not isinstance(sats, list):
            raise ConfigError("expected a list", f"{path}.satellites")
        satellites = tuple(_build(OrbitConfig, s, f"{path}.satellites[{i}]")
                           for i, s in enumerate(sats))
    gws = data.pop("gateways", None)
    if gws is None:
        gateways = (scenario.gateway,)
    else:
        if not isinstance(gws, list):
            raise ConfigError("expected a list", f"{path}.gateways")
        gateways = tuple(_site(g, f"{path}.gateways[{i}]", 10.0, GATEWAY)
                         for i, g in enumerate(gws))

    isl = data.pop("isl", "ring")
    if isl == "ring":
        topology = None
    elif isl == "none":
        topology = ()
    elif isinstance(isl, list):
        try:
            topology = tuple((int(a), int(b)) for a, b in isl)
        except (TypeError, ValueError):
            raise ConfigError("expected ring, none or a list of [a, b] pairs", f"{path}.isl") from None
    else:
        raise ConfigError("expected ring, none or a list of [a, b] pairs", f"{path}.isl")

    predictor = _build(handover.Predictor, data.pop("predictor", None), f"{path}.predictor")
    if "latency_split" in data:
        if "latency_bound_s" in data:
            raise ConfigError("give latency_bound_s or latency_split, not both", path)
        sid = str(data.pop("latency_split"))
        try:
            option = splits.get(sid, scenario.catalog)
        except ConfigError as exc:
            raise ConfigError(str(exc), f"{path}.latency_split") from None
        data["latency_bound_s"] = splits.latency_limit(option, scenario.harq)
    du = data.pop("du_satellites", None)
    kwargs = {}
    if du is not None:
        kwargs["du_satellites"] = tuple(_coerce(i, "int", f"{path}.du_satellites") for i in du)
    data.setdefault("duration_s", 600.0)
    fields = {f.name: str(f.type) for f in dataclasses.fields(handover.SimConfig)}
    for key, val in data.items():
        kwargs[key] = _coerce(val, fields[key], f"{path}.{key}")
    try:
        return handover.SimConfig(satellites=satellites, gateways=gateways, isl_topology=topology,
                                  predictor=predictor, **kwargs)
    except ConfigError as exc:
        raise ConfigError(str(exc), path) from None


def parse(doc: Any, source: str | None = None) -> ScenarioFile:
    """Build a :class:`ScenarioFile` from a parsed YAML document."""
    doc = _require_mapping(doc, "")
    _check_keys(doc, _TOP_LEVEL, "")

    modcods = linkbudget.DVB_S2X_MODCODS
    if "modcods" in doc:
        if not isinstance(doc["modcods"], list) or not doc["modcods"]:
            raise ConfigError("expected a non-empty list", "modcods")
        modcods = tuple(_build(linkbudget.ModCod, m, f"modcods[{i}]")
                        for i, m in enumerate(doc["modcods"]))
        if not linkbudget.is_monotone(modcods):
            raise ConfigError("required C/N must grow with spectral efficiency", "modcods")

    kwargs: dict[str, Any] = {}
    if "orbit" in doc:
        kwargs["orbit"] = _build(OrbitConfig, doc["orbit"], "orbit")
    if "gateway" in doc:
        kwargs["gateway"] = _site(doc["gateway"], "gateway", 10.0, GATEWAY)
    if "user_site" in doc:
        kwargs["user_site"] = _site(doc["user_site"], "user_site", 30.0, BEAM_CENTER)
    if "band" in doc:
        kwargs["band"] = _band(doc["band"], "band")
    kwargs["modcod"] = _modcod(doc.get("modcod", "256APSK 3/4"), "modcod", modcods)
    if "cell" in doc:
        kwargs["cell"] = _build(splits.CellConfig, doc["cell"], "cell")
    if "harq" in doc:
        kwargs["harq"] = _build(splits.HarqConfig, doc["harq"], "harq")
    if "splits" in doc:
        kwargs["catalog"] = _split_overrides(doc["splits"], "splits")
    for key, kind in (("beam_diameter_km", "float"), ("n_satellite_beams", "int"),
                      ("traffic_load", "float"), ("duplexing", "str")):
        if key in doc:
            kwargs[key] = _coerce(doc[key], kind, key)
    if kwargs.get("duplexing", "max") not in ("max", "sum"):
        raise ConfigError("expected max or sum", "duplexing")
    try:
        scenario = feasibility.Scenario(**kwargs)
    except ConfigError as exc:
        raise ConfigError(str(exc), exc.path or "scenario") from None

    return ScenarioFile(
        scenario=scenario,
        simulation=_simulation(doc["simulation"], "simulation", scenario) if "simulation" in doc
        else _simulation({}, "simulation", scenario),
        power_model=_power_model(doc.get("power_model"), "power_model", modcods),
        optimize=_optimize(doc.get("optimize"), "optimize"),
        modcods=modcods,
        source=source,
    )


def resolve_path(path: str | None) -> Path | None:
    """Locate a scenario file, falling back to ``$NTNSPLIT_CONFIG_DIR``."""
    config_dir = os.environ.get(CONFIG_DIR_ENV)
    if path is None:
        if config_dir and (Path(config_dir) / DEFAULT_FILENAME).is_file():
            return Path(config_dir) / DEFAULT_FILENAME
        return None
    candidate = Path(path)
    if not candidate.is_absolute() and not candidate.exists() and config_dir:
        alt = Path(config_dir) / candidate
        if alt.exists():
            return alt
    return candidate


def load(path: str | None = None) -> ScenarioFile:
    """Read and validate a scenario file; ``None`` gives the built-in defaults."""
    resolved = resolve_path(path)
    if resolved is None:
        return parse({})
    try:
        text = resolved.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc.strerror}", str(resolved)) from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{resolved}:{mark.line + 1}:{mark.column + 1}" if mark else str(resolved)
        raise ConfigError(f"malformed YAML ({getattr(exc, 'problem', exc)})", where) from None
    return parse(doc, str(resolved))
