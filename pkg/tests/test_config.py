from __future__ import annotations

import textwrap

import pytest

from ntnsplit import config, handover, optimizer
from ntnsplit.errors import ConfigError


def write(tmp_path, text, name="s.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def test_defaults_without_file(monkeypatch):
    monkeypatch.delenv(config.CONFIG_DIR_ENV, raising=False)
    sf = config.load(None)
    assert sf.scenario.band.name == "Ka"
    assert sf.simulation.duration_s == 600.0
    assert sf.optimize.objective == optimizer.MIN_ENERGY


def test_shipped_files_load(data_dir):
    for name in ("scenario.yaml", "two_gateway.yaml", "eclipse.yaml"):
        assert config.load(str(data_dir / name)).source.endswith(name)


def test_eclipse_fixture_fields(data_dir):
    sf = config.load(str(data_dir / "eclipse.yaml"))
    assert sf.scenario.harq.n_processes == 32
    assert sf.optimize.feeder_capacity_bps == 200e9
    assert sf.power_model.sri.modcod.name == "256APSK 3/4"


def test_unknown_key_reports_dotted_path(tmp_path):
    p = write(tmp_path, """
        simulation:
          predictor:
            guard_ms: 5
    """)
    with pytest.raises(ConfigError) as info:
        config.load(str(p))
    assert info.value.path == "simulation.predictor.guard_ms"


def test_type_errors_report_path(tmp_path):
    p = write(tmp_path, "harq:\n  n_processes: many\n")
    with pytest.raises(ConfigError, match="harq.n_processes"):
        config.load(str(p))


def test_malformed_yaml_reports_line_and_column(tmp_path):
    p = write(tmp_path, "orbit:\n  altitude_km: [600\n")
    with pytest.raises(ConfigError) as info:
        config.load(str(p))
    assert str(p) + ":" in str(info.value)
    assert info.value.path.count(":") == 2


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        config.load(str(tmp_path / "absent.yaml"))


def test_env_dir_resolution(tmp_path, monkeypatch):
    write(tmp_path, "orbit: {altitude_km: 550}\n", "scenario.yaml")
    write(tmp_path, "orbit: {altitude_km: 1200}\n", "other.yaml")
    monkeypatch.setenv(config.CONFIG_DIR_ENV, str(tmp_path))
    assert config.load(None).scenario.orbit.altitude_km == 550
    assert config.load("other.yaml").scenario.orbit.altitude_km == 1200


def test_split_overrides_and_duplicates(tmp_path):
    p = write(tmp_path, """
        splits:
          - {id: "7.2", dl_rate_bps: 12e9}
          - {id: 6, latency_limit_s: 0.001}
    """)
    sf = config.load(str(p))
    cat = {o.id: o for o in sf.scenario.catalog}
    assert cat["7.2"].dl_rate_bps == 12e9 and cat["6"].latency_limit_s == 1e-3
    assert not cat["6"].published
    p = write(tmp_path, "splits:\n  - {id: 6}\n  - {id: 6}\n")
    with pytest.raises(ConfigError, match="duplicate"):
        config.load(str(p))


def test_custom_band_and_modcods(tmp_path):
    p = write(tmp_path, """
        band: {name: X, carrier_ghz: 8.4, bandwidth_hz: 5e8}
        modcods:
          - {name: A, spectral_efficiency_bps_hz: 1.0, required_cn_db: 2.0}
          - {name: B, spectral_efficiency_bps_hz: 2.0, required_cn_db: 6.0}
        modcod: B
    """)
    sf = config.load(str(p))
    assert sf.scenario.feeder_capacity_bps == 1e9
    bad = write(tmp_path, """
        modcods:
          - {name: A, spectral_efficiency_bps_hz: 1.0, required_cn_db: 7.0}
          - {name: B, spectral_efficiency_bps_hz: 2.0, required_cn_db: 6.0}
        modcod: B
    """, "bad.yaml")
    with pytest.raises(ConfigError, match="modcods"):
        config.load(str(bad))


def test_simulation_options(tmp_path):
    p = write(tmp_path, """
        harq: {n_processes: 32}
        simulation:
          duration_s: 60
          latency_split: 8
          isl: [[0, 1]]
          satellites: [{initial_phase_deg: 0}, {initial_phase_deg: 5}]
          predictor: {kind: perfect}
    """)
    sim = config.load(str(p)).simulation
    assert sim.latency_bound_s == pytest.approx(5.25e-3)
    assert sim.isl_topology == ((0, 1),)
    assert sim.predictor.kind == handover.PERFECT
    p = write(tmp_path, "simulation: {latency_split: 8, latency_bound_s: 0.01}\n")
    with pytest.raises(ConfigError, match="not both"):
        config.load(str(p))


def test_power_model_section(tmp_path):
    p = write(tmp_path, """
        power_model:
          function_power_w: {PHY_low: 60}
          idle_fraction: 0.2
          function_cap_w: 100
    """)
    pm = config.load(str(p)).power_model
    assert pm.idle_fraction == 0.2 and pm.function_cap_w == 100
    assert optimizer.onboard_power("7.1", pm, 1.0) == pytest.approx(10 + 60 * 0.4)
    p = write(tmp_path, "power_model:\n  function_power_w: {GPU: 5}\n")
    with pytest.raises(ConfigError, match="power_model.function_power_w.GPU"):
        config.load(str(p))


def test_optimize_load_list(tmp_path):
    p = write(tmp_path, "optimize: {traffic_load: [0.1, 0.9], objective: max_feeder_exploitation}\n")
    s = config.load(str(p)).optimize
    assert s.traffic_load == (0.1, 0.9)
    p = write(tmp_path, "optimize: {traffic_load: [1.5]}\n")
    with pytest.raises(ConfigError):
        config.load(str(p))


def test_top_level_must_be_mapping(tmp_path):
    with pytest.raises(ConfigError):
        config.load(str(write(tmp_path, "- 1\n- 2\n")))
