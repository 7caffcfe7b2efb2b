from __future__ import annotations

import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ntnsplit import geometry, linkbudget
from ntnsplit.errors import ConfigError, DomainError

MC = linkbudget.modcod_by_name("256APSK 3/4")
D10 = geometry.slant_range(600, 10)


def test_fspl_closed_form():
    expected = 20 * math.log10(1e6) + 20 * math.log10(20e9) + 20 * math.log10(4 * math.pi / 299_792_458.0)
    assert linkbudget.fspl(1000, 20) == pytest.approx(expected, abs=1e-9)
    assert linkbudget.fspl(1000, 20) == pytest.approx(178.4684, abs=1e-4)


def test_required_cn0_is_cn_plus_bandwidth():
    assert linkbudget.required_cn0(MC, 1e9) == pytest.approx(114.02, abs=1e-12)
    assert linkbudget.required_cn0(MC, 22e9) == pytest.approx(127.4442, abs=1e-4)


@pytest.mark.parametrize("name, ptx", [("W", 59.8), ("QV", 34.8), ("Ku", 6.07), ("Ka", 0.17)])
def test_shipped_profile_reproduces_reference_power(name, ptx):
    band = linkbudget.default_band(name)
    assert linkbudget.budget(band, MC, D10).required_ptx_dbw == pytest.approx(ptx, abs=0.01)


def test_band_lookup_accepts_slash_name():
    assert linkbudget.default_band("Q/V").name == "QV"
    with pytest.raises(ConfigError):
        linkbudget.default_band("L")


def test_capacity_with_rolloff():
    band = dataclasses.replace(linkbudget.default_band("Ka"), rolloff=0.25)
    assert linkbudget.link_capacity(band, MC) == pytest.approx(1e9 / 1.25 * 5.9)


def test_available_cn0_inverts_required_ptx():
    band = linkbudget.default_band("Ku")
    res = linkbudget.budget(band, MC, D10)
    cn0 = linkbudget.available_cn0(res.required_ptx_dbw, res.fspl_db, band.extra_losses_db,
                                   band.tx_gain_dbi, band.gt_dbk)
    assert cn0 == pytest.approx(res.required_cn0_dbhz, abs=1e-9)


def test_achievable_modcod_picks_highest_met():
    cat = linkbudget.DVB_S2X_MODCODS
    assert linkbudget.achievable_modcod(114.02, 1e9, cat).name == "256APSK 3/4"
    assert linkbudget.achievable_modcod(114.0, 1e9, cat).name == "128APSK 3/4"
    assert linkbudget.achievable_modcod(0.0, 1e9, cat) is None
    with pytest.raises(DomainError):
        linkbudget.achievable_modcod(100.0, 1e9, ())


def test_catalog_is_monotone():
    assert linkbudget.is_monotone(linkbudget.DVB_S2X_MODCODS)
    bad = (linkbudget.ModCod("a", 1.0, 5.0), linkbudget.ModCod("b", 2.0, 4.0))
    assert not linkbudget.is_monotone(bad)


def test_invalid_values_raise():
    with pytest.raises(DomainError):
        linkbudget.fspl(0, 10)
    with pytest.raises(ConfigError):
        linkbudget.ModCod("x", -1.0, 3.0)


@settings(max_examples=100, deadline=None)
@given(d1=st.floats(100, 5000), d2=st.floats(100, 5000), f=st.floats(1, 100))
def test_fspl_distance_doubling(d1, d2, f):
    diff = linkbudget.fspl(d2, f) - linkbudget.fspl(d1, f)
    assert diff == pytest.approx(20 * math.log10(d2 / d1), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(cn0=st.floats(60, 140), bw=st.floats(1e6, 5e10))
def test_achievable_modcod_is_monotone_in_cn0(cn0, bw):
    cat = linkbudget.DVB_S2X_MODCODS
    lo = linkbudget.achievable_modcod(cn0, bw, cat)
    hi = linkbudget.achievable_modcod(cn0 + 1.0, bw, cat)
    eff = lambda m: -1 if m is None else m.spectral_efficiency_bps_hz  # noqa: E731
    assert eff(hi) >= eff(lo)
