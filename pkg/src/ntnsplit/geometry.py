"""Spherical-Earth geometry for circular LEO orbits.

Slant ranges, propagation delays, sub-satellite tracks, elevation angles,
visibility windows and worst-case eclipse fractions. Scalar entry points use
``math``; the ``*_series`` helpers accept numpy arrays of times and are what
the simulator uses on dense tick grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, DomainError, InfeasibleGeometryError

SPEED_OF_LIGHT_M_S = 299_792_458.0
EARTH_RADIUS_KM = 6371.0
MU_EARTH_KM3_S2 = 398_600.4418
SIDEREAL_DAY_S = 86_164.0
EARTH_ROTATION_RAD_S = 2.0 * math.pi / SIDEREAL_DAY_S

GATEWAY = "gateway"
BEAM_CENTER = "beam_center"

# refinement stops once the bracketed elevation error is below this
_ELEVATION_TOL_DEG = 1e-5


@dataclass(frozen=True)
class OrbitConfig:
    altitude_km: float = 600.0
    inclination_deg: float = 0.0
    raan_deg: float = 0.0
    initial_phase_deg: float = 0.0
    earth_radius_km: float = EARTH_RADIUS_KM
    mu_km3_s2: float = MU_EARTH_KM3_S2
    earth_rotation: bool = True

    def __post_init__(self):
        if not self.altitude_km > 0:
            raise ConfigError(f"altitude_km must be > 0, got {self.altitude_km}")
        if not 0.0 <= self.inclination_deg <= 180.0:
            raise ConfigError(f"inclination_deg must be in [0, 180], got {self.inclination_deg}")
        if not self.earth_radius_km > 0 or not self.mu_km3_s2 > 0:
            raise ConfigError("earth_radius_km and mu_km3_s2 must be positive")

    @property
    def semi_major_axis_km(self) -> float:
        return self.earth_radius_km + self.altitude_km

    @property
    def mean_motion_rad_s(self) -> float:
        return math.sqrt(self.mu_km3_s2 / self.semi_major_axis_km**3)


@dataclass(frozen=True)
class GroundSite:
    latitude_deg: float = 0.0
    longitude_deg: float = 0.0
    min_elevation_deg: float = 10.0
    role: str = GATEWAY
    name: str = ""

    def __post_init__(self):
        if abs(self.latitude_deg) > 90.0:
            raise ConfigError(f"latitude_deg must be within [-90, 90], got {self.latitude_deg}")
        if not 0.0 <= self.min_elevation_deg < 90.0:
            raise ConfigError(
                f"min_elevation_deg must be in [0, 90), got {self.min_elevation_deg}"
            )
        if self.role not in (GATEWAY, BEAM_CENTER):
            raise ConfigError(f"role must be '{GATEWAY}' or '{BEAM_CENTER}', got {self.role!r}")


@dataclass(frozen=True)
class GeometrySample:
    time_s: float
    subsat_lat_deg: float
    subsat_lon_deg: float
    elevation_deg: tuple[float, ...]
    slant_range_km: tuple[float, ...]


class Window(NamedTuple):
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


def slant_range(altitude_km: float, elevation_deg: float,
                earth_radius_km: float = EARTH_RADIUS_KM) -> float:
    """Distance in km from a ground point to a satellite seen at ``elevation_deg``."""
    if not 0.0 <= elevation_deg <= 90.0:
        raise DomainError(f"elevation must be in [0, 90] deg, got {elevation_deg}")
    if not altitude_km > 0:
        raise DomainError(f"altitude must be > 0 km, got {altitude_km}")
    re_sin = earth_radius_km * math.sin(math.radians(elevation_deg))
    return math.sqrt(re_sin**2 + altitude_km**2 + 2.0 * earth_radius_km * altitude_km) - re_sin


def propagation_delay(distance_km: float) -> float:
    """One-way free-space delay in seconds over ``distance_km``."""
    if distance_km < 0:
        raise DomainError(f"distance must be >= 0 km, got {distance_km}")
    return distance_km * 1000.0 / SPEED_OF_LIGHT_M_S


def central_angle_for_elevation(altitude_km: float, elevation_deg: float,
                                earth_radius_km: float = EARTH_RADIUS_KM) -> float:
    """Earth central angle (deg) between a ground point and the sub-satellite point."""
    ratio = earth_radius_km / (earth_radius_km + altitude_km)
    eps = math.radians(elevation_deg)
    return math.degrees(math.acos(ratio * math.cos(eps)) - eps)


def elevation_from_central_angle(central_angle_deg, altitude_km: float,
                                 earth_radius_km: float = EARTH_RADIUS_KM):
    """Elevation (deg) for a central angle; negative below the horizon. Vectorised."""
    gamma = np.radians(central_angle_deg)
    ratio = earth_radius_km / (earth_radius_km + altitude_km)
    elev = np.degrees(np.arctan2(np.cos(gamma) - ratio, np.sin(gamma)))
    return float(elev) if np.ndim(elev) == 0 else elev


def range_from_central_angle(central_angle_deg, altitude_km: float,
                             earth_radius_km: float = EARTH_RADIUS_KM):
    """Law-of-cosines slant range (km) for a central angle. Vectorised."""
    gamma = np.radians(central_angle_deg)
    a = earth_radius_km + altitude_km
    d = np.sqrt(earth_radius_km**2 + a**2 - 2.0 * earth_radius_km * a * np.cos(gamma))
    return float(d) if np.ndim(d) == 0 else d


def central_angle(lat1_deg, lon1_deg, lat2_deg, lon2_deg):
    """Great-circle angle (deg) between two points on the sphere. Vectorised."""
    p1, p2 = np.radians(lat1_deg), np.radians(lat2_deg)
    dlon = np.radians(np.asarray(lon2_deg) - np.asarray(lon1_deg))
    # haversine keeps precision near zero separation
    h = np.sin((p2 - p1) / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlon / 2.0) ** 2
    gamma = np.degrees(2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0))))
    return float(gamma) if np.ndim(gamma) == 0 else gamma


def user_link_worst_delay(orbit: OrbitConfig, beam_center_elevation_deg: float,
                          beam_diameter_km: float, min_elevation_deg: float = 30.0) -> float:
    """Delay (s) to the beam-edge point farthest from the sub-satellite point."""
    if beam_center_elevation_deg < min_elevation_deg:
        raise DomainError(
            f"beam centre elevation {beam_center_elevation_deg} deg is below the "
            f"user minimum {min_elevation_deg} deg"
        )
    if beam_diameter_km < 0:
        raise DomainError(f"beam diameter must be >= 0 km, got {beam_diameter_km}")
    re, h = orbit.earth_radius_km, orbit.altitude_km
    gamma_center = central_angle_for_elevation(h, beam_center_elevation_deg, re)
    gamma_edge = gamma_center + math.degrees(beam_diameter_km / 2.0 / re)
    if elevation_from_central_angle(gamma_edge, h, re) < 0.0:
        raise InfeasibleGeometryError("beam edge lies below the satellite horizon")
    return propagation_delay(range_from_central_angle(gamma_edge, h, re))


def orbital_period(orbit: OrbitConfig) -> float:
    return 2.0 * math.pi / orbit.mean_motion_rad_s


def _subsatellite(orbit: OrbitConfig, t):
    t = np.asarray(t, dtype=float)
    u = math.radians(orbit.initial_phase_deg) + orbit.mean_motion_rad_s * t
    inc, raan = math.radians(orbit.inclination_deg), math.radians(orbit.raan_deg)
    x = math.cos(raan) * np.cos(u) - math.sin(raan) * np.sin(u) * math.cos(inc)
    y = math.sin(raan) * np.cos(u) + math.cos(raan) * np.sin(u) * math.cos(inc)
    z = np.sin(u) * math.sin(inc)
    lat = np.degrees(np.arcsin(np.clip(z, -1.0, 1.0)))
    lon = np.degrees(np.arctan2(y, x))
    if orbit.earth_rotation:
        lon = lon - np.degrees(EARTH_ROTATION_RAD_S * t)
    # wrap into (-180, 180]
    lon = 180.0 - np.mod(180.0 - lon, 360.0)
    return lat, lon


def ground_track(orbit: OrbitConfig, t: float) -> tuple[float, float]:
    """Sub-satellite latitude and longitude (deg) at time ``t`` seconds."""
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    lat, lon = _subsatellite(orbit, t)
    return float(lat), float(lon)


def ground_track_series(orbit: OrbitConfig, times) -> tuple[np.ndarray, np.ndarray]:
    return _subsatellite(orbit, times)


def elevation_of(site: GroundSite, subsat: tuple[float, float], altitude_km: float,
                 earth_radius_km: float = EARTH_RADIUS_KM) -> float:
    """Elevation (deg) of a satellite above ``site``; negative when not visible."""
    gamma = central_angle(site.latitude_deg, site.longitude_deg, subsat[0], subsat[1])
    return elevation_from_central_angle(gamma, altitude_km, earth_radius_km)


def elevation_series(orbit: OrbitConfig, site: GroundSite, times) -> np.ndarray:
    lat, lon = _subsatellite(orbit, times)
    gamma = central_angle(site.latitude_deg, site.longitude_deg, lat, lon)
    return np.asarray(elevation_from_central_angle(gamma, orbit.altitude_km, orbit.earth_radius_km))


def slant_range_series(orbit: OrbitConfig, site: GroundSite, times) -> np.ndarray:
    lat, lon = _subsatellite(orbit, times)
    gamma = central_angle(site.latitude_deg, site.longitude_deg, lat, lon)
    return np.asarray(range_from_central_angle(gamma, orbit.altitude_km, orbit.earth_radius_km))


def sample(orbit: OrbitConfig, sites: list[GroundSite], t: float) -> GeometrySample:
    lat, lon = ground_track(orbit, t)
    gammas = [central_angle(s.latitude_deg, s.longitude_deg, lat, lon) for s in sites]
    h, re = orbit.altitude_km, orbit.earth_radius_km
    return GeometrySample(
        time_s=t,
        subsat_lat_deg=lat,
        subsat_lon_deg=lon,
        elevation_deg=tuple(elevation_from_central_angle(g, h, re) for g in gammas),
        slant_range_km=tuple(range_from_central_angle(g, h, re) for g in gammas),
    )


def satellite_position_km(orbit: OrbitConfig, times) -> np.ndarray:
    """Earth-fixed Cartesian position(s) in km, shape ``(..., 3)``."""
    lat, lon = _subsatellite(orbit, times)
    lat, lon = np.radians(lat), np.radians(lon)
    r = orbit.semi_major_axis_km
    return np.stack(
        [r * np.cos(lat) * np.cos(lon), r * np.cos(lat) * np.sin(lon), r * np.sin(lat)],
        axis=-1,
    )


def find_windows(margin: Callable[[np.ndarray], np.ndarray], t0: float, t1: float,
                 step_s: float, time_tol: float | None = None) -> list[Window]:
    """Maximal intervals of ``[t0, t1]`` where ``margin(t) >= 0``.

    ``margin`` must accept an array of times. Crossings are located on a grid
    of ``step_s`` and refined by bisection until the bracket is narrower than
    ``time_tol`` (default ``step_s / 100``) and the margin at the reported
    endpoint is within ``1e-5`` of zero.
    """
    if not t0 < t1:
        raise DomainError(f"need t0 < t1, got [{t0}, {t1}]")
    if not step_s > 0:
        raise DomainError(f"step must be > 0, got {step_s}")
    time_tol = step_s / 100.0 if time_tol is None else time_tol
    n = int(math.floor((t1 - t0) / step_s))
    times = t0 + step_s * np.arange(n + 1)
    if times[-1] < t1:
        times = np.append(times, t1)
    up = np.asarray(margin(times)) >= 0.0

    def refine(lo: float, hi: float, lo_up: bool) -> float:
        # lo has state lo_up, hi the opposite; report the endpoint on the visible side
        m_vis = float(margin(np.array([lo if lo_up else hi]))[0])
        while hi - lo > 1e-9:
            if hi - lo <= time_tol and m_vis <= _ELEVATION_TOL_DEG:
                break
            mid = 0.5 * (lo + hi)
            m = float(margin(np.array([mid]))[0])
            if (m >= 0.0) == lo_up:
                lo = mid
            else:
                hi = mid
            if m >= 0.0:
                m_vis = m
        return lo if lo_up else hi

    windows: list[Window] = []
    start = t0 if up[0] else None
    for i in range(1, len(times)):
        if up[i] == up[i - 1]:
            continue
        edge = refine(float(times[i - 1]), float(times[i]), bool(up[i - 1]))
        if up[i]:
            start = edge
        else:
            windows.append(Window(start, edge))
            start = None
    if start is not None:
        windows.append(Window(start, float(t1)))
    return windows


def visibility_windows(orbit: OrbitConfig, site: GroundSite, t0: float, t1: float,
                       step_s: float) -> list[Window]:
    """Intervals where the satellite is at or above ``site.min_elevation_deg``."""
    return find_windows(
        lambda ts: elevation_series(orbit, site, ts) - site.min_elevation_deg,
        t0, t1, step_s,
    )


def eclipse_half_angle_deg(orbit: OrbitConfig) -> float:
    return math.degrees(math.asin(orbit.earth_radius_km / orbit.semi_major_axis_km))


def eclipse_fraction(orbit: OrbitConfig) -> float:
    """Fraction of the orbit in a cylindrical Earth shadow at beta angle 0."""
    return 2.0 * eclipse_half_angle_deg(orbit) / 360.0


def in_eclipse(orbit: OrbitConfig, times, sun_phase_deg: float = 0.0):
    """True where the satellite is inside the shadow arc.

    The arc is centred on the argument of latitude opposite the sun
    (``sun_phase_deg + 180``), with beta angle 0.
    """
    t = np.asarray(times, dtype=float)
    u = orbit.initial_phase_deg + np.degrees(orbit.mean_motion_rad_s * t)
    offset = np.mod(u - (sun_phase_deg + 180.0) + 180.0, 360.0) - 180.0
    shadow = np.abs(offset) <= eclipse_half_angle_deg(orbit)
    return bool(shadow) if shadow.ndim == 0 else shadow
