"""Circular-orbit overpass geometry for a single ground station.

The sub-satellite track is treated as a great circle at a fixed ground-track
offset from the station; Earth rotation during the few minutes of a pass is
neglected. Times are measured relative to culmination (closest approach).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

EARTH_RADIUS_KM = 6371.0
EARTH_MU_KM3_S2 = 398600.4418
YEAR_SECONDS = 365.25 * 86400.0


@dataclass(frozen=True)
class OrbitConfig:
    """Circular orbit plus ground-station visibility constraints."""

    altitude_km: float = 500.0
    earth_radius_km: float = EARTH_RADIUS_KM
    mu_km3_s2: float = EARTH_MU_KM3_S2
    min_elevation_deg: float = 10.0
    time_step_s: float = 0.1

    def __post_init__(self):
        if self.altitude_km <= 0:
            raise ValueError("altitude_km must be positive")
        if not 0 <= self.min_elevation_deg < 90:
            raise ValueError("min_elevation_deg must be in [0, 90)")
        if self.time_step_s <= 0:
            raise ValueError("time_step_s must be positive")

    @property
    def orbit_radius_km(self) -> float:
        return self.earth_radius_km + self.altitude_km


def orbital_period(cfg: OrbitConfig) -> float:
    """Keplerian period of the circular orbit in seconds."""
    return 2.0 * math.pi * math.sqrt(cfg.orbit_radius_km**3 / cfg.mu_km3_s2)


def _elevation_range_at_gamma(cfg: OrbitConfig, gamma_rad):
    """Elevation (deg) and slant range (km) at great-circle angle gamma."""
    re = cfg.earth_radius_km
    ro = cfg.orbit_radius_km
    cg = np.cos(gamma_rad)
    rng = np.sqrt(re**2 + ro**2 - 2.0 * re * ro * cg)
    sin_el = (ro * cg - re) / rng
    return np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0))), rng


def _gamma_at_elevation(cfg: OrbitConfig, theta_deg: float) -> float:
    """Great-circle angle (rad) at which the satellite sits at elevation theta."""
    th = math.radians(theta_deg)
    return math.acos(cfg.earth_radius_km * math.cos(th) / cfg.orbit_radius_km) - th


def theta_max_from_dmin(cfg: OrbitConfig, d_min_km: float) -> float:
    """Culmination elevation (deg) for a pass with ground-track offset d_min."""
    if d_min_km < 0:
        raise ValueError("d_min_km must be non-negative")
    el, _ = _elevation_range_at_gamma(cfg, d_min_km / cfg.earth_radius_km)
    return float(el)


def dmin_from_theta_max(cfg: OrbitConfig, theta_max_deg: float) -> float:
    """Ground-track offset (km) whose pass culminates at theta_max."""
    if not 0 < theta_max_deg <= 90:
        raise ValueError("theta_max_deg must be in (0, 90]")
    return cfg.earth_radius_km * _gamma_at_elevation(cfg, theta_max_deg)


@dataclass(frozen=True)
class OverpassGeometry:
    """Elevation/range time series of one pass, symmetric about culmination."""

    d_min_km: float
    theta_max_deg: float
    times_s: np.ndarray = field(repr=False)
    elevations_deg: np.ndarray = field(repr=False)
    ranges_km: np.ndarray = field(repr=False)
    time_step_s: float = 0.1

    @property
    def n_samples(self) -> int:
        return self.times_s.size

    @property
    def visible_duration_s(self) -> float:
        """Length of the visibility window covered by the samples."""
        if self.times_s.size == 0:
            return 0.0
        return float(self.times_s[-1] - self.times_s[0]) + self.time_step_s

    def window_mask(self, half_width_s: float) -> np.ndarray:
        """Boolean mask selecting samples with |t| <= half_width_s."""
        return np.abs(self.times_s) <= half_width_s + 1e-9

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_s", "elevation_deg", "range_km"])
            for t, el, r in zip(self.times_s, self.elevations_deg, self.ranges_km):
                writer.writerow([f"{t:.6f}", f"{el:.9f}", f"{r:.9f}"])


def pass_geometry(
    cfg: OrbitConfig,
    d_min_km: float | None = None,
    theta_max_deg: float | None = None,
) -> OverpassGeometry:
    """Sample one overpass at cfg.time_step_s, restricted to the visible arc.

    The pass may be specified either by ground-track offset or by its
    culmination elevation (exactly one of the two).
    """
    if (d_min_km is None) == (theta_max_deg is None):
        raise ValueError("specify exactly one of d_min_km, theta_max_deg")
    if d_min_km is None:
        d_min_km = dmin_from_theta_max(cfg, theta_max_deg)
    if d_min_km < 0:
        raise ValueError("d_min_km must be non-negative")

    theta_max = theta_max_from_dmin(cfg, d_min_km)
    dt = cfg.time_step_s
    empty = OverpassGeometry(
        d_min_km=d_min_km,
        theta_max_deg=theta_max,
        times_s=np.empty(0),
        elevations_deg=np.empty(0),
        ranges_km=np.empty(0),
        time_step_s=dt,
    )
    if theta_max < cfg.min_elevation_deg:
        return empty

    # Visibility half-width: cos(gamma(t)) = cos(d_min/R_E) cos(omega t).
    omega = 2.0 * math.pi / orbital_period(cfg)
    cos_offset = math.cos(d_min_km / cfg.earth_radius_km)
    cos_gamma_lim = math.cos(_gamma_at_elevation(cfg, cfg.min_elevation_deg))
    ratio = cos_gamma_lim / cos_offset
    if ratio > 1.0:
        return empty
    t_lim = math.acos(ratio) / omega

    k_max = int(math.floor(t_lim / dt + 1e-9))
    times = np.arange(-k_max, k_max + 1) * dt
    gamma = np.arccos(np.clip(cos_offset * np.cos(omega * times), -1.0, 1.0))
    elev, rng = _elevation_range_at_gamma(cfg, gamma)

    keep = elev >= cfg.min_elevation_deg - 1e-12
    return OverpassGeometry(
        d_min_km=d_min_km,
        theta_max_deg=theta_max,
        times_s=times[keep],
        elevations_deg=elev[keep],
        ranges_km=rng[keep],
        time_step_s=dt,
    )


def slant_range_km(cfg: OrbitConfig, theta_deg) -> np.ndarray:
    """Slant range (km) at elevation theta for the configured orbit."""
    th = np.radians(np.asarray(theta_deg, dtype=float))
    re = cfg.earth_radius_km
    ro = cfg.orbit_radius_km
    gamma = np.arccos(np.clip(re * np.cos(th) / ro, -1.0, 1.0)) - th
    _, rng = _elevation_range_at_gamma(cfg, gamma)
    return rng
