"""Elevation-dependent link loss and per-pulse detection probability.

Two curve modes are supported: a parametric default combining the slant-range
diffraction term with an air-mass attenuation term, or a user-supplied
tabulated (elevation, loss) curve with monotone interpolation. A constant dB
offset models additional fixed losses and shifts the zenith system value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .orbit import EARTH_RADIUS_KM

REFERENCE_RECEIVER_M = 1.2


def receiver_scaling_db(receiver_diameter_m: float) -> float:
    """dB penalty relative to the 1.2 m reference receiver aperture."""
    if receiver_diameter_m <= 0:
        raise ValueError("receiver_diameter_m must be positive")
    return 20.0 * math.log10(REFERENCE_RECEIVER_M / receiver_diameter_m)


@dataclass(frozen=True)
class LinkModel:
    """Elevation -> loss (dB) mapping plus extraneous-count parameters.

    The parametric curve is
        loss(theta) = zenith_loss_db + 20 log10(R(theta)/h) + airmass_db * (1/sin(theta) - 1)
    which reduces to zenith_loss_db at theta = 90 deg. Tabulated curves take
    precedence over the parametric one when present.
    """

    zenith_loss_db: float = 27.0
    offset_db: float = 0.0
    p_ec: float = 5e-7
    p_ap: float = 1e-3
    altitude_km: float = 500.0
    earth_radius_km: float = EARTH_RADIUS_KM
    airmass_db: float = 1.0
    curve_elevations_deg: tuple = ()
    curve_losses_db: tuple = ()

    def __post_init__(self):
        if not 0 <= self.p_ec < 1:
            raise ValueError("p_ec must be in [0, 1)")
        if not 0 <= self.p_ap < 1:
            raise ValueError("p_ap must be in [0, 1)")
        if len(self.curve_elevations_deg) != len(self.curve_losses_db):
            raise ValueError("curve elevation/loss lengths differ")
        if self.curve_elevations_deg:
            el = np.asarray(self.curve_elevations_deg, dtype=float)
            if np.any(np.diff(el) <= 0):
                raise ValueError("curve elevations must be strictly ascending")

    @classmethod
    def from_csv(cls, path, **kwargs) -> "LinkModel":
        """Build a tabulated model from a CSV with elevation_deg, loss_db columns."""
        elevations, losses = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                elevations.append(float(row["elevation_deg"]))
                losses.append(float(row["loss_db"]))
        return cls(
            curve_elevations_deg=tuple(elevations),
            curve_losses_db=tuple(losses),
            **kwargs,
        )

    def with_offset(self, extra_db: float) -> "LinkModel":
        """Copy with an additional uniform dB offset applied."""
        return replace(self, offset_db=self.offset_db + extra_db)

    def for_receiver(self, receiver_diameter_m: float) -> "LinkModel":
        """Copy rescaled to a different receiver aperture diameter."""
        return self.with_offset(receiver_scaling_db(receiver_diameter_m))

    @property
    def eta_sys_db(self) -> float:
        """System link efficiency: loss at zenith including the offset."""
        return float(self.loss_db(90.0))

    def _slant_range_km(self, theta_rad):
        re = self.earth_radius_km
        ro = re + self.altitude_km
        gamma = np.arccos(np.clip(re * np.cos(theta_rad) / ro, -1.0, 1.0)) - theta_rad
        return np.sqrt(re**2 + ro**2 - 2.0 * re * ro * np.cos(gamma))

    def loss_db(self, theta_deg):
        """Total link loss in dB at the given elevation(s)."""
        theta = np.asarray(theta_deg, dtype=float)
        if np.any(theta <= 0) or np.any(theta > 90):
            raise ValueError("elevation must be in (0, 90] degrees")
        if self.curve_elevations_deg:
            el = np.asarray(self.curve_elevations_deg, dtype=float)
            lo = np.asarray(self.curve_losses_db, dtype=float)
            if np.any(theta < el[0]) or np.any(theta > el[-1]):
                raise ValueError("elevation outside tabulated curve range")
            if el.size >= 3:
                base = PchipInterpolator(el, lo)(theta)
            else:
                base = np.interp(theta, el, lo)
        else:
            th = np.radians(theta)
            base = (
                self.zenith_loss_db
                + 20.0 * np.log10(self._slant_range_km(th) / self.altitude_km)
                + self.airmass_db * (1.0 / np.sin(th) - 1.0)
            )
        out = base + self.offset_db
        return float(out) if np.isscalar(theta_deg) else out

    def transmittance(self, theta_deg):
        """Per-pulse single-photon detection probability p_d at elevation theta."""
        return 10.0 ** (-np.asarray(self.loss_db(theta_deg)) / 10.0)
