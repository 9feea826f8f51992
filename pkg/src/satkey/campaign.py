"""Campaign-level sweeps: footprint, annual key volume, sensitivity grids.

Each sweep drives the single-pass optimizer across a grid and emits
plot-ready tables (CSV) plus a JSON manifest carrying the configuration hash
for provenance.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .counts import EFFICIENT, ErrorModel, ProtocolParams, accumulate_window
from .finitekey import SecurityParams, skl_asymptotic
from .link import LinkModel
from .optimizer import OptConfig, OptSpace, optimize_single_pass
from .orbit import OrbitConfig, OverpassGeometry, YEAR_SECONDS, orbital_period, pass_geometry

MAX_OGS_LATITUDE_DEG = 80.0


def config_hash(*objects) -> str:
    """Stable short hash of the input configuration, for provenance."""
    blob = json.dumps([repr(o) for o in objects], sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class FootprintCurve:
    """Optimised SKL versus ground-track offset, with the footprint edge."""

    d_min_km: np.ndarray
    skl_bits: np.ndarray
    d_min_plus_km: float
    theta_max_minus_deg: float
    provenance: str = ""

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["d_min_km", "skl_bits"])
            for d, s in zip(self.d_min_km, self.skl_bits):
                writer.writerow([f"{d:.6f}", f"{s:.6f}"])

    @classmethod
    def from_csv(cls, path, d_min_plus_km=0.0, theta_max_minus_deg=90.0) -> "FootprintCurve":
        d, s = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                d.append(float(row["d_min_km"]))
                s.append(float(row["skl_bits"]))
        return cls(
            d_min_km=np.asarray(d),
            skl_bits=np.asarray(s),
            d_min_plus_km=d_min_plus_km,
            theta_max_minus_deg=theta_max_minus_deg,
        )


@dataclass
class AnnualEstimate:
    """Expected yearly key volume at one ground-station latitude."""

    skl_int_bit_m: float
    n_orbits_year: float
    l_lat_m: float
    skl_year_bits: float
    provenance: str = ""

    def to_json(self, path=None):
        payload = {
            "skl_int_bit_m": self.skl_int_bit_m,
            "n_orbits_year": self.n_orbits_year,
            "l_lat_m": self.l_lat_m,
            "skl_year_bits": self.skl_year_bits,
            "provenance": self.provenance,
        }
        if path is None:
            return json.dumps(payload)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)


@dataclass(frozen=True)
class SystemConfig:
    """Bundle of the per-pass inputs shared by all campaign sweeps."""

    orbit: OrbitConfig = OrbitConfig()
    link: LinkModel = LinkModel()
    error: ErrorModel = ErrorModel()
    security: SecurityParams = SecurityParams()
    space: OptSpace = OptSpace()
    opt: OptConfig = OptConfig()
    source_rate_hz: float = 1e8
    variant: str = EFFICIENT
    seed: int = 0

    def optimize(self, d_min_km: float = 0.0, link: LinkModel | None = None,
                 err: ErrorModel | None = None, n_passes: int = 1,
                 variant: str | None = None):
        geom = pass_geometry(self.orbit, d_min_km=d_min_km)
        return optimize_single_pass(
            geom,
            link if link is not None else self.link,
            err if err is not None else self.error,
            self.security,
            space=self.space,
            seed=self.seed,
            source_rate_hz=self.source_rate_hz,
            variant=variant or self.variant,
            config=self.opt,
            n_passes=n_passes,
        )


def footprint_sweep(
    system: SystemConfig,
    d_min_grid_km=None,
    edge_tolerance_km: float = 5.0,
) -> FootprintCurve:
    """Optimised SKL per grid offset; footprint edge located by bisection."""
    from .orbit import theta_max_from_dmin

    if d_min_grid_km is None:
        d_min_grid_km = np.arange(0.0, 1500.0 + 1e-9, 50.0)
    d_min_grid_km = np.asarray(sorted(d_min_grid_km), dtype=float)
    if d_min_grid_km[0] != 0.0:
        raise ValueError("d_min grid must start at 0")

    skl = np.empty_like(d_min_grid_km)
    for i, d in enumerate(d_min_grid_km):
        skl[i] = system.optimize(d_min_km=d).result.ell
        if skl[i] == 0 and i > 0:
            # Everything further out only sees a worse channel.
            skl[i:] = 0.0
            break

    positive = np.nonzero(skl > 0)[0]
    if positive.size == 0:
        edge = 0.0
    elif positive[-1] == d_min_grid_km.size - 1:
        edge = float(d_min_grid_km[-1])
    else:
        lo = float(d_min_grid_km[positive[-1]])
        hi = float(d_min_grid_km[positive[-1] + 1])
        while hi - lo > edge_tolerance_km:
            mid = 0.5 * (lo + hi)
            if system.optimize(d_min_km=mid).result.ell > 0:
                lo = mid
            else:
                hi = mid
        edge = 0.5 * (lo + hi)

    return FootprintCurve(
        d_min_km=d_min_grid_km,
        skl_bits=skl,
        d_min_plus_km=edge,
        theta_max_minus_deg=theta_max_from_dmin(system.orbit, edge) if edge > 0 else 90.0,
        provenance=config_hash(system),
    )


def annual_volume(
    curve: FootprintCurve, latitude_deg: float, orbit: OrbitConfig
) -> AnnualEstimate:
    """Expected annual key from the footprint curve, assuming evenly
    distributed ground-track offsets (weather neglected)."""
    if abs(latitude_deg) > MAX_OGS_LATITUDE_DEG:
        raise ValueError("latitude too close to the poles for the even-offset model")
    # Area under SKL vs offset, both hemispheres of the ground track, in bit*m.
    skl_int = 2.0 * np.trapezoid(curve.skl_bits, curve.d_min_km * 1e3)
    l_lat = 2.0 * math.pi * orbit.earth_radius_km * 1e3 * math.cos(math.radians(latitude_deg))
    n_orbits = YEAR_SECONDS / orbital_period(orbit)
    return AnnualEstimate(
        skl_int_bit_m=float(skl_int),
        n_orbits_year=n_orbits,
        l_lat_m=l_lat,
        skl_year_bits=float(n_orbits * skl_int / l_lat),
        provenance=curve.provenance,
    )


def sensitivity_grid(
    system: SystemConfig,
    eta_offsets_db=(0.0,),
    p_ec_values=None,
    qber_i_values=None,
    source_rates_hz=None,
    d_min_km: float = 0.0,
) -> list[dict]:
    """Optimised SKL over a grid of system parameters.

    Returns one row per grid cell; zero-SKL cells are reported explicitly.
    """
    p_ec_values = [system.link.p_ec] if p_ec_values is None else list(p_ec_values)
    qber_i_values = (
        [system.error.intrinsic_qber] if qber_i_values is None else list(qber_i_values)
    )
    source_rates_hz = (
        [system.source_rate_hz] if source_rates_hz is None else list(source_rates_hz)
    )
    rows = []
    for offset in eta_offsets_db:
        for p_ec in p_ec_values:
            for qber_i in qber_i_values:
                for f_s in source_rates_hz:
                    from dataclasses import replace as _replace

                    link = _replace(system.link.with_offset(offset), p_ec=p_ec)
                    err = ErrorModel(intrinsic_qber=qber_i)
                    sys_fs = _replace(system, source_rate_hz=f_s)
                    opt = sys_fs.optimize(d_min_km=d_min_km, link=link, err=err)
                    rows.append(
                        {
                            "eta_sys_db": link.eta_sys_db,
                            "p_ec": p_ec,
                            "qber_i": qber_i,
                            "source_rate_hz": f_s,
                            "d_min_km": d_min_km,
                            "skl_bits": opt.result.ell,
                            "half_width_s": opt.half_width_s,
                            "p_x": opt.params.p_x,
                            "mu1": opt.params.mu[0],
                            "mu2": opt.params.mu[1],
                        }
                    )
    return rows


def grid_to_csv(rows: list[dict], path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def continuous_asymptotic_oracle(
    geom: OverpassGeometry,
    link: LinkModel,
    params: ProtocolParams,
    err: ErrorModel | None = None,
) -> float:
    """Integral of the instantaneous asymptotic rate over the pass.

    Reference upper bound only: pointwise rates dominate any block average,
    and the asymptotic limit dominates any finite-block key.
    """
    err = err or ErrorModel()
    if geom.n_samples == 0:
        return 0.0
    total = 0.0
    for i in range(geom.n_samples):
        bin_geom = OverpassGeometry(
            d_min_km=geom.d_min_km,
            theta_max_deg=geom.theta_max_deg,
            times_s=geom.times_s[i : i + 1],
            elevations_deg=geom.elevations_deg[i : i + 1],
            ranges_km=geom.ranges_km[i : i + 1],
            time_step_s=geom.time_step_s,
        )
        tallies = accumulate_window(bin_geom, link, params, err)
        total += skl_asymptotic(tallies, params, floor=False)
    return total
