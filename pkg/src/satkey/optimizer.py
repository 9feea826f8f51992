"""Key-length maximisation over protocol parameters and transmission window.

For each candidate half-width on a configurable grid the five continuous
protocol parameters (p_x, mu1, mu2, p1, p2) are optimised by seeded
multi-start Nelder-Mead; the window grid is swept from the widest window
inwards with warm starts, and the global best is returned. All randomness is
driven by a single seed so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize as sciopt
from scipy.stats import qmc

from .counts import (
    EFFICIENT,
    STANDARD,
    BlockTallies,
    ErrorModel,
    ProtocolParams,
    accumulate_window,
    detection_prob,
    error_prob,
)
from .finitekey import SecurityParams, SklResult, skl_finite, skl_standard_bb84
from .link import LinkModel
from .orbit import OverpassGeometry

_P_FLOOR = 0.01  # lower bound for every intensity probability
_MU_GAP = 1e-3   # enforced separation mu1 - mu2


@dataclass(frozen=True)
class OptSpace:
    """Search box for the protocol parameters and the time-window grid."""

    p_x_bounds: tuple = (0.5, 0.99)
    mu1_bounds: tuple = (0.1, 1.0)
    mu2_bounds: tuple = (0.01, 0.5)
    p3_min: float = 0.01
    dt_resolution_s: float = 1.0
    pins: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dt_resolution_s <= 0:
            raise ValueError("dt_resolution_s must be positive")
        for lo, hi in (self.p_x_bounds, self.mu1_bounds, self.mu2_bounds):
            if not lo < hi:
                raise ValueError("empty bounds in OptSpace")
        unknown = set(self.pins) - {"p_x", "mu1", "mu2", "p1", "p2"}
        if unknown:
            raise ValueError(f"unknown pinned parameters: {sorted(unknown)}")


@dataclass(frozen=True)
class OptConfig:
    """Multi-start budget and convergence settings."""

    starts: int = 8
    warm_starts: int = 2
    maxiter: int = 300
    xatol: float = 1e-4
    fatol_rel: float = 1e-4
    keep_trace: bool = False


@dataclass
class OptResult:
    params: ProtocolParams
    half_width_s: float
    result: SklResult
    n_evaluations: int
    trace: list = field(default_factory=list)

    def trace_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["half_width_s", "p_x", "mu1", "mu2", "p1", "p2", "skl_bits"])
            writer.writerows(self.trace)


class _WindowObjective:
    """SKL objective over the unit box for a fixed transmission window."""

    def __init__(self, elev_deg, link, err, sec, space, source_rate_hz, dt_s,
                 variant, n_passes):
        self.p_d = link.transmittance(elev_deg) if elev_deg.size else np.empty(0)
        self.link = link
        self.err = err
        self.sec = sec
        self.space = space
        self.rate_dt = source_rate_hz * dt_s
        self.n_samples = elev_deg.size
        self.variant = variant
        self.n_passes = n_passes
        self.n_evaluations = 0
        self.trace = []

    def decode(self, u: np.ndarray) -> ProtocolParams:
        """Map a unit-box point onto a feasible ProtocolParams."""
        u = np.clip(u, 0.0, 1.0)
        sp = self.space
        pins = sp.pins

        def box(value, bounds):
            return bounds[0] + value * (bounds[1] - bounds[0])

        p_x = pins.get("p_x", box(u[0], sp.p_x_bounds))
        mu1 = pins.get("mu1", box(u[1], sp.mu1_bounds))
        mu2_hi = min(sp.mu2_bounds[1], mu1 - _MU_GAP)
        mu2_lo = min(sp.mu2_bounds[0], mu2_hi - 1e-9)
        mu2 = pins.get("mu2", mu2_lo + u[2] * (mu2_hi - mu2_lo))
        p1_hi = 1.0 - sp.p3_min - _P_FLOOR
        p1 = pins.get("p1", _P_FLOOR + u[3] * (p1_hi - _P_FLOOR))
        p2_hi = 1.0 - sp.p3_min - p1
        p2 = pins.get("p2", _P_FLOOR + u[4] * max(p2_hi - _P_FLOOR, 0.0))
        if self.variant == STANDARD:
            p_x = 0.5
        return ProtocolParams(
            mu=(mu1, mu2, 0.0),
            p_mu=(p1, p2, 1.0 - p1 - p2),
            p_x=p_x,
            source_rate_hz=1.0,  # folded into pulses_per_intensity
            variant=self.variant,
        )

    def tallies(self, params: ProtocolParams) -> BlockTallies:
        mu = np.asarray(params.mu)
        if self.p_d.size == 0:
            return BlockTallies()
        d_sum = detection_prob(mu, self.p_d, self.link.p_ec, self.link.p_ap).sum(axis=1)
        e_sum = error_prob(
            mu, self.p_d, self.link.p_ec, self.link.p_ap, self.err.intrinsic_qber
        ).sum(axis=1)
        per_pulse = self.rate_dt * np.asarray(params.p_mu) * self.n_passes
        return BlockTallies(
            n_sent=per_pulse * self.n_samples,
            n_x=per_pulse * params.sift_x * d_sum,
            n_z=per_pulse * params.sift_z * d_sum,
            m_x=per_pulse * params.sift_x * e_sum,
            m_z=per_pulse * params.sift_z * e_sum,
        )

    def evaluate(self, u: np.ndarray) -> tuple[float, ProtocolParams, SklResult]:
        params = self.decode(u)
        tallies = self.tallies(params)
        if self.variant == STANDARD:
            result = skl_standard_bb84(tallies, params, self.sec)
        else:
            result = skl_finite(tallies, params, self.sec)
        self.n_evaluations += 1
        # Raw (unclamped) key length keeps the search informative on the
        # zero-key plateau.
        return result.ell_raw, params, result

    def __call__(self, u: np.ndarray) -> float:
        return -self.evaluate(u)[0]


def _dt_grid(max_half_width_s: float, resolution_s: float) -> np.ndarray:
    """Half-width grid from the widest window down to the resolution step."""
    if max_half_width_s <= 0:
        return np.array([0.0])
    n = max(int(math.floor(max_half_width_s / resolution_s)), 1)
    grid = np.unique(np.concatenate([np.arange(1, n + 1) * resolution_s,
                                     [max_half_width_s]]))
    return grid[::-1]


def _run_local(objective, start, cfg) -> tuple[float, np.ndarray]:
    res = sciopt.minimize(
        objective,
        np.asarray(start, dtype=float),
        method="Nelder-Mead",
        options={
            "maxiter": cfg.maxiter,
            "xatol": cfg.xatol,
            "fatol": cfg.fatol_rel * max(1.0, abs(objective(start))),
            "adaptive": False,
        },
    )
    return float(res.fun), np.clip(res.x, 0.0, 1.0)


def optimize_single_pass(
    geom: OverpassGeometry,
    link: LinkModel,
    err: ErrorModel,
    sec: SecurityParams,
    space: OptSpace | None = None,
    seed: int = 0,
    source_rate_hz: float = 1e8,
    variant: str = EFFICIENT,
    config: OptConfig | None = None,
    n_passes: int = 1,
) -> OptResult:
    """Best SKL over the window grid and the five protocol parameters."""
    space = space or OptSpace()
    cfg = config or OptConfig()

    sampler = qmc.LatinHypercube(d=5, seed=seed)
    fresh_starts = sampler.random(cfg.starts)

    if geom.n_samples == 0:
        params = ProtocolParams(source_rate_hz=source_rate_hz, variant=variant,
                                p_x=0.5 if variant == STANDARD else 0.889)
        empty = skl_finite(BlockTallies(), params, sec) if variant == EFFICIENT \
            else skl_standard_bb84(BlockTallies(), params, sec, f_pe=0.5)
        return OptResult(params=params, half_width_s=0.0, result=empty, n_evaluations=0)

    max_half = float(np.abs(geom.times_s).max())
    grid = _dt_grid(max_half, space.dt_resolution_s)

    best = None  # (ell_exact, half_width, u, params, result)
    total_evals = 0
    trace = []
    warm_u = None
    for i, half_width in enumerate(grid):
        elev = geom.elevations_deg[geom.window_mask(half_width)]
        objective = _WindowObjective(
            elev, link, err, sec, space, source_rate_hz, geom.time_step_s,
            variant, n_passes,
        )
        if i == 0:
            starts = list(fresh_starts)
        else:
            starts = [warm_u] + list(fresh_starts[: cfg.warm_starts])
        local_best = None
        for start in starts:
            _, u_opt = _run_local(objective, start, cfg)
            value, params, result = objective.evaluate(u_opt)
            if local_best is None or value > local_best[0]:
                local_best = (value, u_opt, params, result)
        total_evals += objective.n_evaluations
        value, u_opt, params, result = local_best
        if cfg.keep_trace:
            trace.append([half_width, params.p_x, *params.mu[:2], *params.p_mu[:2], result.ell])
        warm_u = u_opt
        if best is None or value > best[0]:
            best = (value, half_width, u_opt, params, result)

    _, half_width, _, params, result = best
    params = replace(params, source_rate_hz=source_rate_hz)
    return OptResult(
        params=params,
        half_width_s=float(half_width),
        result=result,
        n_evaluations=total_evals,
        trace=trace,
    )


def optimize_multi_pass(
    n_passes: int,
    geom: OverpassGeometry,
    link: LinkModel,
    err: ErrorModel,
    sec: SecurityParams,
    space: OptSpace | None = None,
    seed: int = 0,
    source_rate_hz: float = 1e8,
    variant: str = EFFICIENT,
    config: OptConfig | None = None,
) -> OptResult:
    """Best total SKL for n_passes identical aggregated passes."""
    if n_passes < 1:
        raise ValueError("n_passes must be >= 1")
    return optimize_single_pass(
        geom, link, err, sec, space=space, seed=seed,
        source_rate_hz=source_rate_hz, variant=variant, config=config,
        n_passes=n_passes,
    )


def evaluate_candidate(
    geom: OverpassGeometry,
    link: LinkModel,
    err: ErrorModel,
    sec: SecurityParams,
    params: ProtocolParams,
    half_width_s: float | None = None,
    n_passes: int = 1,
) -> SklResult:
    """SKL of one explicit candidate, for cross-checks against the optimizer."""
    tallies = accumulate_window(geom, link, params, err, half_width_s)
    if n_passes != 1:
        tallies = tallies.scaled(n_passes)
    if params.variant == STANDARD:
        return skl_standard_bb84(tallies, params, sec)
    return skl_finite(tallies, params, sec)
