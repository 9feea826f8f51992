"""Expected detection and error tallies per basis and intensity.

The channel model is the standard two-decoy weak-coherent-pulse one: for
intensity mu and transmittance p_d the per-pulse click probability is

    D = min(1, [1 - (1 - 2 p_ec) exp(-mu p_d)] (1 + p_ap))

and the error probability combines extraneous counts, the intrinsic QBER and
half of the afterpulse clicks. Tallies are expected values (floats) by
default; a Poisson-sampled integer mode is available for robustness studies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .link import LinkModel
from .orbit import OverpassGeometry

EFFICIENT = "efficient-BB84"
STANDARD = "standard-BB84"


@dataclass(frozen=True)
class ProtocolParams:
    """Decoy-state BB84 source settings: intensities, probabilities, bias."""

    mu: tuple = (0.5, 0.08, 0.0)
    p_mu: tuple = (0.72, 0.18, 0.1)
    p_x: float = 0.889
    source_rate_hz: float = 1e8
    variant: str = EFFICIENT
    p_x_receiver: float | None = None

    def __post_init__(self):
        mu1, mu2, mu3 = self.mu
        if not (mu1 > mu2 > mu3 == 0.0):
            raise ValueError("intensities must satisfy mu1 > mu2 > mu3 = 0")
        if not mu1 - mu2 > mu3:
            raise ValueError("decoy estimator needs mu1 - mu2 > mu3")
        # Degenerate single-photon-bound denominator.
        if abs(mu1 * (mu2 - mu3) - (mu2**2 - mu3**2)) < 1e-12:
            raise ValueError("degenerate intensities: mu1(mu2-mu3) = mu2^2-mu3^2")
        if abs(sum(self.p_mu) - 1.0) > 1e-9:
            raise ValueError("intensity probabilities must sum to 1")
        if any(not 0 < p < 1 for p in self.p_mu):
            raise ValueError("intensity probabilities must lie in (0, 1)")
        if self.variant == STANDARD:
            if abs(self.p_x - 0.5) > 1e-12:
                raise ValueError("standard BB84 fixes p_x = 1/2")
        elif self.variant == EFFICIENT:
            if not 0 < self.p_x < 1:
                raise ValueError("p_x must lie in (0, 1)")
        else:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.source_rate_hz <= 0:
            raise ValueError("source_rate_hz must be positive")
        if self.p_x_receiver is not None and not 0 < self.p_x_receiver < 1:
            raise ValueError("p_x_receiver must lie in (0, 1)")

    @property
    def p_x_rx(self) -> float:
        return self.p_x if self.p_x_receiver is None else self.p_x_receiver

    @property
    def sift_x(self) -> float:
        """Probability a pulse ends up in the sifted key (X) basis."""
        return self.p_x * self.p_x_rx

    @property
    def sift_z(self) -> float:
        """Probability a pulse ends up in the sifted test (Z) basis."""
        return (1.0 - self.p_x) * (1.0 - self.p_x_rx)


@dataclass(frozen=True)
class ErrorModel:
    """Constant intrinsic error floor independent of loss and count rate."""

    intrinsic_qber: float = 5e-3

    def __post_init__(self):
        if not 0 <= self.intrinsic_qber < 0.5:
            raise ValueError("intrinsic_qber must be in [0, 0.5)")


@dataclass
class BlockTallies:
    """Sent/sifted/error counts per intensity, per basis, for one block."""

    n_sent: np.ndarray = field(default_factory=lambda: np.zeros(3))
    n_x: np.ndarray = field(default_factory=lambda: np.zeros(3))
    n_z: np.ndarray = field(default_factory=lambda: np.zeros(3))
    m_x: np.ndarray = field(default_factory=lambda: np.zeros(3))
    m_z: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("n_sent", "n_x", "n_z", "m_x", "m_z"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def __add__(self, other: "BlockTallies") -> "BlockTallies":
        return BlockTallies(
            n_sent=self.n_sent + other.n_sent,
            n_x=self.n_x + other.n_x,
            n_z=self.n_z + other.n_z,
            m_x=self.m_x + other.m_x,
            m_z=self.m_z + other.m_z,
        )

    def scaled(self, factor: float) -> "BlockTallies":
        """Tallies for `factor` identical repetitions of this block."""
        return BlockTallies(
            n_sent=self.n_sent * factor,
            n_x=self.n_x * factor,
            n_z=self.n_z * factor,
            m_x=self.m_x * factor,
            m_z=self.m_z * factor,
        )

    @property
    def n_x_total(self) -> float:
        return float(self.n_x.sum())

    @property
    def n_z_total(self) -> float:
        return float(self.n_z.sum())

    @property
    def qber_x(self) -> float:
        return float(self.m_x.sum() / self.n_x.sum()) if self.n_x.sum() > 0 else 0.0

    @property
    def qber_z(self) -> float:
        return float(self.m_z.sum() / self.n_z.sum()) if self.n_z.sum() > 0 else 0.0

    def to_json(self, path=None):
        payload = {k: list(getattr(self, k)) for k in ("n_sent", "n_x", "n_z", "m_x", "m_z")}
        if path is None:
            return json.dumps(payload)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)

    @classmethod
    def from_json(cls, source) -> "BlockTallies":
        if isinstance(source, (str, bytes)) and str(source).lstrip().startswith("{"):
            payload = json.loads(source)
        else:
            with open(source) as fh:
                payload = json.load(fh)
        return cls(**{k: np.asarray(v, dtype=float) for k, v in payload.items()})


def detection_prob(mu, p_d, p_ec=0.0, p_ap=0.0):
    """Per-pulse click probability for intensity mu at transmittance p_d."""
    raw = 1.0 - (1.0 - 2.0 * p_ec) * np.exp(-np.multiply.outer(mu, p_d))
    return np.minimum(1.0, raw * (1.0 + p_ap))


def error_prob(mu, p_d, p_ec=0.0, p_ap=0.0, qber_i=0.0):
    """Per-pulse sifted error probability; never exceeds the click probability."""
    signal = 1.0 - np.exp(-np.multiply.outer(mu, p_d))
    raw = p_ec + qber_i * signal + 0.5 * p_ap * (1.0 - (1.0 - 2.0 * p_ec) * (1.0 - signal))
    return np.minimum(detection_prob(mu, p_d, p_ec, p_ap), raw)


def accumulate_window(
    geom: OverpassGeometry,
    link: LinkModel,
    params: ProtocolParams,
    err: ErrorModel,
    half_width_s: float | None = None,
    rng: np.random.Generator | None = None,
) -> BlockTallies:
    """Integrate expected tallies over the transmission window |t| <= half_width_s.

    half_width_s=None uses the full visible pass. Passing an rng switches to
    Poisson-sampled integer tallies with the deterministic values as means.
    """
    if geom.n_samples == 0:
        return BlockTallies()
    if half_width_s is None:
        elev = geom.elevations_deg
    else:
        if half_width_s < 0:
            raise ValueError("half_width_s must be non-negative")
        if half_width_s == 0:
            return BlockTallies()
        elev = geom.elevations_deg[geom.window_mask(half_width_s)]
    if elev.size == 0:
        return BlockTallies()

    p_d = link.transmittance(elev)
    mu = np.asarray(params.mu)
    # (intensity, time) grids summed over time.
    d_sum = detection_prob(mu, p_d, link.p_ec, link.p_ap).sum(axis=1)
    e_sum = error_prob(mu, p_d, link.p_ec, link.p_ap, err.intrinsic_qber).sum(axis=1)

    pulses = params.source_rate_hz * geom.time_step_s * np.asarray(params.p_mu)
    n_sent = pulses * elev.size
    tallies = BlockTallies(
        n_sent=n_sent,
        n_x=pulses * params.sift_x * d_sum,
        n_z=pulses * params.sift_z * d_sum,
        m_x=pulses * params.sift_x * e_sum,
        m_z=pulses * params.sift_z * e_sum,
    )
    if rng is not None:
        n_x = rng.poisson(tallies.n_x).astype(float)
        n_z = rng.poisson(tallies.n_z).astype(float)
        frac_x = np.divide(tallies.m_x, tallies.n_x, out=np.zeros(3), where=tallies.n_x > 0)
        frac_z = np.divide(tallies.m_z, tallies.n_z, out=np.zeros(3), where=tallies.n_z > 0)
        tallies = BlockTallies(
            n_sent=np.round(tallies.n_sent),
            n_x=n_x,
            n_z=n_z,
            m_x=rng.binomial(n_x.astype(int), np.clip(frac_x, 0, 1)).astype(float),
            m_z=rng.binomial(n_z.astype(int), np.clip(frac_z, 0, 1)).astype(float),
        )
    return tallies


def aggregate(tallies_list, params_list=None) -> BlockTallies:
    """Component-wise sum of tallies from disjoint windows or passes.

    If per-block protocol params are supplied they must all match; mixing
    blocks taken with different source settings is rejected.
    """
    tallies_list = list(tallies_list)
    if not tallies_list:
        raise ValueError("aggregate needs at least one tally block")
    if params_list is not None:
        params_list = list(params_list)
        if len(params_list) != len(tallies_list):
            raise ValueError("params_list length must match tallies_list")
        if any(p != params_list[0] for p in params_list[1:]):
            raise ValueError("cannot aggregate blocks with different protocol params")
    total = tallies_list[0]
    for t in tallies_list[1:]:
        total = total + t
    return total
