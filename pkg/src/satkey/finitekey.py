"""Finite-block secret key lengths for two-decoy BB84.

Pipeline: multiplicative-Chernoff corrections relate observed tallies to
expectation bounds, two-decoy linear programs bound the vacuum and
single-photon yields and the phase error rate, a binomial-quantile estimate
bounds the error-correction leakage, and the composable key length follows as

    ell = floor(s_X0 + s_X1 (1 - h(phi_X)) - lambda_EC
                - 6 log2(n_ch/eps_s) - log2(2/eps_c))

clamped at zero. The block-asymptotic variant drops all finite corrections.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, field

import numpy as np
from scipy import optimize as sciopt
from scipy import stats
from scipy.special import ndtri

from .counts import STANDARD, BlockTallies, ProtocolParams

# Exact binomial quantile above this block size is replaced by a
# continuity-corrected normal quantile.
_BINOM_EXACT_LIMIT = 1e7

# Asymptotic error-correction inefficiency factor.
F_EC_ASYMPTOTIC = 1.16


@dataclass(frozen=True)
class SecurityParams:
    """Composable security budget and its split across concentration bounds."""

    eps_c: float = 1e-15
    eps_s: float = 1e-9
    n_chernoff: int = 21

    def __post_init__(self):
        if not 0 < self.eps_c < 1 or not 0 < self.eps_s < 1:
            raise ValueError("eps_c and eps_s must lie in (0, 1)")
        if self.n_chernoff < 1:
            raise ValueError("n_chernoff must be >= 1")

    @property
    def eps_per_bound(self) -> float:
        return self.eps_s / self.n_chernoff

    @property
    def overhead_bits(self) -> float:
        return 6.0 * math.log2(self.n_chernoff / self.eps_s) + math.log2(2.0 / self.eps_c)


@dataclass
class SklResult:
    """Secret key length with all intermediate bounds kept for audit."""

    ell: int
    ell_exact: float
    ell_raw: float
    s_x0: float
    s_x1: float
    s_z1: float
    v_z1: float
    phi_x: float
    lambda_ec: float
    qber: float
    n_x_total: float
    n_plus: list = field(default_factory=list)
    n_minus: list = field(default_factory=list)
    m_plus: list = field(default_factory=list)
    m_minus: list = field(default_factory=list)
    f_pe: float | None = None

    def to_json(self, path=None):
        payload = asdict(self)
        if path is None:
            return json.dumps(payload)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)


def binary_entropy(x) -> float:
    """Binary entropy h(x) in bits, with h(0) = h(1) = 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("binary_entropy argument must lie in [0, 1]")
    out = np.zeros_like(x)
    inner = (x > 0) & (x < 1)
    xi = x[inner]
    out[inner] = -xi * np.log2(xi) - (1 - xi) * np.log2(1 - xi)
    return float(out) if out.ndim == 0 else out


def chernoff_delta(y: float, eps: float) -> tuple[float, float]:
    """Upper/lower multiplicative-Chernoff deviations for an observed count y."""
    if y < 0:
        raise ValueError("observed count must be non-negative")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    beta = math.log(1.0 / eps)
    plus = beta + math.sqrt(2.0 * beta * y + beta**2)
    minus = 0.5 * beta + math.sqrt(2.0 * beta * y + 0.25 * beta**2)
    return plus, minus


@dataclass
class CorrectedTallies:
    """Expectation bounds (e^mu_k / p_k) [y +- delta] per basis and intensity."""

    n_x_plus: np.ndarray
    n_x_minus: np.ndarray
    n_z_plus: np.ndarray
    n_z_minus: np.ndarray
    m_x_plus: np.ndarray
    m_x_minus: np.ndarray
    m_z_plus: np.ndarray
    m_z_minus: np.ndarray
    n_x_total: float
    n_z_total: float


def corrected_tallies(
    tallies: BlockTallies,
    params: ProtocolParams,
    eps: float,
    asymptotic: bool = False,
) -> CorrectedTallies:
    """Chernoff-corrected, probability-renormalised per-intensity tallies.

    asymptotic=True switches all deviations off, leaving the pure
    e^mu_k / p_k rescaling.
    """
    gamma_k = np.exp(np.asarray(params.mu)) / np.asarray(params.p_mu)

    def bounds(values):
        if asymptotic:
            base = gamma_k * values
            return base.copy(), base.copy()
        deltas = np.array([chernoff_delta(v, eps) for v in values])
        return gamma_k * (values + deltas[:, 0]), gamma_k * (values - deltas[:, 1])

    n_x_p, n_x_m = bounds(tallies.n_x)
    n_z_p, n_z_m = bounds(tallies.n_z)
    m_x_p, m_x_m = bounds(tallies.m_x)
    m_z_p, m_z_m = bounds(tallies.m_z)
    return CorrectedTallies(
        n_x_plus=n_x_p,
        n_x_minus=n_x_m,
        n_z_plus=n_z_p,
        n_z_minus=n_z_m,
        m_x_plus=m_x_p,
        m_x_minus=m_x_m,
        m_z_plus=m_z_p,
        m_z_minus=m_z_m,
        n_x_total=tallies.n_x_total,
        n_z_total=tallies.n_z_total,
    )


def tau_n(params: ProtocolParams, n: int) -> float:
    """Probability that the source emits an n-photon pulse."""
    mu = np.asarray(params.mu)
    p = np.asarray(params.p_mu)
    return float(np.sum(p * np.exp(-mu) * mu**n) / math.factorial(n))


def _sampling_correction(eps: float, ratio: float, n_test: float, n_key: float) -> float:
    """Random-sampling-without-replacement penalty on the phase error rate.

    Vanishes as both sample sizes grow and is monotone non-increasing in each.
    """
    if n_test <= 0 or n_key <= 0:
        return 1.0
    b = min(max(ratio, 0.0), 0.5)
    if b == 0.0:
        return 0.0
    pref = (n_test + n_key) * (1.0 - b) * b / (n_test * n_key * math.log(2.0))
    arg = (n_test + n_key) / (n_test * n_key * (1.0 - b) * b) / eps**2
    return math.sqrt(pref * math.log2(arg))


@dataclass
class DecoyEstimates:
    s_x0: float
    s_x1: float
    s_z0: float
    s_z1: float
    v_z1: float
    phi_x: float


def _yield_bounds(corr_plus, corr_minus, total, params):
    """Two-decoy lower bounds on vacuum and single-photon counts in one basis."""
    mu1, mu2, mu3 = params.mu
    t0 = tau_n(params, 0)
    t1 = tau_n(params, 1)
    s0 = t0 * (mu2 * corr_minus[2] - mu3 * corr_plus[1]) / (mu2 - mu3)
    s0 = min(max(s0, 0.0), total)
    s1 = (
        t1
        * mu1
        * (
            corr_minus[1]
            - corr_plus[2]
            - ((mu2**2 - mu3**2) / mu1**2) * (corr_plus[0] - s0 / t0)
        )
        / (mu1 * (mu2 - mu3) - mu2**2 + mu3**2)
    )
    s1 = min(max(s1, 0.0), max(total - s0, 0.0))
    return s0, s1


def decoy_estimates(
    corr: CorrectedTallies,
    params: ProtocolParams,
    eps: float,
    sampling_correction: bool = True,
) -> DecoyEstimates:
    """Vacuum/single-photon yield bounds and the phase error rate bound."""
    mu1, mu2, mu3 = params.mu
    t1 = tau_n(params, 1)

    s_x0, s_x1 = _yield_bounds(corr.n_x_plus, corr.n_x_minus, corr.n_x_total, params)
    s_z0, s_z1 = _yield_bounds(corr.n_z_plus, corr.n_z_minus, corr.n_z_total, params)

    v_z1 = t1 * (corr.m_z_plus[1] - corr.m_z_minus[2]) / (mu2 - mu3)
    v_z1 = min(max(v_z1, 0.0), s_z1) if s_z1 > 0 else 0.0

    if s_z1 <= 0 or s_x1 <= 0:
        phi_x = 1.0
    else:
        ratio = v_z1 / s_z1
        if sampling_correction:
            phi_x = ratio + _sampling_correction(eps, ratio, s_z1, s_x1)
        else:
            phi_x = ratio
        phi_x = min(max(phi_x, 0.0), 1.0)
    return DecoyEstimates(s_x0=s_x0, s_x1=s_x1, s_z0=s_z0, s_z1=s_z1, v_z1=v_z1, phi_x=phi_x)


def binomial_quantile(eps: float, n: float, p: float) -> float:
    """Smallest integer m with Binomial(n, p) CDF(m) >= eps.

    Exact (scipy) up to _BINOM_EXACT_LIMIT trials, continuity-corrected normal
    quantile beyond.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if n < 1 or not 0 < p < 1:
        raise ValueError("need n >= 1 and p in (0, 1)")
    if n <= _BINOM_EXACT_LIMIT:
        return float(stats.binom.ppf(eps, int(round(n)), p))
    mean = n * p
    sd = math.sqrt(n * p * (1.0 - p))
    return float(math.ceil(mean + ndtri(eps) * sd - 0.5))


def lambda_ec(n_x: float, q: float, eps_c: float) -> float:
    """Error-correction leakage estimate for a block of size n_x at QBER q."""
    if n_x < 1:
        raise ValueError("n_x must be >= 1")
    if not 0 < q < 0.5:
        raise ValueError("q must lie in (0, 0.5)")
    log_ratio = math.log2((1.0 - q) / q)
    quantile = binomial_quantile(eps_c, n_x, 1.0 - q)
    value = (
        n_x * binary_entropy(q)
        + n_x * (1.0 - q) * log_ratio
        - (quantile - 1.0) * log_ratio
        - 0.5 * math.log2(n_x)
        - math.log2(1.0 / eps_c)
    )
    return max(value, 0.0)


def _single_photon_credit(phi: float) -> float:
    """Distillable fraction 1 - h(phi) of single-photon events.

    A phase error bound at or beyond 1/2 carries no extractable secrecy, so
    the credit is zero there rather than following h back down.
    """
    if phi >= 0.5:
        return 0.0
    return 1.0 - binary_entropy(phi)


def _floor_qber(m_total: float, n_total: float) -> float:
    """Block QBER with the zero-observed-error floor at one error per block."""
    if n_total <= 0:
        return 0.0
    q = m_total / n_total
    return max(q, 1.0 / n_total)


def _skl_pipeline(
    key_n: np.ndarray,
    key_m: np.ndarray,
    test_n: np.ndarray,
    test_m: np.ndarray,
    params: ProtocolParams,
    sec: SecurityParams,
) -> SklResult:
    """Finite key length with `key` tallies distilled and `test` tallies
    bounding the phase error."""
    tallies = BlockTallies(n_x=key_n, m_x=key_m, n_z=test_n, m_z=test_m)
    n_key_total = tallies.n_x_total
    if n_key_total < 1:
        return SklResult(
            ell=0, ell_exact=0.0, ell_raw=-sec.overhead_bits, s_x0=0.0, s_x1=0.0,
            s_z1=0.0, v_z1=0.0, phi_x=1.0, lambda_ec=0.0, qber=0.0,
            n_x_total=n_key_total,
        )
    eps = sec.eps_per_bound
    corr = corrected_tallies(tallies, params, eps)
    est = decoy_estimates(corr, params, eps)
    q = _floor_qber(float(key_m.sum()), n_key_total)
    lam = lambda_ec(n_key_total, q, sec.eps_c)
    raw = est.s_x0 + est.s_x1 * _single_photon_credit(est.phi_x) - lam - sec.overhead_bits
    ell_exact = max(raw, 0.0)
    return SklResult(
        ell=int(math.floor(ell_exact)),
        ell_exact=ell_exact,
        ell_raw=raw,
        s_x0=est.s_x0,
        s_x1=est.s_x1,
        s_z1=est.s_z1,
        v_z1=est.v_z1,
        phi_x=est.phi_x,
        lambda_ec=lam,
        qber=q,
        n_x_total=n_key_total,
        n_plus=list(corr.n_x_plus),
        n_minus=list(corr.n_x_minus),
        m_plus=list(corr.m_x_plus),
        m_minus=list(corr.m_x_minus),
    )


def skl_finite(tallies: BlockTallies, params: ProtocolParams, sec: SecurityParams) -> SklResult:
    """Composably-secure finite key length for the efficient protocol.

    The X basis is distilled into key; the announced Z basis bounds the
    phase error.
    """
    return _skl_pipeline(tallies.n_x, tallies.m_x, tallies.n_z, tallies.m_z, params, sec)


def skl_asymptotic(
    tallies: BlockTallies, params: ProtocolParams, floor: bool = True
) -> float:
    """Block-asymptotic key length: deviations and composable overhead off,
    leakage at F_EC_ASYMPTOTIC * n_X h(Q)."""
    n_x_total = tallies.n_x_total
    if n_x_total <= 0:
        return 0.0
    corr = corrected_tallies(tallies, params, eps=0.5, asymptotic=True)
    est = decoy_estimates(corr, params, eps=0.5, sampling_correction=False)
    q = tallies.qber_x
    lam = F_EC_ASYMPTOTIC * n_x_total * binary_entropy(q)
    raw = est.s_x0 + est.s_x1 * _single_photon_credit(est.phi_x) - lam
    value = max(raw, 0.0)
    return float(math.floor(value)) if floor else value


def skl_standard_bb84(
    tallies: BlockTallies,
    params: ProtocolParams,
    sec: SecurityParams,
    f_pe: float | None = None,
) -> SklResult:
    """Finite key length for symmetric-basis BB84.

    Both bases produce key. A disclosed fraction f_pe of each basis's sifted
    results feeds parameter estimation for the opposite basis; the remainder
    is distilled with the usual machinery and the two key lengths summed.
    f_pe=None optimises the fraction.
    """
    if params.variant != STANDARD:
        raise ValueError("skl_standard_bb84 requires the standard-BB84 variant")

    def evaluate(f: float) -> tuple[SklResult, SklResult]:
        keep = 1.0 - f
        res_x = _skl_pipeline(
            tallies.n_x * keep, tallies.m_x * keep,
            tallies.n_z * f, tallies.m_z * f,
            params, sec,
        )
        res_z = _skl_pipeline(
            tallies.n_z * keep, tallies.m_z * keep,
            tallies.n_x * f, tallies.m_x * f,
            params, sec,
        )
        return res_x, res_z

    if f_pe is None:
        result = sciopt.minimize_scalar(
            lambda f: -sum(r.ell_raw for r in evaluate(f)),
            bounds=(1e-4, 1.0 - 1e-4), method="bounded", options={"xatol": 1e-3},
        )
        f_pe = float(result.x)
    elif not 0 <= f_pe <= 1:
        raise ValueError("f_pe must lie in [0, 1]")

    res_x, res_z = evaluate(f_pe)
    combined = res_x
    combined.ell = res_x.ell + res_z.ell
    combined.ell_exact = res_x.ell_exact + res_z.ell_exact
    combined.ell_raw = res_x.ell_raw + res_z.ell_raw
    combined.f_pe = f_pe
    return combined
