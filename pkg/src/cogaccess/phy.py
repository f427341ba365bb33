"""Physical-layer closed forms.

Covers the three ingredients the access schemes consume:

* transmission rate when a slot of length T loses tau seconds to sensing,
* Rayleigh block-fading success probabilities for the primary and
  secondary links (complement of the outage probability), and
* the energy-detector ROC relating sensing time, false-alarm probability
  and misdetection probability, in threshold form and in both target
  forms (fixed P_FA or fixed P_MD).

All SNRs are linear here; dB conversion happens at the CLI boundary only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .mathcore import q_func, q_inv

__all__ = [
    "PhyParams",
    "SensingPoint",
    "LinkSuccess",
    "tx_rate",
    "secondary_success_prob",
    "primary_success_prob",
    "roc_from_threshold",
    "pfa_for_target_pmd",
    "pmd_for_target_pfa",
    "link_success",
    "gain_for_success_prob",
]

# tau/T is kept out of [1 - TAU_EDGE, 1]: at tau = T there is no
# transmission time left and every objective is identically zero.
TAU_EDGE = 1e-3


@dataclass(frozen=True)
class PhyParams:
    """Slot, detector and link parameters of the physical layer.

    b: bits per packet
    T: slot duration, seconds
    W: channel bandwidth, Hz
    f_s: detector sampling frequency, Hz
    gamma_sense: received primary SNR at the detector (linear)
    sigma_u2: detector noise variance
    gamma_s_sd: secondary-link SNR at unit channel gain (linear)
    sigma2_s_sd: mean secondary-link channel gain
    gamma_p_pd: primary-link SNR at unit channel gain (linear)
    sigma2_p_pd: mean primary-link channel gain
    """

    b: float
    T: float
    W: float
    f_s: float
    gamma_sense: float
    sigma_u2: float
    gamma_s_sd: float
    sigma2_s_sd: float
    gamma_p_pd: float
    sigma2_p_pd: float

    def __post_init__(self) -> None:
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0.0):
                raise DomainError(f"PhyParams.{name} must be a positive finite number, got {value!r}")
        if not math.isfinite(self.b / (self.T * self.W)):
            raise DomainError("PhyParams requires finite b/(T*W)")


@dataclass(frozen=True)
class SensingPoint:
    """One operating point of the detector: sensing time and its ROC pair.

    tau = 0 is the degenerate no-sensing point used by the S0 scheme; the
    scheme layer, not this module, assigns its effective probabilities.
    """

    tau: float
    p_fa: float
    p_md: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau) and self.tau >= 0.0):
            raise DomainError(f"SensingPoint.tau must be >= 0, got {self.tau!r}")
        for name in ("p_fa", "p_md"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 1.0):
                raise DomainError(f"SensingPoint.{name} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class LinkSuccess:
    """Success probabilities of the two links: Pr{no outage} per attempt.

    Doubles as a channel model in its own right: benchmark-style inputs
    give these probabilities directly instead of deriving them from
    PhyParams, in which case the secondary value is independent of tau.
    """

    p_bar_p_pd: float
    p_bar_s_sd: float

    def __post_init__(self) -> None:
        for name in ("p_bar_p_pd", "p_bar_s_sd"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 1.0):
                raise DomainError(f"LinkSuccess.{name} must be in [0, 1], got {value!r}")


def tx_rate(params: PhyParams, tau: float) -> float:
    """Transmission rate b/(T - tau) in bits/second; increasing in tau."""
    if not (0.0 <= tau < params.T):
        raise DomainError(f"tx_rate requires 0 <= tau < T={params.T!r}, got tau={tau!r}")
    return params.b / (params.T - tau)


def secondary_success_prob(params: PhyParams, tau: float) -> float:
    """Pr{secondary packet survives Rayleigh outage} with tau spent sensing.

    exp(-(2^(b/(T*W*(1 - tau/T))) - 1) / (gamma_s_sd * sigma2_s_sd));
    non-increasing in tau.  tau >= T leaves no transmission time and
    returns 0 (degenerate limit rather than an error, for sweep code).
    """
    if tau < 0.0:
        raise DomainError(f"sensing time must be >= 0, got {tau!r}")
    if tau >= params.T:
        return 0.0
    rate_ratio = params.b / (params.T * params.W * (1.0 - tau / params.T))
    if rate_ratio >= 1024.0:  # 2**rate_ratio overflows float64; outage is certain
        return 0.0
    return math.exp(-(2.0**rate_ratio - 1.0) / (params.gamma_s_sd * params.sigma2_s_sd))


def primary_success_prob(params: PhyParams) -> float:
    """Pr{primary packet survives Rayleigh outage}; full-slot transmission."""
    rate_ratio = params.b / (params.T * params.W)
    return math.exp(-(2.0**rate_ratio - 1.0) / (params.gamma_p_pd * params.sigma2_p_pd))


def roc_from_threshold(params: PhyParams, epsilon: float, tau: float) -> SensingPoint:
    """ROC point of the energy detector at detection threshold epsilon.

    p_fa = Q((eps/sigma_u2 - 1) * sqrt(tau*f_s))
    p_md = 1 - Q((eps/sigma_u2 - gamma - 1) * sqrt(tau*f_s / (2*gamma + 1)))
    """
    if tau <= 0.0:
        raise DomainError("roc_from_threshold needs tau > 0: the detector has no samples otherwise")
    if epsilon <= 0.0:
        raise DomainError(f"detection threshold must be > 0, got {epsilon!r}")
    samples = tau * params.f_s
    gamma = params.gamma_sense
    p_fa = q_func((epsilon / params.sigma_u2 - 1.0) * math.sqrt(samples))
    p_md = 1.0 - q_func((epsilon / params.sigma_u2 - gamma - 1.0) * math.sqrt(samples / (2.0 * gamma + 1.0)))
    return SensingPoint(tau=tau, p_fa=p_fa, p_md=p_md)


def pfa_for_target_pmd(params: PhyParams, p_md_target: float, tau: float) -> SensingPoint:
    """ROC point with the misdetection probability pinned to a target.

    p_fa = Q(sqrt(2*gamma + 1) * Qinv(1 - p_md) + sqrt(tau*f_s) * gamma);
    decreasing in tau, so longer sensing buys a lower false-alarm rate.
    """
    if tau <= 0.0:
        raise DomainError("pfa_for_target_pmd needs tau > 0")
    if not (0.0 < p_md_target < 1.0):
        raise DomainError(f"target p_md must be inside (0, 1), got {p_md_target!r}")
    gamma = params.gamma_sense
    arg = math.sqrt(2.0 * gamma + 1.0) * q_inv(1.0 - p_md_target) + math.sqrt(tau * params.f_s) * gamma
    return SensingPoint(tau=tau, p_fa=q_func(arg), p_md=p_md_target)


def pmd_for_target_pfa(params: PhyParams, p_fa_target: float, tau: float) -> SensingPoint:
    """ROC point with the false-alarm probability pinned to a target.

    p_md = 1 - Q((Qinv(p_fa) - sqrt(tau*f_s) * gamma) / sqrt(2*gamma + 1)).
    """
    if tau <= 0.0:
        raise DomainError("pmd_for_target_pfa needs tau > 0")
    if not (0.0 < p_fa_target < 1.0):
        raise DomainError(f"target p_fa must be inside (0, 1), got {p_fa_target!r}")
    gamma = params.gamma_sense
    arg = (q_inv(p_fa_target) - math.sqrt(tau * params.f_s) * gamma) / math.sqrt(2.0 * gamma + 1.0)
    return SensingPoint(tau=tau, p_fa=p_fa_target, p_md=1.0 - q_func(arg))


def link_success(channel: PhyParams | LinkSuccess, tau: float) -> LinkSuccess:
    """Success probabilities of both links when the secondary senses for tau.

    Accepts either full physical-layer parameters (probabilities computed
    from the outage formulas) or an already-resolved LinkSuccess pair
    (returned as-is; the secondary probability is then tau-independent).
    """
    if isinstance(channel, LinkSuccess):
        return channel
    return LinkSuccess(
        p_bar_p_pd=primary_success_prob(channel),
        p_bar_s_sd=secondary_success_prob(channel, tau),
    )


def gain_for_success_prob(target: float, rate_ratio: float) -> float:
    """SNR-gain product gamma*sigma2 making the success probability hit target.

    Inverts exp(-(2^rate_ratio - 1)/(gamma*sigma2)) = target; handy for
    building PhyParams that calibrate a link to a prescribed probability.
    """
    if not (0.0 < target < 1.0):
        raise DomainError(f"target success probability must be in (0, 1), got {target!r}")
    if rate_ratio <= 0.0:
        raise DomainError(f"rate_ratio must be > 0, got {rate_ratio!r}")
    return (2.0**rate_ratio - 1.0) / (-math.log(target))
