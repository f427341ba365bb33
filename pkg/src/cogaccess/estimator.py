"""Inference of primary-side parameters from overheard ACK/NACK feedback.

A silent secondary can learn everything its access policy needs by
counting: with N listening slots, M feedback messages heard and A of them
ACKs, the ACK rate identifies the primary arrival rate (departure rate
equals arrival rate while the primary queue is stable), and A/M
identifies the primary link's success probability regardless of feedback
decoding errors (both counts are thinned by the same factor).

Two arrival-rate corrections for feedback erasures are provided under the
mode names "paper" and "unbiased": the former scales the heard-ACK rate
down by (1 - P_e), the latter divides it by (1 - P_e).  Dividing is the
consistent correction when A counts *heard* ACKs thinned independently
with probability P_e, so the unbiased mode is the default and is what the
consistency checks and the end-to-end flow use.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DomainError, InfeasibleError
from .optimizer import (
    default_b_s_grid,
    optimal_as_s0,
    optimal_as_s1,
    optimal_as_s2_given,
)
from .phy import SensingPoint
from .schemes import SchemeConfig, Variant, effective_sensing
from .sim import DRIFT_EPSILON, TERMINAL_FACTOR, SimConfig, SimMode, SimResult, run

__all__ = [
    "EstimatorMode",
    "FeedbackLog",
    "EstimationReport",
    "TwoPhaseReport",
    "MARGIN_SE_MULTIPLIER",
    "estimate",
    "recommend_margin",
    "learning_then_regular",
    "feedback_log_from_result",
    "feedback_log_from_trace_csv",
]

# The recommended protection margin is this many binomial standard errors
# of the arrival-rate estimate: the same envelope the consistency checks
# use as "maximum positive estimation error".
MARGIN_SE_MULTIPLIER = 4.0


class EstimatorMode(str, Enum):
    PAPER = "paper"
    UNBIASED = "unbiased"


@dataclass(frozen=True)
class FeedbackLog:
    """Counting summary of a learning phase: A ACKs heard out of M
    feedback messages heard over N slots."""

    N: int
    M: int
    A: int
    p_e_assumed: float = 0.0

    def __post_init__(self) -> None:
        if not (0 <= self.A <= self.M <= self.N):
            raise DomainError(
                f"feedback counts must satisfy 0 <= A <= M <= N, got A={self.A!r} M={self.M!r} N={self.N!r}"
            )
        if not (0.0 <= self.p_e_assumed < 1.0):
            raise DomainError(f"p_e_assumed must be in [0, 1), got {self.p_e_assumed!r}")


@dataclass(frozen=True)
class EstimationReport:
    lambda_p_est: float
    p_bar_p_pd_est: float | None
    mu_p_est: float | None
    p_nonempty_est: float
    lambda_p_se: float
    recommended_mu_pe: float
    estimator_mode: EstimatorMode
    link_estimate_available: bool


def estimate(log: FeedbackLog, mode: EstimatorMode = EstimatorMode.UNBIASED) -> EstimationReport:
    """Point estimates of (lambda_p, p_bar_p_pd, mu_p, Pr{Q_p > 0}).

    M = 0 leaves the link-quality estimate unavailable (flagged None, not
    fabricated); the arrival-rate estimate is still produced.
    """
    if log.N <= 0:
        raise DomainError("estimation needs at least one learning slot")
    mode = EstimatorMode(mode)
    pe = log.p_e_assumed
    ack_rate = log.A / log.N
    if mode is EstimatorMode.UNBIASED:
        lam = ack_rate / (1.0 - pe)
        lam_se = math.sqrt(ack_rate * (1.0 - ack_rate) / log.N) / (1.0 - pe)
    else:
        lam = ack_rate * (1.0 - pe)
        lam_se = math.sqrt(ack_rate * (1.0 - ack_rate) / log.N) * (1.0 - pe)
    lam = min(lam, 1.0)

    if log.M > 0:
        p_bar = log.A / log.M
        mu = p_bar
        available = True
    else:
        p_bar = None
        mu = None
        available = False

    if mu is not None and mu > 0.0:
        p_nonempty = min(lam / mu, 1.0)
    else:
        heard_rate = log.M / log.N
        if mode is EstimatorMode.UNBIASED:
            p_nonempty = min(heard_rate / (1.0 - pe), 1.0)
        else:
            p_nonempty = heard_rate * (1.0 - pe)

    return EstimationReport(
        lambda_p_est=lam,
        p_bar_p_pd_est=p_bar,
        mu_p_est=mu,
        p_nonempty_est=p_nonempty,
        lambda_p_se=lam_se,
        recommended_mu_pe=recommend_margin(MARGIN_SE_MULTIPLIER * lam_se),
        estimator_mode=mode,
        link_estimate_available=available,
    )


def recommend_margin(error_bound: float) -> float:
    """Minimal protection margin covering the given positive error bound."""
    if not (math.isfinite(error_bound) and error_bound >= 0.0):
        raise DomainError(f"error bound must be >= 0, got {error_bound!r}")
    return float(error_bound)


def feedback_log_from_result(result: SimResult, p_e_assumed: float = 0.0) -> FeedbackLog:
    counts = result.feedback_counts
    return FeedbackLog(N=counts.N, M=counts.M, A=counts.A, p_e_assumed=p_e_assumed)


def feedback_log_from_trace_csv(path: str, p_e_assumed: float = 0.0) -> FeedbackLog:
    """Rebuild the counting summary from an exported per-slot trace CSV."""
    n = m = a = 0
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            n += 1
            fb = row["feedback"]
            if fb == "ack":
                a += 1
                m += 1
            elif fb == "nack":
                m += 1
    return FeedbackLog(N=n, M=m, A=a, p_e_assumed=p_e_assumed)


_SILENT = SchemeConfig(
    variant=Variant.S0, a_s=0.0, b_s=0.0, sensing=SensingPoint(tau=0.0, p_fa=0.0, p_md=1.0)
)


@dataclass(frozen=True)
class TwoPhaseReport:
    estimates: EstimationReport
    margin: float
    policy: SchemeConfig
    fallback_silent: bool
    rp_result: SimResult
    primary_stable: bool
    primary_drift: float
    secondary_throughput: float


def _policy_from_estimates(
    template_scheme: SchemeConfig,
    lam_est: float,
    p_bar_est: float,
    margin: float,
    b_s_grid: tuple[float, ...],
) -> SchemeConfig:
    """Access probabilities the secondary would deploy given its estimates."""
    p_fa, p_md = effective_sensing(template_scheme)
    variant = template_scheme.variant
    lam_est = min(max(lam_est, 0.0), 1.0)
    if variant is Variant.SC:
        if lam_est + margin > p_bar_est * (1.0 - p_md):
            raise InfeasibleError("estimated load leaves no room for conventional sensing access")
        return template_scheme
    if variant is Variant.S1:
        a = optimal_as_s1(lam_est, p_md, p_bar_est, margin=margin)
        return replace(template_scheme, a_s=a, b_s=0.0)
    if variant is Variant.S0:
        a = optimal_as_s0(lam_est, p_bar_est, margin=margin)
        return replace(template_scheme, a_s=a, b_s=0.0)
    # S2: scan b_s, a_s closed-form per cell
    best: tuple[float, float, float] | None = None
    for b in b_s_grid:
        try:
            a = optimal_as_s2_given(b, lam_est, p_md, p_fa, p_bar_est, margin=margin)
        except InfeasibleError:
            continue
        mu_p = p_bar_est * (p_md * (1.0 - a) + (1.0 - p_md) * (1.0 - b))
        factor = 1.0 if lam_est == 0.0 else max(0.0, 1.0 - lam_est / mu_p) if mu_p > 0 else 0.0
        value = (a * (1.0 - p_fa) + b * p_fa) * factor
        if best is None or value > best[0]:
            best = (value, a, b)
    if best is None:
        raise InfeasibleError("no feasible (a_s, b_s) cell under the estimated load")
    return replace(template_scheme, a_s=best[1], b_s=best[2])


def learning_then_regular(
    lp_slots: int,
    rp_slots: int,
    template: SimConfig,
    mode: EstimatorMode = EstimatorMode.UNBIASED,
    margin: float | None = None,
    b_s_grid: tuple[float, ...] = (),
) -> TwoPhaseReport:
    """Listen-only learning phase, then a regular phase run with the
    estimated access policy.

    The learning phase runs the template system with a silent secondary
    for lp_slots; the regular phase (which must be at least 10x longer)
    deploys the policy computed from the estimates, tightened by `margin`
    (defaulting to the estimator's recommended protection).  An infeasible
    estimated problem falls back to the silent policy and is flagged.
    """
    if lp_slots < 1:
        raise DomainError("learning phase needs at least one slot")
    if rp_slots < 10 * lp_slots:
        raise DomainError("regular phase must be at least 10x the learning phase")

    lp_cfg = replace(
        template, slots=lp_slots, scheme=_SILENT, mode=SimMode.ORIGINAL, record_traces=False
    )
    lp_result = run(lp_cfg)
    log = feedback_log_from_result(lp_result, p_e_assumed=template.feedback_error)
    report = estimate(log, mode=mode)
    mu_pe = report.recommended_mu_pe if margin is None else recommend_margin(margin)

    fallback = False
    if report.link_estimate_available and report.p_bar_p_pd_est > 0.0:
        try:
            policy = _policy_from_estimates(
                template.scheme,
                report.lambda_p_est,
                report.p_bar_p_pd_est,
                mu_pe,
                b_s_grid or default_b_s_grid(),
            )
        except InfeasibleError:
            policy = _SILENT
            fallback = True
    else:
        policy = _SILENT
        fallback = True

    rp_cfg = replace(
        template, slots=rp_slots, scheme=policy, seed=template.seed + 1, record_traces=True
    )
    rp_result = run(rp_cfg)
    qp = rp_result.trace.qp.astype(np.float64)
    drift = float(np.polyfit(np.arange(rp_slots), qp, 1)[0])
    stable = bool(drift <= DRIFT_EPSILON and qp[-1] <= TERMINAL_FACTOR * math.sqrt(rp_slots))

    return TwoPhaseReport(
        estimates=report,
        margin=mu_pe,
        policy=policy,
        fallback_silent=fallback,
        rp_result=rp_result,
        primary_stable=stable,
        primary_drift=drift,
        secondary_throughput=rp_result.secondary_departures / rp_slots,
    )
