"""Exact rate expressions, SIC margins, objective, and feasibility checking.

Everything here evaluates the original (non-approximated) problem at a
candidate allocation. All functions are pure; user index ``k`` is 0-based
with rank 0 the strongest NOMA channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .scenario import ChannelRealization, Mode, ScenarioConfig

LN2 = np.log(2.0)


@dataclass(frozen=True)
class Allocation:
    """Full decision vector: NOMA powers, RSMA private/common powers, common
    rate shares, budget split, and the two slack families used by the convex
    subproblem."""

    p_noma: np.ndarray          # watts, per user
    p_private: np.ndarray       # watts, per user
    p_common: float             # watts
    c: np.ndarray               # bit/s/Hz, per user
    beta: float                 # NOMA share of the power budget, in [0, 1]
    gamma_slack: np.ndarray     # common-SINR slack, per user
    lambda_slack: np.ndarray    # interference-plus-noise slack, per user

    def __post_init__(self):
        for name in ("p_noma", "p_private", "c", "gamma_slack", "lambda_slack"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def zeros(cls, num_users: int, beta: float = 0.5) -> "Allocation":
        z = np.zeros(num_users)
        return cls(p_noma=z.copy(), p_private=z.copy(), p_common=0.0, c=z.copy(),
                   beta=beta, gamma_slack=z.copy(), lambda_slack=z.copy())

    @property
    def num_users(self) -> int:
        return self.p_noma.size


@dataclass(frozen=True)
class RateBreakdown:
    """Per-user exact rates of an evaluated allocation."""

    r_noma: np.ndarray
    r_private: np.ndarray
    r_common_cap: np.ndarray    # each user's capacity for the common stream
    r_total: np.ndarray         # r_noma + r_private + c


def noma_rates(ch: ChannelRealization, alloc: Allocation) -> np.ndarray:
    """Achievable NOMA rate per user; interference from stronger-ranked users."""
    p = alloc.p_noma
    interf = np.concatenate(([0.0], np.cumsum(p)[:-1]))
    return np.log2(1.0 + p / (interf + ch.a_noma))


def noma_rate(ch: ChannelRealization, alloc: Allocation, k: int) -> float:
    return float(noma_rates(ch, alloc)[k])


def rsma_common_caps(ch: ChannelRealization, alloc: Allocation) -> np.ndarray:
    """Rate at which each user can decode the common stream."""
    total_private = float(np.sum(alloc.p_private))
    return np.log2(1.0 + alloc.p_common / (total_private + ch.a_rsma))


def rsma_common_cap(ch: ChannelRealization, alloc: Allocation, k: int) -> float:
    return float(rsma_common_caps(ch, alloc)[k])


def rsma_private_rates(ch: ChannelRealization, alloc: Allocation) -> np.ndarray:
    """Private rate per user, other private signals treated as noise."""
    p = alloc.p_private
    interf = np.sum(p) - p
    return np.log2(1.0 + p / (interf + ch.a_rsma))


def rsma_private_rate(ch: ChannelRealization, alloc: Allocation, k: int) -> float:
    return float(rsma_private_rates(ch, alloc)[k])


def sic_margin_noma(ch: ChannelRealization, alloc: Allocation, k: int, p_tol_w: float) -> float:
    """SIC margin for NOMA user k >= 1 (0-based), literal SNR-scale form.

    Non-negative means satisfied. The channel factor is the one of user
    k-1, the receiver performing the cancellation.
    """
    if k < 1:
        raise ValueError("NOMA SIC applies to users ranked 1..U-1")
    d = ch.delta_noma[k - 1]
    return float(alloc.p_noma[k] * d - np.sum(alloc.p_noma[:k]) * d - p_tol_w)


def sic_margin_rsma(ch: ChannelRealization, alloc: Allocation, k: int, p_tol_w: float) -> float:
    """SIC margin for decoding the common stream at user k (SNR scale)."""
    d = ch.delta_rsma[k]
    return float(alloc.p_common * d - np.sum(alloc.p_private) * d - p_tol_w)


def rate_breakdown(ch: ChannelRealization, alloc: Allocation) -> RateBreakdown:
    rn = noma_rates(ch, alloc)
    rp = rsma_private_rates(ch, alloc)
    rc = rsma_common_caps(ch, alloc)
    return RateBreakdown(r_noma=rn, r_private=rp, r_common_cap=rc,
                         r_total=rn + rp + alloc.c)


def weighted_sum_rate(config: ScenarioConfig, ch: ChannelRealization, alloc: Allocation) -> float:
    """Objective of the original problem: NOMA rates weighted by the NOMA
    weights plus (private + common share) weighted by the RSMA weights."""
    rn = noma_rates(ch, alloc)
    rp = rsma_private_rates(ch, alloc)
    return float(config.weights_noma @ rn + config.weights_rsma @ (rp + alloc.c))


def dc_objective(config: ScenarioConfig, ch: ChannelRealization, alloc: Allocation) -> float:
    """Same objective regrouped as a difference of concave log terms.

    Kept as an independent route for testing the surrogate construction:
    must agree with ``weighted_sum_rate`` to machine precision.
    """
    p_n = alloc.p_noma
    cum = np.cumsum(p_n)
    direct_n = np.log2(cum + ch.a_noma)
    interf_n = np.log2(cum - p_n + ch.a_noma)
    total_p = np.sum(alloc.p_private)
    direct_r = np.log2(total_p + ch.a_rsma)
    interf_r = np.log2(total_p - alloc.p_private + ch.a_rsma)
    wn, wr = config.weights_noma, config.weights_rsma
    return float(wn @ direct_n - wn @ interf_n + wr @ direct_r - wr @ interf_r
                 + wr @ alloc.c)


@dataclass(frozen=True)
class Violation:
    """One violated constraint: family name, user index (if per-user), and
    the violation amount (positive, in the family's natural units)."""

    family: str
    index: int | None
    amount: float


def check_feasibility(config: ScenarioConfig, ch: ChannelRealization,
                      alloc: Allocation, tol: float = 1e-6) -> list[Violation]:
    """Evaluate every original-problem constraint; empty list iff feasible.

    SIC families are checked on the power-normalized margin
    ``p_k - interference - p_tol * a`` so that ``tol`` is meaningful in
    watts; the SNR-scale form multiplies everything by delta (up to ~1e10
    per watt), which would make any absolute tolerance vacuous.
    Subchannels disabled by the mode skip their SIC family.
    """
    u = config.num_users
    p_tol = config.p_tol_w
    out: list[Violation] = []

    def bad(family, index, amount):
        if amount > tol:
            out.append(Violation(family, index, float(amount)))

    for name, arr in (("p_noma", alloc.p_noma), ("p_private", alloc.p_private),
                      ("c", alloc.c)):
        for k in range(u):
            bad(f"nonneg_{name}", k, -arr[k])
    bad("nonneg_p_common", None, -alloc.p_common)
    bad("beta_range", None, -alloc.beta)
    bad("beta_range", None, alloc.beta - 1.0)

    bad("power_noma", None, np.sum(alloc.p_noma) - alloc.beta * config.p_max_w)
    bad("power_rsma", None,
        np.sum(alloc.p_private) + alloc.p_common - (1.0 - alloc.beta) * config.p_max_w)

    br = rate_breakdown(ch, alloc)
    c_total = np.sum(alloc.c)
    for k in range(u):
        bad("common_rate", k, c_total - br.r_common_cap[k])
        bad("qos", k, config.r_th[k] - br.r_total[k])

    if config.mode is not Mode.RSMA_ONLY:
        cum = np.cumsum(alloc.p_noma)
        for k in range(1, u):
            deficit = cum[k - 1] + p_tol * ch.a_noma[k - 1] - alloc.p_noma[k]
            bad("sic_noma", k, deficit)
    if config.mode is not Mode.NOMA_ONLY:
        total_p = np.sum(alloc.p_private)
        for k in range(u):
            bad("sic_rsma", k, total_p + p_tol * ch.a_rsma[k] - alloc.p_common)

    return out


def max_violation(config: ScenarioConfig, ch: ChannelRealization, alloc: Allocation) -> float:
    """Largest constraint violation of the original problem (0 if feasible)."""
    violations = check_feasibility(config, ch, alloc, tol=0.0)
    return max((v.amount for v in violations), default=0.0)
