"""Iterative solve loop: initialization, subproblem sequence, stopping rule.

One run assembles the convex subproblem at the current iterate, solves it,
re-expands at the solution, and stops when the surrogate optimal value
improves by less than the configured accuracy or the iteration cap is hit.
A scenario whose minimum-rate constraints cannot be met (detected by a
feasibility-restoration pass) is reported as infeasible rather than failed.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .rates import Allocation, RateBreakdown, max_violation, rate_breakdown, weighted_sum_rate
from .scenario import ChannelRealization, Mode, ScenarioConfig
from .solver import SolveStatus, solve
from .transform import assemble_qos_phase1, assemble_subproblem

logger = logging.getLogger(__name__)

SOLVER_NEWTON_CAP = 4000


class RunStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER_REACHED = "max_iter_reached"
    INFEASIBLE_SCENARIO = "infeasible_scenario"
    SOLVER_FAILURE = "solver_failure"


class InfeasibleScenarioError(RuntimeError):
    """Raised when no allocation can satisfy the SIC families within budget."""


@dataclass
class SolveReport:
    status: RunStatus
    objective_trajectory: list[float]
    surrogate_trajectory: list[float]
    final_alloc: Allocation | None
    rates: RateBreakdown | None
    iterations: int
    wall_time_s: float
    config: ScenarioConfig
    channel: ChannelRealization

    @property
    def objective(self) -> float:
        return self.objective_trajectory[-1] if self.objective_trajectory else -np.inf


def _noma_start(budget: float, thresholds: np.ndarray, u: int) -> np.ndarray:
    """Geometric power split over ``0.95 * budget`` (weakest rank largest),
    repaired so every cancellation margin is met; falls back to the minimal
    threshold cascade scaled to fit the budget."""
    spend = 0.95 * budget
    p = spend * 2.0 ** np.arange(1, u + 1) / np.sum(2.0 ** np.arange(1, u + 1))
    for k in range(1, u):
        p[k] = max(p[k], np.sum(p[:k]) + thresholds[k - 1])
    if np.sum(p) <= budget:
        return p
    base = np.zeros(u)
    for k in range(1, u):
        base[k] = np.sum(base[:k]) + thresholds[k - 1]
    if np.sum(base) > budget:
        raise InfeasibleScenarioError("NOMA SIC thresholds exceed the subchannel budget")
    head = max(0.0, (spend - np.sum(base)) / 2.0 ** (u - 1))
    p = base.copy()
    p[0] = head
    for k in range(1, u):
        p[k] = np.sum(p[:k]) + thresholds[k - 1]
    if np.sum(p) > budget:
        p = base
    return p


def initialize(config: ScenarioConfig, ch: ChannelRealization) -> Allocation:
    """Construct a starting point satisfying the budget and SIC families.

    Minimum-rate constraints may still be violated here; the run loop
    repairs that separately.
    """
    u = config.num_users
    beta = {Mode.HYBRID: 0.5, Mode.NOMA_ONLY: 1.0, Mode.RSMA_ONLY: 0.0}[config.mode]
    p_max = config.p_max_w
    zeros = np.zeros(u)

    if config.mode is not Mode.RSMA_ONLY:
        p_noma = _noma_start(beta * p_max, config.p_tol_w * ch.a_noma, u)
    else:
        p_noma = zeros.copy()

    if config.mode is not Mode.NOMA_ONLY:
        budget = (1.0 - beta) * p_max
        need = config.p_tol_w * float(np.max(ch.a_rsma))
        if budget < need:
            raise InfeasibleScenarioError("RSMA SIC threshold exceeds the subchannel budget")
        p_common = max(0.7 * budget, need)
        total_private = max(0.0, min(0.3 * budget, budget - p_common, p_common - need))
        p_private = np.full(u, total_private / u)
        lam = total_private + ch.a_rsma
        gamma = p_common / lam
        c = np.full(u, 0.9 * float(np.min(np.log2(1.0 + gamma))) / u)
    else:
        p_common, p_private = 0.0, zeros.copy()
        lam, gamma, c = ch.a_rsma.copy(), zeros.copy(), zeros.copy()

    return Allocation(p_noma=p_noma, p_private=p_private, p_common=p_common,
                      c=c, beta=beta, gamma_slack=gamma, lambda_slack=lam)


def _restore_qos(config: ScenarioConfig, ch: ChannelRealization,
                 alloc: Allocation) -> Allocation | None:
    """Maximize the minimum rate slack; None when the optimum is negative."""
    spec, s_idx = assemble_qos_phase1(config, ch, alloc)
    x0 = np.append(spec.layout.from_allocation(alloc), -1.0)
    out = solve(spec.program, tol=1e-8, max_iter=SOLVER_NEWTON_CAP, x0=x0)
    if out.status is not SolveStatus.OPTIMAL:
        return None
    slack = float(out.x[s_idx])
    logger.debug("qos restoration slack=%.6g", slack)
    if slack < -1e-9:
        return None
    return spec.layout.to_allocation(out.x[:s_idx], ch)


def run(config: ScenarioConfig, ch: ChannelRealization, on_iterate=None) -> SolveReport:
    """Full iterative maximization for the configured mode.

    ``on_iterate(spec, outcome, alloc)``, when given, observes every accepted
    subproblem solution (used by verification harnesses).
    """
    t_start = time.perf_counter()
    surrogate: list[float] = []
    exact: list[float] = []

    def report(status, alloc, iterations):
        return SolveReport(
            status=status, objective_trajectory=exact, surrogate_trajectory=surrogate,
            final_alloc=alloc, rates=rate_breakdown(ch, alloc) if alloc is not None else None,
            iterations=iterations, wall_time_s=time.perf_counter() - t_start,
            config=config, channel=ch)

    try:
        alloc = initialize(config, ch)
    except InfeasibleScenarioError:
        return report(RunStatus.INFEASIBLE_SCENARIO, None, 0)

    prev_surrogate = weighted_sum_rate(config, ch, alloc)
    restored = False
    iterations = 0
    status = RunStatus.MAX_ITER_REACHED
    while iterations < config.l_max:
        spec = assemble_subproblem(config, ch, alloc)
        out = solve(spec.program, tol=config.solver_tol, max_iter=SOLVER_NEWTON_CAP,
                    x0=spec.layout.from_allocation(alloc))
        if out.status is not SolveStatus.OPTIMAL:
            if out.status is SolveStatus.INFEASIBLE and not restored:
                restored_alloc = _restore_qos(config, ch, alloc)
                if restored_alloc is None:
                    return report(RunStatus.INFEASIBLE_SCENARIO, None, iterations)
                alloc = restored_alloc
                restored = True
                continue
            return report(RunStatus.SOLVER_FAILURE, None, iterations)
        alloc = spec.layout.to_allocation(out.x, ch)
        iterations += 1
        if on_iterate is not None:
            on_iterate(spec, out, alloc)
        surrogate.append(float(out.objective_value))
        exact.append(weighted_sum_rate(config, ch, alloc))
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("iter=%d surrogate=%.9f exact=%.9f max_violation=%.3e",
                         iterations, surrogate[-1], exact[-1],
                         max_violation(config, ch, alloc))
        if surrogate[-1] - prev_surrogate < config.epsilon1:
            status = RunStatus.CONVERGED
            break
        prev_surrogate = surrogate[-1]
    return report(status, alloc, iterations)


def run_mode_suite(config: ScenarioConfig, ch: ChannelRealization) -> dict[Mode, SolveReport]:
    """Run all three access modes on the identical channel realization."""
    return {mode: run(replace(config, mode=mode), ch)
            for mode in (Mode.HYBRID, Mode.NOMA_ONLY, Mode.RSMA_ONLY)}
