"""Brute-force grid verifier for tiny instances.

Enumerates the budget split, the power simplex of each subchannel, and the
pooled common-rate total on regular grids, applying every original-problem
constraint as a vectorized mask. Intended for U <= 3; the zero-threshold
case decomposes per subchannel and stays fast at density 50, while positive
minimum rates force a pairwise scan and are only practical at low density.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .rates import Allocation, check_feasibility
from .scenario import ChannelRealization, Mode, ScenarioConfig

ORACLE_MAX_USERS = 3


@dataclass(frozen=True)
class OracleResult:
    alloc: Allocation | None
    objective: float

    @property
    def feasible(self) -> bool:
        return self.alloc is not None


def _compositions(density: int, dims: int) -> np.ndarray:
    """Integer grids with non-negative entries summing to at most density."""
    if dims == 1:
        return np.arange(density + 1, dtype=float)[:, None]
    blocks = []
    for head in range(density + 1):
        rest = _compositions(density - head, dims - 1)
        blocks.append(np.column_stack([np.full(len(rest), float(head)), rest]))
    return np.vstack(blocks)


def _noma_candidates(budget, density, ch, config):
    """(powers, per-user rates, SIC mask) over the NOMA simplex grid."""
    u = config.num_users
    p = _compositions(density, u) * (budget / density) if budget > 0 else np.zeros((1, u))
    cum = np.cumsum(p, axis=1)
    interf = cum - p
    rates = np.log2((cum + ch.a_noma) / (interf + ch.a_noma))
    mask = np.ones(len(p), dtype=bool)
    for k in range(1, u):
        mask &= p[:, k] - interf[:, k] >= config.p_tol_w * ch.a_noma[k - 1]
    return p, rates, mask


def _rsma_candidates(budget, density, ch, config):
    """(private powers, common power, private rates, pooled-rate cap, SIC mask)."""
    u = config.num_users
    if budget > 0:
        grid = _compositions(density, u + 1) * (budget / density)
    else:
        grid = np.zeros((1, u + 1))
    p_private, p_common = grid[:, :u], grid[:, u]
    total = np.sum(p_private, axis=1)
    rates = np.log2(1.0 + p_private / (total[:, None] - p_private + ch.a_rsma))
    caps = np.log2(1.0 + p_common[:, None] / (total[:, None] + ch.a_rsma))
    cap_min = np.min(caps, axis=1)
    mask = p_common - total >= config.p_tol_w * float(np.max(ch.a_rsma))
    return p_private, p_common, rates, cap_min, mask


def grid_search(config: ScenarioConfig, ch: ChannelRealization,
                mode: Mode | None = None, grid_density: int = 50) -> OracleResult:
    """Best feasible gridded allocation and its exact objective.

    The pooled common total is assigned entirely to the user with the
    largest RSMA weight; the objective is linear in the shares with one
    pooled cap, so this greedy split is optimal for any pooled total.
    """
    mode = Mode(mode) if mode is not None else config.mode
    config = replace(config, mode=mode)
    if config.num_users > ORACLE_MAX_USERS:
        raise ValueError(f"oracle supports at most {ORACLE_MAX_USERS} users")
    u = config.num_users
    wn, wr = config.weights_noma, config.weights_rsma
    top = int(np.argmax(wr))
    betas = {Mode.HYBRID: np.linspace(0.0, 1.0, grid_density + 1),
             Mode.NOMA_ONLY: np.array([1.0]),
             Mode.RSMA_ONLY: np.array([0.0])}[mode]
    qos_free = bool(np.all(config.r_th == 0.0))

    best_value = -np.inf
    best = None
    for beta in betas:
        if mode is not Mode.RSMA_ONLY:
            pn, rn, mask_n = _noma_candidates(beta * config.p_max_w, grid_density, ch, config)
        else:
            pn, rn, mask_n = np.zeros((1, u)), np.zeros((1, u)), np.ones(1, dtype=bool)
        if mode is not Mode.NOMA_ONLY:
            pp, pc, rp, cap_min, mask_r = _rsma_candidates(
                (1.0 - beta) * config.p_max_w, grid_density, ch, config)
        else:
            pp, pc, rp = np.zeros((1, u)), np.zeros(1), np.zeros((1, u))
            cap_min, mask_r = np.zeros(1), np.ones(1, dtype=bool)
        if not (np.any(mask_n) and np.any(mask_r)):
            continue

        if qos_free:
            vn = wn @ rn.T
            vn[~mask_n] = -np.inf
            i = int(np.argmax(vn))
            vr = wr @ rp.T + wr[top] * cap_min
            vr[~mask_r] = -np.inf
            j = int(np.argmax(vr))
            value = vn[i] + vr[j]
            if value > best_value:
                best_value = value
                best = (beta, pn[i], pp[j], float(pc[j]), float(cap_min[j]))
        else:
            vr_base = wr @ rp.T
            for i in np.flatnonzero(mask_n):
                totals = rn[i] + rp  # (N_r, u) rate before common shares
                ok = mask_r.copy()
                for k in range(u):
                    if k == top:
                        ok &= totals[:, k] + cap_min >= config.r_th[k]
                    else:
                        ok &= totals[:, k] >= config.r_th[k]
                if not np.any(ok):
                    continue
                value = wn @ rn[i] + vr_base + wr[top] * cap_min
                value[~ok] = -np.inf
                j = int(np.argmax(value))
                if value[j] > best_value:
                    best_value = float(value[j])
                    best = (beta, pn[i], pp[j], float(pc[j]), float(cap_min[j]))

    if best is None:
        return OracleResult(alloc=None, objective=-np.inf)
    beta, p_noma, p_private, p_common, c_total = best
    c = np.zeros(u)
    c[top] = c_total
    lam = np.sum(p_private) + ch.a_rsma
    gamma = p_common / lam
    alloc = Allocation(p_noma=p_noma.copy(), p_private=p_private.copy(),
                       p_common=p_common, c=c, beta=float(beta),
                       gamma_slack=gamma, lambda_slack=lam)
    return OracleResult(alloc=alloc, objective=float(best_value))


def verify(report, oracle_value: float, rel_tol: float = 0.03) -> bool:
    """Pass when the iterative result is feasible and within ``rel_tol`` of
    (or above) the gridded reference value."""
    if report.final_alloc is None:
        return False
    if check_feasibility(report.config, report.channel, report.final_alloc, tol=1e-6):
        return False
    return report.objective >= oracle_value * (1.0 - rel_tol)
