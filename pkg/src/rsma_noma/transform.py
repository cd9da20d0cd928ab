"""Builders for the convex inner-approximation subproblem at one iterate.

Each builder linearizes the subtracted concave log terms of the
difference-of-concave objective/constraints about the expansion point,
yielding a program the solver can handle: concave logs, affine rows, and one
convex-quadratic row family for the common-power slack coupling. Interference
rows are emitted in power scale (divided by the channel SNR factor) so all
row coefficients stay O(1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rates import LN2, Allocation
from .scenario import ChannelRealization, Mode, ScenarioConfig
from .solver import ConvexProgram, LinearRow, LogRow, LogTerm, QuadRow


@dataclass(frozen=True)
class ExpansionPoint:
    """Allocation snapshot the Taylor expansions are taken about."""

    alloc: Allocation

    def validate(self, ch: ChannelRealization) -> None:
        if np.any(noma_interference(ch, self.alloc) <= 0.0):
            raise ValueError("non-positive NOMA interference denominator at expansion point")
        if np.any(rsma_interference(ch, self.alloc) <= 0.0):
            raise ValueError("non-positive RSMA interference denominator at expansion point")


def noma_interference(ch: ChannelRealization, alloc: Allocation) -> np.ndarray:
    """Per-user ``sum_{j<k} p_j^N + a_k`` (watts)."""
    cum = np.cumsum(alloc.p_noma)
    return cum - alloc.p_noma + ch.a_noma


def rsma_interference(ch: ChannelRealization, alloc: Allocation) -> np.ndarray:
    """Per-user ``sum_{j!=k} p_j^P + a_k`` (watts)."""
    return np.sum(alloc.p_private) - alloc.p_private + ch.a_rsma


@dataclass(frozen=True)
class VariableLayout:
    """Index map between subproblem variables and Allocation fields."""

    mode: Mode
    num_users: int
    p_noma: slice | None
    p_private: slice | None
    p_common: int | None
    c: slice | None
    gamma: slice | None
    lam: slice | None
    beta: int | None
    fixed_beta: float
    n: int

    @classmethod
    def for_mode(cls, mode: Mode, num_users: int) -> "VariableLayout":
        u = num_users
        if mode is Mode.HYBRID:
            return cls(mode, u, slice(0, u), slice(u, 2 * u), 2 * u,
                       slice(2 * u + 1, 3 * u + 1), slice(3 * u + 1, 4 * u + 1),
                       slice(4 * u + 1, 5 * u + 1), 5 * u + 1, np.nan, 5 * u + 2)
        if mode is Mode.NOMA_ONLY:
            return cls(mode, u, slice(0, u), None, None, None, None, None,
                       None, 1.0, u)
        return cls(mode, u, None, slice(0, u), u, slice(u + 1, 2 * u + 1),
                   slice(2 * u + 1, 3 * u + 1), slice(3 * u + 1, 4 * u + 1),
                   None, 0.0, 4 * u + 1)

    @property
    def has_noma(self) -> bool:
        return self.p_noma is not None

    @property
    def has_rsma(self) -> bool:
        return self.p_private is not None

    def from_allocation(self, alloc: Allocation) -> np.ndarray:
        x = np.zeros(self.n)
        if self.has_noma:
            x[self.p_noma] = alloc.p_noma
        if self.has_rsma:
            x[self.p_private] = alloc.p_private
            x[self.p_common] = alloc.p_common
            x[self.c] = alloc.c
            x[self.gamma] = alloc.gamma_slack
            x[self.lam] = alloc.lambda_slack
        if self.beta is not None:
            x[self.beta] = alloc.beta
        return x

    def to_allocation(self, x: np.ndarray, ch: ChannelRealization) -> Allocation:
        u = self.num_users
        z = np.zeros(u)
        if self.has_rsma:
            p_private = np.asarray(x[self.p_private], dtype=float)
            p_common = float(x[self.p_common])
            c = np.asarray(x[self.c], dtype=float)
            gamma = np.asarray(x[self.gamma], dtype=float)
            lam = np.asarray(x[self.lam], dtype=float)
        else:
            p_private, p_common, c, gamma = z.copy(), 0.0, z.copy(), z.copy()
            lam = ch.a_rsma.copy()
        return Allocation(
            p_noma=np.asarray(x[self.p_noma], dtype=float) if self.has_noma else z.copy(),
            p_private=p_private, p_common=p_common, c=c,
            beta=float(x[self.beta]) if self.beta is not None else self.fixed_beta,
            gamma_slack=gamma, lambda_slack=lam)


@dataclass(frozen=True)
class SubproblemSpec:
    """One assembled convex subproblem plus its variable index map."""

    program: ConvexProgram
    layout: VariableLayout


def _unit(n: int, idx: int, value: float = 1.0) -> np.ndarray:
    v = np.zeros(n)
    v[idx] = value
    return v


def build_objective_lower_bound(config: ScenarioConfig, ch: ChannelRealization,
                                point: ExpansionPoint, layout: VariableLayout):
    """Concave surrogate objective: kept logs plus the tangent planes of the
    subtracted interference logs. Returns (log_terms, affine, offset)."""
    alloc = point.alloc
    u = config.num_users
    n = layout.n
    logs: list[LogTerm] = []
    affine = np.zeros(n)
    offset = 0.0

    if layout.has_noma:
        wn = config.weights_noma
        interf = noma_interference(ch, alloc)
        for k in range(u):
            coeffs = np.zeros(n)
            coeffs[layout.p_noma] = np.concatenate((np.ones(k + 1), np.zeros(u - k - 1)))
            logs.append(LogTerm(float(wn[k]), coeffs, float(ch.a_noma[k])))
        offset -= float(wn @ np.log2(interf))
        slope = wn / (LN2 * interf)          # per subtracted log
        grad = np.concatenate((np.cumsum(slope[::-1])[::-1][1:], [0.0]))
        affine[layout.p_noma] -= grad
        offset += float(grad @ alloc.p_noma)

    if layout.has_rsma:
        wr = config.weights_rsma
        interf = rsma_interference(ch, alloc)
        for k in range(u):
            coeffs = np.zeros(n)
            coeffs[layout.p_private] = 1.0
            logs.append(LogTerm(float(wr[k]), coeffs, float(ch.a_rsma[k])))
        offset -= float(wr @ np.log2(interf))
        slope = wr / (LN2 * interf)
        grad = np.sum(slope) - slope         # each p_j feeds every other user's log
        affine[layout.p_private] -= grad
        offset += float(grad @ alloc.p_private)
        affine[layout.c] += wr

    return logs, affine, offset


def build_qos_constraints(config: ScenarioConfig, ch: ChannelRealization,
                          point: ExpansionPoint, layout: VariableLayout) -> list[LogRow]:
    """Per-user minimum-rate rows: concave logs + affine >= threshold."""
    alloc = point.alloc
    u = config.num_users
    n = layout.n
    rows = []
    interf_n = noma_interference(ch, alloc) if layout.has_noma else None
    interf_r = rsma_interference(ch, alloc) if layout.has_rsma else None
    for k in range(u):
        logs = []
        rhs = np.zeros(n)
        rhs_offset = 0.0
        if layout.has_noma:
            coeffs = np.zeros(n)
            coeffs[layout.p_noma] = np.concatenate((np.ones(k + 1), np.zeros(u - k - 1)))
            logs.append(LogTerm(1.0, coeffs, float(ch.a_noma[k])))
            den = interf_n[k]
            rhs_offset -= np.log2(den)
            if k > 0:
                idx = np.arange(layout.p_noma.start, layout.p_noma.start + k)
                rhs[idx] -= 1.0 / (LN2 * den)
                rhs_offset += float(np.sum(alloc.p_noma[:k])) / (LN2 * den)
        if layout.has_rsma:
            coeffs = np.zeros(n)
            coeffs[layout.p_private] = 1.0
            logs.append(LogTerm(1.0, coeffs, float(ch.a_rsma[k])))
            den = interf_r[k]
            rhs_offset -= np.log2(den)
            idx = np.arange(layout.p_private.start, layout.p_private.stop)
            others = idx != layout.p_private.start + k
            rhs[idx[others]] -= 1.0 / (LN2 * den)
            rhs_offset += float(np.sum(alloc.p_private) - alloc.p_private[k]) / (LN2 * den)
            rhs[layout.c.start + k] += 1.0  # c_k counts toward the user's total rate
        rows.append(LogRow(np.zeros(n), float(config.r_th[k]), tuple(logs),
                           rhs, float(rhs_offset), name=f"qos_{k}"))
    return rows


def build_common_rate_constraints(config: ScenarioConfig, ch: ChannelRealization,
                                  point: ExpansionPoint, layout: VariableLayout):
    """Slack-reformulated common-rate coupling: pooled shares bounded by each
    user's log slack, slack lower bounds, and the linearized bilinear row
    tying common power to slack products."""
    alloc = point.alloc
    u = config.num_users
    n = layout.n
    log_rows, linear_rows, quad_rows = [], [], []
    csum = np.zeros(n)
    csum[layout.c] = 1.0
    for k in range(u):
        gcol = layout.gamma.start + k
        lcol = layout.lam.start + k
        log_rows.append(LogRow(csum, 0.0, (LogTerm(1.0, _unit(n, gcol), 1.0),),
                               np.zeros(n), 0.0, name=f"common_pool_{k}"))
        coeffs = np.zeros(n)
        coeffs[layout.p_private] = 1.0
        coeffs[lcol] = -1.0
        linear_rows.append(LinearRow(coeffs, float(ch.a_rsma[k]), name=f"lambda_floor_{k}"))
        et = float(alloc.lambda_slack[k] - alloc.gamma_slack[k])
        ucoeffs = np.zeros(n)
        ucoeffs[lcol] = 1.0
        ucoeffs[gcol] = 1.0
        vcoeffs = np.zeros(n)
        vcoeffs[lcol] = -0.5 * et
        vcoeffs[gcol] = 0.5 * et
        vcoeffs[layout.p_common] = -1.0
        quad_rows.append(QuadRow(ucoeffs, 0.0, vcoeffs, 0.25 * et * et,
                                 name=f"common_power_{k}"))
    return log_rows, linear_rows, quad_rows


def build_linear_constraints(config: ScenarioConfig, ch: ChannelRealization,
                             layout: VariableLayout) -> list[LinearRow]:
    """Budget split and both SIC families, all affine, power scale."""
    u = config.num_users
    n = layout.n
    p_max = config.p_max_w
    p_tol = config.p_tol_w
    rows = []
    if layout.has_noma:
        coeffs = np.zeros(n)
        coeffs[layout.p_noma] = 1.0
        offset = 0.0
        if layout.beta is not None:
            coeffs[layout.beta] = -p_max
        else:
            offset = -layout.fixed_beta * p_max
        rows.append(LinearRow(coeffs, offset, name="budget_noma"))
        for k in range(1, u):
            coeffs = np.zeros(n)
            coeffs[layout.p_noma] = np.concatenate((np.ones(k), [-1.0], np.zeros(u - k - 1)))
            rows.append(LinearRow(coeffs, p_tol * float(ch.a_noma[k - 1]), name=f"sic_noma_{k}"))
    if layout.has_rsma:
        coeffs = np.zeros(n)
        coeffs[layout.p_private] = 1.0
        coeffs[layout.p_common] = 1.0
        offset = -p_max
        if layout.beta is not None:
            coeffs[layout.beta] = p_max
        else:
            offset = -(1.0 - layout.fixed_beta) * p_max
        rows.append(LinearRow(coeffs, offset, name="budget_rsma"))
        for k in range(u):
            coeffs = np.zeros(n)
            coeffs[layout.p_private] = 1.0
            coeffs[layout.p_common] = -1.0
            rows.append(LinearRow(coeffs, p_tol * float(ch.a_rsma[k]), name=f"sic_rsma_{k}"))
    return rows


def assemble_subproblem(config: ScenarioConfig, ch: ChannelRealization,
                        point: ExpansionPoint | Allocation) -> SubproblemSpec:
    """Combine all builders into one solver-ready program for the config mode."""
    if isinstance(point, Allocation):
        point = ExpansionPoint(point)
    point.validate(ch)
    layout = VariableLayout.for_mode(config.mode, config.num_users)
    logs, affine, offset = build_objective_lower_bound(config, ch, point, layout)
    linear = build_linear_constraints(config, ch, layout)
    log_rows = build_qos_constraints(config, ch, point, layout)
    quad_rows = []
    if layout.has_rsma:
        pool_rows, floor_rows, quad_rows = build_common_rate_constraints(config, ch, point, layout)
        log_rows += pool_rows
        linear += floor_rows
    upper = np.full(layout.n, np.inf)
    if layout.beta is not None:
        upper[layout.beta] = 1.0
    program = ConvexProgram(n=layout.n, obj_affine=affine, obj_offset=offset,
                            obj_logs=logs, lower=np.zeros(layout.n), upper=upper,
                            linear_rows=linear, log_rows=log_rows, quad_rows=quad_rows)
    return SubproblemSpec(program=program, layout=layout)


def assemble_qos_phase1(config: ScenarioConfig, ch: ChannelRealization,
                        point: ExpansionPoint | Allocation):
    """Feasibility-restoration variant: maximize the minimum QoS slack subject
    to every other constraint. Returns (SubproblemSpec, slack index)."""
    base = assemble_subproblem(config, ch, point)
    prog, layout = base.program, base.layout
    n = prog.n
    s_idx = n

    def ext(v):
        return np.append(np.asarray(v, dtype=float), 0.0)

    linear = [LinearRow(ext(r.coeffs), r.offset, r.name) for r in prog.linear_rows]
    log_rows = []
    for row in prog.log_rows:
        lhs = ext(row.lhs_coeffs)
        if row.name.startswith("qos_"):
            lhs[s_idx] = 1.0
        log_rows.append(LogRow(lhs, row.lhs_offset,
                               tuple(LogTerm(t.weight, ext(t.coeffs), t.offset) for t in row.logs),
                               ext(row.rhs_coeffs), row.rhs_offset, row.name))
    quads = [QuadRow(ext(r.u_coeffs), r.u_offset, ext(r.v_coeffs), r.v_offset, r.name)
             for r in prog.quad_rows]
    rate_span = 60.0  # generous |slack| cap in bit/s/Hz
    program = ConvexProgram(n=n + 1, obj_affine=_unit(n + 1, s_idx),
                            obj_offset=0.0, obj_logs=[],
                            lower=np.append(prog.lower, -rate_span),
                            upper=np.append(prog.upper, rate_span),
                            linear_rows=linear, log_rows=log_rows, quad_rows=quads)
    return SubproblemSpec(program=program, layout=layout), s_idx
