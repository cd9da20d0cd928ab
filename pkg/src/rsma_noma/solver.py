"""Interior-point solver for one canonical concave-maximization form.

The canonical program maximizes ``affine + sum of weighted base-2 logs of
affine expressions`` subject to affine inequalities, rows of the form
``affine <= weighted logs + affine``, convex-quadratic rows
``0.25*u(x)^2 + v(x) <= 0``, and box bounds.

Implementation: a damped-Newton logarithmic-barrier method. Strict
feasibility is established by an epigraph phase (maximize the minimum
constraint slack); the program is declared infeasible when that optimum is
below -1e-7. Everything is dense numpy, deterministic, and sized for a few
dozen variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.optimize

LN2 = np.log(2.0)

FEAS_TOL = 1e-7             # declared-infeasible threshold on the max slack
INTERIOR_MARGIN = 1e-6      # early-exit slack for the feasibility phase


@dataclass(frozen=True)
class LogTerm:
    """``weight * log2(coeffs @ x + offset)``; weight must be >= 0."""

    weight: float
    coeffs: np.ndarray
    offset: float


@dataclass(frozen=True)
class LinearRow:
    """``coeffs @ x + offset <= 0``."""

    coeffs: np.ndarray
    offset: float
    name: str = ""


@dataclass(frozen=True)
class LogRow:
    """``lhs_coeffs @ x + lhs_offset <= sum of logs + rhs_coeffs @ x + rhs_offset``."""

    lhs_coeffs: np.ndarray
    lhs_offset: float
    logs: tuple[LogTerm, ...]
    rhs_coeffs: np.ndarray
    rhs_offset: float
    name: str = ""


@dataclass(frozen=True)
class QuadRow:
    """``0.25 * (u_coeffs @ x + u_offset)^2 + v_coeffs @ x + v_offset <= 0``."""

    u_coeffs: np.ndarray
    u_offset: float
    v_coeffs: np.ndarray
    v_offset: float
    name: str = ""


@dataclass
class ConvexProgram:
    """Canonical concave-maximization program over n variables.

    Bounds default to ``[0, +inf)`` per variable. Every log argument must be
    strictly positive at feasible points; the solver treats positivity as a
    domain constraint.
    """

    n: int
    obj_affine: np.ndarray
    obj_offset: float = 0.0
    obj_logs: list[LogTerm] = field(default_factory=list)
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    linear_rows: list[LinearRow] = field(default_factory=list)
    log_rows: list[LogRow] = field(default_factory=list)
    quad_rows: list[QuadRow] = field(default_factory=list)

    def __post_init__(self):
        self.obj_affine = np.asarray(self.obj_affine, dtype=float)
        if self.lower is None:
            self.lower = np.zeros(self.n)
        if self.upper is None:
            self.upper = np.full(self.n, np.inf)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        for term in self.obj_logs:
            if term.weight < 0.0:
                raise ValueError("objective log weights must be non-negative")

    @property
    def num_rows(self) -> int:
        return len(self.linear_rows) + len(self.log_rows) + len(self.quad_rows)


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolverOutcome:
    status: SolveStatus
    x: np.ndarray | None
    objective_value: float
    kkt_residual: float
    iterations: int


def constraint_violations(prog: ConvexProgram, x: np.ndarray) -> np.ndarray:
    """Violation amount of every row and bound, straight from the program data.

    Order: linear rows, log rows, quad rows, lower bounds, upper bounds.
    A non-positive entry means satisfied; log rows with a non-positive
    argument report +inf.
    """
    x = np.asarray(x, dtype=float)
    vals = []
    for row in prog.linear_rows:
        vals.append(row.coeffs @ x + row.offset)
    for row in prog.log_rows:
        g = row.lhs_coeffs @ x + row.lhs_offset - (row.rhs_coeffs @ x + row.rhs_offset)
        for term in row.logs:
            arg = term.coeffs @ x + term.offset
            if arg <= 0.0:
                g = np.inf
                break
            g -= term.weight * np.log2(arg)
        vals.append(g)
    for row in prog.quad_rows:
        u = row.u_coeffs @ x + row.u_offset
        vals.append(0.25 * u * u + row.v_coeffs @ x + row.v_offset)
    vals.extend(prog.lower - x)
    vals.extend(x - prog.upper)
    return np.asarray(vals, dtype=float)


def objective_value(prog: ConvexProgram, x: np.ndarray) -> float:
    """Evaluate the program objective at ``x`` (``-inf`` outside the log domain)."""
    x = np.asarray(x, dtype=float)
    val = float(prog.obj_affine @ x + prog.obj_offset)
    for term in prog.obj_logs:
        arg = term.coeffs @ x + term.offset
        if arg <= 0.0:
            return -np.inf
        val += term.weight * np.log2(arg)
    return val


def format_program(prog: ConvexProgram) -> str:
    """Plain-text canonical dump for external cross-checking."""

    def aff(coeffs, offset):
        parts = [f"{c:+.12g}*x{j}" for j, c in enumerate(coeffs) if c != 0.0]
        parts.append(f"{offset:+.12g}")
        return " ".join(parts)

    lines = [f"maximize over x[0..{prog.n - 1}]:"]
    obj = aff(prog.obj_affine, prog.obj_offset)
    for term in prog.obj_logs:
        obj += f" + {term.weight:.12g}*log2({aff(term.coeffs, term.offset)})"
    lines.append("  " + obj)
    lines.append("subject to:")
    for j in range(prog.n):
        lines.append(f"  {prog.lower[j]:.12g} <= x{j} <= {prog.upper[j]:.12g}")
    for row in prog.linear_rows:
        lines.append(f"  [{row.name}] {aff(row.coeffs, row.offset)} <= 0")
    for row in prog.log_rows:
        rhs = aff(row.rhs_coeffs, row.rhs_offset)
        for term in row.logs:
            rhs += f" + {term.weight:.12g}*log2({aff(term.coeffs, term.offset)})"
        lines.append(f"  [{row.name}] {aff(row.lhs_coeffs, row.lhs_offset)} <= {rhs}")
    for row in prog.quad_rows:
        lines.append(f"  [{row.name}] 0.25*({aff(row.u_coeffs, row.u_offset)})^2 "
                     f"+ {aff(row.v_coeffs, row.v_offset)} <= 0")
    return "\n".join(lines)


class _Compiled:
    """Dense stacked representation of a program for fast barrier evaluation."""

    def __init__(self, prog: ConvexProgram):
        n = prog.n
        self.n = n
        lin_c, lin_o = [], []
        for row in prog.linear_rows:
            lin_c.append(np.asarray(row.coeffs, dtype=float))
            lin_o.append(row.offset)
        for j in range(n):
            if np.isfinite(prog.lower[j]):
                e = np.zeros(n)
                e[j] = -1.0
                lin_c.append(e)
                lin_o.append(prog.lower[j])
            if np.isfinite(prog.upper[j]):
                e = np.zeros(n)
                e[j] = 1.0
                lin_c.append(e)
                lin_o.append(-prog.upper[j])
        self.G = np.asarray(lin_c, dtype=float).reshape(len(lin_c), n)
        self.h = np.asarray(lin_o, dtype=float)

        la, lb, lc, ld, lw, owner = [], [], [], [], [], []
        for i, row in enumerate(prog.log_rows):
            la.append(np.asarray(row.lhs_coeffs, dtype=float) - np.asarray(row.rhs_coeffs, dtype=float))
            lb.append(row.lhs_offset - row.rhs_offset)
            for term in row.logs:
                lc.append(np.asarray(term.coeffs, dtype=float))
                ld.append(term.offset)
                lw.append(term.weight)
                owner.append(i)
        self.A = np.asarray(la, dtype=float).reshape(len(la), n)
        self.b = np.asarray(lb, dtype=float)
        self.LC = np.asarray(lc, dtype=float).reshape(len(lc), n)
        self.Ld = np.asarray(ld, dtype=float)
        self.Lw = np.asarray(lw, dtype=float)
        self.Lowner = np.asarray(owner, dtype=int)

        self.QU = np.asarray([r.u_coeffs for r in prog.quad_rows], dtype=float).reshape(len(prog.quad_rows), n)
        self.qu0 = np.asarray([r.u_offset for r in prog.quad_rows], dtype=float)
        self.QV = np.asarray([r.v_coeffs for r in prog.quad_rows], dtype=float).reshape(len(prog.quad_rows), n)
        self.qv0 = np.asarray([r.v_offset for r in prog.quad_rows], dtype=float)

        self.c_obj = prog.obj_affine.copy()
        self.obj_offset = prog.obj_offset
        self.OC = np.asarray([t.coeffs for t in prog.obj_logs], dtype=float).reshape(len(prog.obj_logs), n)
        self.Od = np.asarray([t.offset for t in prog.obj_logs], dtype=float)
        self.Ow = np.asarray([t.weight for t in prog.obj_logs], dtype=float)

        self.m_lin = self.G.shape[0]
        self.m_log = self.A.shape[0]
        self.m_quad = self.QU.shape[0]
        self.m = self.m_lin + self.m_log + self.m_quad

    def obj_args(self, x):
        return self.OC @ x + self.Od if self.OC.size else np.empty(0)

    def objective(self, x):
        val = self.c_obj @ x + self.obj_offset
        if self.OC.size:
            args = self.obj_args(x)
            if np.any(args <= 0.0):
                return -np.inf
            val += self.Ow @ np.log2(args)
        return val

    def obj_grad(self, x):
        g = self.c_obj.copy()
        if self.OC.size:
            args = self.obj_args(x)
            g += (self.Ow / (LN2 * args)) @ self.OC
        return g

    def constraints(self, x):
        """Row values g_i(x); +inf where a log argument is non-positive."""
        parts = [self.G @ x + self.h] if self.m_lin else [np.empty(0)]
        if self.m_log:
            g = self.A @ x + self.b
            targ = self.LC @ x + self.Ld
            bad = targ <= 0.0
            safe = np.where(bad, 1.0, targ)
            contrib = self.Lw * np.log2(safe)
            g -= np.bincount(self.Lowner, weights=contrib, minlength=self.m_log)
            if np.any(bad):
                g[np.unique(self.Lowner[bad])] = np.inf
            parts.append(g)
        else:
            parts.append(np.empty(0))
        if self.m_quad:
            u = self.QU @ x + self.qu0
            parts.append(0.25 * u * u + self.QV @ x + self.qv0)
        else:
            parts.append(np.empty(0))
        return np.concatenate(parts)

    def constraint_grads(self, x):
        rows = [self.G] if self.m_lin else [np.empty((0, self.n))]
        if self.m_log:
            targ = self.LC @ x + self.Ld
            contrib = (self.Lw / (LN2 * targ))[:, None] * self.LC
            acc = np.zeros((self.m_log, self.n))
            np.add.at(acc, self.Lowner, contrib)
            rows.append(self.A - acc)
        else:
            rows.append(np.empty((0, self.n)))
        if self.m_quad:
            u = self.QU @ x + self.qu0
            rows.append(0.5 * u[:, None] * self.QU + self.QV)
        else:
            rows.append(np.empty((0, self.n)))
        return np.concatenate(rows, axis=0)

    def barrier_value(self, x, t):
        g = self.constraints(x)
        if np.any(g >= 0.0) or not np.all(np.isfinite(g)):
            return np.inf
        f = self.objective(x)
        if not np.isfinite(f):
            return np.inf
        return -t * f - np.sum(np.log(-g))

    def barrier_grad_jac(self, x, t):
        """Barrier gradient and a stack J with Hessian = J.T @ J.

        Every curvature contribution is a sum of outer products of known
        vectors, so the Newton system can be solved through a QR of J,
        halving the effective condition number versus forming the Hessian.
        """
        g = self.constraints(x)
        grads = self.constraint_grads(x)
        inv_neg = 1.0 / (-g)
        grad = -t * self.obj_grad(x) + grads.T @ inv_neg
        blocks = [grads * inv_neg[:, None]]
        if self.OC.size:
            args = self.obj_args(x)
            w = np.sqrt(t * self.Ow / (LN2 * args * args))
            blocks.append(self.OC * w[:, None])
        if self.m_log:
            targ = self.LC @ x + self.Ld
            gl = g[self.m_lin:self.m_lin + self.m_log]
            w = np.sqrt(self.Lw / (LN2 * targ * targ) / (-gl[self.Lowner]))
            blocks.append(self.LC * w[:, None])
        if self.m_quad:
            gq = g[self.m_lin + self.m_log:]
            w = np.sqrt(0.5 / (-gq))
            blocks.append(self.QU * w[:, None])
        return grad, np.concatenate(blocks, axis=0), g


def _newton_direction(comp: _Compiled, grad, jac):
    """Newton step and decrement via column-equilibrated QR.

    The decrement is a squared norm, so it stays non-negative even when the
    Hessian is badly conditioned; equilibration keeps the factorization
    accurate when variable scales span many decades (near-zero powers next
    to watt-scale ones).
    """
    col = np.linalg.norm(jac, axis=0)
    col = np.where(col > 0.0, col, 1.0)
    scaled = jac / col
    r = np.linalg.qr(scaled, mode="r")
    diag = np.abs(np.diag(r))
    if r.shape[0] < comp.n or not np.all(np.isfinite(r)) \
            or np.min(diag, initial=np.inf) <= 1e-13 * np.max(diag, initial=1.0):
        scaled = np.vstack([scaled, 1e-10 * np.max(diag, initial=1.0) * np.eye(comp.n)])
        r = np.linalg.qr(scaled, mode="r")
    y = np.linalg.solve(r.T, grad / col)
    d = -np.linalg.solve(r, y) / col
    return d, float(y @ y)


def _newton_minimize(comp: _Compiled, x, t, max_steps, ntol, budget, early_exit=None):
    """Damped Newton on the barrier at fixed t. Returns (x, steps, converged).

    The decrement target grows with t: the leftover centering error enters
    the primal objective as decrement / t, while the float64 noise floor of
    the decrement itself scales up with t."""
    steps = 0
    eps = np.finfo(float).eps
    for _ in range(max_steps):
        if budget is not None and steps >= budget:
            break
        grad, jac, _ = comp.barrier_grad_jac(x, t)
        d, decrement = _newton_direction(comp, grad, jac)
        if not np.all(np.isfinite(d)):
            return x, steps, False
        phi0 = comp.barrier_value(x, t)
        # Converged when the predicted decrease is below the requested
        # tolerance or below what the float resolution of phi can verify.
        if 0.5 * decrement <= max(ntol, 1e-16 * t, 100.0 * eps * abs(phi0)):
            return x, steps, True
        step = 1.0
        slope = float(grad @ d)
        while step > 1e-14:
            x_new = x + step * d
            phi = comp.barrier_value(x_new, t)
            if np.isfinite(phi) and phi <= phi0 + 0.25 * step * slope:
                break
            step *= 0.5
        else:
            # Progress below the rounding floor of the barrier value; the
            # residual centering error enters the primal as decrement / t.
            return x, steps, 0.5 * decrement <= 0.05
        x = x_new
        steps += 1
        if early_exit is not None and early_exit(x):
            return x, steps, True
    return x, steps, False


def _barrier_maximize(comp: _Compiled, x0, tol, max_newton, early_exit=None,
                      unbounded_limit=1e12):
    """Outer barrier loop. Returns (x, total_steps, gap, status_hint)."""
    x = x0.copy()
    total = 0
    m = comp.m
    t = 1.0
    mu = 20.0
    status = "ok"
    stalls = 0
    while True:
        x, steps, converged = _newton_minimize(
            comp, x, t, max_steps=80, ntol=1e-11, budget=max_newton - total,
            early_exit=early_exit)
        total += steps
        if early_exit is not None and early_exit(x):
            return x, total, m / t, "early"
        if not converged and total >= max_newton:
            return x, total, m / t, "max_iter"
        if not converged:
            status = "stalled"
            stalls += 1
            if stalls >= 3 and steps == 0:
                return x, total, m / t, status
        else:
            status = "ok"
            stalls = 0
        if abs(comp.objective(x)) > unbounded_limit or np.max(np.abs(x)) > unbounded_limit:
            return x, total, m / t, "unbounded"
        if m / t <= tol:
            return x, total, m / t, status
        t *= mu


def _default_start(prog: ConvexProgram) -> np.ndarray:
    lo, hi = prog.lower, prog.upper
    x = np.empty(prog.n)
    for j in range(prog.n):
        if np.isfinite(lo[j]) and np.isfinite(hi[j]):
            x[j] = 0.5 * (lo[j] + hi[j])
        elif np.isfinite(lo[j]):
            x[j] = lo[j] + 1.0
        elif np.isfinite(hi[j]):
            x[j] = hi[j] - 1.0
        else:
            x[j] = 0.0
    return x


def _interior_clip(prog: ConvexProgram, x: np.ndarray) -> np.ndarray:
    """Pull a point strictly inside the box, perturbing it as little as
    possible: rows linearized about the point can be extremely sensitive to
    absolute shifts in near-zero coordinates."""
    lo, hi = prog.lower, prog.upper
    shift = 1e-12 * np.maximum(1.0, np.abs(x))
    shift = np.minimum(shift, 0.25 * np.where(np.isfinite(hi - lo), hi - lo, np.inf))
    return np.clip(x, lo + shift, np.where(np.isfinite(hi), hi - shift, np.inf))


def _epigraph_program(prog: ConvexProgram, x0: np.ndarray, rows: str) -> ConvexProgram:
    """Program over (x, s) maximizing s with ``g_i(x) + s <= 0``.

    ``rows`` selects "all" constraint rows or only "domain" rows (log-argument
    positivity, for repairing a start outside the log domain). Variables are
    capped generously around x0 so the epigraph barrier stays bounded.
    """
    n = prog.n
    cap = 1e4 * np.maximum(1.0, np.abs(x0))
    lower = np.maximum(prog.lower, x0 - cap)
    upper = np.minimum(prog.upper, x0 + cap)
    lower = np.append(lower, -1e6)
    upper = np.append(upper, 10.0)

    def ext(v):
        return np.append(np.asarray(v, dtype=float), 0.0)

    s_col = np.zeros(n + 1)
    s_col[n] = 1.0
    linear, logs_r, quads = [], [], []
    if rows == "domain":
        for row in prog.log_rows:
            for term in row.logs:
                linear.append(LinearRow(s_col - ext(term.coeffs), -term.offset, "domain"))
        for term in prog.obj_logs:
            linear.append(LinearRow(s_col - ext(term.coeffs), -term.offset, "domain"))
    else:
        for row in prog.linear_rows:
            linear.append(LinearRow(ext(row.coeffs) + s_col, row.offset, row.name))
        for row in prog.log_rows:
            logs_r.append(LogRow(ext(row.lhs_coeffs) + s_col, row.lhs_offset,
                                 tuple(LogTerm(t.weight, ext(t.coeffs), t.offset) for t in row.logs),
                                 ext(row.rhs_coeffs), row.rhs_offset, row.name))
        for row in prog.quad_rows:
            quads.append(QuadRow(ext(row.u_coeffs), row.u_offset,
                                 ext(row.v_coeffs) + s_col, row.v_offset, row.name))
    return ConvexProgram(n=n + 1, obj_affine=s_col, obj_offset=0.0, obj_logs=[],
                         lower=lower, upper=upper, linear_rows=linear,
                         log_rows=logs_r, quad_rows=quads)


def _find_strictly_feasible(prog: ConvexProgram, x0, tol, budget):
    """Phase sequence producing a strictly feasible point, or an infeasibility
    certificate. Returns (x or None, steps, max_slack)."""
    comp = _Compiled(prog)
    x = _interior_clip(prog, x0)
    steps_used = 0

    g = comp.constraints(x)
    if np.any(~np.isfinite(g)):
        dom_prog = _epigraph_program(prog, x, rows="domain")
        dom_comp = _Compiled(dom_prog)
        args0 = np.concatenate([dom_comp.G @ np.append(x, 0.0) + dom_comp.h])
        s0 = -np.max(args0) - 1.0
        z = np.append(x, min(s0, -1.0))
        z = _interior_clip(dom_prog, z)
        target = INTERIOR_MARGIN * 1e-3

        def dom_ok(zz):
            return zz[-1] >= target

        z, steps, _ = _barrier_maximize(dom_comp, z, tol=1e-9, max_newton=budget,
                                        early_exit=dom_ok)
        steps_used += steps
        x = z[:-1]
        g = comp.constraints(x)
        if np.any(~np.isfinite(g)):
            return None, steps_used, -np.inf

    if g.size == 0 or np.max(g) < -INTERIOR_MARGIN:
        return x, steps_used, float(-np.max(g)) if g.size else np.inf

    epi_prog = _epigraph_program(prog, x, rows="all")
    epi_comp = _Compiled(epi_prog)
    s0 = -float(np.max(g)) - 1.0
    z = np.append(x, s0)
    z = _interior_clip(epi_prog, z)

    def feas_ok(zz):
        return zz[-1] >= INTERIOR_MARGIN

    z, steps, gap, hint = _barrier_maximize(epi_comp, z, tol=1e-9,
                                            max_newton=budget, early_exit=feas_ok)
    steps_used += steps
    s = float(z[-1])
    if s >= INTERIOR_MARGIN or (s > FEAS_TOL and np.max(comp.constraints(z[:-1])) < 0.0):
        return z[:-1], steps_used, s
    if s < -FEAS_TOL:
        return None, steps_used, s
    # Feasible within tolerance but no usable strict interior.
    return None, steps_used, s


def _refined_kkt(comp: _Compiled, x: np.ndarray, gap: float) -> float:
    """Stationarity/complementarity residual with non-negative least-squares
    dual recovery.

    Barrier duals at a merely approximately centered point can carry large
    errors along ill-conditioned directions; fitting multipliers to the
    actual gradients gives the certificate the point deserves. The residual
    is scaled by the gradient magnitude so it stays meaningful when channel
    coefficients push gradients to extreme scales.
    """
    grad_f = comp.obj_grad(x)
    scale = max(1.0, float(np.max(np.abs(grad_f))), abs(comp.objective(x)))
    if comp.m == 0:
        return float(np.max(np.abs(grad_f))) / scale
    g = comp.constraints(x)
    grads = comp.constraint_grads(x)
    # Column equilibration: dual magnitudes span the inverse row scales.
    col = np.linalg.norm(grads, axis=1)
    col = np.where(col > 0.0, col, 1.0)
    lam_scaled, _ = scipy.optimize.nnls((grads / col[:, None]).T, grad_f)
    lam = lam_scaled / col
    stat = grad_f - grads.T @ lam
    compl = float(np.max(np.abs(lam * g)))
    return max(float(np.max(np.abs(stat))), compl) / scale


def solve(prog: ConvexProgram, tol: float = 1e-8, max_iter: int = 2000,
          x0: np.ndarray | None = None) -> SolverOutcome:
    """Solve the canonical program to stationarity/complementarity ``tol``.

    ``x0`` is an optional warm start; it does not have to be feasible. On
    ``OPTIMAL`` the returned point is strictly feasible and the objective is
    the global maximum within ``tol``.
    """
    comp = _Compiled(prog)
    start = _default_start(prog) if x0 is None else np.asarray(x0, dtype=float).copy()

    x_feas, steps_p1, max_slack = _find_strictly_feasible(prog, start, tol, budget=max_iter)
    if x_feas is None:
        if max_slack < -FEAS_TOL:
            return SolverOutcome(SolveStatus.INFEASIBLE, None, -np.inf, np.inf, steps_p1)
        return SolverOutcome(SolveStatus.NUMERICAL_FAILURE, None, -np.inf, np.inf, steps_p1)

    budget = max_iter - steps_p1
    if budget <= 0:
        return SolverOutcome(SolveStatus.MAX_ITERATIONS, None, comp.objective(x_feas),
                             np.inf, steps_p1)

    x, steps, gap, hint = _barrier_maximize(comp, x_feas, tol=tol, max_newton=budget)
    total = steps_p1 + steps
    if hint == "unbounded":
        return SolverOutcome(SolveStatus.UNBOUNDED, None, np.inf, np.inf, total)
    if hint == "max_iter":
        return SolverOutcome(SolveStatus.MAX_ITERATIONS, None, comp.objective(x), np.inf, total)

    kkt = _refined_kkt(comp, x, gap)
    if hint == "stalled" and kkt > tol:
        return SolverOutcome(SolveStatus.NUMERICAL_FAILURE, None, comp.objective(x), kkt, total)
    return SolverOutcome(SolveStatus.OPTIMAL, x, comp.objective(x), kkt, total)
