"""Monte Carlo experiment harness: sweeps, metrics records, CSV, summaries.

Channel draws are generated once per draw index from the base config seed and
shared by every mode and sweep value, so mode comparisons are paired and a
rerun with the same seed reproduces the CSV byte for byte.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .driver import RunStatus, run
from .scenario import ChannelRealization, Mode, ScenarioConfig, draw_channels

CSV_FIELDS = ["seed", "draw_index", "mode", "p_max_dbm", "r_th", "weight_scheme",
              "status", "iterations", "weighted_sum_rate", "sum_rate",
              "proportional_fairness", "beta", "per_user_rates"]

RATE_FLOOR = 1e-9   # rates at/below this make the fairness field null

MODE_ORDER = (Mode.HYBRID, Mode.NOMA_ONLY, Mode.RSMA_ONLY)


@dataclass(frozen=True)
class MetricsRecord:
    seed: int
    draw_index: int
    mode: str
    p_max_dbm: float
    r_th: float
    weight_scheme: str
    status: str
    iterations: int
    weighted_sum_rate: float | None
    sum_rate: float | None
    proportional_fairness: float | None
    beta: float | None
    per_user_rates: str


@dataclass(frozen=True)
class SweepSpec:
    param: str | None           # "rth" | "pmax" | None
    values: tuple[float, ...]

    @classmethod
    def parse(cls, text: str | None) -> "SweepSpec":
        if not text:
            return cls(None, (float("nan"),))
        param, lo, hi, step = text.split(":")
        if param not in ("rth", "pmax"):
            raise ValueError(f"unknown sweep parameter {param!r}")
        lo, hi, step = float(lo), float(hi), float(step)
        count = int(round((hi - lo) / step)) + 1
        return cls(param, tuple(lo + i * step for i in range(count)))


def weight_scheme(num_users: int, scheme: str):
    """Weight vectors for the two subchannels under the named scheme."""
    k = np.arange(1, num_users + 1, dtype=float)
    if scheme == "equal":
        return np.ones(num_users), np.ones(num_users)
    if scheme == "exp_flip":
        return np.exp(0.24 * k), np.exp(0.24 * (num_users - k))
    raise ValueError(f"unknown weight scheme {scheme!r}")


def _apply_sweep(config: ScenarioConfig, param: str | None, value: float) -> ScenarioConfig:
    if param is None:
        return config
    if param == "rth":
        return replace(config, r_th=value)
    return replace(config, p_max_dbm=value)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def make_record(config: ScenarioConfig, scheme: str, draw_index: int, report) -> MetricsRecord:
    feasible = report.status in (RunStatus.CONVERGED, RunStatus.MAX_ITER_REACHED)
    if feasible:
        r_total = report.rates.r_total
        fairness = (float(np.sum(np.log(r_total)))
                    if bool(np.all(r_total > RATE_FLOOR)) else None)
        per_user = ";".join(f"{r:.10g}" for r in r_total)
        wsr = report.objective
        sum_rate = float(np.sum(r_total))
        beta = float(report.final_alloc.beta)
    else:
        fairness, per_user, wsr, sum_rate, beta = None, "", None, None, None
    return MetricsRecord(
        seed=config.rng_seed, draw_index=draw_index, mode=config.mode.value,
        p_max_dbm=float(config.p_max_dbm), r_th=float(config.r_th[0]),
        weight_scheme=scheme, status=report.status.value, iterations=report.iterations,
        weighted_sum_rate=wsr, sum_rate=sum_rate, proportional_fairness=fairness,
        beta=beta, per_user_rates=per_user)


def _run_cell(args):
    (cell_key, config, scheme, draw_index, ch, modes) = args
    records = []
    for mode in modes:
        report = run(replace(config, mode=mode), ch)
        records.append(make_record(replace(config, mode=mode), scheme, draw_index, report))
    return cell_key, records


def sweep(config_base: ScenarioConfig, sweep_spec: SweepSpec | str | None,
          draws: int, modes=MODE_ORDER, scheme: str = "equal",
          out_path=None, jobs: int = 1) -> list[MetricsRecord]:
    """Run draws x sweep values x modes and return (optionally write) records.

    Rows come out sorted by (sweep value, draw, mode) regardless of worker
    completion order.
    """
    if not isinstance(sweep_spec, SweepSpec):
        sweep_spec = SweepSpec.parse(sweep_spec)
    modes = tuple(Mode(m) for m in modes)
    rng = np.random.default_rng(config_base.rng_seed)
    channels = [draw_channels(config_base, rng) for _ in range(draws)]

    tasks = []
    for vi, value in enumerate(sweep_spec.values):
        cfg_v = _apply_sweep(config_base, sweep_spec.param, value)
        for di, ch in enumerate(channels):
            tasks.append(((vi, di), cfg_v, scheme, di, ch, modes))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_run_cell, tasks, chunksize=1))
    else:
        results = dict(map(_run_cell, tasks))

    records = []
    for key in sorted(results):
        records.extend(results[key])
    if out_path is not None:
        write_csv(out_path, records)
    return records


def write_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, field)) for field in CSV_FIELDS])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _median(values):
    return float(np.median(values)) if values else None


def summarize(path_or_rows) -> list[dict]:
    """Aggregate per (mode, p_max, r_th, scheme): feasibility rate and
    location statistics of the rate metrics. Infeasible rows count toward
    the feasibility rate only."""
    rows = read_csv(path_or_rows) if isinstance(path_or_rows, (str, bytes)) or hasattr(path_or_rows, "__fspath__") \
        else [r if isinstance(r, dict) else {f: _fmt(getattr(r, f)) for f in CSV_FIELDS} for r in path_or_rows]
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["mode"], row["p_max_dbm"], row["r_th"], row["weight_scheme"])
        groups.setdefault(key, []).append(row)
    summary = []
    for key in sorted(groups):
        members = groups[key]
        feasible = [r for r in members if r["status"] in ("converged", "max_iter_reached")]
        wsr = [float(r["weighted_sum_rate"]) for r in feasible if r["weighted_sum_rate"]]
        srs = [float(r["sum_rate"]) for r in feasible if r["sum_rate"]]
        fair = [float(r["proportional_fairness"]) for r in feasible if r["proportional_fairness"]]
        iters = [int(r["iterations"]) for r in feasible]
        summary.append({
            "mode": key[0], "p_max_dbm": key[1], "r_th": key[2], "weight_scheme": key[3],
            "n": len(members),
            "feasibility_rate": len(feasible) / len(members),
            "mean_weighted_sum_rate": float(np.mean(wsr)) if wsr else None,
            "median_weighted_sum_rate": _median(wsr),
            "mean_sum_rate": float(np.mean(srs)) if srs else None,
            "median_fairness": _median(fair),
            "median_iterations": _median(iters),
        })
    return summary


def format_summary(summary: list[dict]) -> str:
    if not summary:
        return "(no rows)"
    cols = list(summary[0].keys())
    lines = ["  ".join(f"{c:>22}" for c in cols)]
    for row in summary:
        cells = []
        for c in cols:
            v = row[c]
            if isinstance(v, float):
                cells.append(f"{v:>22.4f}")
            else:
                cells.append(f"{str(v) if v is not None else '-':>22}")
        lines.append("  ".join(cells))
    return "\n".join(lines)
