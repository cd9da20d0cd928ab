"""Command-line entry points: simulate sweeps, summarize CSVs, verify vs oracle."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .driver import run
from .harness import (MODE_ORDER, SweepSpec, format_summary, summarize, sweep,
                      weight_scheme)
from .oracle import grid_search, verify
from .scenario import Mode, ScenarioConfig, draw_channels, load_config

_MODE_CHOICES = {"hybrid": (Mode.HYBRID,), "noma": (Mode.NOMA_ONLY,),
                 "rsma": (Mode.RSMA_ONLY,), "all": MODE_ORDER}


def _load(args) -> ScenarioConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = replace(config, rng_seed=args.seed)
    if getattr(args, "weights", None):
        wn, wr = weight_scheme(config.num_users, args.weights)
        config = replace(config, weights_noma=wn, weights_rsma=wr)
    return config


def _cmd_simulate(args) -> int:
    config = _load(args)
    scheme = args.weights or "custom"
    records = sweep(config, SweepSpec.parse(args.sweep), draws=args.draws,
                    modes=_MODE_CHOICES[args.mode], scheme=scheme,
                    out_path=args.out, jobs=args.jobs)
    print(f"wrote {len(records)} rows to {args.out}")
    return 0


def _cmd_summarize(args) -> int:
    print(format_summary(summarize(args.in_path)))
    return 0


def _cmd_verify(args) -> int:
    config = _load(args)
    rng = np.random.default_rng(config.rng_seed)
    modes = _MODE_CHOICES[args.mode]
    passes = {m: 0 for m in modes}
    counted = {m: 0 for m in modes}
    for i in range(args.draws):
        ch = draw_channels(config, rng)
        for mode in modes:
            cfg_m = replace(config, mode=mode)
            reference = grid_search(cfg_m, ch, mode, args.density)
            report = run(cfg_m, ch)
            if not reference.feasible:
                continue
            counted[mode] += 1
            ok = verify(report, reference.objective, args.rel_tol)
            passes[mode] += ok
            print(f"draw {i} {mode.value}: sca={report.objective:.4f} "
                  f"oracle={reference.objective:.4f} {'pass' if ok else 'FAIL'}")
    failed = False
    for mode in modes:
        rate = passes[mode] / counted[mode] if counted[mode] else float("nan")
        print(f"{mode.value}: {passes[mode]}/{counted[mode]} pass ({rate:.0%})")
        failed |= counted[mode] > 0 and rate < 0.9
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rsma-noma",
        description="Hybrid RSMA-NOMA downlink power/rate allocation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run Monte Carlo sweeps and write a CSV")
    sim.add_argument("--config", required=True)
    sim.add_argument("--mode", choices=sorted(_MODE_CHOICES), default="all")
    sim.add_argument("--sweep", default=None, metavar="PARAM:LO:HI:STEP",
                     help="sweep rth or pmax, e.g. rth:0:3:0.5")
    sim.add_argument("--draws", type=int, default=30)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--weights", choices=["equal", "exp_flip"], default=None)
    sim.add_argument("--out", required=True)
    sim.add_argument("--jobs", type=int, default=1)
    sim.set_defaults(func=_cmd_simulate)

    summ = sub.add_parser("summarize", help="aggregate a results CSV")
    summ.add_argument("--in", dest="in_path", required=True)
    summ.set_defaults(func=_cmd_summarize)

    ver = sub.add_parser("verify", help="compare the iterative solver to the grid oracle")
    ver.add_argument("--config", required=True)
    ver.add_argument("--draws", type=int, default=10)
    ver.add_argument("--density", type=int, default=30)
    ver.add_argument("--rel-tol", type=float, default=0.03)
    ver.add_argument("--mode", choices=sorted(_MODE_CHOICES), default="all")
    ver.add_argument("--seed", type=int, default=None)
    ver.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
