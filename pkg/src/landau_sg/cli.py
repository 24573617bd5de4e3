"""Command-line entry points.

Subcommands:

* ``run``       - advance one configured experiment and write its artifacts;
* ``sweep``     - convergence of the fourth moment over the expansion order
                  against a higher-order reference (convergence.csv);
* ``bkw``       - expected relative density error against the closed-form
                  Maxwell-case solution for several particle counts;
* ``trubnikov`` - anisotropy relaxation rates against the predicted ones;
* ``selftest``  - quick structural checks, one pass/fail line each;
* ``report``    - render figures for an existing output directory.

Common flags: --config PATH, --preset NAME, --variant NAME, --out DIR,
--seed INT, --paper-scale, --threads INT, --plots.  Environment overrides:
LANDAU_SG_OUT (output directory), LANDAU_SG_THREADS (worker count).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigError, RunConfig, parse_config
from .runner import (
    GuardViolation,
    bkw_error_study,
    format_float,
    relaxation_study,
    run_simulation,
    sweep_orders,
    write_bkw_csv,
    write_convergence_csv,
    write_moments_csv,
    write_relaxation_csv,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML configuration file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named experiment preset")
    parser.add_argument("--variant", help="preset variant (e.g. maxwell, coulomb, beta25)")
    parser.add_argument("--out", help="output directory (env LANDAU_SG_OUT)")
    parser.add_argument("--seed", type=int, help="random seed override")
    parser.add_argument("--paper-scale", action="store_true",
                        help="use the published particle counts instead of desk scale")
    parser.add_argument("--threads", type=int, help="worker count (env LANDAU_SG_THREADS)")
    parser.add_argument("--plots", action="store_true", help="render figures after writing")


def _load_config(args) -> RunConfig:
    text = Path(args.config).read_text() if args.config else ""
    if not args.config and not args.preset:
        raise ConfigError("provide --config and/or --preset")
    overrides: dict = {"run": {}}
    if args.seed is not None:
        overrides["run"]["seed"] = args.seed
    out = args.out or os.environ.get("LANDAU_SG_OUT")
    if out:
        overrides["run"]["out_dir"] = out
    threads = args.threads
    if threads is None and os.environ.get("LANDAU_SG_THREADS"):
        threads = int(os.environ["LANDAU_SG_THREADS"])
    if threads is not None:
        overrides["run"]["threads"] = threads
    return parse_config(
        text,
        preset=args.preset,
        variant=args.variant,
        overrides=overrides,
        paper_scale=True if args.paper_scale else None,
    )


def _maybe_render(args, out_dir) -> None:
    if args.plots and out_dir is not None:
        from .report import render_all

        for fig in render_all(out_dir):
            print(f"  figure {fig}")


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(cfg.out_dir) if cfg.out_dir else None
    if args.dry_run:
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            import yaml

            (out_dir / "resolved_config.yaml").write_text(
                yaml.safe_dump(cfg.resolved_document(), sort_keys=False)
            )
            print(f"dry run: resolved configuration echoed to {out_dir}")
        return 0
    result = run_simulation(cfg)
    print(
        f"{cfg.label}: {result.num_steps} steps, N={cfg.num_particles}, "
        f"modes={np.prod([m + 1 for m in cfg.orders])}, wall {result.wall_seconds:.1f}s"
    )
    if result.out_dir:
        print(f"  artifacts in {result.out_dir}")
    _maybe_render(args, result.out_dir)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    orders = [int(x) for x in args.orders.split(",")]
    times = [float(x) for x in args.times.split(",")]
    nodes_rule = None
    if args.nodes_factor != 2:
        factor = args.nodes_factor

        def nodes_rule(m):
            return factor * (m + 1)

    result = sweep_orders(cfg, orders, args.reference, times, nodes_rule)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_convergence_csv(out_dir / "convergence.csv", result, cfg.label)
    var_lines = ["M,t,variance"]
    for row, m in enumerate(result.orders):
        for t, v in zip(result.variance_times, result.variances[row]):
            var_lines.append(f"{m},{format_float(t)},{format_float(v)}")
    (out_dir / "m4_variance.csv").write_text("\n".join(var_lines) + "\n")
    for row, m in enumerate(result.orders):
        err = ", ".join(f"{e:.3e}" for e in result.errors[row])
        print(f"M={m:2d}: error(t={args.times}) = {err}")
    print(f"  convergence table in {out_dir}")
    _maybe_render(args, out_dir)
    return 0


def _cmd_bkw(args) -> int:
    args.preset = args.preset or "test4"
    cfg = _load_config(args)
    counts = [int(x) for x in args.counts.split(",")]
    result = bkw_error_study(cfg, counts, args.eval_every)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_bkw_csv(out_dir / "bkw_error.csv", result)
    for row, n in enumerate(result.counts):
        print(f"N={n}: error(t={result.eval_times[-1]:g}) = {result.expected_errors[row, -1]:.4e}")
    print(f"  error table in {out_dir}")
    _maybe_render(args, out_dir)
    return 0


def _cmd_trubnikov(args) -> int:
    scenarios = (
        ["maxwell", "coulomb-a", "coulomb-b"] if args.scenario == "all" else [args.scenario]
    )
    results = []
    out_dir = None
    for scenario in scenarios:
        args.preset = args.preset or "test5"
        args.variant = scenario
        cfg = _load_config(args)
        res = relaxation_study(cfg, scenario, (args.fit_start, args.fit_end))
        results.append(res)
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        lines = ["t,ratio"]
        for t, r in zip(res.times, res.ratio_expectation):
            lines.append(f"{format_float(t)},{format_float(r)}")
        (out_dir / f"relaxation_series_{scenario}.csv").write_text("\n".join(lines) + "\n")
        print(
            f"{scenario}: fitted rate {res.fitted_rate:.4f}, predicted "
            f"{res.predicted_rate:.4f}, relative error {res.relative_error:.1%}"
        )
    write_relaxation_csv(out_dir / "trubnikov.csv", results)
    print(f"  rate table in {out_dir}")
    _maybe_render(args, out_dir)
    return 0


def _cmd_report(args) -> int:
    from .report import render_all

    produced = render_all(args.out or os.environ.get("LANDAU_SG_OUT", "."))
    for fig in produced:
        print(f"  figure {fig}")
    if not produced:
        print("nothing to render")
    return 0


def _cmd_selftest(args) -> int:
    from . import selftest

    return selftest.run_selftest()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="landau-sg",
        description="Deterministic particle solver with stochastic-Galerkin uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured experiment")
    _add_common(p_run)
    p_run.add_argument("--dry-run", action="store_true", help="resolve and echo, no stepping")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="convergence over the expansion order")
    _add_common(p_sweep)
    p_sweep.add_argument("--orders", default="1,2,3,4,5,6", help="comma list of orders")
    p_sweep.add_argument("--reference", type=int, default=12, help="reference order")
    p_sweep.add_argument("--times", default="1.0", help="comma list of evaluation times")
    p_sweep.add_argument("--nodes-factor", type=int, default=2,
                         help="quadrature nodes per order: factor*(M+1)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bkw = sub.add_parser("bkw", help="density error against the exact Maxwell-case solution")
    _add_common(p_bkw)
    p_bkw.add_argument("--counts", default="900,3600", help="comma list of particle counts")
    p_bkw.add_argument("--eval-every", type=float, default=0.5, help="evaluation interval")
    p_bkw.set_defaults(func=_cmd_bkw)

    p_tru = sub.add_parser("trubnikov", help="anisotropy relaxation rates")
    _add_common(p_tru)
    p_tru.add_argument("--scenario", default="all",
                       choices=["all", "maxwell", "coulomb-a", "coulomb-b"])
    p_tru.add_argument("--fit-start", type=float, default=0.0)
    p_tru.add_argument("--fit-end", type=float, default=1.0)
    p_tru.set_defaults(func=_cmd_trubnikov)

    p_self = sub.add_parser("selftest", help="quick structural checks")
    p_self.set_defaults(func=_cmd_selftest)

    p_rep = sub.add_parser("report", help="render figures for an output directory")
    p_rep.add_argument("--out", help="output directory to render (env LANDAU_SG_OUT)")
    p_rep.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (GuardViolation, FloatingPointError) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
