"""Command-line entry point.

Verbs: run, preserve, converge, continue.  Scenario arguments may be file
paths or shipped scenario names; --set section.key=value overrides config
keys.  The output directory comes from --outdir or WBHYDRO_OUTDIR.
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ScenarioConfig, parse_config, serialize_config
from .protocols import (continuation_study, convergence_study,
                        output_dir, preservation_test, run_scenario)
from .scenarios import SHIPPED_SCENARIOS, load_scenario


def _apply_overrides(cfg: ScenarioConfig, pairs) -> ScenarioConfig:
    if not pairs:
        return cfg
    text = serialize_config(cfg)
    lines = text.splitlines()
    for pair in pairs:
        if "=" not in pair or "." not in pair.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value: {pair!r}")
        target, value = pair.split("=", 1)
        section, key = target.split(".", 1)
        section, key, value = section.strip(), key.strip(), value.strip()
        out, in_section, placed = [], False, False
        for line in lines:
            stripped = line.strip()
            if stripped.startswith("["):
                if in_section and not placed:
                    out.append(f"{key} = {value}")
                    placed = True
                in_section = stripped == f"[{section}]"
            elif in_section and stripped.split("=")[0].strip() == key:
                out.append(f"{key} = {value}")
                placed = True
                continue
            out.append(line)
        if in_section and not placed:
            out.append(f"{key} = {value}")
            placed = True
        if not placed:
            raise ConfigError(f"override targets unknown section: {pair!r}")
        lines = out
    return parse_config("\n".join(lines))


def _load(args) -> ScenarioConfig:
    cfg = load_scenario(args.scenario)
    return _apply_overrides(cfg, args.set or [])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wbhydro",
        description="Well-balanced finite volume runs for 1D hydrodynamics "
                    "with general free energy")
    parser.add_argument("--outdir", default=None,
                        help="output directory (default: $WBHYDRO_OUTDIR or ./outputs)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one scenario, write CSVs")
    p_pre = sub.add_parser("preserve", help="steady-state preservation table")
    p_con = sub.add_parser("converge", help="order-of-accuracy table")
    p_cnt = sub.add_parser("continue", help="noise-continuation branch table")
    for p in (p_run, p_pre, p_con, p_cnt):
        p.add_argument("scenario", help="config file path or shipped scenario name")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config key (repeatable)")
    p_pre.add_argument("--time", type=float, default=5.0,
                       help="final time for the preservation run")
    p_con.add_argument("--cells", type=int, nargs="+", default=[50, 100, 200, 400])
    p_con.add_argument("--ref", type=int, default=25600,
                       help="reference mesh cells (ignored with an exact solution)")
    p_con.add_argument("--time", type=float, default=0.3)
    p_con.add_argument("--masked", action="store_true",
                       help="restrict the L1 error to interior support cells")
    p_cnt.add_argument("--sigmas", type=float, nargs="+", required=True,
                       help="decreasing noise strengths")

    args = parser.parse_args(argv)
    outdir = output_dir(args.outdir)
    try:
        cfg = _load(args)
        if args.verb == "run":
            report = run_scenario(cfg, outdir)
        elif args.verb == "preserve":
            report = preservation_test(cfg, t_end=args.time, outdir=outdir)
        elif args.verb == "converge":
            report = convergence_study(cfg, cells=args.cells, ref_cells=args.ref,
                                       t=args.time, outdir=outdir,
                                       masked=args.masked)
        else:
            report = continuation_study(cfg, sigmas=args.sigmas, outdir=outdir)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:
        print(f"run failed: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    if report.report_path:
        with open(report.report_path) as fh:
            print(fh.read(), end="")
    return 0 if report.error is None and report.monitors_ok else 1


if __name__ == "__main__":
    sys.exit(main())
