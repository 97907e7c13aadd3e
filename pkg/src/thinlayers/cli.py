"""Command-line entry point.

Exit codes: 0 when every check passes, 2 when a check fails, 1 on runtime or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ThinLayersError
from .harness import artifacts
from .harness.config import load_config
from .harness.experiments import eps_sweep, linear_decay_check, refinement_study, run, tfe_reduction

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2

# defaults applied when no --config file is given
SUBCOMMAND_DEFAULTS = {
    "sweep-eps": ['initial={"kind": "compact_support_touching_zero"}', "T_end=0.1"],
    "refine": ['initial={"kind": "compact_support_touching_zero"}', "T_end=0.01",
               "controls.extrapolate=true", "controls.rel_tol=1e-6", "sample_count=21"],
    "tfe-check": ['initial={"kind": "cosine_bump", "g_level": 1.0, "g_amp": 0.5, "g_mode": 1}'],
}


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _config(args):
    overrides = []
    if args.config is None:
        overrides += SUBCOMMAND_DEFAULTS.get(args.command, [])
    overrides += args.override or []
    return load_config(args.config, overrides, out_dir=args.out)


def _print(doc):
    print(json.dumps(doc, indent=2, sort_keys=True, default=artifacts._jsonable))


def cmd_run(args):
    cfg = _config(args)
    res = run(cfg)
    _print({"out_dir": cfg.out_dir, "status": res.summary["status"],
            "checks": {k: v["pass"] for k, v in res.summary["checks"].items()}})
    if res.failed:
        return EXIT_ERROR
    return EXIT_OK if res.passed else EXIT_FAILED


def cmd_sweep(args):
    cfg = _config(args)
    res = eps_sweep(cfg, _floats(args.eps_list), workers=args.workers)
    _print({"out_dir": cfg.out_dir, "rows": res.rows, "slope": res.slope, "flags": res.flags})
    if not res.flags["complete"]:
        return EXIT_ERROR
    return EXIT_OK if res.passed else EXIT_FAILED


def cmd_refine(args):
    cfg = _config(args)
    res = refinement_study(cfg, _ints(args.n_list), workers=args.workers)
    _print({"out_dir": cfg.out_dir, "n_list": res.n_list, "differences": res.differences,
            "orders": res.orders, "strictly_decreasing": res.strictly_decreasing})
    return EXIT_OK if res.strictly_decreasing else EXIT_FAILED


def cmd_tfe(args):
    cfg = _config(args)
    eps_values = _floats(args.eps_list) if args.eps_list else [cfg.eps]
    reports = []
    for i, e in enumerate(eps_values):
        member = cfg.with_overrides(eps=e, out_dir=str(Path(cfg.out_dir) / f"eps_{i:02d}_{e:.0e}"))
        reports.append(tfe_reduction(member))
    doc = {"out_dir": cfg.out_dir, "reports": [r.to_dict() for r in reports]}
    ok = True
    if len(reports) >= 2:
        ratios = []
        for a, b in zip(reports, reports[1:]):
            expected = a.eps / b.eps
            got = a.sup_f / b.sup_f if b.sup_f > 0 else float("inf")
            ratios.append({"eps_ratio": expected, "sup_f_ratio": got,
                           "within_factor_3": expected / 3 <= got <= 3 * expected})
        doc["ratios"] = ratios
        ok = all(r["within_factor_3"] for r in ratios)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    artifacts.write_json(doc, Path(cfg.out_dir) / "tfe_summary.json")
    _print(doc)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_decay(args):
    cfg = _config(args)
    report = linear_decay_check(cfg.phys, cfg.eps, args.j, args.fbar, args.gbar, args.amp, horizon=args.horizon)
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    artifacts.write_json(report, Path(cfg.out_dir) / "decay_report.json")
    _print(report)
    if report["status"] == "stationary":
        return EXIT_OK
    return EXIT_OK if report["passed"] else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thinlayers", description="Galerkin simulator for two thin fluid layers.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--out", help="output directory (overrides config and $THINLAYERS_OUT)")
        sp.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="override a config entry, dotted keys allowed (repeatable)")
        return sp

    common(sub.add_parser("run", help="single run with diagnostics")).set_defaults(func=cmd_run)

    sp = common(sub.add_parser("sweep-eps", help="negativity versus eps"))
    sp.add_argument("--eps-list", default="0.1,0.01,0.001")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = common(sub.add_parser("refine", help="self-convergence in the mode count"))
    sp.add_argument("--n-list", default="8,16,32")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_refine)

    sp = common(sub.add_parser("tfe-check", help="f = 0 reduction to the thin-film equation"))
    sp.add_argument("--eps-list", default="0.01,0.001")
    sp.set_defaults(func=cmd_tfe)

    sp = common(sub.add_parser("decay-check", help="linearised decay about a flat state"))
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--fbar", type=float, default=1.0)
    sp.add_argument("--gbar", type=float, default=1.0)
    sp.add_argument("--amp", type=float, default=1e-3)
    sp.add_argument("--horizon", type=float, default=1.0)
    sp.set_defaults(func=cmd_decay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ThinLayersError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
