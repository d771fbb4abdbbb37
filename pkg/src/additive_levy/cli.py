"""Command-line front end.

    additive-levy analyze {range,dimension,multipoints,subintersect} CONFIG [options]
    additive-levy simulate {range,occupation,boxdim} CONFIG [options]
    additive-levy diagnose-sector CONFIG [options]

Exit codes: 0 criterion holds (or a valid estimate), 2 criterion fails,
3 scaling boundary (Critical), 1 usage error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, simulate
from .config import ConfigError, ProcessConfig, load_config
from .exponent import UsageError
from .integrand import sector_ratio
from .quadrature import CONVERGES, CRITICAL, DIVERGES, QuadratureOptions

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_CRITICAL = 0, 1, 2, 3
_VERDICT_EXIT = {CONVERGES: EXIT_OK, DIVERGES: EXIT_FAIL, CRITICAL: EXIT_CRITICAL}

SECTOR_POINTS = 10_000
BOXDIM_AGREEMENT = 0.2


def _shells(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected m_min:m_max, got {text!r}") from None
    if lo >= hi:
        raise argparse.ArgumentTypeError("m_min must be below m_max")
    return lo, hi


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="directory for report and CSV files")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="what to print on stdout")
    p.add_argument("--deterministic", action="store_true", help="omit timing from the report")


def _quad_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--shells", type=_shells, default=None, metavar="M_MIN:M_MAX")
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo points per shell")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="additive-levy", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="decide an analytic criterion")
    an.add_argument("question", choices=("range", "dimension", "multipoints", "subintersect"))
    _common(an)
    _quad_flags(an)
    an.add_argument("--beta-tol", type=float, default=0.05)
    an.add_argument("--k", type=int, default=None, help="multiplicity (overrides the config)")
    an.add_argument("--of", choices=("range", "multipoints"), default="range",
                    help="which set 'dimension' measures")

    sim = sub.add_parser("simulate", help="Monte Carlo cross-check")
    sim.add_argument("question", choices=("range", "occupation", "boxdim"))
    _common(sim)
    sim.add_argument("--xi", type=float, nargs="+", default=None)
    sim.add_argument("--replicates", type=int, default=None)
    sim.add_argument("--h", type=float, default=None)

    diag = sub.add_parser("diagnose-sector", help="sample the sector ratio")
    _common(diag)
    _quad_flags(diag)
    return parser


# helpers ----------------------------------------------------------------------

def _options(args, default_samples: Optional[int] = None) -> QuadratureOptions:
    kw = {"seed": args.seed, "workers": args.workers}
    if args.shells is not None:
        kw["m_min"], kw["m_max"] = args.shells
    samples = args.samples if args.samples is not None else default_samples
    if samples is not None:
        kw["samples"] = samples
    if args.window is not None:
        kw["window"] = args.window
    return QuadratureOptions(**kw)


def _finite(x):
    """JSON has no infinities; map them to strings."""
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, np.generic):
        return _finite(x.item())
    return x


class Job:
    def __init__(self, args, cfg: ProcessConfig, question: str):
        self.args, self.cfg = args, cfg
        self.report: dict = {"schema": SCHEMA, "question": question,
                             "inputs": {"config": str(args.config), **cfg.resolved()},
                             "verdict": None, "dim": None, "critical_beta": None,
                             "assumptions": [], "flags": [], "shell_csv_path": None,
                             "seed": args.seed}
        self.csv_text: Optional[str] = None
        self.csv_name = "shells.csv"

    def attach_csv(self, text: str, name: str, path_key: str = "shell_csv_path") -> None:
        self.csv_text, self.csv_name = text, name
        if self.args.out is not None:
            self.report[path_key] = str(self.args.out / name)

    def finish(self, elapsed: float) -> None:
        if not self.args.deterministic:
            self.report["timing"] = {"seconds": round(elapsed, 6)}
        text = json.dumps(_finite(self.report), indent=2) + "\n"
        if self.args.out is not None:
            self.args.out.mkdir(parents=True, exist_ok=True)
            (self.args.out / "report.json").write_text(text)
            if self.csv_text is not None:
                (self.args.out / self.csv_name).write_text(self.csv_text)
        if self.args.format == "csv":
            sys.stdout.write(self.csv_text or "")
        else:
            sys.stdout.write(text)


def _verdict_payload(job: Job, v) -> int:
    job.report["verdict"] = v.verdict
    job.report["result"] = v.to_dict()
    job.report["assumptions"] = list(v.assumptions)
    job.report["flags"] = list(v.flags)
    job.attach_csv(v.shell_table.to_csv(), "shells.csv")
    return _VERDICT_EXIT[v.verdict]


def _multipoint_exponents(cfg: ProcessConfig, k: Optional[int]):
    k = k if k is not None else cfg.k
    comps = cfg.process.components
    if k is None and len(comps) < 2:
        raise UsageError("multipoint questions need k (config field or --k) or several components")
    return comps, k


# commands -----------------------------------------------------------------------

def cmd_analyze(args, cfg: ProcessConfig) -> tuple[Job, int]:
    job = Job(args, cfg, f"analyze.{args.question}")
    proc = cfg.process
    q = args.question
    if q == "range":
        opts = _options(args)
        job.report["inputs"]["quadrature"] = opts.to_dict()
        return job, _verdict_payload(job, analysis.range_positivity(proc, opts))
    if q == "subintersect":
        if proc.N != 2:
            raise UsageError("subintersect needs exactly two components")
        opts = _options(args)
        job.report["inputs"]["quadrature"] = opts.to_dict()
        v = analysis.subordinator_intersection(proc.components[0], proc.components[1], opts)
        return job, _verdict_payload(job, v)
    if q == "multipoints":
        comps, k = _multipoint_exponents(cfg, args.k)
        n = k if k is not None else len(comps)
        opts = _options(args, analysis.MULTIPOINT_SAMPLES if n > 2 else None)
        job.report["inputs"]["k"] = n
        job.report["inputs"]["quadrature"] = opts.to_dict()
        return job, _verdict_payload(job, analysis.multiple_points_exist(comps, k, opts))

    # dimension
    job.report["inputs"]["beta_tol"] = args.beta_tol
    job.report["inputs"]["of"] = args.of
    if args.of == "multipoints":
        comps, k = _multipoint_exponents(cfg, args.k)
        opts = _options(args, analysis.MULTIPOINT_DIM_SAMPLES)
        job.report["inputs"]["k"] = k if k is not None else len(comps)
        res = analysis.multipoint_dimension(comps, k, opts, args.beta_tol)
    else:
        opts = _options(args)
        res = analysis.hausdorff_dimension_range(proc, opts, args.beta_tol)
    job.report["inputs"]["quadrature"] = opts.to_dict()
    job.report["dim"] = res.dim
    job.report["critical_beta"] = res.critical_beta
    job.report["result"] = res.to_dict()
    job.report["assumptions"] = list(res.assumptions)
    job.report["flags"] = list(res.flags)
    job.attach_csv(res.shell_table.to_csv(), "shells.csv")
    return job, EXIT_OK


def _sim_config(args, cfg: ProcessConfig) -> simulate.SimulationConfig:
    kw = dict(cfg.simulation or {})
    if args.replicates is not None:
        kw["replicates"] = args.replicates
    if args.h is not None:
        kw["h"] = args.h
    return simulate.SimulationConfig(cfg.process, seed=args.seed, **kw)


def cmd_simulate(args, cfg: ProcessConfig) -> tuple[Job, int]:
    job = Job(args, cfg, f"simulate.{args.question}")
    sc = _sim_config(args, cfg)
    job.report["inputs"]["simulation"] = sc.describe()
    proc = cfg.process
    code = EXIT_OK
    if args.question == "occupation":
        xi = args.xi if args.xi is not None else [1.0] * proc.d
        job.report["inputs"]["xi"] = list(xi)
        s = simulate.occupation_fourier(sc, xi)
        agree = abs(s.estimate - s.target) <= 3.0 * s.stderr
        job.report["result"] = {**s.to_dict(), "analytic": s.target, "agreement": agree}
        buf = io.StringIO()
        buf.write("replicate,statistic,value\n")
        for i, v in enumerate(s.values):
            buf.write(f"{i},abs_O_squared,{float(v)!r}\n")
        job.attach_csv(buf.getvalue(), "replicates.csv", "replicate_csv_path")
        code = EXIT_OK if agree else EXIT_FAIL
    elif args.question == "range":
        rv = simulate.range_volume(sc)
        v = analysis.range_positivity(proc, QuadratureOptions(seed=args.seed))
        job.report["verdict"] = v.verdict
        job.report["result"] = {**rv.to_dict(), "analytic_verdict": v.verdict,
                                "note": "voxel estimate is mesh dependent and biased"}
        buf = io.StringIO()
        buf.write("replicate,statistic,value\n")
        for i, val in enumerate(rv.values):
            buf.write(f"{i},volume,{float(val)!r}\n")
        job.attach_csv(buf.getvalue(), "replicates.csv", "replicate_csv_path")
    else:
        b = simulate.box_counting_dimension(sc)
        target = analysis.hausdorff_dimension_range(proc, QuadratureOptions(seed=args.seed))
        agree = abs(b.dim - target.dim) <= BOXDIM_AGREEMENT
        job.report["dim"] = b.dim
        job.report["result"] = {**b.to_dict(), "analytic": target.dim,
                                "agreement": agree, "agreement_tolerance": BOXDIM_AGREEMENT}
        buf = io.StringIO()
        buf.write("level,statistic,value\n")
        for lv, c in zip(b.levels, b.counts):
            buf.write(f"{int(lv)},box_count,{float(c)!r}\n")
        job.attach_csv(buf.getvalue(), "boxcounts.csv", "replicate_csv_path")
        code = EXIT_OK if agree else EXIT_FAIL
    return job, code


def cmd_diagnose_sector(args, cfg: ProcessConfig) -> tuple[Job, int]:
    job = Job(args, cfg, "diagnose-sector")
    opts = _options(args)
    job.report["inputs"]["quadrature"] = opts.to_dict()
    job.report["inputs"]["points"] = SECTOR_POINTS
    d = cfg.process.d
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(0x5EC,)))
    direction = rng.standard_normal((SECTOR_POINTS, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = np.exp2(rng.uniform(opts.m_min, opts.m_max + 1, SECTOR_POINTS))
    ratios = np.asarray(sector_ratio(cfg.process, direction * radius[:, None]))
    qs = (0.0, 0.01, 0.1, 0.5, 0.9, 0.99, 1.0)
    quant = np.quantile(ratios, qs)
    violated = bool(ratios.min() <= 0.0)
    job.report["verdict"] = "sector_violated" if violated else "sector_plausible"
    job.report["result"] = {
        "min": float(ratios.min()),
        "quantiles": {str(q): float(v) for q, v in zip(qs, quant)},
        "violated": violated,
        "note": "range positivity does not depend on the sector condition",
    }
    buf = io.StringIO()
    buf.write("point,statistic,value\n")
    for i, v in enumerate(ratios):
        buf.write(f"{i},sector_ratio,{float(v)!r}\n")
    job.attach_csv(buf.getvalue(), "sector.csv", "replicate_csv_path")
    return job, EXIT_OK


_COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate,
             "diagnose-sector": cmd_diagnose_sector}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        job, code = _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, simulate.ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    job.finish(time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
