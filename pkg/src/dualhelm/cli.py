"""Command-line entry point.

``dualhelm MODE --config PATH [--out DIR] [--label S]``

Exit status: 0 when every asserted invariant of the run holds, 2 when a solve
did not converge (outputs are still written), 1 on any error or failed
invariant.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import MODES, RunConfig, parse_config
from .dual import DualProblem
from .errors import DualHelmError
from .experiments import (
    concentration_sweep,
    default_rho,
    energy_comparison,
    multiplicity_run,
    offdiag_probe,
    records_to_csv,
)
from .fieldio import write_field
from .kernels import verify_kernel_bounds
from .regime import compute_roots
from .resolvent import GridField
from .solver import default_seed, limit_problem, minimize_nehari, reconstruct_u

EXIT_OK, EXIT_ERROR, EXIT_NONCONVERGED = 0, 1, 2
ON_MANIFOLD_RTOL = 1e-10


class _Writer:
    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.output["directory"])
        self.label = cfg.output["label"]
        self.formats = set(cfg.output["formats"])
        self.written: list[str] = []
        self.dir.mkdir(parents=True, exist_ok=True)

    def path(self, suffix: str) -> Path:
        return self.dir / f"{self.label}_{suffix}"

    def text(self, suffix: str, content: str, fmt: str) -> None:
        if fmt in self.formats:
            self.path(suffix).write_text(content)
            self.written.append(self.path(suffix).name)

    def field(self, suffix: str, f: GridField) -> None:
        if "field" in self.formats:
            write_field(self.path(suffix), f)
            self.written.append(self.path(suffix).name)


def _plain(obj):
    """Convert numpy scalars and containers to YAML-safe builtins."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def _summary(cfg: RunConfig, results: dict, verdicts: dict, status: int, writer: _Writer) -> str:
    doc = {
        "version": __version__,
        "mode": cfg.mode,
        "status": status,
        "verdicts": verdicts,
        "results": results,
        "files": sorted(writer.written),
        "config": cfg.resolved,
    }
    return yaml.safe_dump(_plain(doc), sort_keys=False)


def _status(converged: bool, invariants_ok: bool) -> int:
    if not invariants_ok:
        return EXIT_ERROR
    return EXIT_OK if converged else EXIT_NONCONVERGED


def _on_manifold(v, prob, energy) -> bool:
    ref = (1.0 / prob.pp - 0.5) * prob.norm_pp(v)
    return abs(energy - ref) <= ON_MANIFOLD_RTOL * abs(ref)


def _run_single(cfg: RunConfig, w: _Writer):
    if cfg.mode == "limit":
        prob = limit_problem(cfg.params, cfg.grid, cfg.weight.W0, cfg.eta)
    else:
        prob = DualProblem.build(cfg.params, cfg.grid, cfg.weight, cfg.eps, cfg.eta)
    state, report = minimize_nehari(prob, default_seed(prob, cfg.seed_center), cfg.solver)
    u = reconstruct_u(state.samples, prob)
    w.text("report.yaml", report.to_yaml(), "yaml")
    w.text("trace.csv", report.trace_csv(), "csv")
    w.field("field_v.bin", GridField(state.samples, cfg.grid))
    w.field("field_u.bin", GridField(u, cfg.grid))
    ok = _on_manifold(state.samples, prob, report.energy)
    results = {"report": report.to_dict(), "W0": cfg.weight.W0}
    if cfg.mode == "limit":
        results["c0"] = report.energy
    return results, {"on_manifold": ok, "converged": report.converged}, report.converged, ok


def _run_energy(cfg: RunConfig, w: _Writer):
    ec = energy_comparison(cfg.params, cfg.grid, cfg.weight, cfg.eps_list, cfg.solver, cfg.eta)
    w.text("energy.csv", records_to_csv(ec.rows), "csv")
    s = ec.summary()
    converged = s["all_converged"]
    verdicts = {"gaps_nonnegative": s["gaps_nonnegative"], "gaps_monotone (reported)": s["gaps_monotone"]}
    return s, verdicts, converged, s["gaps_nonnegative"]


def _run_concentration(cfg: RunConfig, w: _Writer):
    recs = concentration_sweep(
        cfg.params, cfg.grid, cfg.weight, cfg.eps_list, cfg.solver, cfg.eta, cfg.experiment["rho"]
    )
    w.text("concentration.csv", records_to_csv(recs), "csv")
    d = [r.dist_to_M for r in recs]
    manifold = all(r.on_manifold_gap <= ON_MANIFOLD_RTOL for r in recs if r.converged)
    results = {
        "rho": cfg.experiment["rho"] or default_rho(cfg.weight),
        "dist_to_M": d,
        "final_below_quarter_width": bool(d and d[-1] < cfg.weight.width / 4),
        "dist_nonincreasing": bool(all(b <= a for a, b in zip(d, d[1:]))),
    }
    verdicts = {"on_manifold": manifold, "dist_nonincreasing (reported)": results["dist_nonincreasing"]}
    return results, verdicts, all(r.converged for r in recs), manifold


def _run_multiplicity(cfg: RunConfig, w: _Writer):
    ex = cfg.experiment
    res = multiplicity_run(cfg.params, cfg.grid, cfg.weight, cfg.eps, ex["nu"], ex["delta"], cfg.solver, cfg.eta)
    w.text("multiplicity.csv", records_to_csv(res.solutions), "csv")
    s = res.summary()
    converged = all(x.converged for x in res.solutions) and not res.failures
    verdicts = {
        "distinct_solutions": res.count,
        "all_in_sublevel (reported)": s["all_in_sublevel"],
        "distinct_centers (reported)": s["distinct_centers"],
    }
    return s, verdicts, converged, True


def _run_offdiag(cfg: RunConfig, w: _Writer):
    r = offdiag_probe(cfg.params, cfg.grid, cfg.params.p, cfg.experiment["r_list"], cfg.experiment["radius"])
    w.text("offdiag.csv", records_to_csv(r.records), "csv")
    s = r.summary()
    return s, {"slope_within_rate": r.passed, "monotone (reported)": r.monotone}, True, r.passed


def _run_kernel_bounds(cfg: RunConfig, w: _Writer):
    roots = compute_roots(cfg.params.alpha, cfg.params.beta)
    dims = cfg.experiment["dimensions"] or [cfg.params.N]
    out = {}
    for N in dims:
        rep = verify_kernel_bounds(roots, N)
        w.text(f"kernel_bounds_N{N}.csv", rep.to_csv(), "csv")
        out[f"N{N}"] = rep.summary()
    verdicts = {k: {"inner_pass": v["inner_pass"], "outer_pass": v["outer_pass"]} for k, v in out.items()}
    return out, verdicts, True, True


DRIVERS = {
    "solve": _run_single,
    "limit": _run_single,
    "energy-comparison": _run_energy,
    "concentration": _run_concentration,
    "multiplicity": _run_multiplicity,
    "offdiag": _run_offdiag,
    "kernel-bounds": _run_kernel_bounds,
}


def run(cfg: RunConfig) -> int:
    w = _Writer(cfg)
    results, verdicts, converged, ok = DRIVERS[cfg.mode](cfg, w)
    status = _status(converged, ok)
    w.text("summary.yaml", _summary(cfg, results, verdicts, status, w), "yaml")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dualhelm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--out", help="output directory (overrides output.directory)")
        sp.add_argument("--label", help="run label used in file names")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, mode=args.mode, out=args.out, label=args.label)
        status = run(cfg)
    except (DualHelmError, OSError) as exc:
        print(f"dualhelm {args.mode}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if status == EXIT_NONCONVERGED:
        print(f"dualhelm {args.mode}: solve did not converge; outputs written", file=sys.stderr)
    elif status == EXIT_ERROR:
        print(f"dualhelm {args.mode}: an asserted invariant failed; see summary", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
