"""Command-line experiment harness.

Builds Sylvester test problems (finite-difference operators or Matrix Market
files, seeded random right-hand sides), runs one of the four solver variants
and writes per-cycle convergence histories plus summary tables.

Variants:

* ``glgmres``     restarted global GMRES (identity weight)
* ``wglgmres``    restarted weighted global GMRES
* ``glgmres-d``   deflated restarts, identity weight
* ``wglgmres-d``  deflated restarts with weighting

Exit codes: 0 converged, 2 stopped at the cycle cap, 1 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np

from .core import SylvesterOperator
from .problems import (
    FdmSpec,
    MatrixMarketError,
    ProblemInstance,
    default_density,
    fdm_matrix,
    gen_rhs,
    read_matrix_market,
)
from .solver import SolverConfig, wglgmres, wglgmres_dr
from .weighting import STRATEGY_KINDS, WeightStrategy

__all__ = [
    "ExperimentConfig",
    "UsageError",
    "VARIANTS",
    "COEFFICIENT_PRESETS",
    "run_experiment",
    "compare_variants",
    "render_comparison",
    "main",
]

VARIANTS = ("glgmres", "wglgmres", "glgmres-d", "wglgmres-d")

HISTORY_HEADER = ["cycle", "cumulative_iter", "est_resnorm", "true_resnorm",
                  "weight_strategy", "wall_s"]
SUMMARY_HEADER = ["variant", "strategy", "m", "k", "iter", "res_norm", "cpu_s", "converged"]

# Named coefficient triples (f1, f2, f3) for the finite-difference operator.
COEFFICIENT_PRESETS = {
    "varcoef1": (lambda x, y: np.exp(x**2 + y),
                 lambda x, y: np.sin(x + 2.0 * y),
                 lambda x, y: np.cos(x * y)),
    "varcoef2": (lambda x, y: 2.0 * x * y,
                 lambda x, y: np.exp(x * y),
                 lambda x, y: x * y),
    "varcoef3": (lambda x, y: np.cos(x * y),
                 lambda x, y: np.exp(y**2 * x),
                 100.0),
    "varcoef4": (lambda x, y: np.sin(x * y),
                 lambda x, y: np.exp(x * y),
                 10.0),
    "laplace": (0.0, 0.0, 0.0),
}


class UsageError(ValueError):
    """Bad configuration; maps to exit code 1."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One solver run: problem source, variant and solver controls."""

    variant: str = "wglgmres"
    strategy: str = "mean"
    m: int = 20
    k: int = 0
    tol: float = 1e-6
    maxit: int = 2500
    seed: int = 0
    density: float | None = None
    fdm_n0: int = 20
    fdm_s0: int = 2
    preset_a: str = "varcoef1"
    preset_b: str = "varcoef2"
    matrix_a: str | None = None
    matrix_b: str | None = None
    out: str = "out"

    def validate(self):
        if self.variant not in VARIANTS:
            raise UsageError(f"unknown variant {self.variant!r}; choose one of {', '.join(VARIANTS)}")
        if self.strategy not in STRATEGY_KINDS:
            raise UsageError(
                f"unknown strategy {self.strategy!r}; choose one of {', '.join(STRATEGY_KINDS)}"
            )
        if self.variant in ("glgmres", "glgmres-d") and self.strategy != "identity":
            raise UsageError(
                f"variant {self.variant} is the unweighted method; "
                "it requires --strategy identity"
            )
        if self.variant.endswith("-d") and self.k < 1:
            raise UsageError(f"variant {self.variant} needs a deflation count --k >= 1")
        if not self.variant.endswith("-d") and self.k != 0:
            raise UsageError(f"variant {self.variant} does not deflate; set --k 0")
        if self.matrix_a is None and self.preset_a not in COEFFICIENT_PRESETS:
            raise UsageError(
                f"unknown preset {self.preset_a!r}; choose one of {', '.join(COEFFICIENT_PRESETS)}"
            )
        if self.matrix_b is None and self.preset_b not in COEFFICIENT_PRESETS:
            raise UsageError(
                f"unknown preset {self.preset_b!r}; choose one of {', '.join(COEFFICIENT_PRESETS)}"
            )

    def label(self):
        return f"{self.variant}_{self.strategy}_m{self.m}_k{self.k}"


def _build_matrix(path, preset, n0, role):
    if path is not None:
        try:
            return read_matrix_market(path), f"file:{path}"
        except OSError as exc:
            raise UsageError(f"cannot read {role} matrix: {exc}") from exc
    f1, f2, f3 = COEFFICIENT_PRESETS[preset]
    return fdm_matrix(FdmSpec(n0, f1, f2, f3)), f"fdm:{preset}:n0={n0}"


def build_problem(cfg):
    """Assemble the ProblemInstance an ExperimentConfig names."""
    a, prov_a = _build_matrix(cfg.matrix_a, cfg.preset_a, cfg.fdm_n0, "A")
    b, prov_b = _build_matrix(cfg.matrix_b, cfg.preset_b, cfg.fdm_s0, "B")
    op = SylvesterOperator(a, b)
    density = cfg.density if cfg.density is not None else default_density(op.n, op.s)
    c = gen_rhs(op.n, op.s, cfg.seed, density)
    provenance = f"A=({prov_a}) B=({prov_b}) rhs(seed={cfg.seed}, density={density:g})"
    return ProblemInstance(op=op, c=c, seed=cfg.seed, provenance=provenance)


def _solver_config(cfg):
    seed = cfg.seed if cfg.strategy == "random" else None
    strategy = WeightStrategy(cfg.strategy, seed=seed)
    return SolverConfig(m=cfg.m, k=cfg.k, tol=cfg.tol, maxit=cfg.maxit, strategy=strategy)


def _write_history(report, path):
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_HEADER)
        for rec in report.history:
            writer.writerow([rec.cycle, rec.cumulative_iter, repr(rec.est_resnorm),
                             repr(rec.true_resnorm), rec.weight_tag, f"{rec.wall_s:.6f}"])


def _summary_row(cfg, report):
    return {
        "variant": cfg.variant,
        "strategy": cfg.strategy,
        "m": cfg.m,
        "k": cfg.k,
        "iter": report.cycles,
        "res_norm": report.true_resnorm,
        "cpu_s": report.wall_time,
        "converged": report.converged,
    }


def _write_summary(rows, path):
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for row in rows:
            writer.writerow([row["variant"], row["strategy"], row["m"], row["k"],
                             row["iter"], repr(row["res_norm"]), f"{row['cpu_s']:.4f}",
                             int(row["converged"])])


def run_experiment(cfg, history_name="history.csv", summary_name="summary.csv"):
    """Run one configured solve; emit history and summary files.

    Returns ``(report, files)`` where ``files`` maps the emitted kinds to
    their paths.  The initial guess is always the zero block.
    """
    from pathlib import Path

    cfg.validate()
    problem = build_problem(cfg)
    solver_cfg = _solver_config(cfg)
    solve = wglgmres_dr if cfg.k >= 1 else wglgmres
    report = solve(problem.op, problem.c, solver_cfg)

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    history_path = out_dir / history_name
    summary_path = out_dir / summary_name
    _write_history(report, history_path)
    _write_summary([_summary_row(cfg, report)], summary_path)
    files = {"history": str(history_path), "summary": str(summary_path),
             "provenance": problem.provenance}
    return report, files


def compare_variants(cfgs):
    """Run several configs that differ only in variant/strategy/(m, k).

    Returns ``(rows, reports)`` with one summary row per config, in order.
    """
    base = None
    for cfg in cfgs:
        cfg.validate()
        core = {name: value for name, value in asdict(cfg).items()
                if name not in ("variant", "strategy", "m", "k")}
        if base is None:
            base = core
        elif core != base:
            raise UsageError("compared configs may differ only in variant, strategy, m and k")
    rows = []
    reports = []
    for cfg in cfgs:
        problem = build_problem(cfg)
        solve = wglgmres_dr if cfg.k >= 1 else wglgmres
        report = solve(problem.op, problem.c, _solver_config(cfg))
        rows.append(_summary_row(cfg, report))
        reports.append(report)
    return rows, reports


def render_comparison(rows):
    """Fixed-width text table of comparison rows."""
    header = ["variant", "strategy", "(m,k)", "iter", "res.norm", "CPU(s)", "converged"]
    table = [header]
    for row in rows:
        table.append([row["variant"], row["strategy"], f"({row['m']},{row['k']})",
                      str(row["iter"]), f"{row['res_norm']:.4e}", f"{row['cpu_s']:.3f}",
                      "yes" if row["converged"] else "no"])
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip()
             for r in table]
    return "\n".join(lines)


class _Parser(argparse.ArgumentParser):
    # usage errors exit with code 1 (2 is reserved for non-convergence)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common_flags(p):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--variant", choices=VARIANTS, help="solver variant")
    p.add_argument("--strategy", choices=STRATEGY_KINDS, help="weighting strategy")
    p.add_argument("--m", type=int, help="restart length")
    p.add_argument("--k", type=int, help="deflation count (deflated variants)")
    p.add_argument("--tol", type=float, help="relative stopping tolerance")
    p.add_argument("--maxit", type=int, help="cycle cap")
    p.add_argument("--seed", type=int, help="seed for the right-hand side (and random weights)")
    p.add_argument("--density", type=float, help="right-hand-side fill-in, in (0, 1]")
    p.add_argument("--fdm-n0", type=int, dest="fdm_n0", help="grid points per axis for A")
    p.add_argument("--fdm-s0", type=int, dest="fdm_s0", help="grid points per axis for B")
    p.add_argument("--preset-a", dest="preset_a", help="coefficient preset for A")
    p.add_argument("--preset-b", dest="preset_b", help="coefficient preset for B")
    p.add_argument("--matrix-a", dest="matrix_a", help="Matrix Market file for A")
    p.add_argument("--matrix-b", dest="matrix_b", help="Matrix Market file for B")
    p.add_argument("--out", help="output directory")


def _config_from_args(args):
    values = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        fields = set(ExperimentConfig.__dataclass_fields__)
        unknown = set(loaded) - fields
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(loaded)
    for name in ExperimentConfig.__dataclass_fields__:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc


def main(argv=None):
    parser = _Parser(prog="sylgmres",
                     description="Weighted, deflated global GMRES for AX + XB = C")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", parents=[], help="run one experiment")
    _add_common_flags(run_p)
    cmp_p = sub.add_parser("compare", help="run several variants on one problem")
    _add_common_flags(cmp_p)
    cmp_p.add_argument("--variants", required=True,
                       help="comma-separated variants to compare")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args)
    except (UsageError, MatrixMarketError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _cmd_run(args):
    cfg = _config_from_args(args)
    report, files = run_experiment(cfg)
    status = "converged" if report.converged else f"NOT converged within maxit={cfg.maxit}"
    print(f"{cfg.variant} ({cfg.strategy}, m={cfg.m}, k={cfg.k}): "
          f"iter={report.cycles} res.norm={report.true_resnorm:.4e} "
          f"CPU={report.wall_time:.3f}s [{status}]")
    print(f"history: {files['history']}")
    return 0 if report.converged else 2


def _cmd_compare(args):
    from pathlib import Path

    base = _config_from_args(args)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    cfgs = []
    for variant in variants:
        strategy = base.strategy if variant.startswith("w") else "identity"
        k = base.k if variant.endswith("-d") else 0
        cfgs.append(replace(base, variant=variant, strategy=strategy, k=k))
    rows, reports = compare_variants(cfgs)

    out_dir = Path(base.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_summary(rows, out_dir / "comparison.csv")
    for cfg, report in zip(cfgs, reports):
        _write_history(report, out_dir / f"history_{cfg.label()}.csv")
    print(render_comparison(rows))
    print(f"comparison: {out_dir / 'comparison.csv'}")
    return 0 if all(r["converged"] for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())
