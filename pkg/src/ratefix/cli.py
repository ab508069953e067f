"""Command-line entry point: ``ratefix {rate,certify,lg,bailey}``.

Exit status is 0 on success, 1 on input errors and 2 when the solver did not
converge (or, for ``certify``, when no bound certifies uniqueness).
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ratefix import bailey, certificates, io, leslie_gower
from ratefix.errors import RatefixError, SingularMatrix, UnsupportedDimension, ZeroExposure
from ratefix.iteration import IterationSettings, fixed_point_residual, iterate, multistart
from ratefix.rating import assemble_rates, indicated_base_rate

log = logging.getLogger("ratefix")

EXIT_OK, EXIT_INPUT, EXIT_UNCONVERGED = 0, 1, 2
RATING_DEFAULTS = (1e-10, 10_000)
LG_DEFAULTS = (1e-12, 100_000)


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Path
    plr: float = 1.0
    tolerance: float | None = None
    max_iters: int | None = None
    seed: int = 0
    format: str = "text"
    strict: bool = True
    shrink: float = 0.5
    base_cell: tuple[int, ...] | None = None
    starts: int = 5
    out: Path | None = None

    def settings(self) -> IterationSettings:
        tol, iters = LG_DEFAULTS if self.command == "lg" else RATING_DEFAULTS
        return IterationSettings(
            tolerance=tol if self.tolerance is None else self.tolerance,
            max_iters=iters if self.max_iters is None else self.max_iters,
        )


def _floats(a) -> list:
    return np.asarray(a, dtype=np.float64).tolist()


def _trace_summary(trace, settings: IterationSettings) -> dict:
    return {
        "converged": trace.converged,
        "iterations_used": trace.iterations_used,
        "settled_at": trace.settled_at,
        "final_residual": trace.final_residual,
        "tolerance": settings.tolerance,
        "max_iters": settings.max_iters,
    }


def _certificate_report(problem) -> dict:
    try:
        cert = certificates.certify(problem)
    except (UnsupportedDimension, ZeroExposure) as exc:
        return {"available": False, "reason": str(exc)}
    names = problem.axis_names
    return {
        "available": True,
        "verdict": cert.verdict.value,
        "rho_inf": cert.rho_inf,
        "rho_1": cert.rho_1,
        "rho": cert.rho,
        "r_inf": cert.r_inf,
        "r_1": cert.r_1,
        "r": cert.r,
        "box": {
            name: {"lower": _floats(lo), "upper": _floats(hi)}
            for name, lo, hi in zip(names, cert.box.lower.blocks, cert.box.upper.blocks)
        },
    }


def _multistart_report(problem, cfg: RunConfig, settings) -> dict:
    rng = np.random.default_rng(cfg.seed)
    ms = multistart(problem, cfg.starts, rng, settings)
    return {"starts": cfg.starts, "seed": cfg.seed, "all_converged": ms.all_converged,
            "spread_inf": ms.spread}


def run_rate(cfg: RunConfig) -> tuple[dict, int]:
    problem = io.ingest_rating_csv(cfg.input, cfg.plr, cfg.strict, cfg.base_cell)
    settings = cfg.settings()
    trace = iterate(problem, None, settings)
    final = trace.state()
    cert = _certificate_report(problem)
    report = {
        "command": "rate",
        "problem": _problem_echo(problem, cfg),
        "iteration": _trace_summary(trace, settings)
        | {"fixed_point_residual": fixed_point_residual(problem, final)},
        "certificate": cert,
    }
    if not cert["available"] or cert["verdict"] != "CertifiedUnique":
        report["multistart"] = _multistart_report(problem, cfg, settings)
    report["factors"] = {name: _floats(b) for name, b in zip(problem.axis_names, final.blocks)}
    base = indicated_base_rate(problem, final)
    report["base_rate"] = base
    report["rates"] = assemble_rates(base, final).values.tolist()
    return report, EXIT_OK if trace.converged else EXIT_UNCONVERGED


def run_certify(cfg: RunConfig) -> tuple[dict, int]:
    problem = io.ingest_rating_csv(cfg.input, cfg.plr, cfg.strict, cfg.base_cell)
    cert = _certificate_report(problem)
    if not cert["available"]:
        raise UnsupportedDimension(cert["reason"])
    report = {"command": "certify", "problem": _problem_echo(problem, cfg), "certificate": cert}
    return report, EXIT_OK if cert["verdict"] == "CertifiedUnique" else EXIT_UNCONVERGED


def _problem_echo(problem, cfg: RunConfig) -> dict:
    return {
        "axis_names": list(problem.axis_names),
        "dims": list(problem.dims),
        "level_order": io.level_orders(problem.dims, cfg.base_cell),
        "total_loss": problem.total_loss,
        "plr": problem.plr,
        "strict": problem.strict,
        "digest": io.problem_digest(problem),
    }


def run_lg(cfg: RunConfig) -> tuple[dict, int]:
    model = io.load_lg_json(cfg.input)
    settings = cfg.settings()
    diag = leslie_gower.diagnose(model, cfg.shrink)
    report = {
        "command": "lg",
        "model": {"d": model.d, "b": _floats(model.b), "C": model.C.tolist(),
                  "digest": io.model_digest(model)},
        "diagnostics": {
            "growth_ok": diag.growth_ok,
            "rank": diag.rank,
            "rank_augmented": diag.rank_augmented,
            "rank_consistent": diag.rank_consistent,
            "invertible": diag.invertible,
            "weak_competition": diag.weak_competition,
            "weak_competition_tight": diag.weak_competition_tight,
            "weak_competition_slack": _floats(diag.weak_competition_slack),
            "carrying_capacities": _floats(diag.carrying_capacities),
            "box": None if diag.box is None else
            {"lower": _floats(diag.box[0]), "upper": _floats(diag.box[1])},
        },
    }
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            x_lin = leslie_gower.solve_linear(model)
        report["linear_solution"] = {"x": _floats(x_lin), "interior": bool(np.all(x_lin > 0))}
    except SingularMatrix as exc:
        x_lin = None
        report["linear_solution"] = {"x": None, "error": str(exc)}

    rng = np.random.default_rng(cfg.seed)
    starts = [np.ones(model.d)] + [leslie_gower.random_start(model, rng) for _ in range(cfg.starts)]
    traces = [leslie_gower.iterate_lg(model, x0, settings) for x0 in starts]
    main = traces[0]
    report["iteration"] = _trace_summary(main, settings) | {"limit": _floats(main.final)}
    agreement = {
        "starts": len(starts),
        "seed": cfg.seed,
        "all_converged": all(t.converged for t in traces),
        "spread_inf": max(float(np.abs(t.final - main.final).max()) for t in traces),
    }
    if x_lin is not None:
        agreement["max_gap_to_linear"] = max(leslie_gower.equilibrium_gap(t, x_lin) for t in traces)
        agreement["bh_residual_at_linear"] = float(
            np.abs(leslie_gower.bh_map(model, np.maximum(x_lin, 0)) - x_lin).max()
        )
    report["agreement"] = agreement
    return report, EXIT_OK if agreement["all_converged"] else EXIT_UNCONVERGED


def run_bailey(cfg: RunConfig) -> tuple[dict, int]:
    problem = io.ingest_rating_csv(cfg.input, cfg.plr, cfg.strict, cfg.base_cell)
    bp = bailey.BaileyProblem.from_rating(problem)
    settings = cfg.settings()
    trace = bailey.bailey_iterate(bp, settings=settings)
    fitted = bailey.normalize(trace.state())
    rows, cols = bailey.bailey_residuals(bp, *fitted.blocks)
    lr = iterate(problem, None, settings)
    lr_state = lr.state()
    names = problem.axis_names
    report = {
        "command": "bailey",
        "problem": _problem_echo(problem, cfg),
        "iteration": _trace_summary(trace, settings),
        "factors": {n: _floats(b) for n, b in zip(names, fitted.blocks)},
        "bias_residuals": {"rows": _floats(rows), "columns": _floats(cols)},
        "loss_ratio": {
            "converged": lr.converged,
            "iterations_used": lr.iterations_used,
            "factors": {n: _floats(b) for n, b in zip(names, lr_state.blocks)},
            "distance_inf": float(np.abs(fitted.flat() - lr_state.flat()).max()),
        },
    }
    ok = trace.converged and lr.converged
    return report, EXIT_OK if ok else EXIT_UNCONVERGED


COMMANDS = {"rate": run_rate, "certify": run_certify, "lg": run_lg, "bailey": run_bailey}


def run(cfg: RunConfig) -> tuple[str, int]:
    """Execute one command; returns the rendered report and the exit status."""
    report, status = COMMANDS[cfg.command](cfg)
    text = io.to_json(report) if cfg.format == "json" else render_text(report)
    return text, status


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def render_text(report: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for key, value in report.items():
        if key == "rates":
            lines.append(f"{pad}rates: {np.asarray(value).shape} table (use --format json for values)")
        elif isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(render_text(value, indent + 1).rstrip("\n"))
        else:
            lines.append(f"{pad}{key}: {_fmt(value)}")
    return "\n".join(lines) + "\n"


def _base_cell(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, type=Path,
                        help="CSV (rate/certify/bailey) or JSON (lg) input file")
    common.add_argument("--plr", type=float, default=1.0, help="permissible loss ratio")
    common.add_argument("--tol", dest="tolerance", type=float, default=None)
    common.add_argument("--max-iters", type=int, default=None)
    common.add_argument("--seed", type=int, default=0, help="seed for random starting points")
    common.add_argument("--starts", type=int, default=5, help="number of random starts")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True,
                        help="reject zero-exposure cells and zero-loss slices")
    common.add_argument("--shrink", type=float, default=0.5,
                        help="lower-bound shrink factor for the Leslie-Gower box")
    common.add_argument("--base-cell", type=_base_cell, default=None,
                        help="cell i,j,k to move to the front as the base cell")
    common.add_argument("--out", type=Path, default=None, help="write report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ratefix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("rate", parents=[common], help="iterate loss-ratio relativities and rates")
    sub.add_parser("certify", parents=[common], help="contraction bounds only")
    sub.add_parser("lg", parents=[common], help="Leslie-Gower equilibrium")
    sub.add_parser("bailey", parents=[common], help="two-factor minimum-bias baseline")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = RunConfig(
        command=args.command, input=args.input, plr=args.plr, tolerance=args.tolerance,
        max_iters=args.max_iters, seed=args.seed, format=args.format, strict=args.strict,
        shrink=args.shrink, base_cell=args.base_cell, starts=args.starts, out=args.out,
    )
    if not cfg.input.exists():
        log.error("input file %s does not exist", cfg.input)
        return EXIT_INPUT
    try:
        text, status = run(cfg)
    except (RatefixError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        io.write_atomic(cfg.out, text)
        log.info("report written to %s", cfg.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
