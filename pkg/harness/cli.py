# harness/cli.py
"""
Command-line entry point.

    python -m harness.cli run --config harness/configs/theorem31_circle.json --out results/t31
    python -m harness.cli run --config degiorgi_circle
    python -m harness.cli perimeter --builder circle --params '{"n": 1024}' --set arc
    python -m harness.cli curvature --builder circle --params '{"n": 64}' --out results/curv

Machine-readable results go to stdout (one JSON document) and to files under
--out; logs and the run summary go to stderr.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 acceptance
violation (with --assert).
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

# Add project root to Python path for imports
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

import numpy as np  # noqa: E402

from bv.variation import bv_report, coarea_check  # noqa: E402
from config.settings import CONFIGS_DIR, DEFAULT_TOL, DEFAULT_WORKERS, RESULTS_DIR  # noqa: E402
from curvature.bakry_emery import de_giorgi_with_be  # noqa: E402
from curvature.export import export_curvature  # noqa: E402
from curvature.gamma2 import best_k  # noqa: E402
from functionals.energies import near_diagonal_energy  # noqa: E402
from functionals.ladder import FunctionalLadder, WindowPolicy, ladder_scan  # noqa: E402
from functionals.ledoux import ledoux_global, ledoux_local  # noqa: E402
from generator.generator import Generator, build_generator  # noqa: E402
from generator.heat import HeatOperator  # noqa: E402
from harness.builders import build_space  # noqa: E402
from harness.config import load_config, parse_config  # noqa: E402
from harness.experiment import run_experiment  # noqa: E402
from harness.persist import (  # noqa: E402
    ensure_output_dir,
    ladders_from_frame,
    read_ladders_csv,
    safe_stem,
    write_dat,
    write_ladders_csv,
    write_vectors,
)
from harness.plots import emit_plot  # noqa: E402
from harness.sets import build_function, build_set  # noqa: E402
from harness.stages import with_seed  # noqa: E402
from mmspace.errors import AcceptanceError, ConfigError, NumericalError  # noqa: E402
from mmspace.geometry import lattice_ladder, time_ladder_from_sqrt  # noqa: E402
from mmspace.serialization import serialize_space  # noqa: E402
from mmspace.space import MetricMeasureSpace, indicator  # noqa: E402
from observability.dashboard import format_observability_dashboard  # noqa: E402

logger = logging.getLogger("heatperim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def _json_arg(text: Optional[str], flag: str) -> Dict[str, Any]:
    if not text:
        return {}
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{flag}: invalid JSON: {exc}") from exc
    if not isinstance(value, dict):
        raise ConfigError(f"{flag} must be a JSON object")
    return value


def _emit(doc: Dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


# -------------------------------------------------------
# SHARED SETUP
# -------------------------------------------------------
def _space(args: argparse.Namespace) -> MetricMeasureSpace:
    """Space from --config when given, else --builder/--params."""
    if args.config:
        cfg = load_config(args.config)
        return build_space(cfg.space.builder, with_seed(cfg.space.builder, cfg.space.params, args.seed))
    params = with_seed(args.builder, _json_arg(args.params, "--params"), args.seed)
    return build_space(args.builder, params)


def _generator(args: argparse.Namespace, space: MetricMeasureSpace) -> Generator:
    if args.config:
        g = load_config(args.config).generator
        return build_generator(space, g.rule, g.h, g.k, g.kernel)
    return build_generator(space, args.rule, args.h, args.k, args.kernel)


def _input(args: argparse.Namespace, space: MetricMeasureSpace) -> np.ndarray:
    if args.function:
        return build_function(space, args.function, with_seed(args.function, _json_arg(args.fparams, "--fparams"), args.seed))
    return indicator(space, _subset(args, space))


def _subset(args: argparse.Namespace, space: MetricMeasureSpace) -> np.ndarray:
    return build_set(space, args.set, with_seed(args.set, _json_arg(args.sparams, "--sparams"), args.seed))


def _out(args: argparse.Namespace) -> str:
    return ensure_output_dir(args.out or str(RESULTS_DIR / args.command))


def _time_ladder(args: argparse.Namespace, space: MetricMeasureSpace) -> np.ndarray:
    h = space.resolution
    return time_ladder_from_sqrt(args.sqrt_lo * h, args.sqrt_hi * h, args.count)


def _persist_ladders(args: argparse.Namespace, ladders: List[FunctionalLadder]) -> Dict[str, Any]:
    out = _out(args)
    files = [write_ladders_csv(ladders, os.path.join(out, "ladders.csv"))]
    for ladder in ladders:
        stem = safe_stem(ladder.name)
        files.append(write_dat(ladder, os.path.join(out, f"{stem}.dat")))
        path = os.path.join(out, f"{stem}.svg")
        emit_plot(ladder, path=path)
        files.append(os.path.abspath(path))
    return {"results": [ladder.to_dict() for ladder in ladders], "files": files}


# -------------------------------------------------------
# SUBCOMMANDS
# -------------------------------------------------------
def cmd_build_space(args: argparse.Namespace) -> int:
    space = _space(args)
    path = os.path.join(_out(args), "space.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_space(space))
    _emit({"label": space.label, "n": space.n, "resolution": space.resolution, "muHash": space.mu_hash, "file": os.path.abspath(path)})
    return EXIT_OK


def cmd_heat(args: argparse.Namespace) -> int:
    space = _space(args)
    op = HeatOperator(_generator(args, space), strategy=args.strategy)
    u = _input(args, space)
    heat = op.apply(u, args.time)
    drift = abs(float(np.dot(space.mu, heat)) - float(np.dot(space.mu, u)))
    path = write_vectors(
        [{"vector": "input", "values": u}, {"vector": "heat", "t": args.time, "values": heat}],
        os.path.join(_out(args), "vectors.jsonl"),
    )
    _emit({"strategy": op.strategy, "t": args.time, "massDrift": drift, "file": path})
    return EXIT_OK


def cmd_perimeter(args: argparse.Namespace) -> int:
    space = _space(args)
    gen = _generator(args, space)
    report = bv_report(gen, _input(args, space))
    _emit({"edgeTV": report.tv_edge, "gammaTV": report.tv_gamma, "space": space.label})
    return EXIT_OK


def cmd_ledoux(args: argparse.Namespace) -> int:
    space = _space(args)
    op = HeatOperator(_generator(args, space), strategy=args.strategy)
    subset = _subset(args, space)
    times = _time_ladder(args, space)
    ladders = [
        ladder_scan(lambda t: ledoux_global(op, subset, t), times, WindowPolicy.time(), space.resolution,
                    name="ledouxGlobal", space=space.label, workers=args.workers),
        ladder_scan(lambda t: ledoux_local(op, subset, t), times, WindowPolicy.time(), space.resolution,
                    name="ledouxLocal", space=space.label, workers=args.workers),
    ]
    _emit(_persist_ladders(args, ladders))
    return EXIT_OK


def cmd_degiorgi(args: argparse.Namespace) -> int:
    space = _space(args)
    op = HeatOperator(_generator(args, space), strategy=args.strategy)
    result = de_giorgi_with_be(op, _input(args, space), args.K, _time_ladder(args, space), workers=args.workers)
    doc = _persist_ladders(args, [result.ladder])
    doc.update({"jensenBound": result.jensen_bound, "judged": result.judged, "passed": result.passed, "notes": list(result.notes)})
    _emit(doc)
    if args.assert_ and result.passed is False:
        raise AcceptanceError("De Giorgi values exceed the semigroup bound")
    return EXIT_OK


def cmd_ks_energy(args: argparse.Namespace) -> int:
    space = _space(args)
    u = _input(args, space)
    h = space.resolution
    eps = lattice_ladder(args.lo * h, args.hi * h, args.count, h)
    ladder = ladder_scan(lambda e: near_diagonal_energy(space, u, e), eps, WindowPolicy.length(), h,
                         name="nearDiagonalEnergy", space=space.label, workers=args.workers)
    _emit(_persist_ladders(args, [ladder]))
    return EXIT_OK


def cmd_curvature(args: argparse.Namespace) -> int:
    space = _space(args)
    report = best_k(_generator(args, space), args.radius, workers=args.workers)
    csv_path, json_path = export_curvature(report, _out(args), tol=args.tol)
    _emit(dict(report.to_dict(), files=[csv_path, json_path]))
    return EXIT_OK


def cmd_coarea(args: argparse.Namespace) -> int:
    space = _space(args)
    report = coarea_check(_generator(args, space), _input(args, space))
    _emit({"lhs": report.lhs, "rhs": report.rhs, "residual": report.residual, "levels": report.levels})
    scale = max(abs(report.rhs), 1.0)
    if args.assert_ and report.residual > args.tol * scale:
        raise AcceptanceError(f"co-area residual {report.residual:.3g} above {args.tol:g}")
    return EXIT_OK


# failure kinds that mean the config itself is at fault; "Skipped" stages
# inherit the verdict of the stage that failed before them
CONFIG_FAILURES = frozenset({ConfigError.__name__, "ValueError", "FileNotFoundError"})


def failure_exit_code(failures: Sequence[Dict[str, str]]) -> int:
    if not failures:
        return EXIT_OK
    kinds = {f["kind"] for f in failures} - {"Skipped"}
    if kinds and kinds <= CONFIG_FAILURES:
        return EXIT_CONFIG
    return EXIT_NUMERICAL


def cmd_run(args: argparse.Namespace) -> int:
    if not args.config:
        raise ConfigError("run needs --config")
    path = args.config
    bundled = CONFIGS_DIR / f"{path}.json"
    if not os.path.exists(path) and bundled.exists():
        path = str(bundled)
    cfg = load_config(path)
    if args.seed is not None and args.seed != cfg.seed:
        cfg = parse_config(dict(cfg.document, seed=args.seed))
    manifest = run_experiment(cfg, output_dir=args.out, workers=args.workers, assert_expectations=args.assert_)
    sys.stderr.write(format_observability_dashboard(manifest.to_dict()))
    _emit({"configHash": manifest.config_hash, "outputDir": manifest.output_dir, "failures": manifest.failures})
    return failure_exit_code(manifest.failures)


def cmd_plot(args: argparse.Namespace) -> int:
    if not args.csv:
        raise ConfigError("plot needs --csv")
    out = _out(args)
    files = []
    for ladder in ladders_from_frame(read_ladders_csv(args.csv)):
        path = os.path.join(out, f"{safe_stem(ladder.name)}.svg")
        emit_plot(ladder, path=path)
        files.append(os.path.abspath(path))
    _emit({"files": files})
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "build-space": cmd_build_space,
    "heat": cmd_heat,
    "perimeter": cmd_perimeter,
    "ledoux": cmd_ledoux,
    "degiorgi": cmd_degiorgi,
    "ks-energy": cmd_ks_energy,
    "curvature": cmd_curvature,
    "coarea": cmd_coarea,
    "run": cmd_run,
    "plot": cmd_plot,
}


# -------------------------------------------------------
# PARSER
# -------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="seed for random builders (u64)")
    common.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="worker budget (HEATPERIM_WORKERS)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="verifier tolerance (HEATPERIM_TOL)")
    common.add_argument("--assert", dest="assert_", action="store_true", help="exit 4 on acceptance violations")
    common.add_argument("-v", "--verbose", action="store_true")

    common.add_argument("--builder", default="circle")
    common.add_argument("--params", help='builder parameters as JSON, e.g. \'{"n": 1024}\'')
    common.add_argument("--rule", default="radius")
    common.add_argument("--h", type=float, default=None)
    common.add_argument("--k", type=int, default=None)
    common.add_argument("--kernel", default="indicator")
    common.add_argument("--strategy", default="auto")
    common.add_argument("--set", default="arc")
    common.add_argument("--sparams", help="set parameters as JSON")
    common.add_argument("--function", default=None, help="function input instead of a set indicator")
    common.add_argument("--fparams", help="function parameters as JSON")

    parser = argparse.ArgumentParser(prog="heatperim", description="Heat semigroups, perimeter and curvature on finite metric measure spaces")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("build-space", parents=[common], help="build and serialize a space")
    heat = sub.add_parser("heat", parents=[common], help="apply the heat semigroup")
    heat.add_argument("--time", type=float, required=True)
    sub.add_parser("perimeter", parents=[common], help="edge and Gamma total variation")
    for name in ("ledoux", "degiorgi"):
        p = sub.add_parser(name, parents=[common], help=f"{name} ladder over sqrt(t)")
        p.add_argument("--sqrt-lo", type=float, default=8.0, help="smallest sqrt(t) in grid steps")
        p.add_argument("--sqrt-hi", type=float, default=64.0, help="largest sqrt(t) in grid steps")
        p.add_argument("--count", type=int, default=10)
        if name == "degiorgi":
            p.add_argument("--K", type=float, default=0.0, help="curvature constant for the semigroup bound")
    ks = sub.add_parser("ks-energy", parents=[common], help="near-diagonal energy ladder")
    ks.add_argument("--lo", type=float, default=8.0, help="smallest eps in grid steps")
    ks.add_argument("--hi", type=float, default=256.0, help="largest eps in grid steps")
    ks.add_argument("--count", type=int, default=10)
    curv = sub.add_parser("curvature", parents=[common], help="best Bakry-Emery constants")
    curv.add_argument("--radius", type=int, default=2, help="neighbourhood radius in hops")
    sub.add_parser("coarea", parents=[common], help="co-area identity check")
    sub.add_parser("run", parents=[common], help="run a config")
    plot = sub.add_parser("plot", parents=[common], help="re-plot a ladders.csv")
    plot.add_argument("--csv", help="ladders.csv to plot")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError(f"--seed must be nonnegative, got {args.seed}")
        if args.seed is None and args.command != "run":
            args.seed = 0
        code = COMMANDS[args.command](args)
    except AcceptanceError as exc:
        logger.error(f"[RUN] acceptance violation: {exc}")
        code = EXIT_ACCEPTANCE
    except NumericalError as exc:
        logger.error(f"[RUN] numerical failure: {exc}")
        code = EXIT_NUMERICAL
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        logger.error(f"[RUN] configuration error: {exc}")
        code = EXIT_CONFIG

    if args.command != "run":
        sys.stderr.write(format_observability_dashboard())
    return code


if __name__ == "__main__":
    sys.exit(main())
