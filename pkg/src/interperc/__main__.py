"""Entry point: ``python -m interperc``."""
import argparse
import dataclasses
import functools
import logging
import os
import sys
from pathlib import Path

import numpy as np

from interperc.analysis import (
    DEFAULT_PC_TOL,
    find_pc,
    find_qc_bracket,
    find_rc,
    noi_vs_q,
    predict_pc,
    sweep_p,
    tabulate_pinf,
)
from interperc.cascade import AttackSpec, attack, build_system, run_cascade
from interperc.config import ExperimentConfig, config_items
from interperc.depmap import build_map
from interperc.entropy import ApEnParams, apen_of_map, map_series, tolerance
from interperc.errors import ConfigError, InterpercError, NoTransitionError
from interperc.graphs import TOPOLOGIES
from interperc.loader import load_config
from interperc.seeding import derive_seed
from interperc.writer import (
    format_apen_line,
    write_critical_csv,
    write_curve_csv,
    write_graph,
    write_map,
    write_noi_csv,
    write_trace_csv,
)

logger = logging.getLogger("interperc")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_TRANSITION = 3

COMMANDS = ("generate", "sweep", "critical", "apen", "noi", "trace", "predict")


def _header(config: ExperimentConfig, command: str, **extra: object) -> list[tuple[str, str]]:
    items = [("command", command)]
    items.extend(config_items(config))
    items.append(("effective_survival_threshold", repr(config.effective_survival_threshold)))
    items.extend((key, str(value)) for key, value in extra.items())
    return items


def _pc_kwargs(config: ExperimentConfig, threads: int) -> dict:
    return {
        "tol": config.bisection_tol or DEFAULT_PC_TOL,
        "seed": config.master_seed,
        "jump_threshold": config.jump_threshold,
        "survival": config.effective_survival_threshold,
        "threads": threads,
        "map_kind": config.map_kind,
        "mean_degree": config.mean_degree,
        "beta": config.beta,
        "exponent": config.exponent,
        "min_component_size": config.min_component_size,
    }


def cmd_generate(config: ExperimentConfig, threads: int) -> None:
    """Write one realization's graph (``.edges``) and map (``.map``) next to the output path."""
    if not config.output_path or config.output_path == "-":
        raise ConfigError("generate needs an output path (--out or output_path)")
    state = build_system(config.model(), config.master_seed)
    out = Path(config.output_path)
    write_graph(state.graph_a, str(out.with_suffix(".edges")))
    write_map(state.dep_map, str(out.with_suffix(".map")))
    logger.info("wrote %s and %s", out.with_suffix(".edges"), out.with_suffix(".map"))


def cmd_sweep(config: ExperimentConfig, threads: int) -> None:
    options = _pc_kwargs(config, threads)
    for key in ("tol", "seed", "jump_threshold", "survival"):
        options.pop(key)
    curves = [
        sweep_p(
            config.topology,
            q,
            config.p_grid,
            config.realizations,
            config.node_count,
            config.master_seed,
            r=config.r,
            **options,
        )
        for q in (config.q_grid or (config.q,))
    ]
    write_curve_csv(curves, config.output_path, _header(config, "sweep"))


def cmd_critical(config: ExperimentConfig, threads: int) -> None:
    kwargs = _pc_kwargs(config, threads)
    n, realizations = config.node_count, config.realizations
    extra = {}
    if config.scan == "pc":
        points = [
            find_pc(config.topology, q, n, realizations, r=config.r, **kwargs)
            for q in (config.q_grid or (config.q,))
        ]
    elif config.scan == "q":
        lo, hi = find_qc_bracket(config.topology, n, realizations, r=config.r, **kwargs)
        extra = {"q_c_lo": lo, "q_c_hi": hi, "q_c": 0.5 * (lo + hi)}
        points = [find_pc(config.topology, q, n, realizations, r=config.r, **kwargs) for q in (lo, hi)]
    elif config.scan == "r":
        if config.topology != "lattice":
            raise ConfigError("scan=r needs topology=lattice")
        kwargs.pop("map_kind")
        r_c = find_rc(n, realizations, map_kind=config.map_kind, **kwargs)
        extra = {"r_c": r_c}
        points = [
            find_pc("lattice", 0.0, n, realizations, map_kind=config.map_kind, r=r, **kwargs)
            for r in (max(1, r_c - 1), r_c)
        ]
    else:
        points = []
        for topology in config.topologies or TOPOLOGIES:
            lo, hi = find_qc_bracket(topology, n, realizations, r=config.r, **kwargs)
            extra[f"q_c_{topology}"] = f"{lo:.4f}..{hi:.4f}"
            points.append(find_pc(topology, 0.5 * (lo + hi), n, realizations, r=config.r, **kwargs))
    write_critical_csv(points, config.output_path, _header(config, "critical", **extra))


def cmd_apen(config: ExperimentConfig, threads: int) -> None:
    params = ApEnParams(m=config.apen_m, tolerance_factor=config.apen_tolerance_factor)
    n = config.node_count
    lattice_side = config.model().lattice_side
    lines = []
    for q in config.q_grid or (config.q,):
        for r in config.r_grid or (config.r,):
            seed = derive_seed(config.master_seed, "apen", config.map_kind, q, r)
            dep_map = build_map(config.map_kind, n, seed, q=q, r=r, lattice_side=lattice_side)
            series = map_series(dep_map, rng_seed=seed)
            value = apen_of_map(dep_map, params, rng_seed=seed)
            extra = {}
            if config.q_grid:
                extra["q"] = q
            if config.r_grid:
                extra["r"] = r
            lines.append(
                format_apen_line(params.m, tolerance(series, params), series.size, value, **extra)
            )
    text = "\n".join(lines) + "\n"
    if config.output_path and config.output_path != "-":
        Path(config.output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_noi(config: ExperimentConfig, threads: int) -> None:
    rows = noi_vs_q(
        config.topology,
        config.q_grid,
        config.node_count,
        config.realizations,
        r=config.r,
        **_pc_kwargs(config, threads),
    )
    write_noi_csv(config.topology, rows, config.output_path, _header(config, "noi"))


def cmd_trace(config: ExperimentConfig, threads: int, p: float) -> None:
    """Write the per-round alive fractions of one cascade at kept fraction *p*."""
    state = build_system(config.model(), config.master_seed)
    spec = AttackSpec(p=p, seed=derive_seed(config.master_seed, "attack"))
    result = run_cascade(attack(state, spec))
    header = _header(config, "trace", p=p, p_infinity=result.p_infinity, noi=result.noi)
    write_trace_csv(result, config.output_path, header)


def cmd_predict(config: ExperimentConfig, threads: int) -> None:
    """Predict p_c from the fixed point of the tabulated single-network P-infinity."""
    x_grid = config.p_grid or tuple(np.linspace(0.0, 1.0, 101).tolist())
    table = tabulate_pinf(
        config.topology,
        config.node_count,
        x_grid,
        config.realizations,
        seed=config.master_seed,
        threads=threads,
        mean_degree=config.mean_degree,
        beta=config.beta,
        exponent=config.exponent,
        min_component_size=config.min_component_size,
    )
    p_c = predict_pc(table, config.fixed_point_form, floor=config.effective_survival_threshold)
    line = f"predicted p_c form={config.fixed_point_form} N={table.n} value={p_c:.6f}\n"
    if config.output_path and config.output_path != "-":
        Path(config.output_path).write_text(line, encoding="utf-8")
    else:
        sys.stdout.write(line)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interperc",
        description="Mutual percolation on two interdependent networks with tunable dependency maps.",
    )
    parser.add_argument(
        "command",
        choices=COMMANDS,
        help="What to run.",
    )
    parser.add_argument(
        "--config",
        metavar="FILE",
        help="INI experiment config with an [experiment] section (default: built-in defaults).",
    )
    parser.add_argument(
        "--seed",
        type=int,
        metavar="SEED",
        help="Master seed; overrides master_seed from the config.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        metavar="N",
        help="Worker processes (default: available cores). 1 runs serially.",
    )
    parser.add_argument(
        "--out",
        metavar="FILE",
        help="Output path; overrides output_path from the config. '-' is standard output.",
    )
    parser.add_argument(
        "--p",
        type=float,
        default=1.0,
        metavar="P",
        help="Kept fraction for the trace command (default: 1.0).",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log per-iteration detail to standard error.",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.out is not None:
            overrides["output_path"] = args.out
        config = dataclasses.replace(config, **overrides)
        config.validate(args.command)
        handlers = {
            "generate": cmd_generate,
            "sweep": cmd_sweep,
            "critical": cmd_critical,
            "apen": cmd_apen,
            "noi": cmd_noi,
            "trace": functools.partial(cmd_trace, p=args.p),
            "predict": cmd_predict,
        }
        handlers[args.command](config, max(1, args.threads))
    except NoTransitionError as exc:
        logger.error("no transition: %s", exc)
        return EXIT_NO_TRANSITION
    except InterpercError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("I/O error on %s: %s", exc.filename, exc.strerror or exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
