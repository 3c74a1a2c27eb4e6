"""Writers for graph, map, trace and result files.

Every CSV starts with ``# key=value`` lines carrying the run's configuration.
A path of None or ``"-"`` writes to standard output.
"""
import contextlib
import csv
import sys
from collections.abc import Iterable, Iterator
from typing import TextIO

import numpy as np

from interperc.analysis import CriticalPoint, PercolationCurve
from interperc.cascade import CascadeResult
from interperc.depmap import DependencyMap
from interperc.graphs import Graph

CURVE_COLUMNS = ["q", "p", "mean_pinf", "std_pinf", "mean_noi", "realizations", "N"]
CRITICAL_COLUMNS = ["topology", "q", "p_c", "order", "jump", "noi_at_pc"]
TRACE_COLUMNS = ["iteration", "alive_fraction_a", "alive_fraction_b"]
NOI_COLUMNS = ["topology", "q", "noi_at_pc"]


@contextlib.contextmanager
def _open(output_path: str | None) -> Iterator[TextIO]:
    if output_path is None or output_path == "-":
        yield sys.stdout
        return
    with open(output_path, "w", encoding="utf-8", newline="") as f:
        yield f


def _write_csv(
    output_path: str | None,
    header: Iterable[tuple[str, str]],
    columns: list[str],
    rows: Iterable[list],
) -> None:
    with _open(output_path) as f:
        for key, value in header:
            f.write(f"# {key}={value}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def write_graph(graph: Graph, output_path: str) -> None:
    """Write *graph* as a ``# N=<n> topology=<tag> seed=<s>`` header and one ``u v`` line per edge."""
    with _open(output_path) as f:
        f.write(f"# N={graph.node_count} topology={graph.topology} seed={graph.seed}\n")
        np.savetxt(f, graph.edges, fmt="%d")


def write_map(dep_map: DependencyMap, output_path: str) -> None:
    """Write *dep_map* with line i holding ``pi[i]``."""
    with _open(output_path) as f:
        f.write(
            f"# N={dep_map.node_count} tag={dep_map.tag} q={dep_map.q} "
            f"r={dep_map.r} seed={dep_map.seed}\n"
        )
        np.savetxt(f, dep_map.pi, fmt="%d")


def write_trace_csv(
    result: CascadeResult, output_path: str | None, header: Iterable[tuple[str, str]] = ()
) -> None:
    rows = (
        [i, float(a), float(b)]
        for i, (a, b) in enumerate(zip(result.trace_a, result.trace_b))
    )
    _write_csv(output_path, header, TRACE_COLUMNS, rows)


def write_curve_csv(
    curves: Iterable[PercolationCurve],
    output_path: str | None,
    header: Iterable[tuple[str, str]] = (),
) -> None:
    rows = (
        [curve.q, p, mean, std, noi, curve.realizations, curve.n]
        for curve in curves
        for p, mean, std, noi in curve.samples
    )
    _write_csv(output_path, header, CURVE_COLUMNS, rows)


def write_critical_csv(
    points: Iterable[CriticalPoint],
    output_path: str | None,
    header: Iterable[tuple[str, str]] = (),
) -> None:
    rows = ([pt.topology, pt.q, pt.p_c, pt.order, pt.jump_size, pt.noi_at_pc] for pt in points)
    _write_csv(output_path, header, CRITICAL_COLUMNS, rows)


def write_noi_csv(
    topology: str,
    rows: Iterable[tuple[float, float]],
    output_path: str | None,
    header: Iterable[tuple[str, str]] = (),
) -> None:
    _write_csv(output_path, header, NOI_COLUMNS, ([topology, q, noi] for q, noi in rows))


def format_apen_line(m: int, tol: float, n: int, value: float, **extra: object) -> str:
    """``ApEn m=<m> tol=<tol> N=<N> value=<v>`` followed by any *extra* ``key=value`` pairs."""
    line = f"ApEn m={m} tol={tol:.6g} N={n} value={value:.6f}"
    for key, item in extra.items():
        line += f" {key}={item}"
    return line
