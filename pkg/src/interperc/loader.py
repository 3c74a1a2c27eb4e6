"""Readers for the graph, map and config text files."""
import math

import numpy as np

from interperc.config import ExperimentConfig, parse_config
from interperc.depmap import DependencyMap
from interperc.errors import ConfigError
from interperc.graphs import Graph, normalize_edges


def load_text(filepath: str) -> str:
    """Load a text file and return its contents as a UTF-8 string."""
    with open(filepath, "r", encoding="utf-8") as f:
        return f.read()


def load_config(filepath: str) -> ExperimentConfig:
    return parse_config(load_text(filepath))


def _read_header(filepath: str) -> dict[str, str]:
    """Parse the leading ``# key=value key=value`` line of a graph or map file."""
    with open(filepath, "r", encoding="utf-8") as f:
        first = f.readline()
    if not first.startswith("#"):
        raise ConfigError(f"{filepath}: missing '# N=...' header line")
    header = {}
    for item in first.lstrip("#").split():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"{filepath}: bad header item {item!r}")
        header[key] = value
    if "N" not in header:
        raise ConfigError(f"{filepath}: header has no N")
    return header


def _optional(value: str | None, kind: type) -> object:
    if value is None or value in ("", "None"):
        return None
    return kind(value)


def read_graph(filepath: str) -> Graph:
    """Read a graph written by :func:`interperc.writer.write_graph`."""
    header = _read_header(filepath)
    n = int(header["N"])
    topology = header.get("topology", "unknown")
    edges = np.loadtxt(filepath, dtype=np.int64, comments="#", ndmin=2).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise ConfigError(f"{filepath}: edge endpoint outside [0, {n})")
    return Graph(
        node_count=n,
        edges=normalize_edges(edges),
        topology=topology,
        lattice_side=math.isqrt(n) if topology == "lattice" else None,
        seed=_optional(header.get("seed"), int),
    )


def read_map(filepath: str) -> DependencyMap:
    """Read a dependency map written by :func:`interperc.writer.write_map`."""
    header = _read_header(filepath)
    pi = np.loadtxt(filepath, dtype=np.int64, comments="#", ndmin=1)
    if pi.size != int(header["N"]):
        raise ConfigError(f"{filepath}: header says N={header['N']}, found {pi.size} entries")
    return DependencyMap(
        pi=pi,
        tag=header.get("tag", "unknown"),
        q=_optional(header.get("q"), float),
        r=_optional(header.get("r"), int),
        seed=_optional(header.get("seed"), int),
    )
