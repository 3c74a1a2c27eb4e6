import logging
import math
from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np
from scipy.sparse import coo_array
from scipy.sparse.csgraph import connected_components

from interperc.errors import InvalidParameterError

logger = logging.getLogger(__name__)

TOPOLOGIES: tuple[str, ...] = ("lattice", "erdos_renyi", "watts_strogatz", "scale_free")

DEFAULT_MEAN_DEGREE = 4.0
DEFAULT_WS_BETA = 0.1
DEFAULT_SF_EXPONENT = 3.0


@dataclass(frozen=True, eq=False)
class Graph:
    """Static undirected network over nodes ``0..node_count-1``.

    ``edges`` holds each undirected edge once as a ``(u, v)`` row with
    ``u <= v``. Neighbour lists are derived on first use in compressed form
    (``indptr``/``indices``) and shared read-only afterwards.
    """

    node_count: int
    edges: np.ndarray
    topology: str
    lattice_side: int | None = None
    seed: int | None = None

    @cached_property
    def _compressed(self) -> tuple[np.ndarray, np.ndarray]:
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.node_count), out=indptr[1:])
        return indptr, dst[order]

    @property
    def indptr(self) -> np.ndarray:
        return self._compressed[0]

    @property
    def indices(self) -> np.ndarray:
        return self._compressed[1]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def mean_degree(self) -> float:
        return 2.0 * self.edge_count / self.node_count

    def neighbors(self, node: int) -> np.ndarray:
        return self.indices[self.indptr[node] : self.indptr[node + 1]]


def normalize_edges(pairs: np.ndarray) -> np.ndarray:
    """Sort each pair, then the rows, so equal graphs get equal arrays."""
    pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), axis=1)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def _from_networkx(g: nx.Graph, topology: str, seed: int) -> Graph:
    g.remove_edges_from(list(nx.selfloop_edges(g)))
    edges = normalize_edges(np.array(list(g.edges()), dtype=np.int64))
    return Graph(node_count=g.number_of_nodes(), edges=edges, topology=topology, seed=seed)


def to_networkx(graph: Graph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(graph.node_count))
    g.add_edges_from(graph.edges.tolist())
    return g


def generate_square_lattice(side: int) -> Graph:
    """Return an ``side x side`` square lattice with periodic boundaries.

    Node ``(x, y)`` has index ``x + side * y`` and links to its four nearest
    neighbours. For ``side == 2`` both wrap neighbours coincide, so every
    neighbour appears twice and the degree is still 4.
    """
    if side < 2:
        raise InvalidParameterError(f"Lattice side must be at least 2, got L={side}")
    grid = np.arange(side * side, dtype=np.int64).reshape(side, side)
    right = np.roll(grid, -1, axis=1)
    down = np.roll(grid, -1, axis=0)
    pairs = np.concatenate(
        [
            np.column_stack([grid.ravel(), right.ravel()]),
            np.column_stack([grid.ravel(), down.ravel()]),
        ]
    )
    return Graph(
        node_count=side * side,
        edges=normalize_edges(pairs),
        topology="lattice",
        lattice_side=side,
    )


def generate_er(n: int, mean_degree: float, rng_seed: int) -> Graph:
    """Return a G(n, p) random graph with ``p = mean_degree / (n - 1)``."""
    if n < 2:
        raise InvalidParameterError(f"Erdos-Renyi graph needs n >= 2, got n={n}")
    if not 0 < mean_degree <= n - 1:
        raise InvalidParameterError(
            f"Mean degree must lie in (0, n-1], got mean_degree={mean_degree} for n={n}"
        )
    p_edge = mean_degree / (n - 1)
    g = nx.fast_gnp_random_graph(n, p_edge, seed=rng_seed)
    return _from_networkx(g, "erdos_renyi", rng_seed)


def generate_ws(n: int, mean_degree: float, beta: float, rng_seed: int) -> Graph:
    """Return a Watts-Strogatz graph: ring of degree *mean_degree*, each edge
    rewired with probability *beta*. Rewiring moves one endpoint, so the edge
    count stays ``n * mean_degree / 2``.
    """
    if mean_degree != int(mean_degree) or int(mean_degree) % 2:
        raise InvalidParameterError(
            f"Watts-Strogatz mean degree must be an even integer, got {mean_degree}"
        )
    if not 0.0 <= beta <= 1.0:
        raise InvalidParameterError(f"Rewiring probability must lie in [0, 1], got beta={beta}")
    if not 0 < mean_degree < n:
        raise InvalidParameterError(
            f"Mean degree must lie in (0, n), got mean_degree={mean_degree} for n={n}"
        )
    g = nx.watts_strogatz_graph(n, int(mean_degree), beta, seed=rng_seed)
    return _from_networkx(g, "watts_strogatz", rng_seed)


def _match_stub_total(
    degrees: np.ndarray, target: int, low: int, high: int, rng: np.random.Generator
) -> None:
    """Add or remove single stubs at random nodes until ``degrees.sum() == target``."""
    while (diff := target - int(degrees.sum())) != 0:
        if diff > 0:
            candidates = np.flatnonzero(degrees < high)
        else:
            candidates = np.flatnonzero(degrees > low)
        if candidates.size == 0:
            break
        chosen = rng.choice(candidates, size=min(abs(diff), candidates.size), replace=False)
        degrees[chosen] += 1 if diff > 0 else -1


def generate_sf(n: int, exponent: float, mean_degree: float, rng_seed: int) -> Graph:
    """Return a configuration-model graph with power-law degrees ``P(k) ~ k^-exponent``.

    Degrees are ``round(k0 * x)`` with ``x`` Pareto distributed and
    ``k0 = mean_degree * (exponent - 2) / (exponent - 1)``, the scale at which
    the continuous law has the requested mean (``k0 = 2`` for exponent 3 and
    mean 4). The stub total is then matched to the nearest even number to
    ``mean_degree * n`` by moving single stubs at random nodes, which also
    fixes the handshake parity. Multi-edges and self-loops left by the
    stub matching are dropped.
    """
    if exponent <= 2:
        raise InvalidParameterError(
            f"Scale-free exponent must exceed 2 for a finite mean, got lambda={exponent}"
        )
    if n < 100:
        raise InvalidParameterError(f"Scale-free graph needs n >= 100, got n={n}")
    if not 0 < mean_degree < n - 1:
        raise InvalidParameterError(
            f"Mean degree must lie in (0, n-1), got mean_degree={mean_degree} for n={n}"
        )
    rng = np.random.default_rng(rng_seed)
    scale = mean_degree * (exponent - 2) / (exponent - 1)
    min_degree = max(1, int(round(scale)))
    x = rng.pareto(exponent - 1, size=n) + 1.0
    degrees = np.clip(np.rint(scale * x).astype(np.int64), min_degree, n - 1)
    target = 2 * int(round(mean_degree * n / 2))
    _match_stub_total(degrees, target, min_degree, n - 1, rng)
    logger.debug("scale-free degree sequence: n=%d min=%d max=%d", n, degrees.min(), degrees.max())
    multigraph = nx.configuration_model(degrees.tolist(), seed=rng_seed)
    return _from_networkx(nx.Graph(multigraph), "scale_free", rng_seed)


def generate(
    topology: str,
    n: int,
    rng_seed: int,
    *,
    mean_degree: float = DEFAULT_MEAN_DEGREE,
    beta: float = DEFAULT_WS_BETA,
    exponent: float = DEFAULT_SF_EXPONENT,
) -> Graph:
    """Build a graph of the given *topology* with *n* nodes.

    Raises:
        InvalidParameterError: If *topology* is unknown, or *n* is not a
            perfect square for the lattice.
    """
    if topology == "lattice":
        side = math.isqrt(n)
        if side * side != n:
            raise InvalidParameterError(f"Lattice node count must be a perfect square, got n={n}")
        return generate_square_lattice(side)
    if topology == "erdos_renyi":
        return generate_er(n, mean_degree, rng_seed)
    if topology == "watts_strogatz":
        return generate_ws(n, mean_degree, beta, rng_seed)
    if topology == "scale_free":
        return generate_sf(n, exponent, mean_degree, rng_seed)
    raise InvalidParameterError(f"Unknown topology: {topology!r}. Supported: {list(TOPOLOGIES)}")


def giant_component(g: Graph, mask: np.ndarray, min_size: int = 1) -> np.ndarray:
    """Return the sorted node indices of the largest connected component among alive nodes.

    Ties between equally large components go to the one containing the lowest
    node index. If the largest component has fewer than *min_size* nodes the
    layer is treated as non-functional and the result is empty.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (g.node_count,):
        raise InvalidParameterError(
            f"Alive mask has length {mask.size}, graph has {g.node_count} nodes"
        )
    alive = np.flatnonzero(mask)
    if alive.size == 0:
        return alive
    u, v = g.edges[:, 0], g.edges[:, 1]
    keep = mask[u] & mask[v]
    matrix = coo_array(
        (np.ones(int(keep.sum()), dtype=np.int8), (u[keep], v[keep])),
        shape=(g.node_count, g.node_count),
    ).tocsr()
    _, labels = connected_components(matrix, directed=False)
    alive_labels = labels[alive]
    # alive is ascending, so the first occurrence of a label is its lowest node
    uniq, first, sizes = np.unique(alive_labels, return_index=True, return_counts=True)
    largest = sizes.max()
    if largest < min_size:
        return alive[:0]
    winners = np.flatnonzero(sizes == largest)
    chosen = uniq[winners[np.argmin(first[winners])]]
    return alive[alive_labels == chosen]
