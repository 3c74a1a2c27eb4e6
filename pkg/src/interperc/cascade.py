"""Mutual percolation cascade on two fully interdependent networks."""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from interperc.depmap import DependencyMap, build_map
from interperc.errors import InvalidParameterError
from interperc.graphs import (
    DEFAULT_MEAN_DEGREE,
    DEFAULT_SF_EXPONENT,
    DEFAULT_WS_BETA,
    Graph,
    generate,
    giant_component,
)
from interperc.seeding import derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelSpec:
    """Everything needed to build one realization of the interdependent system."""

    topology: str = "lattice"
    n: int = 10_000
    map_kind: str = "rewired"
    q: float = 0.0
    r: int = 1
    mean_degree: float = DEFAULT_MEAN_DEGREE
    beta: float = DEFAULT_WS_BETA
    exponent: float = DEFAULT_SF_EXPONENT
    min_component_size: int = 1

    @property
    def lattice_side(self) -> int | None:
        return math.isqrt(self.n) if self.topology == "lattice" else None


@dataclass(frozen=True)
class AttackSpec:
    """Initial random failure keeping a fraction *p* of the nodes.

    *explicit_set*, when given, names the removed A-layer nodes and overrides
    the seeded random choice.
    """

    p: float
    seed: int | None = None
    explicit_set: tuple[int, ...] | None = None


@dataclass(frozen=True, eq=False)
class SystemState:
    graph_a: Graph
    graph_b: Graph
    dep_map: DependencyMap
    alive_a: np.ndarray
    alive_b: np.ndarray
    min_component_size: int = 1

    def __post_init__(self) -> None:
        n = self.graph_a.node_count
        if self.graph_b.node_count != n or self.dep_map.node_count != n:
            raise InvalidParameterError(
                f"Layer sizes differ: A={n}, B={self.graph_b.node_count}, "
                f"map={self.dep_map.node_count}"
            )
        if self.alive_a.shape != (n,) or self.alive_b.shape != (n,):
            raise InvalidParameterError("Alive masks must have one entry per node")

    @property
    def node_count(self) -> int:
        return self.graph_a.node_count


@dataclass(frozen=True, eq=False)
class CascadeResult:
    """Outcome of one cascade.

    ``trace_a[i]`` and ``trace_b[i]`` are the alive fractions of each layer
    after round *i* (index 0 is the state right after the attack).
    """

    p_infinity: float
    noi: int
    trace_a: np.ndarray
    trace_b: np.ndarray
    final_alive: np.ndarray
    final_alive_b: np.ndarray = field(repr=False)

    @property
    def trace(self) -> np.ndarray:
        return self.trace_a


def new_system(
    graph_a: Graph,
    dep_map: DependencyMap,
    graph_b: Graph | None = None,
    *,
    min_component_size: int = 1,
) -> SystemState:
    """Return an unattacked system; layer B copies layer A's topology unless given."""
    n = graph_a.node_count
    return SystemState(
        graph_a=graph_a,
        graph_b=graph_a if graph_b is None else graph_b,
        dep_map=dep_map,
        alive_a=np.ones(n, dtype=bool),
        alive_b=np.ones(n, dtype=bool),
        min_component_size=min_component_size,
    )


def build_system(model: ModelSpec, seed: int) -> SystemState:
    """Build one realization of *model*: a fresh topology and a fresh map."""
    graph = generate(
        model.topology,
        model.n,
        derive_seed(seed, "graph"),
        mean_degree=model.mean_degree,
        beta=model.beta,
        exponent=model.exponent,
    )
    dep_map = build_map(
        model.map_kind,
        model.n,
        derive_seed(seed, "map"),
        q=model.q,
        r=model.r,
        lattice_side=graph.lattice_side,
    )
    return new_system(graph, dep_map, min_component_size=model.min_component_size)


def swap_layers(state: SystemState) -> SystemState:
    """Exchange layers A and B, replacing the map by its inverse."""
    inverse = DependencyMap(pi=state.dep_map.inverse.copy(), tag=state.dep_map.tag)
    return replace(
        state,
        graph_a=state.graph_b,
        graph_b=state.graph_a,
        dep_map=inverse,
        alive_a=state.alive_b.copy(),
        alive_b=state.alive_a.copy(),
    )


def removed_count(p: float, n: int) -> int:
    """Number of nodes removed by an attack that keeps a fraction *p*: floor((1 - p) n)."""
    return int(math.floor((1.0 - p) * n + 1e-9))


def attack_order(n: int, seed: int | None) -> np.ndarray:
    """Seeded removal order; an attack at *p* removes its first ``removed_count(p, n)`` nodes,
    so attacks with the same seed are nested across p."""
    return np.random.default_rng(seed).permutation(n)


def attack(state: SystemState, spec: AttackSpec) -> SystemState:
    """Kill the attacked nodes in A and their dependency partners in B.

    Raises:
        InvalidParameterError: If *p* is outside [0, 1] or the explicit set has
            out-of-range or repeated indices.
    """
    n = state.node_count
    if not 0.0 <= spec.p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got p={spec.p}")
    if spec.explicit_set is not None:
        removed = np.asarray(spec.explicit_set, dtype=np.int64)
        if removed.size and (removed.min() < 0 or removed.max() >= n):
            raise InvalidParameterError(f"Attack set has indices outside [0, {n})")
        if np.unique(removed).size != removed.size:
            raise InvalidParameterError("Attack set has repeated indices")
    else:
        removed = attack_order(n, spec.seed)[: removed_count(spec.p, n)]
    alive_a = state.alive_a.copy()
    alive_b = state.alive_b.copy()
    alive_a[removed] = False
    alive_b[state.dep_map.pi[removed]] = False
    return replace(state, alive_a=alive_a, alive_b=alive_b)


def _prune(graph: Graph, alive: np.ndarray, min_size: int) -> np.ndarray:
    """Restrict *alive* in place to its giant component; return the nodes that died."""
    keep = np.zeros(alive.size, dtype=bool)
    keep[giant_component(graph, alive, min_size)] = True
    dead = np.flatnonzero(alive & ~keep)
    alive[dead] = False
    return dead


def _cascade(state: SystemState, dependent_a: np.ndarray) -> CascadeResult:
    n = state.node_count
    pi = state.dep_map.pi
    inverse = state.dep_map.inverse
    dependent_b = np.zeros(n, dtype=bool)
    dependent_b[pi[dependent_a]] = True
    alive_a = state.alive_a.copy()
    alive_b = state.alive_b.copy()
    min_size = state.min_component_size

    trace_a = [alive_a.sum() / n]
    trace_b = [alive_b.sum() / n]
    rounds = 0
    while True:
        rounds += 1
        dead_a = _prune(state.graph_a, alive_a, min_size)
        dead_b = _prune(state.graph_b, alive_b, min_size)
        lost_b = pi[dead_a[dependent_a[dead_a]]]
        lost_b = lost_b[alive_b[lost_b]]
        lost_a = inverse[dead_b[dependent_b[dead_b]]]
        lost_a = lost_a[alive_a[lost_a]]
        alive_b[lost_b] = False
        alive_a[lost_a] = False
        trace_a.append(alive_a.sum() / n)
        trace_b.append(alive_b.sum() / n)
        logger.debug(
            "round %d: A lost %d, B lost %d, A alive %.5f",
            rounds, dead_a.size + lost_a.size, dead_b.size + lost_b.size, trace_a[-1],
        )
        if lost_a.size == 0 and lost_b.size == 0:
            break

    return CascadeResult(
        p_infinity=float(trace_a[-1]),
        noi=rounds,
        trace_a=np.array(trace_a),
        trace_b=np.array(trace_b),
        final_alive=np.flatnonzero(alive_a),
        final_alive_b=np.flatnonzero(alive_b),
    )


def run_cascade(state: SystemState) -> CascadeResult:
    """Alternate giant-component pruning and dependency removal until nothing changes.

    One iteration prunes both layers to their giant components on the current
    masks, then kills the partners of every pruned node in the other layer.
    The cascade stops after the first iteration whose pruning costs neither
    layer a partner, so an unattacked system and any identity-map system
    finish in one iteration. Both layers are treated alike, and swapping them
    (with the inverse map) gives the same result.
    """
    return _cascade(state, np.ones(state.node_count, dtype=bool))


def run_cascade_partial(
    state: SystemState,
    dependent_fraction: float,
    spec: AttackSpec,
    *,
    dependent: np.ndarray | None = None,
) -> CascadeResult:
    """Attack *state* and cascade with only some nodes interdependent.

    A nodes outside the dependent set (and B nodes outside its image) are
    autonomous: they never die because their partner died. The dependent set
    is *dependent* when given, otherwise ``round(dependent_fraction * N)`` A
    nodes chosen with a seed derived from ``spec.seed``.
    """
    if not 0.0 <= dependent_fraction <= 1.0:
        raise InvalidParameterError(
            f"Dependent fraction must lie in [0, 1], got {dependent_fraction}"
        )
    n = state.node_count
    if dependent is None:
        rng = np.random.default_rng(derive_seed(spec.seed, "dependent"))
        dependent = np.zeros(n, dtype=bool)
        dependent[rng.choice(n, size=int(round(dependent_fraction * n)), replace=False)] = True
    dependent = np.asarray(dependent, dtype=bool)
    if dependent.shape != (n,):
        raise InvalidParameterError("Dependent mask must have one entry per node")
    return _cascade(attack(state, spec), dependent)


def single_network_percolation(graph: Graph, alive: np.ndarray, min_size: int = 1) -> float:
    """Giant-component fraction of one layer under the *alive* mask."""
    return giant_component(graph, alive, min_size).size / graph.node_count
