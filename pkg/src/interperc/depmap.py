import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from interperc.errors import InvalidParameterError

logger = logging.getLogger(__name__)

MAP_KINDS: tuple[str, ...] = (
    "identity",
    "rewired",
    "random_fraction",
    "block_local",
    "linear",
    "linear_axis",
)

# E(n) is evaluated with exact integers up to this n; beyond it E(n) = 1.
EXACT_FIXED_POINT_LIMIT = 20

FIXED_POINT_BOUND = 1.0 + math.e / 2.0


@dataclass(frozen=True, eq=False)
class DependencyMap:
    """One-to-one dependency links: node ``i`` of layer A depends on node ``pi[i]`` of B.

    ``marked`` is the boolean set of indices whose links were randomised, when
    the constructor has one (rewired and random-fraction maps).
    """

    pi: np.ndarray
    tag: str
    q: float | None = None
    r: int | None = None
    seed: int | None = None
    marked: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not is_permutation(self.pi):
            raise InvalidParameterError(f"Dependency map {self.tag!r} is not a permutation")

    @property
    def node_count(self) -> int:
        return int(self.pi.size)

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.pi)
        inv[self.pi] = np.arange(self.pi.size, dtype=self.pi.dtype)
        return inv

    def fixed_point_fraction(self) -> float:
        return float(np.mean(self.pi == np.arange(self.pi.size)))


def is_permutation(pi: np.ndarray) -> bool:
    """Return True when every index ``0..len(pi)-1`` appears exactly once."""
    pi = np.asarray(pi)
    if pi.ndim != 1 or pi.size == 0:
        return False
    if pi.min() < 0 or pi.max() >= pi.size:
        return False
    return bool(np.all(np.bincount(pi, minlength=pi.size) == 1))


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {name}={value}")


def identity_map(n: int) -> DependencyMap:
    if n < 1:
        raise InvalidParameterError(f"Dependency map needs n >= 1, got n={n}")
    return DependencyMap(pi=np.arange(n, dtype=np.int64), tag="identity", q=0.0)


def _shuffle_marked(base: DependencyMap, marked: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    pi = base.pi.copy()
    idx = np.flatnonzero(marked)
    pi[idx] = pi[rng.permutation(idx)]
    return pi


def rewire_map(base: DependencyMap, q: float, rng_seed: int) -> DependencyMap:
    """Rewire each dependency link of *base* with probability *q*.

    Every index is marked independently with probability *q*; the targets of
    the marked indices are permuted uniformly among themselves. With ``q = 1``
    the result is a uniform random permutation.
    """
    _check_probability("q", q)
    rng = np.random.default_rng(rng_seed)
    marked = rng.random(base.node_count) < q
    pi = _shuffle_marked(base, marked, rng)
    return DependencyMap(pi=pi, tag="rewired", q=q, seed=rng_seed, marked=marked)


def random_fraction_map(base: DependencyMap, fraction: float, rng_seed: int) -> DependencyMap:
    """Randomise the links of exactly ``round(fraction * N)`` uniformly chosen indices.

    The remaining indices keep their *base* link (the identical node when the
    base is the identity map).
    """
    _check_probability("fraction", fraction)
    rng = np.random.default_rng(rng_seed)
    n = base.node_count
    marked = np.zeros(n, dtype=bool)
    marked[rng.choice(n, size=int(round(fraction * n)), replace=False)] = True
    pi = _shuffle_marked(base, marked, rng)
    return DependencyMap(pi=pi, tag="random_fraction", q=fraction, seed=rng_seed, marked=marked)


def _lattice_coordinates(side: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(side * side, dtype=np.int64)
    return idx % side, idx // side


def block_local_map(side: int, r: int, rng_seed: int) -> DependencyMap:
    """Randomise dependency links within ``r x r`` blocks of an ``side x side`` lattice.

    Blocks are axis aligned from the origin; when *r* does not divide *side*
    the last row and column of blocks are truncated, not wrapped.
    """
    if r < 1 or r > side:
        raise InvalidParameterError(f"Block side must lie in [1, L={side}], got r={r}")
    x, y = _lattice_coordinates(side)
    blocks_per_row = -(-side // r)
    block = (x // r) + blocks_per_row * (y // r)
    rng = np.random.default_rng(rng_seed)
    members = np.argsort(block, kind="stable")
    shuffled = np.lexsort((rng.random(block.size), block))
    pi = np.empty(block.size, dtype=np.int64)
    pi[members] = shuffled
    return DependencyMap(pi=pi, tag="block_local", r=r, seed=rng_seed)


def linear_map(side: int, r: int) -> DependencyMap:
    """Shift the lattice rigidly by ``(r, r)`` with periodic wrapping."""
    if not 0 <= r <= side:
        raise InvalidParameterError(f"Shift length must lie in [0, L={side}], got r={r}")
    x, y = _lattice_coordinates(side)
    pi = (x + r) % side + side * ((y + r) % side)
    return DependencyMap(pi=pi, tag="linear", r=r)


def linear_axis_map(side: int, r: int) -> DependencyMap:
    """Shift the lattice rigidly by ``(r, 0)`` with periodic wrapping."""
    if not 0 <= r <= side:
        raise InvalidParameterError(f"Shift length must lie in [0, L={side}], got r={r}")
    x, y = _lattice_coordinates(side)
    pi = (x + r) % side + side * y
    return DependencyMap(pi=pi, tag="linear_axis", r=r)


def derangements(n: int) -> int:
    """Return D(n), the number of permutations of *n* elements without a fixed point."""
    if n < 0:
        raise InvalidParameterError(f"derangements needs n >= 0, got n={n}")
    previous, current = 1, 0  # D(0), D(1)
    if n == 0:
        return previous
    for k in range(2, n + 1):
        previous, current = current, (k - 1) * (current + previous)
    return current


def expected_fixed_points(n: int) -> float:
    """Return E(n), the mean number of fixed points of a uniform permutation of *n* elements.

    Evaluated exactly from the derangement counts for ``n <= 20``; the exact
    value is 1 for every n, which is returned beyond that.
    """
    if n < 1:
        raise InvalidParameterError(f"expected_fixed_points needs n >= 1, got n={n}")
    if n > EXACT_FIXED_POINT_LIMIT:
        return 1.0
    total = sum(m * math.comb(n, m) * derangements(n - m) for m in range(n + 1))
    value = float(Fraction(total, math.factorial(n)))
    assert 0.0 <= value <= FIXED_POINT_BOUND
    return value


def p_same(q: float, p: float, n: int) -> float:
    """Probability that a surviving node in A depends on its own index in B.

    ``(1 - q) p + p E(qN) / (qN)``; the second term is 0 for ``q = 0``.
    """
    _check_probability("q", q)
    _check_probability("p", p)
    if n < 1:
        raise InvalidParameterError(f"p_same needs n >= 1, got n={n}")
    if q == 0.0:
        return p
    marked = q * n
    return (1.0 - q) * p + p * expected_fixed_points(max(1, int(round(marked)))) / marked


def build_map(
    kind: str,
    n: int,
    rng_seed: int,
    *,
    q: float = 0.0,
    r: int = 1,
    lattice_side: int | None = None,
) -> DependencyMap:
    """Construct a dependency map of the given *kind* over *n* nodes.

    Block-local and linear kinds need *lattice_side*.
    """
    if kind == "identity":
        return identity_map(n)
    if kind == "rewired":
        return rewire_map(identity_map(n), q, rng_seed)
    if kind == "random_fraction":
        return random_fraction_map(identity_map(n), q, rng_seed)
    if kind not in MAP_KINDS:
        raise InvalidParameterError(f"Unknown map kind: {kind!r}. Supported: {list(MAP_KINDS)}")
    if lattice_side is None:
        raise InvalidParameterError(f"Map kind {kind!r} needs a lattice topology")
    if kind == "block_local":
        return block_local_map(lattice_side, r, rng_seed)
    if kind == "linear":
        return linear_map(lattice_side, r)
    return linear_axis_map(lattice_side, r)
