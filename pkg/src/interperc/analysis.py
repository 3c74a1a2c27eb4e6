"""Sweeps, critical-point location and fixed-point analysis built on the cascade."""
import functools
import itertools
import logging
import multiprocessing
import sys
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression
from tqdm import tqdm

from interperc.cascade import (
    AttackSpec,
    CascadeResult,
    ModelSpec,
    attack,
    attack_order,
    build_system,
    new_system,
    removed_count,
    run_cascade,
    run_cascade_partial,
    single_network_percolation,
)
from interperc.depmap import DependencyMap
from interperc.errors import InvalidParameterError, NoTransitionError
from interperc.graphs import generate, generate_square_lattice
from interperc.seeding import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_PC_TOL = 0.002
DEFAULT_QC_TOL = 0.01
DEFAULT_JUMP_THRESHOLD = 0.1
LOCATORS: tuple[str, ...] = ("steepest", "threshold")
FIXED_POINT_FORMS: tuple[str, ...] = ("graphical", "sqrt")

# Largest acceptable |x* - g(x*)| before a fixed point is reported as suspect.
FIXED_POINT_RESIDUAL = 1e-6


@dataclass(frozen=True, eq=False)
class PercolationCurve:
    topology: str
    q: float
    p: np.ndarray
    mean_pinf: np.ndarray
    std_pinf: np.ndarray
    mean_noi: np.ndarray
    realizations: int
    n: int

    @property
    def samples(self) -> list[tuple[float, float, float, float]]:
        """``(p, mean_pinf, std_pinf, mean_noi)`` rows ordered by p."""
        return list(
            zip(
                self.p.tolist(),
                self.mean_pinf.tolist(),
                self.std_pinf.tolist(),
                self.mean_noi.tolist(),
            )
        )


@dataclass(frozen=True)
class CriticalPoint:
    """Located transition of one model.

    ``jump_size`` is the mean per-realization change of P-infinity across the
    point where the mutual giant component dies; the transition is first order
    when it exceeds the jump threshold.
    """

    topology: str
    q: float
    p_c: float
    order: str
    jump_size: float
    noi_at_pc: float
    r: int | None = None


@dataclass(frozen=True, eq=False)
class PinfTable:
    """Single-network giant-component fraction ``P(x)`` on a grid of kept fractions."""

    x: np.ndarray
    values: np.ndarray
    topology: str
    n: int

    def __post_init__(self) -> None:
        if self.x.shape != self.values.shape or self.x.ndim != 1 or self.x.size < 2:
            raise InvalidParameterError("PinfTable needs matching grids of at least two points")
        if np.any(np.diff(self.x) <= 0):
            raise InvalidParameterError("PinfTable grid must be strictly increasing")
        if np.any(np.diff(self.values) < 0):
            raise InvalidParameterError("PinfTable values must be non-decreasing")
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise InvalidParameterError("PinfTable values must lie in [0, 1]")

    def __call__(self, x: float | np.ndarray) -> float | np.ndarray:
        return np.interp(x, self.x, self.values)


@dataclass(frozen=True, eq=False)
class ContrastConfiguration:
    """Lattice configuration on which the full and partial models disagree."""

    dependent: tuple[int, ...]
    pi: tuple[int, ...]
    attack: tuple[int, ...]
    full: CascadeResult
    partial: CascadeResult


def survival_threshold(n: int) -> float:
    """A run survives when its P-infinity is at least ``max(10 / N, 0.005)``."""
    return max(10.0 / n, 0.005)


def realization_seed(master_seed: int, model: ModelSpec, index: int) -> int:
    """Seed for realization *index* of *model*; p is not part of the key, so
    every p of one realization sees the same topology, map and attack order."""
    return derive_seed(master_seed, model.topology, model.map_kind, model.q, model.r, index)


def run_parallel(
    func: Callable, tasks: Iterable, threads: int = 1, desc: str | None = None
) -> list:
    """Map *func* over *tasks*, in order, with a progress bar on standard error.

    ``threads <= 1`` runs serially in this process; otherwise a process pool is
    used. Results do not depend on *threads* because every task carries its
    own seed.
    """
    tasks = list(tasks)
    bar = functools.partial(
        tqdm, total=len(tasks), desc=desc, file=sys.stderr, leave=False, disable=None
    )
    if threads <= 1 or len(tasks) <= 1:
        return [func(task) for task in bar(tasks)]
    with multiprocessing.Pool(min(threads, len(tasks))) as pool:
        return list(bar(pool.imap(func, tasks, chunksize=1)))


class _Realization:
    """One built system whose cascades are cached by removed-node count."""

    def __init__(self, model: ModelSpec, seed: int) -> None:
        self.state = build_system(model, seed)
        self.attack_seed = derive_seed(seed, "attack")
        self._cache: dict[int, tuple[float, int]] = {}

    def run(self, p: float) -> tuple[float, int]:
        m = removed_count(p, self.state.node_count)
        if m not in self._cache:
            result = run_cascade(attack(self.state, AttackSpec(p=p, seed=self.attack_seed)))
            self._cache[m] = (result.p_infinity, result.noi)
        return self._cache[m]

    def pinf(self, p: float) -> float:
        return self.run(min(max(p, 0.0), 1.0))[0]


def _sweep_realization(task: tuple[ModelSpec, int, tuple[float, ...]]) -> np.ndarray:
    model, seed, p_grid = task
    realization = _Realization(model, seed)
    return np.array([realization.run(p) for p in p_grid], dtype=np.float64)


def _model(topology: str, n: int, q: float, options: dict) -> ModelSpec:
    try:
        return ModelSpec(topology=topology, n=n, q=q, **options)
    except TypeError as exc:
        raise InvalidParameterError(f"Unknown model option: {exc}") from exc


def sweep_p(
    topology: str,
    q: float,
    p_grid: Sequence[float],
    realizations: int,
    n: int,
    seed: int,
    *,
    threads: int = 1,
    **options,
) -> PercolationCurve:
    """Average P-infinity and NOI over *realizations* systems at every p in *p_grid*.

    Each realization gets a fresh topology, map and attack order; *options*
    are further :class:`~interperc.cascade.ModelSpec` fields.

    Raises:
        InvalidParameterError: If the grid is empty, unsorted or outside [0, 1],
            or *realizations* is below 1.
    """
    p = np.asarray(p_grid, dtype=np.float64)
    if p.size == 0:
        raise InvalidParameterError("p grid is empty")
    if np.any(np.diff(p) < 0) or p.min() < 0.0 or p.max() > 1.0:
        raise InvalidParameterError(f"p grid must be sorted within [0, 1], got {p.tolist()}")
    if realizations < 1:
        raise InvalidParameterError(f"realizations must be >= 1, got {realizations}")
    model = _model(topology, n, q, options)
    tasks = [(model, realization_seed(seed, model, i), tuple(p.tolist())) for i in range(realizations)]
    runs = np.stack(run_parallel(_sweep_realization, tasks, threads, desc=f"sweep q={q}"))
    pinf, noi = runs[:, :, 0], runs[:, :, 1]
    curve = PercolationCurve(
        topology=topology,
        q=q,
        p=p,
        mean_pinf=pinf.mean(axis=0),
        std_pinf=pinf.std(axis=0),
        mean_noi=noi.mean(axis=0),
        realizations=realizations,
        n=n,
    )
    _warn_if_not_monotone(curve)
    logger.info("swept %s q=%s over %d points, %d realizations", topology, q, p.size, realizations)
    return curve


def _warn_if_not_monotone(curve: PercolationCurve) -> None:
    se = curve.std_pinf / np.sqrt(curve.realizations)
    pooled = np.sqrt(se[:-1] ** 2 + se[1:] ** 2)
    drops = np.flatnonzero(np.diff(curve.mean_pinf) < -2.0 * pooled - 1e-12)
    if drops.size:
        logger.warning(
            "P-infinity decreases with p beyond two standard errors at p=%s",
            curve.p[drops + 1].tolist(),
        )


def _threshold_bisect(realization: _Realization, tol: float, eps: float) -> tuple[float, float]:
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if realization.pinf(mid) >= eps:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _steepest_bisect(realization: _Realization, tol: float) -> tuple[float, float]:
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        rise_low = realization.pinf(mid) - realization.pinf(lo)
        rise_high = realization.pinf(hi) - realization.pinf(mid)
        if rise_high >= rise_low:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _critical_realization(
    task: tuple[ModelSpec, int, float, float, str]
) -> tuple[float, float, float, float, float]:
    """Return ``(p_c, jump, noi_at_pc, P(0), P(1))`` for one realization."""
    model, seed, tol, eps, locator = task
    realization = _Realization(model, seed)
    death_lo, death_hi = _threshold_bisect(realization, tol, eps)
    jump = realization.pinf(death_hi + tol) - realization.pinf(death_lo - tol)
    if locator == "threshold":
        lo, hi = death_lo, death_hi
    else:
        lo, hi = _steepest_bisect(realization, tol)
    noi = max(realization.run(lo)[1], realization.run(hi)[1])
    return hi, jump, float(noi), realization.pinf(0.0), realization.pinf(1.0)


def find_pc(
    topology: str,
    q: float,
    n: int,
    realizations: int,
    tol: float = DEFAULT_PC_TOL,
    *,
    seed: int = 0,
    locator: str = "steepest",
    jump_threshold: float = DEFAULT_JUMP_THRESHOLD,
    survival: float | None = None,
    threads: int = 1,
    **options,
) -> CriticalPoint:
    """Locate the percolation threshold of one model and classify its order.

    Every realization is bisected on its own (nested) P-infinity curve. With
    ``locator="steepest"`` each halving keeps the half over which P-infinity
    rises more, which homes in on the steepest rise; ``locator="threshold"``
    finds the smallest p whose P-infinity reaches the survival threshold.
    p_c is the mean of the per-realization upper bracket ends.

    The order comes from the jump ``P(p_d + tol) - P(p_d - tol)`` at each
    realization's death point p_d (threshold bisection), averaged: first order
    when the mean jump exceeds *jump_threshold*.

    Raises:
        InvalidParameterError: If *tol* is below ``1 / n`` or *locator* is unknown.
        NoTransitionError: If the system dies even at p = 1 or survives at p = 0.
    """
    if tol < 1.0 / n:
        raise InvalidParameterError(f"Bisection tolerance must be >= 1/N = {1.0 / n}, got {tol}")
    if locator not in LOCATORS:
        raise InvalidParameterError(f"Unknown locator: {locator!r}. Supported: {list(LOCATORS)}")
    if realizations < 1:
        raise InvalidParameterError(f"realizations must be >= 1, got {realizations}")
    model = _model(topology, n, q, options)
    eps = survival_threshold(n) if survival is None else survival
    tasks = [
        (model, realization_seed(seed, model, i), tol, eps, locator) for i in range(realizations)
    ]
    rows = np.array(run_parallel(_critical_realization, tasks, threads, desc=f"p_c q={q}"))
    pc, jump, noi, at_zero, at_one = rows.T
    if at_one.mean() < eps:
        raise NoTransitionError(
            f"{topology} q={q} r={model.r}: no giant component even at p=1 "
            f"(P={at_one.mean():.4g} < {eps:.4g})"
        )
    if at_zero.mean() >= eps:
        raise NoTransitionError(f"{topology} q={q} r={model.r}: giant component survives at p=0")
    mean_jump = float(jump.mean())
    point = CriticalPoint(
        topology=topology,
        q=q,
        p_c=float(pc.mean()),
        order="first" if mean_jump > jump_threshold else "second",
        jump_size=mean_jump,
        noi_at_pc=float(noi.mean()),
        r=model.r if model.map_kind in ("block_local", "linear", "linear_axis") else None,
    )
    logger.info(
        "%s q=%s: p_c=%.4f order=%s jump=%.3f noi=%.2f",
        topology, q, point.p_c, point.order, point.jump_size, point.noi_at_pc,
    )
    return point


def _is_first_order(topology: str, q: float, n: int, realizations: int, **kwargs) -> bool:
    return find_pc(topology, q, n, realizations, **kwargs).order == "first"


def find_qc_bracket(
    topology: str,
    n: int,
    realizations: int,
    *,
    tol_q: float = DEFAULT_QC_TOL,
    **kwargs,
) -> tuple[float, float]:
    """Bisect on q for the change of transition order; return the final ``(lo, hi)``.

    Keyword arguments are passed to :func:`find_pc`.

    Raises:
        NoTransitionError: If q = 0 is not second order or q = 1 is not first order.
    """
    if _is_first_order(topology, 0.0, n, realizations, **kwargs):
        raise NoTransitionError(f"{topology}: transition is already first order at q=0")
    if not _is_first_order(topology, 1.0, n, realizations, **kwargs):
        raise NoTransitionError(f"{topology}: transition is still second order at q=1")
    lo, hi = 0.0, 1.0
    while hi - lo > tol_q:
        mid = 0.5 * (lo + hi)
        if _is_first_order(topology, mid, n, realizations, **kwargs):
            hi = mid
        else:
            lo = mid
        logger.info("%s q_c bracket [%.4f, %.4f]", topology, lo, hi)
    return lo, hi


def find_qc(topology: str, n: int, realizations: int, **kwargs) -> float:
    """Return the rewiring probability separating second- from first-order transitions."""
    lo, hi = find_qc_bracket(topology, n, realizations, **kwargs)
    return 0.5 * (lo + hi)


def find_rc(n: int, realizations: int, *, map_kind: str = "block_local", **kwargs) -> int:
    """Return the smallest block side whose transition is first order.

    Integer bisection over ``1 <= r <= L`` on a lattice of *n* nodes.

    Raises:
        NoTransitionError: If r = 1 is first order or r = L is second order.
    """
    side = ModelSpec(topology="lattice", n=n).lattice_side
    kwargs.pop("r", None)

    def first(r: int) -> bool:
        return _is_first_order("lattice", 0.0, n, realizations, map_kind=map_kind, r=r, **kwargs)

    if first(1):
        raise NoTransitionError(f"{map_kind}: transition is already first order at r=1")
    if not first(side):
        raise NoTransitionError(f"{map_kind}: transition is still second order at r={side}")
    lo, hi = 1, side
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if first(mid):
            hi = mid
        else:
            lo = mid
        logger.info("%s r_c bracket [%d, %d]", map_kind, lo, hi)
    return hi


def noi_vs_q(
    topology: str, q_grid: Sequence[float], n: int, realizations: int, **kwargs
) -> list[tuple[float, float]]:
    """Return ``(q, noi_at_pc)`` for every q in *q_grid*."""
    return [
        (q, find_pc(topology, q, n, realizations, **kwargs).noi_at_pc) for q in q_grid
    ]


def _pinf_realization(task: tuple[ModelSpec, int, tuple[float, ...]]) -> np.ndarray:
    model, seed, x_grid = task
    graph = generate(
        model.topology,
        model.n,
        derive_seed(seed, "graph"),
        mean_degree=model.mean_degree,
        beta=model.beta,
        exponent=model.exponent,
    )
    order = attack_order(model.n, derive_seed(seed, "attack"))
    values = []
    for x in x_grid:
        alive = np.ones(model.n, dtype=bool)
        alive[order[: removed_count(x, model.n)]] = False
        values.append(single_network_percolation(graph, alive, model.min_component_size))
    return np.array(values)


def tabulate_pinf(
    topology: str,
    n: int,
    x_grid: Sequence[float],
    realizations: int,
    *,
    seed: int = 0,
    threads: int = 1,
    **options,
) -> PinfTable:
    """Tabulate the single-network giant-component fraction after keeping a fraction x.

    The realization average is projected onto non-decreasing sequences by
    isotonic regression before it is stored.
    """
    x = np.asarray(x_grid, dtype=np.float64)
    if x.size < 2 or np.any(np.diff(x) <= 0) or x.min() < 0.0 or x.max() > 1.0:
        raise InvalidParameterError("x grid must be strictly increasing within [0, 1]")
    model = _model(topology, n, 0.0, options)
    tasks = [
        (model, derive_seed(seed, topology, "pinf", i), tuple(x.tolist()))
        for i in range(realizations)
    ]
    mean = np.mean(run_parallel(_pinf_realization, tasks, threads, desc="P-infinity"), axis=0)
    values = np.clip(isotonic_regression(mean, increasing=True).x, 0.0, 1.0)
    return PinfTable(x=x, values=values, topology=topology, n=n)


def _fixed_point_map(p: float, table: PinfTable, form: str) -> Callable[[np.ndarray], np.ndarray]:
    if form == "graphical":
        return lambda x: p * table(x) / x
    if form == "sqrt":
        return lambda x: np.sqrt(p * table(x))
    raise InvalidParameterError(
        f"Unknown fixed-point form: {form!r}. Supported: {list(FIXED_POINT_FORMS)}"
    )


def _noise_floor(table: PinfTable, floor: float | None) -> float:
    if floor is not None:
        return floor
    return survival_threshold(table.n) if table.n > 0 else 0.0


def solve_fixed_point(
    p: float, table: PinfTable, form: str = "graphical", *, floor: float | None = None
) -> float:
    """Return the largest positive solution of ``x = g(x)``, or 0 when there is none.

    Both forms solve ``x^2 = p P(x)``: ``g(x) = p P(x) / x`` is the graphical
    form and ``g(x) = sqrt(p P(x))`` the square-root form. Only grid points
    where P is at least *floor* are considered; it defaults to the survival
    threshold of the tabulated size, which keeps the few-node clusters below
    the single-network threshold from producing spurious roots near x = 0.
    The grid is scanned downwards and the crossing is located by linear
    interpolation.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got p={p}")
    g = _fixed_point_map(p, table, form)
    valid = (table.x > 0) & (table.values >= _noise_floor(table, floor))
    x = table.x[valid]
    if x.size == 0:
        return 0.0
    f = g(x) - x
    above = np.flatnonzero(f >= 0.0)
    if above.size == 0:
        return 0.0
    k = above[-1]
    if k == x.size - 1:
        root = float(x[-1])
        bound = FIXED_POINT_RESIDUAL
    else:
        root = float(x[k] + f[k] * (x[k + 1] - x[k]) / (f[k] - f[k + 1]))
        bound = max(FIXED_POINT_RESIDUAL, float(abs(f[k] - f[k + 1])))
    residual = abs(root - float(g(root)))
    if residual > bound:
        logger.warning("fixed point x=%.6f at p=%.4f has residual %.2e", root, p, residual)
    return root


def predict_pc(
    table: PinfTable, form: str = "graphical", tol: float = 1e-4, *, floor: float | None = None
) -> float:
    """Smallest p, within *tol*, at which the fixed-point equation has a positive solution.

    Raises:
        NoTransitionError: If there is no positive solution even at p = 1.
    """
    if solve_fixed_point(1.0, table, form, floor=floor) <= 0.0:
        raise NoTransitionError(f"{table.topology}: no positive fixed point at p=1")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if solve_fixed_point(mid, table, form, floor=floor) > 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def iterate_recursion(p: float, table: PinfTable, steps: int) -> np.ndarray:
    """Return ``p_0 .. p_steps`` of ``p_0 = p``, ``p_i = (p / p_{i-1}) P(p_{i-1})``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got p={p}")
    values = [p]
    for _ in range(steps):
        previous = values[-1]
        values.append(0.0 if previous == 0.0 else p / previous * float(table(previous)))
    return np.array(values)


def search_contrast_configuration(
    side: int = 3,
    dependent_count: int = 5,
    attack_size: int = 5,
    *,
    full_size: int = 0,
    partial_size: int = 4,
    min_component_size: int = 2,
) -> ContrastConfiguration | None:
    """Exhaustively search a ``side x side`` lattice for a case that separates the models.

    Dependent sets are enumerated first, then permutations of their targets
    (nodes outside the set depend on themselves), then attack sets. The first
    configuration whose full cascade ends with *full_size* nodes while the
    partial model, in which only the dependent set is coupled, ends with
    *partial_size* nodes is returned; None when there is none.
    """
    graph = generate_square_lattice(side)
    n = graph.node_count
    attacks = list(itertools.combinations(range(n), attack_size))
    for dependent in itertools.combinations(range(n), dependent_count):
        mask = np.zeros(n, dtype=bool)
        mask[list(dependent)] = True
        for targets in itertools.permutations(dependent):
            pi = np.arange(n, dtype=np.int64)
            pi[list(dependent)] = targets
            state = new_system(
                graph,
                DependencyMap(pi=pi, tag="random_fraction", marked=mask),
                min_component_size=min_component_size,
            )
            for removed in attacks:
                spec = AttackSpec(p=1.0 - attack_size / n, explicit_set=removed)
                partial = run_cascade_partial(state, dependent_count / n, spec, dependent=mask)
                if partial.final_alive.size != partial_size:
                    continue
                full = run_cascade(attack(state, spec))
                if full.final_alive.size == full_size:
                    logger.info(
                        "contrast found: dependent=%s pi=%s attack=%s",
                        dependent, pi.tolist(), removed,
                    )
                    return ContrastConfiguration(
                        dependent=dependent,
                        pi=tuple(pi.tolist()),
                        attack=removed,
                        full=full,
                        partial=partial,
                    )
    return None
