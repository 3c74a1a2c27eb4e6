"""Experiment configuration: one ``[experiment]`` INI section of ``key = value`` lines."""
import configparser
import math
from dataclasses import dataclass, fields

from interperc.analysis import DEFAULT_JUMP_THRESHOLD, FIXED_POINT_FORMS, survival_threshold
from interperc.cascade import ModelSpec
from interperc.depmap import MAP_KINDS
from interperc.errors import ConfigError
from interperc.graphs import DEFAULT_MEAN_DEGREE, DEFAULT_SF_EXPONENT, DEFAULT_WS_BETA, TOPOLOGIES

SECTION = "experiment"
SCANS: tuple[str, ...] = ("pc", "q", "r", "topologies")

_INT_KEYS = {"n", "lattice_side", "r", "realizations", "master_seed", "apen_m", "min_component_size"}
_FLOAT_KEYS = {
    "q",
    "bisection_tol",
    "apen_tolerance_factor",
    "mean_degree",
    "beta",
    "exponent",
    "jump_threshold",
    "survival_threshold",
}
_FLOAT_LIST_KEYS = {"q_grid", "p_grid"}
_INT_LIST_KEYS = {"r_grid"}
_STR_LIST_KEYS = {"topologies"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one CLI run needs.

    Exactly one of *n* and *lattice_side* sets the system size. Sweeps use
    *p_grid*; critical-point scans use *bisection_tol*.
    """

    topology: str = "lattice"
    n: int | None = None
    lattice_side: int | None = None
    map_kind: str = "rewired"
    q: float = 0.0
    r: int = 1
    q_grid: tuple[float, ...] = ()
    r_grid: tuple[int, ...] = ()
    topologies: tuple[str, ...] = ()
    p_grid: tuple[float, ...] = ()
    bisection_tol: float | None = None
    realizations: int = 10
    master_seed: int = 0
    output_path: str | None = None
    apen_m: int = 2
    apen_tolerance_factor: float = 0.2
    mean_degree: float = DEFAULT_MEAN_DEGREE
    beta: float = DEFAULT_WS_BETA
    exponent: float = DEFAULT_SF_EXPONENT
    jump_threshold: float = DEFAULT_JUMP_THRESHOLD
    survival_threshold: float | None = None
    min_component_size: int = 1
    scan: str = "pc"
    fixed_point_form: str = "graphical"

    @property
    def node_count(self) -> int:
        if self.n is not None:
            return self.n
        return self.lattice_side * self.lattice_side

    @property
    def effective_survival_threshold(self) -> float:
        if self.survival_threshold is not None:
            return self.survival_threshold
        return survival_threshold(self.node_count)

    def model(self, topology: str | None = None, q: float | None = None, r: int | None = None) -> ModelSpec:
        return ModelSpec(
            topology=self.topology if topology is None else topology,
            n=self.node_count,
            map_kind=self.map_kind,
            q=self.q if q is None else q,
            r=self.r if r is None else r,
            mean_degree=self.mean_degree,
            beta=self.beta,
            exponent=self.exponent,
            min_component_size=self.min_component_size,
        )

    def validate(self, command: str | None = None) -> None:
        """Check cross-field consistency, and what *command* needs.

        Raises:
            ConfigError: On the first inconsistency found.
        """
        if (self.n is None) == (self.lattice_side is None):
            raise ConfigError("Exactly one of n and lattice_side must be set")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"Unknown topology: {self.topology!r}. Supported: {list(TOPOLOGIES)}")
        for topology in self.topologies:
            if topology not in TOPOLOGIES:
                raise ConfigError(f"Unknown topology in topologies: {topology!r}")
        if self.map_kind not in MAP_KINDS:
            raise ConfigError(f"Unknown map_kind: {self.map_kind!r}. Supported: {list(MAP_KINDS)}")
        if self.scan not in SCANS:
            raise ConfigError(f"Unknown scan: {self.scan!r}. Supported: {list(SCANS)}")
        scanned = self.topologies or (TOPOLOGIES if self.scan == "topologies" else ())
        uses_lattice = self.topology == "lattice" or "lattice" in scanned
        if uses_lattice and self.n is not None and math.isqrt(self.n) ** 2 != self.n:
            raise ConfigError(
                f"n={self.n} is not a perfect square; a lattice needs n = L*L (or set lattice_side)"
            )
        if self.fixed_point_form not in FIXED_POINT_FORMS:
            raise ConfigError(f"Unknown fixed_point_form: {self.fixed_point_form!r}")
        if self.realizations < 1:
            raise ConfigError(f"realizations must be >= 1, got {self.realizations}")
        if self.p_grid and self.bisection_tol is not None:
            raise ConfigError("Set either p_grid or bisection_tol, not both")
        if command == "sweep" and not self.p_grid:
            raise ConfigError("sweep needs a non-empty p_grid")
        if command in ("critical", "noi") and self.p_grid:
            raise ConfigError(f"{command} bisects on p; use bisection_tol instead of p_grid")
        if command == "noi" and not self.q_grid:
            raise ConfigError("noi needs a non-empty q_grid")


def _format(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(key: str, raw: str) -> object:
    raw = raw.strip()
    try:
        if key in _FLOAT_LIST_KEYS:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if key in _INT_LIST_KEYS:
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if key in _STR_LIST_KEYS:
            return tuple(v.strip() for v in raw.split(",") if v.strip())
        if raw == "" and key in ("n", "lattice_side", "bisection_tol", "output_path", "survival_threshold"):
            return None
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError(raw)
            return value
    except ValueError as exc:
        raise ConfigError(f"Bad value for {key}: {raw!r}") from exc
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse the INI *text* of an experiment config.

    Raises:
        ConfigError: If the section is missing, a key is unknown or a value
            has the wrong type.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"Malformed config: {exc}") from exc
    if not parser.has_section(SECTION):
        raise ConfigError(f"Config has no [{SECTION}] section")
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for key, raw in parser.items(SECTION):
        if key not in known:
            raise ConfigError(f"Unknown config key: {key!r}")
        values[key] = _convert(key, raw)
    return ExperimentConfig(**values)


def config_items(config: ExperimentConfig) -> list[tuple[str, str]]:
    """Return every field as a ``(key, text)`` pair, in declaration order."""
    return [(f.name, _format(getattr(config, f.name))) for f in fields(config)]


def serialize_config(config: ExperimentConfig) -> str:
    lines = [f"[{SECTION}]"]
    lines.extend(f"{key} = {value}" for key, value in config_items(config))
    return "\n".join(lines) + "\n"
