"""Run configuration: an INI file plus command-line overrides.

Sections and keys::

    [system]       kind = qubits | qutrits ; initial = --
    [couplings]    gammas = x,y,z,xy,yx                        (or)
                   scenario = iso-exchange-dd ; gamma ; Gamma ; gamma_y ; Gamma_dm
    [sweep]        alpha (or lambda) ; mode = full | half ; window_factor ; convention
    [propagation]  tol ; n_samples ; max_steps
    [scan]         axis ; range = lo:hi:n ; numeric = yes | no
    [classify]     observed = P_plus,P_minus ; tolerance
    [run]          seed ; jobs ; out

Flags override file values. Overriding one of a mutually exclusive pair
(``alpha``/``lambda``, ``gammas``/``scenario``) clears the other.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, fields, replace

from .operators import CouplingParams, pair_labels
from .propagator import PropagationConfig
from .qubits import ScenarioKind, scenario_params
from .scan import alpha_for_lambda, canonical_axis, parse_range
from .sweep import CONVENTIONS, DEFAULT_WINDOW_FACTOR, MODES, SweepProtocol

SYSTEMS = ("qubits", "qutrits")
DEFAULT_INITIAL = {"qubits": "--", "qutrits": "-10"}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


# (section, key, attribute, type)
_LAYOUT = (
    ("system", "kind", "system", str),
    ("system", "initial", "initial", str),
    ("couplings", "gammas", "gammas", str),
    ("couplings", "scenario", "scenario", str),
    ("couplings", "gamma", "gamma", float),
    ("couplings", "Gamma", "Gamma", float),
    ("couplings", "gamma_y", "gamma_y", float),
    ("couplings", "Gamma_dm", "Gamma_dm", float),
    ("sweep", "alpha", "alpha", float),
    ("sweep", "lambda", "lam", float),
    ("sweep", "mode", "mode", str),
    ("sweep", "window_factor", "window_factor", float),
    ("sweep", "convention", "convention", str),
    ("propagation", "tol", "tol", float),
    ("propagation", "n_samples", "n_samples", int),
    ("propagation", "max_steps", "max_steps", int),
    ("scan", "axis", "scan_axis", str),
    ("scan", "range", "scan_range", str),
    ("scan", "numeric", "numeric", bool),
    ("classify", "observed", "observed", str),
    ("classify", "tolerance", "classify_tol", float),
    ("run", "seed", "seed", int),
    ("run", "jobs", "jobs", int),
    ("run", "out", "out", str),
)
EXCLUSIVE = (("alpha", "lam"), ("gammas", "scenario"))


@dataclass(frozen=True)
class RunConfig:
    system: str = "qubits"
    initial: str | None = None
    gammas: str | None = None
    scenario: str | None = None
    gamma: float | None = None
    Gamma: float | None = None
    gamma_y: float | None = None
    Gamma_dm: float | None = None
    alpha: float | None = None
    lam: float | None = None
    mode: str = "full"
    window_factor: float = DEFAULT_WINDOW_FACTOR
    convention: str = "splitting"
    tol: float = 1e-10
    n_samples: int = 2001
    max_steps: int = 20_000_000
    scan_axis: str | None = None
    scan_range: str | None = None
    numeric: bool = False
    observed: str | None = None
    classify_tol: float = 1e-3
    seed: int = 0
    jobs: int | None = None
    out: str | None = None

    # -- construction --------------------------------------------------------

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keep gamma / Gamma distinct
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        known = {(s, k) for s, k, _, _ in _LAYOUT}
        for section in parser.sections():
            for key in parser[section]:
                if (section, key) not in known:
                    raise ConfigError(f"unknown config key [{section}] {key}")
        values = {}
        for section, key, attr, typ in _LAYOUT:
            if not parser.has_option(section, key):
                continue
            try:
                if typ is bool:
                    values[attr] = parser.getboolean(section, key)
                else:
                    values[attr] = typ(parser.get(section, key))
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
        return cls(**values)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_ini(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None

    def override(self, **changes) -> "RunConfig":
        """Apply non-``None`` overrides; an exclusive partner of a set value is cleared."""
        changes = {k: v for k, v in changes.items() if v is not None}
        for a, b in EXCLUSIVE:
            if a in changes and b not in changes:
                changes[b] = None
            elif b in changes and a not in changes:
                changes[a] = None
        return replace(self, **changes)

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        defaults = RunConfig()
        for section, key, attr, typ in _LAYOUT:
            value = getattr(self, attr)
            if value is None or (value == getattr(defaults, attr) and attr not in ("system",)):
                continue
            if not parser.has_section(section):
                parser.add_section(section)
            if typ is bool:
                text = "yes" if value else "no"
            elif typ is float:
                text = repr(float(value))
            else:
                text = str(value)
            parser.set(section, key, text)
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    # -- resolution ----------------------------------------------------------

    def validate(self) -> "RunConfig":
        if self.system not in SYSTEMS:
            raise ConfigError(f"system must be one of {SYSTEMS}, got {self.system!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"convention must be one of {CONVENTIONS}")
        if self.initial_label not in pair_labels(self.system):
            raise ConfigError(f"initial state {self.initial_label!r} is not in the {self.system} basis "
                              f"{pair_labels(self.system)}")
        if self.gammas is not None and self.scenario is not None:
            raise ConfigError("give either gammas or a scenario, not both")
        if self.alpha is not None and self.lam is not None:
            raise ConfigError("give either alpha or lambda, not both")
        if self.jobs is not None and self.jobs < 1:
            raise ConfigError("jobs must be positive")
        if self.scan_range is not None:
            try:
                parse_range(self.scan_range)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.scan_axis is not None:
            try:
                canonical_axis(self.scan_axis)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        try:
            self.propagation()
            if self.gammas is not None or self.scenario is not None:
                self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    @property
    def initial_label(self) -> str:
        if self.initial is None:
            return DEFAULT_INITIAL.get(self.system, "")
        return normalize_label(self.initial)

    def params(self) -> CouplingParams:
        if self.scenario is not None:
            kind = ScenarioKind.parse(self.scenario)
            if self.gamma is None:
                raise ConfigError("a scenario needs gamma")
            return scenario_params(kind, self.gamma, self.Gamma or 0.0, gamma_y=self.gamma_y,
                                   Gamma_dm=self.Gamma_dm)
        if self.gammas is None:
            raise ConfigError("no couplings: give gammas or a scenario")
        return parse_gammas(self.gammas)

    def resolved_alpha(self, params: CouplingParams | None = None) -> float:
        if self.alpha is not None:
            return self.alpha
        if self.lam is not None:
            try:
                return alpha_for_lambda(self.system, params or self.params(), self.lam)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        raise ConfigError("no slope: give alpha or lambda")

    def sweep(self, params: CouplingParams | None = None) -> SweepProtocol:
        try:
            return SweepProtocol(self.resolved_alpha(params), mode=self.mode, window_factor=self.window_factor,
                                 convention=self.convention)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def propagation(self) -> PropagationConfig:
        return PropagationConfig(tol=self.tol, n_samples=self.n_samples, max_steps=self.max_steps)

    def observed_pair(self) -> tuple[float, float]:
        if self.observed is None:
            raise ConfigError("classify needs an observed pair P_plus,P_minus")
        return tuple(_floats(self.observed, 2, "observed"))


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what} must be {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n or not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{what} must be {n} finite comma-separated numbers, got {text!r}")
    return vals


def normalize_label(label: str) -> str:
    """Accept the CSV spelling of basis states (``mm``, ``pm``, ``m10``).

    A bare ``--`` cannot be passed as an option value on the command line.
    """
    return label.strip().replace("p", "+").replace("m", "-")


def parse_gammas(text: str) -> CouplingParams:
    return CouplingParams.from_sequence(_floats(text, 5, "gammas (x,y,z,xy,yx)"))


CONFIG_FIELDS = tuple(f.name for f in fields(RunConfig))
