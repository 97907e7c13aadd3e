"""Run configuration: JSON files, dotted-key overrides, validation."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ..basis import QuadratureGrid, make_grid
from ..dynamics import PhysParams
from ..errors import ConfigurationError
from ..integrator import StepControls
from ..regularization import RegEps

OUT_DIR_ENV = "THINLAYERS_OUT"

INITIAL_KINDS = ("flat", "cosine_bump", "compact_support_touching_zero", "coefficients", "tabulated")


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial layer profiles. ``params`` holds the per-kind settings, see ``initial_data``."""

    kind: str = "cosine_bump"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ConfigurationError(f"unknown initial data kind {self.kind!r}; choose from {INITIAL_KINDS}")

    def to_dict(self):
        return {"kind": self.kind, **copy.deepcopy(self.params)}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        return cls(kind=d.pop("kind", "cosine_bump"), params=d)


@dataclass(frozen=True)
class RunConfig:
    n: int = 16
    eps: float = 0.1
    M: int | None = None
    phys: PhysParams = field(default_factory=lambda: PhysParams(A=2.0, B=1.0, L=1.0))
    T_end: float = 1.0
    sample_count: int = 201
    sample_spacing: str = "geometric"
    sample_t_first: float | None = None
    quadrature_rule: str = "midpoint"
    controls: StepControls = field(default_factory=StepControls)
    initial: InitialDataSpec = field(default_factory=InitialDataSpec)
    out_dir: str = "runs/default"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"mode count must be >= 1, got {self.n}")
        RegEps(self.eps)
        if self.M is None:
            object.__setattr__(self, "M", 8 * (self.n + 1))
        if self.M < 4 * (self.n + 1):
            raise ConfigurationError(f"M={self.M} too small for n={self.n}; need M >= {4 * (self.n + 1)}")
        if self.sample_count < 2:
            raise ConfigurationError("sample_count must be at least 2")
        if self.T_end <= 0:
            raise ConfigurationError("T_end must be positive")
        if self.sample_spacing not in ("uniform", "geometric"):
            raise ConfigurationError(f"sample_spacing must be 'uniform' or 'geometric', got {self.sample_spacing!r}")
        if self.sample_t_first is not None and not (0 < self.sample_t_first < self.T_end):
            raise ConfigurationError("sample_t_first must lie in (0, T_end)")

    @property
    def L(self) -> float:
        return self.phys.L

    def grid(self) -> QuadratureGrid:
        return make_grid(self.M, self.phys.L, rule=self.quadrature_rule, n=self.n)

    def sample_times(self) -> np.ndarray:
        """Sample times in [0, T_end]; geometric spacing resolves the fast initial decay."""
        if self.sample_spacing == "uniform":
            return np.linspace(0.0, self.T_end, self.sample_count)
        t_first = self.sample_t_first if self.sample_t_first is not None else 1e-5 * self.T_end
        ts = np.geomspace(t_first, self.T_end, self.sample_count - 1)
        ts[-1] = self.T_end
        return np.concatenate([[0.0], ts])

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["phys"] = asdict(self.phys)
        d["controls"] = asdict(self.controls)
        d["initial"] = self.initial.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = copy.deepcopy(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        if "phys" in kw:
            try:
                kw["phys"] = PhysParams(**kw["phys"])
            except TypeError as exc:
                raise ConfigurationError(f"bad phys section: {exc}") from exc
        if "controls" in kw:
            try:
                kw["controls"] = StepControls(**kw["controls"])
            except TypeError as exc:
                raise ConfigurationError(f"bad controls section: {exc}") from exc
        if "initial" in kw:
            kw["initial"] = InitialDataSpec.from_dict(kw["initial"])
        return cls(**kw)

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(d: dict, overrides) -> dict:
    """Apply ``key=value`` overrides with dotted keys (``controls.rel_tol=1e-8``).

    Values are parsed as JSON when possible, otherwise kept as strings.
    """
    d = copy.deepcopy(d)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = d
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"override {key!r} descends into a non-section value")
        node[parts[-1]] = _parse_value(raw.strip())
    return d


def load_config(path=None, overrides=(), out_dir=None) -> RunConfig:
    """Resolve a RunConfig from defaults, an optional JSON file, overrides and the output-dir env var."""
    base = RunConfig().to_dict()
    base["M"] = None
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        for section in ("phys", "controls"):
            if section in user:
                base[section].update(user.pop(section))
        if "initial" in user:
            base["initial"] = user.pop("initial")
        base.update(user)
    base = apply_overrides(base, overrides)
    env_out = os.environ.get(OUT_DIR_ENV)
    if out_dir is not None:
        base["out_dir"] = str(out_dir)
    elif env_out:
        base["out_dir"] = env_out
    return RunConfig.from_dict(base)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
