"""Run configuration: TOML file plus command-line overrides.

A config file has ``[model]`` (with optional ``friction``, ``aging`` and
``stiffness`` subtables), ``[numerics]``, ``[experiment]`` and ``[output]``
sections.  Unknown keys anywhere are rejected so that typos fail loudly
before a long run starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .constitutive import AgingLaw, FrictionLaw, ModelParams, StiffnessLaw
from .errors import ConfigError

__all__ = ["Numerics", "RunConfig", "load_config"]

_MODEL_KEYS = {"H", "C", "rho", "eta", "kappa", "ell", "Gc", "friction", "aging", "stiffness"}
_FRICTION_KEYS = {"mu0", "a", "b", "h_ref", "c_state"}
_AGING_KEYS = {"theta_inf", "c1"}
_STIFFNESS_KEYS = {"mode", "C0", "ell_ratio"}
_NUMERICS_KEYS = {"n", "tau", "tol", "max_iter", "damping"}
_OUTPUT_KEYS = {"dir"}
_TOP_KEYS = {"model", "numerics", "experiment", "output"}


@dataclass
class Numerics:
    n: int = 401
    tau: float = 0.01
    tol: float = 1e-10
    max_iter: int = 500
    damping: float = 0.5

    def __post_init__(self):
        if self.n < 3 or self.n % 2 == 0:
            raise ConfigError("numerics.n must be odd and >= 3")
        if self.tau <= 0 or self.tol <= 0:
            raise ConfigError("numerics.tau and numerics.tol must be positive")
        if not 0 < self.damping <= 1:
            raise ConfigError("numerics.damping must lie in (0, 1]")


@dataclass
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    numerics: Numerics = field(default_factory=Numerics)
    experiment: dict = field(default_factory=dict)
    output_dir: str = "out"


def _check_keys(table, allowed, where):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")


def _model_from_table(table) -> ModelParams:
    _check_keys(table, _MODEL_KEYS, "model")
    fr_tab = table.get("friction", {})
    _check_keys(fr_tab, _FRICTION_KEYS, "model.friction")
    ag_tab = table.get("aging", {})
    _check_keys(ag_tab, _AGING_KEYS, "model.aging")
    st_tab = table.get("stiffness", {})
    _check_keys(st_tab, _STIFFNESS_KEYS, "model.stiffness")

    friction = FrictionLaw(**fr_tab)
    aging = AgingLaw(**ag_tab)
    if st_tab:
        stiffness = StiffnessLaw(**st_tab)
    else:
        stiffness = StiffnessLaw(mode="constant", C0=float(table.get("C", 1.0)))
    kwargs = {
        k: float(table[k]) for k in ("H", "rho", "eta", "kappa", "ell", "Gc") if k in table
    }
    try:
        return ModelParams(C=stiffness, friction=friction, aging=aging, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides=None) -> RunConfig:
    """Build a RunConfig from an optional TOML file and CLI overrides.

    ``overrides`` is a flat mapping of dotted keys (``model.kappa``,
    ``numerics.n``, ``experiment.v_inf``, ``output.dir``) applied after the
    file is read.
    """
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    _check_keys(data, _TOP_KEYS, "top level")
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    data.setdefault("model", {})
    data.setdefault("numerics", {})
    data.setdefault("experiment", {})
    data.setdefault("output", {})

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        if section not in _TOP_KEYS:
            raise ConfigError(f"unknown config section {section!r}")
        data[section][key] = value

    try:
        model = _model_from_table(data["model"])
        _check_keys(data["numerics"], _NUMERICS_KEYS, "numerics")
        numerics = Numerics(**data["numerics"])
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _check_keys(data["output"], _OUTPUT_KEYS, "output")
    return RunConfig(
        model=model,
        numerics=numerics,
        experiment=dict(data["experiment"]),
        output_dir=str(data["output"].get("dir", "out")),
    )
