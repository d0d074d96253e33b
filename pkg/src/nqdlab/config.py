"""Run configuration: an INI-style key-value file with typed sections.

Example::

    [marginal]
    spec = pareto(alpha=1.8, xm=1.0)

    [dependence]
    kind = gaussian_copula
    correlations = -0.3

    [scaling]
    p = 1.5

Sections are ``marginal``, ``dependence``, ``scaling``, ``simulate``,
``check`` and ``output``; unknown sections or keys are rejected.  List
values are comma separated.
"""

from __future__ import annotations

import configparser
import math
import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dependence import KINDS, DependenceModel, DiscreteJoint
from .marginals import Marginal, parse_marginal
from .scaling import MomentInequalityProfile, ScalingFamily
from .series import EngineConfig

OUTPUT_DIR_ENV = "NQDLAB_OUTPUT_DIR"
SECTIONS = ("marginal", "dependence", "scaling", "simulate", "check", "output")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending section or key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _split_list(v):
    if isinstance(v, str):
        v = v.strip()
        return [x.strip() for x in v.split(",") if x.strip()] if v else []
    return v


class MarginalSection(_Section):
    spec: str
    # series checks run on this law when set (the worst case under domination)
    dominator: Optional[str] = None

    @field_validator("spec", "dominator")
    @classmethod
    def _parses(cls, v):
        if v is not None:
            parse_marginal(v)
        return v

    def build(self) -> Marginal:
        return parse_marginal(self.spec)

    def build_dominator(self) -> Marginal | None:
        return parse_marginal(self.dominator) if self.dominator else None


class DependenceSection(_Section):
    kind: Literal[KINDS] = "iid"
    correlations: tuple[float, ...] = ()
    joint_csv: Optional[str] = None

    _split = field_validator("correlations", mode="before")(classmethod(lambda cls, v: _split_list(v)))

    @model_validator(mode="after")
    def _joint(self):
        if self.kind == "discrete_joint" and not self.joint_csv:
            raise ValueError("discrete_joint needs joint_csv")
        return self


class ScalingSection(_Section):
    p: float = Field(1.5, gt=1.0, lt=2.0)
    r: float = 2.0
    s: Optional[float] = None
    lam_kind: Literal["const", "power"] = "const"
    lam_value: float = Field(1.0, gt=0.0)
    lam_gamma: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _ranges(self):
        if not self.r > self.p:
            raise ValueError(f"r must exceed p (r={self.r}, p={self.p})")
        if self.s is None:
            object.__setattr__(self, "s", (2.0 - self.p) / self.p)
        if not 0 < self.s < 1:
            raise ValueError("s must lie in (0, 1)")
        return self

    def family(self) -> ScalingFamily:
        return ScalingFamily(p=self.p, r=self.r, s=self.s)

    def profile(self) -> MomentInequalityProfile:
        return MomentInequalityProfile(r=self.r, lam_kind=self.lam_kind, lam_value=self.lam_value, gamma=self.lam_gamma)


class SimulateSection(_Section):
    seed: int = Field(0, ge=0, lt=2**64)
    paths: int = Field(200, ge=2)
    horizon: int = Field(10**6, ge=2)
    checkpoint_start: int = Field(1000, ge=1)
    per_decade: int = Field(4, ge=1)
    epsilons: tuple[float, ...] = (0.5, 1.0, 2.0)
    empirical_centering: bool = False

    _split = field_validator("epsilons", mode="before")(classmethod(lambda cls, v: _split_list(v)))

    @model_validator(mode="after")
    def _grid(self):
        if self.checkpoint_start > self.horizon:
            raise ValueError("checkpoint_start exceeds horizon")
        return self


class CheckSection(_Section):
    conditions: tuple[str, ...] = ("a", "b", "c", "d", "e", "f", "g", "h")
    tol: float = Field(1e-3, gt=0.0, lt=1.0)
    n_exact: int = Field(2**20, ge=64, le=2**24)
    eps: float = Field(2e-4, gt=0.0, lt=0.1)
    u_cap: float = Field(700.0, gt=15.0, le=700.0)
    k_max: int = Field(2**50, ge=10)

    _split = field_validator("conditions", mode="before")(classmethod(lambda cls, v: _split_list(v)))

    @field_validator("conditions")
    @classmethod
    def _known(cls, v):
        from .theorem1 import ALL_IDS

        bad = [c for c in v if c not in ALL_IDS]
        if bad:
            raise ValueError(f"unknown condition ids {bad}; expected among {list(ALL_IDS)}")
        return v

    def engine(self) -> EngineConfig:
        return EngineConfig(n_exact=self.n_exact, eps=self.eps, u_cap=self.u_cap, tol=self.tol)


class OutputSection(_Section):
    dir: Optional[str] = None
    prefix: str = ""


class RunConfig(BaseModel):
    """Validated configuration; every section has defaults except ``marginal``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    marginal: Optional[MarginalSection] = None
    dependence: DependenceSection = DependenceSection()
    scaling: ScalingSection = ScalingSection()
    simulate: SimulateSection = SimulateSection()
    check: CheckSection = CheckSection()
    output: OutputSection = OutputSection()

    def require_marginal(self) -> Marginal:
        if self.marginal is None:
            raise ConfigError("marginal", "section [marginal] with a 'spec' key is required for this command")
        return self.marginal.build()

    def output_dir(self) -> Path:
        d = self.output.dir or os.environ.get(OUTPUT_DIR_ENV) or "."
        return Path(d)

    def dependence_model(self, base: Path | None = None) -> DependenceModel:
        dep = self.dependence
        if dep.kind == "discrete_joint":
            path = Path(dep.joint_csv)
            if base is not None and not path.is_absolute():
                path = base / path
            try:
                joint = DiscreteJoint.from_csv(path)
            except OSError as exc:
                raise ConfigError("dependence.joint_csv", str(exc)) from None
            return DependenceModel("discrete_joint", joint=joint)
        return DependenceModel(dep.kind, self.require_marginal(), dep.correlations)

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        return self.model_copy(update={"simulate": self.simulate.model_copy(update={"seed": int(seed)})})

    def to_ini(self) -> str:
        """Fully resolved configuration in the file grammar (round-trips through :func:`parse_config`)."""
        lines = []
        for name in SECTIONS:
            sec = getattr(self, name)
            if sec is None:
                continue
            lines.append(f"[{name}]")
            for key, val in sec.model_dump().items():
                if val is None:
                    continue
                lines.append(f"{key} = {_fmt(val)}".rstrip())
            lines.append("")
        return "\n".join(lines).rstrip() + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _errors_to_config_error(exc: ValidationError) -> ConfigError:
    err = exc.errors()[0]
    loc = ".".join(str(p) for p in err.get("loc", ()) if p != "__root__") or "config"
    return ConfigError(loc, err.get("msg", str(exc)))


def config_from_dict(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise _errors_to_config_error(exc) from None


def parse_config(text: str) -> RunConfig:
    """Parse the INI text; comment lines start with ``#`` or ``;``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", f"cannot parse: {exc}") from None
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(unknown[0], f"unknown section; expected one of {list(SECTIONS)}")
    return config_from_dict({s: dict(cp.items(s)) for s in cp.sections()})


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    return parse_config(text)


__all__ = [
    "CheckSection",
    "ConfigError",
    "DependenceSection",
    "MarginalSection",
    "OUTPUT_DIR_ENV",
    "OutputSection",
    "RunConfig",
    "ScalingSection",
    "SimulateSection",
    "config_from_dict",
    "load_config",
    "parse_config",
]
