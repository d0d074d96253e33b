"""Request and response bodies shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import RunConfig
from ..simulator import NORMALIZERS

Cell = Union[int, float, str]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Table(_Model):
    name: str
    header: list[str]
    # non-finite floats travel as the strings "inf", "-inf" and "nan"
    rows: list[list[Cell]]


class Report(_Model):
    command: str
    version: str
    config_ini: Optional[str] = None
    tables: list[Table]
    summary: list[str] = Field(default_factory=list)
    ok: bool = True


class ErrorBody(_Model):
    error: str
    path: str
    kind: Literal["validation", "numeric"]


class SequencesRequest(_Model):
    p: float = Field(1.5, gt=1.0, lt=2.0)
    r: float = 2.0
    s: Optional[float] = Field(None, gt=0.0, lt=1.0)
    n: int = Field(16, ge=1, le=10**6)
    k: Optional[int] = Field(None, ge=1, le=10**6)
    audit_horizon: int = Field(0, ge=0, le=10**7)

    @model_validator(mode="after")
    def _order(self):
        if not self.r > self.p:
            raise ValueError("r must exceed p")
        return self


class ConfigRequest(_Model):
    config: RunConfig
    threads: int = Field(1, ge=1, le=256)


class DecomposeRequest(ConfigRequest):
    k_max: int = Field(10**6, ge=1, le=2**52)
    points: int = Field(64, ge=1, le=10**5)


class CheckRequest(ConfigRequest):
    conditions: Optional[list[str]] = None


class LemmaRequest(ConfigRequest):
    which: Optional[list[str]] = None


class Lemma3Request(_Model):
    a: list[float] = Field(default_factory=lambda: [1.0, 2.0], min_length=1)
    b: list[float] = Field(default_factory=lambda: [0.5, 1.0], min_length=1)
    r: list[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0], min_length=1)
    x: list[float] = Field(default_factory=lambda: [float(v) for v in range(11)], min_length=1)
    rel_tol: float = Field(1e-11, gt=0.0, lt=1.0)
    limit: int = Field(200, ge=1, le=10**5)


class JointTable(_Model):
    points: list[list[float]]
    probs: list[float]


class VerifyIneqRequest(_Model):
    model: Literal["antithetic", "corpus", "joint"] = "antithetic"
    n_atoms: int = Field(100, ge=2, le=10**5)
    joint: Optional[JointTable] = None
    corpus_size: int = Field(500, ge=1, le=10**5)
    transform_pairs: int = Field(100, ge=0, le=10**4)
    seed: int = Field(0, ge=0)
    s_lo: float = Field(0.0, ge=0.0)
    t_len: float = Field(1.0, gt=0.0)
    blocks: Optional[list[int]] = None
    eta: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _joint(self):
        if self.model == "joint" and self.joint is None:
            raise ValueError("model 'joint' needs a joint table")
        return self


class SimulateRequest(ConfigRequest):
    normalizers: list[Literal[NORMALIZERS]] = Field(default_factory=lambda: list(NORMALIZERS))
    event_points: int = Field(64, ge=1, le=10**4)


__all__ = [
    "CheckRequest",
    "ConfigRequest",
    "DecomposeRequest",
    "ErrorBody",
    "JointTable",
    "Lemma3Request",
    "LemmaRequest",
    "Report",
    "SequencesRequest",
    "SimulateRequest",
    "Table",
    "VerifyIneqRequest",
]
