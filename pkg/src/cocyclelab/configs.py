"""Experiment configuration models.

Each pipeline has one pydantic model; anything a model rejects is a config
error (exit status 2 at the command line), anything the numerics reject
afterwards is a run failure (exit status 1).  Grid divisibility is checked
here because a step that does not divide the window is a malformed request,
not a numerical event.
"""

from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

SCHEMA_VERSION = "cocyclelab-config-v1"


class ConfigError(ValueError):
    """Raised for malformed experiment configurations."""


def _divides(step, width):
    k = width / step
    return abs(k - round(k)) <= 1e-12


class FamilySpec(BaseModel):
    """Seeded automorphism family over a discretized parameter space."""

    dim: int = Field(4, ge=1, le=16)
    topology: Literal["interval", "circle"] = "interval"
    npoints: int = Field(21, ge=2, le=512)
    seed: int = 7
    scale: float = Field(0.35, gt=0, le=4.0)
    kind: Literal["inner", "rescaled"] = "inner"
    a: float = 0.0
    b: float = 1.0

    @model_validator(mode="after")
    def _check(self):
        if self.topology == "interval" and self.b <= self.a:
            raise ValueError("interval bounds must satisfy a < b")
        return self


class ReconstructConfig(BaseModel):
    """Reconstruction, trivialization and group extension, end to end."""

    pipeline: Literal["reconstruct"] = "reconstruct"
    family: FamilySpec = FamilySpec()
    half_width: float = Field(1.0, gt=0)
    step: float = Field(1.0 / 256, gt=0)
    target_half_width: float = Field(2.0, gt=0)
    target_step: float = Field(0.125, gt=0)
    impl_tol: float = Field(1e-6, gt=0)
    group_tol: float = Field(1e-6, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if not _divides(self.step, self.half_width):
            raise ValueError("step does not divide half_width")
        if not _divides(self.target_step, self.target_half_width):
            raise ValueError("target_step does not divide target_half_width")
        return self


class TrivializeConfig(BaseModel):
    """Trivialization of the bilinear fixture sigma(t, s) = c t s."""

    pipeline: Literal["trivialize"] = "trivialize"
    c: float = 1.0
    step: float = Field(1.0 / 128, gt=0)
    window_steps: int = Field(64, ge=16)
    tol: float = Field(1e-3, gt=0)

    @field_validator("window_steps")
    @classmethod
    def _mult4(cls, v):
        if v % 4 != 0:
            raise ValueError("window_steps must be a multiple of 4")
        return v


class ContractConfig(BaseModel):
    """Shift-compression homotopy on a truncated shift model."""

    pipeline: Literal["contract"] = "contract"
    n: int = Field(2, ge=1, le=8)
    cells: int = Field(64, ge=4, le=256)
    step: float = Field(0.125, gt=0)
    seed: int = 3
    time_steps: int = Field(16, ge=2)
    lambda_steps: List[int] = [8, 32]
    tol: float = Field(1e-8, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if any(j < 0 for j in self.lambda_steps):
            raise ValueError("lambda_steps must be nonnegative")
        # the standard fixture keeps its cell coupling in the lower half of
        # the model, so exactness is only guaranteed up to half the cells
        # (or at the trivial far endpoint)
        if any(self.cells // 2 < j < self.cells for j in self.lambda_steps):
            raise ValueError("lambda_steps must be <= cells/2 or >= cells")
        return self


class BundleConfig(BaseModel):
    """Clutching invariants and pullbacks on the two-disc sphere cover."""

    pipeline: Literal["bundle"] = "bundle"
    nsamples: int = Field(64, ge=16)
    winding: int = Field(1, ge=-8, le=8)
    group: Literal["U1", "Um"] = "U1"
    m: int = Field(2, ge=1, le=8)
    degree: int = Field(2, ge=1, le=4)

    @model_validator(mode="after")
    def _check(self):
        # the phase-unwrapping invariant needs adjacent det-phase steps
        # bounded away from pi/2
        if abs(self.winding) * self.degree * 2 * 3.15 / self.nsamples >= 1.5:
            raise ValueError("winding*degree too large for the sample count")
        return self


class MetricPipelineConfig(BaseModel):
    """Explicit invariant metric between two cocycle paths."""

    pipeline: Literal["metric"] = "metric"
    dim: int = Field(4, ge=1, le=16)
    k_max: int = Field(8, ge=4, le=24)
    step: float = Field(0.25, gt=0)
    phase_slope: float = 1.0

    @model_validator(mode="after")
    def _check(self):
        if not _divides(self.step, float(self.k_max)):
            raise ValueError("step does not divide k_max")
        return self


class SelftestConfig(BaseModel):
    """Reduced-size run of every pipeline, gating on all pass flags."""

    pipeline: Literal["selftest"] = "selftest"
    seed: int = 7


PipelineConfig = Union[ReconstructConfig, TrivializeConfig, ContractConfig,
                       BundleConfig, MetricPipelineConfig, SelftestConfig]

CONFIG_MODELS = {
    "reconstruct": ReconstructConfig,
    "trivialize": TrivializeConfig,
    "contract": ContractConfig,
    "bundle": BundleConfig,
    "metric": MetricPipelineConfig,
    "selftest": SelftestConfig,
}


def parse_config(data):
    """Validate a plain mapping into the pipeline's config model."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    name = data.get("pipeline")
    if name not in CONFIG_MODELS:
        raise ConfigError(f"unknown pipeline {name!r}; choose one of "
                          f"{sorted(CONFIG_MODELS)}")
    try:
        return CONFIG_MODELS[name].model_validate(data)
    except Exception as err:  # pydantic.ValidationError and friends
        raise ConfigError(str(err)) from err
