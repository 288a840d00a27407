"""HTTP service exposing the pipeline runner.

The service is stateless: a request carries a full experiment config, the
response carries the full report including rendered CSV tables, and the
client decides what to write to disk.  Config validation failures map to
422; numerical rejections are part of the domain and come back as a failed
report with status 200.
"""

from typing import Dict, List, Optional, Union

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .configs import (CONFIG_MODELS, BundleConfig, ConfigError,
                      ContractConfig, MetricPipelineConfig, SelftestConfig,
                      TrivializeConfig, ReconstructConfig, parse_config)
from .pipelines import REPORT_SCHEMA, run_pipeline


class StageModel(BaseModel):
    name: str
    residual: float
    tol: float
    passed: bool


class RunReportModel(BaseModel):
    schema_version: str = Field(REPORT_SCHEMA, alias="schema")
    version: str
    pipeline: str
    ok: bool
    stages: List[StageModel]
    invariants: Dict[str, Optional[float]]
    tables: Dict[str, str]
    failure_stage: str
    failure_message: str
    wall_clock: float
    config: dict

    model_config = {"populate_by_name": True}


class HealthModel(BaseModel):
    status: str
    version: str


class PipelineListModel(BaseModel):
    pipelines: List[str]


PipelineRequest = Union[ReconstructConfig, TrivializeConfig, ContractConfig,
                        BundleConfig, MetricPipelineConfig, SelftestConfig]


def create_app():
    app = FastAPI(title="cocyclelab", version=__version__)

    @app.get("/health", response_model=HealthModel)
    def health():
        return HealthModel(status="ok", version=__version__)

    @app.get("/pipelines", response_model=PipelineListModel)
    def pipelines():
        return PipelineListModel(pipelines=sorted(CONFIG_MODELS))

    @app.post("/run", response_model=RunReportModel,
              response_model_by_alias=True)
    def run(cfg: dict):
        try:
            parsed = parse_config(cfg)
        except ConfigError as err:
            raise HTTPException(status_code=422, detail=str(err))
        rep = run_pipeline(parsed)
        return RunReportModel.model_validate(rep.to_dict())

    return app


app = create_app()
