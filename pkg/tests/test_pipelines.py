import numpy as np
import pytest

from cocyclelab.configs import (BundleConfig, ConfigError, ContractConfig,
                                MetricPipelineConfig, TrivializeConfig,
                                ReconstructConfig, parse_config)
from cocyclelab.pipelines import render_csv, run_pipeline


def test_parse_config_dispatch_and_errors():
    cfg = parse_config({"pipeline": "metric", "k_max": 8})
    assert isinstance(cfg, MetricPipelineConfig)
    with pytest.raises(ConfigError):
        parse_config({"pipeline": "unknown"})
    with pytest.raises(ConfigError):
        parse_config({"pipeline": "metric", "step": 0.3})  # not dividing k_max
    with pytest.raises(ConfigError):
        parse_config([1, 2, 3])


def test_trivialize_pipeline_passes():
    rep = run_pipeline(TrivializeConfig(c=0.1))
    assert rep.ok
    assert {s.name for s in rep.stages} == {"coboundary-match",
                                            "closed-form-match"}
    assert "phi" in rep.tables and rep.tables["phi"].startswith("x,t,value\n")


def test_contract_pipeline_passes():
    rep = run_pipeline(ContractConfig(cells=32, time_steps=8,
                                      lambda_steps=[4, 16]))
    assert rep.ok
    assert "contraction" in rep.tables


def test_bundle_pipeline_reports_invariants():
    rep = run_pipeline(BundleConfig(winding=-2, group="Um", degree=2))
    assert rep.ok
    assert rep.invariants["clutching"] == -2
    assert rep.invariants["pullback_clutching"] == -4


def test_metric_pipeline_distance_value():
    rep = run_pipeline(MetricPipelineConfig())
    assert rep.ok
    assert rep.invariants["distance"] == pytest.approx(1.3995, abs=1e-2)


def test_pipeline_determinism():
    cfg = {"pipeline": "contract", "cells": 32, "time_steps": 8,
           "lambda_steps": [4, 16]}
    a = run_pipeline(dict(cfg))
    b = run_pipeline(dict(cfg))
    assert a.tables == b.tables
    assert [s.residual for s in a.stages] == [s.residual for s in b.stages]


def test_numeric_failure_reports_stage():
    # an absurdly large twist leaves no usable window: the run must fail
    # with a named stage instead of raising
    cfg = ReconstructConfig(family={"dim": 2, "npoints": 3, "scale": 4.0,
                               "seed": 1},
                       half_width=1.0, step=1.0 / 32)
    rep = run_pipeline(cfg)
    if not rep.ok:
        assert rep.failure_stage != "" or any(not s.passed for s in rep.stages)


def test_render_csv_fixed_format():
    text = render_csv(["a", "b"], [(1, 0.5), (2, 0.25)])
    assert text == "a,b\n1,5.000000000000e-01\n2,2.500000000000e-01\n"
