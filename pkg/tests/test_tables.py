import numpy as np
import pytest

from cocyclelab.linalg import RejectionError
from cocyclelab.tables import (AdditiveMultiplierTable, MultiplierTable,
                               PhaseTable, coboundary, table_residual)


def _phase(vals, step=0.125):
    vals = np.atleast_2d(vals)
    k = (vals.shape[1] - 1) // 2
    return PhaseTable("phi", step, k, vals)


def test_phase_table_center_must_vanish():
    nodes = 0.125 * np.arange(-4, 5)
    _phase(nodes ** 2)
    with pytest.raises(RejectionError):
        _phase(nodes ** 2 + 1.0)


def test_coboundary_of_quadratic_is_bilinear():
    step = 0.25
    nodes = step * np.arange(-8, 9)
    phi = _phase(nodes ** 2, step)
    cob = coboundary(phi, 4, 4)
    for it, t in enumerate(cob.t_nodes):
        for js, s in enumerate(cob.s_nodes):
            assert cob.values[0, it, js] == pytest.approx(2 * t * s, abs=1e-12)


def test_coboundary_marks_out_of_window_entries():
    step = 0.25
    nodes = step * np.arange(-4, 5)
    phi = _phase(nodes ** 2, step)
    cob = coboundary(phi, 4, 4)
    assert np.isnan(cob.values[0, -1, -1])      # t + s = 2 > window
    assert np.isfinite(cob.values[0, -1, 0])    # t + s inside


def test_additive_identities_hold_for_coboundaries():
    step = 0.125
    nodes = step * np.arange(-16, 17)
    phi = _phase(np.sin(nodes) - nodes * np.cos(0.0), step)
    cob = coboundary(phi, 8, 8)
    checks = cob.check_identities(tol_norm=1e-12, tol_assoc=1e-12)
    assert checks["normalization"] < 1e-12
    assert checks["associativity"] < 1e-12


def test_associativity_defect_detects_violations():
    step = 0.125
    k = 8
    nodes = step * np.arange(-k, k + 1)
    vals = np.multiply.outer(nodes, nodes)[None] ** 2  # t^2 s^2 is not a cocycle
    tab = AdditiveMultiplierTable("sigma", step, k, k, vals)
    assert tab.associativity_defect() > 1e-4
    with pytest.raises(RejectionError):
        tab.check_identities(tol_norm=1.0, tol_assoc=1e-10)


def test_multiplier_table_defects():
    step = 0.25
    k = 2
    nodes = step * np.arange(-k, k + 1)
    vals = np.exp(-2j * np.multiply.outer(nodes, nodes))[None]
    tab = MultiplierTable(step, k, k, vals)
    assert tab.unimodularity_defect() < 1e-14
    assert tab.normalization_defect() < 1e-14
    assert tab.value(0, 0.25, -0.5) == pytest.approx(np.exp(0.25j))


def test_phase_interpolation_reproduces_cubics():
    step = 0.25
    nodes = step * np.arange(-6, 7)
    phi = _phase(0.3 * nodes ** 3 - 0.2 * nodes ** 2 + nodes, step)
    for t in (0.1, -0.37, 1.2):
        want = 0.3 * t ** 3 - 0.2 * t ** 2 + t
        assert phi.interpolate(0, t) == pytest.approx(want, abs=1e-10)
    with pytest.raises(RejectionError):
        phi.interpolate(0, 5.0)


def test_restricted_window():
    step = 0.25
    nodes = step * np.arange(-6, 7)
    phi = _phase(nodes ** 2, step)
    small = phi.restricted(2)
    assert small.values.shape == (1, 5)
    assert small.value(0, 0.5) == pytest.approx(0.25)
    with pytest.raises(RejectionError):
        phi.restricted(10)


def test_table_residual_ignores_nan_only_entries():
    step = 0.25
    nodes = step * np.arange(-4, 5)
    phi = _phase(nodes ** 2, step)
    a = coboundary(phi, 4, 4)
    b = coboundary(phi, 4, 4)
    b.values[np.isfinite(b.values)] += 1e-9
    assert table_residual(a, b) == pytest.approx(1e-9, rel=1e-3)
