import numpy as np
import pytest

from cocyclelab.families import (ChannelFamily, ParamGrid, TimeGrid,
                                 continuity_report, family_from_config,
                                 make_inner_family, make_rescaled_family,
                                 make_zero_family)
from cocyclelab.linalg import (RejectionError, frob, herm_expi,
                               seeded_random_hermitian)


def test_param_grid_topologies():
    g = ParamGrid.interval(0.0, 1.0, 5)
    assert g.size == 5
    assert g.adjacent_pairs() == [(0, 1), (1, 2), (2, 3), (3, 4)]
    c = ParamGrid.circle(4)
    assert c.adjacent_pairs()[-1] == (3, 0)
    assert ParamGrid.single().size == 1
    with pytest.raises(RejectionError):
        ParamGrid("torus", np.array([0.0, 1.0]))
    with pytest.raises(RejectionError):
        ParamGrid("interval", np.array([1.0, 0.0]))


def test_time_grid_divisibility():
    tg = TimeGrid(1.0, 0.25)
    assert tg.steps == 4
    assert np.allclose(tg.nodes, 0.25 * np.arange(-4, 5))
    with pytest.raises(RejectionError):
        TimeGrid(1.0, 0.3)


def test_inner_family_matches_conjugation():
    grid = ParamGrid.interval(0.0, 1.0, 3)
    h0 = seeded_random_hermitian(3, 0)
    h1 = seeded_random_hermitian(3, 1)
    gens = [h0 + x * h1 for x in grid.points]
    fam = make_inner_family(gens, grid)
    a = seeded_random_hermitian(3, 5)
    for ix, h in enumerate(gens):
        u = herm_expi(h, 0.4)
        assert frob(fam.apply(ix, 0.4, a) - u @ a @ u.conj().T) < 1e-12


def test_apply_batch_matches_apply():
    fam = family_from_config({"dim": 2, "npoints": 3, "seed": 2})
    a = seeded_random_hermitian(2, 9)
    ts = np.array([-0.5, 0.0, 0.7])
    batch = fam.apply_batch(1, ts, a)
    for t, out in zip(ts, batch):
        assert frob(out - fam.apply(1, t, a)) < 1e-13


def test_zero_family_is_identity_channel():
    fam = make_zero_family(3, ParamGrid.interval(0.0, 1.0, 3))
    a = seeded_random_hermitian(3, 4)
    assert frob(fam.apply(1, 2.5, a) - a) < 1e-14


def test_rescaled_family_freezes_at_zero():
    base = make_inner_family([seeded_random_hermitian(2, 3)], ParamGrid.single())
    fam = make_rescaled_family(base, ParamGrid.interval(0.0, 1.0, 5))
    a = seeded_random_hermitian(2, 6)
    assert frob(fam.apply(0, 3.0, a) - a) < 1e-14
    # at x the channel at time t equals the base at time x*t
    assert frob(fam.apply(3, 2.0, a)
                - base.apply(0, fam.grid.points[3] * 2.0, a)) < 1e-13


def test_rescaled_family_needs_single_point_base():
    grid = ParamGrid.interval(0.0, 1.0, 3)
    base = make_zero_family(2, grid)
    with pytest.raises(RejectionError):
        make_rescaled_family(base, grid)


def test_lipschitz_budget_rejects_jumps():
    grid = ParamGrid.interval(0.0, 1.0, 3)
    gens = [np.zeros((2, 2)), 50.0 * np.eye(2), np.zeros((2, 2))]
    with pytest.raises(RejectionError):
        make_inner_family(gens, grid, lipschitz_budget=1.0)


def test_continuity_report_scales_with_generator():
    tg = TimeGrid(0.5, 0.25)
    probes = [seeded_random_hermitian(2, 1)]
    small = family_from_config({"dim": 2, "npoints": 5, "scale": 0.01})
    large = family_from_config({"dim": 2, "npoints": 5, "scale": 1.0})
    assert continuity_report(small, probes, tg)["modulus"] \
        < continuity_report(large, probes, tg)["modulus"]


def test_family_from_config_variants():
    circ = family_from_config({"dim": 2, "topology": "circle", "npoints": 8})
    assert circ.grid.topology == "circle"
    res = family_from_config({"dim": 2, "kind": "rescaled", "npoints": 4})
    assert res.grid.size == 4
    with pytest.raises(RejectionError):
        family_from_config({"kind": "mystery"})
