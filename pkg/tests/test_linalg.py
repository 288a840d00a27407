import numpy as np
import pytest

from cocyclelab.linalg import (RejectionError, dagger, frob, herm_expi,
                               herm_expi_batch, hermiticity_defect, op_norm,
                               require_hermitian, require_unitary,
                               seeded_random_hermitian, seeded_random_unitary,
                               seeded_unit_vector, unitarity_defect)


def test_dagger_and_norms():
    a = np.array([[1.0, 2j], [0.0, -1.0]])
    assert np.allclose(dagger(a), a.conj().T)
    assert frob(a) == pytest.approx(np.linalg.norm(a))
    assert op_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0)


def test_unitarity_and_hermiticity_defects():
    u = seeded_random_unitary(5, 1)
    assert unitarity_defect(u) < 1e-12
    require_unitary(u)
    h = seeded_random_hermitian(5, 2)
    assert hermiticity_defect(h) == 0.0
    require_hermitian(h)
    with pytest.raises(RejectionError):
        require_unitary(u + 0.1)
    with pytest.raises(RejectionError):
        require_hermitian(h + 1j * np.eye(5))


def test_herm_expi_is_group():
    h = seeded_random_hermitian(4, 3)
    u1 = herm_expi(h, 0.7)
    u2 = herm_expi(h, 0.3)
    u3 = herm_expi(h, 1.0)
    assert frob(u1 @ u2 - u3) < 1e-13
    assert unitarity_defect(u1) < 1e-13


def test_herm_expi_batch_matches_single():
    h = seeded_random_hermitian(3, 4)
    ts = np.array([-1.0, 0.0, 0.25, 2.0])
    batch = herm_expi_batch(h, ts)
    for t, u in zip(ts, batch):
        assert frob(u - herm_expi(h, t)) < 1e-13


def test_seeded_constructions_are_deterministic():
    assert np.array_equal(seeded_random_hermitian(4, 7),
                          seeded_random_hermitian(4, 7))
    assert np.array_equal(seeded_random_unitary(4, 7),
                          seeded_random_unitary(4, 7))
    v = seeded_unit_vector(6, 9)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert not np.array_equal(seeded_random_hermitian(4, 7),
                              seeded_random_hermitian(4, 8))


def test_hermitian_entries_bounded():
    h = seeded_random_hermitian(8, 11)
    assert np.abs(h).max() <= 1.0
