"""Dense complex linear algebra substrate.

Everything downstream works with plain complex ndarrays.  Unitarity and
hermiticity are contracts enforced at operation boundaries rather than by
wrapper classes; the tolerances here are the single source of truth.
"""

import numpy as np

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12


class RejectionError(ValueError):
    """An input failed a numerical contract (with measured defect)."""

    def __init__(self, message, defect=None, stage=None):
        super().__init__(message)
        self.defect = defect
        self.stage = stage


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def frob(a):
    """Frobenius norm, the default defect measure."""
    return float(np.linalg.norm(a))


def op_norm(a):
    """Operator (spectral) norm, for reports."""
    return float(np.linalg.norm(a, ord=2))


def unitarity_defect(u):
    n = u.shape[-1]
    return frob(dagger(u) @ u - np.eye(n))


def hermiticity_defect(h):
    return frob(h - dagger(h))


def require_unitary(u, tol=UNITARY_TOL, what="matrix"):
    d = unitarity_defect(u)
    if d > tol:
        raise RejectionError(f"{what} is not unitary: defect {d:.3e} > {tol:.1e}",
                             defect=d)
    return u


def require_hermitian(h, tol=HERMITIAN_TOL, what="matrix"):
    d = hermiticity_defect(h)
    if d > tol:
        raise RejectionError(f"{what} is not Hermitian: defect {d:.3e} > {tol:.1e}",
                             defect=d)
    return h


def herm_expi(h, t):
    """e^{itH} for Hermitian H, via full eigendecomposition.

    The eigenbasis route keeps the one-parameter group law exact at the
    level of eigenphases, which the multiplier extraction downstream
    relies on.
    """
    require_hermitian(np.asarray(h, dtype=complex))
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(1j * t * evals)) @ dagger(evecs)


def herm_expi_batch(h, ts):
    """e^{itH} for each t in ts; returns an array of shape (len(ts), n, n)."""
    require_hermitian(np.asarray(h, dtype=complex))
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(1j * np.multiply.outer(np.asarray(ts, dtype=float), evals))
    return np.einsum("ak,tk,bk->tab", evecs, phases, np.conj(evecs))


def seeded_random_hermitian(dim, seed):
    """Deterministic Hermitian matrix with entries of modulus at most 1.

    Built as (M + M†)/2 with real and imaginary parts of M drawn uniformly
    from (-1/sqrt(2), 1/sqrt(2)), so the symmetrization stays inside the
    unit disc entrywise.
    """
    if dim < 1:
        raise RejectionError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    r = 1.0 / np.sqrt(2.0)
    m = rng.uniform(-r, r, (dim, dim)) + 1j * rng.uniform(-r, r, (dim, dim))
    return (m + dagger(m)) / 2


def seeded_random_unitary(dim, seed):
    """Deterministic Haar-ish unitary via QR with phase-fixed diagonal."""
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(m)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def seeded_unit_vector(dim, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
