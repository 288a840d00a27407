"""Gauge groups: the Heisenberg semidirect product, scalar gauge cocycles,
the gauge action on cocycle paths, and the explicit invariant metric.

Group elements are triples (c, xi, U) with central real part, vector part
and unitary part; the dimension-zero degenerate case is the additive reals
and is a genuine group here, not an error path.  The inner product is
conjugate-linear in the first argument throughout (either convention gives
an isomorphic group; this one is fixed once and flips the sign of the
central term relative to the other choice).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cocycles import CocyclePath
from .linalg import (RejectionError, dagger, frob, require_unitary,
                     seeded_random_unitary, seeded_unit_vector)


@dataclass(frozen=True)
class GaugeElement:
    c: float
    xi: np.ndarray            # shape (m,); empty for m = 0
    u: Optional[np.ndarray]   # (m, m) unitary; None iff m = 0

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=complex)
        object.__setattr__(self, "xi", xi)
        if xi.size == 0:
            if self.u is not None:
                raise RejectionError("dimension-0 element carries only c")
        else:
            if self.u is None or self.u.shape != (xi.size, xi.size):
                raise RejectionError("unitary part does not match vector part")
            require_unitary(self.u, what="gauge unitary part")

    @property
    def dim(self):
        return self.xi.size


def identity_element(m):
    if m == 0:
        return GaugeElement(0.0, np.zeros(0), None)
    return GaugeElement(0.0, np.zeros(m, dtype=complex), np.eye(m, dtype=complex))


def heis_mul(g1, g2):
    """(c1, xi1, U1) (c2, xi2, U2) =
    (c1 + c2 + Im<xi1, U1 xi2>, xi1 + U1 xi2, U1 U2)."""
    if g1.dim != g2.dim:
        raise RejectionError("gauge elements of different dimension")
    if g1.dim == 0:
        return GaugeElement(g1.c + g2.c, np.zeros(0), None)
    rotated = g1.u @ g2.xi
    c = g1.c + g2.c + float(np.imag(np.vdot(g1.xi, rotated)))
    return GaugeElement(c, g1.xi + rotated, g1.u @ g2.u)


def heis_inv(g):
    """(c, xi, U)^{-1} = (-c, -U^{-1} xi, U^{-1})."""
    if g.dim == 0:
        return GaugeElement(-g.c, np.zeros(0), None)
    uinv = dagger(g.u)
    return GaugeElement(-g.c, -(uinv @ g.xi), uinv)


def element_distance(g1, g2):
    if g1.dim != g2.dim:
        raise RejectionError("gauge elements of different dimension")
    d = abs(g1.c - g2.c)
    if g1.dim > 0:
        d += float(np.linalg.norm(g1.xi - g2.xi)) + frob(g1.u - g2.u)
    return d


def seeded_element(m, seed):
    if m == 0:
        rng = np.random.default_rng(seed)
        return GaugeElement(float(rng.standard_normal()), np.zeros(0), None)
    rng = np.random.default_rng(seed)
    c = float(rng.standard_normal())
    xi = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return GaugeElement(c, xi, seeded_random_unitary(m, seed + 1))


def scalar_gauge_cocycle(c, ts, n, t_safe=None):
    """Q_t = e^{ict} I: a gauge cocycle for every inner semigroup, since
    scalars commute with everything and are fixed by the adjoint action."""
    ts = np.asarray(ts, dtype=float)
    phases = np.exp(1j * c * ts)
    tabs = phases[:, None, None] * np.eye(n, dtype=complex)[None]
    return CocyclePath(ts, tabs, float(ts[-1]) if t_safe is None else t_safe)


def gauge_action(path, q_path, beta, probes, locality_tol=1e-9):
    """(U . Q)_t = U_t Q_t after checking Q commutes with the semigroup
    range on the probes; the conjugated semigroup is unchanged."""
    if path.ts.shape != q_path.ts.shape or np.any(path.ts != q_path.ts):
        raise RejectionError("paths live on different grids")
    worst = 0.0
    for i, t in enumerate(q_path.ts):
        for a in probes:
            ba = beta.apply(t, a)
            worst = max(worst, frob(q_path.tables[i] @ ba - ba @ q_path.tables[i]))
    if worst > locality_tol:
        raise RejectionError(
            f"gauge locality violated (commutator {worst:.3e})",
            defect=worst, stage="gauge_action")
    tabs = np.einsum("tab,tbc->tac", path.tables, q_path.tables)
    return CocyclePath(path.ts.copy(), tabs, min(path.t_safe, q_path.t_safe))


@dataclass(frozen=True)
class MetricConfig:
    """Probe vectors and truncation for the explicit invariant metric."""

    k_max: int = 16
    seed: int = 11

    def __post_init__(self):
        if self.k_max < 4:
            raise RejectionError("metric truncation must be at least 4")

    def probe(self, dim, k):
        return seeded_unit_vector(dim, self.seed + k)

    @property
    def tail_bound(self):
        # remaining terms are each at most 2^{-k} * 2
        return 2.0 ** (-self.k_max + 1)


def invariant_metric(u_path, v_path, cfg=MetricConfig()):
    """d(U, V) = sum_k 2^{-k} sup_{t in [0,k]} ||U_t psi_k - V_t psi_k||,
    truncated at k_max; left-invariant exactly, since each term is."""
    if u_path.ts.shape != v_path.ts.shape or np.any(u_path.ts != v_path.ts):
        raise RejectionError("paths live on different grids")
    if u_path.ts[-1] + 1e-12 < cfg.k_max:
        raise RejectionError(
            f"grid must cover [0, {cfg.k_max}] for the truncated metric")
    total = 0.0
    dim = u_path.dim
    diff = u_path.tables - v_path.tables
    for k in range(1, cfg.k_max + 1):
        psi = cfg.probe(dim, k)
        upto = np.searchsorted(u_path.ts, k + 1e-12)
        vecs = diff[:upto] @ psi
        total += 2.0 ** (-k) * float(np.linalg.norm(vecs, axis=1).max())
    return total
