"""Unitary cocycles over a truncated tensor-shift model.

A proper isometric shift has no finite-dimensional model, so the half-line
shift is truncated with zero-fill; every check is confined to a declared
safe horizon where the truncation introduces no error beyond tolerance,
and every report states the horizon it used.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .families import ChannelFamily, ParamGrid
from .linalg import RejectionError, dagger, frob, herm_expi_batch, require_hermitian


@dataclass(frozen=True)
class ShiftModel:
    """Matrix factor of size n tensored with a truncated half-line of M cells.

    The shift by j cells maps basis vector e_k to e_{k+j} when k + j < M and
    to zero otherwise; its defect from a proper isometry is the truncation
    artifact tracked by the safe-horizon bookkeeping.
    """

    n: int
    cells: int
    step: float

    def __post_init__(self):
        if self.n < 1 or self.cells < 1 or self.step <= 0:
            raise RejectionError("invalid shift model parameters")

    @property
    def dim(self):
        return self.n * self.cells

    def steps_of(self, lam):
        j = lam / self.step
        if abs(j - round(j)) > 1e-9 or j < 0:
            raise RejectionError(f"shift amount {lam} is not grid-aligned")
        return int(round(j))

    def shift(self, lam):
        """S_lambda = 1_n tensor (cell shift by lam/step)."""
        j = self.steps_of(lam)
        v = np.zeros((self.cells, self.cells))
        if j < self.cells:
            idx = np.arange(self.cells - j)
            v[idx + j, idx] = 1.0
        return np.kron(np.eye(self.n), v).astype(complex)

    def corner_projection(self, lam):
        """P_lambda = 1 - S_lambda S_lambda^*."""
        s = self.shift(lam)
        return np.eye(self.dim, dtype=complex) - s @ dagger(s)


@dataclass
class Semigroup:
    """beta_t = Ad(e^{itH0}) tensor id on the shift model.

    The conjugator acts on the matrix factor only, so the shifts and corner
    projections are fixed exactly.
    """

    model: ShiftModel
    h0: np.ndarray

    def __post_init__(self):
        require_hermitian(np.asarray(self.h0, dtype=complex))
        if self.h0.shape != (self.model.n, self.model.n):
            raise RejectionError("generator does not match the matrix factor")

    def conjugator(self, t):
        evals, evecs = np.linalg.eigh(self.h0)
        u = (evecs * np.exp(1j * t * evals)) @ dagger(evecs)
        return np.kron(u, np.eye(self.model.cells)).astype(complex)

    def apply(self, t, x):
        d = self.conjugator(t)
        return d @ x @ dagger(d)

    def fixes_shift_defect(self, lam, t):
        s = self.model.shift(lam)
        return frob(self.apply(t, s) - s)


@dataclass
class CocyclePath:
    """Table of unitaries U_t on t >= 0 grid nodes, with a safe horizon."""

    ts: np.ndarray            # ascending, ts[0] == 0
    tables: np.ndarray        # (nt, dim, dim)
    t_safe: float

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        if ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
            raise RejectionError("cocycle path needs ascending times from 0")
        d0 = frob(self.tables[0] - np.eye(self.tables.shape[-1]))
        if d0 > 1e-10:
            raise RejectionError(f"cocycle path must start at identity ({d0:.3e})")
        object.__setattr__(self, "ts", ts)

    @property
    def dim(self):
        return self.tables.shape[-1]

    @property
    def step(self):
        return float(self.ts[1] - self.ts[0])

    def index_of(self, t):
        k = t / self.step
        kr = int(round(k))
        if abs(k - kr) > 1e-9 or kr < 0 or kr >= self.ts.size:
            raise RejectionError(f"time {t} is not a node of the path")
        return kr

    def at(self, t):
        return self.tables[self.index_of(t)]


@dataclass
class CocycleReport:
    max_residual: float
    pairs_checked: int
    t_safe: float
    tol: float

    @property
    def passed(self):
        return self.max_residual <= self.tol


def is_cocycle(path, beta, tol=1e-8):
    """Residual of U_{t+s} = U_t beta_t(U_s) over grid pairs in the horizon."""
    nt = path.ts.size
    worst = 0.0
    checked = 0
    for i in range(nt):
        d = beta.conjugator(path.ts[i])
        for j in range(nt):
            if i + j >= nt or path.ts[i] + path.ts[j] > path.t_safe + 1e-12:
                continue
            rhs = path.tables[i] @ (d @ path.tables[j] @ dagger(d))
            worst = max(worst, frob(path.tables[i + j] - rhs))
            checked += 1
    return CocycleReport(worst, checked, path.t_safe, tol)


def conjugate_semigroup(path, beta, tol=1e-7):
    """The semigroup alpha_t = Ad(U_t) o beta_t as a single-point family.

    The evaluator is defined on the path's grid nodes within the safe
    horizon; conjugating by a gauge cocycle leaves it unchanged.
    """
    rep = is_cocycle(path, beta, tol)
    if not rep.passed:
        raise RejectionError(
            f"path is not a cocycle (residual {rep.max_residual:.3e})",
            defect=rep.max_residual, stage="conjugate_semigroup")

    def apply_one(ix, t, a):
        u = path.at(t)
        return u @ beta.apply(t, a) @ dagger(u)

    return ChannelFamily(path.dim, ParamGrid.single(), "conjugated", apply_one)


def cocycle_from_group(group_tables, beta, ts, t_safe):
    """Standard nontrivial fixture: U_t = G_t D_t^* for a unitary group G_t
    and the implementing group D_t of the semigroup."""
    tabs = np.stack([group_tables[i] @ dagger(beta.conjugator(t))
                     for i, t in enumerate(ts)])
    return CocyclePath(np.asarray(ts, dtype=float), tabs, t_safe)


def contract(lam, path, model, beta=None, tol=1e-8):
    """Shift-compression homotopy stage F(lam, U)_t = P_lam + S_lam U_t S_lam^*.

    Exact at both endpoints of the truncated model: lam = 0 returns the
    path unchanged, lam >= cells*step returns the constant identity path.
    """
    j = model.steps_of(lam)
    if j == 0:
        return CocyclePath(path.ts.copy(), path.tables.copy(), path.t_safe)
    if j >= model.cells:
        eye = np.broadcast_to(np.eye(model.dim, dtype=complex),
                              path.tables.shape).copy()
        return CocyclePath(path.ts.copy(), eye, path.t_safe)
    s = model.shift(lam)
    p = model.corner_projection(lam)
    tabs = p[None] + np.einsum("ab,tbc,dc->tad", s, path.tables, np.conj(s))
    return CocyclePath(path.ts.copy(), tabs, path.t_safe)


@dataclass
class DeltaReport:
    path: CocyclePath
    max_commutator: float
    gauge_member: bool
    tol: float


def delta(u_path, v_path, beta, probes, tol=1e-6):
    """Transition Q_t = U_t^* V_t between two cocycles, classified as gauge
    or non-gauge by whether it commutes with the semigroup range on probes."""
    if u_path.ts.shape != v_path.ts.shape or np.any(u_path.ts != v_path.ts):
        raise RejectionError("cocycle paths live on different grids")
    tabs = np.einsum("tba,tbc->tac", np.conj(u_path.tables), v_path.tables)
    q = CocyclePath(u_path.ts.copy(), tabs,
                    min(u_path.t_safe, v_path.t_safe))
    worst = 0.0
    for i, t in enumerate(q.ts):
        if t > q.t_safe + 1e-12:
            continue
        for a in probes:
            ba = beta.apply(t, a)
            worst = max(worst, frob(q.tables[i] @ ba - ba @ q.tables[i]))
    return DeltaReport(q, worst, worst <= tol, tol)
