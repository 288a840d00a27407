"""Reconstruction of implementing unitaries from channel data.

Given a family of automorphisms presented only through its action, find a
local time window on which a rank-one reference projection stays
recognizable, build the implementing unitaries column by column from the
channel action, and extract the scalar multiplier that measures the failure
of the group law.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import (RejectionError, dagger, frob, seeded_unit_vector,
                     unitarity_defect)
from .tables import AdditiveMultiplierTable, MultiplierTable

WINDOW_THRESHOLD = 0.5  # the projection-overlap threshold defining the window


@dataclass
class LocalWindowData:
    """Reference vector, window half-width and the section of unit vectors.

    eta[x][t] is the normalized image of the reference vector under the
    transported projection; the forced normalization leaves no phase
    freedom.
    """

    xi: np.ndarray
    step: float
    half_steps: int
    eta: np.ndarray    # (nx, 2K+1, n)
    norms: np.ndarray  # (nx, 2K+1) overlap norms, all > 1/2

    @property
    def delta(self):
        return self.half_steps * self.step

    @property
    def nodes(self):
        return self.step * np.arange(-self.half_steps, self.half_steps + 1)


def _section_at(family, xi, ix, ts):
    """eta and overlap norms at arbitrary times (vectorized over ts)."""
    p = np.outer(xi, np.conj(xi))
    pt = family.apply_batch(ix, ts, p)
    v = pt @ xi
    norms = np.linalg.norm(v, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        eta = v / norms[:, None]
    return eta, norms


def candidate_vectors(dim, extra=4, seed=20):
    """Deterministic restart list: standard basis, then seeded random."""
    cands = [np.eye(dim, dtype=complex)[k] for k in range(dim)]
    cands += [seeded_unit_vector(dim, seed + k) for k in range(extra)]
    return cands


def find_local_window(family, tgrid, xi=None):
    """Largest grid-resolvable window where the overlap stays above 1/2.

    If ``xi`` is given it is used as-is; otherwise candidates are tried in a
    fixed deterministic order until one yields a window of at least one
    grid step.
    """
    cands = [np.asarray(xi, dtype=complex)] if xi is not None \
        else candidate_vectors(family.dim)
    last_err = None
    for cand in cands:
        if abs(np.linalg.norm(cand) - 1.0) > 1e-12:
            raise RejectionError("reference vector must be a unit vector")
        try:
            return _window_for(family, tgrid, cand)
        except RejectionError as err:
            last_err = err
    raise RejectionError(
        "no candidate reference vector yields a usable window; refine the "
        f"grid or supply one explicitly ({last_err})")


def _window_for(family, tgrid, xi):
    nodes = tgrid.nodes
    k_max = tgrid.steps
    nx = family.grid.size
    eta = np.empty((nx, nodes.size, family.dim), dtype=complex)
    norms = np.empty((nx, nodes.size))
    for ix in range(nx):
        eta[ix], norms[ix] = _section_at(family, xi, ix, nodes)
    # largest K such that all |t| <= K*step nodes clear the threshold
    good = (norms > WINDOW_THRESHOLD).all(axis=0)
    k = 0
    while k < k_max and good[k_max - (k + 1)] and good[k_max + (k + 1)]:
        k += 1
    if k < 1:
        raise RejectionError(
            "window below one grid step for this reference vector")
    sl = slice(k_max - k, k_max + k + 1)
    return LocalWindowData(xi, tgrid.step, k, eta[:, sl].copy(), norms[:, sl].copy())


@dataclass
class UnitaryField:
    """Tables of unitaries over parameter x time window, with off-grid
    evaluation by re-running the construction at the requested time."""

    step: float
    half_steps: int
    tables: np.ndarray  # (nx, 2K+1, n, n)
    max_unitarity_defect: float = 0.0
    _evaluate: Optional[Callable[[int, float], np.ndarray]] = field(
        default=None, repr=False)

    @property
    def nx(self):
        return self.tables.shape[0]

    @property
    def dim(self):
        return self.tables.shape[-1]

    @property
    def nodes(self):
        return self.step * np.arange(-self.half_steps, self.half_steps + 1)

    def at(self, ix, k):
        """Table entry at signed node index k (time k*step)."""
        return self.tables[ix, k + self.half_steps]

    def evaluate(self, ix, t):
        k = t / self.step
        kr = int(round(k))
        if abs(k - kr) < 1e-12 and abs(kr) <= self.half_steps:
            return self.at(ix, kr)
        if self._evaluate is None:
            raise RejectionError(f"field has no off-grid evaluator (t={t})")
        return self._evaluate(ix, float(t))


def implementing_unitaries(family, wld, reject_tol=1e-6):
    """Unitaries implementing the family on the local window.

    Column k of U^x_t is the channel image of the basis map e_k xi^dagger
    applied to the section vector; by construction U^x_0 = I exactly.
    """
    n = family.dim
    nx = family.grid.size
    nodes = wld.nodes
    basis_maps = [np.outer(np.eye(n, dtype=complex)[k], np.conj(wld.xi))
                  for k in range(n)]
    tables = np.empty((nx, nodes.size, n, n), dtype=complex)
    for ix in range(nx):
        for k, a_k in enumerate(basis_maps):
            imgs = family.apply_batch(ix, nodes, a_k)
            tables[ix, :, :, k] = np.einsum("tab,tb->ta", imgs, wld.eta[ix])
    defect = max(unitarity_defect(tables[ix, it])
                 for ix in range(nx) for it in range(nodes.size))
    if defect > reject_tol:
        raise RejectionError(
            f"reconstructed field is not unitary (defect {defect:.3e}); the "
            "family is not automorphic or the window is invalid",
            defect=defect, stage="implementing_unitaries")

    def evaluate(ix, t):
        eta_t, norms = _section_at(family, wld.xi, ix, np.array([t]))
        if norms[0] <= WINDOW_THRESHOLD:
            raise RejectionError(f"time {t} outside the usable window")
        u = np.empty((n, n), dtype=complex)
        for k, a_k in enumerate(basis_maps):
            u[:, k] = family.apply(ix, t, a_k) @ eta_t[0]
        return u

    return UnitaryField(wld.step, wld.half_steps, tables, defect, evaluate)


def implementation_residual(field, family, probes):
    """max over probes and nodes of ||U A U^dagger - alpha(A)||_F."""
    worst = 0.0
    nodes = field.nodes
    for ix in range(field.nx):
        for a in probes:
            target = family.apply_batch(ix, nodes, a)
            got = np.einsum("tab,bc,tdc->tad", field.tables[ix], a,
                            np.conj(field.tables[ix]))
            worst = max(worst, float(np.sqrt(
                (np.abs(got - target) ** 2).sum(axis=(-1, -2))).max()))
    return worst


def extract_multiplier(field, s_half_steps=None, reject_tol=1e-6,
                       chunk=256):
    """Scalar multiplier omega(t, s) with U_t U_s = omega(t,s) U_{t+s}.

    The scalar is read off as the normalized trace tr(U_t U_s U_{t+s}^*)/n,
    which averages numerical noise over the whole matrix; the maximal
    scalar-deviation defect ||U_t U_s - omega U_{t+s}||_F is verified below
    ``reject_tol``.
    """
    kt = field.half_steps
    ks = kt if s_half_steps is None else int(s_half_steps)
    if ks > kt:
        raise RejectionError("s window cannot exceed the field window")
    n = field.dim
    nt, ns = 2 * kt + 1, 2 * ks + 1
    omega = np.full((field.nx, nt, ns), np.nan, dtype=complex)
    defect = 0.0
    s_idx = np.arange(ns) + (kt - ks)  # s columns inside the full window
    for ix in range(field.nx):
        u = field.tables[ix]
        us = u[s_idx]
        for lo in range(0, nt, chunk):
            hi = min(lo + chunk, nt)
            rows = np.arange(lo, hi)
            tsum = rows[:, None] + s_idx[None, :] - kt  # target node index
            ok = (tsum >= 0) & (tsum <= 2 * kt)
            prod = np.einsum("tab,sbc->tsac", u[rows], us)
            targ = np.empty_like(prod)
            targ[ok] = u[tsum[ok]]
            targ[~ok] = np.nan
            w = np.einsum("tsab,tsab->ts", prod, np.conj(targ)) / n
            omega[ix, lo:hi] = w
            diff = prod - w[..., None, None] * targ
            if ok.any():
                d = np.sqrt((np.abs(diff[ok]) ** 2).sum(axis=(-1, -2))).max()
                defect = max(defect, float(d))
    if defect > reject_tol:
        raise RejectionError(
            f"products deviate from scalar multiples (defect {defect:.3e}); "
            "the unitaries do not implement a common automorphism",
            defect=defect, stage="extract_multiplier")
    table = MultiplierTable(field.step, kt, ks, omega, defect)
    d_mod = table.unimodularity_defect()
    if d_mod > 1e-9:
        raise RejectionError(f"multiplier not unimodular (defect {d_mod:.3e})",
                             defect=d_mod, stage="extract_multiplier")
    return table


def to_additive(mult, min_steps=4, margin=np.pi / 2):
    """Principal-branch logarithm of the multiplier on a shrunken window.

    The window is reduced to the largest sub-window on which |Arg omega|
    stays below ``margin`` (conservatively pi/2, well clear of the branch
    cut); the result is rounded down to a multiple of 4 steps so the
    halving window chain downstream lands on grid nodes.
    """
    arg = np.angle(mult.values)
    kt, ks = mult.t_half_steps, mult.s_half_steps
    for k in range(4 * (min(kt, ks) // 4), min_steps - 1, -4):
        rows = slice(kt - k, kt + k + 1)
        cols = slice(ks - k, ks + k + 1)
        block = arg[:, rows, cols]
        finite = np.isfinite(block)
        if finite.any() and np.abs(block[finite]).max() <= margin:
            values = block.copy()
            return AdditiveMultiplierTable("sigma", mult.step, k, k, values)
    raise RejectionError(
        "no sub-window of at least 4 grid steps stays clear of the branch "
        "cut", stage="to_additive")
