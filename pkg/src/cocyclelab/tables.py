"""Windowed tables for local multipliers and phases.

Tables live on symmetric time windows of a fixed grid step.  An entry
(t, s) may be undefined (stored as NaN) when one of t, s, t+s falls
outside the window the table was computed on; all consumers skip NaN
entries explicitly.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import RejectionError


def _node_index(k_half, step, t):
    i = t / step + k_half
    j = int(round(i))
    if abs(i - j) > 1e-9 or j < 0 or j > 2 * k_half:
        raise RejectionError(f"time {t} is not a node of the window")
    return j


@dataclass
class MultiplierTable:
    """Unimodular local multiplier omega(t, s) on a window around 0.

    Rows index t on |t| <= t_half_steps * step, columns index s on
    |s| <= s_half_steps * step (a rectangular restriction keeps the large
    reconstruction sweeps affordable; the smoothing stages only ever need
    the second argument on half the window).
    """

    step: float
    t_half_steps: int
    s_half_steps: int
    values: np.ndarray  # (nx, 2*Kt+1, 2*Ks+1) complex, NaN where undefined
    defect: float = 0.0  # max scalar-deviation defect observed at extraction

    def __post_init__(self):
        nx, nt, ns = self.values.shape
        if nt != 2 * self.t_half_steps + 1 or ns != 2 * self.s_half_steps + 1:
            raise RejectionError("multiplier table shape does not match window")

    @property
    def nx(self):
        return self.values.shape[0]

    @property
    def t_nodes(self):
        return self.step * np.arange(-self.t_half_steps, self.t_half_steps + 1)

    @property
    def s_nodes(self):
        return self.step * np.arange(-self.s_half_steps, self.s_half_steps + 1)

    def value(self, ix, t, s):
        return self.values[ix,
                           _node_index(self.t_half_steps, self.step, t),
                           _node_index(self.s_half_steps, self.step, s)]

    def unimodularity_defect(self):
        v = self.values
        finite = np.isfinite(v)
        return float(np.abs(np.abs(v[finite]) - 1.0).max())

    def normalization_defect(self):
        """max |omega(t,0) - 1| and |omega(0,s) - 1| over the window."""
        kt, ks = self.t_half_steps, self.s_half_steps
        col = self.values[:, :, ks]
        row = self.values[:, kt, :]
        d = 0.0
        for arr in (col, row):
            finite = np.isfinite(arr)
            if finite.any():
                d = max(d, float(np.abs(arr[finite] - 1.0).max()))
        return d


@dataclass
class AdditiveMultiplierTable:
    """Real-valued additive local multiplier on a window around 0."""

    role: str  # 'sigma' | 'theta' | 'zeta'
    step: float
    t_half_steps: int
    s_half_steps: int
    values: np.ndarray  # (nx, 2*Kt+1, 2*Ks+1) real, NaN where undefined

    def __post_init__(self):
        nx, nt, ns = self.values.shape
        if nt != 2 * self.t_half_steps + 1 or ns != 2 * self.s_half_steps + 1:
            raise RejectionError("additive table shape does not match window")

    @property
    def nx(self):
        return self.values.shape[0]

    @property
    def t_nodes(self):
        return self.step * np.arange(-self.t_half_steps, self.t_half_steps + 1)

    @property
    def s_nodes(self):
        return self.step * np.arange(-self.s_half_steps, self.s_half_steps + 1)

    def value(self, ix, t, s):
        return self.values[ix,
                           _node_index(self.t_half_steps, self.step, t),
                           _node_index(self.s_half_steps, self.step, s)]

    def scaled(self, factor):
        return AdditiveMultiplierTable(self.role, self.step, self.t_half_steps,
                                       self.s_half_steps, factor * self.values)

    def normalization_defect(self):
        """max |value(t,0)| and |value(0,s)| over the window."""
        kt, ks = self.t_half_steps, self.s_half_steps
        d = 0.0
        for arr in (self.values[:, :, ks], self.values[:, kt, :]):
            finite = np.isfinite(arr)
            if finite.any():
                d = max(d, float(np.abs(arr[finite]).max()))
        return d

    def associativity_defect(self, max_steps=None, stride=1):
        """Additive cocycle identity residual on admissible grid triples.

        value(t,s) + value(t+s,r) = value(s,r) + value(t,s+r), maximized over
        triples with |t|,|s|,|r| <= max_steps*step (default: the full column
        window).  ``stride`` subsamples t rows for large tables.
        """
        kt, ks = self.t_half_steps, self.s_half_steps
        kk = min(ks, kt) if max_steps is None else int(max_steps)
        if kk > min(ks, kt):
            raise RejectionError("max_steps exceeds the table window")
        v = self.values
        # index helpers: a value index i corresponds to time (i - K)*step
        rng = np.arange(-kk, kk + 1)
        worst = 0.0
        for it in range(-kk, kk + 1, stride):
            # term1: value(t, s) over s in rng
            term1 = v[:, it + kt, rng + ks][:, :, None]
            # term2: value(t+s, r): rows t+s, cols r
            ts_rows = it + rng
            ok_rows = np.abs(ts_rows) <= kt
            term2 = np.full((v.shape[0], rng.size, rng.size), np.nan)
            term2[:, ok_rows, :] = v[:, ts_rows[ok_rows] + kt][:, :, rng + ks]
            # term3: value(s, r)
            term3 = v[:, rng + kt][:, :, rng + ks][:, :, :]
            # term4: value(t, s+r): cols s+r
            sr = rng[:, None] + rng[None, :]
            ok_cols = np.abs(sr) <= ks
            term4 = np.full((v.shape[0], rng.size, rng.size), np.nan)
            row_t = v[:, it + kt, :]
            term4[:, ok_cols] = row_t[:, (sr[ok_cols] + ks)]
            res = term1 + term2 - term3 - term4
            finite = np.isfinite(res)
            if finite.any():
                worst = max(worst, float(np.abs(res[finite]).max()))
        return worst

    def check_identities(self, tol_norm=1e-7, tol_assoc=1e-6, max_steps=None,
                         stride=1):
        """Raise unless the additive multiplier identities hold on the window."""
        dn = self.normalization_defect()
        if dn > tol_norm:
            raise RejectionError(
                f"{self.role}: normalization defect {dn:.3e} > {tol_norm:.1e}",
                defect=dn)
        da = self.associativity_defect(max_steps=max_steps, stride=stride)
        if da > tol_assoc:
            raise RejectionError(
                f"{self.role}: associativity defect {da:.3e} > {tol_assoc:.1e}",
                defect=da)
        return {"normalization": dn, "associativity": da}


@dataclass
class PhaseTable:
    """Real phase table phi(x, t) on a symmetric window, phi(x, 0) = 0."""

    role: str  # 'a' | 'b' | 'phi'
    step: float
    half_steps: int
    values: np.ndarray  # (nx, 2*K+1)

    def __post_init__(self):
        nx, nt = self.values.shape
        if nt != 2 * self.half_steps + 1:
            raise RejectionError("phase table shape does not match window")
        center = np.abs(self.values[:, self.half_steps])
        if center.max() > 1e-12:
            raise RejectionError("phase table must vanish at t = 0")

    @property
    def nodes(self):
        return self.step * np.arange(-self.half_steps, self.half_steps + 1)

    def value(self, ix, t):
        return self.values[ix, _node_index(self.half_steps, self.step, t)]

    def restricted(self, half_steps):
        if half_steps > self.half_steps:
            raise RejectionError("cannot grow a phase table window")
        k0, k = self.half_steps, half_steps
        return PhaseTable(self.role, self.step, k,
                          self.values[:, k0 - k:k0 + k + 1].copy())

    def interpolate(self, ix, t):
        """Cubic fit through the 4 nearest nodes (matches the smoothness of
        the mollified tables this is used on)."""
        k = self.half_steps
        x = t / self.step  # in node units
        if abs(x) > k:
            raise RejectionError(f"time {t} outside phase window")
        j = int(np.floor(x))
        lo = min(max(j - 1, -k), k - 3)
        idx = np.arange(lo, lo + 4)
        coeff = np.polyfit(idx * self.step, self.values[ix, idx + k], 3)
        return float(np.polyval(coeff, t))


def coboundary(phi, t_half_steps=None, s_half_steps=None, role="sigma"):
    """Additive coboundary (t, s) -> phi(t+s) - phi(t) - phi(s).

    Entries where phi(t+s) falls outside phi's window are NaN.  The output
    passes the additive-multiplier identities exactly (they are algebraic).
    """
    k = phi.half_steps
    kt = k if t_half_steps is None else int(t_half_steps)
    ks = kt if s_half_steps is None else int(s_half_steps)
    if kt > k or ks > k:
        raise RejectionError("coboundary window exceeds the phase window")
    v = phi.values
    nx = v.shape[0]
    it = np.arange(-kt, kt + 1)
    js = np.arange(-ks, ks + 1)
    out = np.full((nx, it.size, js.size), np.nan)
    tsum = it[:, None] + js[None, :]
    ok = np.abs(tsum) <= k
    pt = v[:, it + k][:, :, None]
    ps = v[:, js + k][:, None, :]
    psum = np.full((nx, it.size, js.size), np.nan)
    psum[:, ok] = v[:, tsum[ok] + k]
    out = psum - pt - ps
    return AdditiveMultiplierTable(role, phi.step, kt, ks, out)


def table_residual(a, b):
    """Max |a - b| over entries defined in both tables (same windows)."""
    if (a.step != b.step or a.t_half_steps != b.t_half_steps
            or a.s_half_steps != b.s_half_steps):
        raise RejectionError("tables live on different windows")
    d = a.values - b.values
    finite = np.isfinite(d)
    if not finite.any():
        raise RejectionError("tables have no common defined entries")
    return float(np.abs(d[finite]).max())
