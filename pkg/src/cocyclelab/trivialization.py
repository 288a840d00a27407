"""Additive-multiplier calculus: smoothing, trivialization, group extension.

The pipeline is the classical two-stage construction: convolve the
multiplier against a bump function twice (once in each argument) to obtain
a smooth representative differing by an explicit coboundary, then
differentiate at the origin and integrate back to produce the trivializing
phase.  All integrals are composite trapezoid sums on the fixed grid, so
every quantity is an exact linear functional of stored data.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .families import TimeGrid
from .linalg import RejectionError, dagger, frob
from .reconstruction import UnitaryField
from .tables import (AdditiveMultiplierTable, PhaseTable, coboundary,
                     table_residual)


@dataclass(frozen=True)
class WindowChain:
    """Nested windows N >= N1 >= Np with N1+N1 <= N and Np+Np <= N1.

    Half-widths are step counts; successive halving satisfies the sum
    inclusions with integer grid arithmetic.
    """

    step: float
    n_steps: int
    n1_steps: int
    np_steps: int

    def __post_init__(self):
        if not (0 < self.np_steps <= self.n1_steps <= self.n_steps):
            raise RejectionError("window chain must be nested")
        if 2 * self.n1_steps > self.n_steps or 2 * self.np_steps > self.n1_steps:
            raise RejectionError("window chain violates the sum inclusions")

    @classmethod
    def halving(cls, step, n_steps):
        if n_steps % 4 != 0 or n_steps < 16:
            raise RejectionError(
                "halving chain needs a window of >= 16 steps divisible by 4")
        return cls(step, n_steps, n_steps // 2, n_steps // 4)


@dataclass
class Mollifier:
    """Bump function samples on the innermost window, unit trapezoid mass."""

    step: float
    half_steps: int
    shape: float
    samples: np.ndarray  # (2K'+1,), nonnegative, zero at the edges

    @property
    def nodes(self):
        return self.step * np.arange(-self.half_steps, self.half_steps + 1)


def make_mollifier(chain, shape=1.0):
    """Standard bump exp(-shape/(1 - (t/h)^2)) renormalized to unit integral.

    Since the bump vanishes to all orders at the support edge, the
    trapezoid quadratures built on it converge faster than any power of
    the step.
    """
    k = chain.np_steps
    if 2 * k < 8:
        raise RejectionError("mollifier window spans fewer than 8 grid steps")
    u = np.arange(-k, k + 1) / k
    f = np.zeros(u.size)
    interior = np.abs(u) < 1.0
    f[interior] = np.exp(-shape / (1.0 - u[interior] ** 2))
    mass = np.trapezoid(f, dx=chain.step)
    return Mollifier(chain.step, k, shape, f / mass)


def _trapz_weights(n, step):
    w = np.full(n, step)
    w[0] = w[-1] = step / 2
    return w


@dataclass
class SmoothingResult:
    zeta: AdditiveMultiplierTable
    phi1: PhaseTable
    theta: AdditiveMultiplierTable
    report: dict


def smooth_multiplier(sigma, f, chain, kernel_check=True):
    """Smooth representative zeta = sigma + coboundary(phi1) on N'.

    Two averaging stages: first against the second argument (producing a
    table differentiable in s), then against the first.  The returned
    report carries the residual of the coboundary identity and, when
    ``kernel_check`` is on, the integral-kernel identity that witnesses
    smoothness of the intermediate table.
    """
    if f.step != sigma.step or f.half_steps != chain.np_steps:
        raise RejectionError("mollifier does not match the window chain")
    k, k1, kp = chain.n_steps, chain.n1_steps, chain.np_steps
    if k > min(sigma.t_half_steps, sigma.s_half_steps):
        raise RejectionError("window chain exceeds the multiplier window")
    kt0 = sigma.t_half_steps
    ks0 = sigma.s_half_steps
    v = sigma.values
    nx = sigma.nx
    wq = _trapz_weights(2 * kp + 1, sigma.step) * f.samples

    # first averaging phase: a(x, t) on |t| <= 3K/4
    ka = 3 * k // 4
    rows_a = np.arange(-ka, ka + 1) + kt0
    cols_f = np.arange(-kp, kp + 1) + ks0
    a_vals = -np.einsum("xtr,r->xt", v[:, rows_a][:, :, cols_f], wq)
    # center exactly: sigma(0, .) vanishes only up to the extraction noise,
    # and the constant shift cancels in every coboundary below anyway
    a_vals = a_vals - a_vals[:, [ka]]
    a = PhaseTable("a", sigma.step, ka, a_vals)

    def cob_apply(base_vals, base_k, phase, kt, ks):
        """base(t,s) - phase(t+s) + phase(t) + phase(s) with NaN masking."""
        it = np.arange(-kt, kt + 1)
        js = np.arange(-ks, ks + 1)
        out = np.full((nx, it.size, js.size), np.nan)
        tsum = it[:, None] + js[None, :]
        ok = np.abs(tsum) <= phase.half_steps
        pv = phase.values
        base = base_vals[:, it + base_k[0]][:, :, js + base_k[1]]
        psum = np.full((nx, it.size, js.size), np.nan)
        psum[:, ok] = pv[:, tsum[ok] + phase.half_steps]
        out = base - psum + pv[:, it + phase.half_steps][:, :, None] \
            + pv[:, js + phase.half_steps][:, None, :]
        return out

    theta_vals = cob_apply(v, (kt0, ks0), a, k1, k1)
    theta = AdditiveMultiplierTable("theta", sigma.step, k1, k1, theta_vals)

    # second averaging phase: b(x, t) on |t| <= K/2, integrating over rows
    rows_f = np.arange(-kp, kp + 1) + k1
    b_vals = -np.einsum("xrt,r->xt", theta_vals[:, rows_f, :], wq)
    b_vals = b_vals - b_vals[:, [k1]]
    b = PhaseTable("b", sigma.step, k1, b_vals)

    zeta_vals = cob_apply(theta_vals, (k1, k1), b, kp, kp)
    if not np.isfinite(zeta_vals).all():
        raise RejectionError("window arithmetic left undefined smooth entries")
    zeta = AdditiveMultiplierTable("zeta", sigma.step, kp, kp, zeta_vals)

    phi1 = PhaseTable("phi", sigma.step, k1,
                      a.values[:, ka - k1:ka + k1 + 1] + b.values)

    # coboundary identity: zeta = sigma - cob(phi1) on N' x N'
    cob1 = coboundary(phi1, kp, kp)
    sigma_np = AdditiveMultiplierTable(
        "sigma", sigma.step, kp, kp,
        v[:, np.arange(-kp, kp + 1) + kt0][:, :, np.arange(-kp, kp + 1) + ks0])
    resid = float(np.nanmax(np.abs(
        zeta.values - (sigma_np.values - cob1.values))))

    report = {"coboundary_residual": resid}
    if kernel_check:
        report["kernel_residual"] = _kernel_residual(theta, f, zeta, k1, kp)
    return SmoothingResult(zeta, phi1, theta, report)


def _kernel_residual(theta, f, zeta, k1, kp):
    """Residual of zeta(t,s) = integral theta(u,s) [f(u-t) - f(u)] du."""
    step = theta.step
    u_idx = np.arange(-k1, k1 + 1)
    w = _trapz_weights(u_idx.size, step)
    fz = np.zeros(u_idx.size)
    fz[k1 - kp:k1 + kp + 1] = f.samples
    worst = 0.0
    for jt, t in enumerate(range(-kp, kp + 1)):
        fshift = np.zeros(u_idx.size)
        lo, hi = t - kp, t + kp
        fshift[lo + k1:hi + k1 + 1] = f.samples
        kern = (fshift - fz) * w
        # integrate over rows u for every s in N'
        block = theta.values[:, :, k1 - kp:k1 + kp + 1]
        est = np.einsum("xus,u->xs", block, kern)
        worst = max(worst, float(np.abs(est - zeta.values[:, jt, :]).max()))
    return worst


@dataclass
class TrivializationResult:
    phi: PhaseTable
    phi1: PhaseTable
    phi2: PhaseTable
    zeta: AdditiveMultiplierTable
    report: dict


def trivialize_smooth(zeta, tol=None, reject_factor=100.0):
    """Trivializing phase for a smooth multiplier on its own window.

    Differentiates in the second argument at 0 by central difference, then
    integrates back by cumulative trapezoid.  The output phi2 is determined
    only up to an additive linear term, so correctness is judged through
    its coboundary.
    """
    kp = zeta.t_half_steps
    if kp != zeta.s_half_steps or not np.isfinite(zeta.values).all():
        raise RejectionError("trivialize_smooth expects a dense square window")
    step = zeta.step
    if tol is None:
        tol = 10.0 * (step + step ** 2)
    # theta0(t) = d/ds zeta(t, s) at s = 0
    theta0 = (zeta.values[:, :, kp + 1] - zeta.values[:, :, kp - 1]) / (2 * step)
    nx = zeta.nx
    phi2 = np.zeros((nx, 2 * kp + 1))
    for j in range(kp, 2 * kp):
        phi2[:, j + 1] = phi2[:, j] + step * (theta0[:, j] + theta0[:, j + 1]) / 2
    for j in range(kp, 0, -1):
        phi2[:, j - 1] = phi2[:, j] - step * (theta0[:, j] + theta0[:, j - 1]) / 2
    phi2 = PhaseTable("phi", step, kp, phi2)

    cob2 = coboundary(phi2, kp, kp)
    diff = cob2.values - zeta.values
    finite = np.isfinite(diff)
    resid = float(np.abs(diff[finite]).max())
    if resid > reject_factor * tol:
        raise RejectionError(
            f"coboundary residual {resid:.3e} far above tolerance {tol:.1e}; "
            "input is not a smooth local multiplier",
            defect=resid, stage="trivialize_smooth")

    switch = _switch_residual(zeta, theta0)
    return phi2, {"coboundary_residual": resid, "tolerance": tol,
                  "switch_residual": switch}


def _switch_residual(zeta, theta0):
    """Residual of theta(t+s, 0) = theta(s, 0) + theta(t, s) on grid pairs."""
    kp = zeta.t_half_steps
    step = zeta.step
    theta_ts = (zeta.values[:, :, 2:] - zeta.values[:, :, :-2]) / (2 * step)
    worst = 0.0
    for it in range(-kp, kp + 1):
        for js in range(-kp + 1, kp):
            tsum = it + js
            if abs(tsum) > kp:
                continue
            res = theta0[:, tsum + kp] - theta0[:, js + kp] \
                - theta_ts[:, it + kp, js - 1 + kp]
            worst = max(worst, float(np.abs(res).max()))
    return worst


def trivialize(sigma, f=None, chain=None, kernel_check=False):
    """Full trivialization: phi with sigma(t,s) = phi(t+s) - phi(t) - phi(s).

    Composes the smoothing stage with the smooth trivialization; the
    returned phi lives on the innermost window and satisfies phi(x, 0) = 0.
    """
    if chain is None:
        k = 4 * (min(sigma.t_half_steps, sigma.s_half_steps) // 4)
        chain = WindowChain.halving(sigma.step, k)
    if f is None:
        f = make_mollifier(chain)
    smooth = smooth_multiplier(sigma, f, chain, kernel_check=kernel_check)
    phi2, rep2 = trivialize_smooth(smooth.zeta)
    kp = chain.np_steps
    phi = PhaseTable("phi", sigma.step, kp,
                     smooth.phi1.restricted(kp).values + phi2.values)

    cob = coboundary(phi, kp, kp)
    sigma_np = AdditiveMultiplierTable(
        "sigma", sigma.step, kp, kp,
        sigma.values[:, np.arange(-kp, kp + 1) + sigma.t_half_steps]
        [:, :, np.arange(-kp, kp + 1) + sigma.s_half_steps])
    resid = table_residual(cob, sigma_np)
    report = {"max_residual": resid,
              "smooth": smooth.report, "smooth_trivialize": rep2}
    return TrivializationResult(phi, smooth.phi1, phi2, smooth.zeta, report)


def subsample(sigma):
    """The same additive multiplier on the doubled grid step (even nodes)."""
    kt, ks = sigma.t_half_steps, sigma.s_half_steps
    if kt % 2 or ks % 2:
        raise RejectionError("subsampling needs an even-step window")
    return AdditiveMultiplierTable(sigma.role, 2 * sigma.step, kt // 2,
                                   ks // 2, sigma.values[:, ::2, ::2].copy())


def trivialize_refined(sigma, kernel_check=False):
    """Trivialization with the quadratic step error cancelled.

    Runs the pipeline at the native step and at the doubled step and forms
    the Richardson combination (4 phi_fine - phi_coarse) / 3 on the shared
    nodes.  The leading phase error is quadratic in the step with a smooth
    coefficient (central difference plus trapezoid, both second order; the
    bump-function quadratures converge beyond all orders), so the
    combination is fourth-order accurate.  The two runs may disagree by a
    linear-in-t term, which is harmless: linear terms have zero coboundary.
    """
    if min(sigma.t_half_steps, sigma.s_half_steps) < 32:
        raise RejectionError(
            "refined trivialization needs a window of at least 32 steps")
    k = 8 * (min(sigma.t_half_steps, sigma.s_half_steps) // 8)
    chain = WindowChain.halving(sigma.step, k)
    fine = trivialize(sigma, chain=chain, kernel_check=kernel_check)
    coarse = trivialize(subsample(sigma),
                        chain=WindowChain.halving(2 * sigma.step, k // 2))
    kc = coarse.phi.half_steps  # == fine.phi.half_steps // 2, same time span
    vals = (4.0 * fine.phi.values[:, ::2] - coarse.phi.values) / 3.0
    vals = vals - vals[:, [kc]]
    phi = PhaseTable("phi", 2 * sigma.step, kc, vals)

    cob = coboundary(phi, kc, kc)
    kt0, ks0 = sigma.t_half_steps, sigma.s_half_steps
    rows = 2 * np.arange(-kc, kc + 1) + kt0
    cols = 2 * np.arange(-kc, kc + 1) + ks0
    sigma_c = AdditiveMultiplierTable("sigma", 2 * sigma.step, kc, kc,
                                      sigma.values[:, rows][:, :, cols])
    resid = table_residual(cob, sigma_c)
    report = {"max_residual": resid, "fine": fine.report,
              "coarse": coarse.report}
    return TrivializationResult(phi, fine.phi1, fine.phi2, fine.zeta, report)


def extend_to_group(field, phi, target, family=None, group_tol=1e-5):
    """Extend the corrected local field to a group family on a large window.

    The corrected field W_t = e^{-i phi(t)} V_t must satisfy the group law
    on the inner window; each target time is then reached as a power
    (W_{t/n})^n with n minimal such that |t|/n stays inside half the inner
    window.  Off-grid V comes from the field evaluator, off-grid phi from a
    local cubic fit.
    """
    ratio = phi.step / field.step
    r = int(round(ratio))
    if abs(ratio - r) > 1e-9 or r < 1:
        raise RejectionError("phase step must be a multiple of the field step")
    kp = phi.half_steps
    if kp * r > field.half_steps:
        raise RejectionError("phase window exceeds the field window")
    h_half = kp * phi.step / 2.0

    # local group defect of W on the inner window (phi grid nodes)
    k0 = field.half_steps
    idx = np.arange(-kp, kp + 1)
    w_tab = np.exp(-1j * phi.values)[:, :, None, None] \
        * field.tables[:, r * idx + k0]
    defect = 0.0
    for it in idx:
        for js in idx:
            if abs(it + js) > kp:
                continue
            lhs = w_tab[:, it + kp] @ w_tab[:, js + kp]
            rhs = w_tab[:, it + js + kp]
            d = np.sqrt((np.abs(lhs - rhs) ** 2).sum(axis=(-1, -2))).max()
            defect = max(defect, float(d))
    if defect > group_tol:
        raise RejectionError(
            f"corrected field fails the local group law (defect {defect:.3e})",
            defect=defect, stage="extend_to_group")

    def w_at(ix, t):
        return np.exp(-1j * phi.interpolate(ix, t)) * field.evaluate(ix, t)

    def evaluate(ix, t):
        if t == 0.0:
            return np.eye(field.dim, dtype=complex)
        n = max(1, int(np.ceil(abs(t) / h_half - 1e-12)))
        return np.linalg.matrix_power(w_at(ix, t / n), n)

    nodes = target.nodes
    tables = np.stack([np.stack([evaluate(ix, t) for t in nodes])
                       for ix in range(field.nx)])
    out = UnitaryField(target.step, target.steps, tables,
                       field.max_unitarity_defect, evaluate)
    out.local_group_defect = defect
    return out


@dataclass
class GroupFamilyReport:
    max_group_residual: float
    max_impl_residual: float
    continuity_modulus: float
    group_tol: float
    impl_tol: float

    @property
    def passed(self):
        return (self.max_group_residual <= self.group_tol
                and self.max_impl_residual <= self.impl_tol)


def verify_group_family(ufield, family, probes, group_tol=1e-6,
                        impl_tol=1e-6, max_pairs=2000, seed=5):
    """Residual report for a candidate unitary group family.

    Checks the group law on sampled node pairs whose sum stays on the grid,
    the implementation property against the channel on probe matrices, and
    the joint-continuity modulus over adjacent table cells.
    """
    k = ufield.half_steps
    pairs = [(i, j) for i in range(-k, k + 1) for j in range(-k, k + 1)
             if abs(i + j) <= k]
    if len(pairs) > max_pairs:
        rng = np.random.default_rng(seed)
        pairs = [pairs[i] for i in
                 rng.choice(len(pairs), size=max_pairs, replace=False)]
    g_res = 0.0
    for i, j in pairs:
        lhs = np.einsum("xab,xbc->xac", ufield.tables[:, i + k],
                        ufield.tables[:, j + k])
        rhs = ufield.tables[:, i + j + k]
        g_res = max(g_res, float(np.sqrt(
            (np.abs(lhs - rhs) ** 2).sum(axis=(-1, -2))).max()))

    from .reconstruction import implementation_residual
    i_res = implementation_residual(ufield, family, probes)

    tabs = ufield.tables
    c_mod = 0.0
    if tabs.shape[1] > 1:
        c_mod = float(np.sqrt((np.abs(np.diff(tabs, axis=1)) ** 2)
                              .sum(axis=(-1, -2))).max())
    for i, j in family.grid.adjacent_pairs():
        c_mod = max(c_mod, float(np.sqrt(
            (np.abs(tabs[i] - tabs[j]) ** 2).sum(axis=(-1, -2))).max()))
    return GroupFamilyReport(g_res, i_res, c_mod, group_tol, impl_tol)
