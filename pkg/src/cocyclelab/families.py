"""Parametrized families of automorphism channels over discretized parameter spaces.

A :class:`ChannelFamily` exposes only the channel action ``(x, t, A) -> A'``;
generators used to build test families stay hidden inside the evaluator
closure, so the reconstruction modules genuinely work from channel data.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import (RejectionError, dagger, frob, herm_expi_batch,
                     require_hermitian, seeded_random_hermitian)


@dataclass(frozen=True)
class ParamGrid:
    """Discretized compact parameter space: an interval or a circle.

    ``points`` are strictly increasing parameter values; for the circle the
    two endpoints of the value range are identified, so adjacency wraps
    around.
    """

    topology: str
    points: np.ndarray

    def __post_init__(self):
        if self.topology not in ("interval", "circle"):
            raise RejectionError(f"unknown topology {self.topology!r}")
        pts = np.asarray(self.points, dtype=float)
        # Size 1 is the degenerate carrier for single-semigroup channels
        # (rescaled-family bases, conjugated semigroups); proper parameter
        # spaces have at least 2 points.
        if pts.ndim != 1 or pts.size < 1:
            raise RejectionError("parameter grid needs at least 1 point")
        if np.any(np.diff(pts) <= 0):
            raise RejectionError("parameter values must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @staticmethod
    def single(x=0.0):
        return ParamGrid("interval", np.array([float(x)]))

    @property
    def size(self):
        return self.points.size

    def adjacent_pairs(self):
        """Index pairs of adjacent grid points (cyclic for the circle)."""
        pairs = [(i, i + 1) for i in range(self.size - 1)]
        if self.topology == "circle":
            pairs.append((self.size - 1, 0))
        return pairs

    @staticmethod
    def interval(a=0.0, b=1.0, npoints=21):
        return ParamGrid("interval", np.linspace(a, b, npoints))

    @staticmethod
    def circle(npoints=24):
        # Points in [0, 2*pi); the wrap edge is implied by the topology tag.
        return ParamGrid("circle", np.linspace(0.0, 2 * np.pi, npoints, endpoint=False))


@dataclass(frozen=True)
class TimeGrid:
    """Symmetric time window {k*step : |k*step| <= half_width}."""

    half_width: float
    step: float

    def __post_init__(self):
        if self.half_width <= 0 or self.step <= 0:
            raise RejectionError("half_width and step must be positive")
        k = self.half_width / self.step
        if abs(k - round(k)) > 1e-12:
            raise RejectionError(
                f"step {self.step} does not divide half_width {self.half_width}")

    @property
    def steps(self):
        return int(round(self.half_width / self.step))

    @property
    def nodes(self):
        k = self.steps
        return self.step * np.arange(-k, k + 1)

    @property
    def nonnegative_nodes(self):
        return self.step * np.arange(self.steps + 1)


@dataclass
class ChannelFamily:
    """Family of *-automorphisms given only through the channel action.

    ``apply(ix, t, A)`` evaluates the automorphism at parameter index ``ix``
    and arbitrary real time ``t``; grids are sampling devices, not the
    source of truth.
    """

    dim: int
    grid: ParamGrid
    provenance: str
    _apply: Callable[[int, float, np.ndarray], np.ndarray]
    _apply_batch: Optional[Callable[[int, np.ndarray, np.ndarray], np.ndarray]] = None

    def apply(self, ix, t, a):
        return self._apply(ix, float(t), np.asarray(a, dtype=complex))

    def apply_batch(self, ix, ts, a):
        """Channel action at several times; shape (len(ts), n, n)."""
        a = np.asarray(a, dtype=complex)
        if self._apply_batch is not None:
            return self._apply_batch(ix, np.asarray(ts, dtype=float), a)
        return np.stack([self._apply(ix, float(t), a) for t in ts])


def make_inner_family(gens, pgrid, lipschitz_budget=None):
    """Family alpha^x_t = Ad(e^{itH(x)}) from per-point Hermitian generators.

    ``gens`` is a list of Hermitian matrices, one per grid point.  Adjacent
    generators must differ by at most ``lipschitz_budget`` (continuity of
    the family on the grid); the default budget is 10x the largest
    parameter spacing times the largest generator norm.
    """
    gens = [require_hermitian(np.asarray(h, dtype=complex), tol=1e-12,
                              what=f"generator {i}") for i, h in enumerate(gens)]
    if len(gens) != pgrid.size:
        raise RejectionError("one generator per parameter grid point required")
    dim = gens[0].shape[0]
    if any(h.shape != (dim, dim) for h in gens):
        raise RejectionError("generators must share one dimension")

    if lipschitz_budget is None:
        dx = np.max(np.diff(pgrid.points)) if pgrid.size > 1 else 0.0
        scale = max(frob(h) for h in gens) + 1.0
        lipschitz_budget = 10.0 * dx * scale
    for i, j in pgrid.adjacent_pairs():
        d = frob(gens[i] - gens[j])
        if d > lipschitz_budget:
            raise RejectionError(
                f"generator jump {d:.3e} between grid points {i},{j} exceeds "
                f"budget {lipschitz_budget:.3e}")

    eig = [np.linalg.eigh(h) for h in gens]

    def conjugators(ix, ts):
        evals, evecs = eig[ix]
        phases = np.exp(1j * np.multiply.outer(ts, evals))
        return np.einsum("ak,tk,bk->tab", evecs, phases, np.conj(evecs))

    def apply_one(ix, t, a):
        u = conjugators(ix, np.array([t]))[0]
        return u @ a @ dagger(u)

    def apply_many(ix, ts, a):
        u = conjugators(ix, ts)
        return np.einsum("tab,bc,tdc->tad", u, a, np.conj(u))

    return ChannelFamily(dim, pgrid, "generator-based", apply_one, apply_many)


def make_zero_family(dim, pgrid):
    """Constant identity family (zero generator everywhere)."""
    return make_inner_family([np.zeros((dim, dim), dtype=complex)] * pgrid.size,
                             pgrid)


def make_rescaled_family(base, pgrid):
    """Time-rescaled family alpha^x_t(A) = beta_{x t}(A) over x in [0, 1].

    ``base`` must be a single-point family (the one-parameter group beta).
    At x = 0 the family is constant in t.
    """
    if base.grid.size != 1:
        raise RejectionError("base of a rescaled family must be a single-point family")

    def apply_one(ix, t, a):
        return base.apply(0, pgrid.points[ix] * t, a)

    def apply_many(ix, ts, a):
        return base.apply_batch(0, pgrid.points[ix] * np.asarray(ts), a)

    return ChannelFamily(base.dim, pgrid, "rescaled", apply_one, apply_many)


def continuity_report(family, probes, tgrid):
    """Discrete modulus of joint continuity over adjacent grid cells.

    Returns the max over probes and over grid-adjacent (x, t) moves of the
    Frobenius distance of the channel outputs, plus the per-probe table.
    """
    if not probes:
        raise RejectionError("continuity_report needs at least one probe")
    ts = tgrid.nodes
    per_probe = []
    for a in probes:
        vals = np.stack([family.apply_batch(ix, ts, a)
                         for ix in range(family.grid.size)])
        dt = np.abs(np.diff(vals, axis=1))
        mod_t = float(np.sqrt((dt ** 2).sum(axis=(-1, -2))).max()) if ts.size > 1 else 0.0
        mod_x = 0.0
        for i, j in family.grid.adjacent_pairs():
            dx = vals[i] - vals[j]
            mod_x = max(mod_x, float(np.sqrt((np.abs(dx) ** 2).sum(axis=(-1, -2))).max()))
        per_probe.append(max(mod_t, mod_x))
    return {"modulus": max(per_probe), "per_probe": per_probe}


def family_from_config(cfg):
    """Build a family from a plain config mapping.

    Expected keys: dim, topology, npoints, seed, scale, kind
    ('inner' | 'rescaled'), and optionally a/b interval bounds.
    """
    dim = int(cfg.get("dim", 2))
    topology = cfg.get("topology", "interval")
    npoints = int(cfg.get("npoints", 11))
    seed = int(cfg.get("seed", 0))
    scale = float(cfg.get("scale", 0.5))
    kind = cfg.get("kind", "inner")

    if topology == "interval":
        pgrid = ParamGrid.interval(float(cfg.get("a", 0.0)), float(cfg.get("b", 1.0)),
                                   npoints)
    else:
        pgrid = ParamGrid.circle(npoints)

    h0 = seeded_random_hermitian(dim, seed)
    h1 = seeded_random_hermitian(dim, seed + 1)
    if kind == "inner":
        if topology == "interval":
            gens = [scale * (h0 + x * h1) for x in pgrid.points]
        else:
            h2 = seeded_random_hermitian(dim, seed + 2)
            gens = [scale * (h0 + np.cos(x) * h1 + np.sin(x) * h2)
                    for x in pgrid.points]
        return make_inner_family(gens, pgrid)
    if kind == "rescaled":
        base = make_inner_family([scale * h0], ParamGrid.single())
        return make_rescaled_family(base, ParamGrid.interval(0.0, 1.0, npoints))
    raise RejectionError(f"unknown family kind {kind!r}")
