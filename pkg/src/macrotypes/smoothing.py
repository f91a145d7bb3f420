"""Smoothing functions ``q_L(l)``, decoherence kernels and Lipschitz checks.

Three kernel kinds are supported:

``gaussian``
    Isotropic Gaussian of width ``sigma`` around the normalized type. With
    ``coords="full"`` the outcome is a real ``d``-vector (one coordinate per
    letter); with ``coords="simplex"`` only the first ``d - 1`` coordinates are
    read out, which for ``d = 2`` is the single fraction-of-first-letter number
    used for magnetization readouts.
``comb``
    Discrete outcome grid. Gaussian mass of width ``sigma`` around the type is
    binned onto the grid points (bin edges at midpoints). ``sigma = 0`` gives
    hard binning, which is not Lipschitz in ``L``.
``exact``
    The unsmoothed type measurement (``sigma = 0``); outcomes are the types.

For discrete kinds "density" means probability mass.

Quadrature convention for continuous outcomes: trapezoid tensor grid with
step ``sigma / 20`` truncated ``6 sigma`` beyond the relevant centres.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import ValidationError

QUAD_SPAN = 6.0
QUAD_STEPS_PER_SIGMA = 20
_EXACT_ATOL = 1e-9


@dataclass(frozen=True)
class SmoothingKernel:
    kind: str = "gaussian"
    sigma: float = 0.1
    coords: str = "full"
    grid: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("gaussian", "comb", "exact"):
            raise ValidationError(f"unknown kernel kind {self.kind!r}")
        if self.coords not in ("full", "simplex"):
            raise ValidationError(f"unknown coordinate convention {self.coords!r}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ValidationError("gaussian kernel needs sigma > 0")
        if self.kind == "comb":
            if self.sigma < 0:
                raise ValidationError("comb kernel needs sigma >= 0")
            g = np.asarray(self.grid, dtype=float)
            if g.size < 2 or np.any(np.diff(g) <= 0):
                raise ValidationError("comb grid must be strictly increasing with >= 2 points")
            object.__setattr__(self, "grid", tuple(float(x) for x in g))
            object.__setattr__(self, "coords", "simplex")
        if self.kind == "exact":
            object.__setattr__(self, "sigma", 0.0)

    # ------------------------------------------------------------------ basics
    @property
    def is_discrete(self) -> bool:
        return self.kind != "gaussian"

    @property
    def scale(self) -> float:
        """Width used to normalize distances in the Lipschitz condition."""
        if self.sigma > 0:
            return self.sigma
        if self.kind == "comb":
            return float(np.min(np.diff(self.grid)))
        return 0.0

    def outcome_dim(self, d: int) -> int:
        return d if self.coords == "full" else d - 1

    def project(self, types_norm: np.ndarray) -> np.ndarray:
        """Coordinates of normalized types in this kernel's outcome space."""
        types_norm = np.asarray(types_norm, dtype=float)
        if self.coords == "full":
            return types_norm
        return types_norm[..., :-1]

    def _as_outcome(self, ell, d: int) -> np.ndarray:
        ell = np.atleast_1d(np.asarray(ell, dtype=float))
        k = self.outcome_dim(d)
        if ell.shape[-1] == d and k == d - 1:
            ell = ell[..., :-1]
        if ell.shape[-1] != k:
            raise ValidationError(f"outcome has {ell.shape[-1]} coordinates, expected {k}")
        return ell

    # ---------------------------------------------------------------- weights
    def weights(self, types_norm: np.ndarray, ell) -> np.ndarray:
        """``q_L(ell)`` for every row of ``types_norm``.

        ``ell`` may carry leading batch axes; the result has shape
        ``batch + (T,)``.
        """
        types_norm = np.atleast_2d(np.asarray(types_norm, dtype=float))
        d = types_norm.shape[-1]
        x = self.project(types_norm)
        ell = self._as_outcome(ell, d)
        diff = ell[..., None, :] - x  # batch, T, k
        if self.kind == "gaussian":
            k = x.shape[-1]
            r2 = np.einsum("...i,...i->...", diff, diff)
            return (2 * math.pi * self.sigma**2) ** (-k / 2) * np.exp(-r2 / (2 * self.sigma**2))
        if self.kind == "exact":
            return np.all(np.abs(diff) <= _EXACT_ATOL, axis=-1).astype(float)
        # comb: product over simplex coordinates of per-coordinate bin masses
        grid = np.asarray(self.grid)
        out = np.ones(diff.shape[:-1])
        for c in range(x.shape[-1]):
            j = np.clip(np.searchsorted(grid, ell[..., c] - 1e-12), 0, len(grid) - 1)
            on_grid = np.abs(grid[j] - ell[..., c]) <= 1e-9
            lo, hi = self._bin_edges(j)
            out = out * np.where(on_grid[..., None], self._mass(x[:, c], lo[..., None], hi[..., None]), 0.0)
        return out

    def _bin_edges(self, j):
        grid = np.asarray(self.grid)
        mids = (grid[1:] + grid[:-1]) / 2
        edges = np.concatenate([[-np.inf], mids, [np.inf]])
        return edges[j], edges[np.asarray(j) + 1]

    def _mass(self, centre, lo, hi):
        if self.sigma > 0:
            return ndtr((hi - centre) / self.sigma) - ndtr((lo - centre) / self.sigma)
        return ((centre >= lo) & (centre < hi)).astype(float)

    def comb_matrix(self, types_norm: np.ndarray) -> np.ndarray:
        """``f_j(L)`` for every outcome grid point; shape ``(T, G**k)``."""
        if self.kind != "comb":
            raise ValidationError("comb_matrix only defined for comb kernels")
        x = self.project(np.atleast_2d(types_norm))
        g = len(self.grid)
        lo, hi = self._bin_edges(np.arange(g))
        per = [self._mass(x[:, c, None], lo, hi) for c in range(x.shape[-1])]
        out = per[0]
        for p in per[1:]:
            out = (out[:, :, None] * p[:, None, :]).reshape(len(x), -1)
        return out

    def bin_weights(self, types_norm: np.ndarray, edges: Sequence[float], coordinate: int = 0) -> np.ndarray:
        """Probability that coordinate ``coordinate`` of the outcome falls in each bin.

        ``edges`` are the interior boundaries; the outer bins are unbounded.
        Result has shape ``(T, len(edges) + 1)``.
        """
        types_norm = np.atleast_2d(np.asarray(types_norm, dtype=float))
        centre = types_norm[:, coordinate]
        e = np.concatenate([[-np.inf], np.asarray(edges, dtype=float), [np.inf]])
        if self.kind == "gaussian":
            cdf = ndtr((e[None, :] - centre[:, None]) / self.sigma)
        elif self.kind == "exact":
            cdf = (centre[:, None] + _EXACT_ATOL >= e[None, :]).astype(float)
            cdf = 1.0 - cdf
            cdf[:, 0], cdf[:, -1] = 0.0, 1.0
        else:
            grid = np.asarray(self.grid)
            lo, hi = self._bin_edges(np.arange(len(grid)))
            mass = self._mass(centre[:, None], lo, hi)
            cdf = np.concatenate([np.zeros((len(centre), 1)), np.cumsum(mass, axis=1)], axis=1)
            cum_at = np.searchsorted(grid, e, side="left")
            cdf = cdf[:, cum_at]
        return np.clip(np.diff(cdf, axis=1), 0.0, 1.0)

    # ------------------------------------------------------------ decoherence
    def decoherence_matrix(self, types_a: np.ndarray, types_b: np.ndarray | None = None) -> np.ndarray:
        """``G(L, L')`` for all pairs of normalized types."""
        types_a = np.atleast_2d(np.asarray(types_a, dtype=float))
        types_b = types_a if types_b is None else np.atleast_2d(np.asarray(types_b, dtype=float))
        xa, xb = self.project(types_a), self.project(types_b)
        diff = xa[:, None, :] - xb[None, :, :]
        if self.kind == "gaussian":
            r2 = np.einsum("ijk,ijk->ij", diff, diff)
            return np.exp(-r2 / (8 * self.sigma**2))
        if self.kind == "exact":
            return np.all(np.abs(diff) <= _EXACT_ATOL, axis=-1).astype(float)
        fa, fb = self.comb_matrix(types_a), self.comb_matrix(types_b)
        return np.sqrt(fa) @ np.sqrt(fb).T

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "sigma": self.sigma, "coords": self.coords}
        if self.kind == "comb":
            cfg["grid"] = list(self.grid)
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "SmoothingKernel":
        return cls(kind=cfg.get("kind", "gaussian"), sigma=float(cfg.get("sigma", 0.0)),
                   coords=cfg.get("coords", "full"), grid=tuple(cfg.get("grid", ())))


def gaussian_kernel(sigma: float, coords: str = "full") -> SmoothingKernel:
    return SmoothingKernel("gaussian", sigma, coords)


def exact_kernel() -> SmoothingKernel:
    return SmoothingKernel("exact", 0.0)


def comb_kernel(grid: Sequence[float], sigma: float) -> SmoothingKernel:
    return SmoothingKernel("comb", sigma, "simplex", tuple(grid))


def make_kernel(sigma: float, coords: str = "full") -> SmoothingKernel:
    """Gaussian kernel, or the exact type measurement when ``sigma == 0``."""
    return exact_kernel() if sigma == 0 else gaussian_kernel(sigma, coords)


def gaussian_density(sigma: float, L, ell) -> float | np.ndarray:
    """``(2 pi sigma^2)^{-d/2} exp(-||ell - L||^2 / 2 sigma^2)``."""
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    L = np.asarray(L, dtype=float)
    ell = np.asarray(ell, dtype=float)
    if L.shape[-1] != ell.shape[-1]:
        raise ValidationError("dimension mismatch between type and outcome")
    d = L.shape[-1]
    r2 = ((ell - L) ** 2).sum(axis=-1)
    out = (2 * math.pi * sigma**2) ** (-d / 2) * np.exp(-r2 / (2 * sigma**2))
    return float(out) if np.ndim(out) == 0 else out


def decoherence_kernel(k: SmoothingKernel, L, Lp) -> float:
    """``G(L, L') = int sqrt(q_L q_L')``, closed form where available."""
    return float(k.decoherence_matrix(np.atleast_2d(L), np.atleast_2d(Lp))[0, 0])


def outcome_quadrature(k: SmoothingKernel, centres: np.ndarray, step: float | None = None,
                       span: float = QUAD_SPAN) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights over the outcome space.

    ``centres`` are normalized types (rows); continuous kernels get a
    trapezoid tensor grid covering every centre ``+- span * sigma``.
    """
    centres = np.atleast_2d(np.asarray(centres, dtype=float))
    d = centres.shape[-1]
    if k.kind == "exact":
        return centres.copy(), np.ones(len(centres))
    if k.kind == "comb":
        kdim = k.outcome_dim(d)
        g = np.asarray(k.grid)
        pts = np.stack(np.meshgrid(*([g] * kdim), indexing="ij"), axis=-1).reshape(-1, kdim)
        return pts, np.ones(len(pts))
    x = k.project(centres)
    h = k.sigma / QUAD_STEPS_PER_SIGMA if step is None else step
    axes, wts = [], []
    for c in range(x.shape[-1]):
        lo, hi = x[:, c].min() - span * k.sigma, x[:, c].max() + span * k.sigma
        n = int(math.ceil((hi - lo) / h))
        ax = lo + h * np.arange(n + 1)
        w = np.full(n + 1, h)
        w[0] = w[-1] = h / 2
        axes.append(ax)
        wts.append(w)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    wmesh = wts[0]
    for w in wts[1:]:
        wmesh = np.multiply.outer(wmesh, w).ravel()
    return mesh, np.asarray(wmesh).ravel()


def decoherence_kernel_quadrature(k: SmoothingKernel, L, Lp, step: float | None = None) -> float:
    """Numerical ``int sqrt(q_L q_L') dl`` on the documented grid around the midpoint."""
    L, Lp = np.asarray(L, float), np.asarray(Lp, float)
    if k.kind != "gaussian":
        return decoherence_kernel(k, L, Lp)
    mid = (L + Lp) / 2
    span = QUAD_SPAN + 0.5 * float(np.max(np.abs(k.project(L - Lp)))) / k.sigma
    pts, w = outcome_quadrature(k, mid[None, :], step=step, span=span)
    q = k.weights(np.vstack([L, Lp]), pts)
    return float(np.sum(w * np.sqrt(q[:, 0] * q[:, 1])))


@dataclass
class LipschitzEstimate:
    c: float
    s: float
    samples: int


def lipschitz_estimate(k: SmoothingKernel, samples: Iterable[tuple], s: float = 1.0) -> LipschitzEstimate:
    """Smallest ``c`` with ``|q_L(l) - q_L'(l)| <= c (||L - L'||_1 / sigma)^s`` over the samples.

    An empirical estimate over the sample, not a proof.
    """
    c, n = 0.0, 0
    scale = k.scale
    for L, Lp, ell in samples:
        n += 1
        L, Lp = np.atleast_1d(np.asarray(L, float)), np.atleast_1d(np.asarray(Lp, float))
        dist = float(np.abs(L - Lp).sum())
        if dist == 0:
            continue
        q = k.weights(np.vstack([L, Lp]), ell)
        gap = abs(float(q[0]) - float(q[1]))
        c = max(c, gap / (dist / scale) ** s)
    if n == 0:
        raise ValidationError("empty sample set")
    return LipschitzEstimate(c=c, s=s, samples=n)


def lipschitz_refinement(k: SmoothingKernel, centre, ell, deltas: Sequence[float], s: float = 1.0,
                         n_offsets: int = 201) -> tuple[np.ndarray, bool]:
    """Lipschitz constants estimated at shrinking pair separations.

    For each separation ``delta`` the pairs ``(L, L + delta e_0)`` are scanned
    over ``+- 3`` scales around ``centre``, at least ``n_offsets`` positions
    and never coarser than ``delta``. Returns the per-delta
    estimates and a flag that is True when ``c`` keeps growing roughly like
    ``1/delta`` (the signature of a discontinuity).
    """
    centre = np.atleast_1d(np.asarray(centre, float))
    cs = []
    for delta in deltas:
        # the scan step must not exceed delta, or a jump can fall between samples
        step = min(6 * k.scale / (n_offsets - 1), delta)
        offsets = np.arange(-3 * k.scale, 3 * k.scale + step / 2, step)
        samples = []
        for o in offsets:
            L = centre.copy()
            L[0] += o
            Lp = L.copy()
            Lp[0] += delta
            samples.append((L, Lp, ell))
        cs.append(lipschitz_estimate(k, samples, s).c)
    cs = np.asarray(cs)
    ratios = cs[1:] / np.maximum(cs[:-1], 1e-300)
    shrink = np.asarray(deltas[:-1], float) / np.asarray(deltas[1:], float)
    diverging = bool(np.all(ratios > 0.5 * shrink)) if len(ratios) else False
    return cs, diverging
