"""Conditional variances of the field and scans of their small-distance order.

Two independent routes compute ``Var(T(x0) | T(x1), ..., T(xn))``:

* the Schur complement ``sigma00 - c^T Sigma^+ c`` of the covariance matrix;
* after rotating ``x0`` to the North Pole, the least-squares problem
  ``min_gamma sum_lm C_l |Y_lm(N) - sum_j gamma_j Y_lm(x_j)|^2`` in harmonic space.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, NumericalError
from .field import covariance_matrix, substream
from .geometry import SpherePoint, angles, as_vectors, from_angles, rotation_to_north
from .records import ConstantEstimate
from .special import alf_rows
from .spectra import Envelope, PowerSpectrum, rho_alpha
from .variogram import L_MAX_CAP, RESOLUTION_FACTOR

EIGEN_CUTOFF = 1e-10
NEGATIVE_TOLERANCE = 1e-8
GEOMETRIES = ("ring", "random-cap", "adversarial")


@dataclass(frozen=True)
class ConditioningConfig:
    """Target point, conditioning points (duplicates allowed) and spectrum."""

    x0: SpherePoint
    points: tuple[SpherePoint, ...]
    spec: PowerSpectrum

    def __post_init__(self):
        pts = tuple(self.points)
        if len(pts) < 1:
            raise DomainError("need at least one conditioning point")
        object.__setattr__(self, "points", pts)

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x0.unit_vector, as_vectors(self.points)


def conditional_variance_batch(spec: PowerSpectrum, x0: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Schur-complement conditional variances for a batch of configurations.

    ``x0`` has shape ``(B, 3)`` and ``points`` ``(B, n, 3)``. The conditioning
    matrix is inverted on its eigenvectors with eigenvalue above
    ``1e-10 * trace``.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1, 3)
    points = np.asarray(points, dtype=float).reshape(x0.shape[0], -1, 3)
    allpts = np.concatenate([x0[:, None, :], points], axis=1)
    cov = covariance_matrix(spec, allpts)
    sigma00 = cov[:, 0, 0]
    cross = cov[:, 1:, 0]
    gram = cov[:, 1:, 1:]
    lam, vec = np.linalg.eigh(gram)
    trace = np.trace(gram, axis1=1, axis2=2)
    if np.any(lam[:, 0] < -NEGATIVE_TOLERANCE * trace):
        raise NumericalError("conditioning covariance has a negative eigenvalue")
    keep = lam > EIGEN_CUTOFF * trace[:, None]
    proj = np.einsum("bij,bi->bj", vec, cross)
    reduction = np.sum(np.where(keep, proj ** 2 / np.where(keep, lam, 1.0), 0.0), axis=1)
    return np.maximum(sigma00 - reduction, 0.0)


def conditional_variance(cfg: ConditioningConfig) -> float:
    """``Var(T(x0) | T(x1), ..., T(xn))`` by the Schur complement."""
    x0, pts = cfg.vectors()
    return float(conditional_variance_batch(cfg.spec, x0[None], pts[None])[0])


def quadratic_form_min(cfg: ConditioningConfig) -> float:
    """``min_gamma E(T(x0) - sum gamma_j T(x_j))^2`` as least squares in harmonic space.

    With ``x0`` at the North Pole, ``Y_lm(N)`` vanishes unless ``m = 0``. The
    orders ``m`` and ``-m`` contribute equally, so each ``m > 0`` enters as two
    real rows (real and imaginary parts) weighted by ``sqrt(2 C_l)``.
    """
    x0, pts = cfg.vectors()
    rot = rotation_to_north(x0)
    theta, phi = angles(pts @ rot.T)
    spec = cfg.spec
    c = spec.values()
    L = spec.l_max
    n = theta.size
    rows = (L + 1) ** 2 - 1
    design = np.zeros((rows, n))
    target = np.zeros(rows)
    pos = 0
    m_all = np.arange(L + 1)
    cos_m = np.cos(np.outer(m_all, phi))
    sin_m = np.sin(np.outer(m_all, phi))
    for ell, lam in alf_rows(L, theta):
        if ell == 0:
            continue
        root = math.sqrt(c[ell])
        design[pos] = root * lam[0]
        target[pos] = root * math.sqrt((2 * ell + 1) / (4 * math.pi))
        pos += 1
        w = math.sqrt(2.0 * c[ell])
        k = ell
        design[pos: pos + k] = w * lam[1:] * cos_m[1: ell + 1]
        design[pos + k: pos + 2 * k] = w * lam[1:] * sin_m[1: ell + 1]
        pos += 2 * k
    u, s, _ = np.linalg.svd(design, full_matrices=False)
    keep = s ** 2 > EIGEN_CUTOFF * np.sum(s ** 2)
    basis = u[:, keep]
    resid = target - basis @ (basis.T @ target)
    return float(resid @ resid)


# ---------------------------------------------------------------------------
# Scans over shrinking distances


def unit_geometry(kind: str, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Distances (in units of ``eps``) and bearings of ``n`` conditioning points.

    ``ring``: all at distance 1, equally spaced bearings with random phase.
    ``random-cap``: one point at distance 1, the others uniform in ``[1, 3]``
    with uniform bearings. ``adversarial``: one point at 1, the rest in
    ``[1, 1.5]`` crowded into a quarter-turn sector.
    """
    if kind not in GEOMETRIES:
        raise DomainError(f"geometry must be one of {GEOMETRIES}")
    if n < 1:
        raise DomainError("n must be at least 1")
    if kind == "ring":
        bearings = rng.uniform(0, 2 * math.pi) + 2 * math.pi * np.arange(n) / n
        return np.ones(n), bearings
    if kind == "random-cap":
        dist = np.concatenate([[1.0], rng.uniform(1.0, 3.0, n - 1)])
        return dist, rng.uniform(0, 2 * math.pi, n)
    dist = np.concatenate([[1.0], rng.uniform(1.0, 1.5, n - 1)])
    start = rng.uniform(0, 2 * math.pi)
    return dist, start + rng.uniform(0, math.pi / 2, n)


def scan_l_max(epsilon: float) -> int:
    return int(min(L_MAX_CAP, math.ceil(RESOLUTION_FACTOR / epsilon)))


@dataclass(frozen=True)
class SlndScan:
    """Per-configuration ratios and their summaries.

    ``rows`` are ``(epsilon, replicate, min_dist, var, ratio_c2, ratio_nd)``.
    ``slope`` fits ``log min ratio_c2`` against ``log eps``. ``collapsed``
    lists the ``eps`` whose minimum ratio fell below a tenth of the largest
    per-scale minimum. ``certifying`` is False for ``alpha >= 4``.
    """

    alpha: float
    epsilons: np.ndarray
    rows: list[tuple[float, int, float, float, float, float]]
    min_ratio_c2: np.ndarray
    min_ratio_nd: np.ndarray
    slope: float
    collapsed: tuple[float, ...]
    certifying: bool
    estimate: ConstantEstimate
    config: dict = field(default_factory=dict)


def _scan_one(alpha, envelope, eps, n, geometry, replicates, seed):
    spec = PowerSpectrum(alpha, scan_l_max(eps), envelope)
    x0 = np.tile([0.0, 0.0, 1.0], (replicates, 1))
    pts = np.empty((replicates, n, 3))
    min_dist = np.empty(replicates)
    for r in range(replicates):
        dist, bearing = unit_geometry(geometry, n, substream(seed, r, "geometry"))
        pts[r] = from_angles(eps * dist, bearing)
        min_dist[r] = eps * dist.min()
    var = conditional_variance_batch(spec, x0, pts)
    ratio_c2 = var / eps ** (alpha - 2)
    ratio_nd = var / np.asarray(rho_alpha(alpha, min_dist)) ** 2
    return [(float(eps), r, float(min_dist[r]), float(var[r]), float(ratio_c2[r]), float(ratio_nd[r]))
            for r in range(replicates)]


def slnd_scan(alpha: float, epsilon_grid: Sequence[float], n: int, geometry: str, replicates: int,
              seed: int, envelope: Envelope | None = None, exploratory: bool = False,
              threads: int = 1) -> SlndScan:
    """Minimum conditional-variance ratios over sampled configurations per ``eps``.

    Configuration ``r`` uses the same unit geometry (drawn from the
    ``(seed, r)`` substream) at every ``eps``, scaled by ``eps``. The
    truncation is ``min(4096, ceil(50/eps))``.
    """
    if not alpha > 2:
        raise DomainError("alpha must exceed 2")
    if alpha >= 4 and not exploratory:
        raise DomainError("alpha >= 4 has no asserted lower-bound form; pass exploratory=True")
    if replicates < 1:
        raise DomainError("replicates must be positive")
    eps = np.asarray(epsilon_grid, dtype=float)
    if eps.size < 1 or np.any(eps <= 0) or np.any(eps >= math.pi / 3):
        raise DomainError("epsilons must lie in (0, pi/3)")
    if geometry not in GEOMETRIES:
        raise DomainError(f"geometry must be one of {GEOMETRIES}")
    envelope = envelope or Envelope()
    args = [(alpha, envelope, float(e), int(n), geometry, int(replicates), int(seed)) for e in eps]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda a: _scan_one(*a), args))
    else:
        parts = [_scan_one(*a) for a in args]
    rows = [row for part in parts for row in part]
    min_c2 = np.array([min(r[4] for r in part) for part in parts])
    min_nd = np.array([min(r[5] for r in part) for part in parts])
    slope = float(np.polyfit(np.log(eps), np.log(min_c2), 1)[0]) if eps.size >= 2 and np.all(min_c2 > 0) else math.nan
    collapsed = tuple(float(e) for e, v in zip(eps, min_c2) if not v > 0.1 * min_c2.max())
    config = {"alpha": float(alpha), "n": int(n), "geometry": geometry, "replicates": int(replicates),
              "seed": int(seed), "epsilon": ",".join(repr(float(e)) for e in eps),
              "envelope": envelope.kind}
    value = float(min_nd.min() if alpha < 4 else min_c2.min())
    name = "c2_empirical" if alpha < 4 else "c2_exploratory"
    estimate = ConstantEstimate(name, value, config, (float(eps.min()), float(eps.max())))
    return SlndScan(float(alpha), eps, rows, min_c2, min_nd, slope, collapsed, alpha < 4, estimate, config)

