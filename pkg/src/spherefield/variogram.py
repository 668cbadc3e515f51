"""Variogram of an isotropic field and the two-sided bound by rho_alpha.

``d^2(theta) = E|T(x) - T(y)|^2 = sum_l C_l (2l+1)/(2 pi) (1 - P_l(cos theta))``
for points at geodesic distance ``theta``. With ``C_l = l**(-alpha)`` this is
``Q_alpha(theta) / pi`` where ``Q_alpha = sum l**(-alpha) (l + 1/2) (1 - P_l)``.

Truncation at ``l_max <= 4096`` cannot resolve ``theta`` much below
``1/l_max``; for spectra whose envelope is constant beyond ``l_max`` the
omitted tail is added exactly through the resummed Legendre power series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .field import covariance
from .geometry import SpherePoint, geodesic_distance_vec
from .records import ConstantEstimate, SeriesValue
from .special import legendre_deficit_series, legendre_power_deficit
from .spectra import PowerSpectrum, power_tail_sum, rho_alpha

L_MAX_CAP = 4096
RESOLUTION_FACTOR = 50


def geodesic_distance(x: SpherePoint, y: SpherePoint) -> float:
    """Great-circle distance in ``[0, pi]``."""
    return float(geodesic_distance_vec(x.unit_vector, y.unit_vector))


def resolution_l_max(theta: float) -> int:
    """Default truncation for resolving angle ``theta``: ``min(4096, ceil(50/theta))``."""
    if theta <= 0:
        return L_MAX_CAP
    return int(min(L_MAX_CAP, math.ceil(RESOLUTION_FACTOR / theta)))


def _check_theta(theta) -> np.ndarray:
    arr = np.asarray(theta, dtype=float)
    if np.any(arr < 0) or np.any(arr > math.pi) or np.any(np.isnan(arr)):
        raise DomainError("theta must lie in [0, pi]")
    return arr


def _series_weights(spec: PowerSpectrum) -> np.ndarray:
    ell = np.arange(spec.l_max + 1)
    return spec.values() * (2 * ell + 1) / (2 * math.pi)


def _out(value: np.ndarray, bound, terms: int) -> SeriesValue:
    if value.ndim == 0:
        return SeriesValue(float(value), float(np.max(bound)), terms)
    return SeriesValue(value, bound, terms)


def q_alpha(alpha: float, theta, l_max: int | None = None) -> SeriesValue:
    """``Q_alpha(theta) = sum l**(-alpha) (l + 1/2) (1 - P_l(cos theta))``.

    With ``l_max`` the series is truncated and the bound is
    ``2 sum_{l > l_max} l**(-alpha) (l + 1/2)``. Without it the untruncated
    value ``D_{alpha-1} + D_alpha / 2`` is returned, where
    ``D_s = zeta(s) - sum l**(-s) P_l``, and the bound is the quadrature
    error estimate.
    """
    if not alpha > 2:
        raise DomainError(f"alpha must exceed 2, got {alpha}")
    th = _check_theta(theta)
    if l_max is not None:
        ell = np.arange(int(l_max) + 1, dtype=float)
        w = np.zeros_like(ell)
        w[1:] = ell[1:] ** (-alpha) * (ell[1:] + 0.5)
        value = legendre_deficit_series(w, th)
        bound = 4 * math.pi * power_tail_sum(alpha, int(l_max))
        return _out(value, np.full(th.shape, bound), int(l_max))
    flat = th.reshape(-1)
    vals = np.empty(flat.size)
    errs = np.empty(flat.size)
    for i, t in enumerate(flat):
        d1 = legendre_power_deficit(alpha - 1.0, t)
        d0 = legendre_power_deficit(alpha, t)
        vals[i] = d1.value + 0.5 * d0.value
        errs[i] = d1.tail_bound + 0.5 * d0.tail_bound
    return _out(vals.reshape(th.shape), errs.reshape(th.shape), 0)


def variogram(spec: PowerSpectrum, theta, tail: str = "bound") -> SeriesValue:
    """``d^2(theta)`` for the spectrum ``spec``.

    ``tail='bound'`` truncates at ``spec.l_max`` and reports the bound
    ``2 sum_{l > l_max} (2l+1)/(2 pi) c0 l**(-alpha)``. ``tail='resum'``
    (constant-tail envelopes only) adds the exact contribution of all
    multipoles beyond ``l_max`` and reports the quadrature error instead.
    """
    th = _check_theta(theta)
    head = legendre_deficit_series(_series_weights(spec), th)
    if tail == "bound":
        bound = 4 * spec.c0 * power_tail_sum(spec.alpha, spec.l_max)
        return _out(head, np.full(th.shape, bound), spec.l_max)
    if tail != "resum":
        raise DomainError(f"unknown tail mode {tail!r}")
    g = spec.envelope.tail_value
    if g is None:
        raise DomainError("resummed tail needs an envelope that is constant beyond l_max")
    full = q_alpha(spec.alpha, th)
    trunc = q_alpha(spec.alpha, th, spec.l_max)
    value = head + g / math.pi * (np.asarray(full.value) - np.asarray(trunc.value))
    return _out(value, g / math.pi * np.asarray(full.tail_bound) + 1e-15 * np.abs(value), 0)


def variogram_via_covariance(spec: PowerSpectrum, x: SpherePoint, y: SpherePoint) -> float:
    """``2 (C(x, x) - C(x, y))`` from the Schoenberg covariance series."""
    return 2.0 * (covariance(spec, x, x).value - covariance(spec, x, y).value)


@dataclass(frozen=True)
class VariogramProfile:
    """Variogram over an angle grid compared with ``rho_alpha^2``.

    ``c1`` is ``max(max ratio, 1 / min ratio)``; ``log_slope`` the slope of
    ``log ratio`` against ``log theta``; ``bounded`` is False when that slope
    leaves the tolerance band around 0.
    """

    alpha: float
    theta: np.ndarray
    values: np.ndarray
    rho_sq: np.ndarray
    ratios: np.ndarray
    tail_bounds: np.ndarray
    c1: float
    log_slope: float
    bounded: bool
    tail_mode: str
    estimate: ConstantEstimate

    @property
    def spread(self) -> float:
        return float(self.ratios.max() / self.ratios.min())


def sandwich_report(spec: PowerSpectrum, theta_grid, tail: str = "auto",
                    slope_tolerance: float = 0.1) -> VariogramProfile:
    """Ratios ``d^2 / rho_alpha^2`` over ``theta_grid`` and the implied constant.

    ``tail='auto'`` resums the tail when the envelope is constant beyond
    ``l_max``; otherwise each angle is evaluated with the truncation
    ``min(4096, ceil(50/theta))`` (table envelopes keep their own ``l_max``).
    """
    theta = np.asarray(theta_grid, dtype=float)
    if theta.ndim != 1 or theta.size < 2 or np.any(theta <= 0) or np.any(theta > math.pi):
        raise DomainError("theta grid needs at least two angles in (0, pi]")
    mode = tail
    if mode == "auto":
        mode = "resum" if spec.envelope.tail_value is not None else "bound"
    if mode == "resum":
        res = variogram(spec, theta, tail="resum")
        values, bounds = np.asarray(res.value), np.asarray(res.tail_bound)
    elif mode == "bound":
        values = np.empty(theta.size)
        bounds = np.empty(theta.size)
        for i, t in enumerate(theta):
            s = spec if spec.envelope.kind == "table" else spec.with_l_max(resolution_l_max(t))
            r = variogram(s, t)
            values[i], bounds[i] = r.value, r.tail_bound
    else:
        raise DomainError(f"unknown tail mode {tail!r}")
    rho_sq = np.asarray(rho_alpha(spec.alpha, theta)) ** 2
    ratios = values / rho_sq
    c1 = float(max(ratios.max(), 1.0 / ratios.min()))
    slope = float(np.polyfit(np.log(theta), np.log(ratios), 1)[0])
    config = dict(spec.to_config(), theta_min=float(theta.min()), theta_max=float(theta.max()),
                  points=int(theta.size), tail=mode)
    estimate = ConstantEstimate("c1_empirical", c1, config, (float(theta.min()), float(theta.max())))
    return VariogramProfile(spec.alpha, theta, values, rho_sq, ratios, bounds, c1, slope,
                            abs(slope) <= slope_tolerance, mode, estimate)
