"""Zonal bump functions on the sphere built from a compactly supported kernel.

The kernel ``Ghat`` is the ``m``-fold self-convolution of the triangle
``p(s) = max(0, 1 - m|s|)``, supported in ``[-1, 1]``. For ``m = 2`` this is
``p * p`` with ``p(s) = max(0, 1 - 2|s|)``. The bump centred at the North Pole is

    delta_eps(theta) = sum_{l>=1} b_l(eps) (2l+1)/(4 pi) P_l(cos theta),
    b_l(eps) = int Ghat(s) cos(s eps sqrt(l(l+1))) ds.

Finite propagation speed of the wave equation makes the untruncated series
including ``l = 0`` vanish for ``theta > eps``; the sum starting at ``l = 1``
differs from it by the constant ``b_0/(4 pi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError
from .records import ConstantEstimate, SeriesValue
from .special import legendre_series
from .spectra import PowerSpectrum


@dataclass(frozen=True)
class SmoothingKernel:
    """``Ghat = p * ... * p`` (``convolution_order`` factors), ``p(s) = max(0, 1 - m|s|)``.

    Equivalently ``Ghat(s) = a**(m-1) M_{2m}(s/a)`` with ``a = 1/m`` and
    ``M_n`` the centred cardinal B-spline of order ``n``. ``Ghat`` is
    ``2m - 2`` times continuously differentiable with a piecewise constant
    derivative of order ``2m - 1``.
    """

    convolution_order: int = 2
    knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = self.convolution_order
        if int(m) != m or m < 2:
            raise DomainError("convolution_order must be an integer >= 2")
        object.__setattr__(self, "convolution_order", int(m))
        object.__setattr__(self, "knots", np.linspace(-1.0, 1.0, 2 * int(m) + 1))

    @property
    def width(self) -> float:
        """Half-width ``a = 1/m`` of each triangle factor."""
        return 1.0 / self.convolution_order

    @property
    def smoothness(self) -> int:
        """Highest order ``M`` with a bounded (piecewise continuous) derivative."""
        return 2 * self.convolution_order - 1

    @property
    def mass(self) -> float:
        """``int Ghat(s) ds = a**m``."""
        return self.width ** self.convolution_order

    def derivative(self, s, r: int = 0) -> np.ndarray:
        """``Ghat^{(r)}(s)`` for ``0 <= r <= 2m - 1``."""
        m = self.convolution_order
        n = 2 * m
        if int(r) != r or not 0 <= r <= n - 1:
            raise DomainError(f"derivative order must lie in 0..{n - 1}")
        a = self.width
        raw = np.asarray(s, dtype=float) / a
        # evaluate at -|x|, where few truncated powers are active, then restore parity (-1)**r
        x = -np.abs(raw)
        total = np.zeros_like(x)
        deg = n - 1 - r
        for k in range(n + 1):
            shifted = x + n / 2.0 - k
            if deg == 0:
                piece = (shifted >= 0).astype(float)
            else:
                piece = np.where(shifted > 0, shifted, 0.0) ** deg
            total += (-1) ** k * math.comb(n, k) * piece
        total /= math.factorial(deg)
        total = np.where(np.abs(x) < n / 2.0, total, 0.0)
        if r % 2:
            total = np.where(raw > 0, -total, total)
        return a ** (m - 1 - r) * total

    def sup_derivative(self, r: int, samples: int = 4001) -> float:
        """``K_r = sup |Ghat^{(r)}|`` by dense evaluation on every knot interval."""
        grid = np.concatenate([np.linspace(lo, hi, samples, endpoint=False)
                               for lo, hi in zip(self.knots[:-1], self.knots[1:])])
        return float(np.max(np.abs(self.derivative(grid, r))))

    def jump_variation(self) -> float:
        """Total variation of the piecewise constant derivative of order ``2m - 1``."""
        m = self.convolution_order
        return float(2 ** (2 * m) * self.width ** (-m))


def ghat_eval(kernel: SmoothingKernel, s):
    """``Ghat(s)``; zero outside ``(-1, 1)``."""
    out = kernel.derivative(s, 0)
    return float(out) if np.ndim(out) == 0 else out


def transform_closed_form(kernel: SmoothingKernel, w) -> np.ndarray:
    """``int Ghat(s) cos(s w) ds = a**m (sin(a w/2) / (a w/2))**(2m)``."""
    a = kernel.width
    x = np.asarray(w, dtype=float) * a / 2.0
    return a ** kernel.convolution_order * np.sinc(x / math.pi) ** (2 * kernel.convolution_order)


def g_closed_form(u):
    """``G(u) = (2/pi)^2 (1 - cos(u/2))^2 u^{-4}`` for the two-fold kernel.

    Written as ``(sin(u/4)/(u/4))^4 / (16 pi^2)``, which is the same function
    without cancellation near ``u = 0`` and has the limit ``1/(16 pi^2)``.
    """
    x = np.asarray(u, dtype=float) / 4.0
    out = np.sinc(x / math.pi) ** 4 / (16.0 * math.pi ** 2)
    return float(out) if out.ndim == 0 else out


def _gauss_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def transform(kernel: SmoothingKernel, w, chunk: int = 256) -> np.ndarray:
    """``int_{-1}^{1} Ghat(s) cos(s w) ds`` by Gauss-Legendre on each knot interval.

    ``Ghat`` is a polynomial between knots, so the only difficulty is the
    oscillation; the node count grows with ``w`` and is checked against a
    second, larger rule.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    out = np.empty(w.size)
    lo = kernel.knots[kernel.convolution_order:-1]
    hi = kernel.knots[kernel.convolution_order + 1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    order = np.argsort(w)
    for start in range(0, w.size, chunk):
        idx = order[start:start + chunk]
        wmax = float(np.max(np.abs(w[idx])))
        base = 2 * kernel.convolution_order + 8 + int(math.ceil(0.75 * wmax * kernel.width))
        estimates = []
        for n in (base, base + 12):
            x, g = _gauss_nodes(n)
            s = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
            weights = (half[:, None] * g[None, :]).reshape(-1) * ghat_eval(kernel, s)
            estimates.append(2.0 * np.cos(np.outer(w[idx], s)) @ weights)
        diff = float(np.max(np.abs(estimates[0] - estimates[1])))
        # rounding in cos(w s) grows like w * machine epsilon
        if diff > (1e-13 + 1e-15 * wmax) * kernel.mass:
            raise ConvergenceError(f"oscillatory quadrature unresolved at w={wmax:g}")
        out[idx] = estimates[1]
    return out


def b_ell(kernel: SmoothingKernel, epsilon: float, ell: int) -> float:
    """``b_l(eps) = int Ghat(s) cos(s eps sqrt(l(l+1))) ds``."""
    _check_epsilon(epsilon)
    if int(ell) != ell or ell < 0:
        raise DomainError("multipole must be a nonnegative integer")
    return float(transform(kernel, epsilon * math.sqrt(ell * (ell + 1.0)))[0])


def _check_epsilon(epsilon: float) -> None:
    if not 0 < epsilon < math.pi:
        raise DomainError(f"epsilon must lie in (0, pi), got {epsilon}")


@dataclass(frozen=True, eq=False)
class BumpProfile:
    """Coefficients ``b[0..l_max]`` of the bump of radius ``epsilon``."""

    kernel: SmoothingKernel
    epsilon: float
    l_max: int
    b: np.ndarray

    @property
    def kappa(self) -> np.ndarray:
        """``kappa_l0 = sqrt((2l+1)/(4 pi)) b_l``; all other orders vanish."""
        ell = np.arange(self.l_max + 1)
        return np.sqrt((2 * ell + 1) / (4 * math.pi)) * self.b

    def weights(self, include_monopole: bool = False) -> np.ndarray:
        ell = np.arange(self.l_max + 1)
        w = self.b * (2 * ell + 1) / (4 * math.pi)
        if not include_monopole:
            w = w.copy()
            w[0] = 0.0
        return w

    def tail_bound(self) -> float:
        """Bound on the omitted ``l > l_max`` part of the series at any angle.

        Integrating by parts ``2m`` times, the last step against the jumps of
        the piecewise constant derivative, gives ``|b_l| <= V / (eps^2 l(l+1))^m``
        with ``V`` that total variation; summing against ``(2l+1)/(4 pi)``
        is dominated by the integral from ``l_max``.
        """
        m = self.kernel.convolution_order
        L = float(self.l_max)
        v = self.kernel.jump_variation()
        return v / (4 * math.pi * self.epsilon ** (2 * m)) * 2.0 * L ** (2 - 2 * m) / (2 * m - 2) * (1 + 1 / L)


def make_profile(epsilon: float, l_max: int, kernel: SmoothingKernel | None = None) -> BumpProfile:
    """Compute ``b_0 .. b_{l_max}`` for radius ``epsilon``."""
    _check_epsilon(epsilon)
    if int(l_max) != l_max or l_max < 1:
        raise DomainError("l_max must be a positive integer")
    kernel = kernel or SmoothingKernel()
    ell = np.arange(int(l_max) + 1, dtype=float)
    b = transform(kernel, epsilon * np.sqrt(ell * (ell + 1.0)))
    b.setflags(write=False)
    return BumpProfile(kernel, float(epsilon), int(l_max), b)


def delta_eval(profile: BumpProfile, theta, include_monopole: bool = False) -> SeriesValue:
    """``delta_eps(theta) = sum_{l>=1} b_l (2l+1)/(4 pi) P_l(cos theta)`` truncated at ``l_max``."""
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0) or np.any(th > math.pi):
        raise DomainError("theta must lie in [0, pi]")
    value = legendre_series(profile.weights(include_monopole), np.cos(th))
    value = float(value) if value.ndim == 0 else value
    return SeriesValue(value, profile.tail_bound(), profile.l_max)


def delta_at_center(profile: BumpProfile) -> float:
    """``delta_eps(0) = sum_{l>=1} b_l (2l+1)/(4 pi)``."""
    return float(np.sum(profile.weights()))


def c3_reference(kernel: SmoothingKernel) -> float:
    """``(2 pi)^{-1} int_0^inf B(w) w dw`` where ``B`` is the kernel transform.

    This is the constant with ``delta_eps(0) ~ c3 / eps^2`` under the
    operator normalization of ``b_l``. Computed by quadrature of the closed
    form transform, independently of any Legendre series.
    """
    def f(w):
        return float(transform_closed_form(kernel, w)) * w

    total = 0.0
    period = 2 * math.pi / kernel.width
    edges = [k * period for k in range(0, 401)]
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12)[0]
    # beyond the last edge sin^(2m) is replaced by its mean C(2m, m) / 4^m
    m = kernel.convolution_order
    a = kernel.width
    mean = math.comb(2 * m, m) / 4 ** m
    tail = a ** m * (2 / a) ** (2 * m) * mean * edges[-1] ** (2 - 2 * m) / (2 * m - 2)
    return (total + tail) / (2 * math.pi)


@dataclass(frozen=True)
class C3Report:
    epsilon: np.ndarray
    delta0: np.ndarray
    scaled: np.ndarray
    reference: float
    ratios: np.ndarray
    estimate: ConstantEstimate


def c3_check(kernel: SmoothingKernel, epsilon_grid, l_max: int = 4096) -> C3Report:
    """Compare ``eps^2 delta_eps(0)`` with the integral constant across ``eps``."""
    eps = np.asarray(epsilon_grid, dtype=float)
    if np.any(eps <= 0) or np.any(eps > 0.2):
        raise DomainError("epsilon grid must lie in (0, 0.2]")
    d0 = np.array([delta_at_center(make_profile(e, l_max, kernel)) for e in eps])
    scaled = d0 * eps ** 2
    ref = c3_reference(kernel)
    cfg = {"convolution_order": kernel.convolution_order, "l_max": int(l_max),
           "epsilon": ",".join(repr(float(e)) for e in eps)}
    est = ConstantEstimate("c3_empirical", float(scaled[np.argmin(eps)]), cfg, (float(eps.min()), float(eps.max())))
    return C3Report(eps, d0, scaled, ref, scaled / ref, est)


def fourier_normalization(kernel: SmoothingKernel, u) -> np.ndarray:
    """Ratio of the operator integral ``int Ghat(s) e^{-isu} ds`` to ``g_closed_form(u)``."""
    if kernel.convolution_order != 2:
        raise DomainError("the closed form G(u) describes the two-fold kernel only")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return transform(kernel, u) / g_closed_form(u)


def spectral_weight_sum(profile: BumpProfile, spec: PowerSpectrum, split: int | None = None):
    """``sum_{l>=1} (2l+1)/(4 pi) b_l^2 / C_l``.

    With ``split = L`` the pair ``(sum_{l<=L}, sum_{l>L})`` is returned.
    """
    if spec.l_max != profile.l_max:
        raise DomainError("profile and spectrum must share l_max")
    ell = np.arange(profile.l_max + 1)
    c = spec.values()
    terms = np.zeros(profile.l_max + 1)
    terms[1:] = (2 * ell[1:] + 1) / (4 * math.pi) * profile.b[1:] ** 2 / c[1:]
    if split is None:
        return float(terms.sum())
    return float(terms[: split + 1].sum()), float(terms[split + 1:].sum())


def decay_constant(profile: BumpProfile, power: int = 2, start: int | None = None) -> float:
    """``sup_{start <= l <= l_max} |b_l| (eps l)**power``; ``start`` defaults to ``ceil(4/eps)``."""
    lo = int(math.ceil(4 / profile.epsilon)) if start is None else int(start)
    ell = np.arange(lo, profile.l_max + 1)
    if ell.size == 0:
        raise DomainError("empty multipole range for the decay scan")
    return float(np.max(np.abs(profile.b[ell]) * (profile.epsilon * ell) ** power))


def bump_estimates(profile: BumpProfile, theta_grid) -> list[ConstantEstimate]:
    """Empirical ``c2, c4, c5`` for one profile."""
    cfg = {"epsilon": profile.epsilon, "l_max": profile.l_max,
           "convolution_order": profile.kernel.convolution_order}
    ell = np.arange(1, profile.l_max + 1)
    vals = np.asarray(delta_eval(profile, theta_grid).value)
    scale = (profile.epsilon, profile.epsilon)
    return [
        ConstantEstimate("c2_empirical", float(profile.epsilon ** 2 * np.max(np.abs(vals))), cfg, scale),
        ConstantEstimate("c4_empirical", float(np.max(np.abs(profile.b[1:]))), cfg, scale),
        ConstantEstimate("c5_empirical", float(np.max(np.abs(profile.kappa[1:]) / np.sqrt(2 * ell + 1))), cfg, scale),
    ]
