"""Special functions: Legendre polynomials, spherical harmonics, polylogarithms.

Besides the textbook pieces this module provides a resummed evaluation of
``S_s(theta) = sum_{l>=1} l**(-s) P_l(cos theta)``. The Mehler-Dirichlet
integral turns the Legendre series into an integral of the cosine series
``sum l**(-s) cos((l+1/2) psi) = Re[exp(i psi/2) Li_s(exp(i psi))]``, and the
small-argument expansion of ``Li_s`` isolates the singular part that governs
``zeta(s) - S_s(theta)`` as ``theta -> 0``. This gives the untruncated value,
which truncated sums cannot approach at small ``theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy import integrate, special as sp

from .errors import BudgetError, ConvergenceError, DomainError, FitError
from .geometry import SpherePoint
from .records import SeriesValue

# Below this |psi| the polylog is evaluated from its expansion about z = 1.
POLYLOG_CROSSOVER = 0.5


@dataclass(frozen=True)
class AccuracyPolicy:
    """Tolerances and budgets shared by the numerical routines."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_terms: int = 2_000_000
    quadrature_nodes: int = 64

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_terms < 1 or self.quadrature_nodes < 1:
            raise DomainError("max_terms and quadrature_nodes must be positive")


DEFAULT_POLICY = AccuracyPolicy()


def _check_t(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-14) or np.any(np.isnan(arr)):
        raise DomainError("Legendre argument must lie in [-1, 1]")
    return np.clip(arr, -1.0, 1.0)


def _check_degree(ell, minimum=0) -> int:
    if int(ell) != ell or ell < minimum:
        raise DomainError(f"degree must be an integer >= {minimum}, got {ell}")
    return int(ell)


# ---------------------------------------------------------------------------
# Legendre polynomials


def legendre_p(ell: int, t):
    """``P_l(t)`` by the three-term recurrence."""
    ell = _check_degree(ell)
    t = _check_t(t)
    p_prev, p = np.ones_like(t), t.copy()
    if ell == 0:
        p = p_prev
    for k in range(2, ell + 1):
        p_prev, p = p, ((2 * k - 1) * t * p - (k - 1) * p_prev) / k
    return float(p) if p.ndim == 0 else p


def legendre_batch(l_max: int, t) -> np.ndarray:
    """``P_0 .. P_{l_max}`` at ``t``; shape ``(l_max + 1,) + shape(t)``."""
    l_max = _check_degree(l_max)
    t = _check_t(t)
    out = np.empty((l_max + 1,) + t.shape)
    out[0] = 1.0
    if l_max >= 1:
        out[1] = t
    for k in range(2, l_max + 1):
        out[k] = ((2 * k - 1) * t * out[k - 1] - (k - 1) * out[k - 2]) / k
    return out


def legendre_series(coeffs: Sequence[float], t) -> np.ndarray:
    """``sum_l coeffs[l] P_l(t)`` without storing the polynomial table."""
    c = np.asarray(coeffs, dtype=float)
    t = _check_t(t)
    acc = c[0] * np.ones_like(t)
    if c.size == 1:
        return acc
    p_prev, p = np.ones_like(t), t.copy()
    acc = acc + c[1] * p
    for k in range(2, c.size):
        p_prev, p = p, ((2 * k - 1) * t * p - (k - 1) * p_prev) / k
        acc += c[k] * p
    return acc


def legendre_deficit_series(coeffs: Sequence[float], theta) -> np.ndarray:
    """``sum_l coeffs[l] (1 - P_l(cos theta))`` with full relative accuracy.

    Uses the recurrence for ``D_l = 1 - P_l`` driven by ``1 - cos theta =
    2 sin^2(theta/2)``, so nothing cancels when ``theta`` is tiny.
    """
    c = np.asarray(coeffs, dtype=float)
    theta = np.asarray(theta, dtype=float)
    w = 2.0 * np.sin(theta / 2.0) ** 2
    t = np.cos(theta)
    acc = np.zeros_like(theta)
    if c.size < 2:
        return acc
    d_prev, d = np.zeros_like(theta), w.copy()
    acc = acc + c[1] * d
    for k in range(2, c.size):
        d_prev, d = d, ((2 * k - 1) * (w + t * d) - (k - 1) * d_prev) / k
        acc += c[k] * d
    return acc


# ---------------------------------------------------------------------------
# Spherical harmonics


def alf_rows(l_max: int, theta) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(l, lam)`` with ``lam[m, p] = lambda_lm(theta_p)`` for ``0 <= m <= l``.

    ``lambda_lm`` is the orthonormal associated Legendre function including
    the Condon-Shortley phase, so ``Y_lm = lambda_lm(theta) exp(i m phi)``.
    Sectoral values ``sin(theta)**m`` underflow for large ``m``; each column
    carries a separate log-scale until its mantissa is back in range.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    x = np.cos(theta)
    y = np.sin(theta)
    n = theta.size
    with np.errstate(divide="ignore"):
        logy = np.log(y)
    cur = np.zeros((l_max + 1, n))
    prev = np.zeros((l_max + 1, n))
    logscale = np.zeros((l_max + 1, n))
    scaled = np.zeros(l_max + 1, dtype=bool)
    diag_log = np.full(n, -0.5 * math.log(4 * math.pi))
    diag_sign = 1.0
    cur[0] = math.exp(diag_log[0])
    yield 0, cur[:1].copy()
    big = 1e200
    for ell in range(1, l_max + 1):
        new = np.empty((ell + 1, n))
        if ell >= 2:
            m = np.arange(ell - 1, dtype=float)
            a = np.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
            b = np.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
            new[: ell - 1] = a[:, None] * (x * cur[: ell - 1] - b[:, None] * prev[: ell - 1])
        new[ell - 1] = math.sqrt(2 * ell + 1) * x * cur[ell - 1]
        diag_log = diag_log + 0.5 * math.log((2 * ell + 1) / (2 * ell)) + logy
        diag_sign = -diag_sign
        shift = np.where(np.isfinite(diag_log) & (diag_log < -600.0), diag_log, 0.0)
        logscale[ell] = shift
        new[ell] = diag_sign * np.exp(diag_log - shift)
        if np.any(shift != 0.0):
            scaled[ell] = True
        prev[:ell] = cur[:ell]
        cur[: ell + 1] = new
        rows = np.flatnonzero(scaled[: ell + 1])
        if rows.size:
            block = cur[rows]
            hit = np.abs(block) > big
            if hit.any():
                r, p = np.nonzero(hit)
                cur[rows[r], p] /= big
                prev[rows[r], p] /= big
                logscale[rows[r], p] += math.log(big)
            out = cur[: ell + 1].copy()
            with np.errstate(divide="ignore", over="ignore"):
                mag = np.log(np.abs(out[rows])) + logscale[rows]
                out[rows] = np.sign(out[rows]) * np.exp(mag)
            yield ell, out
        else:
            yield ell, cur[: ell + 1].copy()


def normalized_alf(l_max: int, theta) -> np.ndarray:
    """Full table ``lam[l, m, p]`` (zero for ``m > l``); for modest ``l_max``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.zeros((l_max + 1, l_max + 1, theta.size))
    for ell, row in alf_rows(l_max, theta):
        out[ell, : ell + 1] = row
    return out


def spherical_harmonic(ell: int, m: int, point: SpherePoint) -> complex:
    """Orthonormal ``Y_lm`` at ``point`` (Condon-Shortley phase).

    Satisfies the addition theorem ``sum_m conj(Y_lm(x)) Y_lm(y) =
    (2l+1)/(4 pi) P_l(<x, y>)``.
    """
    ell = _check_degree(ell)
    if int(m) != m or abs(m) > ell:
        raise DomainError(f"order m={m} must satisfy |m| <= l={ell}")
    m = int(m)
    lam = None
    for deg, row in alf_rows(ell, point.colatitude):
        if deg == ell:
            lam = row[abs(m), 0]
    value = lam * complex(math.cos(abs(m) * point.longitude), math.sin(abs(m) * point.longitude))
    if m < 0:
        value = (-1) ** m * value.conjugate()
    return complex(value)


# ---------------------------------------------------------------------------
# Mehler-Dirichlet


def mehler_dirichlet_p(ell: int, theta: float, policy: AccuracyPolicy = DEFAULT_POLICY) -> float:
    """``P_l(cos theta)`` from the Mehler-Dirichlet integral.

    The substitution ``sin(psi/2) = sin(theta/2) sin(u)`` removes the
    inverse-square-root endpoint singularity; the transformed integrand is
    smooth and periodic in ``u``, so the midpoint rule (Gauss-Chebyshev in
    ``sin u``) converges geometrically. The node count is doubled until two
    successive estimates agree. Angles beyond ``pi/2`` are reflected through
    ``P_l(-t) = (-1)**l P_l(t)`` to keep the integrand well conditioned.
    """
    ell = _check_degree(ell)
    theta = float(theta)
    if not 0.0 <= theta <= math.pi:
        raise DomainError("theta must lie in [0, pi]")
    if theta == 0.0:
        return 1.0
    sign = 1.0
    if theta > math.pi / 2:
        theta = math.pi - theta
        sign = -1.0 if ell % 2 else 1.0
    sigma = math.sin(theta / 2)
    nodes = max(policy.quadrature_nodes, int(math.ceil(2 * (2 * ell + 1) * sigma)) + 32)

    def estimate(n: int) -> float:
        u = (np.arange(n) + 0.5) * math.pi / n
        su = sigma * np.sin(u)
        return float(np.mean(np.cos((2 * ell + 1) * np.arcsin(su)) / np.sqrt(1.0 - su * su)))

    previous = estimate(nodes)
    for _ in range(12):
        nodes *= 2
        current = estimate(nodes)
        if abs(current - previous) <= max(policy.abs_tol, policy.rel_tol * abs(current)):
            return sign * current
        previous = current
    raise ConvergenceError(f"Mehler-Dirichlet quadrature did not settle for l={ell}")


# ---------------------------------------------------------------------------
# Zeta, harmonic numbers, Beta integrals


@lru_cache(maxsize=None)
def _bernoulli_even(count: int) -> tuple[float, ...]:
    """``B_2, B_4, ..., B_{2 count}`` as floats (exact rational recurrence)."""
    b = [Fraction(1)]
    for m in range(1, 2 * count + 1):
        acc = Fraction(0)
        for k in range(m):
            acc += math.comb(m + 1, k) * b[k]
        b.append(-acc / (m + 1))
    return tuple(float(b[2 * j]) for j in range(1, count + 1))


def _zeta_em(s: float, n: int = 20, terms: int = 16) -> float:
    """Euler-Maclaurin evaluation of ``zeta(s)``, accurate for ``s > -1``, ``s != 1``."""
    k = np.arange(1, n, dtype=float)
    head = math.fsum((k ** (-s)).tolist())
    total = head + n ** (1.0 - s) / (s - 1.0) + 0.5 * n ** (-s)
    bern = _bernoulli_even(terms)
    rising = s  # (s)_{2j-1}
    fact = 2.0  # (2j)!
    power = n ** (-s - 1.0)
    for j in range(1, terms + 1):
        term = bern[j - 1] / fact * rising * power
        total += term
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
        power /= n * n
    return total


def zeta_continued(s: float) -> float:
    """``zeta(s)`` for any real ``s != 1``.

    Needed for the coefficients ``zeta(s - k)`` of the polylog expansion. The
    functional equation maps ``s < 0`` to ``1 - s > 1``.
    """
    s = float(s)
    if s == 1.0:
        raise DomainError("zeta has a pole at s = 1")
    if s >= -0.5:
        return _zeta_em(s)
    if s == math.floor(s) and int(s) % 2 == 0:
        return 0.0
    return (2.0 ** s * math.pi ** (s - 1.0) * math.sin(math.pi * s / 2.0)
            * math.gamma(1.0 - s) * _zeta_em(1.0 - s))


def riemann_zeta(s: float) -> float:
    """Riemann zeta function for real ``s > 1``."""
    if not s > 1:
        raise DomainError(f"riemann_zeta requires s > 1, got {s}")
    return _zeta_em(float(s))


def harmonic_number(n: int) -> Fraction:
    """``H_n = sum_{j=1}^n 1/j`` as an exact fraction; ``H_0 = 0``."""
    if int(n) != n or n < 0:
        raise DomainError("harmonic_number requires a nonnegative integer")
    return sum((Fraction(1, j) for j in range(1, int(n) + 1)), Fraction(0))


def incomplete_beta(y: float, a: float, b: float) -> float:
    """Non-regularized incomplete Beta ``int_0^y x**(a-1) (1-x)**(b-1) dx``."""
    if not 0.0 <= y <= 1.0:
        raise DomainError("incomplete_beta requires y in [0, 1]")
    if not (a > 0 and b > 0):
        raise DomainError("incomplete_beta requires a, b > 0")
    return float(sp.betainc(a, b, y) * sp.beta(a, b))


def b_ln(a: float, b: float) -> float:
    """``int_0^1 x**(a-1) ln(x) (1-x)**(b-1) dx`` by algebraic-log weighted quadrature."""
    if not (a > 0 and b > 0):
        raise DomainError("b_ln requires a, b > 0")
    value, err = integrate.quad(lambda x: 1.0, 0.0, 1.0, weight="alg-loga",
                                wvar=(a - 1.0, b - 1.0), epsabs=0.0, epsrel=1e-13, limit=200)
    if not err <= 1e-9 * max(1.0, abs(value)):
        raise ConvergenceError(f"b_ln quadrature error estimate {err:g} too large")
    return float(value)


# ---------------------------------------------------------------------------
# Polylogarithm on the unit circle


def _is_integer(s: float) -> bool:
    return float(s).is_integer()


@lru_cache(maxsize=256)
def _expansion_coeffs(s: float, order: int) -> tuple[tuple[float, ...], float | None]:
    """``zeta(s - k)/k!`` for ``k = 0..order`` (``k = n-1`` zeroed for integer ``s = n``)."""
    coeffs = []
    fact = 1.0
    for k in range(order + 1):
        if k:
            fact *= k
        if _is_integer(s) and k == int(s) - 1:
            coeffs.append(0.0)
        else:
            coeffs.append(zeta_continued(s - k) / fact)
    gamma_term = None if _is_integer(s) else math.gamma(1.0 - s)
    return tuple(coeffs), gamma_term


def _expansion_order(s: float, psi_max: float, tol: float = 1e-17) -> int:
    """Smallest order whose dropped terms fall below ``tol`` (ratio test, radius 2 pi)."""
    ratio = psi_max / (2 * math.pi)
    if ratio >= 0.95:
        raise DomainError("expansion about z = 1 needs |psi| < 2 pi")
    order = 8
    while order < 160:
        # |zeta(s-k)/k!| ~ 2 (2 pi)^(s-k-1) Gamma(k+1-s)/k! for large k
        if 2.0 * ratio ** order * (order + 1.0) ** (1.0 - s) / (1.0 - ratio) < tol:
            return order
        order += 4
    raise ConvergenceError("polylog expansion order exceeds the supported range")


def polylog_expansion(s: float, psi, order: int | None = None) -> np.ndarray | complex:
    """``Li_s(exp(i psi))`` from its expansion about ``z = 1``.

    Non-integer ``s``: ``Gamma(1-s) (-i psi)**(s-1) + sum_k zeta(s-k) (i psi)**k / k!``.
    Integer ``s = n``: the ``k = n-1`` term is replaced by
    ``(i psi)**(n-1)/(n-1)! (H_{n-1} - ln(-i psi))``.
    The series converges for ``0 < |psi| < 2 pi``.
    """
    if not s > 1:
        raise DomainError("polylog_expansion requires s > 1")
    psi_arr = np.asarray(psi, dtype=float)
    if np.any(psi_arr == 0) or np.any(np.abs(psi_arr) >= 2 * math.pi):
        raise DomainError("polylog_expansion requires 0 < |psi| < 2 pi")
    if order is None:
        order = _expansion_order(s, float(np.max(np.abs(psi_arr))))
    coeffs, gamma_term = _expansion_coeffs(float(s), int(order))
    x = 1j * psi_arr
    total = np.polyval(np.asarray(coeffs[::-1], dtype=complex), x)
    if gamma_term is not None:
        total = total + gamma_term * (-x) ** (s - 1.0)
    else:
        n = int(s)
        h = float(harmonic_number(n - 1))
        total = total + x ** (n - 1) / math.factorial(n - 1) * (h - np.log(-x))
    return complex(total) if total.ndim == 0 else total


def _polylog_direct(s: float, psi: np.ndarray, head: int = 64, nodes: int = 48) -> tuple[np.ndarray, float]:
    """Partial sum plus a Gauss-Laguerre evaluation of the tail.

    ``sum_{k>=N} z**k k**(-s) = z**N / (Gamma(s) N**s) int_0^inf u**(s-1) e**(-u)
    / (1 - z e**(-u/N)) du``; the integrand is analytic for ``z`` away from 1.
    Returns values and an error estimate from a second node count.
    """
    z = np.exp(1j * psi)
    k = np.arange(1, head, dtype=float)
    partial = (z[:, None] ** k[None, :] * k[None, :] ** (-s)).sum(axis=1)

    def tail(n_nodes: int) -> np.ndarray:
        u, w = sp.roots_genlaguerre(n_nodes, s - 1.0)
        integrand = 1.0 / (1.0 - z[:, None] * np.exp(-u[None, :] / head))
        return z ** head / (math.gamma(s) * head ** s) * (integrand @ w)

    t1 = tail(nodes)
    t2 = tail(nodes + 16)
    err = float(np.max(np.abs(t1 - t2))) if psi.size else 0.0
    return partial + t2, err


def polylog(s: float, psi, policy: AccuracyPolicy = DEFAULT_POLICY):
    """``Li_s(exp(i psi))`` for real ``s > 1``, vectorized over ``psi``.

    Small ``|psi|`` (mod ``2 pi``) uses the expansion about ``z = 1``; other
    angles use a partial sum with an accelerated tail. ``psi = 0`` returns
    ``zeta(s)``.
    """
    if not s > 1:
        raise DomainError(f"polylog requires s > 1, got {s}")
    psi_arr = np.atleast_1d(np.asarray(psi, dtype=float))
    red = np.mod(psi_arr + math.pi, 2 * math.pi) - math.pi  # in [-pi, pi)
    out = np.empty(red.shape, dtype=complex)
    zero = red == 0
    out[zero] = riemann_zeta(s)
    near = (~zero) & (np.abs(red) < POLYLOG_CROSSOVER)
    if near.any():
        out[near] = polylog_expansion(s, np.abs(red[near]))
    far = ~(zero | near)
    if far.any():
        vals, err = _polylog_direct(float(s), np.abs(red[far]))
        if err > max(policy.abs_tol, policy.rel_tol * float(np.max(np.abs(vals)))):
            raise ConvergenceError(f"polylog tail estimate {err:g} exceeds tolerance")
        out[far] = vals
    out = np.where(red < 0, np.conj(out), out)
    return complex(out[0]) if np.ndim(psi) == 0 else out.reshape(np.shape(psi))


# ---------------------------------------------------------------------------
# Resummed Legendre power series


def _deficit_small_angle(s: float, theta: float) -> tuple[float, float]:
    """``zeta(s) - sum l**(-s) P_l(cos theta)`` for ``0 < theta <= pi/2``.

    After the Mehler-Dirichlet substitution ``psi(u) = 2 arcsin(sigma sin u)``
    the deficit is ``-(2/pi) int_0^{pi/2} [Re(e^{i psi/2} Li_s(e^{i psi})) -
    zeta(s)] / sqrt(1 - sigma^2 sin^2 u) du``. Using the expansion of ``Li_s``
    the bracket splits into a power series in ``psi`` and a term carrying
    ``psi**(s-1)`` (times ``log psi`` for integer ``s``); the latter is
    integrated with algebraic(-log) weighted quadrature in ``u``.
    """
    sigma = math.sin(theta / 2.0)
    order = _expansion_order(s, math.pi / 2)
    coeffs, gamma_term = _expansion_coeffs(float(s), order)
    poly = np.asarray(coeffs[:0:-1] + (0.0,), dtype=complex)  # drops k = 0
    integer = gamma_term is None
    n = int(s) if integer else 0
    h = float(harmonic_number(n - 1)) if integer else 0.0
    fact = math.factorial(n - 1) if integer else 1.0

    def psi_of(u):
        return 2.0 * math.asin(sigma * math.sin(u))

    def jac(u):
        v = sigma * math.sin(u)
        return 1.0 / math.sqrt(1.0 - v * v)

    def ratio(u):
        return 2.0 * sigma if u == 0.0 else psi_of(u) / u

    def regular(u):
        psi = psi_of(u)
        x = 1j * psi
        val = np.exp(0.5j * psi) * np.polyval(poly, x)
        if integer:
            val += np.exp(0.5j * psi) * x ** (n - 1) / fact * (h + 0.5j * math.pi)
        return -val.real * jac(u)

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    total, err = integrate.quad(regular, 0.0, math.pi / 2, **opts)
    if not integer:
        g = gamma_term

        def singular(u):
            psi = psi_of(u)
            return -g * ratio(u) ** (s - 1.0) * math.cos(psi / 2.0 - math.pi * (s - 1.0) / 2.0) * jac(u)

        val, e = integrate.quad(singular, 0.0, math.pi / 2, weight="alg", wvar=(s - 1.0, 0.0), **opts)
        total += val
        err += e
    else:
        phase = math.pi * (n - 1) / 2.0

        def log_part(u):
            return ratio(u) ** (n - 1) * math.cos(psi_of(u) / 2.0 + phase) / fact * jac(u)

        def smooth_part(u):
            r = ratio(u)
            return u ** (n - 1) * r ** (n - 1) * math.log(r) * math.cos(psi_of(u) / 2.0 + phase) / fact * jac(u)

        val, e = integrate.quad(log_part, 0.0, math.pi / 2, weight="alg-loga", wvar=(n - 1.0, 0.0), **opts)
        val2, e2 = integrate.quad(smooth_part, 0.0, math.pi / 2, **opts)
        total += val + val2
        err += e + e2
    return 2.0 / math.pi * total, 2.0 / math.pi * err


def _sum_large_angle(s: float, theta: float) -> tuple[float, float]:
    """``sum l**(-s) P_l(cos theta)`` for ``pi/2 < theta <= pi`` via reflection."""
    sigma = math.sin((math.pi - theta) / 2.0)

    def integrand(u):
        v = sigma * math.sin(u)
        psi = 2.0 * math.asin(v)
        li = polylog(s, psi + math.pi)
        return (np.exp(0.5j * psi) * li).real / math.sqrt(1.0 - v * v)

    val, err = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=0.0, epsrel=1e-12, limit=200)
    return 2.0 / math.pi * val, 2.0 / math.pi * err


def legendre_power_deficit(s: float, theta: float) -> SeriesValue:
    """Untruncated ``zeta(s) - sum_{l>=1} l**(-s) P_l(cos theta)`` with an error estimate."""
    if not s > 1:
        raise DomainError(f"s must exceed 1, got {s}")
    theta = float(theta)
    if not 0.0 <= theta <= math.pi:
        raise DomainError("theta must lie in [0, pi]")
    if theta == 0.0:
        return SeriesValue(0.0, 0.0)
    if theta <= math.pi / 2:
        value, err = _deficit_small_angle(float(s), theta)
    else:
        total, err = _sum_large_angle(float(s), theta)
        value = riemann_zeta(s) - total
    return SeriesValue(value, err)


def legendre_power_sum(s: float, theta: float) -> SeriesValue:
    """Untruncated ``sum_{l>=1} l**(-s) P_l(cos theta)`` by resummation."""
    d = legendre_power_deficit(s, theta)
    return SeriesValue(riemann_zeta(s) - d.value, d.tail_bound)


def legendre_series_sum(s: float, theta, policy: AccuracyPolicy = DEFAULT_POLICY) -> SeriesValue:
    """Direct partial sum ``sum_{l=1}^L l**(-s) P_l(cos theta)``.

    ``L`` is the smallest cutoff with ``sum_{l>L} l**(-s) <= policy.abs_tol``;
    the reported bound is that crude tail estimate. Raises ``BudgetError``
    when ``L`` would exceed ``policy.max_terms``.
    """
    if not s > 1:
        raise DomainError(f"s must exceed 1, got {s}")
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(theta_arr <= 0) or np.any(theta_arr > math.pi):
        raise DomainError("theta must lie in (0, pi]")
    needed = math.ceil((policy.abs_tol * (s - 1.0)) ** (-1.0 / (s - 1.0)))
    if needed > policy.max_terms:
        raise BudgetError(f"{needed} terms needed for tail {policy.abs_tol:g}, budget {policy.max_terms}")
    L = max(needed, 1)
    coeffs = np.zeros(L + 1)
    coeffs[1:] = np.arange(1, L + 1, dtype=float) ** (-s)
    value = legendre_series(coeffs, np.cos(theta_arr))
    bound = L ** (1.0 - s) / (s - 1.0)
    return SeriesValue(float(value) if value.ndim == 0 else value, bound, L)


@dataclass(frozen=True)
class SumPolyReport:
    """Small-angle behaviour of ``zeta(s) - S_s(theta)``.

    ``fitted_slope`` is the least-squares slope of ``log|deficit|`` against
    ``log sin(theta/2)``; for ``s = 3`` it is the slope of
    ``log(|deficit| / |log sin(theta/2)|)`` and ``log_fit`` holds ``(a, b)`` of
    ``deficit / sin^2(theta/2) = a log sin(theta/2) + b``. ``residual`` is the
    RMS log residual, or for ``s = 3`` the largest relative residual of the
    log-corrected fit. ``ratio`` is ``deficit / sin(theta/2)`` for ``s = 2``.
    """

    s: float
    case: str
    theta: np.ndarray
    sums: np.ndarray
    deficit: np.ndarray
    predicted_order: float
    fitted_slope: float
    residual: float
    log_fit: tuple[float, float] | None
    ratio: np.ndarray | None


def sum_poly_case(s: float) -> tuple[str, float]:
    """Label and predicted small-angle order of ``zeta(s) - S_s(theta)``."""
    if 1 < s < 3:
        return ("even" if s == 2 else "less3"), s - 1.0
    if s == 3:
        return "log", 2.0
    if _is_integer(s):
        return ("odd" if int(s) % 2 else "even"), 2.0
    return "great3", 2.0


def sum_poly_asymptotic_check(s: float, theta_grid: Sequence[float], max_residual: float = 0.05) -> SumPolyReport:
    """Fit the small-angle order of ``zeta(s) - sum l**(-s) P_l(cos theta)``."""
    if not s > 1:
        raise DomainError(f"s must exceed 1, got {s}")
    theta = np.sort(np.asarray(theta_grid, dtype=float))
    if theta.size < 8:
        raise DomainError("need at least 8 angles")
    if theta[0] <= 0 or theta[-1] > 0.1:
        raise DomainError("angles must lie in (0, 0.1]")
    if theta[-1] / theta[0] < 10 * (1 - 1e-12):
        raise DomainError("angles must span at least a decade")
    deficit = np.array([legendre_power_deficit(s, t).value for t in theta])
    sums = riemann_zeta(s) - deficit
    case, order = sum_poly_case(s)
    lsig = np.log(np.sin(theta / 2.0))
    ratio = deficit / np.sin(theta / 2.0) if s == 2 else None
    log_fit = None
    if case == "log":
        target = deficit / np.sin(theta / 2.0) ** 2
        design = np.vstack([lsig, np.ones_like(lsig)]).T
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        residual = float(np.max(np.abs(design @ coef - target) / np.abs(target)))
        slope = float(np.polyfit(lsig, np.log(np.abs(deficit) / np.abs(lsig)), 1)[0])
        log_fit = (float(coef[0]), float(coef[1]))
    else:
        y = np.log(np.abs(deficit))
        coef = np.polyfit(lsig, y, 1)
        slope = float(coef[0])
        residual = float(np.sqrt(np.mean((np.polyval(coef, lsig) - y) ** 2)))
    if not residual <= max_residual:
        raise FitError(f"fit residual {residual:.3g} exceeds {max_residual}")
    return SumPolyReport(float(s), case, theta, sums, deficit, order, slope, residual, log_fit, ratio)
