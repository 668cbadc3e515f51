"""Sampling and evaluation of isotropic Gaussian fields on the sphere.

A realization is ``T(x) = sum_{l=1}^{l_max} sum_m a_lm Y_lm(x)`` with
independent coefficients of variance ``C_l`` and the real-field symmetry
``a_{l,-m} = (-1)**m conj(a_lm)``.
"""
from __future__ import annotations

import csv
import math
import warnings
import zlib
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConsistencyError, DivergenceWarning, DomainError
from .geometry import SpherePoint, angles, as_vectors
from .records import SeriesValue
from .special import alf_rows, legendre_series
from .spectra import PowerSpectrum, derivative_factors, power_tail_sum

IMAG_TOLERANCE = 1e-9


def substream(seed: int, replicate: int, name: str = "coefficients") -> np.random.Generator:
    """Independent generator for one ``(seed, replicate, name)`` triple.

    The stream depends only on these three values, so results do not depend
    on which worker draws them or in what order.
    """
    if int(seed) != seed or seed < 0:
        raise DomainError("seed must be a nonnegative integer")
    key = (int(replicate), zlib.crc32(name.encode()))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


@dataclass(frozen=True, eq=False)
class HarmonicCoefficients:
    """Coefficients ``a[l, l_max + m]`` for ``0 <= l <= l_max``, ``-l <= m <= l``.

    Entries with ``|m| > l`` and the monopole row are zero.
    """

    l_max: int
    a: np.ndarray

    def __post_init__(self):
        arr = np.array(self.a, dtype=complex)
        if arr.shape != (self.l_max + 1, 2 * self.l_max + 1):
            raise DomainError(f"coefficient array must have shape {(self.l_max + 1, 2 * self.l_max + 1)}")
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @classmethod
    def from_nonnegative(cls, l_max: int, pos: np.ndarray) -> "HarmonicCoefficients":
        """Build from ``pos[l, m]``, ``m >= 0``, filling ``m < 0`` by symmetry."""
        pos = np.asarray(pos, dtype=complex)
        full = np.zeros((l_max + 1, 2 * l_max + 1), dtype=complex)
        m = np.arange(l_max + 1)
        full[:, l_max:] = pos
        full[:, l_max::-1] = ((-1.0) ** m) * np.conj(pos)
        full[:, l_max] = pos[:, 0].real
        return cls(l_max, full)

    @classmethod
    def zeros(cls, l_max: int) -> "HarmonicCoefficients":
        return cls(l_max, np.zeros((l_max + 1, 2 * l_max + 1), dtype=complex))

    def __getitem__(self, key: tuple[int, int]) -> complex:
        ell, m = key
        if not (0 <= ell <= self.l_max and abs(m) <= ell):
            raise DomainError(f"no coefficient ({ell}, {m}) for l_max={self.l_max}")
        return complex(self.a[ell, self.l_max + m])

    def nonnegative(self) -> np.ndarray:
        """View ``a[l, m]`` for ``m >= 0``."""
        return self.a[:, self.l_max:]

    def __add__(self, other: "HarmonicCoefficients") -> "HarmonicCoefficients":
        if other.l_max != self.l_max:
            raise DomainError("l_max mismatch")
        return HarmonicCoefficients(self.l_max, self.a + other.a)

    def scaled(self, factors: np.ndarray) -> "HarmonicCoefficients":
        """Multiply row ``l`` by ``factors[l]``."""
        return HarmonicCoefficients(self.l_max, self.a * np.asarray(factors)[:, None])

    def symmetry_defect(self) -> float:
        """Largest violation of ``a_{l,-m} = (-1)**m conj(a_lm)``."""
        L = self.l_max
        m = np.arange(L + 1)
        pos = self.a[:, L:]
        neg = self.a[:, L::-1]
        return float(np.max(np.abs(neg - (-1.0) ** m * np.conj(pos)), initial=0.0))

    def to_rows(self) -> list[tuple[int, int, float, float]]:
        rows = []
        for ell in range(1, self.l_max + 1):
            for m in range(-ell, ell + 1):
                v = self.a[ell, self.l_max + m]
                rows.append((ell, m, float(v.real), float(v.imag)))
        return rows

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ell", "m", "re", "im"])
            for ell, m, re, im in self.to_rows():
                w.writerow([ell, m, repr(re), repr(im)])

    @classmethod
    def read_csv(cls, path) -> "HarmonicCoefficients":
        with open(path, newline="") as fh:
            rows = [r for r in csv.DictReader(fh)]
        l_max = max(int(r["ell"]) for r in rows)
        arr = np.zeros((l_max + 1, 2 * l_max + 1), dtype=complex)
        for r in rows:
            arr[int(r["ell"]), l_max + int(r["m"])] = complex(float(r["re"]), float(r["im"]))
        return cls(l_max, arr)


@lru_cache(maxsize=16)
def _sampling_layout(l_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index arrays mapping one flat normal draw onto ``(l, m >= 0)`` slots.

    Per multipole the draw holds ``[z_0, re_1, im_1, ..., re_l, im_l]``, with
    multipoles in ascending order.
    """
    ells, ms, offsets = [], [], []
    for ell in range(1, l_max + 1):
        base = ell * ell - 1
        ells.append(np.full(ell + 1, ell))
        ms.append(np.arange(ell + 1))
        offsets.append(base + np.concatenate([[0], 2 * np.arange(1, ell + 1) - 1]))
    return np.concatenate(ells), np.concatenate(ms), np.concatenate(offsets)


def sample_coefficients(spec: PowerSpectrum, rng: np.random.Generator) -> HarmonicCoefficients:
    """Draw coefficients with ``E|a_lm|^2 = C_l`` and the real-field symmetry.

    ``a_l0`` is real normal with variance ``C_l``; for ``m > 0`` the real and
    imaginary parts are independent with variance ``C_l / 2`` each.
    """
    L = spec.l_max
    z = rng.standard_normal((L + 1) ** 2 - 1)
    ell, m, off = _sampling_layout(L)
    c = spec.values()
    re = z[off]
    im = np.where(m > 0, z[np.minimum(off + 1, z.size - 1)], 0.0)
    scale = np.sqrt(np.where(m > 0, c[ell] / 2.0, c[ell]))
    pos = np.zeros((L + 1, L + 1), dtype=complex)
    pos[ell, m] = scale * (re + 1j * im)
    return HarmonicCoefficients.from_nonnegative(L, pos)


@dataclass(frozen=True, eq=False)
class FieldRealization:
    """One sampled field: coefficients plus the spectrum and stream identifiers."""

    coefficients: HarmonicCoefficients
    spectrum: PowerSpectrum | None
    seed: int | None = None
    replicate: int | None = None
    derivative_order: int = 0
    divergent: bool = False
    row_scaling: np.ndarray | None = None

    @property
    def l_max(self) -> int:
        return self.coefficients.l_max

    def implied_spectrum(self) -> np.ndarray:
        """``E|a_lm|^2`` for ``l = 0..l_max``: the sampling spectrum times the
        square of every row scaling applied since sampling."""
        if self.spectrum is None:
            raise DomainError("realization carries no spectrum")
        values = self.spectrum.values()
        if self.row_scaling is None:
            return values
        return values * self.row_scaling ** 2


def realize(spec: PowerSpectrum, seed: int, replicate: int = 0) -> FieldRealization:
    """Sample the realization attached to ``(seed, replicate)``."""
    coeffs = sample_coefficients(spec, substream(seed, replicate))
    return FieldRealization(coeffs, spec, seed, replicate)


def _coefficients_of(obj) -> HarmonicCoefficients:
    return obj.coefficients if isinstance(obj, FieldRealization) else obj


def _bound_scale(coeffs: HarmonicCoefficients) -> float:
    """Upper bound on ``sup |T|`` from the addition theorem and Cauchy-Schwarz."""
    ell = np.arange(coeffs.l_max + 1)
    norms = np.sqrt(np.sum(np.abs(coeffs.a) ** 2, axis=1))
    return float(np.sum(norms * np.sqrt((2 * ell + 1) / (4 * math.pi))))


def longitude_coefficients(coeffs: HarmonicCoefficients, theta) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients in longitude on the rings ``theta``.

    Returns ``(F_pos, F_neg)`` of shape ``(l_max + 1, n)`` with
    ``T(theta, phi) = sum_{m>=0} F_pos[m] e^{i m phi} + sum_{m>=1} F_neg[m] e^{-i m phi}``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    L = coeffs.l_max
    f_pos = np.zeros((L + 1, theta.size), dtype=complex)
    f_neg = np.zeros((L + 1, theta.size), dtype=complex)
    a = coeffs.a
    for ell, lam in alf_rows(L, theta):
        if ell == 0:
            continue
        pos = a[ell, L: L + ell + 1]
        neg = a[ell, L - ell: L + 1][::-1]
        sign = (-1.0) ** np.arange(ell + 1)
        f_pos[: ell + 1] += pos[:, None] * lam
        f_neg[1: ell + 1] += (neg[1:] * sign[1:])[:, None] * lam[1:]
    return f_pos, f_neg


def _check_imag(values: np.ndarray, coeffs: HarmonicCoefficients) -> np.ndarray:
    resid = float(np.max(np.abs(values.imag), initial=0.0))
    if resid > IMAG_TOLERANCE * max(_bound_scale(coeffs), 1e-300):
        raise ConsistencyError(f"imaginary residual {resid:.3g} signals a symmetry violation")
    return values.real


def evaluate(realization, points, chunk: int = 256) -> np.ndarray:
    """Evaluate the field at ``points`` (``SpherePoint`` sequence or ``(n, 3)`` array)."""
    coeffs = _coefficients_of(realization)
    vec = as_vectors(points)
    theta, phi = angles(vec)
    out = np.empty(theta.size, dtype=complex)
    for start in range(0, theta.size, chunk):
        sl = slice(start, start + chunk)
        f_pos, f_neg = longitude_coefficients(coeffs, theta[sl])
        m = np.arange(coeffs.l_max + 1)
        e = np.exp(1j * phi[sl][None, :] * m[:, None])
        out[sl] = np.sum(f_pos * e, axis=0) + np.sum(f_neg[1:] * np.conj(e[1:]), axis=0)
    return _check_imag(out, coeffs)


class RingSynthesizer:
    """Evaluate a realization at many longitudes on a few colatitude rings.

    The associated Legendre sums are done once per ring; each longitude then
    costs ``O(l_max)``.
    """

    def __init__(self, realization, colatitudes: Sequence[float]):
        self.coefficients = _coefficients_of(realization)
        self.colatitudes = np.atleast_1d(np.asarray(colatitudes, dtype=float))
        self.f_pos, self.f_neg = longitude_coefficients(self.coefficients, self.colatitudes)

    def evaluate(self, ring: int, phi, chunk: int = 1024) -> np.ndarray:
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        out = np.empty(phi.size, dtype=complex)
        m = np.arange(self.coefficients.l_max + 1)
        fp = self.f_pos[:, ring]
        fn = self.f_neg[1:, ring]
        for start in range(0, phi.size, chunk):
            sl = slice(start, start + chunk)
            e = np.exp(1j * np.outer(phi[sl], m))
            out[sl] = e @ fp + np.conj(e[:, 1:]) @ fn
        return _check_imag(out, self.coefficients)


class HarmonicBasis:
    """Precomputed real basis at fixed points for evaluating many realizations.

    ``values(pos)`` evaluates coefficient arrays ``pos[..., l, m]`` (``m >= 0``)
    at the stored points using ``T = sum_l [a_l0 lam_l0 + 2 Re sum_{m>0} a_lm
    lam_lm e^{i m phi}]``, which is the spectral sum under the real-field
    symmetry.
    """

    def __init__(self, l_max: int, points):
        vec = as_vectors(points)
        theta, phi = angles(vec)
        self.l_max = l_max
        basis = np.zeros((theta.size, l_max + 1, l_max + 1), dtype=complex)
        m = np.arange(l_max + 1)
        phase = np.exp(1j * np.outer(phi, m))
        weight = np.where(m > 0, 2.0, 1.0)
        for ell, lam in alf_rows(l_max, theta):
            basis[:, ell, : ell + 1] = (lam.T * phase[:, : ell + 1]) * weight[: ell + 1]
        self.basis = basis.reshape(theta.size, -1)

    def values(self, pos: np.ndarray) -> np.ndarray:
        flat = np.asarray(pos).reshape(pos.shape[:-2] + (-1,))
        return np.real(flat @ self.basis.T)


def covariance_from_dot(spec: PowerSpectrum, dot) -> np.ndarray:
    """``sum_l (2l+1)/(4 pi) C_l P_l(dot)`` vectorized over ``dot``."""
    ell = np.arange(spec.l_max + 1)
    weights = (2 * ell + 1) / (4 * math.pi) * spec.values()
    return legendre_series(weights, np.clip(np.asarray(dot, dtype=float), -1.0, 1.0))


def covariance_tail_bound(spec: PowerSpectrum) -> float:
    return spec.c0 * power_tail_sum(spec.alpha, spec.l_max)


def covariance(spec: PowerSpectrum, x: SpherePoint, y: SpherePoint) -> SeriesValue:
    """Schoenberg series ``E T(x) T(y)`` truncated at ``l_max`` with its tail bound."""
    dot = float(np.dot(x.unit_vector, y.unit_vector))
    value = float(covariance_from_dot(spec, dot))
    return SeriesValue(value, covariance_tail_bound(spec), spec.l_max)


def covariance_matrix(spec: PowerSpectrum, points) -> np.ndarray:
    """Covariance matrix of the field at ``points`` (any leading batch shape ``(..., n, 3)``)."""
    vec = np.asarray(as_vectors(points) if not isinstance(points, np.ndarray) else points, dtype=float)
    dots = np.einsum("...id,...jd->...ij", vec, vec)
    cov = covariance_from_dot(spec, dots)
    return 0.5 * (cov + np.swapaxes(cov, -1, -2))


def pseudo_diff(realization: FieldRealization, k: int) -> FieldRealization:
    """Apply ``(1 - Laplacian)**(k/2)``: scale row ``l`` by ``(1 + l(l+1))**(k/2)``.

    If the untruncated result would have infinite variance
    (``alpha <= 2 + 2k``) a ``DivergenceWarning`` is emitted and the result
    is flagged ``divergent``; the truncated coefficients remain usable.
    """
    if int(k) != k or k < 1:
        raise DomainError("derivative order must be a positive integer")
    total_order = realization.derivative_order + int(k)
    divergent = realization.divergent
    if realization.spectrum is not None and not realization.spectrum.alpha > 2 + 2 * total_order:
        divergent = True
        warnings.warn(f"derivative order {total_order} has infinite variance without truncation",
                      DivergenceWarning, stacklevel=2)
    factors = derivative_factors(realization.l_max, k / 2.0)
    scaling = factors if realization.row_scaling is None else realization.row_scaling * factors
    return replace(realization, coefficients=realization.coefficients.scaled(factors),
                   derivative_order=total_order, divergent=divergent, row_scaling=scaling)


def write_values_csv(path, theta: np.ndarray, phi: np.ndarray, values: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "phi", "value"])
        for t, p, v in zip(theta, phi, values):
            w.writerow([repr(float(t)), repr(float(p)), repr(float(v))])
