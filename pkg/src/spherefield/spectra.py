"""Angular power spectra with a bounded envelope and the scaling function rho_alpha.

A spectrum is ``C_l = G(l) * l**(-alpha)`` for ``1 <= l <= l_max`` with the
envelope ``G`` confined to ``[1/c0, c0]``. The monopole is excluded throughout.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import DivergenceWarning, DomainError
from .records import SeriesValue

ENVELOPE_KINDS = ("constant", "oscillating", "table")


def abs_log(t):
    """``|log t|`` under the convention ``log x = ln(x v e)`` applied to ``1/t``.

    For small ``t`` this is ``ln(1/t)``; it never drops below 1, so square
    roots and quotients stay well defined near ``t = 1``.
    """
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.maximum(np.abs(np.log(t)), 1.0)


def rho_alpha(alpha: float, t):
    """Evaluate the scaling function rho_alpha.

    ``t**((alpha-2)/2)`` for ``2 < alpha < 4``, ``t * sqrt(|log t|)`` for
    ``alpha == 4`` and ``t`` for ``alpha > 4``. Vectorized over ``t``.
    """
    if not alpha > 2:
        raise DomainError(f"alpha must exceed 2, got {alpha}")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("rho_alpha requires t >= 0")
    if alpha < 4:
        out = arr ** ((alpha - 2.0) / 2.0)
    elif alpha == 4:
        out = np.where(arr > 0, arr * np.sqrt(abs_log(np.where(arr > 0, arr, 1.0))), 0.0)
    else:
        out = arr.copy()
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Envelope:
    """Bounded multiplier ``G(l)`` of a power-law spectrum.

    ``constant``: ``G = value``. ``oscillating``: ``G = value * (1 + amplitude
    * sin(log l))``. ``table``: ``G(l) = table[l - 1]``.
    """

    kind: str = "constant"
    value: float = 1.0
    amplitude: float = 0.5
    table: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ENVELOPE_KINDS:
            raise DomainError(f"unknown envelope kind {self.kind!r}")
        if not self.value > 0:
            raise DomainError("envelope value must be positive")
        if self.kind == "oscillating" and not 0 <= self.amplitude < 1:
            raise DomainError("oscillation amplitude must lie in [0, 1)")
        if self.kind == "table":
            if not self.table:
                raise DomainError("table envelope needs at least one entry")
            if min(self.table) <= 0:
                raise DomainError("table envelope entries must be positive")
            object.__setattr__(self, "table", tuple(float(v) for v in self.table))

    def __call__(self, ell) -> np.ndarray:
        ell = np.asarray(ell)
        if self.kind == "constant":
            return np.full(ell.shape, self.value, dtype=float)
        if self.kind == "oscillating":
            return self.value * (1.0 + self.amplitude * np.sin(np.log(ell.astype(float))))
        if np.any(ell > len(self.table)) or np.any(ell < 1):
            raise DomainError(f"table envelope defined for 1 <= l <= {len(self.table)}")
        return np.asarray(self.table, dtype=float)[ell.astype(int) - 1]

    @property
    def tail_value(self) -> float | None:
        """Constant value of ``G`` beyond any truncation, if it is known."""
        return self.value if self.kind == "constant" else None

    def global_bound(self) -> float | None:
        """A bound ``c0`` valid for every ``l >= 1``, when one is known a priori."""
        if self.kind == "constant":
            return max(self.value, 1.0 / self.value)
        if self.kind == "oscillating":
            hi = self.value * (1.0 + self.amplitude)
            lo = self.value * (1.0 - self.amplitude)
            return max(hi, 1.0 / lo)
        return None


@dataclass(frozen=True)
class PowerSpectrum:
    """Power-law angular power spectrum under a two-sided envelope bound.

    Parameters
    ----------
    alpha : float
        Spectral index, must exceed 2.
    l_max : int
        Truncation multipole.
    envelope : Envelope
        Bounded multiplier, constant 1 by default.
    c0 : float, optional
        Envelope bound. Inferred as the tightest valid value when omitted.
    """

    alpha: float
    l_max: int
    envelope: Envelope = field(default_factory=Envelope)
    c0: float | None = None

    def __post_init__(self):
        if not (isinstance(self.alpha, (int, float, np.floating)) and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be a finite real, got {self.alpha!r}")
        if not self.alpha > 2:
            raise DomainError(f"alpha must exceed 2, got {self.alpha}")
        if int(self.l_max) != self.l_max or self.l_max < 1:
            raise DomainError(f"l_max must be a positive integer, got {self.l_max}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "l_max", int(self.l_max))
        g = self.envelope(np.arange(1, self.l_max + 1))
        observed = max(float(g.max()), 1.0 / float(g.min()))
        if self.c0 is None:
            bound = self.envelope.global_bound()
            object.__setattr__(self, "c0", max(bound if bound is not None else observed, observed))
        else:
            if self.c0 < 1:
                raise DomainError("c0 must be at least 1")
            if observed > self.c0 * (1 + 1e-12):
                raise DomainError(f"envelope leaves [1/c0, c0] with c0={self.c0}")
            object.__setattr__(self, "c0", float(self.c0))

    def values(self) -> np.ndarray:
        """Array ``C[0..l_max]`` with ``C[0] = 0`` (monopole excluded)."""
        ell = np.arange(1, self.l_max + 1)
        out = np.zeros(self.l_max + 1)
        out[1:] = self.envelope(ell) * ell.astype(float) ** (-self.alpha)
        return out

    def with_l_max(self, l_max: int) -> "PowerSpectrum":
        return replace(self, l_max=int(l_max), c0=None if self._c0_inferred() else self.c0)

    def _c0_inferred(self) -> bool:
        bound = self.envelope.global_bound()
        return bound is not None and self.c0 == bound

    def to_config(self) -> dict:
        cfg = {"alpha": self.alpha, "l_max": self.l_max, "envelope": self.envelope.kind,
               "envelope_value": self.envelope.value, "c0": self.c0}
        if self.envelope.kind == "oscillating":
            cfg["envelope_amplitude"] = self.envelope.amplitude
        if self.envelope.kind == "table":
            cfg["envelope_table"] = ",".join(repr(v) for v in self.envelope.table)
        return cfg

    @classmethod
    def from_config(cls, cfg: Mapping[str, object]) -> "PowerSpectrum":
        kind = str(cfg.get("envelope", "constant"))
        table = cfg.get("envelope_table", ())
        if isinstance(table, str):
            table = tuple(float(v) for v in table.split(",") if v.strip())
        env = Envelope(kind=kind, value=float(cfg.get("envelope_value", 1.0)),
                       amplitude=float(cfg.get("envelope_amplitude", 0.5)), table=tuple(table))
        c0 = cfg.get("c0")
        return cls(alpha=float(cfg["alpha"]), l_max=int(cfg["l_max"]), envelope=env,
                   c0=None if c0 in (None, "", "None") else float(c0))


def spectrum_value(spec: PowerSpectrum, ell: int) -> float:
    """``C_l = G(l) l**(-alpha)`` for ``1 <= l <= l_max``."""
    if int(ell) != ell or not 1 <= ell <= spec.l_max:
        raise DomainError(f"multipole {ell} outside 1..{spec.l_max}")
    return float(spec.envelope(np.array([int(ell)]))[0] * float(ell) ** (-spec.alpha))


def power_tail_sum(alpha: float, l_max: int, weight: str = "variance") -> float:
    """Upper bound for ``sum_{l > l_max} w(l) l**(-alpha)``.

    ``weight='variance'`` uses ``w = (2l+1)/(4 pi)``, ``'plain'`` uses ``w = 1``.
    The summands are decreasing, so the integral from ``l_max`` dominates.
    """
    L = float(l_max)
    if weight == "plain":
        if alpha <= 1:
            return math.inf
        return L ** (1 - alpha) / (alpha - 1)
    if alpha <= 2:
        return math.inf
    return (2 * L ** (2 - alpha) / (alpha - 2) + L ** (1 - alpha) / (alpha - 1)) / (4 * math.pi)


def total_variance(spec: PowerSpectrum) -> SeriesValue:
    """``sum (2l+1)/(4 pi) C_l`` over the retained multipoles plus a tail bound."""
    ell = np.arange(spec.l_max + 1)
    value = float(np.sum((2 * ell + 1) / (4 * math.pi) * spec.values()))
    tail = spec.c0 * power_tail_sum(spec.alpha, spec.l_max)
    return SeriesValue(value, tail, spec.l_max)


@dataclass(frozen=True)
class DerivedSpectrum:
    """Spectrum of the pseudo-differentiated field together with its envelope.

    ``values`` holds ``C_l (1 + l(l+1))**k``; ``effective_alpha = alpha - 2k``;
    ``c6`` bounds ``values[l] * l**effective_alpha`` from both sides. When
    ``divergent`` is set the untruncated variance would be infinite and
    ``spectrum`` is ``None``.
    """

    parent: PowerSpectrum
    k: int
    values: np.ndarray
    effective_alpha: float
    c6: float
    divergent: bool
    spectrum: PowerSpectrum | None


def derivative_factors(l_max: int, k: float) -> np.ndarray:
    """Multipliers ``(1 + l(l+1))**k`` for ``l = 0..l_max``."""
    ell = np.arange(l_max + 1, dtype=float)
    return (1.0 + ell * (ell + 1.0)) ** k


def derived_spectrum(spec: PowerSpectrum, k: int, allow_divergent: bool = False) -> DerivedSpectrum:
    """Spectrum of ``(1 - Laplacian)**(k/2)`` applied to the field.

    Raises ``DomainError`` when ``alpha <= 2 + 2k`` unless ``allow_divergent``
    is set, in which case a ``DivergenceWarning`` is emitted and the truncated
    values are still returned.
    """
    if int(k) != k or k < 1:
        raise DomainError(f"derivative order must be a positive integer, got {k}")
    k = int(k)
    divergent = not spec.alpha > 2 + 2 * k
    if divergent and not allow_divergent:
        raise DomainError(f"alpha={spec.alpha} gives infinite variance for k={k}")
    if divergent:
        warnings.warn(f"derived spectrum with k={k} is not summable without truncation",
                      DivergenceWarning, stacklevel=2)
    vals = spec.values() * derivative_factors(spec.l_max, k)
    vals[0] = 0.0
    eff = spec.alpha - 2 * k
    ell = np.arange(1, spec.l_max + 1, dtype=float)
    g = vals[1:] * ell ** eff
    c6 = max(float(g.max()), 1.0 / float(g.min()))
    derived = None
    if not divergent:
        table = Envelope(kind="table", table=tuple(g.tolist()))
        derived = PowerSpectrum(alpha=eff, l_max=spec.l_max, envelope=table, c0=c6)
    return DerivedSpectrum(spec, k, vals, eff, c6, divergent, derived)
