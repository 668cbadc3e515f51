"""Sup-ratio statistics for the uniform modulus of continuity of sampled fields.

For each dyadic scale ``eps = 2**-j`` a pair family is built from

* the separated sequence of level ``j``: ``2**j`` points on the equator with
  consecutive spacing ``2**-j``, contributing its consecutive pairs;
* random pairs on a few colatitude rings with separation in ``[eps/2, eps]``.

The statistic is ``max |T(x) - T(y)| / w(d(x, y))`` over the family, with
``w`` one of the normalizations below. Sampling uses the ring synthesizer, so
every point of a replicate lies on one of ``1 + n_rings`` rings.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ResolutionWarning
from .field import RingSynthesizer, pseudo_diff, realize, substream
from .geometry import SpherePoint, from_angles, to_points
from .records import ConstantEstimate
from .spectra import PowerSpectrum, abs_log, rho_alpha

KINDS = ("rho_form", "geodesic_form", "alpha4_form", "derivative_form")
L_MAX_CAP = 4096


@dataclass(frozen=True)
class SeparatedSequence:
    """``2**n`` equator points ``phi_k = k 2**-n``; each point's nearest predecessor is the previous one."""

    n: int
    points: tuple[SpherePoint, ...]

    @property
    def spacing(self) -> float:
        return 2.0 ** (-self.n)


def separated_sequence(n: int) -> SeparatedSequence:
    """Level-``n`` separated sequence on the equator (total arc length below 1)."""
    if int(n) != n or n < 1:
        raise DomainError("level must be a positive integer")
    phi = np.arange(2 ** int(n)) * 2.0 ** (-int(n))
    pts = to_points(from_angles(np.full(phi.size, math.pi / 2), phi))
    return SeparatedSequence(int(n), tuple(pts))


def denominator(distance, alpha: float, kind: str) -> np.ndarray:
    """Normalization ``w(d)`` of the sup-ratio statistic.

    ``rho_form`` and ``derivative_form``: ``rho_a(d) sqrt(|log rho_a(d)|)``;
    ``geodesic_form``: ``d**((a-2)/2) sqrt(|log d|)``; ``alpha4_form``:
    ``d |log d|``. Logarithms follow ``|log t| = max(|ln t|, 1)``.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise DomainError("pair distances must be positive")
    if kind in ("rho_form", "derivative_form"):
        r = np.asarray(rho_alpha(alpha, d))
        return r * np.sqrt(abs_log(r))
    if kind == "geodesic_form":
        return d ** ((alpha - 2.0) / 2.0) * np.sqrt(abs_log(d))
    if kind == "alpha4_form":
        return d * abs_log(d)
    raise DomainError(f"unknown statistic kind {kind!r}")


def modulus_statistic(values, distances, alpha: float, kind: str) -> float:
    """``max |T(x) - T(y)| / w(d)`` over pairs.

    ``values`` holds either the increments ``T(x) - T(y)`` or an ``(n, 2)``
    array of the two evaluations.
    """
    v = np.asarray(values, dtype=float)
    inc = v[:, 0] - v[:, 1] if v.ndim == 2 else v
    d = np.asarray(distances, dtype=float)
    if inc.shape != d.shape:
        raise DomainError("one distance per pair is required")
    if d.size == 0:
        return 0.0
    return float(np.max(np.abs(inc) / denominator(d, alpha, kind)))


@dataclass(frozen=True)
class ModulusExperiment:
    """Configuration of a modulus experiment.

    ``scales`` must be strictly decreasing dyadic values ``2**-j``.
    ``extra_kinds`` are evaluated on exactly the same pairs as ``kind``.
    """

    spec: PowerSpectrum
    scales: tuple[float, ...]
    replicates: int
    kind: str = "rho_form"
    derivative_order: int = 0
    pairs_per_scale: int = 256
    n_rings: int = 4
    seed: int = 0
    extra_kinds: tuple[str, ...] = ()

    def __post_init__(self):
        sc = tuple(float(s) for s in self.scales)
        object.__setattr__(self, "scales", sc)
        if not sc:
            raise DomainError("at least one scale is required")
        if any(b >= a for a, b in zip(sc, sc[1:])):
            raise DomainError("scales must be strictly decreasing")
        for s in sc:
            j = -math.log2(s)
            if not (s > 0 and abs(j - round(j)) < 1e-12 and round(j) >= 1):
                raise DomainError(f"scale {s} is not of the form 2**-j with j >= 1")
        if self.replicates < 1:
            raise DomainError("replicates must be positive")
        for k in (self.kind,) + tuple(self.extra_kinds):
            if k not in KINDS:
                raise DomainError(f"unknown statistic kind {k!r}")
        if self.kind == "derivative_form" and self.derivative_order < 1:
            raise DomainError("derivative_form needs derivative_order >= 1")
        if self.derivative_order and not self.effective_alpha > 2:
            raise DomainError("alpha - 2k must exceed 2")
        if self.pairs_per_scale < 0 or self.n_rings < 1:
            raise DomainError("pairs_per_scale must be >= 0 and n_rings >= 1")

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(int(round(-math.log2(s))) for s in self.scales)

    @property
    def effective_alpha(self) -> float:
        return self.spec.alpha - 2 * self.derivative_order

    @property
    def kinds(self) -> tuple[str, ...]:
        return (self.kind,) + tuple(k for k in self.extra_kinds if k != self.kind)

    def resolved(self) -> np.ndarray:
        """Scales at or above ``10 / l_max``."""
        return np.asarray(self.scales) >= 10.0 / self.spec.l_max

    def to_config(self) -> dict:
        return dict(self.spec.to_config(), scales=",".join(repr(s) for s in self.scales),
                    replicates=self.replicates, kind=self.kind, k=self.derivative_order,
                    pairs_per_scale=self.pairs_per_scale, n_rings=self.n_rings, seed=self.seed)


@dataclass(frozen=True)
class ModulusResult:
    """Statistics per ``(scale, replicate)`` and their summaries.

    ``statistics[kind]`` has shape ``(n_scales, replicates)``. ``medians`` and
    ``maxima`` summarize the primary kind over replicates. ``stability`` is
    the ratio of the largest to the smallest median over resolved scales.
    ``witness[i, r]`` is the largest consecutive increment of the separated
    sequence at level ``j_i`` divided by ``2**(-j(a-2)/2) sqrt(j)``.
    """

    experiment: ModulusExperiment
    statistics: dict
    resolved: np.ndarray
    medians: np.ndarray
    maxima: np.ndarray
    stability: float
    witness: np.ndarray
    estimate: ConstantEstimate
    warnings: tuple[str, ...] = field(default=())

    def rows(self) -> list[tuple[float, int, float, bool]]:
        stats = self.statistics[self.experiment.kind]
        return [(s, r, float(stats[i, r]), bool(self.resolved[i]))
                for i, s in enumerate(self.experiment.scales) for r in range(self.experiment.replicates)]


def _pair_layout(exp: ModulusExperiment, rng: np.random.Generator):
    """Ring colatitudes and, per scale, ring indices, start longitudes, offsets and distances."""
    rings = np.concatenate([[math.pi / 2], np.arccos(rng.uniform(-0.7, 0.7, exp.n_rings))])
    layout = []
    for scale in exp.scales:
        k = exp.pairs_per_scale
        ring = rng.integers(1, exp.n_rings + 1, k)
        phi0 = rng.uniform(0, 2 * math.pi, k)
        dist = rng.uniform(scale / 2, scale, k)
        dphi = 2 * np.arcsin(np.sin(dist / 2) / np.sin(rings[ring]))
        layout.append((ring, phi0, dphi, dist))
    return rings, layout


def _replicate(exp: ModulusExperiment, r: int) -> tuple[dict, np.ndarray]:
    realization = realize(exp.spec, exp.seed, r)
    if exp.derivative_order:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            realization = pseudo_diff(realization, exp.derivative_order)
    a = exp.effective_alpha
    rings, layout = _pair_layout(exp, substream(exp.seed, r, "pairs"))
    synth = RingSynthesizer(realization, rings)
    top = max(exp.levels)
    equator = synth.evaluate(0, np.arange(2 ** top) * 2.0 ** (-top))
    stats = {k: np.empty(len(exp.scales)) for k in exp.kinds}
    witness = np.empty(len(exp.scales))
    for i, (level, (ring, phi0, dphi, dist)) in enumerate(zip(exp.levels, layout)):
        seq = equator[:: 2 ** (top - level)]
        seq_inc = np.diff(seq)
        seq_d = np.full(seq_inc.size, 2.0 ** (-level))
        inc = np.empty(ring.size)
        for q in range(1, exp.n_rings + 1):
            sel = ring == q
            if sel.any():
                vals = synth.evaluate(q, np.concatenate([phi0[sel], phi0[sel] + dphi[sel]]))
                inc[sel] = vals[: sel.sum()] - vals[sel.sum():]
        all_inc = np.concatenate([seq_inc, inc])
        all_d = np.concatenate([seq_d, dist])
        for k in exp.kinds:
            stats[k][i] = modulus_statistic(all_inc, all_d, a, k)
        witness[i] = np.max(np.abs(seq_inc)) / (2.0 ** (-level * (a - 2) / 2) * math.sqrt(level))
    return stats, witness


def run_modulus_experiment(exp: ModulusExperiment, threads: int = 1) -> ModulusResult:
    """Sample ``exp.replicates`` fields and compute the statistics per scale."""
    messages = []
    needed = min(L_MAX_CAP, int(math.ceil(50 / min(exp.scales))))
    if exp.spec.l_max < needed:
        msg = (f"l_max={exp.spec.l_max} is below {needed} needed for scale {min(exp.scales):g}; "
               f"scales under 10/l_max are reported as under-resolved")
        warnings.warn(msg, ResolutionWarning, stacklevel=2)
        messages.append(msg)
    reps = range(exp.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda r: _replicate(exp, r), reps))
    else:
        parts = [_replicate(exp, r) for r in reps]
    statistics = {k: np.stack([p[0][k] for p in parts], axis=1) for k in exp.kinds}
    witness = np.stack([p[1] for p in parts], axis=1)
    primary = statistics[exp.kind]
    medians = np.median(primary, axis=1)
    maxima = primary.max(axis=1)
    resolved = exp.resolved()
    pool_idx = np.flatnonzero(resolved) if resolved.any() else np.arange(len(exp.scales))
    stability = float(medians[pool_idx].max() / medians[pool_idx].min())
    finest = pool_idx[-1]
    cfg = exp.to_config()
    estimate = ConstantEstimate(f"K_{exp.kind}_empirical", float(medians[finest]), cfg,
                                (float(exp.scales[pool_idx[-1]]), float(exp.scales[pool_idx[0]])))
    return ModulusResult(exp, statistics, resolved, medians, maxima, stability, witness, estimate,
                         tuple(messages))
