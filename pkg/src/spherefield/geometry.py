"""Points on the unit sphere, rotations and geodesic distance."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class SpherePoint:
    """A point on S^2 stored as a unit vector.

    Use :meth:`from_angles` for colatitude/longitude input and
    :meth:`from_vector` to normalize an arbitrary nonzero vector.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not abs(norm - 1.0) <= _NORM_TOL:
            raise DomainError(f"not a unit vector (norm {norm!r})")

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "SpherePoint":
        if not 0.0 <= theta <= math.pi:
            raise DomainError(f"colatitude {theta} outside [0, pi]")
        st = math.sin(theta)
        return cls.from_vector((st * math.cos(phi), st * math.sin(phi), math.cos(theta)))

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "SpherePoint":
        v = np.asarray(v, dtype=float)
        n = float(np.linalg.norm(v))
        if not n > 0:
            raise DomainError("cannot normalize the zero vector")
        v = v / n
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def north_pole(cls) -> "SpherePoint":
        return cls(0.0, 0.0, 1.0)

    @property
    def unit_vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def colatitude(self) -> float:
        return math.atan2(math.hypot(self.x, self.y), self.z)

    @property
    def longitude(self) -> float:
        phi = math.atan2(self.y, self.x)
        return phi + 2 * math.pi if phi < 0 else phi


def as_vectors(points) -> np.ndarray:
    """Stack points (``SpherePoint`` objects or an ``(n, 3)`` array) into an array."""
    if isinstance(points, SpherePoint):
        return points.unit_vector[None, :]
    if isinstance(points, np.ndarray):
        arr = np.atleast_2d(np.asarray(points, dtype=float))
        if arr.shape[-1] != 3:
            raise DomainError("point arrays must have shape (n, 3)")
        norms = np.linalg.norm(arr, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise DomainError("point array rows must be unit vectors")
        return arr
    pts = list(points)
    if not pts:
        return np.zeros((0, 3))
    return np.array([[p.x, p.y, p.z] for p in pts], dtype=float)


def to_points(vectors: np.ndarray) -> list[SpherePoint]:
    return [SpherePoint.from_vector(v) for v in np.atleast_2d(vectors)]


def angles(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Colatitude and longitude in ``[0, 2 pi)`` of each row."""
    v = np.atleast_2d(vectors)
    theta = np.arctan2(np.hypot(v[:, 0], v[:, 1]), v[:, 2])
    phi = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2 * np.pi)
    return theta, phi


def from_angles(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def geodesic_distance_vec(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Great-circle distance between rows of ``a`` and ``b`` (broadcasting).

    Equal to ``arccos`` of the clamped inner product, computed through
    ``atan2(|a x b|, a . b)`` which keeps full relative accuracy at tiny
    and near-antipodal separations.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    return np.arctan2(cross, dot)


def rotation_to_north(v: np.ndarray) -> np.ndarray:
    """Orthogonal matrix ``R`` with ``R @ v`` equal to the North Pole."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    theta = math.atan2(math.hypot(v[0], v[1]), v[2])
    phi = math.atan2(v[1], v[0])
    cp, sp = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    rz = np.array([[cp, sp, 0.0], [-sp, cp, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[ct, 0.0, -st], [0.0, 1.0, 0.0], [st, 0.0, ct]])
    return ry @ rz


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotation matrix."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def uniform_points(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def point_at(center: np.ndarray, distance, bearing) -> np.ndarray:
    """Points at the given geodesic distance and bearing from ``center``."""
    center = np.asarray(center, dtype=float)
    rot = rotation_to_north(center)
    local = from_angles(np.asarray(distance), np.asarray(bearing))
    return local @ rot  # rot.T applied to each row

