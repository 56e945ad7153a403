"""Real spherical harmonics in ACN order.

Directions use azimuth (counter-clockwise from +x) and elevation (from the
horizontal plane). Associated Legendre functions are evaluated without the
Condon-Shortley phase, which is the ambiX convention.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_ORDER = 8


class Normalization(enum.Enum):
    AMBIX = "ambix"
    ORTHONORMAL = "orthonormal"


def wrap_angle(angle):
    """Wrap radians into (-pi, pi]."""
    wrapped = np.mod(-np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi)
    out = np.pi - wrapped
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SphericalDirection:
    """A direction on the unit sphere; azimuth is wrapped, elevation is checked."""

    azimuth: float
    elevation: float

    def __post_init__(self):
        if not (math.isfinite(self.azimuth) and math.isfinite(self.elevation)):
            raise ValueError("direction angles must be finite")
        if abs(self.elevation) > np.pi / 2:
            raise ValueError(f"elevation {self.elevation!r} outside [-pi/2, pi/2]")
        object.__setattr__(self, "azimuth", wrap_angle(self.azimuth))
        object.__setattr__(self, "elevation", float(self.elevation))

    @classmethod
    def from_degrees(cls, azimuth: float, elevation: float) -> "SphericalDirection":
        return cls(math.radians(azimuth), math.radians(elevation))

    @classmethod
    def from_vector(cls, v) -> "SphericalDirection":
        az, el = cart_to_sph(np.asarray(v, dtype=float))
        return cls(float(az), float(el))

    def to_vector(self) -> np.ndarray:
        return sph_to_cart(self.azimuth, self.elevation)


def sph_to_cart(azimuth, elevation) -> np.ndarray:
    """Unit vectors, shape ``(..., 3)``."""
    azimuth = np.asarray(azimuth, dtype=float)
    elevation = np.asarray(elevation, dtype=float)
    ce = np.cos(elevation)
    return np.stack([ce * np.cos(azimuth), ce * np.sin(azimuth), np.sin(elevation)], axis=-1)


def cart_to_sph(v):
    """Return ``(azimuth, elevation)`` of vectors with shape ``(..., 3)``."""
    v = np.asarray(v, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    az = np.arctan2(y, x)
    el = np.arctan2(z, np.hypot(x, y))
    # arctan2 returns -pi for (-0.0) y; keep the (-pi, pi] range
    az = np.where(az <= -np.pi, np.pi, az)
    return az, el


@dataclass(frozen=True)
class ShOrder:
    order: int

    def __post_init__(self):
        if not isinstance(self.order, (int, np.integer)) or self.order < 0:
            raise ValueError("order must be a non-negative integer")
        if self.order > MAX_ORDER:
            raise ValueError(f"orders above {MAX_ORDER} are not supported")

    @property
    def channel_count(self) -> int:
        return (self.order + 1) ** 2


def acn(n: int, m: int) -> int:
    if abs(m) > n:
        raise ValueError("require |m| <= n")
    return n * n + n + m


def acn_to_nm(index: int) -> tuple[int, int]:
    n = math.isqrt(index)
    return n, index - n * n - n


def assoc_legendre(n: int, m: int, x):
    """Associated Legendre function P_n^m(x) without Condon-Shortley phase.

    Uses the standard upward recursion in degree, starting from the closed
    form for P_m^m. ``x`` may be a scalar or an array.
    """
    if m < 0 or m > n:
        raise ValueError(f"require 0 <= m <= n, got n={n}, m={m}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("|x| must not exceed 1")
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    pmm = np.ones_like(x)
    for k in range(1, m + 1):
        pmm = pmm * (2 * k - 1) * s
    if n == m:
        out = pmm
    else:
        prev, cur = pmm, x * (2 * m + 1) * pmm
        for ell in range(m + 2, n + 1):
            prev, cur = cur, ((2 * ell - 1) * x * cur - (ell + m - 1) * prev) / (ell - m)
        out = cur
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _norm_factors(order: int, norm: Normalization) -> np.ndarray:
    out = np.empty((order + 1) ** 2)
    for n in range(order + 1):
        for m in range(-n, n + 1):
            # ambiX / SN3D factor; orthonormal adds the per-degree scale
            am = abs(m)
            f = (2.0 - (m == 0)) * math.factorial(n - am) / math.factorial(n + am)
            if norm is Normalization.ORTHONORMAL:
                f *= (2 * n + 1) / (4.0 * math.pi)
            out[acn(n, m)] = math.sqrt(f)
    return out


def sh_eval(azimuth, elevation, order: int | ShOrder = 1,
            norm: Normalization = Normalization.AMBIX) -> np.ndarray:
    """Evaluate the real SH basis at the given directions.

    Returns an array with shape ``(..., (N+1)**2)`` in ACN order.
    """
    if isinstance(order, ShOrder):
        order = order.order
    else:
        order = ShOrder(order).order
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    if np.any(np.abs(el) > np.pi / 2):
        raise ValueError("elevation outside [-pi/2, pi/2]")
    az, el = np.broadcast_arrays(az, el)
    x = np.sin(el)
    out = np.empty(az.shape + ((order + 1) ** 2,))
    factors = _norm_factors(order, norm)
    for n in range(order + 1):
        for am in range(n + 1):
            p = assoc_legendre(n, am, x)
            if am == 0:
                out[..., acn(n, 0)] = factors[acn(n, 0)] * p
            else:
                out[..., acn(n, am)] = factors[acn(n, am)] * p * np.cos(am * az)
                out[..., acn(n, -am)] = factors[acn(n, -am)] * p * np.sin(am * az)
    return out


def sh_eval_dir(direction: SphericalDirection, order: int | ShOrder = 1,
                norm: Normalization = Normalization.AMBIX) -> np.ndarray:
    return sh_eval(direction.azimuth, direction.elevation, order, norm)


@dataclass(frozen=True)
class SphereQuadrature:
    """Gauss-Legendre nodes in sin(elevation) times equispaced azimuths.

    Integrates spherical polynomials up to ``degree`` exactly. Weights sum
    to the sphere area 4*pi.
    """

    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be non-negative")

    @property
    def n_elevation(self) -> int:
        return self.degree // 2 + 1

    @property
    def n_azimuth(self) -> int:
        return self.degree + 1

    def nodes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(azimuth, elevation, weight)`` flat arrays."""
        x, wx = np.polynomial.legendre.leggauss(self.n_elevation)
        az = 2.0 * np.pi * np.arange(self.n_azimuth) / self.n_azimuth
        el = np.arcsin(x)
        A, E = np.meshgrid(az, el, indexing="ij")
        W = np.broadcast_to(wx[None, :] * (2.0 * np.pi / self.n_azimuth), A.shape)
        return A.ravel(), E.ravel(), W.ravel().copy()


def sh_gram(order: int | ShOrder, norm: Normalization,
            quadrature: SphereQuadrature | None = None) -> np.ndarray:
    """Gram matrix of the basis under the surface inner product."""
    n_ord = order.order if isinstance(order, ShOrder) else ShOrder(order).order
    if quadrature is None:
        quadrature = SphereQuadrature(2 * n_ord)
    if quadrature.degree < 2 * n_ord:
        raise ValueError(
            f"quadrature degree {quadrature.degree} cannot integrate order-{n_ord} products")
    az, el, w = quadrature.nodes()
    Y = sh_eval(az, el, n_ord, norm)
    return (Y * w[:, None]).T @ Y
