"""Wigner-D rotations of real spherical-harmonic signals.

Conventions
-----------
``EulerZYZ(alpha, beta, gamma)`` denotes the active rotation
``Q = Rz(alpha) @ Ry(beta) @ Rz(gamma)`` of 3-D space. The real rotation
matrix ``R`` built for it satisfies ``y(Q u) == R @ y(u)`` for every
direction ``u``, i.e. ``R`` rotates a sound field by ``Q``. Its transpose
undoes the rotation, which is how rotary steering brings a source to the
front (azimuth 0, elevation 0).

The complex basis underneath uses the Condon-Shortley phase; the real
basis from :mod:`rotsteer.sh` does not. The change of basis ``U`` below
absorbs the difference, so ``R = conj(U) @ D @ U.T`` per degree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import block_diag

from .sh import MAX_ORDER, ShOrder, SphericalDirection

_IMAG_TOL = 1e-12


@dataclass(frozen=True)
class EulerZYZ:
    alpha: float
    beta: float
    gamma: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(a) for a in (self.alpha, self.beta, self.gamma)):
            raise ValueError("Euler angles must be finite")

    def matrix(self) -> np.ndarray:
        return rot_z(self.alpha) @ rot_y(self.beta) @ rot_z(self.gamma)

    @classmethod
    def from_matrix(cls, Q) -> "EulerZYZ":
        """Decompose a proper 3x3 rotation into ZYZ angles (beta in [0, pi])."""
        Q = np.asarray(Q, dtype=float)
        beta = math.acos(max(-1.0, min(1.0, Q[2, 2])))
        if math.sin(beta) > 1e-12:
            alpha = math.atan2(Q[1, 2], Q[0, 2])
            gamma = math.atan2(Q[2, 1], -Q[2, 0])
        else:
            # gimbal lock: only alpha +/- gamma is defined
            gamma = 0.0
            if Q[2, 2] > 0:
                alpha = math.atan2(Q[1, 0], Q[0, 0])
            else:
                alpha = math.atan2(-Q[1, 0], -Q[0, 0])
        return cls(alpha, beta, gamma)

    def compose(self, other: "EulerZYZ") -> "EulerZYZ":
        """Angles of ``self.matrix() @ other.matrix()``."""
        return EulerZYZ.from_matrix(self.matrix() @ other.matrix())


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(b: float) -> np.ndarray:
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_angle(Q) -> float:
    """Angle of a 3x3 rotation matrix, in radians."""
    c = (np.trace(Q) - 1.0) / 2.0
    return math.acos(max(-1.0, min(1.0, c)))


def _seed_top(J: int, mp: int, c: float, s: float) -> float:
    # d^J_{J,m'} closed form
    return ((-1) ** (J - mp) * math.sqrt(math.comb(2 * J, J + mp))
            * c ** (J + mp) * s ** (J - mp))


def _seed(J: int, m: int, mp: int, c: float, s: float) -> float:
    if m == J:
        return _seed_top(J, mp, c, s)
    if m == -J:
        # d_{m,m'} = (-1)^(m-m') d_{-m,-m'}
        return (-1) ** (m - mp) * _seed_top(J, -mp, c, s)
    # |m'| == J: d_{m,m'} = (-1)^(m-m') d_{m',m}
    return (-1) ** (m - mp) * _seed(J, mp, m, c, s)


def wigner_d_all(order: int, beta: float) -> list[np.ndarray]:
    """Small Wigner-d matrices ``d^n(beta)`` for ``n = 0..order``.

    Each block is indexed ``[m + n, m' + n]``. Entries are seeded with the
    closed form at ``n = max(|m|, |m'|)`` and raised in degree with the
    three-term recursion in ``n`` (the Jacobi-polynomial recurrence), run
    for all ``(m, m')`` at once.
    """
    N = order
    c, s = math.cos(beta / 2.0), math.sin(beta / 2.0)
    cb = math.cos(beta)
    ms = np.arange(-N, N + 1, dtype=float)
    M, Mp = np.meshgrid(ms, ms, indexing="ij")
    jmin = np.maximum(np.abs(M), np.abs(Mp))
    prev = np.zeros_like(M)
    cur = np.zeros_like(M)
    blocks = []
    for J in range(N + 1):
        if J > 0:
            nxt = np.zeros_like(M)
            upd = jmin <= J - 1
            j = J - 1
            denom = np.sqrt(((j + 1) ** 2 - M[upd] ** 2) * ((j + 1) ** 2 - Mp[upd] ** 2))
            mm = M[upd] * Mp[upd] / (j * (j + 1)) if j > 0 else 0.0
            a = (j + 1) * (2 * j + 1) / denom * (cb - mm)
            if j > 0:
                b = ((j + 1) * np.sqrt((j ** 2 - M[upd] ** 2) * (j ** 2 - Mp[upd] ** 2))
                     / (j * denom))
                nxt[upd] = a * cur[upd] - b * prev[upd]
            else:
                nxt[upd] = a * cur[upd]
            prev, cur = cur, nxt
        for i, j2 in zip(*np.nonzero(jmin == J)):
            cur[i, j2] = _seed(J, int(M[i, j2]), int(Mp[i, j2]), c, s)
        blocks.append(cur[N - J:N + J + 1, N - J:N + J + 1].copy())
    return blocks


def wigner_d_small(n: int, beta: float) -> np.ndarray:
    """``d^n_{m m'}(beta)`` with rows and columns ordered m = -n..n."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    return wigner_d_all(n, beta)[n]


def wigner_D_complex(n: int, e: EulerZYZ) -> np.ndarray:
    """Complex Wigner-D block ``exp(-i m alpha) d_{m m'}(beta) exp(-i m' gamma)``."""
    m = np.arange(-n, n + 1)
    d = wigner_d_small(n, e.beta)
    return np.exp(-1j * m * e.alpha)[:, None] * d * np.exp(-1j * m * e.gamma)[None, :]


@lru_cache(maxsize=None)
def complex_to_real(n: int) -> np.ndarray:
    """Unitary ``U`` with ``y_real = U @ y_complex`` for degree ``n``.

    Rows follow real order m = -n..n, columns complex order m = -n..n.
    """
    U = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
    r = 1.0 / math.sqrt(2.0)
    U[n, n] = 1.0
    for m in range(1, n + 1):
        sgn = (-1) ** m
        U[n + m, n + m] = sgn * r
        U[n + m, n - m] = r
        U[n - m, n + m] = -1j * sgn * r
        U[n - m, n - m] = 1j * r
    U.setflags(write=False)
    return U


@dataclass(frozen=True)
class RealRotation:
    """Block-diagonal orthogonal rotation on an ACN-ordered real SH basis."""

    order: int
    blocks: tuple

    @property
    def matrix(self) -> np.ndarray:
        return block_diag(*self.blocks)

    @property
    def T(self) -> np.ndarray:
        return self.matrix.T

    def __matmul__(self, other):
        if isinstance(other, RealRotation):
            if other.order != self.order:
                raise ValueError("rotation orders differ")
            return RealRotation(self.order, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))
        return self.matrix @ other

    def transpose(self) -> "RealRotation":
        return RealRotation(self.order, tuple(b.T.copy() for b in self.blocks))


def real_rotation(order: int | ShOrder, e: EulerZYZ) -> RealRotation:
    n_ord = order.order if isinstance(order, ShOrder) else int(order)
    if n_ord < 0 or n_ord > MAX_ORDER:
        raise ValueError(f"order must be in 0..{MAX_ORDER}")
    ds = wigner_d_all(n_ord, e.beta)
    blocks = [np.ones((1, 1))]
    for n in range(1, n_ord + 1):
        m = np.arange(-n, n + 1)
        D = np.exp(-1j * m * e.alpha)[:, None] * ds[n] * np.exp(-1j * m * e.gamma)[None, :]
        U = complex_to_real(n)
        R = np.conj(U) @ D @ U.T
        if np.max(np.abs(R.imag)) > _IMAG_TOL:
            raise ArithmeticError(
                f"complex-to-real conversion left imaginary residue {np.max(np.abs(R.imag)):.3g}")
        blocks.append(np.ascontiguousarray(R.real))
    return RealRotation(n_ord, tuple(blocks))


def steering_euler(direction: SphericalDirection) -> EulerZYZ:
    """Euler angles of the rotation carrying the front direction to ``direction``.

    With the right-handed ``rot_y`` used here, tilting +x upward needs a
    negative Y angle, hence ``beta = -elevation``.
    """
    return EulerZYZ(direction.azimuth, -direction.elevation, 0.0)


def steering_matrix(direction: SphericalDirection, order: int | ShOrder = 1) -> RealRotation:
    """Rotation mapping the front to ``direction``; its transpose centres ``direction``."""
    return real_rotation(order, steering_euler(direction))


def steer_signal(spec: np.ndarray, R: RealRotation | np.ndarray, inverse: bool = True) -> np.ndarray:
    """Rotate every (frame, bin) channel vector of ``spec``.

    ``inverse=True`` applies ``R.T`` (alignment toward the front); otherwise ``R``.
    """
    mat = R.matrix if isinstance(R, RealRotation) else np.asarray(R)
    if spec.shape[-1] != mat.shape[0]:
        raise ValueError(f"channel count {spec.shape[-1]} != rotation size {mat.shape[0]}")
    # x_row @ R applies R.T to the column vector
    return spec @ mat if inverse else spec @ mat.T
