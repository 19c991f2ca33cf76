"""SO(3)/SE(3) primitives underlying the constant-strain rod model.

Conventions used throughout the package:

* 6-vectors are ordered angular-first: a twist is ``[angular, linear]``, a
  wrench is ``[moment, force]``.  The duality pairing is the plain dot product.
* A pose carries an orthonormal ``rotation`` and a ``position``; composing
  poses multiplies homogeneous matrices.
* Trigonometric coefficient functions switch to Taylor branches below
  ``_SERIES_SWITCH`` (on the accumulated angle ``s*theta``) where the closed
  forms lose digits to cancellation.  Branches agree to ~1e-12 at the switch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NearSingular, RotationNearPi

_SERIES_SWITCH = 1e-2
_PI_GUARD = 1e-6

_EYE4 = np.eye(4)
_EYE6 = np.eye(6)


def hat3(v):
    """Skew matrix of a 3-vector: hat3(v) @ w == cross(v, w)."""
    v = np.asarray(v, dtype=float)
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def vee3(m):
    """Inverse of hat3 for a skew-symmetric 3x3 matrix."""
    m = np.asarray(m, dtype=float)
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def hat6(xi):
    """4x4 matrix form of a twist: [[hat3(angular), linear], [0, 0]]."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((4, 4))
    out[:3, :3] = hat3(xi[:3])
    out[:3, 3] = xi[3:]
    return out


def vee6(m):
    """Inverse of hat6, angular part first."""
    m = np.asarray(m, dtype=float)
    return np.array([m[2, 1], m[0, 2], m[1, 0], m[0, 3], m[1, 3], m[2, 3]])


def _hat3_many(v):
    # (k, 3) -> (k, 3, 3)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


# ---------------------------------------------------------------------------
# Scalar coefficient functions (vectorized over the accumulated angle sigma).
# Series orders chosen so both branches carry ~1e-13 relative error at the
# switch point; the closed forms are safe above it.

def _branched(sig, closed, series):
    sig = np.asarray(sig, dtype=float)
    out = np.empty_like(sig)
    small = sig < _SERIES_SWITCH
    if small.any():
        out[small] = series(sig[small] * sig[small])
    big = ~small
    if big.any():
        out[big] = closed(sig[big])
    return out


def _g2(sig):
    """(1 - cos s) / s^2"""
    return _branched(
        sig,
        lambda s: (1.0 - np.cos(s)) / (s * s),
        lambda x: 0.5 - x / 24.0 + x * x / 720.0 - x * x * x / 40320.0,
    )


def _g3(sig):
    """(s - sin s) / s^3"""
    return _branched(
        sig,
        lambda s: (s - np.sin(s)) / (s * s * s),
        lambda x: 1.0 / 6.0 - x / 120.0 + x * x / 5040.0 - x * x * x / 362880.0,
    )


def _f1(sig):
    """(4 cos s + s sin s - 4) / (2 s^2)"""
    return _branched(
        sig,
        lambda s: (4.0 * np.cos(s) + s * np.sin(s) - 4.0) / (2.0 * s * s),
        lambda x: -0.5 + x * x / 720.0 - x * x * x / 20160.0,
    )


def _f2(sig):
    """(4 s - 5 sin s + s cos s) / (2 s^3)"""
    return _branched(
        sig,
        lambda s: (4.0 * s - 5.0 * np.sin(s) + s * np.cos(s)) / (2.0 * s ** 3),
        lambda x: 1.0 / 6.0 - x * x / 5040.0 + x * x * x / 181440.0,
    )


def _f3(sig):
    """(2 cos s + s sin s - 2) / (2 s^4)"""
    return _branched(
        sig,
        lambda s: (2.0 * np.cos(s) + s * np.sin(s) - 2.0) / (2.0 * s ** 4),
        lambda x: -1.0 / 24.0 + x / 360.0 - x * x / 13440.0 + x * x * x / 907200.0,
    )


def _f4(sig):
    """(2 s - 3 sin s + s cos s) / (2 s^5)"""
    return _branched(
        sig,
        lambda s: (2.0 * s - 3.0 * np.sin(s) + s * np.cos(s)) / (2.0 * s ** 5),
        lambda x: 1.0 / 120.0 - x / 2520.0 + x * x / 120960.0 - x * x * x / 9979200.0,
    )


def _coeffs_series(out, sel, sig):
    x = sig * sig
    x2 = x * x
    x3 = x2 * x
    out[sel + (0,)] = 0.5 - x / 24.0 + x2 / 720.0 - x3 / 40320.0
    out[sel + (1,)] = 1.0 / 6.0 - x / 120.0 + x2 / 5040.0 - x3 / 362880.0
    out[sel + (2,)] = -0.5 + x2 / 720.0 - x3 / 20160.0
    out[sel + (3,)] = 1.0 / 6.0 - x2 / 5040.0 + x3 / 181440.0
    out[sel + (4,)] = -1.0 / 24.0 + x / 360.0 - x2 / 13440.0 + x3 / 907200.0
    out[sel + (5,)] = 1.0 / 120.0 - x / 2520.0 + x2 / 120960.0 - x3 / 9979200.0


def _coeffs_closed(out, sel, s):
    sn = np.sin(s)
    cs = np.cos(s)
    out[sel + (0,)] = (1.0 - cs) / (s * s)
    out[sel + (1,)] = (s - sn) / (s * s * s)
    out[sel + (2,)] = (4.0 * cs + s * sn - 4.0) / (2.0 * s * s)
    out[sel + (3,)] = (4.0 * s - 5.0 * sn + s * cs) / (2.0 * s ** 3)
    out[sel + (4,)] = (2.0 * cs + s * sn - 2.0) / (2.0 * s ** 4)
    out[sel + (5,)] = (2.0 * s - 3.0 * sn + s * cs) / (2.0 * s ** 5)


def _screw_coeffs(sig):
    """All six coefficients on one grid, sharing a single sin/cos evaluation.

    Column order (g2, g3, f1, f2, f3, f4); bit-identical to the individual
    functions above, which remain the reference implementations.  Uniform
    batches (all entries on one side of the switch) skip the mask indexing.
    """
    sig = np.asarray(sig, dtype=float)
    out = np.empty(sig.shape + (6,))
    small = sig < _SERIES_SWITCH
    if not small.any():
        _coeffs_closed(out, (Ellipsis,), sig)
    elif small.all():
        _coeffs_series(out, (Ellipsis,), sig)
    else:
        _coeffs_series(out, (small,), sig[small])
        _coeffs_closed(out, (~small,), sig[~small])
    return out


# ---------------------------------------------------------------------------


@dataclass
class Pose:
    """Rigid transform (rotation, position).

    The plain constructor trusts its inputs; use :meth:`from_matrix` when the
    data comes from outside and must be validated.
    """

    rotation: np.ndarray
    position: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.position = np.asarray(self.position, dtype=float)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m, tol: float = 1e-9) -> "Pose":
        """Build from a homogeneous 4x4 matrix, checking orthonormality to tol."""
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 homogeneous matrix, got shape {m.shape}")
        if np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0])).max() > tol:
            raise ValueError("bottom row of a homogeneous matrix must be [0, 0, 0, 1]")
        r = m[:3, :3]
        if np.abs(r.T @ r - np.eye(3)).max() > tol or abs(np.linalg.det(r) - 1.0) > tol:
            raise ValueError("rotation block is not orthonormal with determinant +1")
        return cls(r.copy(), m[:3, 3].copy())

    def matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.position
        return out

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt.copy(), -(rt @ self.position))

    def compose(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.position + self.position)

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)


class TwistBatch:
    """Cached matrix powers for a batch of twists.

    Evaluating the exponential, its inverse Adjoint and the strain-to-velocity
    tangent for every constant-strain section of a rod reuses the same
    hat/adjoint powers; build them once per (strain vector, call) and evaluate
    all sections with a handful of vectorized polynomial sums.

    ``svals`` may be one arc length per twist, shape (k,), or a grid of them,
    shape (k, m); results gain the matching leading dimensions.
    """

    def __init__(self, xis):
        xis = np.atleast_2d(np.asarray(xis, dtype=float))
        self.xis = xis
        self.theta = np.linalg.norm(xis[:, :3], axis=1)
        k = len(xis)
        hats = _hat3_many(xis[:, :3])
        h = np.zeros((k, 4, 4))
        h[:, :3, :3] = hats
        h[:, :3, 3] = xis[:, 3:]
        h2 = h @ h
        self.hat_pows = (h, h2, h2 @ h)
        a = np.zeros((k, 6, 6))
        a[:, :3, :3] = hats
        a[:, 3:, 3:] = hats
        a[:, 3:, :3] = _hat3_many(xis[:, 3:])
        a2 = a @ a
        self.ad_pows = (a, a2, a2 @ a, a2 @ a2)

    def select(self, i: int) -> "TwistBatch":
        """View of one twist as a length-1 batch (no recomputation)."""
        tb = TwistBatch.__new__(TwistBatch)
        tb.xis = self.xis[i:i + 1]
        tb.theta = self.theta[i:i + 1]
        tb.hat_pows = tuple(p[i:i + 1] for p in self.hat_pows)
        tb.ad_pows = tuple(p[i:i + 1] for p in self.ad_pows)
        return tb

    def _sig(self, s):
        return self.theta.reshape(self.theta.shape + (1,) * (s.ndim - 1)) * s

    @staticmethod
    def _accumulate(out, pows, coeffs):
        extra = coeffs[0].ndim - 1
        for c, p in zip(coeffs, pows):
            pv = p.reshape((p.shape[0],) + (1,) * extra + p.shape[1:])
            out += c[..., None, None] * pv

    def transforms(self, svals) -> np.ndarray:
        """Homogeneous matrices exp(s * hat6(xi)), shape svals.shape + (4, 4)."""
        s = np.atleast_1d(np.asarray(svals, dtype=float))
        sig = self._sig(s)
        out = np.broadcast_to(_EYE4, s.shape + (4, 4)).copy()
        self._accumulate(out, self.hat_pows,
                         (s, s * s * _g2(sig), s ** 3 * _g3(sig)))
        return out

    def tangents(self, svals) -> np.ndarray:
        """Integrals of the inverse Adjoint over [0, s], shape svals.shape + (6, 6)."""
        s = np.atleast_1d(np.asarray(svals, dtype=float))
        sig = self._sig(s)
        out = s[..., None, None] * _EYE6
        self._accumulate(out, self.ad_pows,
                         (s * s * _f1(sig), s ** 3 * _f2(sig),
                          s ** 4 * _f3(sig), s ** 5 * _f4(sig)))
        return out

    def transforms_and_tangents(self, svals):
        """Both maps from one shared coefficient table (the integration hot path)."""
        s = np.atleast_1d(np.asarray(svals, dtype=float))
        tab = _screw_coeffs(self._sig(s))
        s2 = s * s
        s3 = s ** 3
        mats = np.broadcast_to(_EYE4, s.shape + (4, 4)).copy()
        self._accumulate(mats, self.hat_pows,
                         (s, s2 * tab[..., 0], s3 * tab[..., 1]))
        tans = s[..., None, None] * _EYE6
        self._accumulate(tans, self.ad_pows,
                         (s2 * tab[..., 2], s3 * tab[..., 3],
                          s ** 4 * tab[..., 4], s ** 5 * tab[..., 5]))
        return mats, tans


def ad_inverse_of_transforms(mats) -> np.ndarray:
    """Inverse Adjoints Ad(g)^-1 of a stack of homogeneous matrices, shape (k, 6, 6)."""
    mats = np.asarray(mats, dtype=float)
    r_t = np.swapaxes(mats[..., :3, :3], -1, -2)
    p = mats[..., :3, 3]
    out = np.zeros(mats.shape[:-2] + (6, 6))
    out[..., :3, :3] = r_t
    out[..., 3:, 3:] = r_t
    out[..., 3:, :3] = -np.matmul(r_t, _hat3_many(p))
    return out


def exp_so3(r) -> np.ndarray:
    """Rotation matrix exp(hat3(r)) via the Rodrigues form."""
    r = np.asarray(r, dtype=float)
    th = float(np.linalg.norm(r))
    k = hat3(r)
    if th < _SERIES_SWITCH:
        x = th * th
        a = 1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0
        b = 0.5 - x / 24.0 + x * x / 720.0 - x * x * x / 40320.0
    else:
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / (th * th)
    return np.eye(3) + a * k + b * (k @ k)


def log_so3(rmat) -> np.ndarray:
    """Rotation vector of a rotation matrix (principal branch only).

    Raises RotationNearPi within 1e-6 of the pi branch cut, where the principal
    logarithm is not continuous.
    """
    rmat = np.asarray(rmat, dtype=float)
    c = min(1.0, max(-1.0, (np.trace(rmat) - 1.0) / 2.0))
    th = float(np.arccos(c))
    if th > np.pi - _PI_GUARD:
        raise RotationNearPi(f"rotation angle {th:.9f} rad within 1e-6 of pi")
    w = vee3(rmat - rmat.T)
    if th < _SERIES_SWITCH:
        x = th * th
        scale = 0.5 + x / 12.0 + 7.0 * x * x / 720.0
    else:
        scale = th / (2.0 * np.sin(th))
    return scale * w


def _so3_left_jacobian_inv(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    th = float(np.linalg.norm(r))
    k = hat3(r)
    if th < _SERIES_SWITCH:
        x = th * th
        c = 1.0 / 12.0 + x / 720.0 + x * x / 30240.0
    else:
        c = (1.0 - 0.5 * th * np.sin(th) / (1.0 - np.cos(th))) / (th * th)
    return np.eye(3) - 0.5 * k + c * (k @ k)


def exp_se3(xi, s: float = 1.0) -> Pose:
    """Pose exp(s * hat6(xi)); s scales the twist (arc length along a section)."""
    m = TwistBatch(xi).transforms([float(s)])[0]
    return Pose(m[:3, :3], m[:3, 3])


def log_se3(g: Pose) -> np.ndarray:
    """Twist xi with exp_se3(xi, 1) == g.  Principal branch; see log_so3."""
    r = log_so3(g.rotation)
    return np.concatenate([r, _so3_left_jacobian_inv(r) @ g.position])


def Ad(g: Pose) -> np.ndarray:
    """6x6 Adjoint of a pose acting on angular-first twists."""
    rot = g.rotation
    out = np.zeros((6, 6))
    out[:3, :3] = rot
    out[3:, 3:] = rot
    out[3:, :3] = hat3(g.position) @ rot
    return out


def Ad_inverse(g: Pose) -> np.ndarray:
    """Ad(g)^-1 without forming the inverse pose."""
    rt = g.rotation.T
    out = np.zeros((6, 6))
    out[:3, :3] = rt
    out[3:, 3:] = rt
    out[3:, :3] = -rt @ hat3(g.position)
    return out


def ad(xi) -> np.ndarray:
    """6x6 algebra adjoint of a twist: ad(x) @ y == twist bracket [x, y]."""
    xi = np.asarray(xi, dtype=float)
    k = hat3(xi[:3])
    out = np.zeros((6, 6))
    out[:3, :3] = k
    out[3:, 3:] = k
    out[3:, :3] = hat3(xi[3:])
    return out


def tangent_T(xi, s) -> np.ndarray:
    """Integral of Ad(exp_se3(xi, u))^-1 over u in [0, s].

    Maps a strain rate to the body velocity it induces at arc length s into a
    constant-strain section: vee(g^-1 dg/dt) = tangent_T(xi, s) @ dxi/dt for
    g(t) = exp_se3(xi(t), s).  Closed form as a quartic polynomial in ad(xi);
    cross-checked against tangent_T_quadrature.
    """
    return TwistBatch(xi).tangents([float(s)])[0]


def tangent_T_quadrature(xi, s, order: int = 64) -> np.ndarray:
    """Gauss-Legendre evaluation of the same integral; the test oracle path."""
    s = float(s)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    mats = TwistBatch(xi).transforms((0.5 * s * (nodes + 1.0))[None, :])[0]
    adinvs = ad_inverse_of_transforms(mats)
    return np.einsum("k,kab->ab", 0.5 * s * weights, adinvs)


def W_map(r) -> np.ndarray:
    """Rate map from rotation-vector velocity to body angular velocity.

    W(r) @ dr/dt is the body angular velocity of exp_so3(r(t)).  Singular at
    ||r|| = 2*pi; raises NearSingular within 1e-6 of that.
    """
    r = np.asarray(r, dtype=float)
    th = float(np.linalg.norm(r))
    if th >= 2.0 * np.pi - 1e-6:
        raise NearSingular(f"rotation-vector norm {th:.9f} within 1e-6 of 2*pi")
    k = hat3(r)
    b = float(_g2(np.array([th]))[0])
    c = float(_g3(np.array([th]))[0])
    return np.eye(3) - b * k + c * (k @ k)
