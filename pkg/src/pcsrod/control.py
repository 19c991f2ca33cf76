"""Feedback-linearizing quasi-static controllers.

Strain-space law: with error e = q_bar - q_bar_des, the effort

    u = D (-Kbar e - A e - A q_bar_des + dq_bar_des/dt) - N(q) @ gravity

cancels the open-loop terms of the strain dynamics exactly, leaving
de/dt = -Kbar e.  The realizing distributed wrench is J_bar^-T u.

Task-space law: for y = (r, x_tip) with r the tip rotation vector, the map
dy/dt = Abar q_bar + Bbar F_tip + Cbar gravity follows from the tip rows of
the strain dynamics with T = blkdiag(W(r)^-1, R(L)).  Picking the position
rows P = [0 I] and solving

    F_tip = (P Bbar)^+ (-P Abar q_bar - P Cbar gravity + dx_des/dt - Kbar_t e)

with e = x_tip - x_des yields de/dt = -Kbar_t e whenever P Bbar keeps row
rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient
from .liegroup import Pose, W_map, log_so3
from .statics import StaticsTerms, StaticsWorkspace, wrench_from_effort

_RANK_CUTOFF = 1e-8


def _check_gain(matrix, what, size=None):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{what} gain must be a square matrix")
    if size is not None and matrix.shape != (size, size):
        raise ValueError(f"{what} gain must be {size}x{size}")
    if np.abs(matrix - matrix.T).max() > 1e-12:
        raise ValueError(f"{what} gain must be symmetric")
    if np.linalg.eigvalsh(matrix).min() <= 0.0:
        raise ValueError(f"{what} gain must be positive definite")
    return matrix


@dataclass
class StrainGains:
    """Symmetric positive-definite strain error gain (6n x 6n)."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = _check_gain(self.matrix, "strain")

    @classmethod
    def uniform(cls, num_sections: int, gain: float = 2.0) -> "StrainGains":
        return cls(gain * np.eye(6 * num_sections))


@dataclass
class TaskGains:
    """Symmetric positive-definite tip position gain (3 x 3)."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = _check_gain(self.matrix, "task", size=3)

    @classmethod
    def uniform(cls, gain: float = 2.0) -> "TaskGains":
        return cls(gain * np.eye(3))


def strain_effort(ws: StaticsWorkspace, q_bar, q_bar_des, q_bar_des_dot,
                  gains: StrainGains, terms: StaticsTerms | None = None):
    """Generalized effort u of the strain-space law (no wrench recovery).

    Sufficient to advance the closed loop, since the dynamics only see
    J_bar^T F_bar = u; use :func:`strain_control` when the realizing wrench
    itself is wanted.
    """
    q_bar = np.asarray(q_bar, dtype=float)
    q_bar_des = np.asarray(q_bar_des, dtype=float)
    q_bar_des_dot = np.asarray(q_bar_des_dot, dtype=float)
    if terms is None:
        terms = ws.terms(q_bar)
    err = q_bar - q_bar_des
    v = -(gains.matrix @ err) - ws.a_diag * err - ws.a_diag * q_bar_des + q_bar_des_dot
    return ws.d_diag * v - terms.gravity_mat @ ws.gravity


def strain_control(ws: StaticsWorkspace, q_bar, q_bar_des, q_bar_des_dot,
                   gains: StrainGains, terms: StaticsTerms | None = None):
    """Effort u and the stacked wrench realizing it for the strain-space law."""
    if terms is None:
        terms = ws.terms(np.asarray(q_bar, dtype=float))
    u = strain_effort(ws, q_bar, q_bar_des, q_bar_des_dot, gains, terms)
    f_stacked = wrench_from_effort(terms.jac_stack, u)
    return u, f_stacked


@dataclass
class TaskCoordinates:
    """Tip task coordinates: rotation vector r and position x_tip."""

    orientation: np.ndarray
    position: np.ndarray


def task_coordinates(tip_pose: Pose, r_prev=None) -> TaskCoordinates:
    """Extract (r, x_tip) from the tip pose.

    With ``r_prev`` given, the rotation-vector branch closest to it is chosen so
    r stays continuous along a trajectory crossing the principal-branch edge.
    """
    r = log_so3(tip_pose.rotation)
    if r_prev is not None:
        r_prev = np.asarray(r_prev, dtype=float)
        norm = float(np.linalg.norm(r))
        if norm > 0.0:
            axis = r / norm
            candidates = (r, r - 2.0 * np.pi * axis, r + 2.0 * np.pi * axis)
            r = min(candidates, key=lambda c: float(np.linalg.norm(c - r_prev)))
    return TaskCoordinates(r, tip_pose.position.copy())


def task_T_matrix(coords: TaskCoordinates, tip_rotation) -> np.ndarray:
    """Block map from tip body velocity to task-coordinate rates.

    dy/dt = T @ [omega, nu]: W(r)^-1 turns body angular velocity into the
    rotation-vector rate, R(L) turns body linear velocity into the inertial
    tip velocity.
    """
    out = np.zeros((6, 6))
    out[:3, :3] = np.linalg.inv(W_map(coords.orientation))
    out[3:, 3:] = np.asarray(tip_rotation, dtype=float)
    return out


def task_matrices(ws: StaticsWorkspace, q_bar, coords: TaskCoordinates,
                  terms: StaticsTerms | None = None):
    """Coefficients (Abar, Bbar, Cbar) of dy/dt = Abar q_bar + Bbar F_tip + Cbar g."""
    q_bar = np.asarray(q_bar, dtype=float)
    if terms is None:
        terms = ws.terms(q_bar)
    tmat = task_T_matrix(coords, terms.tip_pose.rotation)
    tj = tmat @ terms.jac_tip
    a_bar = tj * ws.a_diag
    b_bar = (tj / ws.d_diag) @ terms.jac_tip.T
    c_bar = (tj / ws.d_diag) @ terms.gravity_mat
    return a_bar, b_bar, c_bar


def task_control_parts(ws: StaticsWorkspace, q_bar, coords: TaskCoordinates,
                       x_des, x_des_dot, gains: TaskGains,
                       terms: StaticsTerms | None = None):
    """Input map P Bbar (3x6) and target rate vector of the task-space law."""
    q_bar = np.asarray(q_bar, dtype=float)
    a_bar, b_bar, c_bar = task_matrices(ws, q_bar, coords, terms)
    pos_err = coords.position - np.asarray(x_des, dtype=float)
    rate = (-(a_bar[3:] @ q_bar) - c_bar[3:] @ ws.gravity
            + np.asarray(x_des_dot, dtype=float) - gains.matrix @ pos_err)
    return b_bar[3:], rate


def wrench_from_parts(input_map, rate) -> np.ndarray:
    """Minimum-norm tip wrench solving input_map @ F = rate via SVD."""
    u, s, vt = np.linalg.svd(input_map, full_matrices=False)
    if s[0] == 0.0 or s[-1] < _RANK_CUTOFF * s[0]:
        raise RankDeficient(
            f"task input map singular values {s[0]:.3e} .. {s[-1]:.3e}")
    return vt.T @ ((u.T @ rate) / s)


def task_control(ws: StaticsWorkspace, q_bar, coords: TaskCoordinates,
                 x_des, x_des_dot, gains: TaskGains,
                 terms: StaticsTerms | None = None) -> np.ndarray:
    """Tip wrench of the task-space law (moment-first 6-vector)."""
    input_map, rate = task_control_parts(ws, q_bar, coords, x_des, x_des_dot,
                                         gains, terms)
    return wrench_from_parts(input_map, rate)
