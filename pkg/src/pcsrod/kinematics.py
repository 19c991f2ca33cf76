"""Forward kinematics of the constant-strain rod: product of exponentials.

Arc length X runs from 0 (clamped base) to L (tip).  A point at X inside
section m sits at pose ``G_{m-1} * exp_se3(xi_m, X - L_{m-1})`` where G_i is
the accumulated pose at the i-th section end.  Section boundaries resolve to
the proximal section (X = L_i belongs to section i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange
from .liegroup import Pose, TwistBatch, ad_inverse_of_transforms
from .rod import RodSpec


@dataclass
class ShapeSample:
    """One sampled backbone point: arc length and its pose."""

    arclength: float
    pose: Pose


def _locate(spec: RodSpec, x_arc: float):
    """Section index and local coordinate of an arc-length position."""
    if x_arc < 0.0 or x_arc > spec.length:
        raise OutOfRange(f"arc length {x_arc!r} outside [0, {spec.length}]")
    ends = spec.section_ends
    # side='left' keeps exact boundary hits in the proximal section
    x_arc = min(x_arc, ends[-1])
    m = int(np.searchsorted(ends, x_arc, side="left"))
    start = ends[m - 1] if m > 0 else 0.0
    return m, max(x_arc - start, 0.0)


class SectionProducts:
    """Per-section exponential factors for one strain vector.

    Built once per (spec, q) query and shared by every arc-length evaluation in
    that query; nothing is cached across calls.  ``jac_rows[i]`` is the 6 x 6n
    geometric Jacobian at the end of section i (body frame, angular-first);
    columns of sections distal to the query point are zero.

    ``node_grid`` (shape (n, p), local offsets per section) requests transforms
    and tangent blocks at extra interior points in the same batched sweep; they
    land in ``node_transforms`` / ``node_tangents``.
    """

    def __init__(self, spec: RodSpec, q, node_grid=None):
        q = np.asarray(q, dtype=float)
        if q.shape != (spec.dof,):
            raise ValueError(f"strain vector must have shape ({spec.dof},)")
        self.spec = spec
        self.q = q
        n = spec.num_sections
        self.batch = TwistBatch(q.reshape(n, 6))
        if node_grid is None:
            step_mats, own_blocks = self.batch.transforms_and_tangents(
                spec.section_lengths)
            self.node_transforms = None
            self.node_tangents = None
        else:
            # fold extra per-section arc lengths into the same batched sweep
            svals = np.concatenate([spec.section_lengths[:, None], node_grid],
                                   axis=1)
            mats, tans = self.batch.transforms_and_tangents(svals)
            step_mats = mats[:, 0]
            own_blocks = tans[:, 0]
            self.node_transforms = mats[:, 1:]
            self.node_tangents = tans[:, 1:]
        step_adinvs = ad_inverse_of_transforms(step_mats)
        self.poses = [Pose.identity()]       # accumulated pose at each section end
        self.adinv_ends = np.empty((n + 1, 6, 6))
        self.adinv_ends[0] = np.eye(6)
        self.jac_rows = np.zeros((n, 6, 6 * n))
        row = np.zeros((6, 6 * n))
        for i in range(n):
            mat = step_mats[i]
            row = step_adinvs[i] @ row
            row[:, 6 * i:6 * i + 6] = own_blocks[i]
            self.jac_rows[i] = row
            self.poses.append(self.poses[-1].compose(Pose(mat[:3, :3], mat[:3, 3])))
            self.adinv_ends[i + 1] = step_adinvs[i] @ self.adinv_ends[i]

    def pose_at(self, x_arc: float) -> Pose:
        m, x = _locate(self.spec, x_arc)
        mat = self.batch.select(m).transforms([x])[0]
        return self.poses[m].compose(Pose(mat[:3, :3], mat[:3, 3]))

    def jacobian_at(self, x_arc: float) -> np.ndarray:
        m, x = _locate(self.spec, x_arc)
        local = self.batch.select(m)
        adinv = ad_inverse_of_transforms(local.transforms([x]))[0]
        out = np.zeros((6, 6 * self.spec.num_sections))
        if m > 0:
            out[:, :6 * m] = adinv @ self.jac_rows[m - 1][:, :6 * m]
        out[:, 6 * m:6 * m + 6] = local.tangents([x])[0]
        return out


def fk_pose(spec: RodSpec, q, x_arc: float) -> Pose:
    """Pose of the backbone point at arc length x_arc for strain vector q."""
    return SectionProducts(spec, q).pose_at(x_arc)


def fk_shape(spec: RodSpec, q, samples_per_section: int = 40):
    """Backbone poses sampled uniformly within each section.

    Every section contributes samples_per_section + 1 points including both of
    its endpoints, so interior section boundaries appear twice (the two poses
    agree; adjacent sections are continuous).
    """
    if samples_per_section < 1:
        raise ValueError("samples_per_section must be >= 1")
    prods = SectionProducts(spec, q)
    fractions = np.linspace(0.0, 1.0, samples_per_section + 1)
    grid = spec.section_lengths[:, None] * fractions
    mats = prods.batch.transforms(grid)
    out = []
    start = 0.0
    for i in range(spec.num_sections):
        base = prods.poses[i]
        for x, mat in zip(grid[i], mats[i]):
            pose = base.compose(Pose(mat[:3, :3], mat[:3, 3]))
            out.append(ShapeSample(start + x, pose))
        start += spec.section_lengths[i]
    return out


def jacobian(spec: RodSpec, q, x_arc: float) -> np.ndarray:
    """Body geometric Jacobian at arc length x_arc, shape (6, 6n).

    Maps strain rates to the body velocity of the point at x_arc; columns of
    sections distal to x_arc are zero.
    """
    return SectionProducts(spec, q).jacobian_at(x_arc)


def body_velocity(spec: RodSpec, q, qdot, x_arc: float) -> np.ndarray:
    """Body twist at x_arc induced by the strain rate qdot."""
    qdot = np.asarray(qdot, dtype=float)
    return jacobian(spec, q, x_arc) @ qdot
