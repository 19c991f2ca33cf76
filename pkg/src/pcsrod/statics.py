"""Quasi-static strain dynamics of the viscously damped rod.

With q_bar = q - q* the first-order model is

    dq_bar/dt = A q_bar + D^-1 (effort + N(q) @ gravity),    A = -D^-1 K,

where the effort is J_bar^T F_bar for distributed per-section-end wrenches or
J(L)^T F_tip for a tip wrench, and N(q) is the gravity integral of J^T M Ad^-1
along the backbone.  K and D are diagonal, so A is diagonal and Hurwitz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularJacobian
from .kinematics import SectionProducts
from .liegroup import ad_inverse_of_transforms
from .rod import RodSpec, generalized_matrices, section_matrices

_CONDITION_LIMIT = 1e12


@dataclass
class StaticsTerms:
    """Configuration-dependent quantities shared by one evaluation.

    Built once per state by :meth:`StaticsWorkspace.terms` and passed around so
    the control law and the strain dynamics see identical matrices.
    """

    q: np.ndarray
    kin: SectionProducts
    gravity_mat: np.ndarray   # (6n, 6) integral of J^T M Ad(g)^-1 dX
    jac_stack: np.ndarray     # (6n, 6n) section-end Jacobians stacked row-block-wise

    @property
    def jac_tip(self) -> np.ndarray:
        return self.kin.jac_rows[-1]

    @property
    def tip_pose(self):
        return self.kin.poses[-1]


class StaticsWorkspace:
    """Precomputed matrices and quadrature grid for one rod.

    Immutable after construction; reusable across time steps and threads.
    """

    def __init__(self, spec: RodSpec, nodes_per_section: int = 5):
        self.spec = spec
        self.nodes_per_section = nodes_per_section
        kmat, dmat, q_rest = generalized_matrices(spec)
        self.stiffness = kmat
        self.damping = dmat
        self.q_rest = q_rest
        self.k_diag = np.diag(kmat).copy()
        self.d_diag = np.diag(dmat).copy()
        self.a_diag = -self.k_diag / self.d_diag
        self.decay = np.diag(self.a_diag)
        self.inertia_diag = np.diag(section_matrices(spec).inertia).copy()
        self.gravity = spec.gravity_twist
        nodes, weights = np.polynomial.legendre.leggauss(nodes_per_section)
        half = 0.5 * spec.section_lengths[:, None]
        self.local_nodes = half * (nodes + 1.0)    # (n, p) per-section offsets
        self.local_weights = half * weights

    def terms(self, q_bar) -> StaticsTerms:
        q_bar = np.asarray(q_bar, dtype=float)
        q = q_bar + self.q_rest
        kin = SectionProducts(self.spec, q, node_grid=self.local_nodes)
        grav = _gravity_integral(kin, self.inertia_diag, self.local_weights)
        n = self.spec.num_sections
        jac_stack = kin.jac_rows.reshape(6 * n, 6 * n)
        return StaticsTerms(q, kin, grav, jac_stack)

    def rhs_effort(self, q_bar, u, terms: StaticsTerms | None = None):
        """Strain rate under a generalized effort u = J_bar^T F_bar."""
        q_bar = np.asarray(q_bar, dtype=float)
        if terms is None:
            terms = self.terms(q_bar)
        u = np.asarray(u, dtype=float)
        return self.a_diag * q_bar + (u + terms.gravity_mat @ self.gravity) / self.d_diag

    def rhs_distributed(self, q_bar, f_stacked, terms: StaticsTerms | None = None):
        """Strain rate under per-section-end wrenches stacked into a 6n vector."""
        q_bar = np.asarray(q_bar, dtype=float)
        if terms is None:
            terms = self.terms(q_bar)
        effort = terms.jac_stack.T @ np.asarray(f_stacked, dtype=float)
        return self.a_diag * q_bar + (effort + terms.gravity_mat @ self.gravity) / self.d_diag

    def rhs_tip(self, q_bar, f_tip, terms: StaticsTerms | None = None):
        """Strain rate under a single wrench applied at the tip."""
        q_bar = np.asarray(q_bar, dtype=float)
        if terms is None:
            terms = self.terms(q_bar)
        effort = terms.jac_tip.T @ np.asarray(f_tip, dtype=float)
        return self.a_diag * q_bar + (effort + terms.gravity_mat @ self.gravity) / self.d_diag


def _gravity_integral(kin: SectionProducts, inertia_diag, local_weights):
    n = kin.spec.num_sections
    adinvs = ad_inverse_of_transforms(kin.node_transforms)
    tangents = kin.node_tangents
    # Ad(g(X))^-1 = Ad(exp(x xi_m))^-1 Ad(G_{m-1})^-1, weighted by quadrature
    # and the inertia density; J(X) columns split into the proximal rows
    # (recursion prefix) and the section's own tangent block.
    ad_world = adinvs @ kin.adinv_ends[None, :-1].swapaxes(0, 1)
    weighted = local_weights[:, :, None, None] * (inertia_diag[:, None] * ad_world)
    out = np.zeros((6 * n, 6))
    own = np.einsum("mkji,mkjl->mil", tangents, weighted)
    prefix = np.einsum("mkji,mkjl->mil", adinvs, weighted)
    for m in range(n):
        out[6 * m:6 * m + 6] += own[m]
        if m > 0:
            out[:6 * m] += kin.jac_rows[m - 1][:, :6 * m].T @ prefix[m]
    return out


def gravity_matrix(spec: RodSpec, q, nodes_per_section: int = 5) -> np.ndarray:
    """Generalized gravity map N(q), shape (6n, 6).

    N(q) @ gravity_twist is the generalized force of the distributed load;
    fixed-order Gauss-Legendre quadrature per section.
    """
    nodes, weights = np.polynomial.legendre.leggauss(nodes_per_section)
    half = 0.5 * spec.section_lengths[:, None]
    kin = SectionProducts(spec, np.asarray(q, dtype=float),
                          node_grid=half * (nodes + 1.0))
    inertia_diag = np.diag(section_matrices(spec).inertia).copy()
    return _gravity_integral(kin, inertia_diag, half * weights)


def stacked_jacobian(spec: RodSpec, q) -> np.ndarray:
    """Section-end Jacobians stacked into a 6n x 6n block-lower-triangular matrix."""
    kin = SectionProducts(spec, np.asarray(q, dtype=float))
    n = spec.num_sections
    return kin.jac_rows.reshape(6 * n, 6 * n)


def strain_rhs_distributed(ws: StaticsWorkspace, q_bar, f_stacked,
                           terms: StaticsTerms | None = None) -> np.ndarray:
    return ws.rhs_distributed(q_bar, f_stacked, terms)


def strain_rhs_tip(ws: StaticsWorkspace, q_bar, f_tip,
                   terms: StaticsTerms | None = None) -> np.ndarray:
    return ws.rhs_tip(q_bar, f_tip, terms)


def wrench_from_effort(jac_stack, u) -> np.ndarray:
    """Solve jac_stack^T @ f = u for the stacked wrench realizing an effort u.

    Guards with a 1-norm condition estimate (solved alongside the main system
    from one factorization) rather than an SVD; this routine sits on the
    per-stage control path.
    """
    jt = np.asarray(jac_stack).T
    u = np.asarray(u, dtype=float)
    rhs = np.concatenate([u[:, None], np.eye(len(u))], axis=1)
    try:
        sol = np.linalg.solve(jt, rhs)
    except np.linalg.LinAlgError:
        raise SingularJacobian("stacked Jacobian is singular") from None
    cond = np.abs(jt).sum(axis=0).max() * np.abs(sol[:, 1:]).sum(axis=0).max()
    if not np.isfinite(cond) or cond > _CONDITION_LIMIT:
        raise SingularJacobian(f"stacked Jacobian condition number {cond:.3e}")
    return sol[:, 0]


def solve_wrench_from_u(spec: RodSpec, q, u) -> np.ndarray:
    """Stacked per-section-end wrench whose generalized effort equals u."""
    return wrench_from_effort(stacked_jacobian(spec, q), u)
