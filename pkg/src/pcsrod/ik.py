"""Newton-Raphson inverse kinematics on the tip pose.

The residual is the body-frame error twist log(g(L)^-1 g_des); the update is
the Moore-Penrose pseudoinverse of the tip Jacobian applied to it.  A simple
backtracking rule halves the step up to four times when the error norm would
increase; the plain Newton path is untouched whenever it already decreases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinematics import SectionProducts
from .liegroup import Pose, log_se3
from .rod import RodSpec


@dataclass
class IkSettings:
    tolerance: float = 1e-6          # on the error-twist norm
    max_iterations: int = 200
    step_scale: float = 1.0
    pinv_cutoff: float = 1e-8        # relative singular-value cutoff


@dataclass
class IkResult:
    q: np.ndarray
    iterations: int
    final_error: float
    converged: bool
    error_history: list = field(default_factory=list)


def _error_twist(spec: RodSpec, q, target: Pose):
    prods = SectionProducts(spec, q)
    tip = prods.poses[-1]
    return log_se3(tip.inverse().compose(target)), prods


def solve_ik(spec: RodSpec, target: Pose, q0, settings: IkSettings | None = None) -> IkResult:
    """Strain vector whose tip pose matches the target, from initial guess q0.

    Returns the best iterate with ``converged = False`` when the iteration cap
    is reached; never raises for plain non-convergence.
    """
    settings = settings or IkSettings()
    q = np.asarray(q0, dtype=float).copy()
    err, prods = _error_twist(spec, q, target)
    err_norm = float(np.linalg.norm(err))
    history = [err_norm]
    best_q, best_norm = q.copy(), err_norm
    iterations = 0
    while err_norm >= settings.tolerance and iterations < settings.max_iterations:
        jac = prods.jac_rows[-1]
        step = np.linalg.pinv(jac, rcond=settings.pinv_cutoff) @ err
        alpha = settings.step_scale
        for halving in range(5):
            q_new = q + alpha * step
            err_new, prods_new = _error_twist(spec, q_new, target)
            new_norm = float(np.linalg.norm(err_new))
            if new_norm <= err_norm or halving == 4:
                break
            alpha *= 0.5
        q, err, err_norm, prods = q_new, err_new, new_norm, prods_new
        iterations += 1
        history.append(err_norm)
        if err_norm < best_norm:
            best_q, best_norm = q.copy(), err_norm
    converged = err_norm < settings.tolerance
    if not converged:
        q, err_norm = best_q, best_norm
    return IkResult(q, iterations, err_norm, converged, history)


def solve_ik_tracking(spec: RodSpec, target: Pose, q_warm,
                      settings: IkSettings | None = None) -> IkResult:
    """Same routine, named for the warm-started per-sample use in tracking."""
    return solve_ik(spec, target, q_warm, settings)
