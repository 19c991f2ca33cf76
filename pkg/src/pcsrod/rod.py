"""Rod geometry, material law and generalized elastic matrices.

Units are SI throughout: lengths in m, moduli in Pa, density in kg/m^3,
viscosity in Pa*s, strains as [curvature (1/m), linear strain (-)] blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Strain of an undeformed rod: zero curvature, unit axial stretch, no shear.
REFERENCE_STRAIN = np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])


@dataclass(frozen=True)
class RodSpec:
    """Geometry and material of a circular-cross-section rod.

    ``section_lengths`` defaults to a uniform split of ``length`` into
    ``num_sections`` constant-strain sections.  ``gravity_twist`` is the
    distributed acceleration as an angular-first 6-vector (m/s^2 in the linear
    part), acting in the inertial frame.
    """

    length: float
    num_sections: int
    radius: float
    youngs_modulus: float
    poisson_ratio: float
    density: float
    shear_viscosity: float
    section_lengths: np.ndarray | None = None
    gravity_twist: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, 0.0, 0.0, 0.0, -9.81]))

    def __post_init__(self):
        if self.length <= 0.0:
            raise ValueError("rod length must be positive")
        if self.num_sections < 1:
            raise ValueError("need at least one section")
        for name in ("radius", "youngs_modulus", "density", "shear_viscosity"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not -1.0 < self.poisson_ratio <= 0.5:
            raise ValueError("poisson_ratio must lie in (-1, 0.5]")
        if self.section_lengths is None:
            lengths = np.full(self.num_sections, self.length / self.num_sections)
        else:
            lengths = np.asarray(self.section_lengths, dtype=float)
            if lengths.shape != (self.num_sections,):
                raise ValueError("section_lengths must have one entry per section")
            if (lengths <= 0.0).any():
                raise ValueError("section lengths must be positive")
            if abs(lengths.sum() - self.length) > 1e-12 * self.length:
                raise ValueError("section lengths must sum to the rod length")
        object.__setattr__(self, "section_lengths", lengths)
        grav = np.asarray(self.gravity_twist, dtype=float)
        if grav.shape != (6,):
            raise ValueError("gravity_twist must be a 6-vector")
        object.__setattr__(self, "gravity_twist", grav)

    @property
    def dof(self) -> int:
        return 6 * self.num_sections

    @property
    def section_ends(self) -> np.ndarray:
        return np.cumsum(self.section_lengths)


@dataclass
class SectionMatrices:
    """Per-unit-length screw matrices of one cross section (all 6x6 diagonal)."""

    stiffness: np.ndarray  # elastic screw stiffness, N*m^2 / N rows
    damping: np.ndarray    # viscous screw damping
    inertia: np.ndarray    # screw inertia density (rotary inertia / mass per length)


def cross_section(spec: RodSpec):
    """Area (m^2) and second moments (m^4) of the circular section.

    Returns ``(area, moments)`` with ``moments = [polar, bending, bending]``.
    """
    area = np.pi * spec.radius ** 2
    moments = np.array([2.0, 1.0, 1.0]) * area ** 2 / (4.0 * np.pi)
    return area, moments


def section_matrices(spec: RodSpec) -> SectionMatrices:
    area, (jx, jy, jz) = cross_section(spec)
    e = spec.youngs_modulus
    g = e / (2.0 * (1.0 + spec.poisson_ratio))
    nu_visc = spec.shear_viscosity
    stiffness = np.diag([g * jx, e * jy, e * jz, e * area, g * area, g * area])
    damping = nu_visc * np.diag([jx, 3.0 * jy, 3.0 * jz, 3.0 * area, area, area])
    inertia = spec.density * np.diag([jx, jy, jz, area, area, area])
    return SectionMatrices(stiffness, damping, inertia)


def reference_strain(spec: RodSpec) -> np.ndarray:
    """Stacked rest strain q*: the reference twist repeated per section."""
    return np.tile(REFERENCE_STRAIN, spec.num_sections)


def generalized_matrices(spec: RodSpec):
    """Stacked stiffness K, damping D (both 6n x 6n diagonal) and rest strain q*.

    Each section contributes its per-unit-length matrices scaled by the section
    length, so the stored energy is a plain quadratic form in q - q*.
    """
    sm = section_matrices(spec)
    k_blocks = [l * sm.stiffness for l in spec.section_lengths]
    d_blocks = [l * sm.damping for l in spec.section_lengths]
    n = spec.num_sections
    kmat = np.zeros((6 * n, 6 * n))
    dmat = np.zeros((6 * n, 6 * n))
    for i in range(n):
        kmat[6 * i:6 * i + 6, 6 * i:6 * i + 6] = k_blocks[i]
        dmat[6 * i:6 * i + 6, 6 * i:6 * i + 6] = d_blocks[i]
    return kmat, dmat, reference_strain(spec)


def potential_energy(spec: RodSpec, q) -> float:
    """Elastic energy 0.5 * (q - q*)^T K (q - q*) in joules."""
    q = np.asarray(q, dtype=float)
    kmat, _, q_rest = generalized_matrices(spec)
    dq = q - q_rest
    return float(0.5 * dq @ kmat @ dq)


def strain_energy_density(spec: RodSpec, q) -> float:
    """Summed per-section elastic energy density, in J/m.

    Each section contributes 0.5 * (xi - xi0)^T Sigma (xi - xi0) with the
    per-unit-length stiffness Sigma, i.e. the energy the section stores per
    meter of arc length.  Unlike ``potential_energy`` this does not weight by
    section length; it is the scalar used to compare solution branches in the
    bundled IK experiment.
    """
    q = np.asarray(q, dtype=float)
    sigma = np.diag(section_matrices(spec).stiffness)
    dq = (q - reference_strain(spec)).reshape(spec.num_sections, 6)
    return float(0.5 * np.sum(dq * dq * sigma))
