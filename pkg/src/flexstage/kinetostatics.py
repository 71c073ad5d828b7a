"""Section properties, spatial frames and the 6x6 wrench transformation.

Wrenches are packed as ``(Fx, Fy, Fz, Mx, My, Mz)`` everywhere in the package.
All quantities are SI (m, N, Pa).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class Material:
    """Linear-elastic isotropic material.

    Attributes:
        youngs_modulus: E in Pa.
        shear_modulus: G in Pa.
        shear_factor: Timoshenko shear factor (1.2 for rectangles).
        density: kg/m^3, only used for mass estimates.
    """

    youngs_modulus: float
    shear_modulus: float
    shear_factor: float = 1.2
    density: float = 2810.0

    def __post_init__(self):
        if not self.youngs_modulus > 0 or not self.shear_modulus > 0:
            raise ValueError("elastic moduli must be positive")
        if not self.shear_factor >= 1.0:
            raise ValueError("shear factor must be >= 1")
        if not self.density >= 0:
            raise ValueError("density must be non-negative")

    def scaled(self, s: float) -> "Material":
        return Material(self.youngs_modulus * s, self.shear_modulus * s, self.shear_factor, self.density)


# Aluminium alloy used for the flexures (E = 71 GPa, G = 26.7 GPa).
ALUMINIUM = Material(71e9, 26.7e9, 1.2, 2810.0)


@dataclass(frozen=True)
class CrossSection:
    """Rectangular section; ``t`` is the thin (bending) direction."""

    t: float
    b: float
    area: float
    iy: float
    iz: float
    ip: float


def section_properties(t: float, b: float) -> CrossSection:
    """Area, second moments and interpolated torsion constant of a t x b rectangle.

    ``I_z`` bends about the width axis (compliant), ``I_y`` about the thickness
    axis (stiff). Raises ValueError unless ``0 < t <= b``.
    """
    if not (t > 0 and b > 0):
        raise ValueError(f"section dimensions must be positive, got t={t}, b={b}")
    if t > b:
        raise ValueError(f"thickness must not exceed width (t={t} > b={b})")
    r = t / b
    return CrossSection(
        t=t,
        b=b,
        area=t * b,
        iy=t * b**3 / 12.0,
        iz=b * t**3 / 12.0,
        ip=t**3 * b * (1.0 / 3.0 - 0.21 * r + 0.0175 * r**5),
    )


def skew(v) -> np.ndarray:
    """Matrix form of the cross product: ``skew(v) @ u == np.cross(v, u)``."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def _check_rotation(R: np.ndarray) -> None:
    if R.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    if not np.allclose(R.T @ R, np.eye(3), atol=ORTHO_TOL * 10, rtol=0):
        raise ValueError("rotation matrix is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL * 10:
        raise ValueError("rotation matrix is not proper (det != +1)")


@dataclass(frozen=True)
class SpatialFrame:
    """Frame given by its rotation (local -> parent) and origin in the parent."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        r = np.array(self.origin, dtype=float).reshape(3)
        _check_rotation(R)
        R.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "origin", r)

    def to_parent(self, p) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.origin


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def transfer_matrix(R: np.ndarray, r) -> np.ndarray:
    """Block matrix ``[[R, 0], [skew(r) R, R]]``.

    Maps a wrench expressed in a frame rotated by ``R`` and located at ``r``
    (relative to the target origin, target axes) onto the target frame.
    """
    J = np.zeros((6, 6))
    J[:3, :3] = R
    J[3:, 3:] = R
    J[3:, :3] = skew(r) @ R
    return J


def wrench_transform(src: SpatialFrame, dst: SpatialFrame) -> np.ndarray:
    """6x6 matrix moving a wrench from ``src`` to ``dst`` (both in a common parent).

    The moment picks up ``r x F`` where ``r`` is the position of the source
    origin seen from the destination origin, in destination axes.
    """
    R = dst.rotation.T @ src.rotation
    r = dst.rotation.T @ (src.origin - dst.origin)
    return transfer_matrix(R, r)
