"""Stage-level models: axis stiffness, lumped modal model and branch chains.

Branch-chain layout (springs in N/m, masses in kg)::

    x/y chain                               z chain
    ground -k1- m1 -k2- m3 -k3- m2          ground -k6- m4 -k7- m5 -k8- ground
                        |
                        k4 - port -k5- ground

m1 carries the drive and is the input, m2 is the output stage. The port is
the intermediate z stage seen along x/y; it is massless and leaks motion when
k5 is finite. In the z chain m4 is driven and m5 is the decoupler side held
by the lateral stiffness of the x/y decouplers (k8).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg import eigh

from .kinetostatics import ALUMINIUM, Material
from .mcpf import FAMILIES, McpfParams, StiffnessReport, stiffness_report

# number of identical flexure units acting in parallel per axis
XY_COUNTS = {"xd": 6, "xg": 4}
Z_COUNTS = {"zg": 8, "zd": 4}


def axis_stiffness_xy(k_xdm: float, k_xgm: float) -> float:
    if k_xdm <= 0 or k_xgm <= 0:
        raise ValueError("motional stiffnesses must be positive")
    return XY_COUNTS["xd"] * k_xdm + XY_COUNTS["xg"] * k_xgm


def axis_stiffness_z(k_zgm: float, k_zdm: float) -> float:
    if k_zgm <= 0 or k_zdm <= 0:
        raise ValueError("motional stiffnesses must be positive")
    return Z_COUNTS["zg"] * k_zgm + Z_COUNTS["zd"] * k_zdm


@dataclass(frozen=True)
class ChainMasses:
    """Branch-chain masses; defaults split the lumped axis masses (0.412 / 0.355 kg)."""

    m1: float = 0.200
    m2: float = 0.132
    m3: float = 0.080
    m4: float = 0.355
    m5: float = 0.050

    def __post_init__(self):
        if min(self.m1, self.m2, self.m3, self.m4, self.m5) <= 0:
            raise ValueError("chain masses must be positive")


@dataclass(frozen=True)
class StageConfig:
    families: Mapping[str, McpfParams]
    material: Material = ALUMINIUM
    masses: tuple[float, float, float] = (0.412, 0.412, 0.355)
    damping: tuple[float, float, float] = (0.0, 0.0, 0.0)
    c5: float = 1.0
    c8: float = 1.0
    chain_masses: ChainMasses = field(default_factory=ChainMasses)

    def __post_init__(self):
        missing = set(FAMILIES) - set(self.families)
        if missing:
            raise ValueError(f"missing flexure families: {sorted(missing)}")
        if min(self.masses) <= 0:
            raise ValueError("masses must be positive")
        if min(self.damping) < 0:
            raise ValueError("damping must be non-negative")
        if self.c5 <= 0 or self.c8 <= 0:
            raise ValueError("proportional spring constants must be positive")

    def reports(self) -> dict[str, StiffnessReport]:
        return {f: stiffness_report(self.families[f], self.material, f) for f in FAMILIES}


def axis_stiffnesses(reports: Mapping[str, StiffnessReport]) -> tuple[float, float]:
    kxy = axis_stiffness_xy(reports["xd"].k_motional, reports["xg"].k_motional)
    kz = axis_stiffness_z(reports["zg"].k_motional, reports["zd"].k_motional)
    return kxy, kz


@dataclass(frozen=True)
class ModalResult:
    frequencies_hz: np.ndarray
    order: tuple[int, ...]  # axis/DOF index of each sorted frequency


def natural_frequencies(M, K) -> ModalResult:
    """Roots of |K - w^2 M| = 0 in Hz, sorted ascending."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if M.ndim == 2 and M.shape[0] == 1 and M.shape[1] > 1:
        M, K = np.diag(M[0]), np.diag(K[0])
    if np.any(np.diag(M) <= 0) or np.any(np.diag(K) <= 0):
        raise ValueError("mass and stiffness diagonals must be positive")
    if np.count_nonzero(M - np.diag(np.diag(M))) == 0 and np.count_nonzero(K - np.diag(np.diag(K))) == 0:
        f = np.sqrt(np.diag(K) / np.diag(M)) / (2 * np.pi)
        order = np.argsort(f, kind="stable")
        return ModalResult(f[order], tuple(int(i) for i in order))
    return ModalResult(general_modes(K, M), ())


def general_modes(K: np.ndarray, M: np.ndarray) -> np.ndarray:
    w2 = eigh(K, M, eigvals_only=True)
    if np.any(w2 <= 0):
        raise ValueError("stiffness/mass pencil is not positive definite")
    return np.sort(np.sqrt(w2) / (2 * np.pi))


@dataclass(frozen=True)
class ChainModel:
    kind: str  # "xy" or "z"
    springs: tuple[float, ...]  # k1..k8
    masses: ChainMasses
    c5: float = 1.0
    c8: float = 1.0

    def k(self, i: int) -> float:
        return self.springs[i - 1]

    def with_spring(self, i: int, value: float) -> "ChainModel":
        s = list(self.springs)
        s[i - 1] = value
        return ChainModel(self.kind, tuple(s), self.masses, self.c5, self.c8)

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Stiffness and mass matrices over the chain DOFs."""
        k = self.k
        m = self.masses
        if self.kind == "xy":
            # DOFs: m1 (input), m3 (guider), m2 (output)
            k45 = k(4) * k(5) / (k(4) + k(5))
            K = np.array([[k(1) + k(2), -k(2), 0.0],
                          [-k(2), k(2) + k(3) + k45, -k(3)],
                          [0.0, -k(3), k(3)]])
            M = np.diag([m.m1, m.m3, m.m2])
        elif self.kind == "z":
            K = np.array([[k(6) + k(7), -k(7)], [-k(7), k(7) + k(8)]])
            M = np.diag([m.m4, m.m5])
        else:
            raise ValueError(f"unknown chain kind {self.kind!r}")
        return K, M

    def as_dict(self) -> dict:
        return {"kind": self.kind, **{f"k{i + 1}_N_per_m": v for i, v in enumerate(self.springs)},
                **{f"m{i}_kg": getattr(self.masses, f"m{i}") for i in range(1, 6)}, "c5": self.c5, "c8": self.c8}


def build_chain_model(reports: Mapping[str, StiffnessReport], kind: str = "xy",
                      masses: ChainMasses | None = None, c5: float = 1.0, c8: float = 1.0) -> ChainModel:
    missing = set(FAMILIES) - set(reports)
    if missing:
        raise ValueError(f"missing flexure families: {sorted(missing)}")
    r = reports
    springs = (
        6 * r["xd"].k_motional,
        2 * r["zd"].k_lateral,
        4 * r["xg"].k_lateral,
        4 * r["xg"].k_motional,
        c5 * r["zg"].k_lateral,
        8 * r["zg"].k_motional,
        4 * r["zd"].k_motional,
        c8 * r["xd"].k_lateral,
    )
    return ChainModel(kind, springs, masses or ChainMasses(), c5, c8)


@dataclass(frozen=True)
class Transmission:
    x_in: float
    x_out: float
    loss: float
    port: float  # displacement leaked to the cross-axis port


def static_transmission(chain: ChainModel, force: float = 1.0) -> Transmission:
    K, _ = chain.matrices()
    f = np.zeros(len(K))
    f[0] = force
    try:
        x = np.linalg.solve(K, f)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular spring network") from exc
    if chain.kind == "xy":
        x_in, x_out = x[0], x[2]
        port = x[1] * chain.k(4) / (chain.k(4) + chain.k(5))
    else:
        x_in = x_out = x[0]
        port = x[1]
    loss = 1.0 - x_out / x_in if x_in != 0 else 0.0
    return Transmission(float(x_in), float(x_out), float(loss), float(port))


def chain_modes(chain: ChainModel) -> np.ndarray:
    K, M = chain.matrices()
    return general_modes(K, M)


def simplified_frequency(chain: ChainModel) -> float:
    """Single-DOF frequency from the motional springs and the total moving mass."""
    m = chain.masses
    if chain.kind == "xy":
        return float(np.sqrt((chain.k(1) + chain.k(4)) / (m.m1 + m.m2 + m.m3)) / (2 * np.pi))
    return float(np.sqrt((chain.k(6) + chain.k(7)) / m.m4) / (2 * np.pi))
