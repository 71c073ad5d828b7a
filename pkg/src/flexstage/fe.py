"""Independent 3D frame finite-element solver used to check the energy model.

Two-node, 12-DOF Timoshenko beam elements (shear-flexible, exact for
prismatic members under end loads). Rigid bodies are single nodes; beam ends
attach to them through rigid offsets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kinetostatics import CrossSection, Material, skew
from .mcpf import GROUND, HalfMcpfSkeleton, LoadCase, MOTIONAL


class SingularModelError(RuntimeError):
    def __init__(self, msg, mode=None):
        super().__init__(msg)
        self.mode = mode


@dataclass
class FrameElement:
    n1: int
    n2: int
    section: CrossSection
    material: Material
    y_axis: np.ndarray  # reference direction for the local y (thin) axis
    offset1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    offset2: np.ndarray = field(default_factory=lambda: np.zeros(3))
    shear: bool = True


@dataclass
class FrameModel:
    nodes: list[np.ndarray] = field(default_factory=list)
    elements: list[FrameElement] = field(default_factory=list)
    fixed: dict[int, tuple[int, ...]] = field(default_factory=dict)
    loads: dict[int, np.ndarray] = field(default_factory=dict)

    def add_node(self, p) -> int:
        self.nodes.append(np.asarray(p, dtype=float))
        return len(self.nodes) - 1

    def to_json(self) -> str:
        return json.dumps({
            "nodes_m": [list(map(float, p)) for p in self.nodes],
            "elements": [{"nodes": [e.n1, e.n2], "t_m": e.section.t, "b_m": e.section.b,
                          "E_Pa": e.material.youngs_modulus, "G_Pa": e.material.shear_modulus,
                          "y_axis": list(map(float, e.y_axis)),
                          "offsets_m": [list(map(float, e.offset1)), list(map(float, e.offset2))]}
                         for e in self.elements],
            "constraints": {str(k): list(v) for k, v in sorted(self.fixed.items())},
            "loads": {str(k): list(map(float, v)) for k, v in sorted(self.loads.items())},
        }, indent=1)


def local_stiffness(L: float, sec: CrossSection, mat: Material, shear: bool = True) -> np.ndarray:
    E, G = mat.youngs_modulus, mat.shear_modulus
    a = mat.shear_factor if shear else 0.0
    k = np.zeros((12, 12))
    ea = E * sec.area / L
    gj = G * sec.ip / L
    k[0, 0] = k[6, 6] = ea
    k[0, 6] = k[6, 0] = -ea
    k[3, 3] = k[9, 9] = gj
    k[3, 9] = k[9, 3] = -gj
    # bending in the local xy plane (v, theta_z)
    phi = 12 * E * sec.iz * a / (G * sec.area * L**2)
    c = E * sec.iz / (L**3 * (1 + phi))
    v1, r1, v2, r2 = 1, 5, 7, 11
    ent = {(v1, v1): 12, (v1, r1): 6 * L, (v1, v2): -12, (v1, r2): 6 * L,
           (r1, r1): (4 + phi) * L**2, (r1, v2): -6 * L, (r1, r2): (2 - phi) * L**2,
           (v2, v2): 12, (v2, r2): -6 * L, (r2, r2): (4 + phi) * L**2}
    for (i, j), val in ent.items():
        k[i, j] = k[j, i] = c * val
    # bending in the local xz plane (w, theta_y)
    phi = 12 * E * sec.iy * a / (G * sec.area * L**2)
    c = E * sec.iy / (L**3 * (1 + phi))
    w1, s1, w2, s2 = 2, 4, 8, 10
    ent = {(w1, w1): 12, (w1, s1): -6 * L, (w1, w2): -12, (w1, s2): -6 * L,
           (s1, s1): (4 + phi) * L**2, (s1, w2): 6 * L, (s1, s2): (2 - phi) * L**2,
           (w2, w2): 12, (w2, s2): 6 * L, (s2, s2): (4 + phi) * L**2}
    for (i, j), val in ent.items():
        k[i, j] = k[j, i] = c * val
    return k


def _element_matrix(model: FrameModel, e: FrameElement) -> np.ndarray:
    p1 = model.nodes[e.n1] + e.offset1
    p2 = model.nodes[e.n2] + e.offset2
    d = p2 - p1
    L = float(np.linalg.norm(d))
    if L <= 0:
        raise ValueError("zero-length element")
    ex = d / L
    ey = e.y_axis - ex * (e.y_axis @ ex)
    ey /= np.linalg.norm(ey)
    ez = np.cross(ex, ey)
    lam = np.vstack([ex, ey, ez])
    T = np.kron(np.eye(4), lam)
    A = np.eye(12)
    A[0:3, 3:6] = -skew(e.offset1)
    A[6:9, 9:12] = -skew(e.offset2)
    TA = T @ A
    return TA.T @ local_stiffness(L, e.section, e.material, e.shear) @ TA


@dataclass
class FrameSolution:
    displacements: np.ndarray  # (n_nodes, 6)
    reactions: dict[int, np.ndarray]
    residual: float


def assemble(model: FrameModel) -> np.ndarray:
    n = 6 * len(model.nodes)
    K = np.zeros((n, n))
    for e in model.elements:
        ke = _element_matrix(model, e)
        dofs = np.r_[6 * e.n1:6 * e.n1 + 6, 6 * e.n2:6 * e.n2 + 6]
        K[np.ix_(dofs, dofs)] += ke
    return K


def min_eigenvalue(model: FrameModel) -> float:
    """Smallest eigenvalue of the constrained stiffness matrix."""
    K = assemble(model)
    fixed = {6 * nd + d for nd, ds in model.fixed.items() for d in ds}
    free = [i for i in range(K.shape[0]) if i not in fixed]
    return float(np.linalg.eigvalsh(K[np.ix_(free, free)])[0])


def assemble_and_solve(model: FrameModel) -> FrameSolution:
    """Linear static solve; raises SingularModelError for under-constrained models."""
    used = {e.n1 for e in model.elements} | {e.n2 for e in model.elements}
    orphans = set(range(len(model.nodes))) - used
    if orphans:
        raise ValueError(f"orphan nodes: {sorted(orphans)}")
    K = assemble(model)
    n = K.shape[0]
    f = np.zeros(n)
    for node, w in model.loads.items():
        f[6 * node:6 * node + 6] += w
    fixed = np.array(sorted(6 * nd + d for nd, ds in model.fixed.items() for d in ds), dtype=int)
    free = np.setdiff1d(np.arange(n), fixed)
    Kff = K[np.ix_(free, free)]
    scale = np.max(np.abs(np.diag(Kff)))
    # stiffness spans many decades (axial vs bending), so scale symmetrically
    dsc = 1.0 / np.sqrt(np.abs(np.diag(Kff)))
    Ks = Kff * dsc[:, None] * dsc[None, :]
    try:
        cf = cho_factor(Ks)
        if np.min(np.abs(np.diag(cf[0]))) ** 2 < 1e-13:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        evals, evecs = np.linalg.eigh(Ks)
        mode = np.zeros(n)
        mode[free] = evecs[:, 0] * dsc
        raise SingularModelError(f"singular stiffness matrix (min eigenvalue {evals[0]:.3g})",
                                 mode.reshape(-1, 6)) from None
    u = np.zeros(n)
    u[free] = dsc * cho_solve(cf, dsc * f[free])
    r = K @ u - f
    residual = float(np.linalg.norm(r[free]) / max(np.linalg.norm(f), scale * 1e-300))
    reactions = {nd: r[6 * nd:6 * nd + 6] for nd in model.fixed}
    return FrameSolution(u.reshape(-1, 6), reactions, residual)


# ------------------------------------------------------------ skeleton meshing

def skeleton_model(skel: HalfMcpfSkeleton, material: Material, elements_per_segment: int = 8,
                   mirror: bool = False) -> tuple[FrameModel, int]:
    """Mesh a half skeleton, optionally with its mirror image across y = 0.

    Returns the model and the index of the P-block node.
    """
    if elements_per_segment < 1:
        raise ValueError("need at least one element per segment")
    model = FrameModel()
    copies = [np.eye(3)] + ([np.diag([1.0, -1.0, 1.0])] if mirror else [])
    p_node = model.add_node(skel.body_points[0])
    for M in copies:
        body_nodes = {0: p_node}
        for b in range(1, skel.n_bodies):
            body_nodes[b] = model.add_node(M @ skel.body_points[b])
        for sg in skel.segments:
            a, c = M @ sg.start, M @ sg.end
            y_ref = M @ sg.frame.rotation[:, 1]
            chain = []
            for end, body in ((a, sg.start_body), (c, sg.end_body)):
                if body == GROUND:
                    nd = model.add_node(end)
                    model.fixed[nd] = tuple(range(6))
                    chain.append((nd, np.zeros(3)))
                else:
                    nd = body_nodes[body]
                    chain.append((nd, end - model.nodes[nd]))
            inner = [model.add_node(a + (c - a) * j / elements_per_segment)
                     for j in range(1, elements_per_segment)]
            ids = [chain[0]] + [(i, np.zeros(3)) for i in inner] + [chain[1]]
            for (n1, o1), (n2, o2) in zip(ids[:-1], ids[1:]):
                model.elements.append(FrameElement(n1, n2, sg.section, material, y_ref, o1, o2))
    return model, p_node


def fe_stiffness(skel: HalfMcpfSkeleton, case: LoadCase, material: Material,
                 elements_per_segment: int = 8, full: bool = False) -> float:
    """Drive-point stiffness of the half skeleton (symmetry held at P) or of the
    full mirrored unit when ``full`` is set."""
    if elements_per_segment < 4:
        raise ValueError("at least 4 elements per compliant segment are required")
    model, p = skeleton_model(skel, material, elements_per_segment, mirror=full)
    if not full:
        model.fixed[p] = tuple(case.equilibrium_rows[j] for j in case.symmetry_held)
    d = case.drive_direction
    model.loads[p] = d.copy()
    sol = assemble_and_solve(model)
    return 1.0 / float(sol.displacements[p] @ d)


def fe_stiffness_report(params, material, elements_per_segment: int = 8) -> tuple[float, float]:
    """Full-unit (motional, lateral) stiffness from two half models in parallel."""
    from .mcpf import LATERAL, build_half_skeleton

    skel = build_half_skeleton(params)
    return tuple(2.0 * fe_stiffness(skel, c, material, elements_per_segment) for c in (MOTIONAL, LATERAL))
