"""Castigliano stiffness model of multi-layer compound parallelogram flexures.

The half unit is a planar skeleton. Beams run along x, the motion direction is
in-plane (y) and the beam width ``b`` lies along z. Layer ``k`` is a pair of
beams mirrored about the load axis through P::

        ground            ground            (last layer, k = n)
          |===== I(n-1) =====|                 ...
          |===== I1 ==========|               layer 2, folded inward
        =====[ P block ]=====                 layer 1, y = 0

Layers alternate between running outward and inward and are stacked in y at
``(k - 1) * rigid_link_span``. Intermediate frames and the P block are rigid.

The unknowns are the end wrenches carried by every beam. Minimising the
complementary strain energy subject to equilibrium of every rigid body is
Castigliano's compatibility condition for the redundant reactions; the
Lagrange multiplier on the P block is the drive-point displacement.
"""

from __future__ import annotations

import enum
import itertools
import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import null_space

from .kinetostatics import (
    ALUMINIUM,
    CrossSection,
    Material,
    SpatialFrame,
    rot_z,
    section_properties,
    transfer_matrix,
)

log = logging.getLogger(__name__)

GROUND = -1
FAMILIES = ("xg", "xd", "zg", "zd")

# drive point frame: local z is the motion direction (global y), local y is
# the out-of-plane direction (global z)
P_ROTATION = np.array([[-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])


class SkeletonError(ValueError):
    """Raised for an ill-posed skeleton (singular compatibility system)."""


@dataclass(frozen=True)
class McpfParams:
    """Geometry of one flexure unit, in metres.

    ``rigid_link_span`` defaults to ``l / 10``.
    """

    t: float
    l: float
    b: float
    layer_count: int = 3
    rigid_link_span: float | None = None

    def __post_init__(self):
        if not (self.t > 0 and self.l > 0 and self.b > 0):
            raise ValueError("t, l and b must be positive")
        if int(self.layer_count) != self.layer_count or self.layer_count < 1:
            raise ValueError("layer_count must be a positive integer")
        if self.l < 10 * self.t:
            raise ValueError(f"slender-beam assumption violated: l={self.l} < 10 t")
        if self.l < 20 * self.t:
            warnings.warn("l < 20 t: geometric nonlinearity is not modelled", stacklevel=2)
        if self.rigid_link_span is not None and self.rigid_link_span < 0:
            raise ValueError("rigid_link_span must be non-negative")

    @property
    def span(self) -> float:
        return self.l / 10.0 if self.rigid_link_span is None else self.rigid_link_span

    def with_(self, **kw) -> "McpfParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class Segment:
    """Compliant beam from ``start`` to ``end``; ``frame`` sits at the start."""

    frame: SpatialFrame
    length: float
    section: CrossSection
    start_body: int
    end_body: int

    @property
    def start(self) -> np.ndarray:
        return self.frame.origin

    @property
    def end(self) -> np.ndarray:
        return self.frame.to_parent([self.length, 0.0, 0.0])


@dataclass(frozen=True)
class HalfMcpfSkeleton:
    params: McpfParams
    segments: tuple[Segment, ...]
    body_points: tuple[np.ndarray, ...]  # reference point per rigid body, body 0 is the P block
    load_point: np.ndarray
    reaction_points: dict[str, tuple[int, str]] = field(default_factory=dict)  # label -> (segment, "start"|"end")

    @property
    def n_bodies(self) -> int:
        return len(self.body_points)

    def mirrored(self) -> "HalfMcpfSkeleton":
        """Reflection x -> -x; the layout maps onto itself with segments swapped."""
        M = np.diag([-1.0, 1.0, 1.0])
        segs = []
        for s in self.segments:
            p0, p1 = M @ s.start, M @ s.end
            d = p1 - p0
            R = rot_z(np.arctan2(d[1], d[0]))
            segs.append(replace(s, frame=SpatialFrame(R, p0)))
        return replace(self, segments=tuple(segs), body_points=tuple(M @ p for p in self.body_points),
                       load_point=M @ self.load_point)


class CaseKind(enum.Enum):
    MOTIONAL = "motional"
    LATERAL = "lateral"


@dataclass(frozen=True)
class LoadCase:
    """Component pattern for one stiffness computation.

    ``drive_local`` is the component index in the P frame, ``reaction_components``
    the wrench components carried by the beams and supports (local frames), and
    ``equilibrium_rows`` the planar/out-of-plane rows used for body balance.
    """

    kind: CaseKind
    drive_local: int
    reaction_components: tuple[int, int, int]
    equilibrium_rows: tuple[int, int, int]
    # global components at P held by the mirrored half (positions in equilibrium_rows)
    symmetry_held: tuple[int, ...] = ()

    @property
    def drive_direction(self) -> np.ndarray:
        e = np.zeros(6)
        e[self.drive_local] = 1.0
        return transfer_matrix(P_ROTATION, np.zeros(3)) @ e


# The full unit is the half plus its mirror image across y = 0 sharing the P
# block. A drive along y is antisymmetric for that mirror (u_x held at P), a
# drive along z is symmetric (rotation about x held at P).
MOTIONAL = LoadCase(CaseKind.MOTIONAL, drive_local=2, reaction_components=(0, 1, 5),
                    equilibrium_rows=(0, 1, 5), symmetry_held=(0,))
LATERAL = LoadCase(CaseKind.LATERAL, drive_local=1, reaction_components=(2, 3, 4),
                   equilibrium_rows=(2, 3, 4), symmetry_held=(1,))


@dataclass(frozen=True)
class _Layout:
    rotation: np.ndarray  # (m, 3, 3) beam axes
    start: np.ndarray  # (m, 3)
    end: np.ndarray  # (m, 3)
    start_body: np.ndarray  # (m,)
    end_body: np.ndarray  # (m,)
    body_points: np.ndarray  # (nb, 3)


def _layout(params: McpfParams) -> _Layout:
    n, s = params.layer_count, params.span
    inner, outer = s, s + params.l  # the P block half width equals the link span
    flip = rot_z(np.pi)
    R, p0, p1, b0, b1 = [], [], [], [], []
    for k in range(1, n + 1):
        y = (k - 1) * s
        x0, x1 = (inner, outer) if k % 2 else (outer, inner)
        for side in (1.0, -1.0):
            a, c = side * x0, side * x1
            R.append(np.eye(3) if c > a else flip)
            p0.append((a, y, 0.0))
            p1.append((c, y, 0.0))
            b0.append(k - 1)
            b1.append(k if k < n else GROUND)
    p0, p1, b0, b1 = np.array(p0), np.array(p1), np.array(b0), np.array(b1)
    bodies = [np.zeros(3)]
    for k in range(1, n):
        pts = np.vstack([p1[b1 == k], p0[b0 == k]])
        bodies.append(pts.mean(axis=0))
    return _Layout(np.array(R), p0, p1, b0, b1, np.array(bodies))


def build_half_skeleton(params: McpfParams) -> HalfMcpfSkeleton:
    """Lay out ``2 * layer_count`` beams, the P block and the intermediate frames."""
    lay = _layout(params)
    sec = section_properties(params.t, params.b)
    segs = tuple(Segment(SpatialFrame(R, p0), params.l, sec, int(b0), int(b1))
                 for R, p0, b0, b1 in zip(lay.rotation, lay.start, lay.start_body, lay.end_body))
    labels = iter("ABCDEFGH")
    reactions = {next(labels): (i, "end") for i, sg in enumerate(segs) if sg.end_body == GROUND}
    return HalfMcpfSkeleton(params, segs, tuple(lay.body_points), np.zeros(3), reactions)


def segment_compliance(length: float, sec: CrossSection, mat: Material) -> np.ndarray:
    """Closed-form flexibility of a straight beam loaded at its free end.

    ``U = 1/2 w^T C w`` for an end wrench ``w`` in the beam frame; integrates
    ``1/2 Co . (t * t)`` along the beam with t(x) the transferred end wrench.
    """
    E, G, a = mat.youngs_modulus, mat.shear_modulus, mat.shear_factor
    L = length
    C = np.zeros((6, 6))
    C[0, 0] = L / (E * sec.area)
    C[1, 1] = a * L / (G * sec.area) + L**3 / (3 * E * sec.iz)
    C[2, 2] = a * L / (G * sec.area) + L**3 / (3 * E * sec.iy)
    C[3, 3] = L / (G * sec.ip)
    C[4, 4] = L / (E * sec.iy)
    C[5, 5] = L / (E * sec.iz)
    C[1, 5] = C[5, 1] = L**2 / (2 * E * sec.iz)
    C[2, 4] = C[4, 2] = -(L**2) / (2 * E * sec.iy)
    return C


def coefficient_vector(sec: CrossSection, mat: Material) -> np.ndarray:
    E, G, a = mat.youngs_modulus, mat.shear_modulus, mat.shear_factor
    return np.array([1 / (E * sec.area), a / (G * sec.area), a / (G * sec.area),
                     1 / (G * sec.ip), 1 / (E * sec.iy), 1 / (E * sec.iz)])


def _end_to_body(seg: Segment, ref: np.ndarray) -> np.ndarray:
    return transfer_matrix(seg.frame.rotation, seg.end - ref)


def equilibrium_matrix(skel: HalfMcpfSkeleton, case: LoadCase) -> np.ndarray:
    """Rows: balance of each rigid body; columns: beam end-wrench components.

    Trailing columns hold the symmetry reactions at the P block.
    """
    rows, cols = list(case.equilibrium_rows), list(case.reaction_components)
    nb, ns = skel.n_bodies, len(skel.segments)
    B = np.zeros((3 * nb, 3 * ns))
    for i, sg in enumerate(skel.segments):
        for body, sign in ((sg.start_body, 1.0), (sg.end_body, -1.0)):
            if body == GROUND:
                continue
            J = _end_to_body(sg, skel.body_points[body])
            B[3 * body:3 * body + 3, 3 * i:3 * i + 3] += sign * J[np.ix_(rows, cols)]
    return np.hstack([B, _symmetry_columns(nb, case)])


def _symmetry_columns(nb: int, case: LoadCase) -> np.ndarray:
    """Energy-free reaction components the mirrored half applies to the P block."""
    S = np.zeros((3 * nb, len(case.symmetry_held)))
    for j, row in enumerate(case.symmetry_held):
        S[row, j] = 1.0
    return S


@dataclass
class ForceMap:
    """Beam end wrenches as affine functions of ``z = (F_P, r_1, ..., r_m)``.

    ``coefficients[i]`` is a 6 x (1+m) matrix mapping ``z`` onto the end wrench
    of beam ``i`` in its local frame. The redundants ``r`` span the
    self-stressed states of the skeleton.
    """

    skeleton: HalfMcpfSkeleton
    case: LoadCase
    coefficients: list[np.ndarray]
    symmetry_coefficients: np.ndarray | None = None

    @property
    def n_vars(self) -> int:
        return self.coefficients[0].shape[1]

    def end_wrench(self, i: int, z) -> np.ndarray:
        return self.coefficients[i] @ np.asarray(z, dtype=float)

    def internal_wrench(self, i: int, x: float, z) -> np.ndarray:
        """Section wrench of beam ``i`` at distance ``x`` from its start."""
        L = self.skeleton.segments[i].length
        return transfer_matrix(np.eye(3), [L - x, 0.0, 0.0]) @ self.end_wrench(i, z)


def internal_force_map(skel: HalfMcpfSkeleton, case: LoadCase) -> ForceMap:
    B = equilibrium_matrix(skel, case)
    f = np.zeros(B.shape[0])
    # unit drive on the P block (body 0)
    f[:3] = case.drive_direction[list(case.equilibrium_rows)]
    q0, *_ = np.linalg.lstsq(B, -f, rcond=None)
    if np.linalg.norm(B @ q0 + f) > 1e-9:
        raise SkeletonError("drive load cannot be equilibrated: skeleton is a mechanism")
    N = null_space(B)
    G = np.column_stack([q0, N])
    cols = list(case.reaction_components)
    coeffs = []
    for i in range(len(skel.segments)):
        Gi = np.zeros((6, G.shape[1]))
        Gi[cols] = G[3 * i:3 * i + 3]
        coeffs.append(Gi)
    return ForceMap(skel, case, coeffs, G[3 * len(skel.segments):])


@dataclass
class EnergyForm:
    """``U(z) = 1/2 z^T Q z`` over ``z = (F_P, redundants)``."""

    force_map: ForceMap
    material: Material
    Q: np.ndarray

    def energy(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return 0.5 * float(z @ self.Q @ z)

    def gradient(self, z) -> np.ndarray:
        return self.Q @ np.asarray(z, dtype=float)


def strain_energy_form(skel: HalfMcpfSkeleton, case: LoadCase, material: Material) -> EnergyForm:
    fm = internal_force_map(skel, case)
    Q = np.zeros((fm.n_vars, fm.n_vars))
    for sg, Gi in zip(skel.segments, fm.coefficients):
        C = segment_compliance(sg.length, sg.section, material)
        Q += Gi.T @ C @ Gi
    return EnergyForm(fm, material, 0.5 * (Q + Q.T))


@dataclass
class ReactionSolution:
    z: np.ndarray
    reactions: dict[str, np.ndarray]
    compliance: float  # dU/dF_P per unit drive
    energy: float
    residual: float


def solve_reactions(form: EnergyForm, drive: float = 1.0) -> ReactionSolution:
    """Stationarity of U over the redundants at a given drive magnitude."""
    Q = form.Q
    Qrr, QrF = Q[1:, 1:], Q[1:, 0]
    if Qrr.size:
        cond = np.linalg.cond(Qrr)
        if not np.isfinite(cond) or cond > 1e14:
            raise SkeletonError(f"compatibility system is singular (condition number {cond:.3g})")
        r = np.linalg.solve(Qrr, -QrF * drive)
    else:
        r = np.zeros(0)
    z = np.concatenate([[drive], r])
    grad = Q @ z
    scale = max(abs(Q[0, 0] * drive), 1e-300)
    residual = float(np.linalg.norm(grad[1:]) / scale)
    fm = form.force_map
    skel = fm.skeleton
    reactions = {}
    for label, (i, where) in skel.reaction_points.items():
        q = fm.end_wrench(i, z)
        if where == "end":
            reactions[label] = q
        else:
            L = skel.segments[i].length
            reactions[label] = -transfer_matrix(np.eye(3), [L, 0.0, 0.0]) @ q
    if fm.symmetry_coefficients is not None and len(fm.symmetry_coefficients):
        w = np.zeros(6)
        w[[fm.case.equilibrium_rows[j] for j in fm.case.symmetry_held]] = fm.symmetry_coefficients @ z
        reactions["S"] = w  # from the mirrored half, global axes at P
    # envelope theorem: dU/dF_P at the solved redundants, per unit drive
    r1 = np.linalg.solve(Qrr, -QrF) if Qrr.size else r
    compliance = float(Q[0, 0] + QrF @ r1)
    return ReactionSolution(z, reactions, compliance, form.energy(z), residual)


def global_reactions(skeleton: HalfMcpfSkeleton, solution: ReactionSolution) -> dict[str, np.ndarray]:
    """Ground reactions rotated from segment axes into the skeleton axes."""
    out = {}
    for label, (i, _) in skeleton.reaction_points.items():
        R = skeleton.segments[i].frame.rotation
        w = solution.reactions[label]
        out[label] = np.concatenate([R @ w[:3], R @ w[3:]])
    return out


def _stacked_transfer(R: np.ndarray, r: np.ndarray) -> np.ndarray:
    m = len(R)
    S = np.zeros((m, 3, 3))
    S[:, 0, 1], S[:, 0, 2] = -r[:, 2], r[:, 1]
    S[:, 1, 0], S[:, 1, 2] = r[:, 2], -r[:, 0]
    S[:, 2, 0], S[:, 2, 1] = -r[:, 1], r[:, 0]
    J = np.zeros((m, 6, 6))
    J[:, :3, :3] = R
    J[:, 3:, 3:] = R
    J[:, 3:, :3] = S @ R
    return J


def half_compliance(params: McpfParams, material: Material, case: LoadCase, layout: _Layout | None = None) -> float:
    """Drive-point compliance of the half unit from the stationarity (KKT) system.

    Same model as ``strain_energy_form`` + ``solve_reactions`` without forming
    an explicit redundant basis; used on hot paths such as the optimiser.
    """
    lay = _layout(params) if layout is None else layout
    m, nb = len(lay.rotation), len(lay.body_points)
    rows, cols = list(case.equilibrium_rows), list(case.reaction_components)
    C = segment_compliance(params.l, section_properties(params.t, params.b), material)[np.ix_(cols, cols)]
    B = np.zeros((3 * nb, 3 * m))
    for body_of, sign in ((lay.start_body, 1.0), (lay.end_body, -1.0)):
        idx = np.nonzero(body_of != GROUND)[0]
        J = _stacked_transfer(lay.rotation[idx], lay.end[idx] - lay.body_points[body_of[idx]])[:, rows][:, :, cols]
        for i, body, Ji in zip(idx, body_of[idx], J):
            B[3 * body:3 * body + 3, 3 * i:3 * i + 3] += sign * Ji
    B = np.hstack([B, _symmetry_columns(nb, case)])
    n_q = B.shape[1]
    K = np.zeros((n_q + 3 * nb, n_q + 3 * nb))
    K[:3 * m, :3 * m] = np.kron(np.eye(m), C)
    K[:n_q, n_q:] = B.T
    K[n_q:, :n_q] = B
    rhs = np.zeros(len(K))
    rhs[n_q:n_q + 3] = -case.drive_direction[rows]
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise SkeletonError("stationarity system is singular") from exc
    # multiplier on the P block = displacement conjugate to the drive
    return float(case.drive_direction[rows] @ sol[n_q:n_q + 3])


def half_stiffness(params: McpfParams, material: Material, case: LoadCase) -> float:
    return 1.0 / half_compliance(params, material, case)


@dataclass(frozen=True)
class StiffnessReport:
    k_motional: float
    k_lateral: float
    label: str = ""
    reactions_motional: dict = field(default_factory=dict, compare=False)
    reactions_lateral: dict = field(default_factory=dict, compare=False)

    @property
    def eta(self) -> float:
        return self.k_lateral / self.k_motional

    def as_dict(self) -> dict:
        return {"family": self.label, "k_motional_N_per_m": self.k_motional,
                "k_lateral_N_per_m": self.k_lateral, "eta": self.eta}


def stiffness_report(params: McpfParams, material: Material = ALUMINIUM, label: str = "",
                     with_reactions: bool = False) -> StiffnessReport:
    """Full-unit stiffnesses: two mirrored half units acting in parallel."""
    if not with_reactions:
        lay = _layout(params)
        return StiffnessReport(2.0 / half_compliance(params, material, MOTIONAL, lay),
                               2.0 / half_compliance(params, material, LATERAL, lay), label)
    skel = build_half_skeleton(params)
    out = {}
    for case in (MOTIONAL, LATERAL):
        sol = solve_reactions(strain_energy_form(skel, case, material), 1.0)
        out[case.kind] = (2.0 / sol.compliance, sol.reactions)
    return StiffnessReport(out[CaseKind.MOTIONAL][0], out[CaseKind.LATERAL][0], label,
                           out[CaseKind.MOTIONAL][1], out[CaseKind.LATERAL][1])


def motional_stiffness(params: McpfParams, material: Material = ALUMINIUM) -> float:
    return 2.0 * half_stiffness(params, material, MOTIONAL)


def lateral_stiffness(params: McpfParams, material: Material = ALUMINIUM) -> float:
    return 2.0 * half_stiffness(params, material, LATERAL)


def stiffness_ratio(params: McpfParams, material: Material = ALUMINIUM) -> float:
    return stiffness_report(params, material).eta


# ---------------------------------------------------------------- sweeps

SWEEP_HEADER = ("t_mm", "l_mm", "b_mm", "k_motional_N_per_m", "k_lateral_N_per_m", "eta")


@dataclass
class SweepResult:
    t: np.ndarray
    l: np.ndarray
    b: np.ndarray
    k_motional: np.ndarray  # shape (nt, nl, nb)
    k_lateral: np.ndarray

    @property
    def eta(self) -> np.ndarray:
        return self.k_lateral / self.k_motional

    def rows(self, subset: str = "all") -> list[tuple]:
        idx = itertools.product(range(len(self.t)), range(len(self.l)), range(len(self.b)))
        if subset == "cabinet":
            idx = cabinet_indices(len(self.t), len(self.l), len(self.b))
        elif subset != "all":
            raise ValueError(f"unknown subset {subset!r}")
        return [(self.t[i] * 1e3, self.l[j] * 1e3, self.b[k] * 1e3,
                 self.k_motional[i, j, k], self.k_lateral[i, j, k], self.eta[i, j, k])
                for i, j, k in idx]

    def monotonicity(self) -> dict[str, bool]:
        km, eta = self.k_motional, self.eta
        return {
            "k_motional_increasing_in_t": bool(np.all(np.diff(km, axis=0) > 0)),
            "k_motional_decreasing_in_l": bool(np.all(np.diff(km, axis=1) < 0)),
            "eta_increasing_in_b": bool(np.all(np.diff(eta, axis=2) > 0)),
        }


def cabinet_indices(nt: int, nl: int, nb: int) -> list[tuple[int, int, int]]:
    """Grid points on the three faces visible in a cabinet projection.

    These are the faces at the largest index of each axis; a 3x3x3 grid
    yields 19 points.
    """
    return [(i, j, k) for i, j, k in itertools.product(range(nt), range(nl), range(nb))
            if i == nt - 1 or j == nl - 1 or k == nb - 1]


def parameter_sweep(t_values, l_values, b_values, base: McpfParams, material: Material = ALUMINIUM,
                    workers: int | None = None) -> SweepResult:
    """Evaluate the full-unit stiffnesses on a t x l x b grid (values in metres).

    Grid points may be evaluated concurrently; results are stored in grid order.
    """
    t_values, l_values, b_values = (np.asarray(v, dtype=float) for v in (t_values, l_values, b_values))
    points = list(itertools.product(range(len(t_values)), range(len(l_values)), range(len(b_values))))

    def one(ijk):
        i, j, k = ijk
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = base.with_(t=t_values[i], l=l_values[j], b=b_values[k])
        r = stiffness_report(p, material)
        return r.k_motional, r.k_lateral

    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(one, points))
    else:
        results = [one(p) for p in points]
    shape = (len(t_values), len(l_values), len(b_values))
    km = np.empty(shape)
    kl = np.empty(shape)
    for (i, j, k), (a, c) in zip(points, results):
        km[i, j, k] = a
        kl[i, j, k] = c
    return SweepResult(t_values, l_values, b_values, km, kl)
