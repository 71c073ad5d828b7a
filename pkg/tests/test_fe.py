import json

import numpy as np
import pytest

from flexstage.fe import (FrameElement, FrameModel, SingularModelError, assemble, assemble_and_solve, fe_stiffness,
                          fe_stiffness_report, min_eigenvalue, skeleton_model)
from flexstage.kinetostatics import ALUMINIUM, section_properties
from flexstage.mcpf import LATERAL, MOTIONAL, McpfParams, build_half_skeleton

MM = 1e-3
SEC = section_properties(0.4 * MM, 8 * MM)
E, G = ALUMINIUM.youngs_modulus, ALUMINIUM.shear_modulus


def cantilever(n_el=4, L=25 * MM, shear=True):
    m = FrameModel()
    ids = [m.add_node([L * i / n_el, 0, 0]) for i in range(n_el + 1)]
    for a, b in zip(ids[:-1], ids[1:]):
        m.elements.append(FrameElement(a, b, SEC, ALUMINIUM, np.array([0.0, 1.0, 0.0]), shear=shear))
    m.fixed[ids[0]] = tuple(range(6))
    return m, ids[-1]


def test_euler_bernoulli_cantilever():
    L, F = 25 * MM, 0.3
    m, tip = cantilever(shear=False)
    m.loads[tip] = np.array([0, F, 0, 0, 0, 0.0])
    u = assemble_and_solve(m).displacements[tip, 1]
    assert u == pytest.approx(F * L ** 3 / (3 * E * SEC.iz), rel=1e-9)


def test_timoshenko_cantilever():
    L, F = 25 * MM, 0.3
    m, tip = cantilever(shear=True)
    m.loads[tip] = np.array([0, F, 0, 0, 0, 0.0])
    u = assemble_and_solve(m).displacements[tip, 1]
    assert u == pytest.approx(F * L ** 3 / (3 * E * SEC.iz) + 1.2 * F * L / (G * SEC.area), rel=1e-9)


def test_out_of_plane_and_axial():
    L, F = 25 * MM, 0.3
    m, tip = cantilever(shear=False)
    m.loads[tip] = np.array([F, 0, F, 0, 0, 0.0])
    d = assemble_and_solve(m).displacements[tip]
    assert d[0] == pytest.approx(F * L / (E * SEC.area), rel=1e-9)
    assert d[2] == pytest.approx(F * L ** 3 / (3 * E * SEC.iy), rel=1e-9)


def test_unloaded_model():
    m, _ = cantilever()
    sol = assemble_and_solve(m)
    assert np.all(sol.displacements == 0)


def test_equilibrium_and_reactions(rng):
    m, tip = cantilever()
    w = rng.normal(size=6)
    m.loads[tip] = w
    sol = assemble_and_solve(m)
    assert sol.residual <= 1e-8
    r = sol.reactions[0]
    # support wrench about the root balances the tip load moved to the root
    L = m.nodes[tip][0]
    moment = w[3:] + np.cross([L, 0, 0], w[:3])
    assert np.allclose(r[:3], -w[:3], rtol=1e-9, atol=1e-9 * np.abs(w).max())
    assert np.allclose(r[3:], -moment, rtol=1e-9, atol=1e-9 * np.abs(moment).max())


def test_reciprocity():
    sk = build_half_skeleton(McpfParams(0.35 * MM, 30 * MM, 10 * MM, 2))
    model, p = skeleton_model(sk, ALUMINIUM, 4)
    a, b = p, 5
    ua, ub = np.zeros(6), np.zeros(6)
    ua[1], ub[2] = 1.0, 1.0
    model.loads = {a: ua}
    d1 = assemble_and_solve(model).displacements
    model.loads = {b: ub}
    d2 = assemble_and_solve(model).displacements
    assert d1[b, 2] == pytest.approx(d2[a, 1], rel=1e-10)


def test_positive_definite_after_constraints():
    m, _ = cantilever()
    K = assemble(m)
    assert np.allclose(K, K.T, rtol=0, atol=1e-9 * np.abs(K).max())
    assert min_eigenvalue(m) > 0


def test_singular_model_reports_mode():
    m, tip = cantilever()
    m.fixed = {}
    m.loads[tip] = np.array([0, 1.0, 0, 0, 0, 0])
    with pytest.raises(SingularModelError) as exc:
        assemble_and_solve(m)
    assert exc.value.mode.shape == (len(m.nodes), 6)
    assert np.abs(exc.value.mode).max() > 0


def test_orphan_node_rejected():
    m, _ = cantilever()
    m.add_node([1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        assemble_and_solve(m)


def test_json_dump():
    m, tip = cantilever(2)
    m.loads[tip] = np.ones(6)
    data = json.loads(m.to_json())
    assert len(data["nodes_m"]) == 3 and len(data["elements"]) == 2
    assert data["constraints"]["0"] == list(range(6))


def test_mesh_refinement():
    sk = build_half_skeleton(McpfParams(0.35 * MM, 30 * MM, 10 * MM, 3))
    for case in (MOTIONAL, LATERAL):
        k8, k16 = fe_stiffness(sk, case, ALUMINIUM, 8), fe_stiffness(sk, case, ALUMINIUM, 16)
        assert abs(k16 / k8 - 1) < 1e-3


def test_minimum_mesh_density():
    sk = build_half_skeleton(McpfParams(0.35 * MM, 30 * MM, 10 * MM, 1))
    with pytest.raises(ValueError):
        fe_stiffness(sk, MOTIONAL, ALUMINIUM, 3)


def test_parallelogram_guide():
    t, L, b = 0.35 * MM, 30 * MM, 10 * MM
    sk = build_half_skeleton(McpfParams(t, L, b, 1, rigid_link_span=0.5 * MM))
    k = fe_stiffness(sk, MOTIONAL, ALUMINIUM, 8)
    iz = b * t ** 3 / 12
    assert k == pytest.approx(2 * 12 * E * iz / L ** 3, rel=0.02)


def test_report_full_unit():
    p = McpfParams(0.35 * MM, 30 * MM, 10 * MM, 2)
    km, kl = fe_stiffness_report(p, ALUMINIUM)
    sk = build_half_skeleton(p)
    assert km == pytest.approx(fe_stiffness(sk, MOTIONAL, ALUMINIUM, 8, full=True), rel=1e-8)
    assert kl == pytest.approx(fe_stiffness(sk, LATERAL, ALUMINIUM, 8, full=True), rel=1e-8)
