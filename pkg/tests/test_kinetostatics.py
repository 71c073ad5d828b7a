import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from flexstage.kinetostatics import (Material, SpatialFrame, section_properties, skew, transfer_matrix,
                                     wrench_transform)

MM = 1e-3


def random_frame(rng):
    return SpatialFrame(Rotation.random(random_state=rng.integers(1 << 31)).as_matrix(), rng.normal(size=3))


def test_section_properties_thin_strip():
    s = section_properties(0.4 * MM, 8 * MM)
    assert s.area == pytest.approx(3.2e-6, rel=1e-12)
    assert s.iz == pytest.approx(0.0426667e-12, rel=1e-5)
    assert s.iy == pytest.approx(17.0667e-12, rel=1e-5)
    assert s.ip == pytest.approx(0.165292e-12, rel=1e-5)
    assert s.ip <= s.t ** 3 * s.b / 3


def test_section_properties_square():
    ip = section_properties(1.0, 1.0).ip
    assert ip == pytest.approx(1 / 3 - 0.21 + 0.0175, rel=1e-12)
    assert ip == pytest.approx(0.1405, rel=3e-3)  # hand value with 1/3 rounded to 0.333


@pytest.mark.parametrize("t,b", [(2.0, 1.0), (0.0, 1.0), (-1.0, 2.0), (1.0, 0.0)])
def test_section_properties_domain(t, b):
    with pytest.raises(ValueError):
        section_properties(t, b)


@given(t=st.floats(0.1, 1.0), ratio=st.floats(1.0, 50.0), s=st.floats(0.1, 10.0))
def test_section_scaling(t, ratio, s):
    a, c = section_properties(t, t * ratio), section_properties(s * t, s * t * ratio)
    assert c.area == pytest.approx(s ** 2 * a.area, rel=1e-12)
    for name in ("iy", "iz", "ip"):
        assert getattr(c, name) == pytest.approx(s ** 4 * getattr(a, name), rel=1e-12)


def test_skew_examples():
    assert np.array_equal(skew([0, 0, 0]), np.zeros((3, 3)))
    assert np.allclose(skew([1, 0, 0]) @ [0, 1, 0], [0, 0, 1])
    S = skew([1, 2, 3])
    assert np.trace(S) == 0
    assert np.array_equal(S.T, -S)


def test_skew_cross_product_random(rng):
    v, u = rng.normal(size=(1000, 3)), rng.normal(size=(1000, 3))
    for a, b in zip(v, u):
        assert np.allclose(skew(a) @ b, np.cross(a, b), atol=1e-14)


def test_identity_frames():
    assert np.array_equal(wrench_transform(SpatialFrame(), SpatialFrame()), np.eye(6))


def test_lever_arm():
    d, Fy = 0.3, 2.0
    J = wrench_transform(SpatialFrame(origin=[0, 0, d]), SpatialFrame())
    w = J @ [0, Fy, 0, 0, 0, 0]
    assert w[3] == pytest.approx(-d * Fy)
    assert np.allclose(w[[0, 2, 4, 5]], 0)


def test_inverse_and_composition(rng):
    for _ in range(20):
        a, b, c = (random_frame(rng) for _ in range(3))
        assert np.allclose(wrench_transform(a, b) @ wrench_transform(b, a), np.eye(6), atol=1e-12)
        assert np.allclose(wrench_transform(a, c), wrench_transform(b, c) @ wrench_transform(a, b), atol=1e-12)


def test_power_invariance(rng):
    # the velocity of the frame origin changes with the lever arm; power does not
    for _ in range(50):
        a, b = random_frame(rng), random_frame(rng)
        w_a = rng.normal(size=6)
        omega, v_b = rng.normal(size=3), rng.normal(size=3)
        # twist given at b in b axes, expressed at a in a axes
        R = b.rotation.T @ a.rotation
        r_ab = b.rotation.T @ (a.origin - b.origin)
        v_a = R.T @ (v_b + np.cross(omega, r_ab))
        om_a = R.T @ omega
        p_a = w_a[:3] @ v_a + w_a[3:] @ om_a
        w_b = wrench_transform(a, b) @ w_a
        p_b = w_b[:3] @ v_b + w_b[3:] @ omega
        assert p_b == pytest.approx(p_a, rel=1e-10, abs=1e-12)


def test_transfer_matrix_blocks():
    J = transfer_matrix(np.eye(3), [1.0, 2.0, 3.0])
    assert np.array_equal(J[:3, 3:], np.zeros((3, 3)))
    assert np.array_equal(J[3:, :3], skew([1, 2, 3]))


def test_bad_rotation_rejected():
    with pytest.raises(ValueError):
        SpatialFrame(np.diag([1.0, 1.0, 1.001]))
    with pytest.raises(ValueError):
        SpatialFrame(np.diag([1.0, 1.0, -1.0]))


def test_material_validation():
    with pytest.raises(ValueError):
        Material(-1.0, 1.0)
    with pytest.raises(ValueError):
        Material(1.0, 1.0, shear_factor=0.5)
    assert Material(1.0, 2.0).scaled(3.0).shear_modulus == 6.0
