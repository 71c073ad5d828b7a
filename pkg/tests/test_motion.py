import math

import numpy as np
import pytest

from flexstage.motion import (
    FfPidController,
    IllConditionedFitError,
    PathSpec,
    Plant2,
    SimTrace,
    StreamingMetrics,
    UnstableLoopError,
    check_stability,
    closed_loop_poles,
    coupling_rate,
    discrepancy_analysis,
    error_metrics,
    fit_second_order,
    frequency_response,
    make_path,
    metrics,
    model_coupling_rate,
    plant_from_axis,
    plant_from_tf,
    simulate_open_loop,
    simulate_tracking,
    step_response,
    swept_sine_response,
)
from flexstage.presets import COUPLING_EXTREMA_UM, TRANSFER_FUNCTIONS, chosen_stage
from flexstage.stage import build_chain_model

GX = plant_from_tf(*TRANSFER_FUNCTIONS["x"])
GY = plant_from_tf(*TRANSFER_FUNCTIONS["y"])
GZ = plant_from_tf(*TRANSFER_FUNCTIONS["z"])
CIRCLE = PathSpec("circle", 4.8, 3.0, "xy", duration=2 / 3)


def stable_pid(**kw):
    return FfPidController(integral_form="integral_time", **kw)


def rmse_x(plant, ctrl, path=CIRCLE):
    tr = simulate_tracking([plant, None, None], [ctrl, None, None], path)
    return metrics(tr)["x"]["RMSE"]


# ------------------------------------------------------------------ plants

def test_gx_natural_frequency_and_dc_stiffness():
    assert GX.natural_frequency == pytest.approx(20.79, abs=0.005)
    assert GX.dc_compliance == pytest.approx(0.13452, rel=1e-4)
    k_static = 1000.0 / GX.dc_compliance
    assert k_static == pytest.approx(7434, abs=1)
    assert abs(k_static - 7339) / 7339 < 0.015


def test_unit_plant_frequency():
    assert plant_from_axis(1.0, 0.0, 4 * math.pi**2).natural_frequency == pytest.approx(1.0)


@pytest.mark.parametrize("m,c,k", [(0.412, 38.3, 8787.9), (1.0, 0.0, 1.0), (2.5e-3, 1e-4, 3e7)])
def test_physical_rational_round_trip(m, c, k):
    p = plant_from_axis(m, c, k)
    assert p.physical() == pytest.approx((m, c, k), rel=1e-14)
    q = plant_from_tf(p.gain, p.a1, p.a0)
    assert q == p


@pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
def test_nonpositive_plant_rejected(args):
    with pytest.raises(ValueError):
        plant_from_axis(*args)
    with pytest.raises(ValueError):
        plant_from_tf(*args)


def test_bode_limits():
    mag, ph = frequency_response(GX, [1e-6, GX.natural_frequency])
    assert ph[0] == pytest.approx(0.0, abs=1e-5)
    assert 10 ** (mag[0] / 20) == pytest.approx(GX.dc_compliance, rel=1e-9)
    assert ph[1] == pytest.approx(-90.0, abs=1e-9)
    with pytest.raises(ValueError):
        frequency_response(GX, [0.0])


def test_swept_sine_matches_analytic_bode():
    f, H = swept_sine_response(GX, 0.1, 100.0, 5.0)
    band = (f >= 0.5) & (f <= 50)
    mag, ph = frequency_response(GX, f[band])
    assert np.max(np.abs(20 * np.log10(np.abs(H[band])) - mag)) < 0.5
    dph = np.degrees(np.angle(H[band] / GX.response(f[band])))
    assert np.max(np.abs(dph)) < 3.0


# ------------------------------------------------------------------ fitting

def test_fit_recovers_exact_plant():
    f = np.logspace(-1, 2, 60)
    fit = fit_second_order(f, GY.response(f))
    for got, want in zip((fit.plant.gain, fit.plant.a1, fit.plant.a0), TRANSFER_FUNCTIONS["y"]):
        assert got == pytest.approx(want, rel=1e-6)
    assert fit.spans_resonance
    refit = fit_second_order(f, fit.plant.response(f))
    assert refit.plant.a0 == pytest.approx(fit.plant.a0, rel=1e-6)


def test_fit_from_magnitude_and_phase():
    f = np.logspace(-1, 2, 40)
    mag, ph = frequency_response(GZ, f)
    fit = fit_second_order(f, mag_db=mag, phase_deg=ph)
    assert fit.plant.a0 == pytest.approx(GZ.a0, rel=1e-6)


def test_fit_with_noise_within_five_percent(rng):
    f = np.logspace(-1, 2, 200)
    H = GY.response(f) * (1 + 0.01 * rng.standard_normal(f.size))
    p = fit_second_order(f, H).plant
    for got, want in zip((p.gain, p.a1, p.a0), TRANSFER_FUNCTIONS["y"]):
        assert abs(got - want) / want < 0.05


def test_fit_single_frequency_is_ill_conditioned():
    f = np.full(12, 10.0)
    with pytest.raises(IllConditionedFitError):
        fit_second_order(f, GY.response(f))


def test_fit_too_few_points():
    f = np.linspace(1, 50, 5)
    with pytest.raises(ValueError):
        fit_second_order(f, GY.response(f))


# ------------------------------------------------------------------ paths

def test_crown_points():
    ref = make_path(PathSpec("crown"))
    r, _, _ = ref(np.array([0.0, 1 / 24]))
    assert r[:, 0] == pytest.approx([0.0, 5.0, 0.0], abs=1e-12)
    assert r[:, 1] == pytest.approx([1.294, 4.830, 2.5], abs=1e-3)


def test_crown_derivatives_match_finite_differences():
    ref = make_path(PathSpec("crown"))
    t, h = np.array([0.13, 0.61]), 1e-6
    r1, v, a = ref(t)
    r2, v2, _ = ref(t + h)
    r0, v0, _ = ref(t - h)
    assert np.allclose((r2 - r0) / (2 * h), v, rtol=1e-6, atol=1e-6)
    assert np.allclose((v2 - v0) / (2 * h), a, rtol=1e-6, atol=1e-4)


def test_circle_amplitude_and_frequency():
    ref = make_path(CIRCLE)
    t = np.linspace(0, 1, 30001)
    r, _, _ = ref(t)
    for comp in r[:2]:
        assert comp.max() == pytest.approx(4.8, abs=1e-6)
        spec = np.abs(np.fft.rfft(comp))
        assert np.fft.rfftfreq(t.size, t[1])[np.argmax(spec)] == pytest.approx(3.0, abs=1.0)
    assert np.all(r[2] == 0)


def test_raster_covers_square():
    r, _, _ = make_path(PathSpec("raster", 5.0, 1.0, duration=10.0))(np.linspace(0, 10, 100001))
    assert r[0].max() - r[0].min() == pytest.approx(10.0, abs=1e-3)
    assert r[1].max() - r[1].min() == pytest.approx(10.0, abs=1e-9)


def test_unsupported_path_rejected():
    with pytest.raises(ValueError):
        PathSpec("spiral")


# ------------------------------------------------------------------ control

def test_zero_reference_gives_zero_trace():
    zero = lambda t: (np.zeros((3, t.size)),) * 3
    tr = simulate_tracking([GX, GY, GZ], [stable_pid()] * 3, zero, duration=0.1)
    assert not tr.pos.any() and not tr.force.any()


def test_exact_feedforward_tracks_circle():
    ff = FfPidController(kp=0, ki=0, kd=0)
    tr = simulate_tracking([GX, GY, None], [ff.with_feedforward(*GX.physical()), ff.with_feedforward(*GY.physical()),
                                            None], CIRCLE)
    m = metrics(tr)
    assert m["x"]["MAXE"] < 0.1 and m["y"]["MAXE"] < 0.1


def test_open_loop_step_matches_analytic():
    t, y = simulate_open_loop(GX, lambda t: np.ones_like(t), 0.5)
    exact = step_response(GX, t[::500])
    ref = np.max(np.abs(exact))
    assert np.max(np.abs(y[::500] - exact)) / ref < 1e-3


def test_reciprocal_integral_form_is_unstable():
    ctrl = FfPidController()
    for plant in (GX, GY, GZ):
        with pytest.raises(UnstableLoopError) as info:
            check_stability(plant, ctrl)
        assert len(info.value.poles) == 4
    with pytest.raises(UnstableLoopError):
        simulate_tracking([GX, None, None], [ctrl, None, None], CIRCLE)


def test_integral_time_form_is_stable():
    for plant in (GX, GY, GZ):
        assert check_stability(plant, stable_pid()) < 1.0


def test_feedforward_only_has_no_spurious_pole():
    poles = closed_loop_poles(GX, FfPidController(kp=0, ki=0, kd=0))
    assert np.max(np.abs(poles)) < 1.0


def test_halving_sample_time_changes_rmse_little():
    # feedforward from a mismatched model leaves a visible error for the loop to act on
    ctrl = stable_pid().with_feedforward(0.412, 92.96 * 0.412, 8787.9)
    coarse = rmse_x(GX, ctrl)
    fine = rmse_x(GX, stable_pid(ts=25e-6).with_feedforward(0.412, 92.96 * 0.412, 8787.9))
    assert abs(fine - coarse) / coarse < 0.01


def test_feedforward_never_hurts_over_plant_grid():
    m0, c0, k0 = GX.physical()
    pid = stable_pid()
    with_ff = pid.with_feedforward(m0, c0, k0)
    for sm in (0.8, 1.0, 1.2):
        for sc in (0.8, 1.2):
            for sk in (0.8, 1.2):
                plant = plant_from_axis(sm * m0, sc * c0, sk * k0)
                assert rmse_x(plant, with_ff) <= rmse_x(plant, pid)


def test_controller_validation():
    with pytest.raises(ValueError):
        FfPidController(ts=0)
    with pytest.raises(ValueError):
        FfPidController(nf=0)
    with pytest.raises(ValueError):
        FfPidController(integral_form="other")


def test_trace_csv_header(tmp_path):
    tr = simulate_tracking([GX, None, None], [stable_pid(), None, None], CIRCLE, duration=0.4)
    tr.write_csv(tmp_path / "t.csv")
    head = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert head == "t_s,x_ref_mm,x_mm,y_ref_mm,y_mm,z_ref_mm,z_mm,Fx_N,Fy_N,Fz_N"


# ------------------------------------------------------------------ metrics

def test_constant_error_metrics():
    m = error_metrics(np.full(100, 2.0))
    assert m["MAXE"] == 2.0 and m["RMSE"] == pytest.approx(2.0)


def test_sinusoid_rmse():
    e = np.sin(np.linspace(0, 2 * np.pi, 20001))
    m = error_metrics(e)
    assert m["RMSE"] == pytest.approx(m["MAXE"] / math.sqrt(2), rel=1e-3)


def test_empty_window_rejected():
    with pytest.raises(ValueError):
        error_metrics([])
    t = np.arange(10) * 1e-3
    tr = SimTrace(t, np.zeros((3, 10)), np.zeros((3, 10)), np.zeros((3, 10)), 1.0, (True, False, False))
    with pytest.raises(ValueError):
        metrics(tr)


def test_streaming_matches_batch_exactly(rng):
    tr = simulate_tracking([GX, GY, GZ], [stable_pid()] * 3, PathSpec("crown", duration=1.2))
    assert metrics(tr, streaming=True) == metrics(tr)
    e = rng.standard_normal(5000) * 1e3
    acc = StreamingMetrics()
    for v in e:
        acc.update(float(v))
    assert acc.result() == error_metrics(e)


def test_metrics_skip_first_period():
    tr = simulate_tracking([GX, None, None], [stable_pid(), None, None], CIRCLE)
    assert tr.window_start == pytest.approx(1 / 3)
    assert list(metrics(tr)) == ["x"]


# ------------------------------------------------------------------ bookkeeping

@pytest.mark.parametrize("axis,expected", [("x", 0.529), ("y", 0.176), ("z", 0.404)])
def test_coupling_rate_from_extrema(axis, expected):
    assert coupling_rate(COUPLING_EXTREMA_UM[axis], 10.0) == pytest.approx(expected, abs=5e-4)


def test_coupling_rate_edge_cases():
    assert coupling_rate(np.zeros(5), 10.0) == 0.0
    with pytest.raises(ValueError):
        coupling_rate([1.0, 2.0], 0.0)


def test_model_coupling_rate_positive():
    chain = build_chain_model(chosen_stage().reports(), "xy")
    assert model_coupling_rate(chain) > 0


def test_discrepancy_x():
    d = discrepancy_analysis({"x": 8832.7}, {"x": 7339.0}, {"x": 25.4})["x"]
    assert d.alpha == pytest.approx(0.831, abs=1e-3)
    assert d.thickness_error_pct == pytest.approx(-6.0, abs=0.1)
    assert d.corrected_frequency_hz == pytest.approx(23.2, abs=0.1)


def test_discrepancy_identity_and_errors():
    d = discrepancy_analysis([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [10.0, 20.0, 30.0])
    assert all(v.alpha == 1 and v.thickness_error_pct == 0 for v in d.values())
    assert d["z"].corrected_frequency_hz == 30.0
    with pytest.raises(ValueError):
        discrepancy_analysis([0.0], [1.0], [1.0])
