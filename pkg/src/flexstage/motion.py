"""Per-axis plants, swept-sine identification, tracking control and error metrics.

Positions are in mm and forces in N. A plant is ``gain / (s^2 + a1 s + a0)``
in mm/N, equivalently ``m x'' + c x' + k x = F`` with ``gain = 1000 / m``.

The tracking law combines a model feedforward with the discrete PID

    u_k = k_p e_k + g_i S_k + k_d (e_k - e_{k-1}) / (T_s + k_d / (N_f k_p))
    S_k = sum_{i<=k} (e_i + e_{i-1}) / 2

where ``g_i = 1 / k_i`` in the ``"reciprocal"`` integral form and
``g_i = T_s / k_i`` in the ``"integral_time"`` form (k_i read as an integral
time in seconds). The reciprocal form is unstable on the identified plants; see
:func:`closed_loop_poles`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg, optimize, signal

from .stage import ChainModel, static_transmission


class UnstableLoopError(RuntimeError):
    """Closed loop has a discrete pole on or outside the unit circle."""

    def __init__(self, msg: str, poles: np.ndarray):
        super().__init__(msg)
        self.poles = poles


class IllConditionedFitError(ValueError):
    """Frequency data cannot determine a second-order model."""


class SimulationDivergedError(RuntimeError):
    """A non-finite value appeared during time stepping."""


# ------------------------------------------------------------------ plants

@dataclass(frozen=True)
class Plant2:
    gain: float  # mm/N/s^2
    a1: float  # 1/s
    a0: float  # 1/s^2

    def __post_init__(self):
        for name in ("gain", "a1", "a0"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        if self.gain <= 0 or self.a0 <= 0 or self.a1 < 0:
            raise ValueError("plant requires gain > 0, a0 > 0 and a1 >= 0")

    @property
    def mass(self) -> float:
        return 1000.0 / self.gain

    @property
    def damping(self) -> float:
        return self.a1 * self.mass

    @property
    def stiffness(self) -> float:
        return self.a0 * self.mass

    @property
    def natural_frequency(self) -> float:
        return math.sqrt(self.a0) / (2 * math.pi)

    @property
    def dc_compliance(self) -> float:
        """Static compliance in mm/N."""
        return self.gain / self.a0

    def physical(self) -> tuple[float, float, float]:
        return self.mass, self.damping, self.stiffness

    def response(self, freqs_hz) -> np.ndarray:
        s = 2j * np.pi * np.asarray(freqs_hz, dtype=float)
        return self.gain / (s * s + self.a1 * s + self.a0)

    def state_space(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        A = np.array([[0.0, 1.0], [-self.a0, -self.a1]])
        B = np.array([[0.0], [self.gain]])
        C = np.array([[1.0, 0.0]])
        return A, B, C

    def discretize(self, ts: float) -> tuple[np.ndarray, np.ndarray]:
        """Exact zero-order-hold ``(Ad, Bd)``."""
        A, B, _ = self.state_space()
        M = np.zeros((3, 3))
        M[:2, :2], M[:2, 2:] = A * ts, B * ts
        E = linalg.expm(M)
        return E[:2, :2], E[:2, 2]


def plant_from_axis(m: float, c: float, k: float) -> Plant2:
    if not (m > 0 and k > 0 and c >= 0):
        raise ValueError("plant requires m > 0, k > 0 and c >= 0")
    return Plant2(1000.0 / m, c / m, k / m)


def plant_from_tf(gain: float, a1: float, a0: float) -> Plant2:
    if not (gain > 0 and a0 > 0 and a1 >= 0):
        raise ValueError("plant requires gain > 0, a0 > 0 and a1 >= 0")
    return Plant2(float(gain), float(a1), float(a0))


def frequency_response(plant: Plant2, freqs_hz) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude in dB (re 1 mm/N) and phase in degrees."""
    f = np.asarray(freqs_hz, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequencies must be positive")
    H = plant.response(f)
    return 20 * np.log10(np.abs(H)), np.degrees(np.angle(H))


def swept_sine_response(plant: Plant2, f_start: float = 0.1, f_stop: float = 100.0, amplitude: float = 5.0,
                        duration: float = 40.0, ts: float = 50e-6, tail: float = 2.0):
    """Simulate a linear chirp through the ZOH plant and return ``(f, H)`` by spectral ratio.

    A force-free tail lets the response decay so the DFT ratio has no leakage.
    """
    if not 0 < f_start < f_stop:
        raise ValueError("need 0 < f_start < f_stop")
    n = int(round((duration + tail) / ts))
    t = np.arange(n) * ts
    u = np.where(t < duration, amplitude * signal.chirp(t, f_start, duration, f_stop, method="linear"), 0.0)
    Ad, Bd = plant.discretize(ts)
    num, den = signal.ss2tf(Ad, Bd[:, None], np.array([[1.0, 0.0]]), np.zeros((1, 1)))
    y = signal.lfilter(num[0], den, u)
    U, Y = np.fft.rfft(u), np.fft.rfft(y)
    f = np.fft.rfftfreq(n, ts)
    keep = (f >= f_start) & (f <= f_stop) & (np.abs(U) > 1e-6 * np.abs(U).max())
    return f[keep], Y[keep] / U[keep]


def write_bode_csv(path, freqs_hz, mag_db, phase_deg) -> None:
    with open(path, "w") as fh:
        fh.write("f_hz,mag_db,phase_deg\n")
        for f, m, p in zip(freqs_hz, mag_db, phase_deg):
            fh.write(f"{f:.6g},{m:.6f},{p:.6f}\n")


@dataclass
class FitResult:
    plant: Plant2
    residual: float
    condition: float
    spans_resonance: bool


def fit_second_order(freqs_hz, response=None, *, mag_db=None, phase_deg=None, refine: bool = True) -> FitResult:
    """Least-squares second-order fit to frequency-response data.

    Accepts complex ``response`` or ``mag_db``/``phase_deg``. A linearised
    solve seeds a relative-error nonlinear refinement.
    """
    f = np.asarray(freqs_hz, dtype=float)
    if response is None:
        if mag_db is None or phase_deg is None:
            raise ValueError("need a complex response or magnitude and phase")
        H = 10 ** (np.asarray(mag_db) / 20) * np.exp(1j * np.radians(phase_deg))
    else:
        H = np.asarray(response, dtype=complex)
    if f.shape != H.shape or f.ndim != 1:
        raise ValueError("frequency and response arrays must be 1-D and equal length")
    if np.unique(f).size < 3:
        raise IllConditionedFitError("need at least three distinct frequencies")
    if f.size < 10:
        raise ValueError("need at least 10 frequency points")
    s = 2j * np.pi * f
    # H (s^2 + a1 s + a0) = g  ->  [H, H s, -1] [a0, a1, g]^T = -H s^2, row-scaled by 1/|H s^2|
    w = 1.0 / np.abs(H * s * s)
    A = np.column_stack([H, H * s, -np.ones_like(H)]) * w[:, None]
    rhs = -H * s * s * w
    Ar = np.vstack([A.real, A.imag])
    br = np.concatenate([rhs.real, rhs.imag])
    scale = np.linalg.norm(Ar, axis=0)
    cond = float(np.linalg.cond(Ar / scale))
    if not np.isfinite(cond) or cond > 1e10:
        raise IllConditionedFitError(f"ill-conditioned fit (condition {cond:.3g})")
    x = np.linalg.lstsq(Ar / scale, br, rcond=None)[0] / scale
    a0, a1, g = x
    if refine:
        def resid(p):
            r = np.exp(p[2]) / (s * s + p[1] * s + np.exp(p[0])) / H - 1
            return np.concatenate([r.real, r.imag])

        p0 = [math.log(max(a0, 1e-12)), a1, math.log(max(g, 1e-12))]
        sol = optimize.least_squares(resid, p0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        a0, a1, g = math.exp(sol.x[0]), sol.x[1], math.exp(sol.x[2])
    if a0 <= 0 or g <= 0 or a1 < 0:
        raise IllConditionedFitError("fit produced a non-physical plant")
    plant = Plant2(float(g), float(a1), float(a0))
    res = float(np.sqrt(np.mean(np.abs(plant.response(f) / H - 1) ** 2)))
    fn = plant.natural_frequency
    return FitResult(plant, res, cond, bool(f.min() < fn < f.max()))


# ------------------------------------------------------------------ paths

@dataclass(frozen=True)
class PathSpec:
    kind: str  # circle | crown | raster | custom
    amplitude: float = 4.8  # mm (radius for circle, half range for raster)
    frequency: float = 3.0  # Hz
    plane: str = "xy"
    duration: float = 1.0  # s
    custom: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("circle", "crown", "raster", "custom"):
            raise ValueError(f"unsupported path kind {self.kind!r}")
        if self.plane not in ("xy", "yz", "xz"):
            raise ValueError(f"unsupported plane {self.plane!r}")
        if not (self.amplitude > 0 and self.frequency > 0 and self.duration > 0):
            raise ValueError("amplitude, frequency and duration must be positive")
        if self.kind == "custom" and self.custom is None:
            raise ValueError("custom path needs a callable")

    @property
    def period(self) -> float:
        if self.kind == "crown":
            return 1.0
        if self.kind == "raster":
            return 1.0 / self.frequency
        return 1.0 / self.frequency


Reference = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]

_AXIS = {"x": 0, "y": 1, "z": 2}


def make_path(spec: PathSpec) -> Reference:
    """Return ``ref(t) -> (r, r_dot, r_ddot)``, each of shape ``(3, len(t))`` in mm."""
    if spec.kind == "custom":
        return spec.custom

    def ref(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        r, v, a = (np.zeros((3, t.size)) for _ in range(3))
        if spec.kind == "circle":
            A, w = spec.amplitude, 2 * np.pi * spec.frequency
            i, j = _AXIS[spec.plane[0]], _AXIS[spec.plane[1]]
            r[i], v[i], a[i] = A * np.sin(w * t), A * w * np.cos(w * t), -A * w * w * np.sin(w * t)
            r[j], v[j], a[j] = A * np.cos(w * t), -A * w * np.sin(w * t), -A * w * w * np.cos(w * t)
        elif spec.kind == "crown":
            w, wz = 2 * np.pi, 12 * np.pi
            r[0], v[0], a[0] = 5 * np.sin(w * t), 5 * w * np.cos(w * t), -5 * w * w * np.sin(w * t)
            r[1], v[1], a[1] = 5 * np.cos(w * t), -5 * w * np.sin(w * t), -5 * w * w * np.cos(w * t)
            r[2], v[2], a[2] = 2.5 * np.sin(wz * t), 2.5 * wz * np.cos(wz * t), -2.5 * wz * wz * np.sin(wz * t)
        else:
            # sinusoidal line scan on one axis, slow linear ramp on the other
            A, w = spec.amplitude, 2 * np.pi * spec.frequency
            i, j = _AXIS[spec.plane[0]], _AXIS[spec.plane[1]]
            r[i], v[i], a[i] = A * np.sin(w * t), A * w * np.cos(w * t), -A * w * w * np.sin(w * t)
            r[j] = -A + 2 * A * np.clip(t / spec.duration, 0, 1)
            v[j] = np.where((t >= 0) & (t <= spec.duration), 2 * A / spec.duration, 0.0)
        return r, v, a

    return ref


# ------------------------------------------------------------------ control

@dataclass(frozen=True)
class FfPidController:
    kp: float = 150.0  # N/mm
    ki: float = 5e-4
    kd: float = 5e-4
    ts: float = 50e-6
    nf: float = 50.0
    ff_mass: float = 0.0  # kg
    ff_damping: float = 0.0  # N s/m
    ff_stiffness: float = 0.0  # N/m
    integral_form: str = "reciprocal"  # or "integral_time"
    ff_offset: float = 0.5  # feedforward evaluated at t_k + ff_offset * T_s

    def __post_init__(self):
        if not self.ts > 0:
            raise ValueError("T_s must be positive")
        if not self.nf > 0:
            raise ValueError("N_f must be positive")
        if self.integral_form not in ("reciprocal", "integral_time"):
            raise ValueError("integral_form must be 'reciprocal' or 'integral_time'")
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("gains must be non-negative")
        if self.kd > 0 and self.kp == 0:
            raise ValueError("derivative filter needs k_p > 0")
        if not 0 <= self.ff_offset <= 1:
            raise ValueError("ff_offset must lie in [0, 1]")

    @property
    def integral_gain(self) -> float:
        """Multiplier on the trapezoidal sum; zero when k_i is zero."""
        if self.ki == 0:
            return 0.0
        return 1.0 / self.ki if self.integral_form == "reciprocal" else self.ts / self.ki

    @property
    def derivative_gain(self) -> float:
        if self.kd == 0:
            return 0.0
        return self.kd / (self.ts + self.kd / (self.nf * self.kp))

    def with_feedforward(self, m: float, c: float, k: float) -> "FfPidController":
        from dataclasses import replace

        return replace(self, ff_mass=m, ff_damping=c, ff_stiffness=k)

    def feedforward(self, r, v, a) -> np.ndarray:
        """Force in N from reference position, velocity, acceleration in mm units."""
        return 1e-3 * (self.ff_mass * a + self.ff_damping * v + self.ff_stiffness * r)


def closed_loop_poles(plant: Plant2, ctrl: FfPidController) -> np.ndarray:
    """Discrete closed-loop eigenvalues with state ``[x, v, S_{k-1}, e_{k-1}]``."""
    Ad, Bd = plant.discretize(ctrl.ts)
    C = np.array([1.0, 0.0])
    gi, D, kp = ctrl.integral_gain, ctrl.derivative_gain, ctrl.kp
    # e_k = -C x_k; S_k = S + (e_k + e_prev)/2; u = kp e_k + gi S_k + D (e_k - e_prev)
    u_x = -(kp + 0.5 * gi + D) * C
    u_s = gi
    u_e = 0.5 * gi - D
    M = np.zeros((4, 4))
    M[:2, :2] = Ad + np.outer(Bd, u_x)
    M[:2, 2] = Bd * u_s
    M[:2, 3] = Bd * u_e
    M[2, :2] = -0.5 * C
    M[2, 2] = 1.0
    M[2, 3] = 0.5
    M[3, :2] = -C
    if gi == 0:
        # the sum state is unobservable in the force and would add a spurious pole at 1
        M = M[np.ix_([0, 1, 3], [0, 1, 3])]
    return np.linalg.eigvals(M)


def check_stability(plant: Plant2, ctrl: FfPidController, label: str = "") -> float:
    poles = closed_loop_poles(plant, ctrl)
    rho = float(np.max(np.abs(poles)))
    if rho >= 1.0:
        desc = ", ".join(f"{p:.6g}" for p in poles)
        raise UnstableLoopError(f"unstable loop {label} (spectral radius {rho:.6f}); poles: {desc}", poles)
    return rho


AXES = ("x", "y", "z")


@dataclass
class SimTrace:
    t: np.ndarray
    ref: np.ndarray  # (3, n) mm
    pos: np.ndarray  # (3, n) mm
    force: np.ndarray  # (3, n) N
    window_start: float
    active: tuple[bool, bool, bool]

    @property
    def error_um(self) -> np.ndarray:
        return 1000.0 * (self.ref - self.pos)

    def window(self) -> np.ndarray:
        return self.t >= self.window_start - 1e-12

    def metrics(self) -> dict:
        return metrics(self)

    def write_csv(self, path) -> None:
        cols = np.vstack([self.t, self.ref[0], self.pos[0], self.ref[1], self.pos[1], self.ref[2], self.pos[2],
                          self.force])
        with open(path, "w") as fh:
            fh.write("t_s,x_ref_mm,x_mm,y_ref_mm,y_mm,z_ref_mm,z_mm,Fx_N,Fy_N,Fz_N\n")
            for row in cols.T:
                fh.write(",".join(f"{v:.9g}" for v in row) + "\n")


def simulate_tracking(plants, controllers, path: PathSpec | Reference, duration: float | None = None,
                      window_start: float | None = None, check: bool = True) -> SimTrace:
    """Fixed-step closed-loop tracking, one independent SISO loop per axis.

    ``plants`` and ``controllers`` are length-3 sequences; ``None`` leaves an
    axis idle. The plant is stepped with its exact ZOH model at the
    controller sample time.
    """
    plants, controllers = list(plants), list(controllers)
    if len(plants) != 3 or len(controllers) != 3:
        raise ValueError("need one plant and one controller slot per axis")
    active = tuple(p is not None and c is not None for p, c in zip(plants, controllers))
    ts_set = {c.ts for c, a in zip(controllers, active) if a}
    if len(ts_set) > 1:
        raise ValueError("all axes must share one sample time")
    ts = ts_set.pop() if ts_set else 50e-6
    if isinstance(path, PathSpec):
        ref_fn = make_path(path)
        duration = path.duration if duration is None else duration
        window_start = path.period if window_start is None else window_start
    else:
        ref_fn = path
        if duration is None:
            raise ValueError("duration required for a custom reference")
        window_start = 0.0 if window_start is None else window_start
    if not duration > window_start:
        raise ValueError("duration must exceed the transient window")
    n = int(math.floor(duration / ts + 1e-9)) + 1
    t = np.arange(n) * ts
    r, _, _ = ref_fn(t)
    pos = np.zeros((3, n))
    force = np.zeros((3, n))
    for ax in range(3):
        if not active[ax]:
            continue
        plant, ctrl = plants[ax], controllers[ax]
        if check:
            check_stability(plant, ctrl, AXES[ax])
        _, rv, ra = ref_fn(t + ctrl.ff_offset * ts)
        rr, _, _ = ref_fn(t + ctrl.ff_offset * ts)
        ff = ctrl.feedforward(rr[ax], rv[ax], ra[ax])
        pos[ax], force[ax] = _run_axis(plant, ctrl, r[ax], ff)
    return SimTrace(t, r, pos, force, window_start, active)


def _run_axis(plant: Plant2, ctrl: FfPidController, r: np.ndarray, ff: np.ndarray):
    Ad, Bd = plant.discretize(ctrl.ts)
    a11, a12, a21, a22 = (float(v) for v in Ad.ravel())
    b1, b2 = float(Bd[0]), float(Bd[1])
    kp, gi, D = ctrl.kp, ctrl.integral_gain, ctrl.derivative_gain
    n = r.size
    y = np.empty(n)
    u_out = np.empty(n)
    x1 = x2 = 0.0
    s = e_prev = 0.0
    rl, ffl = r.tolist(), ff.tolist()
    for k in range(n):
        e = rl[k] - x1
        s += 0.5 * (e + e_prev)
        u = ffl[k] + kp * e + gi * s + D * (e - e_prev)
        if not math.isfinite(u):
            raise SimulationDivergedError(f"non-finite control force at step {k}")
        y[k], u_out[k] = x1, u
        x1, x2 = a11 * x1 + a12 * x2 + b1 * u, a21 * x1 + a22 * x2 + b2 * u
        e_prev = e
    return y, u_out


def simulate_open_loop(plant: Plant2, force: Callable[[np.ndarray], np.ndarray], duration: float,
                       ts: float = 50e-6) -> tuple[np.ndarray, np.ndarray]:
    """Response to a sampled-and-held force from rest. Returns ``(t, x_mm)``."""
    n = int(math.floor(duration / ts + 1e-9)) + 1
    t = np.arange(n) * ts
    ctrl = FfPidController(kp=0, ki=0, kd=0, ts=ts)
    y, _ = _run_axis(plant, ctrl, np.zeros(n), np.asarray(force(t), dtype=float))
    return t, y


def step_response(plant: Plant2, t, force: float = 1.0) -> np.ndarray:
    """Continuous-time response to a force step from rest (mm)."""
    A, B, _ = plant.state_space()
    t = np.asarray(t, dtype=float)
    x_ss = -np.linalg.solve(A, B[:, 0]) * force
    out = np.empty(t.size)
    for i, ti in enumerate(t):
        out[i] = x_ss[0] - (linalg.expm(A * ti) @ x_ss)[0]
    return out


# ------------------------------------------------------------------ metrics

class _ExactSum:
    """Correctly rounded running sum (Shewchuk partials), matching ``math.fsum``."""

    def __init__(self):
        self.partials: list[float] = []

    def add(self, x: float) -> None:
        i = 0
        for y in self.partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                self.partials[i] = lo
                i += 1
            x = hi
        self.partials[i:] = [x]

    @property
    def value(self) -> float:
        return math.fsum(self.partials)


def error_metrics(errors_um) -> dict:
    e = np.asarray(errors_um, dtype=float)
    if e.size == 0:
        raise ValueError("empty metrics window")
    sq = (e * e).tolist()
    return {"MAXE": float(np.max(np.abs(e))), "RMSE": math.sqrt(math.fsum(sq) / e.size)}


class StreamingMetrics:
    """Single-pass MAXE/RMSE accumulator."""

    def __init__(self):
        self.n = 0
        self.maxe = 0.0
        self._sq = _ExactSum()

    def update(self, e_um: float) -> None:
        self.n += 1
        self.maxe = max(self.maxe, abs(e_um))
        self._sq.add(e_um * e_um)

    def result(self) -> dict:
        if self.n == 0:
            raise ValueError("empty metrics window")
        return {"MAXE": self.maxe, "RMSE": math.sqrt(self._sq.value / self.n)}


def metrics(trace: SimTrace, streaming: bool = False) -> dict:
    """MAXE and RMSE in um per active axis over the steady-state window."""
    w = trace.window()
    if not w.any():
        raise ValueError("empty metrics window")
    err = trace.error_um[:, w]
    out = {}
    for i, ax in enumerate(AXES):
        if not trace.active[i]:
            continue
        if streaming:
            acc = StreamingMetrics()
            for v in err[i].tolist():
                acc.update(v)
            out[ax] = acc.result()
        else:
            out[ax] = error_metrics(err[i])
    return out


def metrics_table(results: dict[str, dict]) -> dict:
    """Nest per-path metrics as ``{path: {axis: {MAXE, RMSE}}}`` with units."""
    return {"units": "um", "paths": results}


def write_metrics_json(path, table: dict) -> None:
    with open(path, "w") as fh:
        json.dump(table, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------------ bookkeeping

def coupling_rate(series_um, scan_range_mm: float) -> float:
    """Peak-to-peak passive-axis motion as a percentage of the active scan range."""
    if not scan_range_mm > 0:
        raise ValueError("scan range must be positive")
    s = np.asarray(series_um, dtype=float)
    if s.size == 0:
        raise ValueError("empty displacement series")
    return float((s.max() - s.min()) / (scan_range_mm * 1000.0) * 100.0)


def model_coupling_rate(chain: ChainModel, scan_range_mm: float = 10.0) -> float:
    """Coupling rate produced by the chain's cross-axis spring leakage over a symmetric scan."""
    tr = static_transmission(chain, 1.0)
    half = 0.5 * scan_range_mm * 1000.0
    gain = tr.port / tr.x_out
    return coupling_rate([-half * gain, half * gain], scan_range_mm)


@dataclass(frozen=True)
class Discrepancy:
    alpha: float
    thickness_error_pct: float
    corrected_frequency_hz: float


def discrepancy_analysis(k_nominal, k_actual, f_nominal) -> dict[str, Discrepancy]:
    """Stiffness ratio, implied thickness error and corrected frequency per axis.

    Inputs are mappings keyed by axis name (or equal-length sequences).
    """
    if not isinstance(k_nominal, dict):
        k_nominal, k_actual, f_nominal = (dict(zip(AXES, v)) for v in (k_nominal, k_actual, f_nominal))
    out = {}
    for ax in k_nominal:
        kn, ka, fn = k_nominal[ax], k_actual[ax], f_nominal[ax]
        if not (kn > 0 and ka > 0 and fn > 0):
            raise ValueError(f"axis {ax}: inputs must be positive")
        a = ka / kn
        out[ax] = Discrepancy(a, (a ** (1 / 3) - 1) * 100.0, math.sqrt(a) * fn)
    return out


def discrepancy_dict(result: dict[str, Discrepancy]) -> dict:
    return {ax: asdict(d) for ax, d in result.items()}
