"""Reference design data for the decoupled XYZ stage.

Flexure geometry is in metres. Layer counts and link spans are calibration
inputs (the skeleton drawings carry no dimensions); they were fitted so the
chosen design reproduces the reported model stiffnesses and ratios.
"""

from __future__ import annotations

from .kinetostatics import ALUMINIUM
from .mcpf import McpfParams
from .stage import StageConfig

MM = 1e-3

WIDTHS_MM = {"xg": 8.0, "xd": 12.0, "zg": 6.0, "zd": 6.0}
LAYERS = {"xg": 8, "xd": 8, "zg": 4, "zd": 4}
LINK_SPAN_MM = {"xg": 0.3783, "xd": 0.4903, "zg": 1.8785, "zd": 0.3500}

# chosen (rounded) optimum, (t, l) in mm
CHOSEN_MM = {"xg": (0.32, 23.00), "xd": (0.40, 30.50), "zg": (0.40, 41.7), "zd": (0.34, 22.40)}

# reported model values
REFERENCE_MODEL = {
    "eta_xd": 78.69, "eta_xg": 72.28, "k_xm": 8787.9, "f_xy_vcm": 23.2,
    "eta_zd": 154.64, "eta_zg": 38.68, "k_zm": 8932.1, "f_z_vcm": 25.2,
}
REFERENCE_FEA = {"eta_xd": 71.82, "eta_xg": 67.49, "k_xm": 8832.7, "eta_zd": 145.80, "eta_zg": 36.72, "k_zm": 8994.1}
LUMPED_MASS = (0.412, 0.412, 0.355)
LUMPED_STIFFNESS = (8787.9, 8787.9, 8932.1)

# identified plants: gain / (s^2 + a1 s + a0), mm/N
TRANSFER_FUNCTIONS = {"x": (2295.0, 92.96, 17060.0), "y": (2280.0, 94.36, 17140.0), "z": (2570.0, 110.9, 19760.0)}
MEASURED_STIFFNESS = {"x": 7339.0, "y": 7299.0, "z": 7677.0}
NOMINAL_FEA_STIFFNESS = {"x": 8832.7, "y": 8832.7, "z": 8994.1}
NOMINAL_FEA_FREQUENCY = {"x": 25.4, "y": 25.4, "z": 28.0}
COUPLING_EXTREMA_UM = {"x": (28.3, -24.6), "y": (13.9, -3.7), "z": (19.0, -21.4)}

# reference controller settings
PID_GAINS = {"kp": 150.0, "ki": 0.0005, "kd": 0.0005, "Ts": 50e-6, "Nf": 50.0}

F_MAX = 50.0
STROKE = 5.5 * MM


def family_params(family: str, t_mm: float, l_mm: float) -> McpfParams:
    return McpfParams(t_mm * MM, l_mm * MM, WIDTHS_MM[family] * MM, LAYERS[family], LINK_SPAN_MM[family] * MM)


def chosen_families() -> dict[str, McpfParams]:
    return {f: family_params(f, *tl) for f, tl in CHOSEN_MM.items()}


def chosen_stage() -> StageConfig:
    return StageConfig(chosen_families(), ALUMINIUM, LUMPED_MASS)
