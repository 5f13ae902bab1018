"""Massive-MIMO uplink detection by proximal Jacobian ADMM.

The received vector is decomposed into per-symbol contributions, making the
relaxed ML objective separable; every symbol and its contribution are then
updated in parallel, in closed form, without matrix inversion.
"""

from .baseline import SingularSystemError, mmse_detect
from .bench import (
    BerReport,
    SimConfig,
    run_ber,
    sweep_iterations,
    sweep_snr,
    reference_report,
    time_units,
)
from .decomp import (
    DetectorState,
    KktResidual,
    init_state,
    kkt_residual,
    objective_value,
    primal_residual,
)
from .model import (
    ComplexSystemModel,
    Constellation,
    RealSystemModel,
    add_noise,
    complex_to_real,
    demodulate,
    generate_channel,
    modulate,
    noise_variance_from_snr,
    quantize,
)
from .pjadmm import (
    DegenerateColumnError,
    DetectionResult,
    PjadmmConfig,
    detect,
    iterate,
    subproblem_oracle,
    update_duals,
    update_x_block,
    update_y_block,
)

__version__ = "0.1.0"
