"""Constant-envelope PSK precoding for the multi-user MISO downlink."""

__version__ = "0.1.0"

from .constellation import (  # noqa: E402
    normalize_to_ce,
    project_polygon,
    qpsk_decide,
    qpsk_modulate,
    quantize,
    quantize_phase,
)
from .harness import BerRecord, ExperimentConfig, run_experiment, snr_at_ber  # noqa: E402
from .model import complex_normal, generate_channel, grad_f, grad_g, objective_f, objective_g, receive  # noqa: E402
from .solvers import (  # noqa: E402
    SolverParams,
    build_lut,
    compute_alpha,
    gdm_solve,
    gpm_solve,
    ml_ce_solve,
    qgdm_solve,
    solve_batch,
    symbols_from_index,
    wf_ce_transmit,
    wf_precoder,
)
