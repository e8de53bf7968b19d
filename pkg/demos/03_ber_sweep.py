"""
A small BER sweep
=================

Run the Monte-Carlo loop on a reduced grid for the linear reference and
two constant-envelope precoders. The shell command ``psk-precode`` does the
same at desk scale and writes CSV/JSON artifacts.
"""

import math

from pskprecoding.harness import ExperimentConfig, run_experiment, snr_at_ber

grid = [-4.0, -2.0, 0.0, 2.0, 4.0]
for precoder, bits in [("wf", math.inf), ("gdm-cec", math.inf), ("gpm-rpc", 2)]:
    cfg = ExperimentConfig(precoder=precoder, bits=bits, channels=20, symbols_per_channel=500, snr_grid_db=grid)
    recs = run_experiment(cfg)
    curve = "  ".join(f"{r.snr_db:+.0f}dB:{r.ber:.2e}" for r in recs)
    hit = snr_at_ber(recs, 1e-3)
    where = f"{hit.snr_db:.2f} dB" if hit.found else hit.reason
    print(f"{precoder:8s} B={bits}: {curve}  | BER 1e-3 at {where}")
