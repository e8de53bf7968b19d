"""Monte-Carlo BER simulation of the precoded downlink.

For every channel realisation the precoder is built once (a full look-up
table for the symbol-wise schemes, the Wiener matrices for the linear
baselines), then ``symbols_per_channel`` random QPSK vectors are sent at each
SNR point and the Gray-mapped bit errors counted.

Random streams are keyed by ``(master_seed, channel index, stream id)`` so
that every precoder sees the same channels, symbols and unit noise draws,
and results do not depend on how channels are scheduled across workers. The
unit-variance noise of a channel is drawn once and reused at every SNR.
"""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .constellation import GRAY_BITS, check_bits, qpsk_decide_index, quantize
from .model import complex_normal, generate_channel, snr_db_to_etx
from .solvers import (
    DEFAULT_MU0,
    SolverParams,
    build_lut,
    compute_alpha,
    ml_ce_alpha,
    symbols_from_index,
    wf_ce_transmit,
    wf_precoder,
)

log = logging.getLogger(__name__)

__all__ = [
    "PRECODERS",
    "ExperimentConfig",
    "BerRecord",
    "SnrAtBer",
    "default_snr_grid",
    "run_experiment",
    "snr_at_ber",
    "aggregate_solver_stats",
    "bit_errors",
]

#: precoder name -> solver algorithm (None for the linear baselines)
PRECODERS = {
    "gdm-cec": "gdm",
    "qgdm-cec": "qgdm",
    "gpm-rpc": "gpm",
    "ml-ce": "gdm",
    "wf": None,
    "wf-ce": None,
}

_CHANNEL, _SYMBOLS, _NOISE = 0, 1, 2

# popcount of xor of Gray labels, indexed [sent, decided]
_BIT_DIFF = np.sum(GRAY_BITS[:, None, :] != GRAY_BITS[None, :, :], axis=-1).astype(np.int64)


def default_snr_grid():
    return [float(v) for v in range(-10, 21, 2)]


@dataclass
class ExperimentConfig:
    """One BER sweep: a single precoder at a single transmit resolution."""

    precoder: str = "gdm-cec"
    bits: float = math.inf
    n: int = 32
    m: int = 4
    snr_grid_db: list = field(default_factory=default_snr_grid)
    channels: int = 100
    symbols_per_channel: int = 1000
    master_seed: int = 0
    mu0: float = None
    epsilon: float = 1e-2
    alpha: float = None
    max_iterations: int = 500

    def __post_init__(self):
        self.precoder = str(self.precoder).lower()
        if self.precoder not in PRECODERS:
            raise ValueError(f"unknown precoder {self.precoder!r}, expected one of {sorted(PRECODERS)}")
        self.bits = check_bits(self.bits)
        if self.precoder == "qgdm-cec" and self.bits == math.inf:
            raise ValueError("qgdm-cec needs a finite resolution (bits in 2..8)")
        if not 0 < self.m < self.n:
            raise ValueError(f"need 0 < users < antennas, got users={self.m}, antennas={self.n}")
        if self.channels < 1 or self.symbols_per_channel < 1:
            raise ValueError("channels and symbols_per_channel must be positive")
        self.snr_grid_db = [float(v) for v in self.snr_grid_db]
        if not self.snr_grid_db:
            raise ValueError("empty SNR grid")

    @property
    def algorithm(self):
        return PRECODERS[self.precoder]

    def solver_params(self):
        alg = self.algorithm
        if alg is None:
            return None
        alpha = self.alpha
        if alpha is None:
            alpha = ml_ce_alpha(self.n) if self.precoder == "ml-ce" else compute_alpha(self.n, self.m)
        return SolverParams(
            alpha=alpha,
            mu0=DEFAULT_MU0[alg] if self.mu0 is None else self.mu0,
            epsilon=self.epsilon,
            bits=self.bits,
            max_iterations=self.max_iterations,
        )

    def to_dict(self):
        d = asdict(self)
        d["bits"] = "inf" if self.bits == math.inf else self.bits
        return d


@dataclass
class BerRecord:
    precoder: str
    bits: float
    snr_db: float
    ber: float
    bit_errors: int
    bits_total: int
    avg_iterations: float = 0.0
    avg_halvings: float = 0.0
    capped_fraction: float = 0.0


@dataclass
class SnrAtBer:
    target_ber: float
    snr_db: float = None
    reason: str = ""

    @property
    def found(self):
        return self.snr_db is not None


def _streams(seed, channel):
    return [np.random.default_rng(np.random.SeedSequence([seed, channel, k])) for k in (_CHANNEL, _SYMBOLS, _NOISE)]


def bit_errors(sent, decided):
    """Gray bit errors between rotation-index arrays."""
    return int(_BIT_DIFF[np.asarray(sent), np.asarray(decided)].sum())


def _simulate_channel(cfg, channel):
    """Bit error counts per SNR point and solver stats of one channel."""
    rng_h, rng_s, rng_n = _streams(cfg.master_seed, channel)
    h = generate_channel(cfg.n, cfg.m, rng_h)
    idx = rng_s.integers(0, 4 ** cfg.m, size=cfg.symbols_per_channel)
    noise = complex_normal(rng_n, (cfg.m, cfg.symbols_per_channel))
    sent = symbols_from_index(idx, cfg.m)  # (M, Nb)
    sent_digits = qpsk_decide_index(sent)
    etx = snr_db_to_etx(cfg.snr_grid_db)

    errors = np.zeros(len(etx), dtype=np.int64)
    stats = None
    if cfg.algorithm is not None:
        lut = build_lut(h, cfg.solver_params(), cfg.algorithm)
        stats = (lut.iterations, lut.halvings, lut.capped)
        # transmit-side quantiser; a no-op on already quantised tables
        x_q = quantize(lut.table, cfg.bits)
        clean = (h @ x_q)[:, idx]
        for i, e in enumerate(etx):
            r = math.sqrt(e / cfg.n) * clean + noise
            errors[i] = bit_errors(sent_digits, qpsk_decide_index(r))
    else:
        for i, e in enumerate(etx):
            wf = wf_precoder(h, e)
            if cfg.precoder == "wf":
                # ideal linear reference: unquantised, E||x||^2 = E_tx already
                r = wf.f * (h @ (wf.p @ sent) + noise)
            else:
                x = wf_ce_transmit(wf, sent, cfg.bits)
                r = wf.f * (math.sqrt(e / cfg.n) * (h @ x) + noise)
            errors[i] = bit_errors(sent_digits, qpsk_decide_index(r))
    return errors, stats


def _worker_count(workers):
    if workers is None:
        env = os.environ.get("CE_PRECODE_THREADS")
        workers = int(env) if env else 1
    return max(1, int(workers))


def run_experiment(cfg, workers=None):
    """Run the full sweep of ``cfg`` and return one :class:`BerRecord` per SNR.

    ``workers`` defaults to ``$CE_PRECODE_THREADS`` (or 1). Results are
    identical for any worker count.
    """
    workers = _worker_count(workers)
    channels = range(cfg.channels)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_simulate_channel, [cfg] * cfg.channels, channels, chunksize=4))
    else:
        outcomes = [_simulate_channel(cfg, c) for c in channels]

    errors = np.sum([o[0] for o in outcomes], axis=0)
    if cfg.algorithm is not None:
        its = np.concatenate([o[1][0] for o in outcomes])
        halv = np.concatenate([o[1][1] for o in outcomes])
        capped = np.concatenate([o[1][2] for o in outcomes])
        avg_it, avg_halv = aggregate_solver_stats(its, halv)
        capped_fraction = float(np.mean(capped))
        if capped_fraction > 0:
            log.info("%s: %.3g%% of solves hit the iteration cap", cfg.precoder, 100 * capped_fraction)
    else:
        avg_it = avg_halv = capped_fraction = 0.0

    total = 2 * cfg.m * cfg.symbols_per_channel * cfg.channels
    return [
        BerRecord(
            precoder=cfg.precoder,
            bits=cfg.bits,
            snr_db=snr,
            ber=int(err) / total,
            bit_errors=int(err),
            bits_total=total,
            avg_iterations=avg_it,
            avg_halvings=avg_halv,
            capped_fraction=capped_fraction,
        )
        for snr, err in zip(cfg.snr_grid_db, errors)
    ]


def aggregate_solver_stats(iterations, halvings=None):
    """Mean iteration and halving counts over all solves.

    Accepts either two sequences of counts, or a single iterable of objects
    with ``iterations`` and ``halvings`` attributes (e.g. ``SolveResult``).
    """
    if halvings is None:
        results = list(iterations)
        iterations = [r.iterations for r in results]
        halvings = [r.halvings for r in results]
    iterations = np.asarray(iterations, dtype=float)
    halvings = np.asarray(halvings, dtype=float)
    if iterations.size == 0:
        raise ValueError("no solves to aggregate")
    return float(iterations.mean()), float(halvings.mean())


def snr_at_ber(records, target=1e-3):
    """SNR where the BER curve first falls to ``target``.

    Interpolates linearly in (dB, log10 BER) between the two grid points that
    bracket the target.
    """
    pts = sorted((r.snr_db, r.ber) for r in records)
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b0 == target:
            return SnrAtBer(target, s0)
        if b0 > target > b1:
            if b1 <= 0:
                return SnrAtBer(target, None, f"BER drops to zero between {s0} and {s1} dB; cannot interpolate in log domain")
            t = (math.log10(target) - math.log10(b0)) / (math.log10(b1) - math.log10(b0))
            return SnrAtBer(target, s0 + t * (s1 - s0))
    if pts and pts[-1][1] == target:
        return SnrAtBer(target, pts[-1][0])
    return SnrAtBer(target, None, f"BER curve never crosses {target:g} on the grid")
