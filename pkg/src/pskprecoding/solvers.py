"""Symbol-wise MSE precoders for constant-envelope PSK transmission.

Three descent schemes minimise ``||alpha*s - H x||^2``:

* ``gdm``  -- gradient descent on the phases of a unit-modulus ``x``;
* ``qgdm`` -- the same, with every iterate rounded to ``2**B``-PSK and the
  step size reset after each successful step;
* ``gpm``  -- gradient projection onto the filled PSK polygon, followed by
  normalisation and quantisation of the result.

All three share a step-halving rule: a step that increases the objective is
undone and the step size halved. The kernel below runs many symbol vectors
side by side (one column each) so that a look-up table for one channel
realisation is built with a handful of matrix products per iteration.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constellation import QPSK_POINTS, check_bits, normalize_to_ce, project_polygon, quantize, quantize_phase

__all__ = [
    "ALGORITHMS",
    "DEFAULT_MU0",
    "MIN_STEP",
    "SolverParams",
    "SolveResult",
    "BatchResult",
    "PrecoderLut",
    "WfPrecoder",
    "compute_alpha",
    "ml_ce_alpha",
    "solve_batch",
    "gdm_solve",
    "qgdm_solve",
    "gpm_solve",
    "ml_ce_solve",
    "symbol_digits",
    "symbols_from_index",
    "build_lut",
    "wf_precoder",
    "wf_ce_transmit",
]

ALGORITHMS = ("gdm", "qgdm", "gpm")

#: Starting step sizes that work best for each algorithm at N=32, M=4.
DEFAULT_MU0 = {"gdm": 0.25, "qgdm": 0.5, "gpm": 1.0}

#: Below this step size a solve stops; quantisation can pin QGDM forever.
MIN_STEP = 1e-12

_ROTATIONS = np.array([1, 1j, -1, -1j])


def compute_alpha(n, m):
    """Scaling ``sqrt(N (N - M) / M)`` of the desired symbol vector."""
    if not 0 < m < n:
        raise ValueError(f"need 0 < users < antennas, got users={m}, antennas={n}")
    return math.sqrt(n * (n - m) / m)


def ml_ce_alpha(n):
    """Default desired-signal scaling for the M&L CE baseline.

    With ``alpha = sqrt(N)`` the received useful signal carries the full
    transmit energy, i.e. only interference is minimised.
    """
    return math.sqrt(n)


@dataclass(frozen=True)
class SolverParams:
    """Tuning of one descent run.

    ``alpha`` defaults to :func:`compute_alpha` via :meth:`for_system`.
    """

    alpha: float
    mu0: float
    epsilon: float = 1e-2
    bits: float = math.inf
    max_iterations: int = 500

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.mu0 > 0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        object.__setattr__(self, "bits", check_bits(self.bits))
        object.__setattr__(self, "max_iterations", int(self.max_iterations))

    @classmethod
    def for_system(cls, algorithm, n, m, bits=math.inf, **overrides):
        """Default parameters of ``algorithm`` for an ``n`` x ``m`` system."""
        algorithm = _check_algorithm(algorithm)
        kw = dict(alpha=compute_alpha(n, m), mu0=DEFAULT_MU0[algorithm], bits=bits)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass
class SolveResult:
    """Outcome of a single solve.

    ``final_objective`` is the objective at the terminal iterate *before* any
    finalisation (GPM's normalise-and-quantise step). ``objective_trace``
    holds the objective of the current iterate after every iteration and is
    only filled when requested.
    """

    x: np.ndarray
    iterations: int
    halvings: int
    final_objective: float
    capped: bool = False
    objective_trace: list = field(default_factory=list)


@dataclass
class BatchResult:
    """Column-wise outcome of :func:`solve_batch`."""

    x: np.ndarray
    iterations: np.ndarray
    halvings: np.ndarray
    final_objective: np.ndarray
    capped: np.ndarray
    traces: list = None

    def column(self, k):
        return SolveResult(
            x=self.x[:, k].copy(),
            iterations=int(self.iterations[k]),
            halvings=int(self.halvings[k]),
            final_objective=float(self.final_objective[k]),
            capped=bool(self.capped[k]),
            objective_trace=list(self.traces[k]) if self.traces is not None else [],
        )


def _check_algorithm(algorithm):
    algorithm = str(algorithm).lower()
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}, expected one of {ALGORITHMS}")
    return algorithm


def solve_batch(algorithm, s, h, params, trace=False):
    """Run one descent algorithm on every column of ``s``.

    Parameters
    ----------
    algorithm : {'gdm', 'qgdm', 'gpm'}
    s : ndarray, shape (M, K)
        Symbol vectors, one per column.
    h : ndarray, shape (M, N)
    params : SolverParams
    trace : bool
        Record the per-iteration objective of every column.

    Returns
    -------
    BatchResult
        ``x`` has shape (N, K). For ``gdm`` it is ``exp(j*phi)``
        (unquantised); for ``qgdm`` a PSK vector; for ``gpm`` the finalised,
        normalised and quantised vector.
    """
    algorithm = _check_algorithm(algorithm)
    s = np.asarray(s, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if s.ndim != 2 or s.shape[0] != h.shape[0]:
        raise ValueError(f"symbols of shape {s.shape} do not match channel of shape {h.shape}")
    if algorithm == "qgdm" and params.bits == math.inf:
        raise ValueError("QGDM needs a finite quantiser resolution")

    n = h.shape[1]
    k = s.shape[1]
    alpha = params.alpha
    bits = params.bits
    hh = h.conj().T
    target = alpha * s

    if algorithm == "gpm":
        z = np.broadcast_to(project_polygon(np.ones(n), bits)[:, None], (n, k)).copy()
        to_x = _identity
    else:
        z = np.zeros((n, k))
        to_x = _unit_phasor

    res = target - h @ to_x(z)
    obj = _sqnorm(res)
    mu = np.full(k, float(params.mu0))
    iterations = np.zeros(k, dtype=np.int64)
    halvings = np.zeros(k, dtype=np.int64)
    capped = np.zeros(k, dtype=bool)
    active = np.ones(k, dtype=bool)
    traces = [[float(v)] for v in obj] if trace else None

    while active.any():
        idx = np.flatnonzero(active)
        z_a = z[:, idx]
        res_a = res[:, idx]
        mu_a = mu[idx]
        corr = hh @ res_a

        if algorithm == "gpm":
            z_new = project_polygon(z_a + mu_a * corr, bits)
        else:
            grad = -2.0 * np.imag(np.conj(_unit_phasor(z_a)) * corr)
            z_new = z_a - mu_a * grad
            if algorithm == "qgdm":
                z_new = quantize_phase(z_new, bits)

        err = np.sqrt(_sqnorm(z_new - z_a))
        res_new = target[:, idx] - h @ to_x(z_new)
        obj_new = _sqnorm(res_new)

        # a zero move cannot be worse; only rounding could say otherwise
        worse = (obj_new > obj[idx]) & (err > 0)
        keep = idx[~worse]
        moved = ~worse & (err > 0)
        z[:, idx[moved]] = z_new[:, moved]
        res[:, idx[moved]] = res_new[:, moved]
        obj[idx[moved]] = obj_new[moved]
        mu[idx[worse]] *= 0.5
        halvings[idx[worse]] += 1
        if algorithm == "qgdm":
            mu[keep] = params.mu0
        iterations[idx] += 1

        converged = err <= params.epsilon
        stalled = mu[idx] < MIN_STEP
        hit_cap = iterations[idx] >= params.max_iterations
        capped[idx] = hit_cap & ~converged & ~stalled
        active[idx[converged | stalled | hit_cap]] = False
        if trace:
            for j in idx:
                traces[j].append(float(obj[j]))

    if algorithm == "gpm":
        x = quantize(z, bits)
    else:
        x = _unit_phasor(z)
    return BatchResult(x=x, iterations=iterations, halvings=halvings,
                       final_objective=obj, capped=capped, traces=traces)


def _identity(z):
    return z


def _unit_phasor(phi):
    return np.exp(1j * phi)


def _sqnorm(a):
    return np.sum(a.real ** 2 + a.imag ** 2, axis=0)


def _solve_one(algorithm, s, h, params, trace):
    s = np.asarray(s, dtype=complex).reshape(-1, 1)
    return solve_batch(algorithm, s, h, params, trace=trace).column(0)


def gdm_solve(s, h, params, trace=False):
    """Gradient descent on the transmit phases, started from ``phi = 0``.

    Returns the unit-modulus ``x = exp(j*phi)``; quantisation, if any, is left
    to the transmitter.
    """
    return _solve_one("gdm", s, h, params, trace)


def qgdm_solve(s, h, params, trace=False):
    """Gradient descent with every phase iterate rounded to ``2**B``-PSK."""
    return _solve_one("qgdm", s, h, params, trace)


def gpm_solve(s, h, params, trace=False):
    """Gradient projection on the filled PSK polygon.

    The relaxed solution is normalised to constant envelope and quantised
    before being returned (normalised only when unquantised).
    """
    return _solve_one("gpm", s, h, params, trace)


def ml_ce_solve(s, h, params, trace=False):
    """Constant-envelope baseline: :func:`gdm_solve` with a caller-chosen alpha.

    Use :func:`ml_ce_alpha` for the conventional scaling.
    """
    return gdm_solve(s, h, params, trace=trace)


def symbol_digits(index, m):
    """Rotation-index digits of symbol-vector indices, first user most significant.

    Returns an int array of shape ``(m,) + np.shape(index)``.
    """
    index = np.asarray(index, dtype=np.int64)
    powers = 4 ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return (index[None, ...] // powers.reshape((m,) + (1,) * index.ndim)) % 4


def symbols_from_index(index, m):
    """QPSK symbol vectors for base-4 indices; shape ``(m,) + np.shape(index)``."""
    return QPSK_POINTS[symbol_digits(index, m)]


@dataclass
class PrecoderLut:
    """Transmit vector for each of the ``4**M`` QPSK symbol vectors.

    ``table[:, i]`` is the transmit vector of ``symbols_from_index(i, M)``.
    Solver statistics cover the ``4**(M-1)`` solved representatives only.
    """

    table: np.ndarray
    iterations: np.ndarray
    halvings: np.ndarray
    capped: np.ndarray

    @property
    def users(self):
        return int(round(math.log(self.table.shape[1], 4)))

    @property
    def solves(self):
        return len(self.iterations)

    def __getitem__(self, index):
        return self.table[:, index]


def build_lut(h, params, algorithm, max_users=8):
    """Solve the representatives and fill the rest of the table by rotation.

    Representatives are the symbol vectors whose first entry has rotation
    index 0. Any other vector is ``1j**r`` times a representative, where ``r``
    is its first digit, and so is its transmit vector.
    """
    h = np.asarray(h, dtype=complex)
    m = h.shape[0]
    if m > max_users:
        raise ValueError(f"{4 ** (m - 1)} solves per table is too many (users={m} > {max_users})")
    reps = 4 ** (m - 1)
    result = solve_batch(algorithm, symbols_from_index(np.arange(reps), m), h, params)

    index = np.arange(4 ** m)
    digits = symbol_digits(index, m)
    orbit = digits[0]
    rep_digits = (digits - orbit) % 4
    powers = 4 ** np.arange(m - 1, -1, -1, dtype=np.int64)
    rep_index = powers @ rep_digits
    table = result.x[:, rep_index] * _ROTATIONS[orbit]
    return PrecoderLut(table=table, iterations=result.iterations,
                       halvings=result.halvings, capped=result.capped)


@dataclass
class WfPrecoder:
    """Wiener-filter precoder ``x = p @ s`` with receive gain ``f``."""

    p: np.ndarray
    f: float


def wf_precoder(h, e_tx, sigma_s2=1.0):
    """Wiener-filter (regularised MMSE) precoder for transmit energy ``e_tx``.

    The transmit vector meets ``E||p @ s||^2 = e_tx``.
    """
    if not e_tx > 0:
        raise ValueError(f"transmit energy must be positive, got {e_tx}")
    h = np.asarray(h, dtype=complex)
    m, n = h.shape
    a = h.conj().T @ h + (m / e_tx) * np.eye(n)
    w = np.linalg.solve(a, h.conj().T)
    # tr(A^-2 H^H H) equals the squared Frobenius norm of A^-1 H^H
    f = math.sqrt(sigma_s2 / e_tx * float(np.sum(np.abs(w) ** 2)))
    return WfPrecoder(p=w / f, f=f)


def wf_ce_transmit(precoder, s, bits=math.inf):
    """Wiener-filter output forced to constant envelope, then quantised."""
    x = precoder.p @ np.asarray(s)
    return quantize(normalize_to_ce(x), bits)
