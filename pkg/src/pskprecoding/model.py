"""Downlink MU-MISO model: Rayleigh channel, receive chain, SMSE objectives.

Shapes follow the usual convention: ``H`` is ``(M, N)`` with one row per
user and one column per transmit antenna. Symbol and transmit vectors may
carry a trailing batch axis, i.e. ``s`` is ``(M,)`` or ``(M, K)`` and ``x`` /
``phi`` are ``(N,)`` or ``(N, K)``; objectives then return one value per
column.
"""

import numpy as np

__all__ = [
    "generate_channel",
    "complex_normal",
    "snr_db_to_etx",
    "receive",
    "objective_g",
    "grad_g",
    "objective_f",
    "grad_f",
]


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def complex_normal(rng, shape):
    """Draw circularly-symmetric ``CN(0, 1)`` samples."""
    rng = _rng(rng)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def generate_channel(n, m, seed=None):
    """I.i.d. Rayleigh channel with unit-variance entries.

    Parameters
    ----------
    n : int
        Number of base-station antennas.
    m : int
        Number of single-antenna users, ``0 < m < n``.
    seed : int, sequence of int, or numpy Generator
        Anything accepted by :func:`numpy.random.default_rng`.

    Returns
    -------
    ndarray, shape (m, n)
    """
    if not 0 < m < n:
        raise ValueError(f"need 0 < users < antennas, got users={m}, antennas={n}")
    return complex_normal(seed, (m, n))


def snr_db_to_etx(snr_db):
    """Transmit energy for a given SNR; noise variance is fixed to one."""
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


def receive(h, x_q, e_tx, noise=None):
    """Receive ``sqrt(E_tx/N) * H @ x_q + eta``.

    ``noise`` is either a pre-drawn array broadcastable to the output, a
    Generator/seed to draw ``CN(0, I)`` noise from, or ``None`` for a
    noiseless receive.
    """
    h = np.asarray(h)
    x_q = np.asarray(x_q)
    if x_q.shape[0] != h.shape[1]:
        raise ValueError(f"transmit vector has {x_q.shape[0]} entries, channel expects {h.shape[1]}")
    y = np.sqrt(e_tx / h.shape[1]) * (h @ x_q)
    if noise is None:
        return y
    if isinstance(noise, np.ndarray) and np.iscomplexobj(noise):
        return y + noise
    return y + complex_normal(noise, y.shape)


def _residual(x, s, h, alpha):
    return alpha * s - h @ x


def objective_g(phi, s, h, alpha):
    """``||alpha*s - sum_n h_n exp(j*phi_n)||^2`` over the phase vector."""
    r = _residual(np.exp(1j * np.asarray(phi)), s, h, alpha)
    return np.sum(np.abs(r) ** 2, axis=0)


def grad_g(phi, s, h, alpha, residual=None):
    """Closed-form gradient of :func:`objective_g` with respect to the phases.

    ``residual`` may be passed when ``alpha*s - H exp(j*phi)`` is already
    known.
    """
    x = np.exp(1j * np.asarray(phi))
    if residual is None:
        residual = _residual(x, s, h, alpha)
    return -2.0 * np.imag(np.conj(x) * (h.conj().T @ residual))


def objective_f(x, s, h, alpha):
    """``||alpha*s - H x||^2``."""
    r = _residual(np.asarray(x), s, h, alpha)
    return np.sum(np.abs(r) ** 2, axis=0)


def grad_f(x, s, h, alpha):
    """Wirtinger gradient ``-alpha H^T s* + H^T H* x*`` of :func:`objective_f`.

    Descent moves along the conjugate of this vector.
    """
    x = np.asarray(x)
    return -alpha * (h.T @ np.conj(s)) + h.T @ (h.conj() @ np.conj(x))
