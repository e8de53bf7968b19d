"""PSK constellation geometry.

User symbols are Gray-mapped QPSK points ``(+-1 +- 1j)/sqrt(2)``. Transmit
signals are ``2**B``-PSK with phases ``2*pi*k/2**B``, or continuous
constant-envelope signals when ``bits`` is ``math.inf``.

QPSK symbols are addressed by their *rotation index* ``k`` in ``0..3``, the
symbol being ``exp(1j*pi/4) * 1j**k``. Multiplying a symbol by ``1j`` adds one
to its rotation index, which is what the look-up-table reduction relies on.
"""

import math

import numpy as np

__all__ = [
    "MAX_BITS",
    "QPSK_POINTS",
    "GRAY_BITS",
    "check_bits",
    "psk_size",
    "qpsk_modulate",
    "qpsk_decide",
    "qpsk_decide_index",
    "quantize_phase",
    "quantize",
    "project_polygon",
    "normalize_to_ce",
]

MAX_BITS = 8

QPSK_POINTS = np.exp(1j * np.pi / 4) * 1j ** np.arange(4)
QPSK_POINTS.setflags(write=False)

#: Gray bit pair of each rotation index; neighbours differ in one bit.
GRAY_BITS = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.int8)
GRAY_BITS.setflags(write=False)

_GRAY_TO_INDEX = {(0, 0): 0, (0, 1): 1, (1, 1): 2, (1, 0): 3}


def check_bits(bits):
    """Validate a transmit resolution and return it normalized.

    Finite resolutions are integers in ``[2, MAX_BITS]``; ``math.inf`` means
    unquantized constant envelope.
    """
    if bits == math.inf:
        return math.inf
    if isinstance(bits, (bool, np.bool_)) or int(bits) != bits:
        raise ValueError(f"bits must be an integer or inf, got {bits!r}")
    bits = int(bits)
    if not 2 <= bits <= MAX_BITS:
        raise ValueError(f"bits must be in [2, {MAX_BITS}] or inf, got {bits}")
    return bits


def psk_size(bits):
    """Number of transmit PSK points, or ``None`` when unquantized."""
    bits = check_bits(bits)
    return None if bits == math.inf else 2 ** bits


def qpsk_modulate(bits):
    """Map a Gray bit pair to its unit-energy QPSK symbol.

    >>> qpsk_modulate((1, 1))
    (-0.7071067811865475-0.7071067811865475j)
    """
    b0, b1 = (int(b) for b in bits)
    if (b0, b1) not in _GRAY_TO_INDEX:
        raise ValueError(f"expected two bits, got {bits!r}")
    return complex(QPSK_POINTS[_GRAY_TO_INDEX[b0, b1]])


def qpsk_decide_index(r):
    """Quadrant decision returning rotation indices.

    Samples on an axis are decided toward the positive half-plane.
    """
    r = np.asarray(r)
    re_neg = r.real < 0
    im_neg = r.imag < 0
    # quadrants I, II, III, IV -> 0, 1, 2, 3
    return np.where(im_neg, np.where(re_neg, 2, 3), np.where(re_neg, 1, 0)).astype(np.int8)


def qpsk_decide(r):
    """Minimum-distance QPSK decision of complex sample(s)."""
    k = qpsk_decide_index(r)
    out = QPSK_POINTS[k]
    return complex(out) if np.ndim(out) == 0 else out


def quantize_phase(phi, bits):
    """Round phases to the nearest ``2**B``-PSK phase in ``[0, 2*pi)``.

    Ties go to the smaller constellation index. Unquantized phases pass
    through unchanged.
    """
    size = psk_size(bits)
    if size is None:
        return phi
    step = 2 * np.pi / size
    t = np.mod(phi, 2 * np.pi) / step
    k = np.mod(np.ceil(t - 0.5), size)
    return k * step


def quantize(x, bits):
    """Quantize complex transmit entries to ``2**B``-PSK points.

    ``x`` is first forced onto the unit circle; with unquantized resolution
    this is all that happens.
    """
    x = normalize_to_ce(x)
    if psk_size(bits) is None:
        return x
    return np.exp(1j * quantize_phase(np.angle(x), bits))


def project_polygon(x, bits):
    """Euclidean projection onto the filled regular ``2**B``-gon.

    The polygon has vertices ``exp(2j*pi*k/2**B)``. For unquantized
    resolution it is the closed unit disc. Works elementwise on arrays.
    """
    x = np.asarray(x, dtype=complex)
    size = psk_size(bits)
    if size is None:
        mag = np.abs(x)
        return np.where(mag > 1.0, x / np.where(mag > 1.0, mag, 1.0), x)

    half = np.pi / size
    # rotate so that x's edge is vertical at Re = cos(half), centred on Im = 0
    sector = np.floor(np.mod(np.angle(x), 2 * np.pi) / (2 * half))
    rot = np.exp(1j * (2 * half * sector + half))
    y = x / rot
    apothem = np.cos(half)
    outside = y.real > apothem
    clamped = apothem + 1j * np.clip(y.imag, -np.sin(half), np.sin(half))
    return np.where(outside, clamped * rot, x)


def normalize_to_ce(x):
    """Scale entries to unit modulus; zero entries become ``1``."""
    x = np.asarray(x, dtype=complex)
    mag = np.abs(x)
    safe = np.where(mag > 0, mag, 1.0)
    out = np.where(mag > 0, x / safe, 1.0 + 0j)
    return complex(out) if out.ndim == 0 else out
