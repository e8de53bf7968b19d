"""
One table per channel
=====================

All 4^M symbol vectors are precoded once per channel. Only a quarter of them
need a solver run; the rest follow by rotating every symbol by a common
quarter turn.
"""

import numpy as np

from pskprecoding.model import generate_channel
from pskprecoding.constellation import qpsk_decide_index
from pskprecoding.solvers import SolverParams, build_lut, symbols_from_index


def symbols_index(s):
    # base-4 address, first user most significant
    return qpsk_decide_index(s) @ 4 ** np.arange(len(s) - 1, -1, -1)

n, m = 32, 4
h = generate_channel(n, m, seed=3)
params = SolverParams.for_system("gpm", n, m, bits=2)
lut = build_lut(h, params, "gpm")

print(f"{lut.users} users, {lut.table.shape[1]} entries, {lut.solves} solver runs")
print(f"mean iterations {lut.iterations.mean():.1f}, mean halvings {lut.halvings.mean():.1f}")

# a common rotation of the symbols rotates the transmit vector
k = 5
rotated = int(symbols_index(1j * symbols_from_index(k, m)))
print(f"vector {k} turned by 90 degrees is vector {rotated}")
print("transmit vector turns with it:", np.allclose(lut[rotated], 1j * lut[k]))
