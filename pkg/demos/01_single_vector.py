"""
Precoding one symbol vector
===========================

Draw a channel, pick a QPSK symbol vector and compare what the three
solvers make of it on the same instance.
"""

import math

import numpy as np

from pskprecoding.constellation import qpsk_decide_index
from pskprecoding.model import generate_channel, objective_f
from pskprecoding.solvers import SolverParams, gdm_solve, gpm_solve, qgdm_solve, symbols_from_index

n, m = 32, 4
h = generate_channel(n, m, seed=1)
s = symbols_from_index(57, m)

# the desired vector is scaled by alpha inside the objective
for name, solve, bits in [("gdm", gdm_solve, math.inf), ("qgdm", qgdm_solve, 3), ("gpm", gpm_solve, 3)]:
    p = SolverParams.for_system(name, n, m, bits=bits)
    r = solve(s, h, p)
    residual = objective_f(r.x, s, h, p.alpha)
    print(f"{name:5s} B={bits}: {r.iterations:3d} iterations, {r.halvings:2d} halvings, "
          f"|x| in [{np.abs(r.x).min():.3f}, {np.abs(r.x).max():.3f}], residual {residual:.3f}")

# without noise every user decides its own symbol
p = SolverParams.for_system("gdm", n, m)
x = gdm_solve(s, h, p).x
print("noiseless decisions:", qpsk_decide_index(h @ x), "sent:", qpsk_decide_index(s))
