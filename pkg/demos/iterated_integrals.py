"""Iterated integrals of a spectral path, three ways.

A path made of a few Fourier atoms has closed-form iterated integrals.  The
tree expansion reproduces them, and an ODE solve agrees with both.
"""

from roughfbm import TRIVIAL, generic_atom_path
from roughfbm.verify import (fno_value, oracle_iterated_integral,
                             quadrature_iterated_integral)

path = generic_atom_path(3, 3, seed=0)
s, t = -0.2, 0.7

for word in [(1, 2), (1, 2, 3), (3, 1, 2)]:
    tree, _ = fno_value(path, word, s, t, TRIVIAL)
    exact = oracle_iterated_integral(path, word, s, t)
    ode = quadrature_iterated_integral(path, word, s, t)
    print(f"word {word}: tree {tree.real:+.12f}  exact {exact.real:+.12f}  ode {ode:+.12f}")
