#!/usr/bin/env python3
"""The loop-equation drift identity for the trapezoid bridge kernel.

One step of the exact kernel moves the Stieltjes-type observable
sum_i 1/(z - x_i) by, in expectation, the contour integral
(1/2 pi i) oint log B(w) dw/(w-z)^2 with B(z) = (f(z)+1)(z-a) built from the
explicit complex slope of the current configuration.  Monte Carlo vs
quadrature, at a few test points.
"""

import numpy as np

from tiling_lab.analysis import drift_check
from tiling_lab.sampler import spread_config
from tiling_lab.lattice import StripSpec
from tiling_lab.rng import Rng
from fractions import Fraction

N, M = 24, 6
spec = StripSpec(0, 1, 1, 0, 1 - Fraction(M, N), N, M)
c0 = spread_config(spec)
print(f"trapezoid kernel: n={N}, m={M}, start {[int(k) for k in c0.positions]}")

for z in (1.35 + 0.45j, -0.4 + 0.5j, 0.5 + 0.9j):
    chk = drift_check(spec, c0, 0.0, z, sample_count=100_000, rng=Rng(9))
    err = abs(chk.mc_mean - chk.contour_value)
    budget = max(3 * chk.mc_stderr, 5.0 / N)
    print(
        f"z={z:+.2f}: MC {chk.mc_mean:+.5f}  contour {chk.contour_value:+.5f}  "
        f"|err| {err:.2e} <= budget {budget:.2e}  -> {'ok' if err <= budget else 'FAIL'}"
    )
