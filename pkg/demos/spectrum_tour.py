#!/usr/bin/env python3
"""Tour of the linear spectrum for a three-interface stack.

Prints the eigenvalue branches of A(xi) at a few wavenumbers, the
determinant identity, the small-xi slopes (the sheet-like modes decay
like |xi|^2) and the high-xi limits (half density jumps).
"""
import numpy as np

from muskatlab.core import FluidConfig
from muskatlab.spectrum import (decompose_modes, det_A0_closed, det_A0_direct,
                                high_freq_limits, low_freq_slopes)

cfg = FluidConfig((3.0, 2.0, 1.5, 0.0), (0.0, 1.0, 2.5))
print(f"densities {cfg.densities}, depths {cfg.depths}")
print(f"half jumps {cfg.jumps / 2}")

xis = np.array([1e-3, 1e-2, 1e-1, 1.0, 10.0])
table = decompose_modes(cfg, xis)
print("\n      xi    " + "  ".join(f"lambda_{k + 1:<7d}" for k in range(cfg.n)))
for x, lam in zip(xis, table.lambdas):
    print(f"{x:9.3g}  " + "  ".join(f"{v:.6e}" for v in lam))

print("\ndeterminant of A0: product formula vs 40-digit elimination")
for x in (1e-3, 0.3, 5.0):
    c = float(det_A0_closed(x, cfg))
    d = det_A0_direct(x, cfg, dps=40)
    print(f"  xi={x:<6g} closed={c:.15e}  direct={d:.15e}  rel={abs(c - d) / d:.1e}")

slopes, errs, alpha = low_freq_slopes(cfg)
print("\nlambda_k(xi)/xi as xi -> 0 (k < n):")
for k, (s, e) in enumerate(zip(slopes, errs), start=1):
    print(f"  c_{k} = {s:.10f}  (+/- {e:.1e})")
print(f"  alpha = {alpha:.10f}")

lam, lim, bound = high_freq_limits(cfg, 60.0 / cfg.min_gap)
print("\nlarge xi: sorted eigenvalues vs sorted half jumps")
print("  ", np.array2string(lam, precision=12))
print("  ", np.array2string(lim, precision=12), f" (gap term {bound:.1e})")
