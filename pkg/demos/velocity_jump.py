#!/usr/bin/env python3
"""Bulk velocity near an interface and its one-sided limits.

The tangential velocity jumps across an interface by the density jump
times the slope factor, while the normal component is continuous.  The
bulk field evaluated at distance delta above and below approaches the
one-sided limits at rate O(delta).
"""
import numpy as np

from muskatlab.core import FluidConfig, InterfaceState, SpectralGrid
from muskatlab.quadrature import QuadParams, one_sided_velocity, velocity_at

cfg = FluidConfig((2.0, 1.0, 0.0), (0.0, 1.0))
grid = SpectralGrid(10.0, 128)
x = grid.x
state = InterfaceState(grid, 0.0, np.vstack([0.1 * np.exp(-x ** 2),
                                             0.05 * np.exp(-(x - 1) ** 2)]))
a, k = 60, 1
x1 = grid.x[a]
f = state.interfaces(cfg)[k - 1, a]
up = one_sided_velocity(a, k, "above", state, cfg).u
dn = one_sided_velocity(a, k, "below", state, cfg).u
print(f"point x1={x1:.4f} on interface {k} (height {f:.6f})")
print(f"  above: {up}\n  below: {dn}\n  jump:  {up - dn}")

qp = QuadParams(refine=32)
print("\n delta    |u(x1, f+delta) - u_above|   |u(x1, f-delta) - u_below|")
for delta in (0.4, 0.2, 0.1):
    ea = np.abs(velocity_at((x1, f + delta), state, cfg, qp).u - up).max()
    eb = np.abs(velocity_at((x1, f - delta), state, cfg, qp).u - dn).max()
    print(f" {delta:5.2f}   {ea:.4e}                     {eb:.4e}")
