"""Property checks shared by the ``verify`` subcommand and the test suite.

Each check returns a :class:`CheckResult` carrying the measured figure
and the threshold it was held to.
"""
from dataclasses import dataclass

import numpy as np

from .core import FluidConfig, InterfaceState, SpectralGrid, initial_profile
from .diagnostics import energy
from .evolution import Stepper, StepperConfig, run
from .nonlinear import N_kj, N_kk, SeriesDepth, nonlinear_rhs
from .quadrature import QuadParams, linear_pv_apply, pv_rhs
from .spectrum import (_sym_eig, det_A0_closed, det_A0_direct,
                       multiplier_matrix, multiplier_T)

__all__ = [
    "CheckResult", "check_positivity", "check_determinant",
    "check_multiplier", "check_dual_nonlinear", "check_decomposition",
    "check_energy", "linear_rhs", "run_all",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "measured": float(self.measured),
                "threshold": float(self.threshold), "detail": self.detail}


def _rel(a, b):
    scale = np.abs(b).max()
    return float(np.abs(a - b).max() / scale) if scale > 0 else \
        float(np.abs(a - b).max())


def check_positivity(cfg: FluidConfig, xis=None, tol=1e-12) -> CheckResult:
    """Smallest eigenvalue of ``Q^{1/2} A0 Q^{1/2}`` over the sweep."""
    if xis is None:
        xis = np.geomspace(1e-3, 1e2, 200)
    lam, _, _ = _sym_eig(np.asarray(xis), cfg)
    low = float(lam[:, 0].min())
    ok = low >= -tol and bool(np.all(lam[np.asarray(xis) >= 1e-3, 0] > 0))
    return CheckResult("positivity", ok, low, -tol,
                       "min eigenvalue of the symmetric form")


def check_determinant(cfg: FluidConfig, xis=None, tol=1e-12,
                      dps=40) -> CheckResult:
    """Closed product against an extended-precision direct determinant."""
    if xis is None:
        xis = np.geomspace(1e-3, 1e2, 40)
    worst = 0.0
    for x in xis:
        closed = float(det_A0_closed(x, cfg))
        direct = det_A0_direct(x, cfg, dps=dps)
        worst = max(worst, abs(closed - direct) / abs(direct))
    return CheckResult("determinant_identity", worst <= tol, worst, tol,
                       "relative error, direct determinant in mpmath")


def linear_rhs(state: InterfaceState, cfg: FluidConfig) -> np.ndarray:
    """``sum_j T_{k,j} g_j`` by the Fourier multiplier."""
    M = multiplier_matrix(state.grid.xi, cfg)
    G = np.fft.fft(state.g, axis=-1)
    return np.real(np.fft.ifft(np.einsum("mkj,jm->km", M, G), axis=-1))


def check_multiplier(cfg: FluidConfig, grid: SpectralGrid, v=None,
                     qp: QuadParams = QuadParams(periods=8),
                     tol=1e-6) -> CheckResult:
    """Physical-space quadrature of every ``T_{k,j}`` against its symbol."""
    x = grid.x
    if v is None:
        v = np.exp(-(x / 2) ** 2) * np.cos(1.5 * x)
    V = np.fft.fft(v)
    worst = 0.0
    for k in range(1, cfg.n + 1):
        for j in range(1, cfg.n + 1):
            q = linear_pv_apply(v, grid, k, j, cfg, qp)
            m = np.real(np.fft.ifft(multiplier_T(grid.xi, k, j, cfg) * V))
            worst = max(worst, _rel(q, m))
    return CheckResult("multiplier_consistency", worst <= tol, worst, tol,
                       f"M={qp.periods}, N={grid.N}")


def random_state(cfg: FluidConfig, grid: SpectralGrid, amplitude: float,
                 seed: int, kmax: float = 1.0) -> InterfaceState:
    st = initial_profile("random_small", {"eps": amplitude, "seed": seed,
                                          "kmax": kmax}, grid, cfg)
    return st


def check_decomposition(cfg: FluidConfig, grid: SpectralGrid, states=None,
                        qp: QuadParams = QuadParams(),
                        tol=1e-6) -> CheckResult:
    """Full P.V. right-hand side against linear + nonlinear (quadrature)."""
    if states is None:
        amp = 1e-2 * min(1.0, cfg.min_gap)
        states = [random_state(cfg, grid, amp, s) for s in range(3)]
    worst = 0.0
    for st in states:
        full = pv_rhs(st, cfg, qp)
        parts = linear_rhs(st, cfg) + nonlinear_rhs(st, cfg, "quadrature", qp)
        worst = max(worst, _rel(parts, full))
    return CheckResult("rhs_decomposition", worst <= tol, worst, tol,
                       f"{len(states)} states")


def check_dual_nonlinear(cfg: FluidConfig, state: InterfaceState,
                         qp: QuadParams = QuadParams(periods=8),
                         depth: SeriesDepth = SeriesDepth(L=8),
                         tol=1e-6) -> CheckResult:
    """Series against quadrature for every ``(k, j)``."""
    worst = 0.0
    for k in range(1, cfg.n + 1):
        for j in range(1, cfg.n + 1):
            if k == j:
                q = N_kk(state, cfg, k, "quadrature", qp)
                s = N_kk(state, cfg, k, "series", qp, depth)
            else:
                q = N_kj(state, cfg, k, j, "quadrature", qp)
                s = N_kj(state, cfg, k, j, "series", qp, depth)
            worst = max(worst, _rel(s, q))
    return CheckResult("dual_nonlinear", worst <= tol, worst, tol,
                       f"L={depth.L}, M={qp.periods}")


def check_energy(cfg: FluidConfig, state: InterfaceState, sc: StepperConfig,
                 T: float, slack=1e-10) -> CheckResult:
    """Largest relative energy increase between consecutive samples."""
    rec = run(state, cfg, sc, T, s_list=(0.0,))
    E = np.array([s.energy for s in rec.snapshots])
    rise = float((np.diff(E) / abs(E[0])).max()) if abs(E[0]) > 0 else 0.0
    return CheckResult("energy_monotone", rise <= slack, rise, slack,
                       f"{len(E)} samples, {rec.steps} steps")


def run_all(exp, linear_only=False):
    """Desk-scale verification on the configuration of ``exp``."""
    cfg, grid = exp.fluid, exp.grid
    st = exp["stepper"]
    qp = QuadParams(periods=st["periods"], refine=st["refine"])
    results = [check_positivity(cfg), check_determinant(cfg),
               check_multiplier(cfg, grid, qp=QuadParams(periods=8))]
    amp = 1e-2 * min(1.0, cfg.min_gap)
    probe = random_state(cfg, grid, amp, exp["initial"]["seed"])
    results.append(check_dual_nonlinear(cfg, probe))
    results.append(check_decomposition(cfg, grid, [probe], qp))
    initial = initial_profile(exp["initial"]["kind"], exp.profile_params(),
                              grid, cfg)
    dg = exp["diagnostics"]
    sc = StepperConfig(dt_max=st["dt_max"], tol=st["tol"], dt_min=st["dt_min"],
                       nonlinear_mode=st["nonlinear_mode"],
                       series_L=st["series_L"], dealias=st["dealias"],
                       linear_only=linear_only or st["linear_only"],
                       t_first=dg["t_first"], per_decade=dg["per_decade"],
                       quad=qp)
    results.append(check_energy(cfg, initial, sc, st["T_final"]))
    return results
