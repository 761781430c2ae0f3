"""Physical-space principal-value quadrature for the interface system.

Every singular integral here has the form

    P.V. int_R  y q(y) / (y^2 + b(y)^2) dy

with ``q`` and ``b`` periodic in ``y`` (period ``2L``) once the interface
data are periodic.  The y-line is cut into periods: the ``2M - 1`` periods
of the window ``[-(2M-1)L, (2M-1)L]`` are summed image by image with the
trapezoid rule in the in-period coordinate ``u``, and the remaining images
``|n| >= M`` are added from the closed-form lattice sum

    sum_n (u + 2Ln) / ((u + 2Ln)^2 + b^2)
        = (pi / 2L) sin(pi u / L) / (cosh(pi b / L) - cos(pi u / L))

(symmetric summation), so that the result is the line integral of the
periodic extension.  With ``tail='none'`` the window is a sharp truncation
and carries an ``O(1 / (M L))`` error, which :func:`tail_estimate` reports.

Derivatives of interface data are spectral; samples at ``x - u`` come from
the grid itself (``refine=1``) or from band-limited interpolation onto a
grid ``refine`` times finer.  The removable node ``u = 0`` of self-terms
is filled with its analytic limit.
"""
from dataclasses import dataclass

import numpy as np

from .core import (FluidConfig, InterfaceState, SpectralGrid,
                   spectral_derivative)
from .errors import InterfaceOverlap, OnInterface

__all__ = [
    "QuadParams", "VelocitySample", "pv_rhs", "pv_rhs_line",
    "linear_pv_apply", "velocity_at", "one_sided_velocity",
    "normal_velocity_residual", "tail_estimate", "refine_samples",
    "suggested_refine",
]


@dataclass(frozen=True)
class QuadParams:
    """Quadrature knobs.

    periods : M, number of torus periods covered by the explicit window
        ``[-(2M-1)L, (2M-1)L]``.
    refine : y-step is ``dx / refine``.
    pv_pairing : sum ``u`` and ``-u`` contributions together before the
        outer sum (exact cancellation of odd singular parts).
    tail : ``'analytic'`` adds the closed-form remainder of the lattice
        sum; ``'none'`` truncates at the window edge.
    chunk : number of x rows evaluated per vectorised block.
    """
    periods: int = 1
    refine: int = 1
    pv_pairing: bool = True
    tail: str = "analytic"
    chunk: int = 128

    def __post_init__(self):
        if self.periods < 1:
            raise ValueError("periods must be >= 1")
        if self.refine < 1:
            raise ValueError("refine must be >= 1")
        if self.tail not in ("analytic", "none"):
            raise ValueError("tail must be 'analytic' or 'none'")

    def window(self, grid: SpectralGrid) -> float:
        return (2 * self.periods - 1) * grid.L


@dataclass(frozen=True)
class VelocitySample:
    point: tuple
    u: np.ndarray


# ---------------------------------------------------------------------------
# kernels

def _half_den(u, b, L):
    # (cosh(pi b/L) - cos(pi u/L)) / 2 without cancellation
    beta = np.pi / L
    return np.sinh(0.5 * beta * b) ** 2 + np.sin(0.5 * beta * u) ** 2


def _lattice(u, b, L):
    """Full symmetric image sum of ``y / (y^2 + b^2)``."""
    return (np.pi / (4 * L)) * np.sin(np.pi * u / L) / _half_den(u, b, L)


def _lattice_diff(u, b0, c, L):
    """Image sum of ``y/(y^2+(b0+c)^2) - y/(y^2+b0^2)``, stable in ``c``."""
    beta = np.pi / L
    h1 = _half_den(u, b0 + c, L)
    h0 = _half_den(u, b0, L)
    # sinh^2(a) - sinh^2(b) = sinh(a - b) sinh(a + b)
    num = -np.sinh(0.5 * beta * c) * np.sinh(0.5 * beta * (2 * b0 + c))
    return (np.pi / (4 * L)) * np.sin(beta * u) * num / (h1 * h0)


def _window(u, b, L, M):
    acc = np.zeros(np.broadcast(u, b).shape)
    b2 = b * b
    for n in range(-(M - 1), M):
        y = u + 2 * L * n
        acc += y / (y * y + b2)
    return acc


def _window_diff(u, b0, c, L, M):
    acc = np.zeros(np.broadcast(u, b0, c).shape)
    b1 = b0 + c
    b02, b12 = b0 * b0, b1 * b1
    dd = -c * (2 * b0 + c)
    for n in range(-(M - 1), M):
        y = u + 2 * L * n
        y2 = y * y
        acc += y * dd / ((y2 + b12) * (y2 + b02))
    return acc


def _kernel(u, b, L, qp):
    with np.errstate(divide="ignore", invalid="ignore"):
        if qp.tail == "none":
            return _window(u, b, L, qp.periods)
        # window + remaining images == full lattice sum
        return _lattice(u, b, L)


def _kernel_diff(u, b0, c, L, qp):
    with np.errstate(divide="ignore", invalid="ignore"):
        if qp.tail == "none":
            return _window_diff(u, b0, c, L, qp.periods)
        return _lattice_diff(u, b0, c, L)


def tail_estimate(grid: SpectralGrid, qp: QuadParams, amplitude=1.0):
    """Bound for the contribution of the images beyond the window.

    A mean-zero ``2L``-periodic ``q`` with ``|q| <= amplitude`` against a
    kernel decaying like ``1/y`` leaves at most ``amplitude * 2L / Y``
    per side beyond ``Y``; returned as the ``O(1/(M L))`` figure.
    """
    Y = qp.window(grid)
    return 2.0 * amplitude * (2.0 * grid.L) / (np.pi * Y)


def suggested_refine(grid: SpectralGrid, cfg: FluidConfig, tol=1e-10) -> int:
    """Smallest sub-sampling factor that resolves the interface gaps.

    The trapezoid rule applied to the cross kernel, whose poles sit a
    distance ``gap`` off the real axis, errs by about
    ``exp(-2 pi gap / h)``.  ``h = dx / refine`` is chosen to keep that
    factor below ``tol``.
    """
    if cfg.n < 2:
        return 1
    h = 2 * np.pi * cfg.min_gap / np.log(1.0 / tol)
    return max(1, int(np.ceil(grid.dx / h)))


# ---------------------------------------------------------------------------
# sampling helpers

def refine_samples(samples, factor: int) -> np.ndarray:
    """Band-limited interpolation onto a grid ``factor`` times finer."""
    g = np.atleast_2d(np.asarray(samples, dtype=float))
    if factor == 1:
        return g.copy()
    N = g.shape[-1]
    G = np.fft.fft(g, axis=-1)
    Nf = N * factor
    out = np.zeros(g.shape[:-1] + (Nf,), dtype=complex)
    half = N // 2
    out[..., :half] = G[..., :half]
    out[..., Nf - half + 1:] = G[..., half + 1:]
    # split the Nyquist mode symmetrically
    out[..., half] = 0.5 * G[..., half]
    out[..., Nf - half] = 0.5 * G[..., half]
    return np.real(np.fft.ifft(out, axis=-1)) * factor


class _Sampler:
    """Fine-grid copies of ``f``, ``f'`` and ``f''`` for shifted lookups."""

    def __init__(self, g, grid, refine):
        g = np.atleast_2d(np.asarray(g, dtype=float))
        self.grid, self.r = grid, refine
        self.Nu = grid.N * refine
        self.h = grid.dx / refine
        self.g = g
        self.dg = spectral_derivative(g, grid)
        self.d2g = spectral_derivative(g, grid, 2)
        self.gf = refine_samples(g, refine)
        self.dgf = refine_samples(self.dg, refine)
        i = np.arange(self.Nu) - self.Nu // 2
        self.i = i
        self.u = i * self.h
        self.zero = self.Nu // 2  # column of u = 0

    def shifted(self, arr_f, row, rows):
        """``arr_f[row]`` at ``x_a - u_i`` for coarse indices ``rows``."""
        idx = (rows[:, None] * self.r - self.i[None, :]) % self.Nu
        return arr_f[row][idx]

    def pair_sum(self, vals, pairing):
        """Trapezoid sum over one period of ``u`` (columns)."""
        if not pairing:
            return self.h * vals.sum(axis=1)
        z = self.zero
        pos = vals[:, z + 1:]
        neg = vals[:, z - 1:0:-1]
        total = (pos + neg).sum(axis=1) + vals[:, z] + vals[:, 0]
        return self.h * total


def _rows(grid, qp):
    for start in range(0, grid.N, qp.chunk):
        yield np.arange(start, min(start + qp.chunk, grid.N))


def _check_order(state, cfg):
    if not state.is_finite():
        raise InterfaceOverlap("state contains non-finite samples")
    if state.n > 1 and state.gap_margin(cfg) <= 0:
        raise InterfaceOverlap(
            f"interfaces touch or cross (gap margin "
            f"{state.gap_margin(cfg):.3e})")


# ---------------------------------------------------------------------------
# right-hand side

def pv_rhs(state: InterfaceState, cfg: FluidConfig,
           qp: QuadParams = QuadParams(), pairs=None) -> np.ndarray:
    """``d f_k / dt`` by direct quadrature of the contour equation.

    Returns an ``(n, N)`` array.  ``pairs`` restricts the sum to the
    listed ``(k, j)`` interactions (0-based) and returns the partial sums.
    """
    _check_order(state, cfg)
    grid = state.grid
    f = state.interfaces(cfg)
    S = _Sampler(f, grid, qp.refine)
    L, u = grid.L, S.u[None, :]
    jumps = cfg.jumps
    out = np.zeros((cfg.n, grid.N))
    for k in range(cfg.n):
        for j in range(cfg.n):
            if pairs is not None and (k, j) not in pairs:
                continue
            acc = np.empty(grid.N)
            for rows in _rows(grid, qp):
                fk = f[k][rows][:, None]
                dfk = S.dg[k][rows][:, None]
                q = S.shifted(S.dgf, j, rows) - dfk
                b = S.shifted(S.gf, j, rows) - fk
                vals = q * _kernel(u, b, L, qp)
                if j == k:
                    vals[:, S.zero] = (-S.d2g[k][rows]
                                       / (1.0 + S.dg[k][rows] ** 2))
                acc[rows] = S.pair_sum(vals, qp.pv_pairing)
            out[k] += -jumps[j] / (2 * np.pi) * acc
    return out


def pv_rhs_line(funcs, derivs, second, x, cfg: FluidConfig,
                half_window=60.0, h=0.01):
    """Contour right-hand side on the line for analytically given,
    localised perturbations (reference for periodisation studies).

    ``funcs[k](x)``, ``derivs[k](x)`` and ``second[k](x)`` evaluate
    ``g_k``, ``g_k'`` and ``g_k''``.  Far-field contributions that survive
    symmetric truncation are odd in ``y`` and cancel under pairing; what
    is left decays like the data.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = h * np.arange(1, int(round(half_window / h)) + 1)
    out = np.zeros((cfg.n, len(x)))
    for k in range(cfg.n):
        fk = cfg.d[k] + funcs[k](x)[:, None]
        dfk = derivs[k](x)[:, None]
        for j in range(cfg.n):
            total = np.zeros(len(x))
            for sgn in (1.0, -1.0):
                yy = sgn * y[None, :]
                fj = cfg.d[j] + funcs[j](x[:, None] - yy)
                dfj = derivs[j](x[:, None] - yy)
                total += (yy * (dfj - dfk) / (yy ** 2 + (fj - fk) ** 2)).sum(1)
            if j == k:
                total += (-second[k](x) / (1.0 + derivs[k](x) ** 2))
            out[k] += -cfg.jumps[j] / (2 * np.pi) * h * total
    return out


def linear_pv_apply(v, grid: SpectralGrid, k: int, j: int, cfg: FluidConfig,
                    qp: QuadParams = QuadParams()) -> np.ndarray:
    """Apply ``T_{k,j}`` (1-based indices) to samples ``v`` by quadrature.

    The kernel does not depend on ``x``, so the period sum is a circular
    correlation of kernel weights with the shifted samples of ``v'``.
    """
    S = _Sampler(v, grid, qp.refine)
    D = abs(cfg.d[k - 1] - cfg.d[j - 1])
    u = S.u
    K = _kernel(u, np.full_like(u, D), grid.L, qp)
    if k == j:
        K[S.zero] = 0.0
    w = S.h * K
    if qp.pv_pairing and k == j:
        # u and -u carry equal and opposite weights
        w[S.zero + 1:] = 0.5 * (w[S.zero + 1:] - w[S.zero - 1:0:-1])
        w[1:S.zero] = -w[S.zero + 1:][::-1]
    dvf = S.dgf[0]
    out = np.empty(grid.N)
    for rows in _rows(grid, qp):
        idx = (rows[:, None] * S.r - S.i[None, :]) % S.Nu
        shifted = dvf[idx]
        if k == j:
            shifted = shifted - S.dg[0][rows][:, None]
        out[rows] = shifted @ w
    if k == j:
        out += S.h * (-S.d2g[0])
    return -cfg.jumps[j - 1] / (2 * np.pi) * out


# ---------------------------------------------------------------------------
# velocity field

def velocity_at(point, state: InterfaceState, cfg: FluidConfig,
                qp: QuadParams = QuadParams()) -> VelocitySample:
    """Darcy velocity at a bulk point off the interfaces."""
    grid = state.grid
    x1, x2 = float(point[0]), float(point[1])
    f = state.interfaces(cfg)
    S = _Sampler(f, grid, qp.refine)
    # interface heights below the point, on the fine grid
    x1f = -grid.L + S.h * np.arange(S.Nu)
    xq = np.array([x1])
    for j in range(cfg.n):
        fj_at = _interp_periodic(S.gf[j], grid, xq)[0]
        if abs(x2 - fj_at) <= 0.5 * grid.dx:
            raise OnInterface(
                f"point ({x1}, {x2}) lies within dx/2 of interface {j + 1}; "
                f"use one_sided_velocity")
    # sample at x1 - u: shift the fine grid so x1 sits on a node
    shift = (x1 - x1f[0]) / S.h
    u1 = u2 = 0.0
    for j in range(cfg.n):
        fj, dfj = _shifted_line(S.gf[j], S.dgf[j], shift, S)
        b = x2 - fj
        K = _kernel(S.u, b, grid.L, qp)
        I1 = S.pair_sum(K[None, :], qp.pv_pairing)[0]
        I2 = S.pair_sum((K * dfj)[None, :], qp.pv_pairing)[0]
        u1 += -cfg.jumps[j] / (2 * np.pi) * I1
        u2 += -cfg.jumps[j] / (2 * np.pi) * I2
    return VelocitySample((x1, x2), np.array([u1, u2]))


def _interp_periodic(samples_f, grid, xq):
    """Trigonometric interpolation of fine-grid samples at points ``xq``."""
    Nf = len(samples_f)
    c = np.fft.fft(samples_f) / Nf
    m = np.fft.fftfreq(Nf, 1.0 / Nf)
    m[Nf // 2] = 0.0
    c[Nf // 2] = 0.0
    phase = np.exp(1j * np.pi / grid.L * np.outer(np.asarray(xq) + grid.L, m))
    return np.real(phase @ c)


def _shifted_line(gf, dgf, shift, S):
    """Values at ``x1 - u_i`` for all fine nodes, ``x1`` arbitrary."""
    Nf = S.Nu
    frac = shift - np.floor(shift)
    base = int(np.floor(shift))
    if frac != 0.0:
        m = np.fft.fftfreq(Nf, 1.0 / Nf)
        m[Nf // 2] = 0.0
        ph = np.exp(2j * np.pi * m * frac / Nf)
        gf = np.real(np.fft.ifft(np.fft.fft(gf) * ph))
        dgf = np.real(np.fft.ifft(np.fft.fft(dgf) * ph))
    idx = (base - S.i) % Nf
    return gf[idx], dgf[idx]


def _interface_pv_velocity(x_index, k, S, f, cfg, qp):
    """P.V. velocity at the grid point ``(x_a, f_k(x_a))`` (no jump term)."""
    grid = S.grid
    rows = np.array([x_index])
    fk = f[k][x_index]
    dfk = S.dg[k][x_index]
    d2fk = S.d2g[k][x_index]
    u = S.u[None, :]
    v1 = v2 = 0.0
    for j in range(cfg.n):
        fj = S.shifted(S.gf, j, rows)
        dfj = S.shifted(S.dgf, j, rows)
        b = fk - fj
        K = _kernel(u, b, grid.L, qp)
        a1, a2 = K.copy(), K * dfj
        if j == k:
            s = 1.0 + dfk ** 2
            # even part of the 1/u singular expansion at u = 0
            a1[:, S.zero] = dfk * d2fk / s ** 2
            a2[:, S.zero] = -d2fk / s ** 2
        v1 += -cfg.jumps[j] / (2 * np.pi) * S.pair_sum(a1, True)[0]
        v2 += -cfg.jumps[j] / (2 * np.pi) * S.pair_sum(a2, True)[0]
    return np.array([v1, v2])


def one_sided_velocity(x_index: int, k: int, side: str,
                       state: InterfaceState, cfg: FluidConfig,
                       qp: QuadParams = QuadParams()) -> VelocitySample:
    """Limit of the bulk velocity at ``(x_a, f_k(x_a))`` from above or below.

    ``x_index`` is a grid index and ``k`` a 1-based interface index.
    """
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    grid = state.grid
    f = state.interfaces(cfg)
    S = _Sampler(f, grid, qp.refine)
    base = _interface_pv_velocity(x_index, k - 1, S, f, cfg, qp)
    dfk = S.dg[k - 1][x_index]
    jump = 0.5 * cfg.jumps[k - 1] * dfk * np.array([1.0, dfk]) \
        / np.sqrt(1.0 + dfk ** 2)
    sign = 1.0 if side == "above" else -1.0
    return VelocitySample((float(grid.x[x_index]), float(f[k - 1][x_index])),
                          base + sign * jump)


def normal_velocity_residual(state: InterfaceState, cfg: FluidConfig,
                             qp: QuadParams = QuadParams()) -> np.ndarray:
    """Kinematic-condition residual ``u . (-f_k', 1) - df_k/dt``."""
    _check_order(state, cfg)
    grid = state.grid
    f = state.interfaces(cfg)
    S = _Sampler(f, grid, qp.refine)
    rhs = pv_rhs(state, cfg, qp)
    res = np.empty_like(rhs)
    for k in range(cfg.n):
        for a in range(grid.N):
            vel = _interface_pv_velocity(a, k, S, f, cfg, qp)
            res[k, a] = -S.dg[k][a] * vel[0] + vel[1] - rhs[k, a]
    return res
