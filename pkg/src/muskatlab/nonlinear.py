"""Nonlinear interface interactions and their perturbation series.

With ``c = g_k(x) - g_j(x - y)`` and ``D = d_k - d_j`` the nonlinear part
of the contour right-hand side is

    N_kj(x) = (rho_{j-1} - rho_j) / 2pi
              * P.V. int dc/dx [K(D + c) - K(D)] dy,   K(b) = y / (y^2 + b^2),

which covers ``j = k`` too (``D = 0``).  Two evaluations are provided:

``quadrature``
    the exact rational integrand on the periodised kernel (see
    :mod:`muskatlab.quadrature`);
``series``
    the expansion in powers of ``c``.  For ``k != j``

        K(D + c) - K(D) = sum_l b_{l,k,j}(y) c^l,

    with the closed coefficient sum of :func:`b_coeff`, convergent for
    ``|c| < |D|``.  For ``k = j`` the expansion is
    ``sum_l (-1)^l a^{2l} / y^{2l+1}``, convergent for ``|a / y| < 1``.
    The y-integrals run over the explicit window of ``M`` periods; the
    remaining images are summed in closed form (Hurwitz zeta) unless the
    quadrature parameters ask for a sharp truncation.
"""
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import integrate, special

from .core import FluidConfig, InterfaceState, SpectralGrid
from .errors import GuardExceeded, OutOfRadius
from .quadrature import QuadParams, _kernel_diff, _rows, _Sampler, _check_order

__all__ = [
    "SeriesDepth", "BoundReport", "b_coeff", "coefficient_bound",
    "N_kk", "N_kj", "nonlinear_rhs", "F_eval", "C0_constant",
    "bound_report", "kernel_integral_ratio",
]


@dataclass(frozen=True)
class SeriesDepth:
    """Series truncation ``L`` and the smallness guard (fraction of the
    radius of convergence that the data may use)."""
    L: int = 8
    amplitude_guard: float = 0.5

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("series order L must be >= 1")
        if not 0 < self.amplitude_guard < 1:
            raise ValueError("amplitude_guard must lie in (0, 1)")


@dataclass(frozen=True)
class BoundReport:
    k: int
    j: int
    s: float
    measured: float
    bound: float
    ratio: float
    C0: float


# ---------------------------------------------------------------------------
# series coefficients

def _b_terms(l, d):
    """``(m, coefficient)`` pairs of ``b_l = y sum_m coef * w^(m+1)``."""
    return [(m, (-1) ** (l - m) * comb(m, l - m) * (2.0 * d) ** (2 * m - l))
            for m in range((l + 1) // 2, l + 1)]


def b_coeff(l: int, k: int, j: int, y, cfg: FluidConfig):
    """Series coefficient ``b_{l,k,j}(y)`` (1-based ``k != j``).

    For ``k < j`` these are the Taylor coefficients of
    ``y / (y^2 + (d - z)^2)`` in ``z`` with ``d = |d_k - d_j|``; for
    ``k > j`` the sign ``(-1)^l`` is applied.  At ``d = 1`` the generating
    function is ``y w / (1 - w z (2 - z))``, ``w = 1 / (y^2 + 1)``.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    if k == j:
        raise ValueError("b_coeff is defined for k != j")
    d = abs(cfg.d[k - 1] - cfg.d[j - 1])
    y = np.asarray(y, dtype=float)
    w = 1.0 / (y * y + d * d)
    out = np.zeros_like(y)
    for m, coef in _b_terms(l, d):
        out = out + coef * w ** (m + 1)
    out = y * out
    return out if k < j else (-1) ** l * out


def coefficient_bound(l: int, y, d: float):
    """Stated majorant ``2^l y / (y^2 + d^2)^(l+1)``."""
    y = np.asarray(y, dtype=float)
    return 2.0 ** l * y / (y * y + d * d) ** (l + 1)


# ---------------------------------------------------------------------------
# N_kj evaluation

def _prefactor(cfg, j):
    return cfg.jumps[j] / (2 * np.pi)


def _image_tail(u, p, L, M):
    """``sum_{|n| >= M} (u + 2Ln)^-p`` for odd ``p`` and ``|u| <= L``."""
    z = u / (2 * L)
    return (2 * L) ** (-p) * (special.zeta(p, M + z) - special.zeta(p, M - z))


def _tail_kj(u, m, d, L, M, tol=1e-18):
    """``sum_{|n| >= M} y/(y^2+d^2)^(m+1)`` at ``y = u + 2Ln`` via the
    expansion in ``(d/y)^2``, which converges since ``|y| >= (2M-1)L > d``."""
    ratio = (d / ((2 * M - 1) * L)) ** 2
    out = np.zeros_like(u)
    r = 0
    while True:
        # binom(-(m+1), r) = (-1)^r C(m+r, r)
        coef = (-1) ** r * comb(m + r, r) * d ** (2 * r)
        term = coef * _image_tail(u, 2 * m + 1 + 2 * r, L, M)
        out += term
        r += 1
        if abs(coef) * ratio ** r < tol:
            return out


def _series_table_kj(S, qp, d, L, sign):
    """Image sums ``B_l(u) = sum_n b_l(u + 2Ln)`` for l = 1..L: the window
    ``|n| < M`` explicitly, the rest analytically unless ``tail='none'``."""
    Lh = S.grid.L
    out = np.zeros((L, S.Nu))
    powers = {}
    for n in range(-(qp.periods - 1), qp.periods):
        y = S.u + 2 * Lh * n
        w = 1.0 / (y * y + d * d)
        for m in range(1, L + 1):
            powers[m] = powers.get(m, 0.0) + y * w ** (m + 1)
    if qp.tail == "analytic":
        for m in range(1, L + 1):
            powers[m] = powers[m] + _tail_kj(S.u, m, d, Lh, qp.periods)
    for l in range(1, L + 1):
        for m, coef in _b_terms(l, d):
            out[l - 1] += sign ** l * coef * powers[m]
    return out


def _series_table_kk(S, qp, L):
    """Image sums of ``y^-(2l+1)``; the ``n = 0`` image is dropped at
    ``u = 0`` where the integrand is filled with its limit."""
    Lh = S.grid.L
    out = np.zeros((L, S.Nu))
    with np.errstate(divide="ignore"):
        for n in range(-(qp.periods - 1), qp.periods):
            y = S.u + 2 * Lh * n
            for l in range(1, L + 1):
                term = y ** -(2 * l + 1)
                if n == 0:
                    term[S.zero] = 0.0
                out[l - 1] += term
    if qp.tail == "analytic":
        for l in range(1, L + 1):
            out[l - 1] += _image_tail(S.u, 2 * l + 1, Lh, qp.periods)
    return out


def _eval_pair(state, cfg, k, j, mode, qp, depth, S=None):
    """``N_{k,j}`` with 0-based indices; returns the N samples."""
    grid = state.grid
    if S is None:
        S = _Sampler(state.g, grid, qp.refine)
    D = cfg.d[k] - cfg.d[j]
    out = np.empty(grid.N)
    u = S.u[None, :]

    if mode == "series":
        if depth is None:
            depth = SeriesDepth()
        if j == k:
            slope = np.abs(S.dg[k]).max()
            if slope > depth.amplitude_guard:
                raise GuardExceeded(
                    f"max |g_{k + 1}'| = {slope:.3e} exceeds guard "
                    f"{depth.amplitude_guard} (series in (g(x)-g(x-y))/y)")
            table = _series_table_kk(S, qp, depth.L)
        else:
            spread = (S.g[k].max() - S.g[j].min(), S.g[j].max() - S.g[k].min())
            cmax = max(abs(spread[0]), abs(spread[1]))
            d = abs(D)
            if cmax > depth.amplitude_guard * d:
                raise GuardExceeded(
                    f"max |g_{k + 1}(x) - g_{j + 1}(x-y)| = {cmax:.3e} exceeds "
                    f"guard {depth.amplitude_guard} x gap {d}")
            table = _series_table_kj(S, qp, d, depth.L,
                                     1.0 if k < j else -1.0)
    elif mode != "quadrature":
        raise ValueError(f"mode must be 'quadrature' or 'series', got {mode!r}")

    for rows in _rows(grid, qp):
        gk = S.g[k][rows][:, None]
        dgk = S.dg[k][rows][:, None]
        c = gk - S.shifted(S.gf, j, rows)
        dc = dgk - S.shifted(S.dgf, j, rows)
        if mode == "quadrature":
            vals = dc * _kernel_diff(u, np.full_like(c, D), c, grid.L, qp)
            if j == k:
                g1 = S.dg[k][rows]
                vals[:, S.zero] = -S.d2g[k][rows] * g1 ** 2 / (1.0 + g1 ** 2)
        elif j == k:
            vals = np.zeros_like(c)
            c2 = c * c
            power = np.ones_like(c)
            for l in range(1, depth.L + 1):
                power = power * c2
                vals += (-1) ** l * table[l - 1][None, :] * power
            vals *= dc
            g1 = S.dg[k][rows]
            lim = np.zeros_like(g1)
            for l in range(1, depth.L + 1):
                lim += (-1) ** l * g1 ** (2 * l)
            vals[:, S.zero] = S.d2g[k][rows] * lim
        else:
            vals = np.zeros_like(c)
            power = np.ones_like(c)
            for l in range(1, depth.L + 1):
                power = power * c
                vals += table[l - 1][None, :] * power
            vals *= dc
        out[rows] = S.pair_sum(vals, qp.pv_pairing)
    return _prefactor(cfg, j) * out


def N_kk(state: InterfaceState, cfg: FluidConfig, k: int,
         mode: str = "quadrature", qp: QuadParams = QuadParams(),
         depth: SeriesDepth = None) -> np.ndarray:
    """Self-interaction nonlinearity of interface ``k`` (1-based)."""
    return _eval_pair(state, cfg, k - 1, k - 1, mode, qp, depth)


def N_kj(state: InterfaceState, cfg: FluidConfig, k: int, j: int,
         mode: str = "quadrature", qp: QuadParams = QuadParams(),
         depth: SeriesDepth = None) -> np.ndarray:
    """Cross-interaction nonlinearity, interface ``j`` acting on ``k``."""
    if k == j:
        raise ValueError("use N_kk for k == j")
    _check_order(state, cfg)
    return _eval_pair(state, cfg, k - 1, j - 1, mode, qp, depth)


def nonlinear_rhs(state: InterfaceState, cfg: FluidConfig,
                  mode: str = "quadrature", qp: QuadParams = QuadParams(),
                  depth: SeriesDepth = None) -> np.ndarray:
    """``sum_j N_{k,j}`` for every k, as an ``(n, N)`` array."""
    _check_order(state, cfg)
    S = _Sampler(state.g, state.grid, qp.refine)
    out = np.zeros((cfg.n, state.grid.N))
    for k in range(cfg.n):
        for j in range(cfg.n):
            out[k] += _eval_pair(state, cfg, k, j, mode, qp, depth, S)
    return out


# ---------------------------------------------------------------------------
# bound machinery

def C0_constant(cfg: FluidConfig) -> float:
    """Smallest ``C0`` with ``2^l y/(y^2+d^2)^(l+1) <= C0^l y/(y^2+1)^(l+1)``
    for all ``y``, ``l >= 1`` and every gap ``d`` of the configuration."""
    if cfg.n < 2:
        return 2.0
    d = min(abs(a - b) for i, a in enumerate(cfg.depths)
            for b in cfg.depths[i + 1:])
    return 2.0 * max(1.0, d ** -4)


_TAIL_TOL = 1e-14


def F_eval(name: str, x: float, s: float, C0: float = 2.0):
    """Partial sum of ``F0s``, ``F1s`` or ``F2s`` with a geometric tail
    bound below ``1e-14``.

    Returns
    -------
    value, order
        The converged sum and the number of terms used.
    """
    x = float(x)
    if name == "F0s":
        if abs(x) >= 1:
            raise OutOfRadius(f"F0s needs |x| < 1, got {x}")
        total, l = 0.0, 0
        x2 = x * x
        if x2 == 0.0:
            return 0.0, 0
        term = 1.0
        while True:
            l += 1
            term *= x2
            a = (2 * l + 1) ** s * term
            total += a
            # ratio of successive terms is bounded by q for all later l
            q = ((2 * l + 3) / (2 * l + 1)) ** max(s, 0) * x2
            if q < 1 and a * q / (1 - q) < _TAIL_TOL * max(1.0, abs(total)):
                return total, l
    a = 2.0 ** s * C0
    if name not in ("F1s", "F2s"):
        raise ValueError(f"unknown F function {name!r}")
    if abs(x) * a >= 1:
        raise OutOfRadius(
            f"{name} needs |x| < 1/(2^s C0) = {1 / a:.6g}, got {x}")
    total, l, term = 0.0, 0, 1.0
    q = abs(a * x)
    while True:
        l += 1
        total += a ** l * x ** (l - 1) if l > 1 else a
        tail = a ** (l + 1) * abs(x) ** l / (1 - q)
        if tail < _TAIL_TOL * max(1.0, abs(total)):
            break
    if name == "F1s":
        return x * total, l
    return total, l


def _weighted(coeffs, grid, weight):
    return float(np.sum(weight * np.abs(coeffs)) * grid.dxi)


def bound_report(state: InterfaceState, cfg: FluidConfig, k: int, j: int,
                 s: float, tilde, qp: QuadParams = QuadParams()) -> BoundReport:
    """Measured Wiener norm of ``N_{k,j}`` against the stated estimate
    with the hidden constant set to 1 (1-based ``k``, ``j``)."""
    from .core import forward_transform
    grid = state.grid
    C0 = C0_constant(cfg)
    xi = np.abs(grid.xi)
    ws = xi ** s if s > 0 else np.ones_like(xi)
    ghat = forward_transform(state.g, grid).coeffs
    Nk = (N_kk(state, cfg, k, qp=qp) if k == j
          else N_kj(state, cfg, k, j, qp=qp))
    measured = _weighted(forward_transform(Nk, grid).coeffs, grid, ws)
    gk, gj = ghat[k - 1], ghat[j - 1]
    if k == j:
        norm1 = _weighted(gk, grid, xi)
        F0, _ = F_eval("F0s", norm1, s)
        bound = F0 * _weighted(gk, grid, xi ** (s + 1))
    else:
        lt = tilde(grid.xi)
        n0 = _weighted(gk, grid, 1.0) + _weighted(gj, grid, 1.0)
        n1 = _weighted(gk, grid, xi) + _weighted(gj, grid, xi)
        wa = lt * xi ** (s + 1)
        wb = lt * ws
        F1, _ = F_eval("F1s", n0, s, C0)
        F2, _ = F_eval("F2s", n0, s, C0)
        bound = (F1 * (_weighted(gk, grid, wa) + _weighted(gj, grid, wa))
                 + n1 * F2 * (_weighted(gk, grid, wb) + _weighted(gj, grid, wb)))
    ratio = measured / bound if bound > 0 else 0.0
    return BoundReport(k, j, s, measured, bound, ratio, C0)


def kernel_integral_ratio(l: int, xi: float, d: float, tilde_value: float,
                          C0: float) -> float:
    """``int_0^inf |b_l(y)| |exp(2 i xi y) - 1| dy / (C0^l tilde_lambda(xi))``.

    The integrand is ``2 |b_l(y)| |sin(xi y)|``; the half-line is cut at
    the zeros of the sine so each piece is smooth.
    """
    terms = _b_terms(l, d)

    def absb(y):
        w = 1.0 / (y * y + d * d)
        return abs(y * sum(coef * w ** (m + 1) for m, coef in terms))

    def f(y):
        return 2.0 * absb(y) * abs(np.sin(xi * y))

    period = np.pi / xi
    # beyond Y the sine is replaced by its mean 2/pi; |b_l| is monotone
    # there, so the error is below |b_l(Y)| * period
    n_pieces = int(np.ceil(max(20.0 * period, 50.0 * d, 20.0) / period))
    Y = n_pieces * period
    total = 0.0
    for i in range(n_pieces):
        val, _ = integrate.quad(f, i * period, (i + 1) * period, limit=200,
                                epsabs=1e-15, epsrel=1e-12)
        total += val
    tail, _ = integrate.quad(absb, Y, np.inf, limit=200, epsabs=1e-15,
                             epsrel=1e-10)
    total += 4.0 / np.pi * tail
    return total / (C0 ** l * tilde_value)
