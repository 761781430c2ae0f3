"""Linearised multiplier family ``-|xi| A(xi)`` and its spectral data.

``A(xi) = A0(xi) Q`` with ``A0_kj = exp(-|d_k - d_j| |xi|)`` and
``Q = diag(jumps / 2)``.  ``A`` is similar to the symmetric matrix
``S = Q^{1/2} A0 Q^{1/2}``, which is diagonalised with ``eigh``; all
eigen-data of ``A`` is recovered from that orthogonal decomposition.
"""
from dataclasses import dataclass

import numpy as np

from .core import FluidConfig, SpectralGrid
from .errors import EigFailure, NonpositiveFloor, NonpositiveSlope

__all__ = [
    "LinearMatrix", "ModeDecomposition", "ModeTable", "TildeLambda",
    "build_matrices", "det_A0_closed", "det_A0_direct", "eigendecompose",
    "decompose_modes", "track_branches", "low_freq_slopes",
    "high_freq_limits", "build_tilde_lambda", "multiplier_T",
    "multiplier_matrix", "semigroup_apply",
]


@dataclass(frozen=True)
class LinearMatrix:
    xi: float
    A: np.ndarray
    A0: np.ndarray
    Q: np.ndarray


def _a0(xi, d):
    xi = np.asarray(xi, dtype=float)
    sep = np.abs(d[:, None] - d[None, :])
    return np.exp(-sep * np.abs(xi)[..., None, None])


def build_matrices(xi: float, cfg: FluidConfig) -> LinearMatrix:
    A0 = _a0(xi, cfg.d)
    Q = np.diag(cfg.jumps / 2.0)
    return LinearMatrix(float(xi), A0 @ Q, A0, Q)


def det_A0_closed(xi, cfg: FluidConfig):
    """Product formula ``prod_j (1 - exp(-2 (d_{j+1} - d_j) |xi|))``."""
    xi = np.abs(np.asarray(xi, dtype=float))
    factors = -np.expm1(-2.0 * cfg.gaps * xi[..., None])
    return np.prod(factors, axis=-1)


def det_A0_direct(xi, cfg: FluidConfig, dps=None):
    """Determinant of the assembled ``A0`` by elimination.

    With ``dps=None`` this is LAPACK's LU in double precision.  Near
    ``xi = 0`` the matrix is close to rank one and the double-precision
    result loses roughly ``log10(1/xi)`` digits; pass ``dps`` (decimal
    digits) to assemble and factor in mpmath instead.
    """
    if dps is None:
        return np.linalg.det(_a0(xi, cfg.d))
    import mpmath

    with mpmath.workdps(dps):
        d = [mpmath.mpf(v) for v in cfg.depths]
        x = abs(mpmath.mpf(float(xi)))
        M = mpmath.matrix(len(d), len(d))
        for i in range(len(d)):
            for j in range(len(d)):
                M[i, j] = mpmath.exp(-abs(d[i] - d[j]) * x)
        return float(mpmath.det(M))


@dataclass(frozen=True)
class ModeDecomposition:
    xi: float
    lambdas: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    cond: float
    P0: np.ndarray = None


def _sym_eig(xi, cfg):
    """Batched eigh of ``S = Q^{1/2} A0 Q^{1/2}`` over an array of xi."""
    sq = np.sqrt(cfg.jumps / 2.0)
    # outer product first so that S is exactly symmetric
    S = (sq[:, None] * sq[None, :]) * _a0(xi, cfg.d)
    try:
        lam, P0 = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise EigFailure(f"symmetric eigensolver failed: {exc}") from exc
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(P0))):
        raise EigFailure("symmetric eigensolver returned non-finite output")
    return lam, P0, sq


def eigendecompose(xi: float, cfg: FluidConfig) -> ModeDecomposition:
    """Eigen-data of ``A(xi)``: ascending ``lambdas`` and ``P`` with
    ``P^{-1} A P = diag(lambdas)``, ``P = Q^{-1/2} P0``."""
    lam, P0, sq = _sym_eig(float(xi), cfg)
    P = P0 / sq[:, None]
    Pinv = P0.T * sq[None, :]
    cond = float(sq.max() / sq.min())
    return ModeDecomposition(float(xi), lam, P, Pinv, cond, P0)


@dataclass
class ModeTable:
    """Eigen-data for every wavenumber of a grid (FFT order).

    Arrays have leading axis of length ``N``: ``lambdas (N, n)``,
    ``P, Pinv (N, n, n)``.
    """
    xi: np.ndarray
    lambdas: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    cond: np.ndarray

    def __len__(self):
        return len(self.xi)

    def __getitem__(self, m) -> ModeDecomposition:
        return ModeDecomposition(float(self.xi[m]), self.lambdas[m],
                                 self.P[m], self.Pinv[m], float(self.cond[m]))

    @property
    def max_cond(self) -> float:
        return float(self.cond.max())


def decompose_modes(cfg: FluidConfig, xi) -> ModeTable:
    """Vectorised ``eigendecompose`` over an array of wavenumbers (for a
    :class:`SpectralGrid`, pass ``grid.xi``)."""
    if isinstance(xi, SpectralGrid):
        xi = xi.xi
    xi = np.asarray(xi, dtype=float)
    lam, P0, sq = _sym_eig(xi, cfg)
    P = P0 / sq[None, :, None]
    Pinv = np.swapaxes(P0, -1, -2) * sq[None, None, :]
    # P0 orthogonal, so cond_2(P) = cond_2(Q^{-1/2})
    cond = np.full(xi.shape, sq.max() / sq.min())
    return ModeTable(xi, lam, P, Pinv, cond)


def track_branches(xis, lambdas):
    """Continue eigenvalue branches along an increasing ``xis`` grid.

    Each column of the returned array follows one branch: at every step the
    sorted eigenvalues are assigned to branches by nearest-neighbour
    matching against a linear prediction from the previous two points.
    Ties keep sorted order.
    """
    from scipy.optimize import linear_sum_assignment

    lam = np.asarray(lambdas, dtype=float)
    out = np.empty_like(lam)
    out[0] = lam[0]
    for i in range(1, len(lam)):
        pred = out[i - 1] if i < 2 else 2 * out[i - 1] - out[i - 2]
        cost = np.abs(pred[:, None] - lam[i][None, :])
        # tiny bias toward identity keeps sorted order on exact ties
        cost += 1e-15 * np.abs(np.arange(lam.shape[1])[:, None]
                               - np.arange(lam.shape[1])[None, :])
        rows, cols = linear_sum_assignment(cost)
        out[i, rows] = lam[i, cols]
    return out


def low_freq_slopes(cfg: FluidConfig, probe_xis=None):
    """Limits ``c_k = lim_{xi -> 0+} lambda_k(xi) / xi`` for ``k < n``.

    Richardson extrapolation on a geometric probe sequence (ratio ``r``):
    ``lambda_k(xi)/xi = c_k + a xi + b xi^2 + ...``.  The error estimate is
    the change between the two highest extrapolation levels.

    Returns
    -------
    slopes : ndarray, shape (n-1,)
    errors : ndarray, shape (n-1,)
    alpha : float or None
        ``slopes[0]`` (``None`` when ``n == 1``).
    """
    if cfg.n == 1:
        return np.zeros(0), np.zeros(0), None
    if probe_xis is None:
        probe_xis = 10.0 ** -np.arange(1.0, 6.0)
    xs = np.asarray(probe_xis, dtype=float)
    ratio = xs[0] / xs[1]
    if not (np.all(np.diff(xs) < 0) and np.allclose(xs[:-1] / xs[1:], ratio)):
        raise ValueError("probe_xis must be a decreasing geometric sequence")
    lam, _, _ = _sym_eig(xs, cfg)
    table = [lam[:, : cfg.n - 1] / xs[:, None]]
    # Neville-style Richardson table: eliminate xi^1, xi^2, ...
    for p in range(1, len(xs)):
        prev = table[-1]
        f = ratio ** p
        table.append((f * prev[1:] - prev[:-1]) / (f - 1.0))
    best = table[-1][-1]
    # truncation part plus the rounding floor of lambda(xi)/xi at the
    # smallest probe, amplified by the extrapolation weights
    amp = np.prod([(ratio ** p + 1) / (ratio ** p - 1)
                   for p in range(1, len(xs))])
    rounding = cfg.n * np.finfo(float).eps * lam.max() / xs[-1] * amp
    err = np.abs(table[-1][-1] - table[-2][-1]) + rounding
    bad = best - err <= 0
    if np.any(bad):
        k = int(np.argmax(bad)) + 1
        raise NonpositiveSlope(
            f"slope estimate for lambda_{k} is not positive: "
            f"{best[k - 1]:.3e} +/- {err[k - 1]:.1e}")
    return best, err, float(best[0])


def high_freq_limits(cfg: FluidConfig, xi_large: float):
    """Sorted eigenvalues at ``xi_large`` against the sorted half-jumps.

    Returns ``(eigenvalues, limits, bound)`` where ``bound`` is
    ``n * exp(-xi_large * min_gap)``.
    """
    lam, _, _ = _sym_eig(float(xi_large), cfg)
    limits = np.sort(cfg.jumps / 2.0)
    if cfg.n == 1:
        return lam, limits, 0.0
    return lam, limits, cfg.n * np.exp(-xi_large * cfg.min_gap)


@dataclass
class TildeLambda:
    """Even, non-decreasing minorant of the bottom eigenvalue branch."""
    xi: np.ndarray
    values: np.ndarray
    alpha: float
    threshold: float

    def __call__(self, xi):
        axi = np.abs(np.asarray(xi, dtype=float))
        return np.interp(axi, np.abs(self.xi_sorted), self.values_sorted)

    @property
    def xi_sorted(self):
        order = np.argsort(np.abs(self.xi), kind="stable")
        return np.abs(self.xi)[order]

    @property
    def values_sorted(self):
        order = np.argsort(np.abs(self.xi), kind="stable")
        return self.values[order]


def build_tilde_lambda(cfg: FluidConfig, grid: SpectralGrid,
                       modes: ModeTable = None) -> TildeLambda:
    """Running minimum from above of ``lambda_1`` over the nonnegative grid
    wavenumbers, extended evenly.

    The threshold is the largest grid wavenumber ``eps`` such that
    ``tilde(xi) >= (alpha/2) xi`` for every grid ``0 < xi <= eps``.
    """
    if modes is None:
        modes = decompose_modes(cfg, grid.xi)
    xi = modes.xi
    axi = np.abs(xi)
    pos = np.unique(axi[axi > 0])
    lam1 = decompose_modes(cfg, pos).lambdas[:, 0]
    if lam1.min() <= 0:
        raise NonpositiveFloor(
            f"lambda_1 reaches {lam1.min():.3e} <= 0 on the positive grid")
    # min over eta >= xi: reverse cumulative minimum
    floor = np.minimum.accumulate(lam1[::-1])[::-1]
    if cfg.n == 1:
        alpha = float(cfg.jumps[0] / 2.0)
        ok = np.ones_like(pos, dtype=bool)
    else:
        _, _, alpha = low_freq_slopes(cfg)
        ok = floor >= 0.5 * alpha * pos
    bad = np.flatnonzero(~ok)
    threshold = float(pos[bad[0] - 1]) if len(bad) else float(pos[-1])
    if len(bad) and bad[0] == 0:
        threshold = 0.0
    values = np.interp(axi, np.concatenate([[0.0], pos]),
                       np.concatenate([[0.0], floor]))
    return TildeLambda(xi.copy(), values, alpha, threshold)


def multiplier_T(xi, k: int, j: int, cfg: FluidConfig):
    """Fourier symbol of ``T_{k,j}`` (1-based interface indices):
    ``-(jump_j / 2) |xi| exp(-|d_k - d_j| |xi|)``."""
    axi = np.abs(np.asarray(xi, dtype=float))
    jump = cfg.jumps[j - 1]
    sep = abs(cfg.d[k - 1] - cfg.d[j - 1])
    return -0.5 * jump * axi * np.exp(-sep * axi)


def multiplier_matrix(xi, cfg: FluidConfig):
    """``-|xi| A(xi)`` for an array of wavenumbers, shape ``(..., n, n)``."""
    xi = np.asarray(xi, dtype=float)
    A = _a0(xi, cfg.d) * (cfg.jumps / 2.0)[None, :]
    return -np.abs(xi)[..., None, None] * A


def semigroup_apply(decomp, dt: float, v):
    """Exact linear solution map ``P exp(-|xi| D dt) P^{-1} v``.

    ``decomp`` may be a single :class:`ModeDecomposition` (``v`` of shape
    ``(n,)``) or a :class:`ModeTable` (``v`` of shape ``(n, N)``).
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return np.array(v, copy=True)
    if isinstance(decomp, ModeTable):
        v = np.asarray(v)
        h = np.einsum("mij,jm->im", decomp.Pinv, v)
        h = h * np.exp(-np.abs(decomp.xi)[None, :] * decomp.lambdas.T * dt)
        return np.einsum("mij,jm->im", decomp.P, h)
    decay = np.exp(-abs(decomp.xi) * decomp.lambdas * dt)
    return decomp.P @ (decay * (decomp.Pinv @ np.asarray(v)))
