"""Fluid configuration, periodic grid, interface state and transforms.

The physical line is replaced by the torus ``[-L, L)`` sampled at ``N``
equispaced points.  Transforms use the unnormalised forward convention

    f_hat(xi) = int f(x) exp(-i x xi) dx,

discretised as ``dx * DFT`` with the phase of the left endpoint folded in,
so that multiplier formulas written for the line apply verbatim on the
grid wavenumbers ``xi_m = pi m / L``.
"""
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (BandOutOfGrid, BetaOutOfRange, NonfiniteInput,
                     OrderingViolation)

__all__ = [
    "FluidConfig", "SpectralGrid", "InterfaceState", "SpectrumField",
    "validate_config", "forward_transform", "inverse_transform",
    "spectral_derivative", "initial_profile", "PROFILE_KINDS",
]


@dataclass(frozen=True)
class FluidConfig:
    """Layer densities ``rho_0..rho_n`` (top to bottom in the index, i.e.
    ``rho_0`` is the lowest layer) and flat interface heights ``d_1..d_n``.
    """
    densities: tuple
    depths: tuple

    def __post_init__(self):
        object.__setattr__(self, "densities",
                           tuple(float(r) for r in self.densities))
        object.__setattr__(self, "depths", tuple(float(d) for d in self.depths))
        if len(self.densities) != len(self.depths) + 1:
            raise ValueError(
                f"need n+1 densities for n depths, got {len(self.densities)} "
                f"densities and {len(self.depths)} depths")
        if len(self.depths) < 1:
            raise ValueError("at least one interface is required")

    @property
    def n(self) -> int:
        return len(self.depths)

    @property
    def rho(self) -> np.ndarray:
        return np.asarray(self.densities)

    @property
    def d(self) -> np.ndarray:
        return np.asarray(self.depths)

    @property
    def jumps(self) -> np.ndarray:
        """Density jumps ``rho_{k-1} - rho_k`` across interface k."""
        return -np.diff(self.rho)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.d)

    @property
    def min_gap(self) -> float:
        return float(self.gaps.min()) if self.n > 1 else np.inf


def validate_config(cfg: FluidConfig):
    """Check the stable-stratification and interface-ordering rules.

    Returns
    -------
    cfg, jumps, gaps
        ``cfg`` unchanged, the density jumps and the interface gaps.

    Raises
    ------
    OrderingViolation
        naming the first index pair that breaks either strict ordering.
    """
    rho, d = cfg.rho, cfg.d
    for k in range(len(rho) - 1):
        if not rho[k] > rho[k + 1]:
            raise OrderingViolation(
                f"densities must be strictly decreasing: rho[{k}]={rho[k]} "
                f"<= rho[{k + 1}]={rho[k + 1]} (unstable stratification)",
                kind="densities", pair=(k, k + 1))
    for k in range(len(d) - 1):
        if not d[k] < d[k + 1]:
            raise OrderingViolation(
                f"depths must be strictly increasing: d[{k + 1}]={d[k]} "
                f">= d[{k + 2}]={d[k + 1]}",
                kind="depths", pair=(k + 1, k + 2))
    return cfg, cfg.jumps, cfg.gaps


@dataclass(frozen=True)
class SpectralGrid:
    half_width: float
    num_points: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if self.num_points < 8 or self.num_points % 2:
            raise ValueError("num_points must be even and >= 8")

    @property
    def L(self) -> float:
        return float(self.half_width)

    @property
    def N(self) -> int:
        return int(self.num_points)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return np.pi / self.L

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @property
    def xi(self) -> np.ndarray:
        """Wavenumbers in FFT order (``m = 0, 1, ..., N/2-1, -N/2, ..., -1``)."""
        return self.dxi * np.fft.fftfreq(self.N, 1.0 / self.N)

    @property
    def xi_max(self) -> float:
        return self.dxi * (self.N // 2)

    def _phase(self) -> np.ndarray:
        # exp(i L xi_m) = (-1)^m accounts for the grid starting at -L
        m = np.fft.fftfreq(self.N, 1.0 / self.N).astype(int)
        return np.where(m % 2 == 0, 1.0, -1.0)


@dataclass
class SpectrumField:
    grid: SpectralGrid
    coeffs: np.ndarray

    def is_hermitian(self, atol=1e-12) -> bool:
        c = np.atleast_2d(self.coeffs)
        mirror = np.roll(c[:, ::-1], 1, axis=1)
        # the Nyquist column is its own mirror and must be real
        return bool(np.allclose(c, np.conj(mirror), atol=atol,
                                rtol=0.0))


def forward_transform(samples, grid: SpectralGrid) -> SpectrumField:
    g = np.asarray(samples, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonfiniteInput("samples contain non-finite values")
    coeffs = grid.dx * grid._phase() * np.fft.fft(g, axis=-1)
    return SpectrumField(grid, coeffs)


def inverse_transform(field: SpectrumField) -> np.ndarray:
    grid = field.grid
    c = np.asarray(field.coeffs)
    if not np.all(np.isfinite(c)):
        raise NonfiniteInput("coefficients contain non-finite values")
    return np.real(np.fft.ifft(c * grid._phase(), axis=-1)) / grid.dx


def spectral_derivative(samples, grid: SpectralGrid, order=1) -> np.ndarray:
    """Band-limited derivative; the Nyquist mode is dropped for odd orders."""
    xi = grid.xi.copy()
    if order % 2:
        xi[grid.N // 2] = 0.0
    g_hat = np.fft.fft(np.asarray(samples, dtype=float), axis=-1)
    return np.real(np.fft.ifft((1j * xi) ** order * g_hat, axis=-1))


@dataclass
class InterfaceState:
    grid: SpectralGrid
    t: float
    g: np.ndarray

    def __post_init__(self):
        self.g = np.atleast_2d(np.asarray(self.g, dtype=float))
        if self.g.shape[1] != self.grid.N:
            raise ValueError(
                f"g has {self.g.shape[1]} samples, grid has {self.grid.N}")

    @property
    def n(self) -> int:
        return self.g.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.g)))

    def interfaces(self, cfg: FluidConfig) -> np.ndarray:
        """Absolute interface heights ``f_k = d_k + g_k``."""
        return cfg.d[:, None] + self.g

    def gap_margin(self, cfg: FluidConfig) -> float:
        """Smallest vertical separation between consecutive interfaces
        (``inf`` for a single interface)."""
        if self.n < 2:
            return np.inf
        return float(np.diff(self.interfaces(cfg), axis=0).min())

    def is_ordered(self, cfg: FluidConfig) -> bool:
        return self.is_finite() and self.gap_margin(cfg) > 0

    def spectrum(self) -> SpectrumField:
        return forward_transform(self.g, self.grid)

    def copy(self) -> "InterfaceState":
        return InterfaceState(self.grid, self.t, self.g.copy())


PROFILE_KINDS = ("gaussian_bumps", "spectral_powerlaw", "random_small",
                 "single_mode")


def _weights(params, n):
    w = params.get("weights")
    if w is None:
        # alternating signs put weight on the slow (sheet-like) modes
        return np.array([(-1.0) ** k for k in range(n)])
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"weights must have length {n}")
    return w


def initial_profile(kind: str, params: dict, grid: SpectralGrid,
                    cfg: FluidConfig) -> InterfaceState:
    """Build a ``t = 0`` state.

    Parameters
    ----------
    kind : {'gaussian_bumps', 'spectral_powerlaw', 'random_small', 'single_mode'}
    params : dict
        ``eps`` (amplitude, required) plus kind-specific entries:

        - gaussian_bumps: ``width`` (1.0), ``centers`` (all 0), ``weights``
        - spectral_powerlaw: ``beta`` (< 1/2), ``band`` ``(xi_a, xi_b)``,
          ``weights``
        - random_small: ``seed`` (0), ``kmax`` (highest wavenumber, 1.0);
          the field is scaled so that ``max |g| = eps``
        - single_mode: ``k`` (1-based interface), ``m`` (mode index, 1)
    """
    n = cfg.n
    eps = float(params.get("eps", 0.0))
    if not eps > 0:
        raise ValueError("amplitude eps must be positive")
    x = grid.x
    g = np.zeros((n, grid.N))

    if kind == "gaussian_bumps":
        width = float(params.get("width", 1.0))
        centers = np.broadcast_to(
            np.asarray(params.get("centers", 0.0), dtype=float), (n,))
        w = _weights(params, n)
        for k in range(n):
            g[k] = eps * w[k] * np.exp(-((x - centers[k]) / width) ** 2)

    elif kind == "spectral_powerlaw":
        beta = float(params.get("beta", 0.45))
        if not 0 < beta < 0.5:
            raise BetaOutOfRange(f"beta must lie in (0, 1/2), got {beta}")
        xi_a, xi_b = (float(v) for v in params.get("band", (grid.dxi, 1.0)))
        if xi_a <= 0 or xi_b < xi_a or xi_b > grid.xi_max:
            raise BandOutOfGrid(
                f"band [{xi_a}, {xi_b}] not inside (0, {grid.xi_max}]")
        axi = np.abs(grid.xi)
        # half-grid-spacing slack so that a band edge sitting on a mode keeps it
        tol = 1e-9 * grid.dxi
        inside = (axi >= xi_a - tol) & (axi <= xi_b + tol)
        inside[grid.N // 2] = False
        if not inside.any():
            raise BandOutOfGrid(f"band [{xi_a}, {xi_b}] contains no grid mode")
        shape = np.zeros(grid.N)
        shape[inside] = axi[inside] ** (-beta)
        w = _weights(params, n)
        coeffs = eps * w[:, None] * shape[None, :]
        g = inverse_transform(SpectrumField(grid, coeffs.astype(complex)))

    elif kind == "random_small":
        rng = np.random.default_rng(params.get("seed", 0))
        kmax = float(params.get("kmax", 1.0))
        if kmax > grid.xi_max:
            raise BandOutOfGrid(f"kmax={kmax} exceeds Nyquist {grid.xi_max}")
        axi = np.abs(grid.xi)
        mask = (axi > 0) & (axi <= kmax)
        mask[grid.N // 2] = False
        coeffs = np.zeros((n, grid.N), dtype=complex)
        coeffs[:, mask] = (rng.standard_normal((n, mask.sum()))
                           + 1j * rng.standard_normal((n, mask.sum())))
        g = np.real(np.fft.ifft(coeffs, axis=-1))
        peak = np.abs(g).max()
        if peak > 0:
            g *= eps / peak

    elif kind == "single_mode":
        k = int(params.get("k", 1))
        m = int(params.get("m", 1))
        if not 1 <= k <= n:
            raise ValueError(f"interface index k={k} outside 1..{n}")
        if not 0 <= m < grid.N // 2:
            raise BandOutOfGrid(f"mode index m={m} outside 0..{grid.N // 2 - 1}")
        g[k - 1] = eps * np.cos(m * grid.dxi * x)

    else:
        raise ValueError(f"unknown profile kind {kind!r}; "
                         f"expected one of {PROFILE_KINDS}")

    return InterfaceState(grid, 0.0, g)
