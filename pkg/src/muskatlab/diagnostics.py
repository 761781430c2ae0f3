"""Norms, functionals and decay fits.

All Fourier-side norms are Riemann sums over the grid wavenumbers with
weight ``dxi = pi / L``:

    ||g||_s = sum_m |xi_m|^s |g_hat(xi_m)| dxi,

where ``0^0 = 1`` so the mean mode counts only for ``s = 0``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import FluidConfig, InterfaceState, SpectrumField, forward_transform
from .errors import InsufficientSamples, NonpositiveNorm

__all__ = [
    "wiener_norm", "weighted_norm", "h_transform", "h_inverse", "energy",
    "mass", "l2_norm", "DiagnosticsSnapshot", "snapshot", "DecayFit",
    "decay_fit", "fit_power_law", "split_inequality_gap", "snapshot_columns",
    "snapshot_row",
]


def _xi_power(xi, s):
    axi = np.abs(xi)
    if s == 0:
        return np.ones_like(axi)
    return axi ** s


def wiener_norm(field: SpectrumField, k: int, s: float) -> float:
    """``||g_k||_s`` for row ``k`` (0-based) of ``field``."""
    if s < 0:
        raise ValueError("s must be >= 0")
    c = np.atleast_2d(field.coeffs)[k]
    return float(np.sum(_xi_power(field.grid.xi, s) * np.abs(c))
                 * field.grid.dxi)


def weighted_norm(field: SpectrumField, k: int, w) -> float:
    """``sum_m w(xi_m) |g_hat_k(xi_m)| dxi``; ``w`` is a table over the
    grid modes (FFT order) or a callable of ``xi``."""
    xi = field.grid.xi
    wt = w(xi) if callable(w) else np.asarray(w, dtype=float)
    if wt.shape != xi.shape:
        raise ValueError("weight table must cover every grid mode")
    c = np.atleast_2d(field.coeffs)[k]
    return float(np.sum(wt * np.abs(c)) * field.grid.dxi)


def h_transform(field: SpectrumField, table) -> SpectrumField:
    """Diagonal coordinates ``h_hat = P^{-1} g_hat`` mode by mode."""
    c = np.atleast_2d(field.coeffs)
    return SpectrumField(field.grid, np.einsum("mij,jm->im", table.Pinv, c))


def h_inverse(field: SpectrumField, table) -> SpectrumField:
    c = np.atleast_2d(field.coeffs)
    return SpectrumField(field.grid, np.einsum("mij,jm->im", table.P, c))


def l2_norm(state: InterfaceState, k: int) -> float:
    return float(np.sqrt(state.grid.dx * np.sum(state.g[k] ** 2)))


def mass(state: InterfaceState, k: int) -> float:
    """``int g_k dx`` by the trapezoid rule (0-based ``k``)."""
    return float(state.grid.dx * np.sum(state.g[k]))


def energy(state: InterfaceState, cfg: FluidConfig) -> float:
    """Finite part of ``sum_j (rho_{j-1} - rho_j) ||f_j||^2`` per period.

    With ``f_j = d_j + g_j`` this is
    ``sum_j jump_j (||g_j||^2 + 2 d_j int g_j)``; the constant ``d_j^2``
    term is dropped.
    """
    dx = state.grid.dx
    total = 0.0
    for j in range(cfg.n):
        g = state.g[j]
        total += cfg.jumps[j] * (dx * np.sum(g * g) + 2 * cfg.d[j] * dx * np.sum(g))
    return float(total)


@dataclass
class DiagnosticsSnapshot:
    t: float
    wiener: dict           # s -> array (n,)
    l2: np.ndarray
    mass: np.ndarray
    E0: dict = field(default_factory=dict)   # s -> sum_i ||h_i||_s
    E1: dict = field(default_factory=dict)   # s -> sum_i ||h_i||_{lt |xi|^s}
    energy: float = 0.0
    equiv_ratio: float = float("nan")
    gap_margin: float = float("inf")

    def total(self, s) -> float:
        return float(np.sum(self.wiener[s]))

    def is_finite(self) -> bool:
        vals = [self.energy, *self.l2, *self.mass]
        for d in (self.wiener, self.E0, self.E1):
            for v in d.values():
                vals.extend(np.atleast_1d(v))
        return bool(np.all(np.isfinite(vals)))


def snapshot(state: InterfaceState, cfg: FluidConfig, s_list=(0.0, 1.0),
             table=None, tilde=None) -> DiagnosticsSnapshot:
    """Evaluate every diagnostic at ``state``.

    ``table`` (a :class:`~muskatlab.spectrum.ModeTable`) enables the
    diagonal-coordinate functionals; ``tilde`` adds ``E1``.
    """
    spec = state.spectrum()
    n = cfg.n
    wiener = {s: np.array([wiener_norm(spec, k, s) for k in range(n)])
              for s in s_list}
    snap = DiagnosticsSnapshot(
        t=float(state.t), wiener=wiener,
        l2=np.array([l2_norm(state, k) for k in range(n)]),
        mass=np.array([mass(state, k) for k in range(n)]),
        energy=energy(state, cfg), gap_margin=state.gap_margin(cfg))
    if table is not None:
        h = h_transform(spec, table)
        for s in s_list:
            snap.E0[s] = sum(wiener_norm(h, i, s) for i in range(n))
            if tilde is not None:
                w = tilde(spec.grid.xi) * _xi_power(spec.grid.xi, s)
                snap.E1[s] = sum(weighted_norm(h, i, w) for i in range(n))
        s0 = s_list[0]
        gsum = snap.total(s0)
        snap.equiv_ratio = snap.E0[s0] / gsum if gsum > 0 else float("nan")
    return snap


def split_inequality_gap(h: SpectrumField, i: int, s: float, r: float,
                         tilde) -> float:
    """Right side minus left side of

        ||h_i||_s <= sum_{|xi|<r} |xi|^s |h_i| dxi
                     + (2/alpha) r^-2 sum_{|xi|>=r} lt(xi) |xi|^(s+1) |h_i| dxi.

    Nonnegative whenever ``lt(r) >= alpha r / 2``.
    """
    xi = h.grid.xi
    axi = np.abs(xi)
    c = np.abs(np.atleast_2d(h.coeffs)[i])
    lhs = np.sum(_xi_power(xi, s) * c) * h.grid.dxi
    low = axi < r
    rhs = (np.sum(_xi_power(xi, s)[low] * c[low])
           + 2.0 / (tilde.alpha * r * r)
           * np.sum(tilde(xi)[~low] * axi[~low] ** (s + 1) * c[~low]))
    return float(rhs * h.grid.dxi - lhs)


# ---------------------------------------------------------------------------
# decay fits

@dataclass(frozen=True)
class DecayFit:
    s: float
    t0: float
    t1: float
    beta_hat: float
    residual: float
    half_width: float
    samples: int

    @property
    def target(self) -> float:
        return self.s / 2 + 0.25


def fit_power_law(times, norms, s=0.0, window=None, min_samples=10) -> DecayFit:
    """Least-squares fit of ``log norm = a - beta log(1 + t)``.

    ``half_width`` is the 95% confidence half-width of ``beta``;
    ``residual`` is the RMS misfit in log space.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    if window is None:
        # last decade of samples
        t1 = t.max()
        window = (t1 / 10.0, t1)
    t0, t1 = window
    sel = (t >= t0) & (t <= t1)
    if sel.sum() < min_samples:
        raise InsufficientSamples(
            f"{sel.sum()} samples in window [{t0}, {t1}], need {min_samples}")
    if np.any(y[sel] <= 0):
        raise NonpositiveNorm("norms must be positive inside the fit window")
    X = np.log1p(t[sel])
    Y = np.log(y[sel])
    res = stats.linregress(X, Y)
    resid = Y - (res.intercept + res.slope * X)
    dof = sel.sum() - 2
    half = stats.t.ppf(0.975, dof) * res.stderr
    return DecayFit(s=float(s), t0=float(t0), t1=float(t1),
                    beta_hat=float(-res.slope),
                    residual=float(np.sqrt(np.mean(resid ** 2))),
                    half_width=float(half), samples=int(sel.sum()))


def decay_fit(record, s: float, window=None) -> DecayFit:
    """Fit ``sum_k ||g_k||_s`` from a trajectory record."""
    times = [snap.t for snap in record.snapshots]
    norms = [snap.total(s) for snap in record.snapshots]
    return fit_power_law(times, norms, s=s, window=window)


# ---------------------------------------------------------------------------
# CSV layout

def _fmt_s(s):
    return f"{float(s):g}"


def snapshot_columns(n: int, s_list, with_h=False, with_tilde=False):
    cols = ["t"]
    for s in s_list:
        cols += [f"wiener_s{_fmt_s(s)}_k{k + 1}" for k in range(n)]
    cols += [f"l2_k{k + 1}" for k in range(n)]
    cols += [f"mass_k{k + 1}" for k in range(n)]
    if with_h:
        cols += [f"E0_s{_fmt_s(s)}" for s in s_list]
        if with_tilde:
            cols += [f"E1_s{_fmt_s(s)}" for s in s_list]
        cols.append("equiv_ratio")
    cols += ["energy", "gap_margin"]
    return cols


def snapshot_row(snap: DiagnosticsSnapshot, s_list):
    row = [snap.t]
    for s in s_list:
        row += list(snap.wiener[s])
    row += list(snap.l2) + list(snap.mass)
    if snap.E0:
        row += [snap.E0[s] for s in s_list]
        if snap.E1:
            row += [snap.E1[s] for s in s_list]
        row.append(snap.equiv_ratio)
    row += [snap.energy, snap.gap_margin]
    return row
