"""Time integration of ``d g_hat / dt = -|xi| A(xi) g_hat + N_hat``.

The linear part is diagonalised mode by mode (``h_hat = P^{-1} g_hat``)
and integrated exactly; the nonlinearity enters through the two-stage
exponential time-differencing scheme (Cox and Matthews)

    a       = e^{z} h + dt phi_1(z) N_n
    h_{n+1} = a + dt phi_2(z) (N(a) - N_n),        z = -|xi| lambda dt,

which is second order and reduces to the exact semigroup when ``N = 0``.
The correction term doubles as the local error estimate.
"""
import io
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FluidConfig, InterfaceState, SpectralGrid
from .diagnostics import snapshot, wiener_norm, l2_norm
from .errors import CheckpointError, InterfaceOverlap, NonfiniteState
from .nonlinear import SeriesDepth, nonlinear_rhs
from .quadrature import QuadParams
from .spectrum import ModeTable, decompose_modes

__all__ = [
    "StepperConfig", "TrajectoryRecord", "Stepper", "sample_schedule",
    "run", "write_checkpoint", "read_checkpoint", "CHECKPOINT_MAGIC",
    "phi1", "phi2", "dealias_mask", "step", "smallness",
]

CHECKPOINT_MAGIC = b"MUSKATLAYERS\x00v1\x00"


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping knobs.

    nonlinear_mode : ``'quadrature'`` or ``'series'`` (order ``series_L``).
    dealias : 2/3-rule filter on the nonlinear inputs and output.
    tol : the step is ``tol * max|g_hat| / max|N_hat|`` clamped to
        ``[dt_min, dt_max]``.
    t_first, per_decade : geometric sample times ``t_first * 10^(i/per_decade)``
        (plus ``t = 0`` and ``T_final``).
    """
    dt_max: float = 1.0
    tol: float = 1e-3
    dt_min: float = 1e-6
    nonlinear_mode: str = "quadrature"
    series_L: int = 8
    dealias: bool = True
    linear_only: bool = False
    t_first: float = 1.0
    per_decade: int = 10
    quad: QuadParams = QuadParams()

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")
        if self.nonlinear_mode not in ("quadrature", "series"):
            raise ValueError("nonlinear_mode must be 'quadrature' or 'series'")
        if self.t_first <= 0 or self.per_decade < 1:
            raise ValueError("invalid sample schedule")


@dataclass
class TrajectoryRecord:
    snapshots: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    steps: int = 0
    err_accum: float = 0.0
    final: InterfaceState = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def sample_schedule(T_final: float, t_first: float, per_decade: int,
                    t_start: float = 0.0) -> np.ndarray:
    """``0``, then ``t_first * 10^(i / per_decade)`` up to ``T_final``."""
    times = [0.0]
    i = 0
    while True:
        t = t_first * 10.0 ** (i / per_decade)
        if t >= T_final * (1 - 1e-12):
            break
        times.append(t)
        i += 1
    times.append(float(T_final))
    times = np.array(times)
    return times[times > t_start] if t_start > 0 else times


def dealias_mask(N: int) -> np.ndarray:
    m = np.abs(np.fft.fftfreq(N, 1.0 / N))
    return m <= N // 3


def phi1(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2, np.expm1(zs) / zs)


def phi2(z):
    """``(e^z - 1 - z) / z^2`` with a Taylor branch near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 0.2
    zs = np.where(small, 1.0, z)
    direct = (np.expm1(zs) - zs) / (zs * zs)
    # sum_{k>=0} z^k / (k+2)!
    taylor = np.zeros_like(z)
    term = np.full_like(z, 0.5)
    for k in range(14):
        taylor = taylor + term
        term = term * z / (k + 3)
    return np.where(small, taylor, direct)


class Stepper:
    """Cached linear data for one (config, grid) pair."""

    def __init__(self, cfg: FluidConfig, grid: SpectralGrid, sc: StepperConfig,
                 table: ModeTable = None):
        self.cfg, self.grid, self.sc = cfg, grid, sc
        self.table = table if table is not None else decompose_modes(cfg, grid.xi)
        # per-mode rates |xi| lambda, shape (n, N)
        self.rates = (np.abs(self.table.xi)[:, None] * self.table.lambdas).T
        self.mask = dealias_mask(grid.N) if sc.dealias else None
        self.depth = SeriesDepth(L=sc.series_L)

    # spectral <-> diagonal coordinates (plain FFT normalisation)
    def to_h(self, G):
        return np.einsum("mij,jm->im", self.table.Pinv, G)

    def from_h(self, H):
        return np.einsum("mij,jm->im", self.table.P, H)

    def nonlinear_hat(self, G, t):
        """``N_hat`` for spectral state ``G`` (``(n, N)``, numpy FFT scale)."""
        if self.sc.linear_only:
            return np.zeros_like(G)
        if self.mask is not None:
            G = G * self.mask
        g = np.real(np.fft.ifft(G, axis=-1))
        if not np.all(np.isfinite(g)):
            raise NonfiniteState("non-finite state", last_valid_time=t)
        state = InterfaceState(self.grid, t, g)
        Nx = nonlinear_rhs(state, self.cfg, self.sc.nonlinear_mode,
                           self.sc.quad, self.depth)
        Nh = np.fft.fft(Nx, axis=-1)
        if self.mask is not None:
            Nh = Nh * self.mask
        return Nh

    def step_hat(self, G, t, dt, N0=None):
        """One ETD2 step on spectral data; returns ``(G_new, err_hat)``."""
        z = -self.rates * dt
        H = self.to_h(G)
        ez = np.exp(z)
        if self.sc.linear_only:
            return self.from_h(ez * H), np.zeros_like(G)
        if N0 is None:
            N0 = self.nonlinear_hat(G, t)
        Nh0 = self.to_h(N0)
        Ha = ez * H + dt * phi1(z) * Nh0
        Na = self.to_h(self.nonlinear_hat(self.from_h(Ha), t + dt))
        corr = dt * phi2(z) * (Na - Nh0)
        return self.from_h(Ha + corr), self.from_h(corr)

    def choose_dt(self, G, N0):
        sc = self.sc
        if sc.linear_only:
            return sc.dt_max
        nmax = np.abs(N0).max()
        if nmax == 0:
            return sc.dt_max
        dt = sc.tol * np.abs(G).max() / nmax
        return float(min(max(dt, sc.dt_min), sc.dt_max))


def step(state: InterfaceState, cfg: FluidConfig, stepper: Stepper,
         dt: float) -> InterfaceState:
    """Advance ``state`` by ``dt`` with one ETD2 step."""
    if dt > stepper.sc.dt_max * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds dt_max={stepper.sc.dt_max}")
    if not state.is_finite():
        raise NonfiniteState("non-finite input state", last_valid_time=state.t)
    G = np.fft.fft(state.g, axis=-1)
    Gn, _ = stepper.step_hat(G, state.t, dt)
    g = np.real(np.fft.ifft(Gn, axis=-1))
    if not np.all(np.isfinite(g)):
        raise NonfiniteState("step produced non-finite values",
                             last_valid_time=state.t)
    return InterfaceState(state.grid, state.t + dt, g)


def smallness(state: InterfaceState) -> float:
    """``sum_j ||g_j||_{L2} + ||g_j||_0 + ||g_j||_1``."""
    spec = state.spectrum()
    return float(sum(l2_norm(state, j) + wiener_norm(spec, j, 0)
                     + wiener_norm(spec, j, 1) for j in range(state.n)))


def run(initial: InterfaceState, cfg: FluidConfig, sc: StepperConfig,
        T_final: float, hooks=(), s_list=(0.0, 1.0), gamma=None,
        stepper: Stepper = None, tilde=None, checkpoint=None,
        record: TrajectoryRecord = None) -> TrajectoryRecord:
    """Integrate to ``T_final``, sampling on the geometric schedule.

    ``hooks`` are called as ``hook(state, snapshot)`` at every sample.
    ``checkpoint(state, record)`` is called at every sample after the
    first.  Passing a ``record`` continues it (resume).

    The state is rebuilt from its physical samples at every sample time so
    that a run resumed from a checkpoint follows the same arithmetic.
    """
    if not initial.is_finite():
        raise NonfiniteState("non-finite initial state",
                             last_valid_time=initial.t)
    if stepper is None:
        stepper = Stepper(cfg, initial.grid, sc)
    if record is None:
        record = TrajectoryRecord(metadata={
            "densities": cfg.densities, "depths": cfg.depths,
            "L": initial.grid.L, "N": initial.grid.N,
            "stepper": sc, "T_final": T_final,
        })
        size = smallness(initial)
        record.metadata["smallness"] = size
        if gamma is not None:
            record.metadata["gamma"] = gamma
            record.metadata["small_enough"] = bool(size <= gamma)
    times = sample_schedule(T_final, sc.t_first, sc.per_decade, initial.t)
    state = initial.copy()

    def sample(st):
        snap = snapshot(st, cfg, s_list, stepper.table, tilde)
        if not snap.is_finite():
            raise NonfiniteState(f"non-finite diagnostics at t={st.t}",
                                 last_valid_time=st.t)
        record.snapshots.append(snap)
        for hook in hooks:
            hook(st, snap)

    if len(times) and times[0] == 0.0 and state.t == 0.0:
        sample(state)
        times = times[1:]

    G = np.fft.fft(state.g, axis=-1)
    t = state.t
    for t_next in times:
        while t < t_next:
            try:
                N0 = None if sc.linear_only else stepper.nonlinear_hat(G, t)
            except InterfaceOverlap as exc:
                record.events.append(("ORDERING_LOST", t, str(exc)))
                record.final = InterfaceState(
                    state.grid, t, np.real(np.fft.ifft(G, axis=-1)))
                return record
            dt = sc.dt_max if sc.linear_only else stepper.choose_dt(G, N0)
            if t + dt >= t_next * (1 - 1e-13):
                dt = t_next - t
            try:
                Gn, err = stepper.step_hat(G, t, dt, N0)
            except InterfaceOverlap as exc:
                record.events.append(("ORDERING_LOST", t, str(exc)))
                record.final = InterfaceState(
                    state.grid, t, np.real(np.fft.ifft(G, axis=-1)))
                return record
            if not np.all(np.isfinite(Gn)):
                raise NonfiniteState(f"non-finite state after step at t={t}",
                                     last_valid_time=t)
            scale = np.abs(Gn).max()
            if scale > 0:
                record.err_accum += float(np.abs(err).max() / scale)
            G = Gn
            t = t_next if abs(t + dt - t_next) <= 1e-13 * max(1.0, t_next) \
                else t + dt
            record.steps += 1
        g = np.real(np.fft.ifft(G, axis=-1))
        state = InterfaceState(state.grid, float(t_next), g)
        if state.n > 1 and state.gap_margin(cfg) <= 0:
            record.events.append(("ORDERING_LOST", t_next,
                                  f"gap margin {state.gap_margin(cfg):.3e}"))
        sample(state)
        if checkpoint is not None:
            checkpoint(state, record)
        G = np.fft.fft(g, axis=-1)
        t = float(t_next)
    record.final = state
    return record


# ---------------------------------------------------------------------------
# checkpoints

def write_checkpoint(path, state: InterfaceState, cfg: FluidConfig,
                     err_accum: float = 0.0, steps: int = 0) -> None:
    """Little-endian layout::

        16 bytes  magic  b"MUSKATLAYERS\\x00v1\\x00"
        uint32    n
        uint32    N
        float64   L
        float64   t
        float64   densities[n + 1]
        float64   depths[n]
        float64   g[n * N]          (row-major, interface by interface)
        float64   err_accum
        uint64    steps
    """
    buf = io.BytesIO()
    n, N = state.n, state.grid.N
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<IIdd", n, N, state.grid.L, state.t))
    buf.write(np.asarray(cfg.densities, dtype="<f8").tobytes())
    buf.write(np.asarray(cfg.depths, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(state.g, dtype="<f8").tobytes())
    buf.write(struct.pack("<dQ", err_accum, steps))
    Path(path).write_bytes(buf.getvalue())


def read_checkpoint(path):
    """Inverse of :func:`write_checkpoint`.

    Returns
    -------
    state, cfg, err_accum, steps
    """
    data = Path(path).read_bytes()
    if len(data) < 40 or data[:16] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    n, N, L, t = struct.unpack_from("<IIdd", data, 16)
    expect = 16 + 24 + 8 * (2 * n + 1) + 8 * n * N + 16
    if len(data) != expect:
        raise CheckpointError(
            f"{path}: size {len(data)} does not match header (expected {expect})")
    off = 40
    rho = np.frombuffer(data, "<f8", n + 1, off)
    off += 8 * (n + 1)
    d = np.frombuffer(data, "<f8", n, off)
    off += 8 * n
    g = np.frombuffer(data, "<f8", n * N, off).reshape(n, N).astype(float)
    off += 8 * n * N
    err_accum, steps = struct.unpack_from("<dQ", data, off)
    cfg = FluidConfig(tuple(rho), tuple(d))
    state = InterfaceState(SpectralGrid(L, N), t, g)
    return state, cfg, err_accum, steps
