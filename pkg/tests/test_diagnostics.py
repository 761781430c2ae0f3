import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_
from types import SimpleNamespace

from muskatlab.core import (FluidConfig, InterfaceState, SpectralGrid,
                            SpectrumField, forward_transform)
from muskatlab.diagnostics import (DiagnosticsSnapshot, decay_fit, energy,
                                   fit_power_law, h_inverse, h_transform,
                                   l2_norm, mass, snapshot, snapshot_columns,
                                   snapshot_row, split_inequality_gap,
                                   weighted_norm, wiener_norm)
from muskatlab.errors import InsufficientSamples, NonpositiveNorm
from muskatlab.spectrum import build_tilde_lambda, decompose_modes


def _gaussian_hat(xi):
    return np.sqrt(np.pi) * np.exp(-xi ** 2 / 4)


def test_gaussian_wiener_norms():
    grid = SpectralGrid(20.0, 2048)
    f = forward_transform(np.exp(-grid.x ** 2), grid)
    assert wiener_norm(f, 0, 0.0) == pytest.approx(2 * np.pi, abs=1e-6)
    # the Riemann sum itself, from the closed-form transform
    for s in (0.0, 1.0, 2.0):
        ref = np.sum(np.abs(grid.xi) ** s * _gaussian_hat(grid.xi)) * grid.dxi \
            if s > 0 else np.sum(_gaussian_hat(grid.xi)) * grid.dxi
        assert wiener_norm(f, 0, s) == pytest.approx(ref, abs=1e-9)


def test_gaussian_s1_kink_error():
    # |xi| has a kink at 0, so the Riemann sum for s = 1 carries the
    # Euler-Maclaurin term sqrt(pi) dxi^2 / 6, independent of N
    for L, N in ((20.0, 2048), (80.0, 2048)):
        grid = SpectralGrid(L, N)
        f = forward_transform(np.exp(-grid.x ** 2), grid)
        err = 4 * np.sqrt(np.pi) - wiener_norm(f, 0, 1.0)
        assert err == pytest.approx(np.sqrt(np.pi) * grid.dxi ** 2 / 6,
                                    rel=1e-3)
    grid = SpectralGrid(2500.0, 2 ** 15)
    f = forward_transform(np.exp(-grid.x ** 2), grid)
    assert wiener_norm(f, 0, 1.0) == pytest.approx(4 * np.sqrt(np.pi), abs=1e-6)


def test_norm_homogeneity_and_sign(grid):
    rng = np.random.default_rng(1)
    g = rng.standard_normal(grid.N)
    f = forward_transform(g, grid)
    for s in (0.0, 0.5, 1.0, 2.0):
        base = wiener_norm(f, 0, s)
        assert base > 0
        scaled = wiener_norm(forward_transform(-3.0 * g, grid), 0, s)
        assert scaled == pytest.approx(3.0 * base, rel=1e-13)
    with pytest.raises(ValueError):
        wiener_norm(f, 0, -1.0)


def test_mean_mode_counts_only_at_s0(grid):
    f = forward_transform(np.ones(grid.N), grid)
    assert wiener_norm(f, 0, 0.0) > 0
    assert wiener_norm(f, 0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_weighted_norm_matches_wiener(grid):
    g = np.exp(-grid.x ** 2)
    f = forward_transform(g, grid)
    assert weighted_norm(f, 0, np.abs) == pytest.approx(wiener_norm(f, 0, 1.0))
    with pytest.raises(ValueError):
        weighted_norm(f, 0, np.ones(3))


def test_h_round_trip(ref_cfg, grid):
    rng = np.random.default_rng(2)
    g = rng.standard_normal((2, grid.N))
    f = forward_transform(g, grid)
    table = decompose_modes(ref_cfg, grid.xi)
    back = h_inverse(h_transform(f, table), table)
    assert np.abs(back.coeffs - f.coeffs).max() <= 1e-12 * np.abs(f.coeffs).max()


def test_single_layer_h(grid):
    # P = Q^{-1/2} for one interface, so h = sqrt(q) g up to sign
    cfg = FluidConfig((1.0, 0.0), (0.0,))
    f = forward_transform(np.exp(-grid.x ** 2)[None, :], grid)
    h = h_transform(f, decompose_modes(cfg, grid.xi))
    q = (1.0 - 0.0) / 2
    assert np.abs(np.abs(h.coeffs) - np.sqrt(q) * np.abs(f.coeffs)).max() <= 1e-15


def test_equivalence_sandwich(ref_cfg, grid):
    rng = np.random.default_rng(3)
    g = rng.standard_normal((2, grid.N))
    f = forward_transform(g, grid)
    table = decompose_modes(ref_cfg, grid.xi)
    h = h_transform(f, table)
    up = np.abs(table.Pinv).sum(axis=1).max()   # max column sum
    down = np.abs(table.P).sum(axis=1).max()
    for s in (0.0, 1.0):
        gs = sum(wiener_norm(f, k, s) for k in range(2))
        hs = sum(wiener_norm(h, k, s) for k in range(2))
        assert hs <= up * gs * (1 + 1e-12)
        assert gs <= down * hs * (1 + 1e-12)


def test_energy_and_mass(ref_cfg, grid):
    flat = InterfaceState(grid, 0.0, np.zeros((2, grid.N)))
    assert energy(flat, ref_cfg) == 0.0
    g = np.vstack([np.sin(np.pi * grid.x / grid.L),
                   0.5 * np.cos(3 * np.pi * grid.x / grid.L)]) * 0.1
    st = InterfaceState(grid, 0.0, g)
    e1 = energy(st, ref_cfg)
    assert e1 > 0
    assert energy(InterfaceState(grid, 0.0, 2 * g), ref_cfg) == \
        pytest.approx(4 * e1, rel=1e-13)
    assert mass(st, 0) == pytest.approx(0.0, abs=1e-14)
    bump = InterfaceState(grid, 0.0, np.vstack([np.exp(-grid.x ** 2)] * 2))
    assert mass(bump, 1) == pytest.approx(np.sqrt(np.pi), rel=1e-12)
    assert l2_norm(bump, 0) == pytest.approx((np.pi / 2) ** 0.25, rel=1e-12)


def test_snapshot_fields(ref_cfg, grid):
    st = InterfaceState(grid, 2.5, 1e-2 * np.vstack([np.exp(-grid.x ** 2)] * 2))
    table = decompose_modes(ref_cfg, grid.xi)
    tl = build_tilde_lambda(ref_cfg, grid, table)
    snap = snapshot(st, ref_cfg, (0.0, 1.0), table, tl)
    assert snap.t == 2.5 and snap.is_finite()
    assert set(snap.E0) == set(snap.E1) == {0.0, 1.0}
    assert snap.gap_margin == pytest.approx(1.0 - 0.0, abs=1e-12)
    cols = snapshot_columns(2, (0.0, 1.0), with_h=True, with_tilde=True)
    assert len(cols) == len(snapshot_row(snap, (0.0, 1.0)))
    bad = DiagnosticsSnapshot(0.0, {0.0: np.array([np.nan])}, np.zeros(1),
                              np.zeros(1))
    assert not bad.is_finite()


def test_E1_bounded_by_shifted_E0(ref_cfg, grid):
    rng = np.random.default_rng(5)
    st = InterfaceState(grid, 0.0, 1e-2 * rng.standard_normal((2, grid.N)))
    table = decompose_modes(ref_cfg, grid.xi)
    tl = build_tilde_lambda(ref_cfg, grid, table)
    axi = np.abs(grid.xi)
    top = (tl(grid.xi)[axi > 0] / axi[axi > 0]).max()
    snap = snapshot(st, ref_cfg, (0.0, 1.0, 2.0), table, tl)
    for s in (0.0, 1.0):
        assert snap.E1[s] <= top * snap.E0[s + 1] * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st_.integers(0, 2 ** 32 - 1), s=st_.floats(0.0, 2.0),
       frac=st_.floats(0.05, 1.0))
def test_split_inequality(seed, s, frac):
    cfg = FluidConfig((2.0, 1.0, 0.0), (0.0, 1.0))
    grid = SpectralGrid(20.0, 128)
    tl = build_tilde_lambda(cfg, grid)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((2, grid.N)) + 1j * rng.standard_normal((2, grid.N))
    h = SpectrumField(grid, c)
    pos = np.unique(np.abs(grid.xi[grid.xi > 0]))
    allowed = pos[pos <= tl.threshold]
    r = allowed[int(frac * (len(allowed) - 1))]
    for i in range(2):
        assert split_inequality_gap(h, i, s, r, tl) >= -1e-12


def test_fit_recovers_power_law():
    t = np.geomspace(1.0, 1e4, 41)
    y = 3.0 * (1 + t) ** -0.3
    fit = fit_power_law(t, y, s=0.0, window=(10.0, 1e4))
    assert fit.beta_hat == pytest.approx(0.3, abs=1e-12)
    assert fit.half_width < 1e-7 and fit.residual < 1e-12
    assert fit.samples == 31 and fit.target == 0.25
    assert fit_power_law(t, y).t1 == 1e4


def test_fit_noise_gives_honest_interval():
    rng = np.random.default_rng(0)
    t = np.geomspace(1.0, 1e4, 200)
    y = (1 + t) ** -0.5 * np.exp(0.05 * rng.standard_normal(t.size))
    fit = fit_power_law(t, y, s=0.5, window=(1.0, 1e4))
    assert abs(fit.beta_hat - 0.5) <= 3 * fit.half_width
    assert fit.target == 0.5


def test_fit_errors():
    t = np.geomspace(1.0, 100.0, 30)
    with pytest.raises(InsufficientSamples):
        fit_power_law(t, np.ones_like(t), window=(50.0, 60.0))
    y = np.ones_like(t)
    y[-1] = 0.0
    with pytest.raises(NonpositiveNorm):
        fit_power_law(t, y, window=(1.0, 100.0))


def test_decay_fit_from_record():
    snaps = [DiagnosticsSnapshot(t, {1.0: np.array([(1 + t) ** -0.75, 0.0])},
                                 np.zeros(2), np.zeros(2))
             for t in np.geomspace(1.0, 1e3, 31)]
    fit = decay_fit(SimpleNamespace(snapshots=snaps), 1.0, (1.0, 1e3))
    assert fit.beta_hat == pytest.approx(0.75, abs=1e-12)
    assert fit.target == 0.75
