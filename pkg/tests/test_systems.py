import numpy as np
import pytest
from scipy.integrate import solve_ivp

from havok_intermittency.errors import InputError, NonFinite, OverlapError
from havok_intermittency.intermittency import burst_statistics, detect_bursts
from havok_intermittency.systems import (
    Burst,
    LorenzConfig,
    SyntheticBurstConfig,
    generate_bursty,
    integrate_lorenz,
    lobe_switch_times,
    lorenz_measurement,
    synthetic_ecg,
)


def _lorenz_rhs(t, u, s=10.0, r=28.0, b=8.0 / 3.0):
    x, y, z = u
    return [s * (y - x), x * (r - z) - y, x * y - b * z]


def test_lorenz_fixed_point():
    out = integrate_lorenz(LorenzConfig(x0=(0.0, 0.0, 0.0), n_steps=100))
    for k in "xyz":
        assert np.all(out[k] == 0.0)
    assert out["t"].size == 101


def _textbook_rk4(u, h, n):
    def f(v):
        return np.array(_lorenz_rhs(0.0, v))

    for _ in range(n):
        k1 = f(u)
        k2 = f(u + h / 2 * k1)
        k3 = f(u + h / 2 * k2)
        k4 = f(u + h * k3)
        u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


def test_lorenz_one_step_vs_fine_reference():
    u0 = np.array([1.0, 1.0, 1.0])
    coarse = integrate_lorenz(LorenzConfig(x0=tuple(u0), dt=0.01, n_steps=1))
    fine = integrate_lorenz(LorenzConfig(x0=tuple(u0), dt=1e-5, n_steps=1000))
    got = np.array([coarse[k][-1] for k in "xyz"])
    np.testing.assert_allclose(got, _textbook_rk4(u0, 0.01, 1), rtol=0, atol=1e-14)
    # the local error of one classical RK4 step here is ~2e-6, set by the
    # fifth derivative of the flow at (1, 1, 1)
    err = np.max(np.abs(got - [fine[k][-1] for k in "xyz"]))
    assert err <= 5e-6
    # and shrinks as h^5 for a smaller step
    small = integrate_lorenz(LorenzConfig(x0=tuple(u0), dt=0.001, n_steps=1))
    fine = integrate_lorenz(LorenzConfig(x0=tuple(u0), dt=1e-6, n_steps=1000))
    assert np.max(np.abs([small[k][-1] - fine[k][-1] for k in "xyz"])) <= 1e-7


def test_lorenz_matches_independent_solver():
    out = integrate_lorenz(LorenzConfig(x0=(1.0, 1.0, 1.0), dt=0.001, n_steps=1000))
    ref = solve_ivp(_lorenz_rhs, (0, 1.0), [1.0, 1.0, 1.0], method="DOP853", rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose([out["x"][-1], out["y"][-1], out["z"][-1]], ref.y[:, -1], atol=1e-8)


def test_lorenz_step_halving_fourth_order():
    horizon = 0.3
    ref = solve_ivp(_lorenz_rhs, (0, horizon), [1.0, 1.0, 1.0], method="DOP853", rtol=3e-14, atol=1e-14)
    errs = []
    for dt in (0.01, 0.005):
        out = integrate_lorenz(LorenzConfig(x0=(1.0, 1.0, 1.0), dt=dt, n_steps=int(round(horizon / dt))))
        errs.append(np.linalg.norm([out[k][-1] for k in "xyz"] - ref.y[:, -1]))
    assert 14.0 <= errs[0] / errs[1] <= 18.0


def test_lorenz_attractor_bounds():
    out = integrate_lorenz(LorenzConfig(dt=0.001, n_steps=50_000))
    assert np.max(np.abs(out["x"])) < 25 and np.max(out["z"]) < 55


def test_lorenz_blowup_and_config():
    with pytest.raises(NonFinite):
        integrate_lorenz(LorenzConfig(dt=0.5, n_steps=200))
    with pytest.raises(InputError):
        LorenzConfig(dt=0.0)
    with pytest.raises(InputError):
        LorenzConfig(n_steps=0)


def test_lorenz_measurement_burn_in():
    series, states = lorenz_measurement(duration=5.0, dt=0.001, burn_in=1.0)
    full = integrate_lorenz(LorenzConfig(dt=0.001, n_steps=6000))
    assert len(series) == 5000
    assert series.values[0] == full["x"][1000]
    assert series.dt == 0.001


def test_lobe_switch_times_square_wave():
    t = np.arange(0, 10, 0.01)
    x = np.where((t // 2) % 2 == 0, 1.0, -1.0)
    switches = lobe_switch_times(x, 0.01, smooth=0.5)
    np.testing.assert_allclose(switches, [2, 4, 6, 8], atol=0.02)


def test_bursty_round_trip_single():
    cfg = SyntheticBurstConfig(duration=30, dt=0.01, bursts=[Burst(10, 12, 5.0)])
    gen = generate_bursty(cfg)
    b = detect_bursts(gen["series"].values, psi=0.1, dt=0.01)
    assert b.bursts == [(10.0, 12.0)]
    np.testing.assert_allclose(b.Tb, [2.0], rtol=0, atol=1e-12)


def test_bursty_round_trip_statistics_exact():
    bursts = [Burst(1.0, 3.5, 2.0, 2.0), Burst(6.0, 6.5, 2.0, 0.5), Burst(9.25, 12.0, 2.0, 4.0)]
    gen = generate_bursty(SyntheticBurstConfig(duration=15.0, dt=0.25, bursts=bursts))
    b = detect_bursts(gen["series"].values, psi=0.1, dt=0.25)
    assert b.bursts == gen["truth"]
    stats = burst_statistics(b)
    tb = np.array([2.5, 0.5, 2.75])
    tib = np.array([2.5, 2.75])
    assert abs(stats["tb_mean"] - tb.mean()) <= 1e-12
    assert abs(stats["tb_sd"] - tb.std(ddof=1)) <= 1e-12
    assert abs(stats["tib_mean"] - tib.mean()) <= 1e-12
    assert abs(stats["tib_sd"] - tib.std(ddof=1)) <= 1e-12


def test_bursty_noise_only_monte_carlo():
    # the sample holding max(vr^2) is always active, so a bare threshold
    # always reports at least one burst; a 3-sample minimum duration removes
    # isolated noise spikes
    empty = 0
    for seed in range(100):
        gen = generate_bursty(SyntheticBurstConfig(duration=100, dt=0.01, noise_sd=1.0, seed=seed))
        b = detect_bursts(gen["series"].values, psi=0.5, dt=0.01, min_duration=0.03)
        empty += b.n_bursts == 0
    assert empty >= 99


def test_bursty_merge_rule():
    bursts = [Burst(10, 12, 1.0, 0.0), Burst(15, 17, 1.0, 0.0)]
    gen = generate_bursty(SyntheticBurstConfig(duration=30, dt=0.1, bursts=bursts))
    b = detect_bursts(gen["series"].values, psi=0.5, dt=0.1, merge_gap=5.0)
    assert b.n_bursts == 1
    assert b.bursts[0][0] == pytest.approx(10) and b.bursts[0][1] == pytest.approx(17)


def test_bursty_reproducible_and_overlap():
    cfg = SyntheticBurstConfig(duration=20, dt=0.1, noise_sd=0.3, bursts=[Burst(2, 4)], seed=11)
    a = generate_bursty(cfg)["series"].values
    b = generate_bursty(cfg)["series"].values
    assert np.array_equal(a, b)
    with pytest.raises(OverlapError):
        SyntheticBurstConfig(duration=20, bursts=[Burst(2, 5), Burst(4, 6)])
    with pytest.raises(OverlapError):
        SyntheticBurstConfig(duration=20, bursts=[Burst(18, 21)])


def test_synthetic_ecg_reproducible():
    a = synthetic_ecg(duration=20, seed=3)
    b = synthetic_ecg(duration=20, seed=3)
    assert np.array_equal(a[0], b[0])
    np.testing.assert_allclose(np.diff(a[2]), 0.8)
