import math

import numpy as np
import pytest

from stepfrac.constitutive import BeamConfig, BreakageMode, CohesiveLaw, LoadKind, LoadModel
from stepfrac.discretization import BondState, build_grid
from stepfrac.dynamics import (
    Integrator,
    init_state,
    run,
    stable_dt,
    step,
    time_step_control,
)
from stepfrac.errors import ConfigError, DivergenceError

CFG = BeamConfig()
RAMP = LoadModel()


class TestTimeStep:
    def test_flexural_limit(self):
        g = build_grid(CFG, 1000)
        soft = CohesiveLaw(k=1e-6, beta=1e-6)
        assert stable_dt(g, CFG, soft) == pytest.approx(g.h**2 / 2 * math.sqrt(CFG.rhoA / CFG.EJ), rel=1e-9)
        assert stable_dt(g, CFG, soft) == pytest.approx(2.8868e-3, rel=1e-4)

    def test_spring_frequency_negligible(self):
        g = build_grid(CFG, 1000)
        omega_s = math.sqrt(18000.0 / CFG.rhoA)
        omega_b = 4.0 / g.h**2 * math.sqrt(CFG.EJ / CFG.rhoA)
        assert omega_s == pytest.approx(6.0)
        assert omega_b == pytest.approx(692.82, rel=1e-4)
        assert stable_dt(g, CFG, CohesiveLaw()) == pytest.approx(2 / math.hypot(omega_b, omega_s))

    def test_quadratic_in_h(self):
        soft = CohesiveLaw(k=1e-6, beta=1e-6)
        a = stable_dt(build_grid(CFG, 500), CFG, soft)
        b = stable_dt(build_grid(CFG, 1000), CFG, soft)
        assert a / b == pytest.approx(4.0, rel=1e-9)

    def test_dt_divides_t_end(self):
        g = build_grid(CFG, 1000)
        ctl = time_step_control(g, CFG, CohesiveLaw(), 50.0, 0.5)
        assert ctl.dt <= 0.5 * stable_dt(g, CFG, CohesiveLaw())
        assert ctl.n_steps * ctl.dt == pytest.approx(50.0, rel=1e-14)

    @pytest.mark.parametrize("safety", [0.0, 1.5])
    def test_bad_safety(self, safety):
        with pytest.raises(ConfigError):
            time_step_control(build_grid(CFG, 100), CFG, CohesiveLaw(), 1.0, safety)


class TestInit:
    def test_quiescent_ramp_start(self):
        g = build_grid(CFG, 1000)
        s = init_state(g, CFG, CohesiveLaw(), RAMP, 1e-3)
        assert np.all(s.v == 0) and np.all(s.v_prev == 0)
        assert np.count_nonzero(s.bonds == BondState.ABSENT) == 80
        assert np.all(s.bonds[:80] == BondState.ABSENT) and np.all(s.bonds[80:] == BondState.INTACT)

    def test_taylor_start_uniform(self):
        g = build_grid(CFG, 100)
        dt = 1e-3
        s = init_state(g, CFG, CohesiveLaw(), LoadModel(kind=LoadKind.CONSTANT_UNIFORM, q0=0.5), dt)
        np.testing.assert_allclose(s.v_prev - s.v, 0.5 * dt * dt * 0.5 / CFG.rhoA, rtol=1e-12)


class TestStep:
    g = build_grid(CFG, 100)
    law = CohesiveLaw()

    def test_equilibrium_fixed_point(self):
        load = LoadModel(kind=LoadKind.CONSTANT_UNIFORM, q0=0.0)
        s0 = init_state(self.g, CFG, self.law, load, 1e-3)
        s1 = step(s0, self.g, CFG, self.law, load, 1e-3)
        assert np.all(s1.v == 0) and np.all(s1.v_prev == 0)
        assert s1.t == pytest.approx(1e-3) and s1.step_index == 1
        assert s0.t == 0.0 and s0.step_index == 0

    def test_time_reversible(self):
        cfg = BeamConfig(L0=9.99)  # no foundation below the single end node
        g = build_grid(cfg, 100)
        law = CohesiveLaw(k=1e-9, beta=1e-9, v_max=math.inf)
        load = LoadModel(kind=LoadKind.CONSTANT_UNIFORM, q0=0.0)
        dt = 0.5 * stable_dt(g, cfg, law)
        integ = Integrator(g, cfg, law, load, dt)
        s = integ.initial_state()
        s.v[50] = s.v_prev[50] = 1e-3
        v0 = s.v.copy()
        for _ in range(1000):
            integ.advance(s)
        s.v, s.v_prev = s.v_prev, s.v
        for _ in range(1000):
            integ.advance(s)
        np.testing.assert_allclose(s.v_prev, v0, rtol=0, atol=1e-15)

    def test_break_records_fracture_energy(self):
        integ = Integrator(self.g, CFG, self.law, LoadModel(kind=LoadKind.CONSTANT_UNIFORM, q0=0.0), 1e-3)
        s = integ.initial_state()
        i = 50
        s.v[i] = 0.0099
        s.v_prev[i] = 0.0099 - 0.5 * self.law.v_max  # strong upward velocity
        integ.advance(s)
        assert s.v[i] >= self.law.v_max
        assert s.bonds[i] == BondState.BROKEN
        assert s.E_frac == pytest.approx(0.5 * self.law.k * s.v[i] ** 2 * self.g.h)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_detected(self):
        integ = Integrator(self.g, CFG, self.law, RAMP, 1.0)
        s = integ.initial_state()
        s.v[50] = 1.0
        with pytest.raises(DivergenceError):
            for _ in range(2000):
                integ.advance(s)


class TestRun:
    def test_zero_load(self):
        r = run(CFG, CohesiveLaw(), LoadModel(kind=LoadKind.CONSTANT_UNIFORM, q0=0.0), N=100, t_end=1.0)
        assert np.all(r.state.v == 0)
        for col in ("W_ext", "E_kin", "E_bend", "E_found", "E_frac"):
            assert np.all(getattr(r.series, col) == 0)

    def test_unbreakable(self):
        r = run(CFG, CohesiveLaw(v_max=math.inf), RAMP, N=200, t_end=15.0)
        assert np.all(r.series.apex == 0.8)
        assert np.all(r.state.bonds[r.grid.supported] == BondState.INTACT)

    def test_crack_grows_monotonically(self):
        r = run(CFG, CohesiveLaw(), RAMP, N=200, t_end=20.0)
        a = r.series.apex
        assert a[0] == 0.8
        assert np.all(np.diff(a) >= 0)
        assert a[-1] > 0.8
        assert np.all(np.diff(r.series.E_frac) >= 0)

    def test_broken_is_absorbing(self):
        g = build_grid(CFG, 200)
        ctl = time_step_control(g, CFG, CohesiveLaw(), 20.0)
        integ = Integrator(g, CFG, CohesiveLaw(), RAMP, ctl.dt)
        s = integ.initial_state()
        ever = np.zeros(201, dtype=bool)
        for _ in range(ctl.n_steps):
            integ.advance(s)
            assert not np.any(ever & (s.bonds != BondState.BROKEN))
            ever |= s.bonds == BondState.BROKEN
        assert ever.any()

    def test_literal_bonds_can_heal(self):
        law = CohesiveLaw(v_max=0.01, mode=BreakageMode.LITERAL)
        r = run(CFG, law, RAMP, N=200, t_end=20.0)
        assert r.state.E_frac == 0.0

    def test_rows_and_snapshots(self):
        r = run(CFG, CohesiveLaw(), RAMP, N=100, t_end=2.0, output_every=7, snapshot_times=(0.0, 1.0, 2.0))
        assert len(r.series) == r.control.n_steps // 7 + 1
        assert np.all(np.diff(r.series.t) > 0)
        assert [s.step_index for s in r.snapshots] == [0, round(1.0 / r.control.dt), r.control.n_steps]

    def test_t_stop_is_prefix(self):
        full = run(CFG, CohesiveLaw(), RAMP, N=100, t_end=4.0)
        part = run(CFG, CohesiveLaw(), RAMP, N=100, t_end=4.0, t_stop=2.0)
        n = len(part.series)
        np.testing.assert_array_equal(part.series.apex, full.series.apex[:n])
        np.testing.assert_array_equal(part.series.W_ext, full.series.W_ext[:n])

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_carries_partial(self, monkeypatch):
        import stepfrac.dynamics as dyn

        real = dyn.stable_dt
        monkeypatch.setattr(dyn, "stable_dt", lambda g, c, l: 3.0 * real(g, c, l))
        with pytest.raises(DivergenceError) as exc:
            run(CFG, CohesiveLaw(), RAMP, N=100, t_end=400.0)
        assert exc.value.partial.error is exc.value
        assert len(exc.value.partial.series) >= 1

    def test_bad_snapshot_time(self):
        with pytest.raises(ConfigError):
            run(CFG, CohesiveLaw(), RAMP, N=100, t_end=1.0, snapshot_times=(2.0,))
