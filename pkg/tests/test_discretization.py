import math

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh
from scipy.sparse import diags

from stepfrac.constitutive import BeamConfig, CohesiveLaw
from stepfrac.discretization import (
    BondState,
    apply_bending_operator,
    bending_operator_bands,
    build_grid,
    energy_components,
    solve_static,
)
from stepfrac.errors import ConfigError, SolverError

CFG = BeamConfig()


def dense_operator(grid):
    n = grid.N + 1
    return np.column_stack([apply_bending_operator(grid, e) for e in np.eye(n)])


class TestGrid:
    def test_spacing(self):
        g = build_grid(CFG, 1000)
        assert g.h == pytest.approx(0.01)
        assert g.x[500] == 5.0
        assert g.x[0] == 0.0 and g.x[-1] == 10.0

    def test_notch_index(self):
        g = build_grid(CFG, 1000)
        assert g.i_notch == 80
        assert g.x[80] >= 0.8 > g.x[79]

    @pytest.mark.parametrize("N", [8, 15])
    def test_too_coarse(self, N):
        with pytest.raises(ConfigError) as exc:
            build_grid(CFG, N)
        assert exc.value.key == "N"

    def test_off_node_notch(self):
        g = build_grid(BeamConfig(L0=0.805), 1000)
        assert g.i_notch == 81
        assert g.x[g.i_notch] >= 0.805 > g.x[g.i_notch - 1]

    @pytest.mark.parametrize("L0", [0.0, 0.8, 0.805, 0.8049, 3.333])
    def test_foundation_weights_cover_support(self, L0):
        g = build_grid(BeamConfig(L0=L0), 1000)
        assert g.foundation_weights.sum() == pytest.approx(10.0 - L0, rel=1e-13)
        assert np.all(g.foundation_weights[: g.i_notch] == 0)

    def test_notch_node_weight(self):
        g = build_grid(CFG, 1000)
        assert g.foundation_weights[80] == pytest.approx(0.005)
        assert g.foundation_weights[81] == pytest.approx(0.01)


class TestBendingOperator:
    g = build_grid(CFG, 200)

    def test_constant(self):
        assert np.max(np.abs(apply_bending_operator(self.g, np.full(201, 3.7)))) * self.g.h**4 <= 1e-12 * 3.7

    def test_linear(self):
        v = 0.3 - 1.7 * self.g.x
        scaled = np.max(np.abs(apply_bending_operator(self.g, v))) * self.g.h**4 / np.max(np.abs(v))
        assert scaled <= 1e-12

    def test_quartic_interior(self):
        g = build_grid(BeamConfig(L=1.0, L0=0.1), 64)
        d4 = apply_bending_operator(g, g.x**4)
        np.testing.assert_allclose(d4[2:-2], 24.0, rtol=0, atol=1e-8)

    def test_sine_second_order(self):
        errs = []
        for N in (100, 200):
            g = build_grid(CFG, N)
            d4 = apply_bending_operator(g, np.sin(g.x))
            errs.append(np.max(np.abs(d4[2:-2] - np.sin(g.x[2:-2]))))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)

    def test_boundary_rows(self):
        A = dense_operator(self.g) * self.g.h**4
        np.testing.assert_allclose(A[0, :3], [2, -4, 2])
        np.testing.assert_allclose(A[1, :4], [-2, 5, -4, 1])
        np.testing.assert_allclose(A[-1, -3:], [2, -4, 2])
        np.testing.assert_allclose(A[-2, -4:], [1, -4, 5, -2])

    def test_bands_match_dense(self):
        A = dense_operator(self.g)
        ab = bending_operator_bands(self.g)
        n = self.g.N + 1
        B = np.zeros((n, n))
        for i in range(n):
            for j in range(max(0, i - 2), min(n, i + 3)):
                B[i, j] = ab[2 + i - j, j]
        np.testing.assert_allclose(B, A, rtol=0, atol=1e-9 * np.abs(A).max())

    def test_weighted_symmetry(self):
        W = np.diag(self.g.weights)
        WA = W @ dense_operator(self.g)
        assert np.max(np.abs(WA - WA.T)) <= 1e-10 * np.abs(WA).max()

    def test_energy_identity(self):
        # sum w v D4 v equals the sum of squared interior second differences times h
        rng = np.random.default_rng(4)
        v = rng.standard_normal(201)
        lhs = np.dot(self.g.weights, v * apply_bending_operator(self.g, v))
        kappa = (v[:-2] - 2 * v[1:-1] + v[2:]) / self.g.h**2
        assert lhs == pytest.approx(self.g.h * np.sum(kappa**2), rel=1e-10)

    def test_stability_bound_exceeds_spectrum(self):
        g = build_grid(CFG, 1000)
        ab = bending_operator_bands(g)
        # symmetrise with the weights so the spectrum is real: S = W^1/2 A W^-1/2
        A = diags([ab[4, :-2], ab[3, :-1], ab[2], ab[1, 1:], ab[0, 2:]], [-2, -1, 0, 1, 2]).tocsr()
        s = np.sqrt(g.weights)
        S = diags(s) @ A @ diags(1 / s)
        lam = eigsh(S, k=1, which="LA", return_eigenvectors=False)[0]
        omega_max = math.sqrt(CFG.EJ / CFG.rhoA * lam)
        omega_b = 4.0 / g.h**2 * math.sqrt(CFG.EJ / CFG.rhoA)
        assert omega_max <= omega_b
        assert omega_max == pytest.approx(omega_b, rel=0.01)


class TestEnergies:
    g = build_grid(CFG, 1000)
    law = CohesiveLaw(k=18.0)

    def test_zero(self):
        e = energy_components(self.g, CFG, self.law, np.zeros(1001), np.zeros(1001))
        assert (e.E_kin, e.E_bend, e.E_found) == (0.0, 0.0, 0.0)

    def test_uniform_opening(self):
        e = energy_components(self.g, CFG, self.law, np.full(1001, 0.01), np.zeros(1001))
        assert e.E_found == pytest.approx(8.28e-3, abs=2 * self.g.h * 0.5 * 18 * 1e-4)
        assert e.E_bend == 0.0

    def test_unit_velocity(self):
        e = energy_components(self.g, CFG, self.law, np.zeros(1001), np.ones(1001))
        assert e.E_kin == pytest.approx(2500.0)

    def test_broken_bonds_store_nothing(self):
        bonds = np.where(self.g.supported, BondState.BROKEN, BondState.ABSENT)
        e = energy_components(self.g, CFG, self.law, np.full(1001, 0.005), np.zeros(1001), bonds)
        assert e.E_found == 0.0


class TestStatic:
    def test_uniform_load_fully_supported(self):
        cfg = BeamConfig(L0=0.0)
        g = build_grid(cfg, 500)
        v = solve_static(g, cfg, CohesiveLaw(k=18.0), np.full(501, 0.18))
        np.testing.assert_allclose(v, 0.01, rtol=0, atol=1e-9)

    def test_zero_load(self):
        g = build_grid(CFG, 300)
        np.testing.assert_array_equal(solve_static(g, CFG, CohesiveLaw(), np.zeros(301)), 0.0)

    def test_linearity(self):
        g = build_grid(CFG, 300)
        q = 1.0 / (4.0 * (g.x + 0.9))
        v1 = solve_static(g, CFG, CohesiveLaw(), q)
        v2 = solve_static(g, CFG, CohesiveLaw(), 2 * q)
        np.testing.assert_allclose(v2, 2 * v1, rtol=1e-12)

    def test_residual(self):
        g = build_grid(CFG, 300)
        law = CohesiveLaw()
        q = 1.0 / (4.0 * (g.x + 0.9))
        v = solve_static(g, CFG, law, q)
        r = CFG.EJ * apply_bending_operator(g, v) + law.k * g.foundation_scale * v - q
        assert np.max(np.abs(r)) <= 1e-9 * np.max(np.abs(q))

    def test_singular(self):
        cfg = BeamConfig(L=1.0, L0=0.99)
        g = build_grid(cfg, 20)
        with pytest.raises(SolverError):
            solve_static(g, cfg, CohesiveLaw(), np.ones(21))

    def test_shape_check(self):
        g = build_grid(CFG, 100)
        with pytest.raises(ValueError):
            solve_static(g, CFG, CohesiveLaw(), np.ones(5))
