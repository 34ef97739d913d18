import numpy as np
import pytest

from conftest import make_smooth_cube

from hsrecon import imaging, patches, solver
from hsrecon.errors import UsageError
from hsrecon.imaging import Measurement, SystemModel
from hsrecon.solver import (
    GroupState,
    SolverParams,
    cg_solve_image,
    denoise_group,
    reconstruct,
    shrink_core,
    update_weights,
)
from hsrecon.tensors import TuckerFactors, hosvd, tucker_reconstruct


def _prox_oracle(g_hat: float, w: float, tau: float) -> float:
    """Brute-force scalar minimizer of tau*(g_hat-g)^2 + w*|g|."""
    lo, hi = min(0.0, g_hat) - 0.1, max(0.0, g_hat) + 0.1
    grid = np.arange(lo, hi, 1e-5)
    obj = tau * (g_hat - grid) ** 2 + w * np.abs(grid)
    best = grid[np.argmin(obj)]
    fine = np.arange(best - 2e-5, best + 2e-5, 1e-7)
    obj = tau * (g_hat - fine) ** 2 + w * np.abs(fine)
    return float(fine[np.argmin(obj)])


class TestShrinkCore:
    def test_basic(self):
        assert shrink_core(np.array([[[1.0]]]), np.array([[[0.5]]]), 1.0) == 0.75

    def test_below_threshold(self):
        assert shrink_core(np.array([[[0.1]]]), np.array([[[0.5]]]), 1.0) == 0.0

    def test_negative_sign_preserved(self):
        got = shrink_core(np.array([[[-1.0]]]), np.array([[[0.5]]]), 1.0)
        assert got == -0.75
        assert got == pytest.approx(_prox_oracle(-1.0, 0.5, 1.0), abs=1e-4)

    def test_nonpositive_tau(self):
        with pytest.raises(UsageError):
            shrink_core(np.zeros((1, 1, 1)), np.ones((1, 1, 1)), 0.0)

    def test_prox_oracle_random(self, rng):
        for _ in range(50):
            g_hat = float(rng.uniform(-2, 2))
            w = float(rng.uniform(0.01, 1.0))
            tau = float(rng.uniform(0.2, 3.0))
            got = shrink_core(np.full((1, 1, 1), g_hat), np.full((1, 1, 1), w), tau)
            assert float(got[0, 0, 0]) == pytest.approx(
                _prox_oracle(g_hat, w, tau), abs=1e-4
            )


class TestUpdateWeights:
    def test_zero_coefficient(self):
        w = update_weights(np.zeros((1, 1, 1)), 0.0055, 1e-6)
        assert w[0, 0, 0] == pytest.approx(5500.0, rel=1e-12)

    def test_matching_coefficient(self):
        w = update_weights(np.full((1, 1, 1), 0.0055), 0.0055, 1e-6)
        assert w[0, 0, 0] == pytest.approx(0.0055 / 0.005501, rel=1e-12)

    def test_monotone_decreasing_in_magnitude(self, rng):
        g = rng.standard_normal((4, 5, 3))
        w = update_weights(g, 0.0055, 1e-6)
        order = np.argsort(np.abs(g).ravel())
        assert np.all(np.diff(w.ravel()[order]) <= 0)


class TestDenoiseGroup:
    def _state(self, stacked):
        group = patches.PatchGroup(anchor=(0, 0), members=((0, 0),), stacked=stacked)
        return GroupState(group=group)

    def test_dominant_rank_one_preserved(self, rng):
        a = np.abs(rng.standard_normal(25)) + 1.0
        b = np.abs(rng.standard_normal(8)) + 1.0
        c = np.abs(rng.standard_normal(20)) + 1.0
        stacked = np.einsum("i,j,k->ijk", a, b, c)
        p = SolverParams(k=20)
        approx, _ = denoise_group(stacked, self._state(stacked), p)
        err = np.linalg.norm(approx - stacked) / np.linalg.norm(stacked)
        assert err < 1e-6

    def test_zero_group(self):
        stacked = np.zeros((9, 4, 5))
        approx, _ = denoise_group(stacked, self._state(stacked), SolverParams())
        assert not np.any(approx)

    def test_huge_tau_is_identity(self, rng):
        stacked = rng.random((9, 4, 5))
        p = SolverParams(tau=1e12)
        approx, _ = denoise_group(stacked, self._state(stacked), p)
        err = np.linalg.norm(approx - stacked) / np.linalg.norm(stacked)
        assert err < 1e-9

    def test_state_carries_magnitudes(self, rng):
        stacked = rng.random((9, 4, 5))
        p = SolverParams()
        _, state = denoise_group(stacked, self._state(stacked), p)
        assert state.weights is not None and state.core_mag is not None
        _, state2 = denoise_group(stacked, state, p)
        assert state2.weights.shape == state.weights.shape


class TestCgSolveImage:
    def test_diagonal_system(self, rng):
        # zero mask: Phi^T Phi = 0, solution = rhs / (2 tau)
        sys = SystemModel(np.zeros((5, 5)), np.arange(3), np.ones(3))
        rhs = rng.random((5, 5, 3))
        x = cg_solve_image(rhs, np.ones((5, 5, 3)), sys, tau=1.0, cg_tol=1e-12)
        np.testing.assert_allclose(x, rhs / 2.0, rtol=1e-10)

    def test_matches_dense_oracle(self, rng):
        mask = imaging.generate_mask(6, 6, 0.5, 11)
        sys = SystemModel.default(mask, 3)
        counts = np.ones((6, 6, 3))
        tau = 1.0
        n = 6 * 6 * 3
        dense = np.zeros((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            cube = e.reshape(6, 6, 3)
            dense[:, i] = (
                imaging.apply_normal_operator(cube, sys) + 2.0 * tau * counts * cube
            ).ravel()
        rhs = rng.random((6, 6, 3))
        expect = np.linalg.solve(dense, rhs.ravel()).reshape(6, 6, 3)
        got = cg_solve_image(rhs, counts, sys, tau, cg_tol=1e-12, cg_max_iter=500)
        err = np.linalg.norm(got - expect) / np.linalg.norm(expect)
        assert err <= 1e-6

    def test_huge_tau_limit(self, rng):
        mask = imaging.generate_mask(6, 6, 0.5, 1)
        sys = SystemModel.default(mask, 3)
        target = rng.random((6, 6, 3))
        tau = 1e9
        rhs = 2.0 * tau * target
        got = cg_solve_image(rhs, np.ones((6, 6, 3)), sys, tau, cg_tol=1e-12)
        err = np.linalg.norm(got - target) / np.linalg.norm(target)
        assert err <= 1e-6

    def test_zero_rhs(self):
        sys = SystemModel.default(np.ones((4, 4)), 2)
        assert not np.any(cg_solve_image(np.zeros((4, 4, 2)), np.ones((4, 4, 2)), sys, 1.0))

    def test_residual_monotone(self, rng):
        mask = imaging.generate_mask(8, 8, 0.5, 2)
        sys = SystemModel.default(mask, 4)
        rhs = rng.random((8, 8, 4))
        hist: list[float] = []
        cg_solve_image(
            rhs, np.ones((8, 8, 4)), sys, 1.0, cg_tol=1e-12, cg_max_iter=100,
            residual_history=hist,
        )
        hist_arr = np.array(hist)
        assert np.all(np.diff(hist_arr) <= 1e-10 * hist_arr[:-1] + 1e-16)


class TestReconstruct:
    def test_invertible_single_band(self):
        x = np.linspace(0, 1, 64)
        base = np.outer(np.sin(2 * np.pi * x) * 0.5 + 0.5, np.cos(2 * np.pi * x) * 0.5 + 0.5)
        f = (0.5 + 0.1 * (base - 0.5))[:, :, None]
        sys = SystemModel.default(np.ones((64, 64)), 1)
        y = imaging.forward(f, sys)
        rec = reconstruct(y, sys, SolverParams(k=20, window=10, max_iter=10))
        mse = np.mean((rec - f) ** 2)
        assert 10.0 * np.log10(1.0 / mse) >= 60.0

    def test_zero_measurement(self):
        sys = SystemModel.default(np.ones((16, 16)), 2)
        y = Measurement(np.zeros((17, 16)))
        rec = reconstruct(y, sys, SolverParams(s=4, step=3, k=4, window=3, max_iter=3))
        assert not np.any(rec)

    def test_progress_emitted(self, rng):
        f = rng.random((16, 16, 2))
        sys = SystemModel.default(imaging.generate_mask(16, 16, 0.5, 0), 2)
        y = imaging.forward(f, sys)
        rows = []
        reconstruct(
            y, sys, SolverParams(s=4, step=3, k=4, window=3, max_iter=3),
            progress=lambda it, res, sec: rows.append((it, res, sec)),
        )
        assert [r[0] for r in rows] == [1, 2, 3]
        assert all(r[1] >= 0 and r[2] >= 0 for r in rows)


class TestObjectiveDescent:
    def test_fixed_weights_cycle_non_increasing(self, rng):
        # One (shrink, CG-to-tolerance) cycle with fixed memberships and
        # fixed weights cannot increase the joint objective.
        f_true = make_smooth_cube(20, 20, 3, seed=2)
        mask = imaging.generate_mask(20, 20, 0.5, 3)
        sys = SystemModel.default(mask, 3)
        y = imaging.forward(f_true, sys)
        bp = imaging.adjoint(y, sys)
        f = cg_solve_image(bp, np.ones(f_true.shape), sys, tau=5e-4)
        tau = 1.0
        grid = patches.plan_grid(20, 20, 5, 4)
        members = [
            patches.match_blocks(f, a, 5, 8, 5) for a in grid.anchors
        ]
        w_fixed = 0.05

        def objective(fc, cores_and_factors):
            data = 0.5 * np.sum((imaging.forward(fc, sys).cassi - y.cassi) ** 2)
            group_term = 0.0
            for mem, (core, factors) in zip(members, cores_and_factors):
                stacked = patches.build_group(fc, mem, 5).stacked
                rec = tucker_reconstruct(TuckerFactors(core, factors))
                group_term += tau * np.sum((stacked - rec) ** 2)
                group_term += w_fixed * np.sum(np.abs(core))
            return data + group_term

        # shrink step at the current iterate
        shrunk = []
        approxed = []
        for mem in members:
            g = patches.build_group(f, mem, 5)
            tf = hosvd(g.stacked)
            core = shrink_core(tf.core, np.full(tf.core.shape, w_fixed), tau)
            shrunk.append((core, tf.factors))
            approxed.append((g, tucker_reconstruct(TuckerFactors(core, tf.factors))))
        obj_after_shrink = objective(f, shrunk)

        total, counts = patches.aggregate(approxed, f_true.shape)
        f_new = cg_solve_image(
            bp + 2.0 * tau * total, counts, sys, tau, cg_tol=1e-12, cg_max_iter=2000
        )
        obj_after_cg = objective(f_new, shrunk)
        assert obj_after_cg <= obj_after_shrink * (1.0 + 1e-8)


class TestCoreSparsityDiagnostic:
    def test_top_coefficients_dominate(self):
        cube = make_smooth_cube(48, 48, 8, seed=5)
        members = patches.match_blocks(cube, (20, 20), 5, 45, 20)
        group = patches.build_group(cube, members, 5)
        core = hosvd(group.stacked).core
        mag2 = np.sort((core**2).ravel())[::-1]
        top = int(np.ceil(0.05 * mag2.size))
        assert mag2[:top].sum() / mag2.sum() >= 0.90


class TestDeterminism:
    def test_repeat_run_bit_identical(self, rng):
        f = make_smooth_cube(24, 24, 3, seed=9)
        sys = SystemModel.default(imaging.generate_mask(24, 24, 0.5, 4), 3)
        y = imaging.forward(f, sys)
        p = SolverParams(k=8, window=5, max_iter=5)
        a = reconstruct(y, sys, p)
        b = reconstruct(y, sys, p)
        assert a.tobytes() == b.tobytes()
