import numpy as np
import pytest

from dwelltime.analysis import SosEncoder
from dwelltime.errors import InputError
from dwelltime.linalg import expm, spectral_radius
from dwelltime.oracle import simulate, DwellSequence
from dwelltime.sampled_data import (
    PolytopicSampledData,
    SampledDataSystem,
    analyze_fixed,
    lift,
    lift_closed,
    sampled_search_range,
    synthesize,
)
from dwelltime.systems import ImpulsiveSystem

# The double-integrator-like plant used throughout the sampled-data tables.
PLANT = SampledDataSystem(np.array([[0.0, 1.0], [0.0, -0.1]]),
                          np.array([[0.0], [0.1]]))
SYS40 = SampledDataSystem(PLANT.A, PLANT.B,
                          K1=np.array([[-3.75, -11.5]]), K2=np.array([[0.0]]))


class TestLift:
    def test_zero_system(self):
        sd = SampledDataSystem(np.zeros((2, 2)), np.zeros((2, 1)),
                               K1=np.zeros((1, 2)), K2=np.zeros((1, 1)))
        lf = lift(sd)
        assert np.array_equal(lf.abar, np.zeros((3, 3)))
        expected_j = np.block([[np.eye(2), np.zeros((2, 1))],
                               [np.zeros((1, 3))]])
        assert np.array_equal(lf.jbar, expected_j)

    def test_fixed_gain_bottom_row(self):
        lf = lift(SYS40)
        assert lf.abar.shape == (3, 3)
        assert np.array_equal(lf.jbar[2], np.array([-3.75, -11.5, 0.0]))

    def test_block_triangular_monodromy(self):
        # With K2 = 0 the lifted monodromy has a zero upper-right n x m
        # block pattern preserved through the cascade structure.
        lf = lift(SYS40)
        M = expm(lf.abar, 0.7) @ lf.jbar
        # last column is zero because Jbar's last column is zero (K2 = 0)
        assert np.allclose(M[:, 2], 0.0)

    def test_open_decomposition(self):
        lf = lift(PLANT)
        assert lf.jbar is None
        K = np.array([[1.0, 2.0, 3.0]])
        Jcl = lift_closed(PLANT, K)
        assert np.allclose(Jcl, lf.j0 + lf.b0 @ K)
        with pytest.raises(InputError):
            lf.as_impulsive()

    def test_lifting_fidelity_against_held_input_simulation(self):
        # Simulating the lifted impulsive system reproduces the plant state
        # under a zero-order-hold control loop.
        sd = SYS40
        lf = lift(sd)
        period = 0.4
        seq = DwellSequence.fixed(period, 8)
        x0 = np.array([1.0, -0.5])
        u = 0.0  # held value entering the first interval
        traj = simulate(ImpulsiveSystem(lf.abar, lf.jbar), seq,
                        np.concatenate([x0, [u]]), step=1e-4)
        # direct simulation of the sampled loop
        x = x0.copy()
        for _ in range(8):
            xs = np.concatenate([x, [u]])
            xs = expm(lf.abar, period) @ xs
            x = xs[:2]
            u = float(sd.K1 @ x + sd.K2 @ [xs[2]])
        # compare at the final post-jump instant
        assert np.allclose(traj.x[-1][:2], x, atol=1e-6)


class TestAnalyzeFixed:
    def test_certificate_inside_range(self):
        c = analyze_fixed(SYS40, 0.01, 1.5, SosEncoder(4))
        assert c.feasible

    def test_needs_gains(self):
        with pytest.raises(InputError):
            analyze_fixed(PLANT, 0.01, 1.0)

    def test_certified_range_inside_exact(self):
        from dwelltime.oracle import spectral_sweep
        tmin, tmax = sampled_search_range(SYS40, seed=1.0,
                                          encoder=SosEncoder(4))
        intervals = spectral_sweep(lift(SYS40).as_impulsive(), 1e-3, 2.5)
        lo, hi = intervals[0]
        assert lo - 1e-4 <= tmin and tmax <= hi + 1e-4


class TestSynthesize:
    def test_k2_free_design(self):
        r = synthesize(PLANT, 0.001, 10.0, degree=2)
        assert r.feasible
        assert r.residuals["max_rho"] < 1.0
        assert r.K1.shape == (1, 2) and r.K2.shape == (1, 1)

    def test_k2_zero_is_bit_exact(self):
        r = synthesize(PLANT, 0.001, 10.0, degree=3, k2_zero=True)
        assert r.feasible
        assert np.array_equal(r.K2, np.zeros((1, 1)))
        assert r.residuals["max_rho"] < 1.0

    def test_closed_loop_random_periods(self):
        r = synthesize(PLANT, 0.001, 10.0, degree=2)
        lf = lift(PLANT)
        Jcl = lf.j0 + lf.b0 @ r.K
        rng = np.random.default_rng(11)
        for th in rng.uniform(0.001, 10.0, size=100):
            assert spectral_radius(expm(lf.abar, th) @ Jcl) < 1.0

    def test_periodic_recovery_degenerate_range(self):
        r = synthesize(PLANT, 0.5, 0.5, degree=2)
        assert r.feasible
        lf = lift(PLANT)
        Jcl = lf.j0 + lf.b0 @ r.K
        assert spectral_radius(expm(lf.abar, 0.5) @ Jcl) < 1.0

    def test_robust_polytope(self):
        psd = PolytopicSampledData([PLANT.A, 5.0 * PLANT.A],
                                   np.array([[0.0], [1.0]]))
        r = synthesize(psd, 0.001, 10.0, degree=2)
        assert r.feasible
        for i, Ai in enumerate(psd.A_vertices):
            lf = lift(SampledDataSystem(Ai, psd.B))
            Jcl = lf.j0 + lf.b0 @ r.K
            for th in np.linspace(0.001, 10.0, 50):
                assert spectral_radius(expm(lf.abar, th) @ Jcl) < 1.0

    def test_validates_interval(self):
        with pytest.raises(InputError):
            synthesize(PLANT, 1.0, 0.5)
