import numpy as np
import pytest
from scipy.integrate import quad

from cyclodamp.fields import InteractionPotential
from cyclodamp.kinematics import Kinematics
from cyclodamp.linear_volterra import (
    EtaRangeError,
    GaussianEtaProfile,
    GriddedEtaProfile,
    NearSingularStepError,
    VolterraSystem,
    WindowTooShortError,
    fit_decay_rate,
    kernel_k0,
    run_linear_mode,
    source_a,
    stability_margin,
    volterra_march,
)
from cyclodamp.phase_space import make_geometry, maxwellian


@pytest.fixture(scope="module")
def eq1():
    g = make_geometry(1, 4, 256, 8.0)
    eq, _ = maxwellian(g, 1.0)
    return eq


@pytest.fixture(scope="module")
def eq3():
    g = make_geometry(3, 2, 32, 8.0)
    eq, _ = maxwellian(g, 1.0)
    return eq


class TestSourceA:
    def test_zero_perturbation(self):
        prof = GaussianEtaProfile(amplitude=0.0, sigma_v=1.0)
        kin = Kinematics(omega=1.0)
        a = source_a(prof, (1, 0, 1), np.linspace(0, 10, 101), kin)
        assert np.all(a == 0)

    def test_landau_limit_free_streaming(self):
        # B0 -> 0: A(t,k) = g_hat(k3 t), the classical mixing decay
        prof = GaussianEtaProfile(amplitude=0.01, sigma_v=1.0)
        kin = Kinematics(omega=1e-9)
        t = np.linspace(0, 5, 51)
        a = source_a(prof, (0, 0, 2), t, kin)
        oracle = 0.01 * np.exp(-2 * np.pi**2 * (2 * t) ** 2)
        assert np.max(np.abs(a - oracle)) < 1e-10

    def test_maxwellian_shaped_matches_mixing_law(self):
        # g_hat(eta) = exp(-2 pi^2 eta^2): |A(t)| follows the Gaussian law,
        # cross-checked by an independent quadrature oracle.
        prof = GaussianEtaProfile(amplitude=1.0, sigma_v=1.0)
        kin = Kinematics(omega=1.0)
        t = np.linspace(0, 2, 21)
        a = source_a(prof, (0, 0, 1), t, kin)
        for ti, ai in zip(t, a):
            oracle, _ = quad(
                lambda v: np.exp(-(v**2) / 2) / np.sqrt(2 * np.pi) * np.cos(2 * np.pi * ti * v),
                -10,
                10,
            )
            assert abs(abs(ai) - oracle) < 1e-10

    def test_gridded_profile_matches_closed_form(self):
        kin = Kinematics(omega=0.5)
        t = np.linspace(0, 3, 31)
        a_exact = source_a(GaussianEtaProfile(1.0, 1.0), (0, 0, 1), t, kin)
        errs = []
        for nv, lv in ((256, 8.0), (512, 16.0)):  # deta = 1/(2 lv) halves
            g = make_geometry(1, 4, nv, lv)
            eta = g.eta_grid()
            table = GriddedEtaProfile(eta, np.exp(-2 * np.pi**2 * eta**2))
            a_grid = source_a(table, (0, 0, 1), t, kin)
            errs.append(np.max(np.abs(a_grid - a_exact)))
        assert errs[0] < 1e-4
        assert errs[1] < errs[0] / 8  # cubic: 4th-order under eta-grid halving

    def test_out_of_range_raises(self):
        g = make_geometry(1, 4, 64, 8.0)
        eta = g.eta_grid()
        table = GriddedEtaProfile(eta, np.exp(-(eta**2)))
        kin = Kinematics(omega=0.0)
        with pytest.raises(EtaRangeError, match="enlarge lv"):
            source_a(table, (0, 0, 1), np.linspace(0, 100, 11), kin)


class TestKernel:
    def test_zero_potential(self, eq3):
        w = InteractionPotential(gamma=2.0, amplitude=0.0)
        kin = Kinematics(omega=1.0)
        kern = kernel_k0(eq3, w, (1, 0, 1), np.linspace(0, 10, 101), kin)
        assert np.all(kern == 0)

    def test_matches_classical_landau_kernel(self, eq1):
        # Independent 1-d implementation of the electrostatic kernel
        # -4 pi^2 W_s(k) f0_hat(k t) |k|^2 t for the gradient-type potential.
        kin = Kinematics(omega=0.0)
        w = InteractionPotential(gamma=2.0, amplitude=1.0, kind="gradient_z")
        t = np.linspace(0, 6, 301)
        for k3 in (1, 2):
            kern = kernel_k0(eq1, w, (0, 0, k3), t, kin)
            w_s = 1.0 / (2 * np.pi * abs(k3) * (1 + abs(k3) ** 2.0))
            oracle = (
                -4 * np.pi**2 * w_s * np.exp(-2 * np.pi**2 * (k3 * t) ** 2) * k3**2 * t
            )
            assert np.max(np.abs(kern - oracle)) < 1e-8

    def test_b0_to_zero_continuity(self, eq1):
        w = InteractionPotential(gamma=2.0, amplitude=1.0, kind="gradient_z")
        t = np.linspace(0, 6, 301)
        k = (0, 0, 1)
        k_zero = kernel_k0(eq1, w, k, t, Kinematics(omega=0.0))
        k_tiny = kernel_k0(eq1, w, k, t, Kinematics(omega=1e-8))
        assert np.max(np.abs(k_zero - k_tiny)) < 1e-8

    def test_maxwellian_kernel_decays(self, eq3):
        # envelope decays at least exponentially in |k3| t
        kin = Kinematics(omega=1.0)
        w = InteractionPotential(gamma=2.0, amplitude=1.0)
        t = np.linspace(0, 4, 401)
        kern = kernel_k0(eq3, w, (1, 0, 1), t, kin)
        fit = fit_decay_rate(t, kern + 1e-300, (0.3, 2.0))
        assert fit.rate > 0

    def test_isotropic_b_terms_vanish(self, eq3):
        # for the isotropic Maxwellian grad(f0) x v = 0: kernel equals its
        # E-only part
        from cyclodamp.linear_volterra import _e_only_kernel

        kin = Kinematics(omega=1.0)
        w = InteractionPotential(gamma=2.0, amplitude=1.0)
        t = np.linspace(0, 5, 101)
        k = (1, 1, 2)
        full = kernel_k0(eq3, w, k, t, kin)
        e_only = _e_only_kernel(eq3, w, k, t, kin)
        assert np.max(np.abs(full - e_only)) < 1e-14

    def test_anisotropic_b_terms_active(self):
        g = make_geometry(3, 2, 32, 8.0)
        eq, _ = maxwellian(g, 0.8, v_thermal_perp=1.0)
        kin = Kinematics(omega=1.0)
        w = InteractionPotential(gamma=2.0, amplitude=1.0)
        t = np.linspace(0, 5, 101)
        from cyclodamp.linear_volterra import _e_only_kernel

        full = kernel_k0(eq, w, (1, 0, 1), t, kin)
        e_only = _e_only_kernel(eq, w, (1, 0, 1), t, kin)
        assert np.max(np.abs(full - e_only)) > 1e-6


class TestMarch:
    def test_zero_kernel_returns_source(self):
        t = np.linspace(0, 5, 64)
        a = np.exp(-0.3 * t) * np.exp(1j * t)
        sys = VolterraSystem(k=(0, 0, 1), t_grid=t, a_of_t=a, kernel_of_t=np.zeros_like(a))
        rho = volterra_march(sys)
        assert np.array_equal(rho, a)

    def test_constant_kernel_resolvent(self):
        # rho = a + c int rho: exact solution a e^{c t}
        c, a0 = 0.4, 1.3
        errs = []
        for n in (201, 401):
            t = np.linspace(0, 2, n)
            sys = VolterraSystem(
                k=(0, 0, 1),
                t_grid=t,
                a_of_t=np.full_like(t, a0, dtype=complex),
                kernel_of_t=np.full_like(t, c, dtype=complex),
            )
            rho = volterra_march(sys)
            errs.append(np.max(np.abs(rho - a0 * np.exp(c * t))))
        order = np.log2(errs[0] / errs[1])
        assert errs[1] < 1e-5
        assert order > 1.8

    def test_self_convergence_order(self, eq1):
        kin = Kinematics(omega=0.0)
        w = InteractionPotential(gamma=2.0, amplitude=1.0, kind="gradient_z")
        prof = GaussianEtaProfile(amplitude=0.01, sigma_v=1.0)
        sols = {}
        for n in (201, 401, 801):
            t = np.linspace(0, 3, n)
            run = run_linear_mode(eq1, w, prof, (0, 0, 1), t, kin)
            sols[n] = run.system.rho_of_t
        err_coarse = np.max(np.abs(sols[201] - sols[801][::4]))
        err_fine = np.max(np.abs(sols[401] - sols[801][::2]))
        order = np.log2(err_coarse / err_fine)
        assert order > 1.8

    def test_linearity(self, eq1):
        kin = Kinematics(omega=0.0)
        w = InteractionPotential(gamma=2.0, amplitude=1.0, kind="gradient_z")
        t = np.linspace(0, 3, 301)
        kern = kernel_k0(eq1, w, (0, 0, 1), t, kin)
        rng = np.random.default_rng(0)
        a1 = rng.normal(size=len(t)) + 1j * rng.normal(size=len(t))
        a2 = rng.normal(size=len(t)) + 1j * rng.normal(size=len(t))
        al, be = 1.7, -0.6 + 0.2j

        def solve(a):
            return volterra_march(
                VolterraSystem(k=(0, 0, 1), t_grid=t, a_of_t=a, kernel_of_t=kern)
            )

        combo = solve(al * a1 + be * a2)
        split = al * solve(a1) + be * solve(a2)
        assert np.max(np.abs(combo - split)) < 1e-10 * np.max(np.abs(combo))

    def test_near_singular_guard(self):
        t = np.linspace(0, 1, 11)
        kern = np.full_like(t, 2.0 / (t[1] - t[0]), dtype=complex)  # dt/2*K0 = 1
        sys = VolterraSystem(k=(0, 0, 1), t_grid=t, a_of_t=np.ones_like(t, dtype=complex),
                             kernel_of_t=kern)
        with pytest.raises(NearSingularStepError):
            volterra_march(sys)


class TestStability:
    def test_zero_potential_full_margin(self, eq3):
        w = InteractionPotential(gamma=2.0, amplitude=0.0)
        rep = stability_margin(eq3, w, (1, 0, 1), Kinematics(omega=1.0))
        assert rep.kappa_margin == 1.0
        assert rep.stable

    def test_maxwellian_gamma2_damped(self, eq1):
        w = InteractionPotential(gamma=2.0, amplitude=1.0, kind="gradient_z")
        rep = stability_margin(eq1, w, (0, 0, 1), Kinematics(omega=0.0))
        assert rep.kappa_margin > 0
        assert 0 <= rep.resonant_mass <= 1

    def test_scaling_linearity(self, eq1):
        kin = Kinematics(omega=0.0)
        w1 = InteractionPotential(gamma=2.0, amplitude=1.0, kind="gradient_z")
        w2 = InteractionPotential(gamma=2.0, amplitude=0.5, kind="gradient_z")
        r1 = stability_margin(eq1, w1, (0, 0, 1), kin)
        r2 = stability_margin(eq1, w2, (0, 0, 1), kin)
        assert abs(r1.sup_omega - 2.0 * r2.sup_omega) < 1e-10 * r1.sup_omega


class TestDecayFit:
    def test_pure_exponential(self):
        t = np.linspace(0, 20, 2001)
        fit = fit_decay_rate(t, np.exp(-0.5 * t), (2.0, 18.0))
        assert abs(fit.rate - 0.5) < 1e-6
        assert fit.r_squared > 1 - 1e-12
        assert not fit.non_exponential

    def test_oscillatory_envelope(self):
        t = np.linspace(0, 30, 6001)
        y = np.exp(-0.3 * t) * np.cos(4 * t)
        fit = fit_decay_rate(t, y, (2.0, 28.0))
        assert abs(fit.rate - 0.3) < 0.02

    def test_gaussian_flagged_non_exponential(self):
        t = np.linspace(0, 6, 1201)
        y = np.exp(-2 * np.pi**2 * 0.25 * t**2)
        fit = fit_decay_rate(t, y, (0.5, 3.0))
        assert fit.non_exponential
        assert fit.rate > 0

    def test_window_too_short(self):
        t = np.linspace(0, 1, 5)
        with pytest.raises(WindowTooShortError):
            fit_decay_rate(t, np.exp(-t), (0.0, 1.0))


class TestLinearRun:
    def test_k3_zero_mode_undamped(self, eq3):
        # default odd-in-x3 potential vanishes at k3 = 0: rho == A exactly
        kin = Kinematics(omega=1.0)
        w = InteractionPotential(gamma=2.0, amplitude=1.0)
        prof = GaussianEtaProfile(amplitude=0.01, sigma_v=1.0)
        t = np.linspace(0, 20, 501)
        run = run_linear_mode(eq3, w, prof, (1, 1, 0), t, kin, disable_b_terms=True)
        a = source_a(prof, (1, 1, 0), t, kin)
        assert np.max(np.abs(np.abs(run.system.rho_of_t) - np.abs(a))) < 1e-8
        # and the source itself does not decay: bounded oscillation
        assert np.max(np.abs(a[len(a) // 2 :])) > 0.1 * np.max(np.abs(a))

    def test_b_field_diagnostic_shape(self, eq3):
        # |B_hat(t)|/t bounded and eventually decreasing for a damped mode
        kin = Kinematics(omega=1.0)
        w = InteractionPotential(gamma=2.0, amplitude=1.0)
        prof = GaussianEtaProfile(amplitude=0.01, sigma_v=1.0)
        t = np.linspace(0, 8, 801)
        run = run_linear_mode(eq3, w, prof, (1, 0, 1), t, kin)
        ratio = np.linalg.norm(run.b_hat[1:], axis=1) / t[1:]
        assert np.all(np.isfinite(ratio))
        tail = ratio[len(ratio) // 2 :]
        assert tail[-1] <= np.max(tail) + 1e-15
        assert np.max(ratio) < np.inf

    def test_damped_mode_decays(self, eq3):
        kin = Kinematics(omega=1.0)
        w = InteractionPotential(gamma=2.0, amplitude=1.0)
        prof = GaussianEtaProfile(amplitude=0.01, sigma_v=1.0)
        t = np.linspace(0, 4, 801)
        run = run_linear_mode(eq3, w, prof, (1, 0, 1), t, kin)
        mags = np.abs(run.system.rho_of_t)
        assert mags[-1] < 1e-6 * np.max(mags)
