"""Acceptance suite: one test per primary criterion, stated tolerances.

Each test prints a single PASS/FAIL line (visible under pytest -s or in
the captured summary) and asserts the criterion.  Run with

    python3 -m pytest tests/test_acceptance.py -v -s
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad

from cyclodamp.analytic_norms import NormParams, prop25_suite, z_norm, z_norm_detail
from cyclodamp.echo_growth import (
    EchoKernelParams,
    EchoScenario,
    backward_moment,
    forward_moment,
    gaussian_mixing_check,
    growth_control_solve,
    run_echo,
)
from cyclodamp.fields import InteractionPotential
from cyclodamp.kinematics import Kinematics, PhasePoint, exact_flow, shift_s0
from cyclodamp.linear_volterra import (
    GaussianEtaProfile,
    VolterraSystem,
    fit_decay_rate,
    kernel_k0,
    run_linear_mode,
    volterra_march,
)
from cyclodamp.nonlinear_vlasov import (
    ModeFieldHistory,
    SolverConfig,
    full_characteristics,
    probe_set,
    reduced_characteristics,
    run,
)
from cyclodamp.phase_space import (
    apply_cosine_pulse,
    homogeneous_state,
    make_geometry,
    maxwellian,
    zero_distribution,
)


def report(name: str, ok: bool, detail: str = ""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


def test_kinematics_group_law_and_measure():
    t0 = time.time()
    kin = Kinematics(omega=1.4)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        t1, t2, t3 = np.sort(rng.uniform(-3, 3, 3))
        p = PhasePoint.of(rng.uniform(0, 1, 3), rng.normal(0, 2, 3))
        for flow in (exact_flow, shift_s0):
            a = flow(t3, t2, flow(t2, t1, p, kin), kin)
            b = flow(t3, t1, p, kin)
            dx = np.abs(a.x - b.x)
            dx = np.minimum(dx, 1.0 - dx)
            worst = max(worst, float(np.max(dx)), float(np.max(np.abs(a.v - b.v))))

    def flow6(z):
        q = exact_flow(1.3, 0.0, PhasePoint(x=z[:3], v=z[3:]), kin)
        return np.concatenate([q.x, q.v])

    def fd_jac(z0, eps):
        J = np.zeros((6, 6))
        for j in range(6):
            dz = np.zeros(6)
            dz[j] = eps
            diff = flow6(z0 + dz) - flow6(z0 - dz)
            diff[:3] = (diff[:3] + 0.5) % 1.0 - 0.5
            J[:, j] = diff / (2 * eps)
        return J

    worst_jac = 0.0
    for _ in range(10):
        z0 = np.concatenate([rng.uniform(0, 1, 3), rng.normal(0, 2, 3)])
        J = (4.0 * fd_jac(z0, 1e-5) - fd_jac(z0, 2e-5)) / 3.0
        worst_jac = max(worst_jac, abs(np.linalg.det(J) - 1.0))
    elapsed = time.time() - t0
    report(
        "kinematics-group-law",
        worst < 1e-12 and worst_jac < 1e-10 and elapsed < 1.0,
        f"(composition {worst:.2e}, |detJ-1| {worst_jac:.2e}, {elapsed:.2f} s)",
    )


def test_landau_limit():
    t0 = time.time()
    kin = Kinematics(omega=1e-8)
    rng = np.random.default_rng(3)
    worst_flow = 0.0
    for _ in range(50):
        p = PhasePoint.of(rng.uniform(0, 1, 3), rng.uniform(-1.5, 1.5, 3))
        for dt in (-10.0, -5.0, 5.0, 10.0):
            q = exact_flow(dt, 0.0, p, kin)
            dx = np.abs(q.x - np.mod(p.x + p.v * dt, 1.0))
            dx = np.minimum(dx, 1.0 - dx)
            worst_flow = max(worst_flow, float(np.max(dx)), float(np.max(np.abs(q.v - p.v))))

    # independent 1-d classical-kernel oracle
    g = make_geometry(1, 4, 256, 8.0)
    eq, _ = maxwellian(g, 1.0)
    w = InteractionPotential(gamma=2.0, amplitude=1.0, kind="gradient_z")
    t = np.linspace(0, 6, 601)
    worst_kernel = 0.0
    for k3 in (1, 2):
        kern = kernel_k0(eq, w, (0, 0, k3), t, Kinematics(omega=0.0))
        w_s = 1.0 / (2 * np.pi * abs(k3) * (1 + abs(k3) ** 2.0))
        oracle = -4 * np.pi**2 * w_s * np.exp(-2 * np.pi**2 * (k3 * t) ** 2) * k3**2 * t
        worst_kernel = max(worst_kernel, float(np.max(np.abs(kern - oracle))))
    elapsed = time.time() - t0
    report(
        "landau-limit",
        worst_flow < 1e-6 and worst_kernel < 1e-8 and elapsed < 10.0,
        f"(flow {worst_flow:.2e}, kernel {worst_kernel:.2e}, {elapsed:.1f} s)",
    )


def test_gaussian_phase_mixing():
    t0 = time.time()
    # kappa v_T t <= 4 with kappa = 2 pi k1
    tg = np.linspace(0.0, 4.0 / (2 * np.pi), 21)
    out = gaussian_mixing_check(1, 1.0, tg)
    elapsed = time.time() - t0
    report(
        "gaussian-phase-mixing",
        out["max_rel_err_oracle"] < 1e-6 and out["max_rel_err_law"] < 1e-6 and elapsed < 5.0,
        f"(law {out['max_rel_err_law']:.2e}, oracle {out['max_rel_err_oracle']:.2e}, {elapsed:.1f} s)",
    )


def test_echo_timing_sweep():
    t0 = time.time()
    failures = []
    for k1 in (1, 2, 3):
        for k2 in (k1 + 1, k1 + 2, k1 + 3):
            for tau in (6.0, 10.0):
                sc = EchoScenario(a1=0.01, a2=0.01, k1=k1, k2=k2, tau_pulse=tau)
                res = run_echo(sc)
                if abs(res.peak_time - res.predicted_time) > res.dt_output + 1e-12:
                    failures.append((k1, k2, tau, res.peak_time, res.predicted_time))
    elapsed = time.time() - t0
    report(
        "echo-timing",
        not failures and elapsed < 60.0,
        f"(18 cases, {elapsed:.1f} s){' failures: ' + str(failures) if failures else ''}",
    )


def test_linear_cyclotron_damping():
    t0 = time.time()
    g = make_geometry(3, 2, 32, 8.0)
    eq, _ = maxwellian(g, 1.0)
    kin = Kinematics(omega=1.0)
    w = InteractionPotential(gamma=2.0, amplitude=1.0, kind="perpendicular")
    prof = GaussianEtaProfile(amplitude=0.01, sigma_v=1.0)
    vt = 1.0
    rates = {}
    decayed = {}
    for k3 in (1, 2):
        horizon = 20.0 / (2 * np.pi * k3 * vt)
        t = np.linspace(0.0, horizon, 1601)
        run_k = run_linear_mode(eq, w, prof, (1, 0, k3), t, kin)
        mags = np.abs(run_k.system.rho_of_t)
        start = 2.0 / (2 * np.pi * k3 * vt)
        fit = fit_decay_rate(t, run_k.system.rho_of_t, (start, horizon))
        rates[k3] = fit.rate
        decayed[k3] = mags[-1] <= 1e-6 * np.max(mags)

    # perpendicular mode: odd-in-x3 potential vanishes, rho tracks the source
    t = np.linspace(0.0, 20.0, 801)
    run_perp = run_linear_mode(eq, w, prof, (1, 1, 0), t, kin, disable_b_terms=True)
    from cyclodamp.linear_volterra import source_a

    a = source_a(prof, (1, 1, 0), t, kin)
    undamped_defect = float(np.max(np.abs(np.abs(run_perp.system.rho_of_t) - np.abs(a))))
    elapsed = time.time() - t0
    ok = (
        rates[1] > 0
        and rates[2] > rates[1]
        and decayed[1]
        and decayed[2]
        and undamped_defect < 1e-8
        and elapsed < 60.0
    )
    report(
        "linear-cyclotron-damping",
        ok,
        f"(rates {rates[1]:.2f}/{rates[2]:.2f}, perp defect {undamped_defect:.1e}, {elapsed:.1f} s)",
    )


def test_volterra_convergence():
    c, a0 = 0.4, 1.3
    errs = []
    for n in (201, 401, 801):
        t = np.linspace(0, 2, n)
        sys = VolterraSystem(
            k=(0, 0, 1),
            t_grid=t,
            a_of_t=np.full_like(t, a0, dtype=complex),
            kernel_of_t=np.full_like(t, c, dtype=complex),
        )
        rho = volterra_march(sys)
        errs.append(np.max(np.abs(rho - a0 * np.exp(c * t))))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    report(
        "volterra-convergence",
        all(o >= 1.8 for o in orders),
        f"(orders {orders[0]:.2f}, {orders[1]:.2f})",
    )


def test_nonlinear_linear_consistency():
    t0 = time.time()
    mode, vt = 1, 1.0
    kin = Kinematics(omega=0.0)

    def setup(eps, nv):
        g = make_geometry(1, 8, nv, 8.0)
        eq, _ = maxwellian(g, vt)
        dist = homogeneous_state(g, eq)
        apply_cosine_pulse(dist, mode=mode, amplitude=2 * eps)
        w = InteractionPotential(gamma=2.0, amplitude=1.0, kind="gradient_z")
        return g, eq, dist, w

    # amplitude 1e-4 match over [0, 15/(kappa v_T)]
    eps = 1e-4
    g, eq, dist, w = setup(eps, 128)
    horizon = 15.0 / (2 * np.pi * mode * vt)
    diag = run(dist, w, kin, SolverConfig(dt=2e-3, t_end=horizon))
    t = np.asarray(diag.t)
    rho_nl = np.asarray(diag.rho_mag)[:, g.kmax + mode]
    prof = GaussianEtaProfile(amplitude=eps, sigma_v=vt)
    lin = run_linear_mode(eq, w, prof, (0, 0, mode), t, kin)
    rho_l = np.abs(lin.system.rho_of_t)
    rel = float(np.max(np.abs(rho_nl - rho_l)) / np.max(rho_l))

    # quadratic scaling through the harmonic mode
    devs = []
    for e in (2e-4, 1e-4):
        g, eq, dist, w = setup(e, 128)
        diag = run(dist, w, kin, SolverConfig(dt=1e-3, t_end=1.5))
        tt = np.asarray(diag.t)
        rho = np.asarray(diag.rho_mag)
        lin_e = run_linear_mode(
            eq, w, GaussianEtaProfile(amplitude=e, sigma_v=vt), (0, 0, mode), tt, kin
        )
        dev_f = np.max(np.abs(rho[:, g.kmax + mode] - np.abs(lin_e.system.rho_of_t)))
        dev_h = np.max(rho[:, g.kmax + 2 * mode])
        devs.append(max(dev_f, dev_h))
    ratio = devs[0] / devs[1]
    elapsed = time.time() - t0
    report(
        "nonlinear-linear-consistency",
        rel < 1e-2 and ratio >= 3.5 and elapsed < 600.0,
        f"(rel {rel:.2e}, ratio {ratio:.2f}, {elapsed:.1f} s)",
    )


def test_reduced_vs_full_characteristics():
    t0 = time.time()
    g = make_geometry(3, 2, 32, 8.0)
    eq, _ = maxwellian(g, 1.0)
    kin = Kinematics(omega=1.0)
    w = InteractionPotential(gamma=2.0, amplitude=1.0)
    prof = GaussianEtaProfile(amplitude=0.02, sigma_v=1.0)
    t = np.linspace(0, 6, 301)
    lin = run_linear_mode(eq, w, prof, (1, 0, 1), t, kin)
    delta_measured = float(np.max(np.linalg.norm(lin.b_hat, axis=1)))
    xs, vs = probe_set(64, v_scale=5.0)
    scales = (1.0, 0.5, 0.25)
    diffs = []
    for c in scales:
        hist = ModeFieldHistory((1, 0, 1), t, lin.e_hat, lin.b_hat, b_scale=c)
        worst = 0.0
        for x0, v0 in zip(xs, vs):
            p = PhasePoint.of(x0, v0)
            q_r, _ = reduced_characteristics(5.0, 0.0, p, hist, kin, n_steps=200)
            q_f, _ = full_characteristics(5.0, 0.0, p, hist, kin, n_steps=200)
            dx = np.abs(q_r.x - q_f.x)
            dx = np.minimum(dx, 1 - dx)
            worst = max(worst, float(max(np.max(dx), np.max(np.abs(q_r.v - q_f.v)))))
        diffs.append(worst)
    slope = float(np.polyfit(np.log(scales), np.log(diffs), 1)[0])
    elapsed = time.time() - t0
    report(
        "reduced-vs-full-characteristics",
        abs(slope - 1.0) < 0.1 and elapsed < 60.0,
        f"(|B| <= {delta_measured:.1e}, exponent {slope:.3f}, {elapsed:.1f} s)",
    )


def test_norm_suite():
    t0 = time.time()
    rep = prop25_suite(seed=0, n_samples=20, n_samples_3d=1)
    asserted = [k for k, v in rep.items() if v["asserted"]]
    all_pass = all(rep[k]["pass"] for k in asserted)

    # truncation stability: forcing n_max + 5 changes the norm below 1e-9
    g = make_geometry(1, 4, 64, 8.0)
    kin = Kinematics(omega=1.0)
    dist = zero_distribution(g)
    v = g.v_grid()
    dist.data[g.kmax + 2] = np.exp(-(v**2) / 2) * np.cos(v)
    base, n_used, _ = z_norm_detail(dist, NormParams(lam=0.06, mu=0.1, tau=1.0, p=1.0), kin)
    forced = z_norm(
        dist, NormParams(lam=0.06, mu=0.1, tau=1.0, p=1.0, n_max=n_used + 5), kin
    )
    trunc_rel = abs(forced - base) / base
    elapsed = time.time() - t0
    report(
        "norm-suite",
        all_pass and trunc_rel < 1e-9,
        f"({len(asserted)} asserted items, truncation {trunc_rel:.1e}, {elapsed:.1f} s)",
    )


def test_kernel_moments():
    t0 = time.time()
    slopes = {}
    for gam in (1.5, 2.0, 3.0):
        p = EchoKernelParams(alpha=0.1, gamma=gam, eps=0.05)
        # window past the moment bound's exponential transients; the
        # shallower gamma = 1.5 power needs a later window to emerge
        ts = np.geomspace(1600, 12800, 4) if gam == 1.5 else np.geomspace(600, 4800, 4)
        ms = [forward_moment(t, p, rtol=1e-3)["moment"] for t in ts]
        slopes[gam] = float(np.polyfit(np.log(ts), np.log(ms), 1)[0])
    ok_slopes = all(
        abs(slopes[gam] + (gam - 1.0)) < 0.15 * (gam - 1.0) for gam in slopes
    )
    p = EchoKernelParams(alpha=0.1, gamma=2.0, eps=0.05)
    coarse = backward_moment(p, tau_grid=np.linspace(0, 40, 21), rtol=1e-4)
    fine = backward_moment(p, tau_grid=np.linspace(0, 40, 81), rtol=1e-4)
    ok_back = (
        np.isfinite(fine["sup"]) and abs(coarse["argmax_tau"] - fine["argmax_tau"]) <= 2.1
    )
    elapsed = time.time() - t0
    report(
        "kernel-moments",
        ok_slopes and ok_back and elapsed < 120.0,
        f"(slopes {slopes}, argmax {fine['argmax_tau']:.1f}, {elapsed:.1f} s)",
    )


def test_growth_control():
    t0 = time.time()
    p = EchoKernelParams(alpha=0.1, gamma=2.0, eps=0.05)
    out = growth_control_solve(a_const=1.0, params=p, c_kernel=0.01, t_end=200.0, dt=0.1)
    t = out["t"]
    window = (t >= 130.0) & (t <= 200.0)
    slope = float(np.polyfit(t[window], np.log(out["phi"][window]), 1)[0])
    elapsed = time.time() - t0
    report(
        "growth-control",
        slope <= 0.06,
        f"(terminal log-slope {slope:.4f} <= 0.06, {elapsed:.1f} s)",
    )
