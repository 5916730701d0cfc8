"""Acceptance suite: every criterion at its pinned tolerance.

Each test prints one machine-readable line:

    ACCEPTANCE <id> <name>: PASS|FAIL measured=<err> tol=<tol>

Criterion 9's time-constancy clause is known to fail: the double-integral
entropy functional genuinely drifts under free unitary evolution (the grid
estimate and an independent continuum quadrature agree on the drifting
values to ~1e-6 relative, so the drift is a property of the functional, not
of the discretization).  The assertion is kept at its stated tolerance and
reports the measured drift honestly.
"""
import numpy as np
import pytest
from dataclasses import replace

from qhydro import (
    EvolutionConfig,
    density,
    diffuse_step,
    diffusive_acceleration,
    diffusive_bohm_force,
    evolve,
    free_potential,
    gaussian_density,
    gaussian_packet,
    harmonic_potential,
    make_grid,
    step,
    uncertainty_relation,
    valid_mask,
    von_neumann_entropy,
)
from qhydro.analytic import GaussianParams, entropy_of_width, harmonic_sigma
from qhydro.cli import default_config, run_scenario
from qhydro.diffusion import entropy_equation_residual, fokker_planck_residual
from qhydro.traces import dominant_mode

ENT0 = 0.5 * np.log(2 * np.pi * np.e)
VN_STATIC_ORACLE = 9.620131169219542  # adaptive double quadrature, sigma = 1


def report_line(cid, name, ok, measured, tol):
    line = (
        f"ACCEPTANCE {cid} {name}: {'PASS' if ok else 'FAIL'} "
        f"measured={measured:.6g} tol={tol:.3g}"
    )
    print(line)
    return line


@pytest.fixture(scope="module")
def free_report():
    return run_scenario(default_config("free_gaussian"))


@pytest.fixture(scope="module")
def ground_report():
    return run_scenario(default_config("harmonic_ground"))


@pytest.fixture(scope="module")
def perturbed_report():
    return run_scenario(default_config("harmonic_perturbed"))


@pytest.fixture(scope="module")
def diffusion_report():
    cfg = replace(
        default_config("diffusion_gaussian"),
        sigma0=float(np.sqrt(0.5)),
        start_time=0.5,
        t_final=3.5,
        dt=1e-3,
        snapshot_stride=10,
    )
    return run_scenario(cfg)


def identity(report, name):
    (check,) = [c for c in report.identities if c.name == name]
    return check


def test_01_free_particle_spreading(free_report):
    check = identity(free_report, "sigma2_matches_reference")
    ok = check.measured < 1e-3
    line = report_line(1, "free_particle_spreading", ok, check.measured, 1e-3)
    assert ok, line


def test_02_free_entropy_trace(free_report):
    check = identity(free_report, "entropy_matches_reference")
    (row_t2,) = [r for r in free_report.rows if abs(r.t - 2.0) < 1e-12]
    value_err = abs(row_t2.ent_boltzmann - (ENT0 + 0.5 * np.log(2.0)))
    measured = max(check.measured, value_err)
    ok = measured < 1e-3
    line = report_line(2, "free_entropy_trace", ok, measured, 1e-3)
    assert ok, line
    assert abs(row_t2.ent_boltzmann - 1.7655121234846454) < 1e-3


def test_03_entropy_production_identity(free_report):
    check = identity(free_report, "entropy_rate_matches_production")
    (row_t2,) = [r for r in free_report.rows if abs(r.t - 2.0) < 1e-12]
    spot = max(
        abs(row_t2.production_advective - 0.25) / 0.25,
        abs(row_t2.dEntB_dt_fd - 0.25) / 0.25,
    )
    measured = max(check.measured, spot)
    ok = measured < 1e-2
    line = report_line(3, "entropy_production_identity", ok, measured, 1e-2)
    assert ok, line


def test_04_correlation_identity(free_report, ground_report, perturbed_report):
    worst = 0.0
    for report in (free_report, ground_report, perturbed_report):
        for row in report.rows:
            a, c = row.production_advective, row.production_correlation
            worst = max(worst, abs(a - c) / max(abs(a), abs(c), 1e-3))
    ok = worst < 1e-6
    line = report_line(4, "correlation_identity", ok, worst, 1e-6)
    assert ok, line


def test_05_harmonic_ground_state(ground_report):
    ent = identity(ground_report, "entropy_constant")
    ua = identity(ground_report, "advective_velocity_zero")
    rho = identity(ground_report, "density_stationary")
    ok = ent.measured < 1e-6 and ua.measured < 1e-6 and rho.measured < 1e-10
    measured = max(ent.measured, ua.measured, rho.measured / 1e-4)
    line = report_line(5, "harmonic_ground_state", ok, measured, 1e-6)
    print(
        f"    entropy_drift={ent.measured:.3g} max_u_a={ua.measured:.3g} "
        f"rho_drift={rho.measured:.3g}"
    )
    assert ok, line


def test_06_perturbed_harmonic_width_model():
    # the width-equation model: RK4 trace over five periods of the
    # linearized oscillation at sqrt(2) omega0
    w0 = 1.0
    s0 = float(np.sqrt(0.5))
    eps = 0.01 * s0
    p = GaussianParams(sigma0=s0, omega0=w0, epsilon0=eps)
    t_final = 5 * 2 * np.pi / (np.sqrt(2) * w0)
    t = np.linspace(0.0, t_final, 4001)
    trace = harmonic_sigma(p, t)

    linear = s0 + eps * np.cos(np.sqrt(2) * w0 * t)
    trace_gap = np.abs(trace.sigma - linear).max() / s0

    ent = np.array([float(entropy_of_width(s)) for s in trace.sigma])
    omega_hat, amp_hat = dominant_mode(t, ent)
    freq_err = abs(omega_hat - np.sqrt(2) * w0) / (np.sqrt(2) * w0)
    amp_err = abs(amp_hat - eps / s0) / (eps / s0)

    ok = freq_err < 0.01 and amp_err < 0.05 and trace_gap < 1e-4
    measured = max(freq_err, amp_err / 5.0, trace_gap / 1e-2)
    line = report_line(6, "perturbed_harmonic_width_model", ok, measured, 0.01)
    print(
        f"    freq_err={freq_err:.3g} amp_err={amp_err:.3g} "
        f"rk4_vs_linearized={trace_gap:.3g} sigma0"
    )
    assert freq_err < 0.01, line
    assert amp_err < 0.05, line
    assert trace_gap < 1e-4, line


def test_07_diffusion_exactness(diffusion_report):
    width = identity(diffusion_report, "sigma2_exact_kernel")
    defn = identity(diffusion_report, "production_is_kB_D_fisher")
    similarity = identity(diffusion_report, "production_matches_half_inverse_time")
    ok = width.measured < 1e-12 and defn.measured < 1e-12 and similarity.measured < 1e-3
    measured = max(width.measured / 1e-9, defn.measured / 1e-9, similarity.measured)
    line = report_line(7, "diffusion_exactness", ok, measured, 1e-3)
    print(
        f"    width_err={width.measured:.3g} definition_err={defn.measured:.3g} "
        f"rate_vs_half_inverse_time={similarity.measured:.3g}"
    )
    assert width.measured < 1e-12, line
    assert defn.measured < 1e-12, line
    assert similarity.measured < 1e-3, line


def test_08_diffusive_bohm_force_balance():
    # pointwise force balance on the full validity mask needs extended
    # precision: in float64 the 1/rho conditioning at the mask edge exceeds
    # the tolerance by two orders no matter how the estimator is tuned
    D = np.longdouble("0.5")
    t0, t_mid, tau = 0.5, 1.0, 0.01
    grid = make_grid(40.0, 1024, dtype=np.longdouble)
    seed = gaussian_density(grid, float(np.sqrt(0.5)), D=0.5, time=t0)
    before = diffuse_step(seed, (t_mid - tau) - t0)
    after = diffuse_step(before, 2 * tau)
    mid = diffuse_step(before, tau)

    accel = diffusive_acceleration(before, after)
    force = diffusive_bohm_force(mid.rho, D=0.5)
    mask = accel.mask & force.mask
    reference = -grid.x / (4.0 * t_mid**2)

    gap = float(np.abs(accel.values - force.values)[mask].max())
    acc_vs_ref = float(np.abs(accel.values - reference)[mask].max())
    force_vs_ref = float(np.abs(force.values - reference)[mask].max())

    ok = gap < 1e-3 and acc_vs_ref < 1e-3 and force_vs_ref < 1e-3
    measured = max(gap, acc_vs_ref, force_vs_ref)
    line = report_line(8, "diffusive_bohm_force_balance", ok, measured, 1e-3)
    print(
        f"    accel_vs_force={gap:.3g} accel_vs_closed_form={acc_vs_ref:.3g} "
        f"force_vs_closed_form={force_vs_ref:.3g}"
    )
    assert ok, line


@pytest.fixture(scope="module")
def vn_run():
    grid = make_grid(20.0, 256)
    state = gaussian_packet(grid, 1.0)
    snaps = evolve(state, free_potential(), EvolutionConfig(1e-3, 2.0, 250))
    return [(s.time, von_neumann_entropy(s)) for s in snaps]


def test_09a_von_neumann_static_value(vn_run):
    grid = make_grid(20.0, 256)
    state = gaussian_packet(grid, 1.0)
    value = vn_run[0][1]

    rho = density(state)
    mask = valid_mask(rho)
    a = np.sqrt(rho.values[mask])
    reduction = -2.0 * (grid.dx * a.sum()) * (grid.dx * (a * np.log(a)).sum())
    reduction_err = abs(value - reduction)
    oracle_err = abs(value - VN_STATIC_ORACLE) / VN_STATIC_ORACLE

    ok = reduction_err < 1e-8 and oracle_err < 1e-4
    measured = max(reduction_err / 1e-5, oracle_err)
    line = report_line(9, "von_neumann_static_value", ok, measured, 1e-4)
    print(f"    reduction_err={reduction_err:.3g} oracle_rel_err={oracle_err:.3g}")
    assert reduction_err < 1e-8, line
    assert oracle_err < 1e-4, line


def test_09b_von_neumann_time_constancy(vn_run):
    # KNOWN FAIL: the functional is not conserved by free evolution.  The
    # measured drift is reproduced by adaptive continuum quadrature of the
    # same functional on the analytic fields (9.6201 -> 8.1742 -> 6.3444 at
    # t = 0, 1, 2), so it is a property of the functional itself; see
    # test_entropy.TestVonNeumannEntropy.test_tracks_continuum_value_under_evolution.
    v0 = vn_run[0][1]
    drift = max(abs(v - v0) for _, v in vn_run) / abs(v0)
    ok = drift < 1e-3
    line = report_line(9, "von_neumann_time_constancy", ok, drift, 1e-3)
    assert ok, line


def test_10_residual_identities():
    grid = make_grid(40.0, 1024)
    state = gaussian_packet(grid, 1.0)
    snaps = evolve(state, free_potential(), EvolutionConfig(1e-3, 1.001, 1))
    fp = float(np.abs(fokker_planck_residual(snaps[-2]).values).max())
    ent = float(np.abs(entropy_equation_residual(snaps[-2], snaps[-1]).values).max())
    ok = fp < 1e-8 and ent < 1e-4
    measured = max(fp / 1e-4, ent)
    line = report_line(10, "residual_identities", ok, measured, 1e-4)
    print(f"    fokker_planck={fp:.3g} entropy_equation={ent:.3g}")
    assert fp < 1e-8, line
    assert ent < 1e-4, line


def test_11_conservation_suite(free_report, ground_report, perturbed_report, diffusion_report):
    worst_norm = 0.0
    worst_energy = 0.0
    for report in (free_report, ground_report, perturbed_report):
        worst_norm = max(worst_norm, identity(report, "norm_conservation").measured)
        worst_energy = max(worst_energy, identity(report, "energy_conservation").measured)
    worst_norm = max(worst_norm, identity(diffusion_report, "mass_conservation").measured)

    # time-reversal round trips (the diffusive kernel is dissipative and has
    # no reverse map; mass conservation stands in for it above)
    reversal = 0.0
    for grid_args, sigma, pot in (
        ((40.0, 1024), 1.0, free_potential()),
        ((12.0, 256), float(np.sqrt(0.5)), harmonic_potential(1.0)),
        ((12.0, 256), float(np.sqrt(0.5)) * 1.01, harmonic_potential(1.0)),
    ):
        grid = make_grid(*grid_args)
        initial = gaussian_packet(grid, sigma)
        forward = initial
        for _ in range(1000):
            forward = step(forward, pot, 1e-3)
        back = forward
        for _ in range(1000):
            back = step(back, pot, -1e-3)
        reversal = max(reversal, float(np.abs(back.psi.values - initial.psi.values).max()))

    ok = worst_norm < 1e-10 and worst_energy < 1e-5 and reversal < 1e-8
    measured = max(worst_norm / 1e-5, worst_energy, reversal / 1e-3)
    line = report_line(11, "conservation_suite", ok, measured, 1e-5)
    print(
        f"    norm_drift={worst_norm:.3g} energy_drift={worst_energy:.3g} "
        f"reversal={reversal:.3g}"
    )
    assert worst_norm < 1e-10, line
    assert worst_energy < 1e-5, line
    assert reversal < 1e-8, line


def test_12_uncertainty_bound():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10):
        hbar = float(rng.uniform(0.05, 20.0))
        mass = float(rng.uniform(0.05, 20.0))
        result = uncertainty_relation(hbar / (2 * mass), mass, hbar)
        assert result.is_bound
        worst = max(worst, abs(result.lx_px - hbar / 2) / (hbar / 2))
    ok = worst < 1e-12
    line = report_line(12, "uncertainty_bound", ok, worst, 1e-12)
    assert ok, line
