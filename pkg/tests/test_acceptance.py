"""Acceptance suite.

Each numbered test runs one acceptance criterion at its stated tolerance and
prints one `criterion NN: PASS/FAIL` line (run with `pytest -s` to see the
lines as they happen; failed criteria also show them in the failure output).

Four criteria are implemented exactly as stated and are expected to FAIL on
mathematical grounds, not implementation deficiencies; each has a green
`test_supplementary_*` companion here demonstrating the underlying limit
theorem with a sound target or estimator:

* criterion 03 -- the decay-route ratio converges at rate n^(rho-1); at
  n = 4096 / rho = 0.5 the deviation is ~2.25%, above the stated 2%.
* criterion 04 -- the stated target constant sqrt(2 pi) contradicts the
  Fourier convention gamma(k) = (1/2pi) int phi e^(-ikx) dx pinned by the
  lag-zero value 2/sqrt(pi); the consistent constant is
  Gamma(rho) cos(rho pi/2) / pi = 1/sqrt(2 pi) at rho = 1/2 (off by 2 pi).
* criterion 05 -- the matrix-difference norm decays like 1/log(n) for a
  logarithmic slowly varying factor, so halving from n = 256 needs n ~ 6e4,
  far beyond 2048.
* criterion 13 -- at R = 50 the median's sampling noise matches the signal
  theta_1 - 1 at every size, so strict 4-point monotonicity holds for only
  ~1/4 of seeds (measured); the signal itself is strictly monotone and the
  sweep is cleanly monotone at R = 800.
"""

import json
import math

import numpy as np
import pytest

from spectral_lm.cli import main as cli_main
from spectral_lm.covariance import SlowlyVarying, ToeplitzSpec, moment_decay_table
from spectral_lm.harness import convergence_sweep, run_clt_experiment
from spectral_lm.kernel import (
    boundary_check,
    compare_toeplitz_pair,
    density_symbol_constant,
    kernel_eigs,
    toeplitz_vs_kernel_report,
)
from spectral_lm.sampling import ModelConfig, get_entry_law, prepare_model
from spectral_lm.spikes import (
    PopulationModel,
    det_equiv_residual,
    g_func,
    series_coeffs,
    solve_theta,
    theta_series,
)

RHOS = (0.25, 0.5, 0.75)
LADDER = (512, 1024, 2048, 4096)
PAIR_LADDER = (256, 512, 1024, 2048)
MOMENT_LADDER = (256, 512, 1024)
SWEEP_LADDER = ((64, 64), (128, 128), (256, 256), (512, 512))


def report(num, ok, detail):
    print(f"criterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    return f"criterion {num:02d}: {detail}"


# ---------------------------------------------------------------------------
# shared expensive computations


@pytest.fixture(scope="module")
def kernel_systems():
    return {rho: kernel_eigs(rho, 2048, 8) for rho in RHOS}


@pytest.fixture(scope="module")
def decay_ladder(kernel_systems):
    spec = ToeplitzSpec(rho=0.5)
    return toeplitz_vs_kernel_report(spec, LADDER, 1, kernel_systems[0.5])


@pytest.fixture(scope="module")
def density_ladder(kernel_systems):
    spec = ToeplitzSpec(rho=0.5, route="density")
    return toeplitz_vs_kernel_report(spec, LADDER, 1, kernel_systems[0.5])


@pytest.fixture(scope="module")
def pair_rows():
    return compare_toeplitz_pair(0.5, SlowlyVarying("log_growth"), PAIR_LADDER)


@pytest.fixture(scope="module")
def clt_real():
    cfg = ModelConfig(N=256, n=256, law=get_entry_law("real_gaussian"), m=2,
                      gamma_spec=ToeplitzSpec(rho=0.4))
    return run_clt_experiment(cfg, 2000, seed=0)


@pytest.fixture(scope="module")
def clt_complex():
    cfg = ModelConfig(N=256, n=256, law=get_entry_law("complex_gaussian"), m=2,
                      gamma_spec=ToeplitzSpec(rho=0.4))
    return run_clt_experiment(cfg, 2000, seed=0)


def diagonal_spike_spectrum(n):
    tail = np.arange(4, n + 1, dtype=float) ** -2.0
    return np.concatenate([[1.0, 0.5, 0.25], tail])


# ---------------------------------------------------------------------------
# criteria


def test_criterion_01_kernel_boundary_law(kernel_systems):
    worst = 0.0
    for rho, system in kernel_systems.items():
        devs = boundary_check(system)[:5]
        worst = max(worst, float(np.max(devs)))
    ok = worst <= 0.05
    msg = report(1, ok, f"max | |f_j(1)| - sqrt(1-rho) | over rho={RHOS}, j<=5: {worst:.4f} (tol 0.05)")
    assert ok, msg


def test_criterion_02_simplicity_gaps(kernel_systems):
    min_gap = math.inf
    for system in kernel_systems.values():
        v = system.values
        assert np.all(v > 0)
        min_gap = min(min_gap, float(np.min((v[:-1] - v[1:]) / v[:-1])))
    ok = min_gap >= 1e-6
    msg = report(2, ok, f"top-8 strictly decreasing, min relative gap {min_gap:.2e} (tol 1e-6)")
    assert ok, msg


def test_criterion_03_decay_route_asymptotics(decay_ladder, kernel_systems):
    ratios = [r.ratio for r in decay_ladder]
    oracle = float(kernel_systems[0.5].values[0])
    diffs = np.abs(np.diff(ratios))
    shrinking = bool(np.all(np.diff(diffs) < 0))
    final_dev = abs(ratios[-1] - oracle) / oracle
    ok = shrinking and final_dev <= 0.02
    msg = report(
        3, ok,
        f"shrinking diffs {shrinking}; final ratio {ratios[-1]:.4f} vs kernel {oracle:.4f} "
        f"(dev {final_dev:.2%}, tol 2%)",
    )
    assert ok, msg


def test_supplementary_03_extrapolated_limit(decay_ladder, kernel_systems):
    # the ratio error scales like n^(rho-1) = n^(-1/2); extrapolating the
    # last two rungs with that exponent recovers the kernel value
    ratios = [r.ratio for r in decay_ladder]
    oracle = float(kernel_systems[0.5].values[0])
    ext = ratios[-1] + (ratios[-1] - ratios[-2]) / (math.sqrt(2.0) - 1.0)
    assert abs(ext - oracle) / oracle <= 0.02
    print(f"criterion 03 supplement: n^(-1/2)-extrapolated ratio {ext:.4f} "
          f"vs kernel {oracle:.4f} (dev {abs(ext - oracle) / oracle:.3%})")


def test_criterion_04_density_route_constant(density_ladder, kernel_systems):
    ratios = [r.ratio for r in density_ladder]
    lam_k = float(kernel_systems[0.5].values[0])
    stated_target = math.sqrt(2.0 * math.pi) * lam_k
    final_dev = abs(ratios[-1] - stated_target) / stated_target
    ok = final_dev <= 0.03
    msg = report(
        4, ok,
        f"final ratio {ratios[-1]:.4f} vs stated target sqrt(2 pi) * lambda_1(K) = "
        f"{stated_target:.4f} (dev {final_dev:.2%}, tol 3%)",
    )
    assert ok, msg


def test_supplementary_04_consistent_constant(density_ladder, kernel_systems):
    # with the Fourier convention pinned by gamma(0) = 2/sqrt(pi), the
    # consistent constant is Gamma(rho) cos(rho pi/2)/pi = 1/sqrt(2 pi)
    ratios = [r.ratio for r in density_ladder]
    lam_k = float(kernel_systems[0.5].values[0])
    target = density_symbol_constant(0.5) * lam_k
    dev = abs(ratios[-1] - target) / target
    assert dev <= 0.03
    print(f"criterion 04 supplement: final ratio {ratios[-1]:.6f} vs "
          f"lambda_1(K)/sqrt(2 pi) = {target:.6f} (dev {dev:.4%})")


def test_criterion_05_slowly_varying_pair(pair_rows):
    norms = [r.norm_diff for r in pair_rows]
    first_dists = [r.evec_dists[0] for r in pair_rows]
    decreasing = bool(np.all(np.diff(norms) < 0))
    halved = norms[-1] < 0.5 * norms[0]
    evec_decreasing = bool(np.all(np.diff(first_dists) < 0))
    ok = decreasing and halved and evec_decreasing
    msg = report(
        5, ok,
        f"norm diffs {np.round(norms, 4).tolist()} decreasing={decreasing}, "
        f"final<half={halved}; ||u1-u1'|| {np.round(first_dists, 4).tolist()} "
        f"decreasing={evec_decreasing}",
    )
    assert ok, msg


def test_supplementary_05_log_rate(pair_rows):
    # the difference norm tracks the 1/log(n) rate forced by a logarithmic
    # slowly varying factor; halving therefore needs n ~ exp(2 log 256) ~ 6e4
    norms = [r.norm_diff for r in pair_rows]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    predicted = math.log(math.e + PAIR_LADDER[0]) / math.log(math.e + PAIR_LADDER[-1])
    observed = norms[-1] / norms[0]
    assert observed == pytest.approx(predicted, rel=0.10)
    print(f"criterion 05 supplement: norm ratio {observed:.3f} vs 1/log-rate "
          f"prediction {predicted:.3f}")


def test_criterion_06_delocalization(decay_ladder, kernel_systems):
    sup_devs = [r.sup_dev for r in decay_ladder]
    decreasing = bool(np.all(np.diff(sup_devs) < 0))
    max_f = float(np.max(np.abs(kernel_systems[0.5].functions[0])))
    deloc_final = decay_ladder[-1].deloc
    bounded = deloc_final <= max_f + 0.2
    ok = decreasing and bounded
    msg = report(
        6, ok,
        f"sup|sqrt(n) u_1 - f_1| {np.round(sup_devs, 4).tolist()} decreasing={decreasing}; "
        f"sqrt(n)||u_1||_inf at n=4096: {deloc_final:.4f} <= max|f_1|+0.2 = {max_f + 0.2:.4f}",
    )
    assert ok, msg


def test_criterion_07_moment_decay():
    rows_a = moment_decay_table(ToeplitzSpec(rho=0.4), MOMENT_LADDER)
    rows_b = moment_decay_table(ToeplitzSpec(rho=0.6), MOMENT_LADDER)
    first = [r[1] for r in rows_a]
    second = [r[2] for r in rows_b]
    ok = all(a > b for a, b in zip(first, first[1:])) and all(
        a > b for a, b in zip(second, second[1:])
    )
    msg = report(
        7, ok,
        f"rho=0.4 sqrt(n) tr/n {np.round(first, 4).tolist()}; "
        f"rho=0.6 sqrt(n) tr^2/n {np.round(second, 4).tolist()} (both decreasing)",
    )
    assert ok, msg


def test_criterion_08_spike_predictor_consistency():
    rng = np.random.default_rng(2024)
    worst_g = 0.0
    worst_series = 0.0
    worst_identity = 0.0
    for _ in range(100):
        N = int(rng.integers(50, 513))
        c = rng.uniform(0.1, 4.0, N)
        model = PopulationModel(c=c, t=np.array([1.0]))
        z_cap = 0.1 * np.mean(c) / np.max(c)
        z = float(rng.uniform(-z_cap, z_cap))
        theta = solve_theta(1, model, z=z)
        worst_g = max(worst_g, abs(g_func(theta, z, c) - 1.0))
        coeffs = series_coeffs([np.mean(c**k) for k in range(1, 12)], 10)
        worst_series = max(worst_series, abs(theta - theta_series(z, coeffs)))
        ident = PopulationModel(c=np.ones(N), t=np.array([1.0]))
        worst_identity = max(worst_identity, abs(solve_theta(1, ident, z=z) - (1.0 + z)))
    ok = worst_g <= 1e-10 and worst_series <= 1e-6 and worst_identity <= 1e-12
    msg = report(
        8, ok,
        f"100 random models: max |G-1| {worst_g:.1e} (tol 1e-10), "
        f"max |root-series(10)| {worst_series:.1e} (tol 1e-6), "
        f"max identity-population defect {worst_identity:.1e}",
    )
    assert ok, msg


def test_criterion_09_det_equiv_cross_check():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(20):
        N = int(rng.integers(100, 400))
        n = int(rng.integers(100, 400))
        c = rng.uniform(0.2, 3.0, N)
        spikes = np.array([3.0, 1.8, 1.0])
        tail = 0.5 / np.arange(2, n - 1) ** 1.5
        t = np.sort(np.concatenate([spikes, tail]))[::-1]
        model = PopulationModel(c=c, t=t)
        j = int(rng.integers(1, 4))
        worst = max(worst, det_equiv_residual(model, j))
    ok = worst <= 1e-6
    msg = report(9, ok, f"20 random gapped models: max |g_C(theta_j) - 1| = {worst:.2e} (tol 1e-6)")
    assert ok, msg


def test_criterion_10_real_gaussian_clt(clt_real):
    var = np.diag(clt_real.empirical_cov)
    ks = clt_real.ks
    corr = clt_real.max_offdiag_corr
    sigma_exact = clt_real.theoretical_cov
    ok = (
        np.allclose(sigma_exact, 2.0 * np.eye(2), atol=1e-10)
        and all(k <= 0.05 for k in ks)
        and np.all((var >= 1.6) & (var <= 2.4))
        and corr <= 0.1
    )
    msg = report(
        10, ok,
        f"KS {np.round(ks, 4).tolist()} (tol 0.05), variances {np.round(var, 3).tolist()} "
        f"(range [1.6, 2.4], theory 2), |corr| {corr:.3f} (tol 0.1)",
    )
    assert ok, msg


def test_criterion_11_complex_gaussian_clt(clt_complex):
    var = np.diag(clt_complex.empirical_cov)
    ks = clt_complex.ks
    sigma_exact = clt_complex.theoretical_cov
    ok = (
        np.allclose(sigma_exact, np.eye(2), atol=1e-10)
        and all(k <= 0.05 for k in ks)
        and np.all((var >= 0.8) & (var <= 1.2))
    )
    msg = report(
        11, ok,
        f"KS {np.round(ks, 4).tolist()} (tol 0.05), variances {np.round(var, 3).tolist()} "
        f"(range [0.8, 1.2], theory 1)",
    )
    assert ok, msg


def test_criterion_12_universality_discriminator():
    law = get_entry_law("rademacher")
    cfg_diag = ModelConfig(N=256, n=256, law=law, m=1,
                           gamma_spec=diagonal_spike_spectrum(256))
    rep_diag = run_clt_experiment(cfg_diag, 1000, seed=0)
    var_diag = float(rep_diag.samples.var(ddof=1))

    cfg_toe = ModelConfig(N=256, n=256, law=law, m=1,
                          gamma_spec=ToeplitzSpec(rho=0.4))
    rep_toe = run_clt_experiment(cfg_toe, 1000, seed=0)
    var_toe = float(rep_toe.samples.var(ddof=1))

    ok = var_diag <= 0.3 and 1.6 <= var_toe <= 2.4
    msg = report(
        12, ok,
        f"rademacher: diagonal-spectrum var(L1) {var_diag:.4f} (tol 0.3, theory 0); "
        f"Toeplitz var(L1) {var_toe:.3f} (range [1.6, 2.4], theory 2)",
    )
    assert ok, msg


def _sweep_errors(R, seed=0):
    law = get_entry_law("real_gaussian")

    def make(N, n):
        return ModelConfig(N=N, n=n, law=law, m=1, gamma_spec=ToeplitzSpec(rho=0.4))

    rows = convergence_sweep(make, SWEEP_LADDER, R=R, seed=seed)
    return [abs(r.median - 1.0) for r in rows]


def test_criterion_13_convergence_sweep():
    errs = _sweep_errors(R=50)
    ok = all(a > b for a, b in zip(errs, errs[1:]))
    msg = report(
        13, ok,
        f"|median - 1| over N={tuple(s[0] for s in SWEEP_LADDER)}: "
        f"{np.round(errs, 5).tolist()} monotone={ok} (R=50, seed=0)",
    )
    assert ok, msg


def test_supplementary_13_signal_and_high_replication():
    # the deterministic center theta_1 - 1 is strictly monotone, and the
    # sweep is monotone once the median noise is pushed below the signal
    law = get_entry_law("real_gaussian")
    signal = []
    for N, n in SWEEP_LADDER:
        cfg = ModelConfig(N=N, n=n, law=law, m=1, gamma_spec=ToeplitzSpec(rho=0.4))
        signal.append(prepare_model(cfg).thetas[0] - 1.0)
    assert all(a > b > 0 for a, b in zip(signal, signal[1:]))
    errs = _sweep_errors(R=800)
    assert all(a > b for a, b in zip(errs, errs[1:]))
    print(f"criterion 13 supplement: theta_1 - 1 signal {np.round(signal, 5).tolist()}; "
          f"R=800 errors {np.round(errs, 5).tolist()} (monotone)")


def test_criterion_14_thread_determinism(tmp_path):
    args = ["clt", "--N", "256", "--n", "256", "--rho", "0.4", "--law", "real_gaussian",
            "--m", "2", "--R", "2000", "--seed", "0"]
    out1 = tmp_path / "threads1"
    out8 = tmp_path / "threads8"
    assert cli_main(args + ["--threads", "1", "--out", str(out1)]) == 0
    assert cli_main(args + ["--threads", "8", "--out", str(out8)]) == 0
    with open(f"{out1}_samples.csv", "rb") as fh:
        b1 = fh.read()
    with open(f"{out8}_samples.csv", "rb") as fh:
        b8 = fh.read()
    ok = b1 == b8
    msg = report(14, ok, f"--threads 1 vs 8 sample CSVs bit-identical: {ok} "
                         f"({len(b1)} bytes)")
    assert ok, msg
    r1 = json.loads(open(f"{out1}.json").read())
    r8 = json.loads(open(f"{out8}.json").read())
    assert r1["empirical_mean"] == r8["empirical_mean"]
