"""End-to-end acceptance criteria, each run at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from hdsnr.cli import main, run_moment_checks
from hdsnr.model import AR1, BumpSparse, Gaussian, GaussianIsotropic, HalfUniformHalfNormal
from hdsnr.simharness import SimulationConfig, ks_critical_value, normality_check, run_experiment
from hdsnr.uncertainty import Target, exact_covariance_identity, psi_identity, sandwich_covariance
from hdsnr.wishart import MomentId


def record(name, ok, detail):
    ACCEPTANCE_LINES.append((name, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


def isotropic(n, d, R, seed, estimators=("identity",)):
    cfg = SimulationConfig(n=n, d=d, sigma2=1.0, design=GaussianIsotropic(), beta_pattern=HalfUniformHalfNormal(1.0),
                           estimators=estimators, replicates=R, master_seed=seed)
    return run_experiment(cfg, threads=1)


def column(res, estimator, key):
    return np.array([r[key] for r in res.rows if r["estimator"] == estimator], dtype=float)


def sd_and_se(x):
    # standard deviation and its delta-method standard error from the fourth central moment
    v = x.var(ddof=1)
    m4 = np.mean((x - x.mean()) ** 4)
    return math.sqrt(v), math.sqrt((m4 - v**2) / x.size) / (2 * math.sqrt(v))


def test_01_predicted_standard_errors():
    expected = {(500, 1000): (0.2000, 0.2366, 0.4195), (1000, 1000): (0.1095, 0.1414, 0.2366)}
    worst = 0.0
    for (n, d), want in expected.items():
        av = psi_identity(1.0, 1.0, n, d)
        got = [av.se(t, n) for t in (Target.SIGMA2, Target.TAU2, Target.SNR)]
        worst = max(worst, max(abs(g - w) for g, w in zip(got, want)))
    record("1 predicted SEs", worst <= 5e-5, f"max |error| = {worst:.2e} (tol 5e-5)")


def test_02_unbiasedness():
    R = 2000
    res = isotropic(250, 250, R, seed=2)
    parts = []
    ok = True
    for key in ("sigma2", "tau2"):
        x = column(res, "identity", key)
        z = (x.mean() - 1.0) / (x.std(ddof=1) / math.sqrt(R))
        ok &= abs(z) < 3
        parts.append(f"{key} mean {x.mean():.4f} (z = {z:+.2f})")
    record("2 unbiasedness", ok, ", ".join(parts) + " (|z| < 3)")


@pytest.mark.parametrize("n,d", [(40, 20), (40, 80)])
def test_03_exact_variance(n, d):
    R = 5000
    res = isotropic(n, d, R, seed=3 + d)
    s, t = column(res, "identity", "sigma2"), column(res, "identity", "tau2")
    exact = exact_covariance_identity(1.0, 1.0, n, d)
    cs, ct = s - s.mean(), t - t.mean()
    checks = {"var_sigma2": (cs * cs, exact.var_sigma2), "var_tau2": (ct * ct, exact.var_tau2),
              "cov": (cs * ct, exact.cov_sigma2_tau2)}
    zs = {}
    for name, (prod, want) in checks.items():
        # products of centred values: their mean estimates the (co)variance, their spread gives its SE
        zs[name] = (prod.mean() * R / (R - 1) - want) / (prod.std(ddof=1) / math.sqrt(R))
    sandwich = np.max(np.abs(sandwich_covariance(1.0, 1.0, n, d) - exact.matrix()) / np.abs(exact.matrix()))
    ok = all(abs(z) < 4 for z in zs.values()) and sandwich < 1e-10
    detail = ", ".join(f"{k} z = {v:+.2f}" for k, v in zs.items()) + f", sandwich rel err {sandwich:.1e}"
    record(f"3 exact variance (n={n}, d={d})", ok, detail)


def test_04_wishart_oracle():
    results = run_moment_checks(["diag", "random"], list(MomentId), draws=100_000, seed=4)
    worst_z = max(abs(r["z"]) for r in results)
    worst_rel = max(abs(r["letac"] - r["closed_form"]) / abs(r["closed_form"]) for r in results)
    ok = worst_z <= 4 and worst_rel <= 1e-8 and len(results) == 20
    record("4 Wishart oracle", ok, f"{len(results)} checks, max |z| = {worst_z:.2f} (<= 4), "
                                   f"max letac rel err = {worst_rel:.1e} (<= 1e-8)")


def test_05_crossover():
    R = 500
    out = {}
    for d in (125, 225):
        res = isotropic(250, d, R, seed=5 + d, estimators=("identity", "ols"))
        sd_i, se_i = sd_and_se(column(res, "identity", "sigma2"))
        sd_o, se_o = sd_and_se(column(res, "ols", "sigma2"))
        out[d] = (sd_o - sd_i, math.hypot(se_i, se_o), sd_i, sd_o)
    g125, s125 = out[125][:2]
    g225, s225 = out[225][:2]
    ok = g125 < -2 * s125 and g225 > 2 * s225
    detail = "; ".join(f"d={d}: SD ols {v[3]:.4f} vs identity {v[2]:.4f} (gap {v[0] / v[1]:+.1f} SE)"
                       for d, v in out.items())
    record("5 OLS crossover", ok, detail)


def test_06_spectral_bias_law():
    R = 500
    cfg = SimulationConfig(n=240, d=300, sigma2=1.0, design=Gaussian(AR1(0.5)), beta_pattern=BumpSparse(5, 25, 3.0),
                           estimators=("oracle", "spectral"), replicates=R, master_seed=6)
    res = run_experiment(cfg, threads=1)
    spec, orc = column(res, "spectral", "sigma2"), column(res, "oracle", "sigma2")
    predicted = 1.0 + res.summary.spectral_bias
    z_spec = (spec.mean() - predicted) / (spec.std(ddof=1) / math.sqrt(R))
    z_orc = (orc.mean() - 1.0) / (orc.std(ddof=1) / math.sqrt(R))
    ok = abs(z_spec) < 3 and abs(z_orc) < 3
    record("6 spectral bias law", ok, f"spectral mean {spec.mean():.4f} vs predicted {predicted:.4f} "
                                      f"(z = {z_spec:+.2f}); oracle mean {orc.mean():.4f} (z = {z_orc:+.2f})")


def test_07_normality():
    R, n = 500, 500
    res = isotropic(n, n, R, seed=7)
    psi1 = math.sqrt(psi_identity(1.0, 1.0, n, n).psi1_sq)
    ks = normality_check(math.sqrt(n) * (column(res, "identity", "sigma2") - 1.0) / psi1)
    crit = ks_critical_value(R)
    record("7 normality", ks < 1.63 / math.sqrt(R), f"KS = {ks:.4f} < {1.63 / math.sqrt(R):.4f} "
                                                   f"(exact 1% value {crit:.4f})")


def test_08_coverage():
    R = 2000
    res = isotropic(300, 300, R, seed=8)
    covered = [r["covered_sigma2"] for r in res.rows]
    rate = float(np.mean(covered))
    record("8 CI coverage", 0.93 <= rate <= 0.97 and len(covered) == R, f"coverage {rate:.4f} in [0.93, 0.97]")


def test_09_determinism(tmp_path, capsys):
    toml = tmp_path / "c.toml"
    toml.write_text('n = 60\nd = 80\nsigma2 = 1.0\nreplicates = 40\nmaster_seed = 9\n'
                    'estimators = ["identity", "oracle", "ar1", "spectral", "ols"]\n'
                    '[design]\nkind = "gaussian"\n[design.covariance]\nkind = "ar1"\nalpha = 0.5\n'
                    '[beta_pattern]\nkind = "bump_sparse"\nbumps = 2\nspacing = 20\ntarget_tau1_sq = 2.0\n')
    codes = [main(["simulate", "--config", str(toml), "--out-dir", str(tmp_path / f"t{t}"), "--threads", str(t)])
             for t in (1, 8)]
    capsys.readouterr()
    same = (tmp_path / "t1" / "raw.csv").read_bytes() == (tmp_path / "t8" / "raw.csv").read_bytes()
    record("9 determinism", codes == [0, 0] and same, f"exit codes {codes}, raw.csv byte-identical: {same}")
