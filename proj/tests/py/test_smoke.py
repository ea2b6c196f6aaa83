import math

import numpy as np
import pytest

didguard = pytest.importorskip("didguard")


def test_severity_and_kappa():
    assert didguard.severity(np.array([3.0, 4.0]), 2.0) == pytest.approx(math.sqrt(12.5))
    assert didguard.severity(np.array([1.0, -2.0]), math.inf) == 2.0
    assert didguard.kappa(4, 1.0) == 4.0
    assert didguard.kappa(4, math.inf) == 2.5
    assert didguard.kappa(4, 2.0) == pytest.approx(math.sqrt(7.5))
    uniform = np.full(4, 0.25)
    assert didguard.kappa_lin(uniform, 2.0) == pytest.approx(didguard.kappa(4, 2.0))


def test_worst_case_attains_bound():
    r = didguard.worst_case_post_violations(6, 4, 2.0, 0.5)
    assert didguard.severity(r, 2.0) == pytest.approx(0.5)
    gap = np.cumsum(r).sum() / len(r)
    assert gap == pytest.approx(didguard.kappa(len(r), 2.0) * 0.5)


def test_critical_value():
    assert didguard.critical_value(0.05, np.zeros((2, 2)), treatment_time=3) == 0.0
    sigma = np.eye(2)
    base = didguard.critical_value(0.05, sigma, treatment_time=3, seed=7, mc_draws=2000)
    scaled = didguard.critical_value(0.05, 4 * sigma, treatment_time=3, seed=7, mc_draws=2000)
    assert scaled == pytest.approx(2 * base)
    assert base > 0


def test_normal_quantile():
    assert didguard.normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-5)


def test_pretest_and_interval():
    values = np.array([0.1, -0.2, 1.5, 2.0])
    cov = 0.04 * np.eye(4)
    pre = didguard.pretest(values, cov, total_periods=5, treatment_time=4,
                           threshold_M=2.0, p=math.inf)
    assert pre["phi"] == 0
    assert pre["s_pre_hat"] == pytest.approx(0.2)

    report = didguard.confidence_interval(values, cov, total_periods=5, treatment_time=4,
                                          threshold_M=2.0, p=math.inf, seed=3,
                                          effective_n=500)
    assert report["point"] == pytest.approx(1.75)
    assert report["half_width"] == pytest.approx(
        report["bias_component"] + report["noise_component"])
    assert report["lower"] < report["point"] < report["upper"]
    assert report["conditionally_valid"]


def test_analyze_csv(tmp_path):
    rows = ["time,treated,outcome"]
    control = {1: 1.0, 2: 2.0, 3: 3.0}
    treated = {1: 3.0, 2: 6.0, 3: 11.0}
    for t in (1, 2, 3):
        for delta in (-0.5, 0.5):
            rows.append(f"{t},0,{control[t] + delta}")
            rows.append(f"{t},1,{treated[t] + delta}")
    path = tmp_path / "hand.csv"
    path.write_text("\n".join(rows) + "\n")

    out = didguard.analyze_csv(str(path), treatment_time=3, threshold_M=10.0)
    assert np.allclose(out["theta"], [2.0, 4.0])
    assert out["interval"]["pretest"]["phi"] == 0
    assert out["interval"]["point"] == pytest.approx(4.0)


def test_rejection_curve_is_deterministic():
    kwargs = dict(threshold_M=2.0, n_per_cell=50, replications=200, master_seed=5, threads=2)
    a = didguard.simulate_rejection_curve([1.5, 2.5], **kwargs)
    b = didguard.simulate_rejection_curve([1.5, 2.5], **kwargs)
    assert [r["rejection_rate"] for r in a] == [r["rejection_rate"] for r in b]
    assert a[0]["rejection_rate"] < 0.2
    assert a[1]["rejection_rate"] > 0.8
