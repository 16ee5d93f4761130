import numpy as np
import pytest
from scipy import integrate, stats

from rmts.ensembles import MatrixDistribution, NoiseDistribution, RngStream
from rmts.rmde import (RmexpConfig, inhomogeneous_from_draws, inhomogeneous_solution_mc,
                       rmde_draws, rmexp_moment_check, rmexp_sample, rmexp_samples,
                       rmexp_scalar_density, scalar_log_samples)


def scalar_law(mean=0.0, sd=1.0):
    return MatrixDistribution(np.array([[mean]]), np.array([[sd]]))


def test_zero_law_gives_identity():
    cfg = RmexpConfig(MatrixDistribution.deterministic(np.zeros((3, 3))), steps=50)
    assert np.array_equal(rmexp_sample(cfg), np.eye(3))


def test_deterministic_scalar_exponential():
    cfg = RmexpConfig(scalar_law(0.7, 0.0), horizon=1.5, steps=1_000_000)
    logs, positive = scalar_log_samples(cfg, workers=1)
    assert positive.all()
    assert np.exp(logs[0]) == pytest.approx(np.exp(1.05), rel=1e-4)


def test_deterministic_matrix_exponential():
    from scipy.linalg import expm
    M = np.array([[0.1, 0.4], [-0.3, 0.2]])
    cfg = RmexpConfig(MatrixDistribution.deterministic(M), horizon=2.0, steps=20_000)
    assert np.allclose(rmexp_sample(cfg), expm(2.0 * M), rtol=1e-3)


def test_scalar_products_mostly_positive():
    cfg = RmexpConfig(scalar_law(), horizon=1.0, steps=1000, paths=2000, seed=3)
    _, positive = scalar_log_samples(cfg, workers=1)
    assert positive.mean() > 0.99


def test_density_checks():
    T = 0.8
    median = np.exp(-T * T / 2)
    assert rmexp_scalar_density(median, T) == pytest.approx(
        np.exp(T * T / 2) / (np.sqrt(2 * np.pi) * T), rel=1e-14)
    total = integrate.quad(lambda y: rmexp_scalar_density(y, T), 0, np.inf, limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-6)
    half = integrate.quad(lambda y: rmexp_scalar_density(y, T), 0, median, limit=200)[0]
    assert half == pytest.approx(0.5, abs=1e-8)
    y = np.linspace(0.1, 4, 9)
    assert np.allclose(rmexp_scalar_density(y, T),
                       stats.lognorm.pdf(y, s=T, scale=np.exp(-T * T / 2)), rtol=1e-12)
    with pytest.raises(ValueError):
        rmexp_scalar_density(0.0, T)


def test_moment_check_scalar():
    cfg = RmexpConfig(scalar_law(), horizon=1.0, steps=2000, paths=100_000, seed=1)
    chk = rmexp_moment_check(cfg, workers=1)
    assert abs(chk.mean_log + 0.5) <= 0.02
    assert abs(chk.std_log - 1.0) <= 0.02


def test_small_horizon_and_zero_law():
    cfg = RmexpConfig(scalar_law(), horizon=1e-4, steps=100, paths=1000, seed=2)
    logs, _ = scalar_log_samples(cfg, workers=1)
    assert np.max(np.abs(logs)) < 1e-2
    zero = RmexpConfig(scalar_law(0.0, 0.0), steps=100, paths=10)
    logs, _ = scalar_log_samples(zero, workers=1)
    assert np.array_equal(logs, np.zeros(10))


def test_worker_count_does_not_change_results():
    cfg = RmexpConfig(scalar_law(), steps=50, paths=25_000, seed=9)
    a = scalar_log_samples(cfg, workers=1)[0]
    b = scalar_log_samples(cfg, workers=3)[0]
    assert a.tobytes() == b.tobytes()
    law = MatrixDistribution(np.zeros((2, 2)), np.ones((2, 2)))
    cfg2 = RmexpConfig(law, steps=20, paths=20_001, seed=4)
    assert rmexp_samples(cfg2, workers=1).tobytes() == rmexp_samples(cfg2, workers=2).tobytes()


def test_path_determinism():
    cfg = RmexpConfig(MatrixDistribution(np.zeros((2, 2)), np.ones((2, 2))), steps=100, seed=5)
    assert rmexp_sample(cfg).tobytes() == rmexp_sample(cfg).tobytes()


def test_inhomogeneous_reductions():
    law = MatrixDistribution(0.1 * np.ones((2, 2)), 0.5 * np.ones((2, 2)))
    cfg = RmexpConfig(law, steps=100, seed=6)
    x0 = np.array([1.0, -1.0])
    zero_noise = NoiseDistribution.deterministic(np.zeros(2))
    assert np.array_equal(inhomogeneous_solution_mc(cfg, zero_noise, x0),
                          rmexp_sample(cfg) @ x0)
    c = np.array([0.3, -2.0])
    flat = RmexpConfig(MatrixDistribution.deterministic(np.zeros((2, 2))), horizon=2.0, steps=100)
    got = inhomogeneous_solution_mc(flat, NoiseDistribution.deterministic(c), x0)
    assert np.allclose(got, x0 + 2.0 * c, atol=1e-10)


def test_inhomogeneous_matches_iteration():
    law = MatrixDistribution(0.2 * np.eye(2), 0.5 * np.ones((2, 2)))
    noise = NoiseDistribution(np.ones(2), np.full(2, 0.3))
    cfg = RmexpConfig(law, steps=100, seed=12)
    draws = rmde_draws(cfg, RngStream(12), noise)
    x = np.array([0.5, 2.0])
    x0 = x.copy()
    for F, c in zip(draws.factors, draws.increments):
        x = F @ x + c
    assert np.max(np.abs(inhomogeneous_from_draws(draws, x0) - x)) <= 1e-8


def test_literal_scaling_collapses_to_identity():
    cfg = RmexpConfig(scalar_law(), steps=5000, paths=2000, seed=1, scaling="literal")
    logs, _ = scalar_log_samples(cfg, workers=1)
    assert np.std(logs) < 0.05


def _ks(n, paths, seed):
    return rmexp_moment_check(RmexpConfig(scalar_law(), steps=n, paths=paths, seed=seed),
                              workers=1).ks_distance


def test_ks_shrinks_with_steps():
    # At 10^4 paths the KS sampling floor (~0.009) hides the n=100 -> 1000
    # bias (~0.005 -> ~0.002), so that step is checked with 4 * 10^5 paths.
    med = {n: np.median([_ks(n, 10_000, s) for s in range(5)]) for n in (10, 100, 1000)}
    assert med[10] > med[100] and med[10] > med[1000]
    assert _ks(100, 400_000, 1) > _ks(1000, 400_000, 1)


def test_bad_config():
    with pytest.raises(ValueError):
        RmexpConfig(scalar_law(), horizon=0)
    with pytest.raises(ValueError):
        RmexpConfig(scalar_law(), scaling="other")
