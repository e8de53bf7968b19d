import math

import numpy as np
import pytest

from pskprecoding.model import (
    complex_normal,
    generate_channel,
    grad_f,
    grad_g,
    objective_f,
    objective_g,
    receive,
)
from pskprecoding.solvers import symbols_from_index


def _instance(rng, n, m):
    h = generate_channel(n, m, rng)
    s = symbols_from_index(rng.integers(4 ** m), m)
    alpha = rng.uniform(0.5, 5.0)
    return h, s, alpha


def test_channel_shape_and_precondition():
    assert generate_channel(2, 1, 0).shape == (1, 2)
    assert generate_channel(32, 4, 0).shape == (4, 32)
    with pytest.raises(ValueError):
        generate_channel(4, 4, 0)
    with pytest.raises(ValueError):
        generate_channel(4, 0, 0)


def test_channel_deterministic_per_seed():
    np.testing.assert_array_equal(generate_channel(8, 2, 5), generate_channel(8, 2, 5))
    assert not np.array_equal(generate_channel(8, 2, 5), generate_channel(8, 2, 6))


def test_channel_moments():
    h = np.concatenate([generate_channel(32, 4, [3, k]).ravel() for k in range(800)])
    assert h.size >= 1e5
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, rel=0.02)
    assert abs(np.mean(h)) < 0.01
    # circular symmetry: E[h^2] = 0, equal real/imag power
    assert abs(np.mean(h ** 2)) < 0.01
    assert np.var(h.real) == pytest.approx(0.5, rel=0.02)


def test_receive_noiseless():
    assert receive(np.eye(1), np.array([1.0]), e_tx=1.0)[0] == pytest.approx(1.0)
    assert receive(np.array([[1.0, 1.0]]), np.array([1.0, -1.0]), e_tx=7.3)[0] == pytest.approx(0.0)


def test_receive_scaling():
    h = generate_channel(8, 2, 1)
    x = np.exp(1j * np.arange(8.0))
    np.testing.assert_allclose(receive(h, x, 8.0 * 4), 2 * h @ x)


def test_receive_noise_variance():
    h = np.array([[0.5, 0.5j]])
    x = np.array([1, 1j])
    r = receive(h, np.tile(x[:, None], (1, 100_000)), e_tx=2.0, noise=np.random.default_rng(4))
    assert np.var(r[0]) == pytest.approx(1.0, rel=0.02)
    assert np.mean(r[0]) == pytest.approx(complex((h @ x)[0]), abs=0.02)


def test_receive_dimension_mismatch():
    with pytest.raises(ValueError):
        receive(np.ones((2, 3)), np.ones(4), 1.0)


def test_objective_g_examples():
    h = np.array([[1.0 + 0j]])
    s = np.array([1.0 + 0j])
    assert objective_g(np.array([0.0]), s, h, 1.0) == pytest.approx(0.0)
    assert objective_g(np.array([0.0]), s, h, 2.0) == pytest.approx(1.0)
    # |1 - j|^2
    assert objective_g(np.array([np.pi / 2]), s, h, 1.0) == pytest.approx(2.0)


def _fd_phase_grad(phi, s, h, alpha, step=1e-5):
    out = np.empty_like(phi)
    for n in range(len(phi)):
        e = np.zeros_like(phi)
        e[n] = step
        out[n] = (objective_g(phi + e, s, h, alpha) - objective_g(phi - e, s, h, alpha)) / (2 * step)
    return out


def test_grad_g_examples():
    h = np.array([[1.0 + 0j]])
    s = np.array([1.0 + 0j])
    assert grad_g(np.array([0.0]), s, h, 1.0)[0] == pytest.approx(0.0, abs=1e-15)
    # g = 2 - 2 cos(phi), g'(pi/2) = 2
    assert grad_g(np.array([np.pi / 2]), s, h, 1.0)[0] == pytest.approx(2.0)
    assert _fd_phase_grad(np.array([np.pi / 2]), s, h, 1.0)[0] == pytest.approx(2.0, rel=1e-8)
    assert grad_g(np.array([np.pi]), s, h, 1.0)[0] == pytest.approx(0.0, abs=1e-12)


def test_grad_g_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 17))
        m = int(rng.integers(1, min(4, n - 1) + 1))
        h, s, alpha = _instance(rng, n, m)
        phi = rng.uniform(-np.pi, np.pi, n)
        g = grad_g(phi, s, h, alpha)
        fd = _fd_phase_grad(phi, s, h, alpha)
        assert np.linalg.norm(g - fd) / np.linalg.norm(g) < 1e-6


def test_objective_f_examples():
    rng = np.random.default_rng(2)
    h, s, alpha = _instance(rng, 6, 2)
    x = np.linalg.lstsq(h, alpha * s, rcond=None)[0]
    assert objective_f(x, s, h, alpha) == pytest.approx(0.0, abs=1e-20)
    assert objective_f(np.zeros(6), s, h, alpha) == pytest.approx(alpha ** 2 * 2)


def test_f_equals_g_on_unit_circle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        h, s, alpha = _instance(rng, 16, 4)
        phi = rng.uniform(-10, 10, 16)
        assert objective_f(np.exp(1j * phi), s, h, alpha) == pytest.approx(objective_g(phi, s, h, alpha), rel=1e-12)


def test_grad_f_examples():
    h = np.array([[1.0 + 0j]])
    s = np.array([1.0 + 0j])
    assert grad_f(np.array([1.0 + 0j]), s, h, 1.0)[0] == pytest.approx(0.0)
    assert grad_f(np.array([1j]), s, h, 1.0)[0] == pytest.approx(-1 - 1j)
    rng = np.random.default_rng(5)
    h, s, alpha = _instance(rng, 8, 3)
    x = complex_normal(rng, 8)
    np.testing.assert_allclose(grad_f(2 * x, s, h, alpha) - grad_f(x, s, h, alpha), h.T @ h.conj() @ x.conj())


def _fd_complex_grad(x, s, h, alpha, step=1e-5):
    """Real gradient df/dRe + 1j df/dIm by central differences."""
    out = np.empty_like(x)
    for n in range(len(x)):
        e = np.zeros_like(x)
        e[n] = step
        d_re = (objective_f(x + e, s, h, alpha) - objective_f(x - e, s, h, alpha)) / (2 * step)
        d_im = (objective_f(x + 1j * e, s, h, alpha) - objective_f(x - 1j * e, s, h, alpha)) / (2 * step)
        out[n] = d_re + 1j * d_im
    return out


def test_grad_f_finite_differences():
    rng = np.random.default_rng(12)
    for _ in range(100):
        n = int(rng.integers(2, 17))
        m = int(rng.integers(1, min(4, n - 1) + 1))
        h, s, alpha = _instance(rng, n, m)
        x = complex_normal(rng, n)
        # Wirtinger convention: real gradient = 2 * conj(df/dx)
        g = 2 * np.conj(grad_f(x, s, h, alpha))
        fd = _fd_complex_grad(x, s, h, alpha)
        assert np.linalg.norm(g - fd) / np.linalg.norm(g) < 1e-6


def test_grad_f_descent_direction():
    h = np.array([[1.0 + 0j]])
    s = np.array([1.0 + 0j])
    x = np.array([1j])
    step = x - 0.1 * np.conj(grad_f(x, s, h, 1.0))
    assert objective_f(step, s, h, 1.0) < objective_f(x, s, h, 1.0)


def test_rotation_invariance():
    rng = np.random.default_rng(6)
    for _ in range(20):
        h, s, alpha = _instance(rng, 10, 3)
        x = complex_normal(rng, 10)
        rot = np.exp(1j * rng.uniform(0, 2 * np.pi))
        assert objective_f(rot * x, rot * s, h, alpha) == pytest.approx(objective_f(x, s, h, alpha), rel=1e-12)


def test_batched_objectives_match_columns():
    rng = np.random.default_rng(7)
    h = generate_channel(8, 2, rng)
    s = symbols_from_index(np.arange(16), 2)
    phi = rng.uniform(-3, 3, (8, 16))
    g = objective_g(phi, s, h, 2.0)
    gr = grad_g(phi, s, h, 2.0)
    for k in range(16):
        assert g[k] == pytest.approx(objective_g(phi[:, k], s[:, k], h, 2.0))
        np.testing.assert_allclose(gr[:, k], grad_g(phi[:, k], s[:, k], h, 2.0))


def test_wishart_trace_identity():
    draws = [np.trace(np.linalg.inv(h @ h.conj().T)).real for h in (generate_channel(32, 4, [9, k]) for k in range(2000))]
    assert np.mean(draws) == pytest.approx(4 / 28, rel=0.05)


def test_complex_normal_shape():
    assert complex_normal(np.random.default_rng(0), (3, 2)).shape == (3, 2)
    assert math.isfinite(abs(complex_normal(0, 1)[0]))
