import math

import numpy as np
import pytest

from rgwalk.cli import gauge_check
from rgwalk.errors import ConfigurationError, SingularParameterError
from rgwalk.gauge import (
    AngleField,
    GaugeField,
    Potential2,
    discrete_ds,
    discrete_dt,
    electric_field,
    electric_field_time,
    gauge_transform,
    metric_from_theta,
    potential_from_angles,
    potential_from_field,
    transform_state,
)
from rgwalk.lattice import CircleGrid
from rgwalk.walk import SpinorField, coin_matrix_field, step_wavefunction_extended


def random_angles(rng, T, N):
    return AngleField(
        np.pi / 4 + rng.uniform(-0.5, 0.5, (T, N)),
        np.pi / 2 + rng.uniform(-0.5, 0.5, (T, N)),
        rng.uniform(-0.5, 0.5, (T, N)),
        rng.uniform(0, 2 * np.pi, (T, N)),
    )


def coins(a, j):
    return coin_matrix_field(a.theta[j], a.xi[j], a.zeta[j], a.alpha[j])


def test_metric_examples():
    assert metric_from_theta(0.0) == (1.0, -1.0)
    assert np.allclose(metric_from_theta(math.pi / 4), (1, -2))
    assert np.allclose(metric_from_theta(math.pi / 3), (1, -4))
    g00, g11 = metric_from_theta(np.array([0.0, math.pi / 3]))
    assert np.allclose(g11, [-1, -4])
    with pytest.raises(SingularParameterError):
        metric_from_theta(math.pi / 2)


def test_potential_from_angles_examples():
    pot = potential_from_angles(np.zeros(4))
    assert np.all(pot.V == math.pi / 2) and np.all(pot.A == 0)
    xi = 0.1 * np.arange(6)
    assert np.allclose(potential_from_angles(xi).A[:, 0], -0.1 * np.arange(6))
    assert potential_from_angles(xi, M=3).A.shape == (6, 7)


def test_time_only_field(rng):
    xi = rng.normal(size=20)
    assert np.allclose(electric_field_time(xi), -(xi[1:] - xi[:-1]), atol=1e-15)


def test_general_potential_reduces_to_time_only(rng):
    xi = rng.normal(size=12)
    a = AngleField.from_fluctuations(xi, np.zeros(12), 4)
    E = electric_field(potential_from_field(a))
    assert np.allclose(E, -(xi[1:] - xi[:-1])[:, None], atol=1e-14)


def test_zero_phase_is_identity(rng):
    a = random_angles(rng, 5, 9)
    b = gauge_transform(a, GaugeField(np.zeros((6, 9))))
    for name in ("theta", "xi", "zeta", "alpha"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_linear_phase():
    c = 0.3
    m = np.arange(-6, 7, dtype=float)
    phi = GaugeField(np.tile(c * m, (4, 1)))
    inner = slice(1, -1)
    assert np.allclose(phi.delta[:, inner], c)
    assert np.allclose(phi.sigma[:, inner], 0, atol=1e-15)


def test_transform_shape_checked(rng):
    a = random_angles(rng, 5, 9)
    with pytest.raises(ConfigurationError):
        gauge_transform(a, GaugeField(np.zeros((5, 9))))
    with pytest.raises(ConfigurationError):
        GaugeField(np.zeros(9))


def test_ds_examples():
    assert np.all(discrete_ds(np.ones((3, 9))) == 0)
    m = np.tile(np.arange(-4, 5, dtype=float), (2, 1))
    assert np.allclose(discrete_ds(m)[:, 1:-1], 1)
    # ((m+1)^2 - (m-1)^2) / 2 = 2m
    assert np.allclose(discrete_ds(m**2)[:, 1:-1], 2 * m[:, 1:-1])


def test_dt_examples():
    assert np.all(discrete_dt(np.ones((3, 9))) == 0)
    j = np.tile(np.arange(4.0)[:, None], (1, 9))
    assert np.allclose(discrete_dt(j), 1)
    m = np.tile(np.arange(-4, 5, dtype=float), (3, 1))
    assert np.allclose(discrete_dt(m)[:, 1:-1], 0)
    assert discrete_dt(m).shape == (2, 9)
    with pytest.raises(ConfigurationError):
        discrete_dt(np.ones((1, 9)))


def test_constant_potentials_zero_field():
    E = electric_field(Potential2(np.full((4, 7), 2.0), np.full((4, 7), -1.0)))
    assert np.all(E == 0)
    with pytest.raises(ConfigurationError):
        electric_field(Potential2(np.ones((1, 7)), np.ones((1, 7))))


@pytest.mark.parametrize("M,T", [(8, 8), (32, 32), (64, 64)])
def test_field_invariance(rng, M, T):
    N = 2 * M + 1
    a = random_angles(rng, T, N)
    E0 = electric_field(potential_from_field(a))
    for _ in range(5):
        phi = GaugeField(rng.uniform(-np.pi, np.pi, (T + 1, N)))
        E1 = electric_field(potential_from_field(gauge_transform(a, phi)))
        assert np.abs(E1 - E0).max() <= 1e-12


def test_state_covariance(rng):
    M, T = 16, 16
    g = CircleGrid(M)
    a = random_angles(rng, T, g.size)
    phi = GaugeField(rng.uniform(-np.pi, np.pi, (T + 1, g.size)))
    b = gauge_transform(a, phi)
    psi = SpinorField.default(g)
    psi_t = SpinorField(g, transform_state(psi.psi, phi, 0))
    for j in range(T):
        psi = step_wavefunction_extended(psi, coins(a, j))
        psi_t = step_wavefunction_extended(psi_t, coins(b, j))
        assert np.abs(psi_t.psi - transform_state(psi.psi, phi, j + 1)).max() <= 1e-12
        dN = np.sum(np.abs(psi_t.psi) ** 2, axis=0) - np.sum(np.abs(psi.psi) ** 2, axis=0)
        assert np.abs(dN).max() <= 1e-12


def test_gauge_check_report():
    rep = gauge_check(8, 8, 3, seed=1)
    assert rep["max_dE"] <= 1e-12 and rep["max_dN"] <= 1e-12


def fields_on_grid(Mx, V, A):
    N = 2 * Mx + 1
    h = 2 * np.pi / N
    x = np.arange(-Mx, Mx + 1) * h
    t = np.arange(int(1 / h) + 2) * h
    tt, xx = np.meshgrid(t, x, indexing="ij")
    return h, tt[:-1], xx[:-1], electric_field(Potential2(V(tt, xx), A(tt, xx))) / h


def test_continuum_limit_first_order():
    V = lambda t, x: np.sin(x) * np.cos(0.7 * t)
    A = lambda t, x: np.cos(2 * x + 0.3 * t)
    E = lambda t, x: -np.cos(x) * np.cos(0.7 * t) - 0.3 * np.sin(2 * x + 0.3 * t)
    # leading defect: (h/2) (d_t^2 - d_x^2) A
    wave = lambda t, x: (4 - 0.09) * np.cos(2 * x + 0.3 * t) / 2
    errs = []
    for Mx in (100, 200, 400):
        h, t, x, Ed = fields_on_grid(Mx, V, A)
        errs.append(np.abs(Ed - E(t, x)).max())
        # the remainder after the leading defect is second order
        assert np.abs(Ed - E(t, x) - h * wave(t, x)).max() <= 5 * h**2
    assert 1.9 <= errs[0] / errs[1] <= 2.1 and 1.9 <= errs[1] / errs[2] <= 2.1


def test_continuum_limit_second_order_for_wave_potentials():
    V = lambda t, x: np.sin(x) * np.cos(0.7 * t)
    A = lambda t, x: np.sin(x - t)
    E = lambda t, x: -np.cos(x) * np.cos(0.7 * t) - np.cos(x - t)
    errs = []
    for Mx in (100, 200, 400):
        h, t, x, Ed = fields_on_grid(Mx, V, A)
        errs.append(np.abs(Ed - E(t, x)).max())
    assert 3.5 <= errs[0] / errs[1] <= 4.5 and 3.5 <= errs[1] / errs[2] <= 4.5
