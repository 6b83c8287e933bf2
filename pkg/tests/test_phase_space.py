import math

import numpy as np
import pytest

from gtdkit.fundeq import SystemSpec, builtin, parse
from gtdkit.phase_space import (
    LegendreMap,
    PhasePoint,
    contact_volume_coefficient,
    contact_volume_expected,
    euler_residual,
    gibbs_duhem_residual,
    legendre_apply,
    legendre_invariance_residual,
    lift_point,
    phase_metric_at,
    theta_residual,
)

PI = math.pi

PRODUCT = SystemSpec(name="product", variables=("E1", "E2"), potential=parse("E1*E2"))


# -- lifting ------------------------------------------------------------------------


def test_lift_ideal_gas():
    spec = builtin("vdw", a=0.0, b=0.0)
    p = lift_point(spec, (0.0, 1.0))
    assert p.phi == pytest.approx(1.0, rel=1e-14)
    assert p.extensive == (0.0, 1.0)
    assert p.intensive[0] == pytest.approx(2 / 3, rel=1e-14)
    assert p.intensive[1] == pytest.approx(-2 / 3, rel=1e-14)


def test_lift_extremal_rn():
    p = lift_point(builtin("reissner_nordstrom"), (PI, 1.0))
    assert p.phi == pytest.approx(1.0, rel=1e-13)
    assert abs(p.intensive[0]) <= 1e-13  # T = 0
    assert p.intensive[1] == pytest.approx(1.0, rel=1e-13)  # phi = dM/dQ


def test_lift_product():
    p = lift_point(PRODUCT, (2.0, 3.0))
    assert (p.phi, p.extensive, p.intensive) == (6.0, (2.0, 3.0), (3.0, 2.0))


# -- first law ----------------------------------------------------------------------


def test_theta_residual_vanishes_by_construction():
    spec = builtin("vdw")
    assert theta_residual(spec, (0.5, 1.0), (1.0, 0.0)) == 0.0


def test_theta_residual_random_directions():
    spec = builtin("kerr_newman")
    rng = np.random.default_rng(5)
    for _ in range(20):
        point = rng.uniform([1, 0.1, 0.3], [10, 1.5, 1.5])
        v = rng.normal(size=3)
        assert abs(theta_residual(spec, point, v)) <= 1e-12 * max(1.0, np.linalg.norm(v))


def test_theta_residual_detects_perturbation():
    spec = builtin("vdw")
    point = (0.5, 1.0)
    lifted = lift_point(spec, point)
    delta = np.array([0.01, -0.02])
    perturbed = np.asarray(lifted.intensive) + delta
    v = np.array([1.0, 2.0])
    resid = theta_residual(spec, point, v, intensive=perturbed)
    assert resid == pytest.approx(-float(delta @ v), rel=1e-12)


def test_theta_residual_rejects_zero_direction():
    with pytest.raises(ValueError):
        theta_residual(builtin("vdw"), (0.5, 1.0), (0.0, 0.0))


# -- phase metric --------------------------------------------------------------------


def test_phase_metric_n1_assembly():
    g = phase_metric_at(PhasePoint(0.0, (1.0,), (1.0,))).components
    expected = np.array([[1.0, -1.0, 0.0], [-1.0, 1.0, 0.5], [0.0, 0.5, 0.0]])
    assert np.array_equal(g, expected)


def test_phase_metric_degenerate_on_null_trace():
    # E . I = 0 kills the second term: G = Theta x Theta has rank 1
    g = phase_metric_at(PhasePoint(2.0, (1.0, 1.0), (1.0, -1.0))).components
    assert np.linalg.matrix_rank(g) == 1


def test_phase_metric_exactly_symmetric():
    rng = np.random.default_rng(9)
    point = PhasePoint.from_coords(rng.uniform(-2, 2, 5))
    g = phase_metric_at(point).components
    assert np.array_equal(g, g.T)


def test_phase_metric_nondegenerate_off_hypersurface():
    rng = np.random.default_rng(10)
    for n in (1, 2, 3):
        point = PhasePoint.from_coords(rng.uniform(0.5, 2, 2 * n + 1))
        det = np.linalg.det(phase_metric_at(point).components)
        assert abs(det) > 1e-12


# -- Legendre maps -------------------------------------------------------------------


def test_identity_map_fixes_points():
    p = PhasePoint(1.0, (2.0, 3.0), (4.0, 5.0))
    assert legendre_apply(LegendreMap.identity(2), p) == p


def test_total_map_n1():
    p = legendre_apply(LegendreMap.total(1), PhasePoint(5.0, (2.0,), (3.0,)))
    assert (p.phi, p.extensive, p.intensive) == (-1.0, (-3.0,), (2.0,))


def test_total_map_involution_up_to_signs():
    p = PhasePoint(1.2, (0.7, -0.4), (2.0, 0.3))
    twice = legendre_apply(LegendreMap.total(2), legendre_apply(LegendreMap.total(2), p))
    assert twice.phi == pytest.approx(p.phi, rel=1e-14)
    assert np.allclose(twice.extensive, -np.asarray(p.extensive))
    assert np.allclose(twice.intensive, -np.asarray(p.intensive))


def test_identity_invariance_exact():
    rng = np.random.default_rng(1)
    for n in (1, 2, 3):
        point = PhasePoint.from_coords(rng.uniform(-2, 2, 2 * n + 1))
        assert legendre_invariance_residual(LegendreMap.identity(n), point) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_total_invariance(n):
    rng = np.random.default_rng(100 + n)
    worst = 0.0
    for _ in range(100):
        point = PhasePoint.from_coords(rng.uniform(-2, 2, 2 * n + 1))
        worst = max(worst, legendre_invariance_residual(LegendreMap.total(n), point))
    assert worst <= 1e-9


def test_partial_map_breaks_invariance():
    # measured, not asserted small: proper subsets do not preserve the
    # second term of the phase metric (see the package notes)
    rng = np.random.default_rng(42)
    residuals = [
        legendre_invariance_residual(
            LegendreMap.partial(2, [0]), PhasePoint.from_coords(rng.uniform(0.5, 2, 5))
        )
        for _ in range(20)
    ]
    assert max(residuals) > 1e-3


# -- Euler and Gibbs-Duhem --------------------------------------------------------------


def test_euler_product_degree_two():
    assert euler_residual(PRODUCT, (2.0, 3.0), (1.0, 1.0), 2.0) == 0.0


def test_euler_kerr_newman_weighted():
    spec = builtin("kerr_newman")
    rng = np.random.default_rng(2)
    for _ in range(20):
        point = rng.uniform([1, 0.1, 0.3], [10, 1.5, 1.5])
        assert abs(euler_residual(spec, point)) <= 1e-10


def test_euler_vdw_not_homogeneous():
    spec = builtin("vdw")
    assert abs(euler_residual(spec, (0.5, 1.0), (1.0, 1.0), 1.0)) > 1e-3


def test_gibbs_duhem_product():
    assert gibbs_duhem_residual(PRODUCT, (2.0, 3.0), (0.4, -1.1), (1.0, 1.0), 2.0) == 0.0


def test_gibbs_duhem_kerr_newman_weighted():
    spec = builtin("kerr_newman")
    rng = np.random.default_rng(3)
    for _ in range(20):
        point = rng.uniform([1, 0.1, 0.3], [10, 1.5, 1.5])
        v = rng.normal(size=3)
        assert abs(gibbs_duhem_residual(spec, point, v)) <= 1e-10


def test_gibbs_duhem_is_euler_derivative():
    # finite difference of euler_residual along v, Richardson-refined
    spec = builtin("vdw")
    point = np.array([0.6, 1.4])
    v = np.array([0.8, -0.5])
    weights, beta = (1.0, 1.0), 1.3

    def euler_at(eps):
        return euler_residual(spec, point + eps * v, weights, beta)

    def central(h):
        return (euler_at(h) - euler_at(-h)) / (2 * h)

    h = 1e-6
    refined = (4 * central(h / 2) - central(h)) / 3
    gd = gibbs_duhem_residual(spec, point, v, weights, beta)
    assert gd == pytest.approx(refined, rel=1e-9)


def test_weights_default_to_spec():
    spec = builtin("kerr_newman")
    point = (4.0, 0.7, 0.9)
    explicit = euler_residual(spec, point, (1.0, 1.0, 0.5), 0.5)
    assert euler_residual(spec, point) == explicit


def test_beta_required_when_unknown():
    with pytest.raises(ValueError, match="beta"):
        euler_residual(builtin("vdw"), (0.5, 1.0))


# -- contact volume -----------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_contact_volume_is_signed_factorial(n):
    rng = np.random.default_rng(n)
    expected = contact_volume_expected(n)
    assert abs(expected) == math.factorial(n)
    values = [
        contact_volume_coefficient(PhasePoint.from_coords(rng.uniform(-3, 3, 2 * n + 1)))
        for _ in range(10)
    ]
    for value in values:
        assert value == pytest.approx(expected, abs=1e-12)
    assert max(values) - min(values) <= 1e-12


def test_contact_volume_rejects_large_n():
    point = PhasePoint(0.0, (1.0,) * 4, (1.0,) * 4)
    with pytest.raises(ValueError, match="n <= 3"):
        contact_volume_coefficient(point)
