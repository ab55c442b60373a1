import numpy as np
import pytest
from scipy.integrate import quad

from gibbscert import (
    BoundaryCondition,
    InteractionMatrix,
    NotPositiveDefiniteError,
    QuadratureConfig,
    RefinementError,
    gaussian_covariance,
    gaussian_moments,
    golden_lookup,
    golden_store,
    make_box,
    quadratic_potential,
    quadrature_moments,
    quartic_potential,
    uniform_spec,
    zero_potential,
)

GOLDEN = __file__.rsplit("/", 1)[0] + "/data/golden_oracle.json"


def single_site_spec(potential, M11=1.0, b=0.0, beta=1.0):
    box = make_box(1, (0,), (0,))
    M = InteractionMatrix(box, np.array([M11]), {}, M11)
    return uniform_spec(box, potential, M, b=b, beta=beta)


def two_site_gaussian(coupling=-0.2, b=0.0):
    box = make_box(1, (0,), (1,))
    M = InteractionMatrix(box, np.ones(2), {((0,), (1,)): coupling}, 0.8)
    return uniform_spec(box, zero_potential(), M, b=b)


# ------------------------------------------------------------ gaussian oracle

def test_gaussian_single_site_unit_variance():
    mean, cov = gaussian_moments(single_site_spec(zero_potential()))
    assert abs(mean[0]) < 1e-14
    assert cov[0, 0] == pytest.approx(1.0, abs=1e-10)


def test_gaussian_two_site_hand_value():
    _, cov = gaussian_moments(two_site_gaussian())
    assert cov[0, 1] == pytest.approx(0.2 / 0.96, abs=1e-12)
    assert cov[0, 0] == pytest.approx(1.0 / 0.96, abs=1e-12)


def test_gaussian_three_chain_hand_value():
    box = make_box(1, (0,), (2,))
    M = InteractionMatrix(
        box, np.ones(3), {((0,), (1,)): -0.2, ((1,), (2,)): -0.2}, 0.6
    )
    _, cov = gaussian_moments(uniform_spec(box, zero_potential(), M))
    assert cov[0, 1] == pytest.approx(0.2 / 0.92, abs=1e-12)


def test_gaussian_covariance_accepts_interaction_or_array():
    M = two_site_gaussian().M
    assert np.allclose(gaussian_covariance(M), gaussian_covariance(M.dense()))


def test_gaussian_covariance_non_pd_raises():
    with pytest.raises(NotPositiveDefiniteError):
        gaussian_covariance(np.array([[1.0, -2.0], [-2.0, 1.0]]))


def test_gaussian_mean_with_field_and_boundary():
    # One site coupled to a halo spin: P=1, mean = -(b + M_0h * x_h).
    box = make_box(1, (0,), (0,))
    M = InteractionMatrix(box, np.array([1.0]), {((0,), (1,)): -0.3}, 0.5)
    spec = uniform_spec(box, zero_potential(), M, b=0.2)
    bc = BoundaryCondition.from_map({(1,): 2.0})
    mean, cov = gaussian_moments(spec, bc)
    assert mean[0] == pytest.approx(-(0.2 + -0.3 * 2.0), abs=1e-12)
    assert cov[0, 0] == pytest.approx(1.0)


def test_gaussian_quadratic_potential_enters_precision():
    _, cov = gaussian_moments(single_site_spec(quadratic_potential(3.0)))
    assert cov[0, 0] == pytest.approx(1.0 / 4.0, abs=1e-12)


def test_gaussian_moments_rejects_non_gaussian():
    with pytest.raises(ValueError, match="Gaussian"):
        gaussian_moments(single_site_spec(quartic_potential()))


# ------------------------------------------------------------------ quadrature

def test_quadrature_matches_gaussian_oracle():
    spec = two_site_gaussian(b=0.3)
    qm = quadrature_moments(spec)
    mean, cov = gaussian_moments(spec)
    assert np.allclose(qm.mean, mean, atol=1e-10)
    assert np.allclose(qm.cov, cov, atol=1e-10)
    assert qm.error_estimate < 1e-10


def test_quadrature_quartic_vs_independent_integrator():
    spec = single_site_spec(quartic_potential())
    qm = quadrature_moments(spec)
    h = lambda z: np.exp(-(z**4 / 12.0 + 0.5 * z**2))
    Z, _ = quad(h, -np.inf, np.inf)
    second, _ = quad(lambda z: z**2 * h(z), -np.inf, np.inf)
    assert qm.mean[0] == pytest.approx(0.0, abs=1e-10)
    assert qm.var[0] == pytest.approx(second / Z, abs=1e-10)


def test_quadrature_quartic_matches_golden_file():
    spec = single_site_spec(quartic_potential())
    golden = golden_lookup(GOLDEN, spec.fingerprint())
    assert golden is not None, "golden oracle file is missing this model"
    qm = quadrature_moments(spec)
    assert qm.var[0] == pytest.approx(golden["var"][0], abs=1e-10)
    assert qm.mean[0] == pytest.approx(golden["mean"][0], abs=1e-10)


def test_quadrature_three_sites_and_site_limit():
    box = make_box(1, (0,), (2,))
    M = InteractionMatrix(
        box, np.ones(3), {((0,), (1,)): -0.2, ((1,), (2,)): -0.2}, 0.6
    )
    spec = uniform_spec(box, zero_potential(), M)
    qm = quadrature_moments(spec)
    _, cov = gaussian_moments(spec)
    assert np.allclose(qm.cov, cov, atol=1e-9)

    box4 = make_box(1, (0,), (3,))
    M4 = InteractionMatrix(box4, np.ones(4), {}, 1.0)
    with pytest.raises(ValueError, match="at most 3"):
        quadrature_moments(uniform_spec(box4, zero_potential(), M4))


def test_quadrature_refinement_reports_shrinking_deltas():
    qm = quadrature_moments(two_site_gaussian())
    assert len(qm.deltas) == 2
    assert qm.deltas[-1] <= max(qm.deltas[0], 1e-12)


def test_quadrature_truncation_failure_detected():
    # A tiny domain cannot hold the quartic tail; doubling it moves the
    # moments a lot, which the refinement check must flag.
    spec = single_site_spec(quartic_potential())
    with pytest.raises(RefinementError):
        quadrature_moments(spec, qcfg=QuadratureConfig(truncation=0.5, nodes=16))


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(truncation=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(nodes=8)


def test_quadrature_with_boundary_condition():
    box = make_box(1, (0,), (0,))
    M = InteractionMatrix(box, np.array([1.0]), {((0,), (1,)): -0.3}, 0.5)
    spec = uniform_spec(box, zero_potential(), M)
    bc = BoundaryCondition.from_map({(1,): 1.5})
    qm = quadrature_moments(spec, bc)
    mean, _ = gaussian_moments(spec, bc)
    assert qm.mean[0] == pytest.approx(mean[0], abs=1e-10)


# ----------------------------------------------------------------- golden file

def test_golden_store_roundtrip(tmp_path):
    p = tmp_path / "golden.json"
    golden_store(p, "abc", {"var": [1.5]})
    golden_store(p, "def", {"var": [2.5]})
    assert golden_lookup(p, "abc") == {"var": [1.5]}
    assert golden_lookup(p, "def") == {"var": [2.5]}
    assert golden_lookup(p, "missing") is None
    assert golden_lookup(tmp_path / "absent.json", "abc") is None
