import numpy as np
import pytest
import config
import errors
import matching
import poly
from poly import Polynomial


def _random_roots(rng: np.random.Generator, n: int) -> np.ndarray:
  roots = []
  while len(roots) < n:
    r = rng.uniform(0.0, 10.0) * np.exp(2j * np.pi * rng.uniform())
    if all(abs(r - other) > 1e-3 for other in roots):
      roots.append(r)
  return np.array(roots)


def test_evaluate_constant_term():
  assert poly.evaluate(Polynomial([1, 2, 1]), 0) == 1


def test_evaluate_vanishes_at_complex_pole():
  p = Polynomial([5, 2, 1])
  assert abs(poly.evaluate(p, -1 + 2j)) < 1e-14


def test_evaluate_matches_power_sum():
  coeffs = [3, -1, 0, 4]
  s = 2 + 1j
  expected = sum(c * s**i for i, c in enumerate(coeffs))
  assert poly.evaluate(Polynomial(coeffs), s) == pytest.approx(expected,
                                                               rel=1e-12)


def test_evaluate_on_array():
  p = Polynomial([1, 0, 1])
  np.testing.assert_allclose(p(np.array([0, 1j, 2])), [1, 0, 5])


def test_zero_polynomial_has_undefined_degree():
  assert Polynomial([0, 0, 0]).degree == -1
  assert Polynomial([]).is_zero


def test_trailing_noise_is_trimmed():
  p = Polynomial([1.0, 2.0, 1e-16])
  assert p.degree == 1
  assert p.leading == 2.0


def test_derivative_of_quadratic():
  d = poly.derivative(Polynomial([5, 2, 1]))
  np.testing.assert_allclose(d.coeffs, [2, 2])


def test_derivative_of_constant_is_zero():
  d = poly.derivative(Polynomial([7]))
  assert d.is_zero
  assert d.degree == -1


def test_derivative_matches_central_difference():
  rng = np.random.default_rng(0)
  p = Polynomial(rng.normal(size=7))
  dp = poly.derivative(p)
  for s in rng.normal(size=5) + 1j * rng.normal(size=5):
    h = 1e-6 * max(1.0, abs(s))
    fd = (p(s + h) - p(s - h)) / (2 * h)
    assert fd == pytest.approx(dp(s), rel=1e-5)


def test_mul_difference_of_squares():
  p = poly.mul(Polynomial([1, 1]), Polynomial([-1, 1]))
  np.testing.assert_allclose(p.coeffs, [-1, 0, 1])


def test_add_cancels_leading_term():
  p = poly.add(Polynomial([1, 0, 1]), Polynomial([0, 0, -1]))
  assert p.degree == 0
  np.testing.assert_allclose(p.coeffs, [1])


def test_scale_and_operators():
  p = Polynomial([1, 2])
  np.testing.assert_allclose(poly.scale(p, 2j).coeffs, [2j, 4j])
  np.testing.assert_allclose((p * 3 + 1).coeffs, [4, 6])
  np.testing.assert_allclose((p - p).coeffs, [0])


def test_mul_matches_pointwise_product():
  rng = np.random.default_rng(1)
  a = Polynomial(rng.normal(size=5) + 1j * rng.normal(size=5))
  b = Polynomial(rng.normal(size=5) + 1j * rng.normal(size=5))
  ab = poly.mul(a, b)
  for s in rng.normal(size=10) + 1j * rng.normal(size=10):
    assert ab(s) == pytest.approx(a(s) * b(s), rel=1e-12)


def test_from_roots_cubic():
  p = poly.from_roots([-4, -1 + 2j, -1 - 2j], 1.0)
  np.testing.assert_allclose(p.coeffs, [20, 13, 6, 1], atol=1e-12)


def test_from_roots_empty_gives_constant():
  p = poly.from_roots([], 5.0)
  assert p.degree == 0
  assert p.leading == 5.0


def test_from_roots_rejects_zero_leading():
  with pytest.raises(errors.ZeroLeadingCoefficient):
    poly.from_roots([1.0], 0.0)


def test_from_roots_vanishes_at_roots():
  rs = [0.5, -2 + 1j, 3j]
  p = poly.from_roots(rs, 2.0)
  for r in rs:
    assert abs(p(r)) < 1e-12


def test_roots_of_cubic():
  rs = poly.roots(Polynomial([20, 13, 6, 1]))
  assert rs.converged
  np.testing.assert_array_equal(rs.multiplicities, [1, 1, 1])
  np.testing.assert_allclose(rs.distinct, [-4, -1 - 2j, -1 + 2j], atol=1e-12)


def test_roots_of_real_polynomial_come_in_exact_pairs():
  rs = poly.roots(Polynomial([20, 13, 6, 1]))
  assert rs.roots[0].imag == 0
  assert rs.roots[1] == np.conj(rs.roots[2])


def test_roots_perfect_square():
  rs = poly.roots(Polynomial([4, 4, 1]))
  assert rs.degree == 2
  assert len(rs) == 1
  assert rs.multiplicities[0] == 2
  assert rs.distinct[0] == pytest.approx(-2, abs=1e-10)


def test_roots_refines_double_root_off_the_axis():
  rs = poly.roots(poly.from_roots([1 + 2j, 1 + 2j, -3]))
  assert rs.multiplicities.tolist() == [1, 2]
  assert abs(rs.distinct[1] - (1 + 2j)) < 1e-12


def test_roots_deflates_exact_zeros():
  rs = poly.roots(poly.from_roots([0, 0, -4]))
  assert list(rs) == [(-4 + 0j, 1), (0j, 2)]


def test_roots_residual_bound():
  rng = np.random.default_rng(2)
  for _ in range(20):
    p = Polynomial(rng.normal(size=rng.integers(2, 10)))
    rs = poly.roots(p)
    assert np.all(rs.residuals(p) <= rs.residual_bounds(p))


def test_roots_distinct_clusters_are_separated():
  rs = poly.roots(poly.from_roots([1, 1, 3, 2j]))
  gaps = np.abs(rs.distinct[:, None] - rs.distinct[None, :])
  np.fill_diagonal(gaps, np.inf)
  assert gaps.min() > rs.cluster_tol
  assert rs.degree == 4
  assert rs.multiplicities[np.argmin(np.abs(rs.distinct - 1))] == 2


@pytest.mark.parametrize("degree", [1, 4, 10])
def test_roots_round_trip_degree(degree):
  rng = np.random.default_rng(degree)
  expected = _random_roots(rng, degree)
  found = poly.roots(poly.from_roots(expected)).roots
  assert np.abs(matching.match_nearest(expected, found) - expected).max() < 1e-7


def test_roots_round_trip_randomized():
  rng = np.random.default_rng(42)
  for _ in range(200):
    expected = _random_roots(rng, int(rng.integers(1, 11)))
    rs = poly.roots(poly.from_roots(expected))
    assert rs.degree == len(expected)
    aligned = matching.match_nearest(expected, rs.roots)
    assert np.abs(aligned - expected).max() < 1e-7


def test_roots_of_constant_raise():
  with pytest.raises(errors.DegreeZero):
    poly.roots(Polynomial([3]))
  with pytest.raises(errors.DegreeZero):
    poly.roots(Polynomial([0]))


def test_roots_reports_non_convergence(monkeypatch):
  monkeypatch.setattr(config, "ABERTH_MAX_ITER", 1)
  p = Polynomial([20, 13, 6, 1])
  rs = poly.roots(p)
  assert not rs.converged
  assert rs.degree == 3
  with pytest.raises(errors.NoConvergence) as info:
    poly.roots(p, strict=True)
  assert info.value.best is not None


def test_to_list_orders():
  p = Polynomial([1, 2, 3])
  assert p.to_list("desc") == [3, 2, 1]
  assert Polynomial.from_desc([3, 2, 1]).allclose(p)
