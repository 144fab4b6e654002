import math
import time
import numpy as np
import pytest
import errors
import matching
import poly
import ratfun
import sensitivity
from poly import Polynomial
from sensitivity import Parameter, ParameterKind, ParamCharPoly


def _sorted_by_imag(field):
  order = np.argsort(field.poles.imag, kind="stable")
  return field.poles[order], field.velocities[order]


def test_gain_velocities_at_zero(eq11):
  field = sensitivity.gain_velocities(eq11, 0.0)
  poles, velocities = _sorted_by_imag(field)
  np.testing.assert_allclose(poles, [-1 - 2j, -4, -1 + 2j], atol=1e-12)
  np.testing.assert_allclose(velocities,
                             [-0.615 - 0.077j, 1.231, -0.615 + 0.077j],
                             atol=1e-3)
  assert not field.infinite.any()
  assert field.param_name == "K"


def test_gain_velocities_at_two(eq11):
  field = sensitivity.gain_velocities(eq11, 2.0)
  poles, velocities = _sorted_by_imag(field)
  np.testing.assert_allclose(poles, [-2.319 - 3.050j, -1.362, -2.319 + 3.050j],
                             atol=2e-3)
  np.testing.assert_allclose(velocities,
                             [-0.267 - 0.739j, 0.533, -0.267 + 0.739j],
                             atol=2e-3)


def test_single_pole_moves_left():
  g = ratfun.make_tf([1], [0.5, 1])
  field = sensitivity.gain_velocities(g, 0.0)
  assert field.entries == [(-0.5 + 0j, 1, -1 + 0j)]


def _random_poles(rng, n):
  """Simple poles of a real plant, all inside |s| <= 10."""
  poles = []
  while len(poles) < n:
    if n - len(poles) >= 2 and rng.random() < 0.5:
      z = rng.uniform(0.5, 10.0) * np.exp(1j * rng.uniform(0.1, np.pi - 0.1))
      poles.extend([z, np.conj(z)])
    else:
      poles.append(rng.uniform(-10.0, 10.0))
  return np.array(poles, dtype=complex)


def _well_separated(p, min_gap=0.2):
  if len(p) < 2:
    return True
  gaps = np.abs(p[:, None] - p[None, :])
  np.fill_diagonal(gaps, np.inf)
  return gaps.min() >= min_gap


def _fd_velocities(poles, charpoly_at, h, delta):
  plus = poly.roots(charpoly_at(h + delta)).roots
  minus = poly.roots(charpoly_at(h - delta)).roots
  return (matching.match_nearest(poles, plus) -
          matching.match_nearest(poles, minus)) / (2 * delta)


def test_velocities_match_finite_differences():
  rng = np.random.default_rng(11)
  checked = attempts = 0
  while checked < 50:
    attempts += 1
    assert attempts < 1000
    n = int(rng.integers(2, 7))
    den = poly.from_roots(_random_poles(rng, n))
    num = Polynomial(rng.normal(size=int(rng.integers(1, n + 1))))
    if not _well_separated(poly.roots(den).roots):
      continue
    g = ratfun.make_tf(num, den)
    K = float(rng.uniform(0.0, 2.0))
    field = sensitivity.gain_velocities(g, K)
    if field.infinite.any() or not _well_separated(field.poles):
      continue
    fd = _fd_velocities(field.poles,
                        lambda k: ratfun.closed_loop_charpoly(g, k), K, 1e-6)
    scale = np.maximum(1.0, np.abs(field.velocities))
    assert np.all(np.abs(fd - field.velocities) <= 1e-4 * scale)
    checked += 1


def test_param_velocities_match_finite_differences():
  rng = np.random.default_rng(12)
  checked = attempts = 0
  while checked < 20:
    attempts += 1
    assert attempts < 500
    n = int(rng.integers(2, 6))
    delta = poly.from_roots(_random_poles(rng, n))
    B = Polynomial(rng.normal(size=n))
    h = float(rng.uniform(0.5, 2.0))
    kind = "connection" if checked % 2 else "dynamic"
    q = h * h if kind == "connection" else h
    par = Parameter("h", h, kind, A=delta - B * q, B=B)
    model = ParamCharPoly([par])
    field = sensitivity.param_velocities(model, "h")
    if field.infinite.any() or not _well_separated(field.poles):
      continue
    fd = _fd_velocities(field.poles, lambda x: model.evaluate_at("h", x), h,
                        1e-6 * h)
    scale = np.maximum(1.0, np.abs(field.velocities))
    assert np.all(np.abs(fd - field.velocities) <= 1e-4 * scale), kind
    checked += 1


def test_velocity_is_tangent_to_the_locus(eq11):
  dK = 1e-4
  for K in (0.0, 0.5, 1.0, 2.0):
    field = sensitivity.gain_velocities(eq11, K)
    ahead = poly.roots(ratfun.closed_loop_charpoly(eq11, K + dK)).roots
    chord = matching.match_nearest(field.poles, ahead) - field.poles
    assert np.abs(np.angle(chord / field.velocities)).max() < 1e-3


def test_step_magnitudes_follow_the_speed_law(g1):
  K, dK = 4 + 2 * math.sqrt(3), 1e-8
  field = sensitivity.gain_velocities(g1, K)
  moved = poly.roots(ratfun.closed_loop_charpoly(g1, K + dK)).roots
  expected = sensitivity.multiple_pole_speed(field.kbar[0], 2, dK) * dK
  assert field.step_magnitudes(dK)[0] == pytest.approx(expected, rel=1e-12)
  assert np.abs(moved - field.poles[0]).max() == pytest.approx(expected,
                                                               rel=1e-3)


def test_step_magnitudes_of_simple_poles(eq11):
  field = sensitivity.gain_velocities(eq11, 2.0)
  np.testing.assert_allclose(field.step_magnitudes(-0.01),
                             0.01 * np.abs(field.velocities))


def test_breakaway_velocity_is_infinite(g1):
  K = 4 + 2 * math.sqrt(3)
  field = sensitivity.gain_velocities(g1, K)
  assert field.infinite.tolist() == [True]
  assert np.isinf(field.velocities[0].real)
  assert field.log_slopes[0] == pytest.approx(-0.5)
  assert abs(field.kbar[0]) == pytest.approx(math.sqrt(3), rel=1e-5)


def test_multiple_pole_speed_unit_case():
  assert sensitivity.multiple_pole_speed(1.0, 2, 1.0) == pytest.approx(1.0)
  assert sensitivity.multiple_pole_speed(-8.0, 3, 1.0) == pytest.approx(2.0)


def test_multiple_pole_speed_slope():
  dks = np.logspace(-8, -2, 7)
  speeds = [sensitivity.multiple_pole_speed(2.0, 2, dk) for dk in dks]
  slope = np.polyfit(np.log(dks), np.log(speeds), 1)[0]
  assert slope == pytest.approx(-0.5, abs=1e-12)


def test_multiple_pole_speed_rejects_bad_input():
  with pytest.raises(errors.InvalidMultiplicity):
    sensitivity.multiple_pole_speed(1.0, 1, 0.1)
  with pytest.raises(errors.InvalidMultiplicity):
    sensitivity.multiple_pole_speed(1.0, 2.5, 0.1)
  with pytest.raises(errors.InvalidArgument):
    sensitivity.multiple_pole_speed(1.0, 2, 0.0)


@pytest.mark.parametrize("den, r", [
    ([0, 0, 1], 2),
    ([0, 0, 0, 1], 3),
    ([1, 2, 1], 2),
])
def test_pole_speed_near_repeated_root(den, r):
  # Closed loop den + K for a plant 1/den; |dp| ~ dK^(1/r) near K=0.
  g = ratfun.make_tf([1], den)
  origin = poly.roots(Polynomial(den)).distinct[0]
  dks = np.array([1e-8, 1e-7, 1e-6, 1e-5, 1e-4])
  moves = []
  for dk in dks:
    rs = poly.roots(ratfun.closed_loop_charpoly(g, dk))
    moves.append(np.abs(rs.roots - origin).max())
  slope = np.polyfit(np.log(dks), np.log(moves), 1)[0]
  assert slope == pytest.approx(1.0 / r, abs=0.01)

  speeds = [sensitivity.multiple_pole_speed(1.0, r, dk) for dk in dks]
  predicted = np.array(speeds) * dks
  np.testing.assert_allclose(moves, predicted, rtol=1e-3)


def test_dc_motor_parameter_derivatives():
  model = sensitivity.dc_motor_model()
  L, R, J, b, Ke = 0.005, 1.0, 0.010, 0.002, 0.96
  expected = {
      "L": [0.0, b, J],
      "R": [b, J],
      "J": [0.0, R, L],
      "b": [R, L],
      "Ke": [2 * Ke],
  }
  for name, coeffs in expected.items():
    d = sensitivity.param_derivative(model, name)
    assert d.allclose(Polynomial(coeffs), 1e-12), name


def test_dc_motor_velocities_match_finite_differences():
  model = sensitivity.dc_motor_model()
  for name in model.names:
    field = sensitivity.param_velocities(model, name)
    h = model.values[name]
    delta = 1e-7 * abs(h)
    plus = poly.roots(model.evaluate_at(name, h + delta, numeric=True)).roots
    minus = poly.roots(model.evaluate_at(name, h - delta, numeric=True)).roots
    fd = (matching.match_nearest(field.poles, plus) -
          matching.match_nearest(field.poles, minus)) / (2 * delta)
    assert field.param_name == name
    assert field.at_gain == h
    np.testing.assert_allclose(field.velocities, fd, rtol=1e-4)


def test_dc_motor_structure():
  model = sensitivity.dc_motor_model()
  assert sensitivity.verify_structure(model) == {
      "L": True,
      "R": True,
      "J": True,
      "b": True,
      "Ke": True
  }
  kinds = {p.name: p.kind for p in model.params}
  assert kinds["Ke"] == ParameterKind.CONNECTION
  assert model.params[4].dependence == sensitivity.Dependence.SQUARE_AFFINE


def test_structure_flags_nonlinear_parameter():

  def evaluator(v):
    return Polynomial([v["a"]**3, 1.0, 1.0])

  model = ParamCharPoly([Parameter("a", 1.0, ParameterKind.STATIC)],
                        evaluator=evaluator)
  assert sensitivity.verify_structure(model) == {"a": False}


def test_evaluator_only_parameter_is_refitted():

  def evaluator(v):
    return Polynomial([2 * v["k"] + 1, 3.0, 1.0])

  model = ParamCharPoly([Parameter("k", 0.5, "static")], evaluator=evaluator)
  A, B, dependence = model.decomposition("k")
  assert A.allclose(Polynomial([1, 3, 1]), 1e-9)
  assert B.allclose(Polynomial([2]), 1e-9)
  assert dependence == sensitivity.Dependence.AFFINE
  field = sensitivity.param_velocities(model, "k")
  assert np.all(np.isfinite(field.velocities))


def test_refit_matches_random_affine_models():
  rng = np.random.default_rng(3)
  for _ in range(20):
    A = rng.normal(size=4)
    B = rng.normal(size=3)
    A[-1] = 1.0
    h = float(rng.uniform(-2, 2))

    def evaluator(v, A=A, B=B):
      return Polynomial(A) + Polynomial(B) * v["h"]

    model = ParamCharPoly([Parameter("h", h, "dynamic")], evaluator=evaluator)
    fitA, fitB, _ = model.decomposition("h")
    assert fitA.allclose(Polynomial(A), 1e-8)
    assert fitB.allclose(Polynomial(B), 1e-8)


def test_non_affine_parameter_is_rejected():

  def evaluator(v):
    return Polynomial([math.exp(v["a"]), 1.0, 1.0])

  model = ParamCharPoly([Parameter("a", 1.0, "static")], evaluator=evaluator)
  with pytest.raises(errors.NonAffineParameter):
    model.decomposition("a")


def test_inconsistent_split_and_evaluator():

  def evaluator(v):
    return Polynomial([v["a"], 1.0, 1.0])

  # The split says the constant term is 2a, the evaluator says a.
  par = Parameter("a", 0.0, "static",
                  A=Polynomial([0.0, 1.0, 1.0]),
                  B=Polynomial([2.0]))
  model = ParamCharPoly([par], evaluator=evaluator)
  with pytest.raises(errors.FallbackInconsistent):
    sensitivity.param_derivative(model, "a")


def test_unknown_parameter():
  model = sensitivity.dc_motor_model()
  with pytest.raises(errors.UnknownParameter):
    sensitivity.param_velocities(model, "C")
  with pytest.raises(errors.UnknownParameter):
    model.index(9)
  assert model.index(1) == model.index("R") == 1


def test_split_that_does_not_reassemble():
  good = Parameter("x", 1.0, "static", A=Polynomial([1, 1]),
                   B=Polynomial([1]))
  bad = Parameter("y", 1.0, "static", A=Polynomial([0, 1]),
                  B=Polynomial([5]))
  with pytest.raises(errors.ReassemblyMismatch):
    ParamCharPoly([good, bad])


def test_connection_parameter_must_be_square_affine():
  with pytest.raises(errors.InvalidArgument):
    Parameter("Ke", 1.0, "connection", square_affine=False)
  with pytest.raises(errors.InvalidArgument):
    Parameter("R", 1.0, "static", square_affine=True)
  assert Parameter("Ke", 2.0, "connection").q(3.0) == 9.0


def test_model_needs_split_or_evaluator():
  with pytest.raises(errors.InvalidArgument):
    ParamCharPoly([Parameter("x", 1.0, "static")])
  with pytest.raises(errors.InvalidArgument):
    ParamCharPoly([])


@pytest.mark.slow
def test_gain_velocities_take_under_a_millisecond(eq11):
  sensitivity.gain_velocities(eq11, 2.0)
  calls = 200
  start = time.perf_counter()
  for _ in range(calls):
    sensitivity.gain_velocities(eq11, 2.0)
  assert (time.perf_counter() - start) / calls < 1e-3
