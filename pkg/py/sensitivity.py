from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union
import dataclasses
import enum
import logging
import math
import numpy as np
import config
import errors
import poly
import ratfun
from datatypes import VelocityField

Evaluator = Callable[[Mapping[str, float]], poly.Polynomial]
ParamRef = Union[int, str]


def gain_velocities(g: ratfun.RationalTF, K: float) -> VelocityField:
  """dp/dK = -residue at every simple closed-loop pole.

  Repeated poles get an infinite velocity; their generalized residue stays
  available in `kbar` for the magnitude law.
  """
  prs = ratfun.closed_loop_residues(g, K)
  infinite = prs.multiplicities > 1
  velocities = np.where(infinite, complex(np.inf, 0.0), -prs.residues)
  return VelocityField(at_gain=K,
                       poles=prs.poles,
                       multiplicities=prs.multiplicities,
                       velocities=velocities,
                       kbar=prs.residues,
                       param_name="K")


def multiple_pole_speed(kbar: complex, r: int, dK: float) -> float:
  """|dp/dK| = (|kbar| / dK^(r-1))^(1/r) near a pole of multiplicity r."""
  if int(r) != r or r < 2:
    raise errors.InvalidMultiplicity(f"Multiplicity must be >= 2, got {r}")
  if not dK > 0:
    raise errors.InvalidArgument(f"dK must be positive, got {dK}")
  return (abs(kbar) / dK**(r - 1))**(1.0 / r)


class ParameterKind(str, enum.Enum):
  DYNAMIC = "dynamic"
  STATIC = "static"
  CONNECTION = "connection"


class Dependence(str, enum.Enum):
  AFFINE = "affine"
  SQUARE_AFFINE = "square_affine"


@dataclasses.dataclass
class Parameter:
  name: str
  value: float
  kind: ParameterKind
  A: Optional[poly.Polynomial] = None
  B: Optional[poly.Polynomial] = None
  square_affine: Optional[bool] = None

  def __post_init__(self) -> None:
    self.kind = ParameterKind(self.kind)
    if self.square_affine is None:
      self.square_affine = self.kind == ParameterKind.CONNECTION
    if self.square_affine != (self.kind == ParameterKind.CONNECTION):
      raise errors.InvalidArgument(
          f"Parameter {self.name!r}: connection parameters and only they "
          f"enter through their square")
    if (self.A is None) != (self.B is None):
      raise errors.InvalidArgument(
          f"Parameter {self.name!r}: A and B must be given together")

  @property
  def dependence(self) -> Dependence:
    return Dependence.SQUARE_AFFINE if self.square_affine else Dependence.AFFINE

  @property
  def has_decomposition(self) -> bool:
    return self.B is not None

  def q(self, h: float) -> float:
    """The pencil coordinate: h, or h**2 for connection parameters."""
    return h * h if self.square_affine else h


@dataclasses.dataclass
class ParamCharPoly:
  """Characteristic polynomial with declared dependence on its parameters.

  Each parameter either carries an analytic split Delta = A + q(h) * B at the
  operating point, or relies on `evaluator`, which maps a full parameter
  assignment to Delta.
  """
  params: List[Parameter]
  evaluator: Optional[Evaluator] = None
  name: str = ""

  def __post_init__(self) -> None:
    if not self.params:
      raise errors.InvalidArgument("A parameter model needs parameters")
    names = [p.name for p in self.params]
    if len(set(names)) != len(names):
      raise errors.InvalidArgument(f"Duplicate parameter names in {names}")
    for par in self.params:
      if not par.has_decomposition and self.evaluator is None:
        raise errors.InvalidArgument(
            f"Parameter {par.name!r} has neither an A/B split nor an "
            f"evaluator")
    self._check_reassembly()

  def _check_reassembly(self) -> None:
    base = self.charpoly()
    for par in self.params:
      if not par.has_decomposition:
        continue
      assembled = par.A + poly.scale(par.B, par.q(par.value))
      if not assembled.allclose(base, config.REASSEMBLY_REL_TOL):
        raise errors.ReassemblyMismatch(
            f"A + q*B for {par.name!r} does not reproduce the "
            f"characteristic polynomial")

  @property
  def names(self) -> List[str]:
    return [p.name for p in self.params]

  @property
  def values(self) -> Dict[str, float]:
    return {p.name: p.value for p in self.params}

  def index(self, ref: ParamRef) -> int:
    if isinstance(ref, str):
      if ref not in self.names:
        raise errors.UnknownParameter(
            f"Unknown parameter {ref!r}, expected one of {self.names}")
      return self.names.index(ref)
    if not 0 <= ref < len(self.params):
      raise errors.UnknownParameter(f"Parameter index {ref} out of range")
    return int(ref)

  def charpoly(self) -> poly.Polynomial:
    if self.evaluator is not None:
      return self.evaluator(self.values)
    par = self.params[0]
    return par.A + poly.scale(par.B, par.q(par.value))

  def evaluate_at(self, ref: ParamRef, h: float,
                  numeric: bool = False) -> poly.Polynomial:
    """Delta with parameter `ref` set to h and the others at their values."""
    par = self.params[self.index(ref)]
    if par.has_decomposition and not (numeric and self.evaluator is not None):
      return par.A + poly.scale(par.B, par.q(h))
    values = self.values
    values[par.name] = h
    return self.evaluator(values)

  def decomposition(
      self,
      ref: ParamRef) -> Tuple[poly.Polynomial, poly.Polynomial, Dependence]:
    """(A, B, dependence) for a parameter, refitted from the evaluator if
    no analytic split was declared."""
    idx = self.index(ref)
    par = self.params[idx]
    if par.has_decomposition:
      return par.A, par.B, par.dependence

    h0 = par.value
    offset = config.AFFINE_SAMPLE_REL_STEP * max(1.0, abs(h0))
    h1, h2 = h0 + offset, h0 - 0.5 * offset
    q0, q1, q2 = par.q(h0), par.q(h1), par.q(h2)
    size = self.charpoly().degree + 2
    d0, d1, d2 = (self.evaluate_at(idx, h).padded(size) for h in (h0, h1, h2))
    B = (d1 - d0) / (q1 - q0)
    A = d0 - q0 * B
    predicted = A + q2 * B
    scale = max(np.abs(d0).max(), np.abs(d2).max())
    if np.abs(predicted - d2).max() > config.AFFINE_CERT_REL_TOL * scale:
      raise errors.NonAffineParameter(
          f"Delta is not {par.dependence.value} in {par.name!r}")
    logging.debug(f"Refitted {par.dependence.value} split for {par.name!r}")
    return poly.Polynomial(A), poly.Polynomial(B), par.dependence


def _fd_derivative(model: ParamCharPoly, idx: int) -> poly.Polynomial:
  h = model.params[idx].value
  step = config.FD_REL_STEP * max(1.0, abs(h))
  size = model.charpoly().degree + 2

  def central(dh: float) -> np.ndarray:
    plus = model.evaluate_at(idx, h + dh, numeric=True).padded(size)
    minus = model.evaluate_at(idx, h - dh, numeric=True).padded(size)
    return (plus - minus) / (2.0 * dh)

  coarse, fine = central(step), central(0.5 * step)
  extrapolated = (4.0 * fine - coarse) / 3.0
  spread = np.abs(fine - coarse).max()
  scale = max(np.abs(extrapolated).max(), 1e-300)
  if spread > config.FALLBACK_REL_TOL * scale:
    logging.warning(f"Finite-difference derivative in "
                    f"{model.params[idx].name!r} is unstable "
                    f"(Richardson spread {spread:.3e})")
  return poly.Polynomial(extrapolated)


def param_derivative(model: ParamCharPoly, ref: ParamRef) -> poly.Polynomial:
  """dDelta/dh for one parameter: B, or 2*h*B for connection parameters."""
  idx = model.index(ref)
  par = model.params[idx]

  analytic = None
  if par.has_decomposition:
    analytic = par.B if not par.square_affine else poly.scale(
        par.B, 2.0 * par.value)
  numeric = _fd_derivative(model, idx) if model.evaluator is not None else None

  if analytic is not None and numeric is not None:
    if not analytic.allclose(numeric, config.FALLBACK_REL_TOL):
      raise errors.FallbackInconsistent(
          f"Analytic and finite-difference derivatives in {par.name!r} "
          f"disagree")
    return analytic
  return analytic if analytic is not None else numeric


def param_velocities(model: ParamCharPoly, ref: ParamRef) -> VelocityField:
  """dp/dh = -residue of (dDelta/dh) / Delta at the poles of Delta."""
  idx = model.index(ref)
  par = model.params[idx]
  delta = model.charpoly()
  if delta.degree < 1:
    raise errors.DegreeZero("Characteristic polynomial has no roots")
  prs = ratfun.residues(param_derivative(model, idx), delta, gain_K=par.value)
  infinite = prs.multiplicities > 1
  velocities = np.where(infinite, complex(np.inf, 0.0), -prs.residues)
  return VelocityField(at_gain=par.value,
                       poles=prs.poles,
                       multiplicities=prs.multiplicities,
                       velocities=velocities,
                       kbar=prs.residues,
                       param_name=par.name)


def verify_structure(model: ParamCharPoly,
                     rel_tol: float = 1e-10) -> Dict[str, bool]:
  """Checks how each parameter enters Delta.

  Dynamic and static parameters must enter linearly (zero second difference
  of the coefficients); connection parameters must enter evenly and linearly
  in their square.
  """
  size = model.charpoly().degree + 2
  result = {}
  for idx, par in enumerate(model.params):
    h0 = par.value
    step = config.AFFINE_SAMPLE_REL_STEP * max(1.0, abs(h0))

    def at(h: float) -> np.ndarray:
      return model.evaluate_at(idx, h, numeric=True).padded(size)

    base = at(h0)
    scale = max(float(np.abs(base).max()), 1e-300)
    if par.square_affine:
      q0 = h0 * h0
      samples = [at(math.sqrt(q0 + t * step)) for t in (1.0, 2.0)]
      linear = np.abs(samples[1] - 2.0 * samples[0] + base).max()
      even = np.abs(at(-h0) - base).max()
      ok = linear <= rel_tol * scale and even <= rel_tol * scale
    else:
      second = np.abs(at(h0 + step) - 2.0 * base + at(h0 - step)).max()
      ok = second <= rel_tol * scale
    if not ok:
      logging.warning(f"Parameter {par.name!r} does not enter Delta as a "
                      f"{par.kind.value} parameter should")
    result[par.name] = bool(ok)
  return result


def dc_motor_model(L: float = 0.005,
                   R: float = 1.0,
                   J: float = 0.010,
                   b: float = 0.002,
                   Ke: float = 0.96) -> ParamCharPoly:
  """Armature-controlled DC motor, Delta = (L s + R)(J s + b) + Ke^2."""

  def evaluator(v: Mapping[str, float]) -> poly.Polynomial:
    return poly.Polynomial([
        v["R"] * v["b"] + v["Ke"]**2,
        v["L"] * v["b"] + v["R"] * v["J"],
        v["L"] * v["J"],
    ])

  P = poly.Polynomial
  params = [
      Parameter("L", L, ParameterKind.DYNAMIC,
                A=P([R * b + Ke**2, R * J]), B=P([0.0, b, J])),
      Parameter("R", R, ParameterKind.STATIC,
                A=P([Ke**2, L * b, L * J]), B=P([b, J])),
      Parameter("J", J, ParameterKind.DYNAMIC,
                A=P([R * b + Ke**2, L * b]), B=P([0.0, R, L])),
      Parameter("b", b, ParameterKind.STATIC,
                A=P([Ke**2, R * J, L * J]), B=P([R, L])),
      Parameter("Ke", Ke, ParameterKind.CONNECTION,
                A=P([R * b, L * b + R * J, L * J]), B=P([1.0])),
  ]
  return ParamCharPoly(params=params, evaluator=evaluator, name="dc_motor")
