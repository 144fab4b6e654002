from typing import Any, Dict, Optional, Sequence, Union
import dataclasses
import enum
import warnings
import numpy as np
import config
import errors
import matching
import poly
from datatypes import PoleResidueSet

Coeffs = Union[poly.Polynomial, Sequence[complex]]


class Properness(str, enum.Enum):
  STRICTLY_PROPER = "strictly_proper"
  PROPER = "proper"
  IMPROPER = "improper"


@dataclasses.dataclass(frozen=True, eq=False)
class RationalTF:
  """Open-loop plant G(s) = N(s) / D(s), stored with a monic denominator."""
  num: poly.Polynomial
  den: poly.Polynomial

  @property
  def properness(self) -> Properness:
    if self.num.degree < self.den.degree:
      return Properness.STRICTLY_PROPER
    if self.num.degree == self.den.degree:
      return Properness.PROPER
    return Properness.IMPROPER

  @property
  def order(self) -> int:
    return self.den.degree

  @property
  def is_real(self) -> bool:
    return self.num.is_real and self.den.is_real

  def __call__(self, s: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
    return self.num(s) / self.den(s)

  def poles(self) -> poly.RootSet:
    return poly.roots(self.den)

  def zeros(self) -> Optional[poly.RootSet]:
    if self.num.degree < 1:
      return None
    return poly.roots(self.num)

  def to_dict(self) -> Dict[str, Any]:
    return {
        "num": [[c.real, c.imag] for c in self.num.to_list()],
        "den": [[c.real, c.imag] for c in self.den.to_list()],
        "order": "asc",
        "properness": self.properness.value,
    }


def _as_poly(coeffs: Coeffs) -> poly.Polynomial:
  if isinstance(coeffs, poly.Polynomial):
    return coeffs
  return poly.Polynomial(coeffs)


def _warn_common_factor(num: poly.Polynomial, den: poly.Polynomial) -> None:
  if num.degree < 1:
    return
  zeros = poly.roots(num).distinct
  poles = poly.roots(den).distinct
  gaps = np.abs(zeros[:, None] - poles[None, :])
  if gaps.min() <= config.COMMON_FACTOR_TOL:
    i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
    warnings.warn(
        f"Numerator root {complex(zeros[i]):.6g} coincides with denominator "
        f"root {complex(poles[j]):.6g}; the factor is kept",
        errors.CommonFactorWarning,
        stacklevel=3)


def make_tf(num_coeffs: Coeffs, den_coeffs: Coeffs) -> RationalTF:
  """Builds a normalized plant from ascending coefficient lists.

  The denominator is made monic and the numerator scaled by the same factor.
  Common numerator/denominator roots are reported, never cancelled.
  """
  den = _as_poly(den_coeffs)
  num = _as_poly(num_coeffs)
  if den.degree < 1:
    raise errors.DegenerateDenominator(
        f"Denominator must have degree >= 1, got {den.degree}")
  if num.degree > den.degree:
    raise errors.ImproperTransferFunction(
        f"Numerator degree {num.degree} exceeds denominator degree "
        f"{den.degree}")

  lead = den.leading
  num, den = poly.scale(num, 1.0 / lead), poly.scale(den, 1.0 / lead)
  if num.is_zero:
    warnings.warn("Numerator is identically zero; every pole is stationary",
                  errors.ZeroNumeratorWarning,
                  stacklevel=2)
  else:
    _warn_common_factor(num, den)
  return RationalTF(num=num, den=den)


def _real_if_conjugate_closed(coeffs: np.ndarray,
                              roots: np.ndarray) -> np.ndarray:
  if len(roots) == 0 or np.all(coeffs.imag == 0):
    return coeffs
  mirror = matching.match_nearest(roots, np.conj(roots))
  scale = max(1.0, float(np.abs(roots).max()))
  if np.all(np.abs(mirror - roots) <= 1e-12 * scale):
    return coeffs.real.astype(complex)
  return coeffs


def from_zpk(zeros: Sequence[complex], poles: Sequence[complex],
             gain: complex) -> RationalTF:
  zeros = np.asarray(zeros, dtype=complex)
  poles = np.asarray(poles, dtype=complex)
  if len(poles) == 0:
    raise errors.DegenerateDenominator("A plant needs at least one pole")
  num = poly.from_roots(zeros, 1.0).coeffs
  den = poly.from_roots(poles, 1.0).coeffs
  num = _real_if_conjugate_closed(np.asarray(num), zeros) * gain
  den = _real_if_conjugate_closed(np.asarray(den), poles)
  return make_tf(num, den)


def closed_loop_charpoly(g: RationalTF, K: float) -> poly.Polynomial:
  """Delta(s, K) = D(s) + K * N(s)."""
  if g.properness == Properness.IMPROPER:
    raise errors.ImproperTransferFunction("Improper plants have no closed loop "
                                          "of fixed order")
  if g.properness == Properness.PROPER:
    lead = g.den.leading + K * g.num.leading
    if abs(lead) <= config.DEGREE_DROP_TOL:
      raise errors.DegreeDropAtK(K, lead)
  return g.den + poly.scale(g.num, K)


def residues(num: poly.Polynomial,
             charpoly: poly.Polynomial,
             gain_K: Optional[float] = None) -> PoleResidueSet:
  """Cover-up residues of num / charpoly at the clustered roots of charpoly.

  A root of multiplicity r gets the coefficient of 1 / (s - p)^r.
  """
  if charpoly.degree < 1:
    raise errors.DegreeZero("Characteristic polynomial has no roots")
  if num.degree > charpoly.degree:
    raise errors.ImproperInput(
        f"Numerator degree {num.degree} exceeds characteristic degree "
        f"{charpoly.degree}")

  rootset = poly.roots(charpoly)
  p, m = rootset.distinct, rootset.multiplicities
  diff = p[:, None] - p[None, :]
  np.fill_diagonal(diff, 1.0)
  cover = charpoly.leading * np.prod(diff**m[None, :], axis=1)
  values = poly.evaluate(num, p)
  res = values / cover

  if not num.is_zero:
    scale = num.max_abs_coeff * np.maximum(1.0, np.abs(p))**max(num.degree, 0)
    stationary = np.abs(values) < config.ZERO_RESIDUE_REL_TOL * scale
    if stationary.any():
      warnings.warn(
          f"Poles {[complex(z) for z in p[stationary]]} are numerator roots; "
          f"their residues are zero",
          errors.PoleAtNumeratorRootWarning,
          stacklevel=2)
      res = np.where(stationary, 0.0, res)

  return PoleResidueSet(poles=p,
                        multiplicities=m,
                        residues=res,
                        gain_K=gain_K)


def closed_loop_residues(g: RationalTF, K: float) -> PoleResidueSet:
  """Residues of N(s) / Delta(s, K), the closed loop without the K factor."""
  return residues(g.num, closed_loop_charpoly(g, K), gain_K=K)
