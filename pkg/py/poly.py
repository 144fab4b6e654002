from typing import Iterator, List, Sequence, Tuple, Union
import dataclasses
import functools
import logging
import numpy as np
from numpy.polynomial import polynomial as npoly
from tenacity import (Retrying, before_sleep_log, retry_if_exception_type,
                      stop_after_attempt)
import config
import errors
import matching

Scalar = Union[complex, float, int]

GOLDEN_ANGLE: float = float(np.pi * (3.0 - np.sqrt(5.0)))
EPS: float = float(np.finfo(float).eps)


def _trim(coeffs: Sequence[Scalar]) -> np.ndarray:
  coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
  if coeffs.size == 0:
    return np.zeros(1, dtype=complex)
  mags = np.abs(coeffs)
  keep = np.nonzero(mags > config.TRIM_REL_TOL * mags.max())[0]
  if keep.size == 0:
    return np.zeros(1, dtype=complex)
  return coeffs[:keep[-1] + 1].copy()


@dataclasses.dataclass(frozen=True, eq=False)
class Polynomial:
  """
    Dense univariate polynomial over complex scalars.

    Coefficients are stored in ascending degree order (coeffs[0] is the
    constant term) and trimmed on construction, so the stored leading
    coefficient is nonzero unless the polynomial is zero.
  """
  coeffs: np.ndarray

  def __post_init__(self) -> None:
    coeffs = _trim(self.coeffs)
    coeffs.flags.writeable = False
    object.__setattr__(self, "coeffs", coeffs)

  @classmethod
  def from_desc(cls, coeffs: Sequence[Scalar]) -> 'Polynomial':
    return cls(np.asarray(coeffs, dtype=complex)[::-1])

  @property
  def is_zero(self) -> bool:
    return len(self.coeffs) == 1 and self.coeffs[0] == 0

  @property
  def degree(self) -> int:
    """-1 for the zero polynomial."""
    return -1 if self.is_zero else len(self.coeffs) - 1

  @property
  def leading(self) -> complex:
    return complex(self.coeffs[-1])

  @property
  def max_abs_coeff(self) -> float:
    return float(np.abs(self.coeffs).max())

  @property
  def is_real(self) -> bool:
    return bool(np.all(self.coeffs.imag == 0))

  def padded(self, length: int) -> np.ndarray:
    out = np.zeros(max(length, len(self.coeffs)), dtype=complex)
    out[:len(self.coeffs)] = self.coeffs
    return out

  def to_list(self, order: str = "asc") -> List[complex]:
    coeffs = [complex(c) for c in self.coeffs]
    return coeffs if order == "asc" else coeffs[::-1]

  def allclose(self, other: 'Polynomial', rel_tol: float = 1e-12) -> bool:
    length = max(len(self.coeffs), len(other.coeffs))
    scale = max(self.max_abs_coeff, other.max_abs_coeff, 1e-300)
    return bool(
        np.all(
            np.abs(self.padded(length) - other.padded(length)) <= rel_tol *
            scale))

  def __call__(self, s: Union[Scalar, np.ndarray]) -> Union[complex, np.ndarray]:
    return evaluate(self, s)

  def __add__(self, other: Union['Polynomial', Scalar]) -> 'Polynomial':
    return add(self, _as_poly(other))

  __radd__ = __add__

  def __sub__(self, other: Union['Polynomial', Scalar]) -> 'Polynomial':
    return add(self, scale(_as_poly(other), -1.0))

  def __neg__(self) -> 'Polynomial':
    return scale(self, -1.0)

  def __mul__(self, other: Union['Polynomial', Scalar]) -> 'Polynomial':
    if isinstance(other, Polynomial):
      return mul(self, other)
    return scale(self, other)

  __rmul__ = __mul__

  def __repr__(self) -> str:
    terms = ", ".join(f"{c:.6g}" for c in self.coeffs)
    return f"Polynomial([{terms}], degree={self.degree})"


def _as_poly(value: Union[Polynomial, Scalar]) -> Polynomial:
  if isinstance(value, Polynomial):
    return value
  return Polynomial([value])


def evaluate(p: Polynomial,
             s: Union[Scalar, np.ndarray]) -> Union[complex, np.ndarray]:
  """Horner evaluation; `s` may be a scalar or an array of points."""
  return npoly.polyval(s, p.coeffs)


def derivative(p: Polynomial) -> Polynomial:
  return Polynomial(npoly.polyder(p.coeffs))


def mul(a: Polynomial, b: Polynomial) -> Polynomial:
  return Polynomial(npoly.polymul(a.coeffs, b.coeffs))


def add(a: Polynomial, b: Polynomial) -> Polynomial:
  return Polynomial(npoly.polyadd(a.coeffs, b.coeffs))


def scale(a: Polynomial, c: Scalar) -> Polynomial:
  return Polynomial(a.coeffs * c)


def from_roots(roots: Sequence[Scalar], leading: Scalar = 1.0) -> Polynomial:
  if leading == 0:
    raise errors.ZeroLeadingCoefficient("from_roots needs a nonzero leading "
                                        "coefficient")
  roots = np.asarray(roots, dtype=complex)
  if roots.size == 0:
    return Polynomial([leading])
  return Polynomial(npoly.polyfromroots(roots) * leading)


@dataclasses.dataclass(frozen=True, eq=False)
class RootSet:
  roots: np.ndarray
  distinct: np.ndarray
  multiplicities: np.ndarray
  cluster_tol: float
  converged: bool = True
  iterations: int = 0

  @property
  def degree(self) -> int:
    return int(self.multiplicities.sum())

  @property
  def is_simple(self) -> bool:
    return bool(np.all(self.multiplicities == 1))

  def __len__(self) -> int:
    return len(self.distinct)

  def __iter__(self) -> Iterator[Tuple[complex, int]]:
    return zip((complex(r) for r in self.distinct),
               (int(m) for m in self.multiplicities))

  def residuals(self, p: Polynomial) -> np.ndarray:
    return np.abs(evaluate(p, self.roots))

  def residual_bounds(self, p: Polynomial) -> np.ndarray:
    return (config.RESIDUAL_REL_TOL * p.max_abs_coeff *
            np.maximum(1.0, np.abs(self.roots))**p.degree)


def canonical_order(z: np.ndarray) -> np.ndarray:
  """Sort indices: ascending real part, then imaginary part."""
  return np.lexsort((z.imag, np.round(z.real, 9)))


def cluster(z: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
  """Single-linkage grouping of roots closer than `tol`.

  Returns the cluster means and their sizes, in canonical order.
  """
  n = len(z)
  if n == 0:
    return np.empty(0, dtype=complex), np.empty(0, dtype=int)
  gaps = np.abs(z[:, None] - z[None, :])
  np.fill_diagonal(gaps, np.inf)
  if gaps.min() > tol:
    order = canonical_order(z)
    return z[order], np.ones(n, dtype=int)

  labels = np.arange(n)
  for i in range(n):
    for j in range(i + 1, n):
      if gaps[i, j] <= tol and labels[i] != labels[j]:
        labels[labels == labels[j]] = labels[i]

  while True:
    groups = np.unique(labels)
    means = np.array([z[labels == g].mean() for g in groups])
    merged = False
    for a in range(len(groups)):
      for b in range(a + 1, len(groups)):
        if abs(means[a] - means[b]) <= tol:
          labels[labels == groups[b]] = groups[a]
          merged = True
          break
      if merged:
        break
    if not merged:
      break

  counts = np.array([np.count_nonzero(labels == g) for g in groups])
  order = canonical_order(means)
  return means[order], counts[order]


def cluster_tolerance(z: np.ndarray) -> float:
  scale = float(np.abs(z).max()) if len(z) else 0.0
  return max(config.CLUSTER_ABS_TOL, config.CLUSTER_REL_TOL * scale)


def horner(coeffs: Sequence[Scalar],
           z: Union[Scalar, np.ndarray]) -> Union[complex, np.ndarray]:
  """Horner evaluation from a plain list of ascending coefficients."""
  out = z * 0 + coeffs[-1]
  for c in coeffs[-2::-1]:
    out = out * z + c
  return out


def _initial_guesses(coeffs: np.ndarray, phase: float) -> np.ndarray:
  # Circle scaled by the root bound max |a_i / a_n|^(1 / (n - i)).
  n = len(coeffs) - 1
  powers = 1.0 / (n - np.arange(n))
  radius = float(np.max(np.abs(coeffs[:-1] / coeffs[-1])**powers))
  if radius == 0.0:
    radius = 1.0
  angles = 2.0 * np.pi * np.arange(n) / n + phase
  return radius * np.exp(1j * angles)


def _aberth(coeffs: np.ndarray, phase: float) -> Tuple[np.ndarray, int]:
  n = len(coeffs) - 1
  c = coeffs.tolist()
  powers = np.arange(n + 1)
  dcoeffs = coeffs[1:] * powers[1:]
  floor_coeffs = 4.0 * EPS * np.abs(coeffs)
  shield = np.diag(np.full(n, np.inf))
  z = _initial_guesses(coeffs, phase)

  with np.errstate(divide="ignore", invalid="ignore"):
    for iteration in range(1, config.ABERTH_MAX_ITER + 1):
      pv = horner(c, z)
      zpow = z[:, None]**powers
      # Every residual at the Horner rounding floor: nothing left to gain.
      if np.all(np.abs(pv) <= np.abs(zpow) @ floor_coeffs):
        return z, iteration
      dpv = zpow[:, :-1] @ dcoeffs
      repulsion = np.reciprocal(z[:, None] - z + shield).sum(axis=1)
      w = pv / (dpv - pv * repulsion)
      if not np.all(np.isfinite(w)):
        w = np.where(np.isfinite(w), w, 0.0)
      z = z - w
      if np.all(np.abs(w) < config.ABERTH_STEP_TOL * (1.0 + np.abs(z))):
        return z, iteration

  raise errors.NoConvergence(
      f"Aberth iteration hit the cap of {config.ABERTH_MAX_ITER} "
      f"(degree {n})",
      best=z)


def _polish(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
  c = coeffs.tolist()
  dc = (coeffs[1:] * np.arange(1, len(coeffs))).tolist()
  floor_c = (4.0 * EPS * np.abs(coeffs)).tolist()
  with np.errstate(divide="ignore", invalid="ignore"):
    for _ in range(config.NEWTON_POLISH_STEPS):
      pv = horner(c, z)
      candidate = z - pv / horner(dc, z)
      better = (np.abs(pv) > horner(floor_c, np.abs(z))) & np.isfinite(candidate)
      if not better.any():
        break
      better[better] = (np.abs(horner(c, candidate[better])) <
                        np.abs(pv[better]))
      z = np.where(better, candidate, z)
  return z


def _refine_clusters(coeffs: np.ndarray, means: np.ndarray,
                     multiplicities: np.ndarray, tol: float) -> np.ndarray:
  """Newton on the (r-1)-th derivative, whose root is simple at an r-fold one."""
  out = means.copy()
  for i in np.nonzero(multiplicities > 1)[0]:
    r = int(multiplicities[i])
    d = npoly.polyder(coeffs, r - 1)
    dd = npoly.polyder(d)
    m = out[i]
    for _ in range(config.NEWTON_POLISH_STEPS):
      dm = npoly.polyval(m, d)
      slope = npoly.polyval(m, dd)
      if dm == 0 or slope == 0:
        break
      candidate = m - dm / slope
      if (abs(candidate - means[i]) > tol or
          abs(npoly.polyval(candidate, d)) >= abs(dm)):
        break
      m = candidate
    out[i] = m
  return out


def _symmetrize(z: np.ndarray, tol: float) -> np.ndarray:
  """Snaps the roots of a real polynomial onto exact conjugate pairs."""
  partner = matching.match_indices(z, np.conj(z))
  out = z.copy()
  for j, k in enumerate(partner):
    if k < 0 or partner[k] != j or abs(z[j] - np.conj(z[k])) > tol:
      continue
    if k == j:
      out[j] = z[j].real
    else:
      out[j] = 0.5 * (z[j] + np.conj(z[k]))
  return out


@functools.lru_cache(maxsize=None)
def _retry_policy(attempts: int) -> Retrying:
  return Retrying(stop=stop_after_attempt(attempts),
                  retry=retry_if_exception_type(errors.NoConvergence),
                  before_sleep=before_sleep_log(logging.getLogger(),
                                                logging.WARNING),
                  reraise=True)


def _solve(coeffs: np.ndarray, strict: bool) -> Tuple[np.ndarray, int, bool]:
  if len(coeffs) == 2:
    return np.array([-coeffs[0] / coeffs[1]]), 0, True

  try:
    for attempt in _retry_policy(config.ABERTH_ATTEMPTS):
      with attempt:
        phase = GOLDEN_ANGLE * attempt.retry_state.attempt_number
        z, iterations = _aberth(coeffs, phase)
  except errors.NoConvergence as e:
    logging.warning(f"Root finder did not converge after "
                    f"{config.ABERTH_ATTEMPTS} attempts, returning best "
                    f"iterate")
    if strict:
      raise
    return e.best, config.ABERTH_MAX_ITER * config.ABERTH_ATTEMPTS, False
  return z, iterations, True


def roots(p: Polynomial, strict: bool = False) -> RootSet:
  """All roots of `p` with multiplicities.

  Simultaneous Aberth-Ehrlich iteration followed by Newton polishing. Exact
  zero roots are deflated first. A run that hits the iteration cap is retried
  from a rotated start circle; if every attempt fails the best iterate is
  returned with `converged=False`, or NoConvergence is raised when `strict`.
  """
  if p.degree < 1:
    raise errors.DegreeZero(f"roots() needs degree >= 1, got {p.degree}")

  coeffs = p.coeffs
  nr_zero = int(np.argmax(coeffs != 0))
  rest = coeffs[nr_zero:]

  z = np.zeros(nr_zero, dtype=complex)
  iterations, converged = 0, True
  if len(rest) > 1:
    found, iterations, converged = _solve(rest, strict)
    z = np.concatenate([z, _polish(rest, found)])

  tol = cluster_tolerance(z)
  if p.is_real:
    z = _symmetrize(z, tol)
  z = z[canonical_order(z)]
  distinct, multiplicities = cluster(z, tol)
  if np.any(multiplicities > 1):
    distinct = _refine_clusters(coeffs, distinct, multiplicities, tol)
  return RootSet(roots=z,
                 distinct=distinct,
                 multiplicities=multiplicities,
                 cluster_tol=tol,
                 converged=converged,
                 iterations=iterations)
