from typing import List, Optional, Sequence, Tuple
import dataclasses
import logging
import numpy as np
from numpy.polynomial import polynomial as npoly
import config
import errors
import matching
import poly
import ratfun
import sensitivity
from datatypes import EventKind, Locus, LocusEvent, TraceConfig

NAN = complex(np.nan, np.nan)


@dataclasses.dataclass(frozen=True)
class Pencil:
  """Delta(s, k) = A(s) + q(k) * B(s) with q(k) = k or k**2.

  A and B are padded to a common length, so A[-1] + q * B[-1] is the
  leading coefficient of Delta.
  """
  A: np.ndarray
  B: np.ndarray
  square: bool = False

  @classmethod
  def from_polys(cls,
                 A: poly.Polynomial,
                 B: poly.Polynomial,
                 square: bool = False) -> 'Pencil':
    size = max(len(A.coeffs), len(B.coeffs))
    return cls(A=A.padded(size), B=B.padded(size), square=square)

  @classmethod
  def from_plant(cls, g: ratfun.RationalTF) -> 'Pencil':
    return cls.from_polys(g.den, g.num)

  @property
  def degree(self) -> int:
    return len(self.A) - 1

  def q(self, k: float) -> float:
    return k * k if self.square else k

  def dq_dk(self, k: float) -> float:
    return 2.0 * k if self.square else 1.0

  def coeffs(self, k: float) -> np.ndarray:
    return self.A + self.q(k) * self.B

  def charpoly(self, k: float) -> poly.Polynomial:
    return poly.Polynomial(self.coeffs(k))

  def lead(self, k: float) -> complex:
    return complex(self.A[-1] + self.q(k) * self.B[-1])

  def degree_drops(self, k: float) -> bool:
    scale = max(abs(self.A[-1]), abs(self.q(k) * self.B[-1]))
    lead = self.lead(k)
    return lead == 0 or abs(lead) <= config.DEGREE_DROP_TOL * scale


@dataclasses.dataclass
class _Step:
  estimates: np.ndarray
  update: np.ndarray
  velocity: np.ndarray
  gaps: np.ndarray
  error: np.ndarray
  residual: np.ndarray


def _pencil_step(pencil: Pencil, p: np.ndarray, k_i: float, k_next: float,
                 stabilizer_on: bool) -> _Step:
  # Canonical factor order keeps the step independent of branch order.
  order = np.lexsort((p.imag, p.real))
  ps = p[order]
  diff = ps[:, None] - ps[None, :]
  np.fill_diagonal(diff, 1.0)
  cover = np.prod(diff, axis=1)
  np.fill_diagonal(diff, np.inf)
  dist = np.abs(diff)
  gaps = dist.min(axis=1) if len(ps) > 1 else np.full(1, np.inf)

  q_i, q_next = pencil.q(k_i), pencil.q(k_next)
  Bp = poly.horner(pencil.B.tolist(), ps)
  numer = Bp * (q_next - q_i)
  if stabilizer_on:
    numer = numer + poly.horner(pencil.A.tolist(), ps) + q_i * Bp
  with np.errstate(divide="ignore", invalid="ignore"):
    update = numer / (pencil.lead(k_next) * cover)
    velocity = -pencil.dq_dk(k_i) * Bp / (pencil.lead(k_i) * cover)
    # One more snapshot would move p_i by about sum_j u_i u_j / (p_i - p_j).
    moved = np.abs(update)
    error = moved * (moved[None, :] / dist).sum(axis=1)
    residual = (np.abs(pencil.lead(k_next) * cover) * error /
                np.abs(pencil.coeffs(k_next)).max())

  out = _Step(estimates=np.empty_like(p),
              update=np.empty_like(p),
              velocity=np.empty_like(p),
              gaps=np.empty(len(p)),
              error=np.empty(len(p)),
              residual=np.empty(len(p)))
  out.update[order] = update
  out.estimates[order] = ps - update
  out.velocity[order] = np.where(np.isfinite(velocity), velocity, NAN)
  out.gaps[order] = gaps
  out.error[order] = error
  out.residual[order] = residual
  return out


def step_update(estimates: Sequence[complex],
                g: ratfun.RationalTF,
                k_i: float,
                dk: float,
                stabilizer_on: bool = True) -> np.ndarray:
  """Advances every pole estimate from k_i to k_i + dk in one snapshot.

  Each estimate moves by -(N(p) dk + Delta(p, k_i)) / prod(p - p_h) over the
  other estimates, divided by the leading coefficient of Delta at k_i + dk.
  Without the stabilizer the Delta(p, k_i) term is dropped.
  """
  p = np.asarray(estimates, dtype=complex)
  if len(p) > 1:
    gaps = np.abs(p[:, None] - p[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() < config.COLLISION_TOL:
      i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
      raise errors.CollidingEstimates(
          f"Estimates {i} and {j} are {gaps.min():.3e} apart",
          pair=(int(i), int(j)))
  return _pencil_step(Pencil.from_plant(g), p, k_i, k_i + dk,
                      stabilizer_on).estimates


def _exact_row(pencil: Pencil,
               k: float,
               reference: Optional[np.ndarray] = None) -> np.ndarray:
  row = np.full(pencil.degree, NAN)
  charpoly = pencil.charpoly(k)
  if charpoly.degree < 1:
    return row
  found = poly.roots(charpoly).roots
  if reference is None:
    row[:len(found)] = found
    return row
  return matching.match_nearest(reference, found)


def _row_velocity(pencil: Pencil, p: np.ndarray, k: float) -> np.ndarray:
  out = np.full(len(p), NAN)
  finite = np.isfinite(p)
  if not finite.any():
    return out
  pf = p[finite]
  Bp = poly.horner(pencil.B.tolist(), pf)
  with np.errstate(divide="ignore", invalid="ignore"):
    if finite.all() and not pencil.degree_drops(k):
      diff = pf[:, None] - pf[None, :]
      np.fill_diagonal(diff, 1.0)
      v = -pencil.dq_dk(k) * Bp / (pencil.lead(k) * np.prod(diff, axis=1))
    else:
      slope = poly.horner(npoly.polyder(pencil.coeffs(k)).tolist(), pf)
      v = -pencil.dq_dk(k) * Bp / slope
  out[finite] = np.where(np.isfinite(v), v, NAN)
  return out


def _seed(pencil: Pencil, k: float) -> np.ndarray:
  if pencil.degree_drops(k):
    raise errors.DegreeDropAtK(k, pencil.lead(k))
  return _exact_row(pencil, k)


class _StepHistory:
  """Trailing update magnitudes per branch."""

  def __init__(self, nr_branches: int, length: int) -> None:
    self.buffer = np.zeros((length, nr_branches))
    self.count = 0
    self.head = 0

  def clear(self) -> None:
    self.count = 0
    self.head = 0

  def push(self, magnitudes: np.ndarray) -> None:
    self.buffer[self.head] = magnitudes
    self.head = (self.head + 1) % len(self.buffer)
    self.count = min(self.count + 1, len(self.buffer))

  def median(self) -> Optional[np.ndarray]:
    if self.count < 2:
      return None
    ordered = np.sort(self.buffer[:self.count], axis=0)
    mid = self.count // 2
    if self.count % 2:
      return ordered[mid]
    return 0.5 * (ordered[mid - 1] + ordered[mid])


def _event_reasons(step: _Step, p: np.ndarray, history: _StepHistory,
                   cfg: TraceConfig) -> List[str]:
  scale = max(1.0, float(np.abs(p).max()))
  mags = np.abs(step.update)
  reasons = []
  if not np.all(np.isfinite(step.update)):
    reasons.append("non-finite update")
  min_gap = float(step.gaps.min())
  if min_gap < cfg.branch_event_tol * scale:
    reasons.append(f"estimates {min_gap:.3e} apart")
  median = history.median()
  if median is not None:
    limit = cfg.max_step_factor * np.maximum(median,
                                             config.STEP_FLOOR_REL * scale)
    if np.any(mags > limit):
      reasons.append("step blow-up")
  if np.any(mags > config.STEP_GAP_RATIO * step.gaps):
    reasons.append("step comparable to branch gap")
  predicted = step.error / np.maximum(1.0, np.abs(p))
  predicted = predicted[~np.isnan(predicted)]
  worst = float(predicted.max()) if predicted.size else 0.0
  if worst > config.STEP_ERROR_TOL:
    reasons.append(f"predicted step error {worst:.3e}")
  residual = step.residual[~np.isnan(step.residual)]
  if residual.size and residual.max() > config.STEP_RESIDUAL_TOL:
    reasons.append(f"predicted residual {residual.max():.3e}")
  return reasons


def _trace_pencil(pencil: Pencil, cfg: TraceConfig, param_name: str) -> Locus:
  grid = cfg.grid()
  n = pencil.degree
  poles = np.full((len(grid), n), NAN)
  velocities = np.full((len(grid), n), NAN)
  events: List[LocusEvent] = []
  history = _StepHistory(n, config.STEP_HISTORY)

  poles[0] = _seed(pencil, grid[0])
  for i in range(len(grid) - 1):
    k_i, k_next = grid[i], grid[i + 1]
    p = poles[i]

    if pencil.degree_drops(k_next):
      events.append(
          LocusEvent(k_next, EventKind.DEGREE_DROP,
                     f"|lead|={abs(pencil.lead(k_next)):.3e}", i + 1))
      logging.debug(f"Degree drop at {param_name}={k_next:.6g}")
      velocities[i] = _row_velocity(pencil, p, k_i)
      poles[i + 1] = _exact_row(pencil, k_next, p)
      history.clear()
      continue

    if not np.all(np.isfinite(p)):
      # Re-seed the branches lost at a degree drop.
      velocities[i] = _row_velocity(pencil, p, k_i)
      poles[i + 1] = _exact_row(pencil, k_next, p)
      events.append(
          LocusEvent(k_next, EventKind.REANCHORED, "re-seeded after degree drop",
                     i + 1))
      history.clear()
      continue

    step = _pencil_step(pencil, p, k_i, k_next, cfg.stabilizer_on)
    velocities[i] = step.velocity
    reasons = _event_reasons(step, p, history, cfg)
    if reasons:
      detail = "; ".join(reasons)
      logging.debug(f"Branch event at {param_name}={k_next:.6g}: {detail}")
      events.append(
          LocusEvent(k_next, EventKind.BRANCH_POINT_SUSPECTED, detail, i + 1))
      poles[i + 1] = _exact_row(pencil, k_next, p)
      history.clear()
      continue

    history.push(np.abs(step.update))
    poles[i + 1] = step.estimates
    if cfg.reanchor_every and (i + 1) % cfg.reanchor_every == 0:
      poles[i + 1] = _exact_row(pencil, k_next, step.estimates)
      events.append(LocusEvent(k_next, EventKind.REANCHORED, "periodic", i + 1))

  velocities[-1] = _row_velocity(pencil, poles[-1], grid[-1])
  logging.info(f"Traced {n} branches over {len(grid)} values of {param_name} "
               f"with {len(events)} events")
  return Locus(k=grid,
               poles=poles,
               velocities=velocities,
               config=cfg,
               events=events,
               method="tracer",
               param_name=param_name)


def _exact_pencil(pencil: Pencil, cfg: TraceConfig, param_name: str) -> Locus:
  grid = cfg.grid()
  n = pencil.degree
  poles = np.full((len(grid), n), NAN)
  velocities = np.full((len(grid), n), NAN)
  events: List[LocusEvent] = []

  poles[0] = _seed(pencil, grid[0])
  velocities[0] = _row_velocity(pencil, poles[0], grid[0])
  for i in range(1, len(grid)):
    if pencil.degree_drops(grid[i]):
      events.append(
          LocusEvent(grid[i], EventKind.DEGREE_DROP,
                     f"|lead|={abs(pencil.lead(grid[i])):.3e}", i))
    poles[i] = _exact_row(pencil, grid[i], poles[i - 1])
    velocities[i] = _row_velocity(pencil, poles[i], grid[i])

  return Locus(k=grid,
               poles=poles,
               velocities=velocities,
               config=cfg,
               events=events,
               method="exact",
               param_name=param_name)


def trace_locus(g: ratfun.RationalTF, cfg: TraceConfig) -> Locus:
  """Root locus of D + K N by the residue-driven difference equation."""
  return _trace_pencil(Pencil.from_plant(g), cfg, "K")


def exact_locus(g: ratfun.RationalTF, cfg: TraceConfig) -> Locus:
  """Baseline: all roots of D + K N at every grid point, greedily matched."""
  return _exact_pencil(Pencil.from_plant(g), cfg, "K")


def _contour_pencil(model: sensitivity.ParamCharPoly,
                    ref: sensitivity.ParamRef) -> Tuple[Pencil, str]:
  idx = model.index(ref)
  A, B, dependence = model.decomposition(idx)
  square = dependence == sensitivity.Dependence.SQUARE_AFFINE
  return Pencil.from_polys(A, B, square), model.params[idx].name


def trace_contour(model: sensitivity.ParamCharPoly,
                  ref: sensitivity.ParamRef,
                  cfg: TraceConfig) -> Locus:
  """Contour locus over one physical parameter; k runs over its values."""
  pencil, name = _contour_pencil(model, ref)
  return _trace_pencil(pencil, cfg, name)


def exact_contour(model: sensitivity.ParamCharPoly,
                  ref: sensitivity.ParamRef,
                  cfg: TraceConfig) -> Locus:
  pencil, name = _contour_pencil(model, ref)
  return _exact_pencil(pencil, cfg, name)


def locus_error(test: Locus, truth: Locus) -> Tuple[float, float]:
  """Mean and max distance between two loci on the same grid.

  Rows are aligned by nearest neighbour before measuring; NaN samples are
  skipped.
  """
  if test.poles.shape != truth.poles.shape:
    raise errors.GridMismatch(
        f"Shapes differ: {test.poles.shape} vs {truth.poles.shape}")
  scale = max(1.0, float(np.abs(truth.k).max()))
  if not np.allclose(test.k, truth.k, rtol=0.0, atol=1e-12 * scale):
    raise errors.GridMismatch("k grids differ")

  distances = []
  for row_test, row_truth in zip(test.poles, truth.poles):
    aligned = matching.match_nearest(row_test, row_truth)
    distances.append(np.abs(row_test - aligned))
  distances = np.concatenate(distances) if distances else np.empty(0)
  distances = distances[np.isfinite(distances)]
  if distances.size == 0:
    return float("nan"), float("nan")
  return float(distances.mean()), float(distances.max())
