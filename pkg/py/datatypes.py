from typing import Any, Dict, Iterator, List, NamedTuple, Optional, Union
import dataclasses
import enum
import math
import numpy as np
import config
import errors


@dataclasses.dataclass
class PoleResidueSet:
  """Poles with multiplicities and their (generalized) residues.

  For a simple pole the residue is the cover-up coefficient of 1/(s - p); for
  a pole of multiplicity r it is the leading Laurent coefficient of
  1/(s - p)^r.
  """
  poles: np.ndarray
  multiplicities: np.ndarray
  residues: np.ndarray
  gain_K: Optional[float] = None

  def __len__(self) -> int:
    return len(self.poles)

  @property
  def entries(self) -> List[tuple]:
    return [(complex(p), int(m), complex(r))
            for p, m, r in zip(self.poles, self.multiplicities, self.residues)]

  @property
  def is_simple(self) -> bool:
    return bool(np.all(self.multiplicities == 1))

  def reconstruct(self, s: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
    """Sum of residue / (s - p) over the poles; simple poles only."""
    if not self.is_simple:
      raise errors.InvalidMultiplicity(
          "Partial-fraction reconstruction needs simple poles")
    s = np.asarray(s, dtype=complex)
    terms = self.residues / (s[..., None] - self.poles)
    return terms.sum(axis=-1)

  def is_conjugate_symmetric(self, rel_tol: float = 1e-12) -> bool:
    pole_scale = max(1.0, float(np.abs(self.poles).max(initial=0.0)))
    res_scale = max(1e-300, float(np.abs(self.residues).max(initial=0.0)))
    for p, r in zip(self.poles, self.residues):
      partner = int(np.argmin(np.abs(self.poles - np.conj(p))))
      if abs(self.poles[partner] - np.conj(p)) > rel_tol * pole_scale:
        return False
      if abs(self.residues[partner] - np.conj(r)) > rel_tol * res_scale:
        return False
    return True

  def to_dict(self) -> Dict[str, Any]:
    return {
        "gain_K": self.gain_K,
        "poles": [[p.real, p.imag] for p in self.poles],
        "multiplicities": self.multiplicities.tolist(),
        "residues": [[r.real, r.imag] for r in self.residues],
    }


@dataclasses.dataclass
class VelocityField:
  at_gain: float
  poles: np.ndarray
  multiplicities: np.ndarray
  velocities: np.ndarray
  kbar: np.ndarray
  param_name: str = "K"

  def __len__(self) -> int:
    return len(self.poles)

  @property
  def infinite(self) -> np.ndarray:
    """Entries at repeated poles, whose speed diverges."""
    return self.multiplicities > 1

  @property
  def log_slopes(self) -> np.ndarray:
    m = self.multiplicities.astype(float)
    return np.where(self.infinite, -(m - 1.0) / m, np.nan)

  @property
  def entries(self) -> List[tuple]:
    return [(complex(p), int(m), complex(v))
            for p, m, v in zip(self.poles, self.multiplicities, self.velocities)]

  def step_magnitudes(self, dK: float) -> np.ndarray:
    """Expected |dp| for a gain step of size dK, per entry."""
    dK = abs(dK)
    m = self.multiplicities.astype(float)
    finite = np.abs(np.where(self.infinite, 0.0, self.velocities)) * dK
    repeated = (np.abs(self.kbar) * dK)**(1.0 / m)
    return np.where(self.infinite, repeated, finite)

  def to_dict(self) -> Dict[str, Any]:
    return {
        "param": self.param_name,
        "at": self.at_gain,
        "poles": [[p.real, p.imag] for p in self.poles],
        "multiplicities": self.multiplicities.tolist(),
        "velocities": [[v.real, v.imag] for v in self.velocities],
        "kbar": [[k.real, k.imag] for k in self.kbar],
    }


@dataclasses.dataclass(frozen=True)
class TraceConfig:
  k_start: float
  k_end: float
  dk: Optional[float] = None
  stabilizer_on: bool = True
  reanchor_every: Optional[int] = None
  branch_event_tol: Optional[float] = None
  max_step_factor: Optional[float] = None

  def __post_init__(self) -> None:
    # Unset fields pick up the current module settings.
    defaults = {
        "dk": config.DEFAULT_DK,
        "reanchor_every": config.DEFAULT_REANCHOR_EVERY,
        "branch_event_tol": config.BRANCH_EVENT_TOL,
        "max_step_factor": config.MAX_STEP_FACTOR,
    }
    for name, value in defaults.items():
      if getattr(self, name) is None:
        object.__setattr__(self, name, value)
    self._validate()

  def _validate(self) -> None:
    span = self.k_end - self.k_start
    if not (math.isfinite(self.k_start) and math.isfinite(self.k_end)):
      raise errors.InvalidTraceConfig("k range must be finite")
    if span == 0:
      raise errors.InvalidTraceConfig("k_end must differ from k_start")
    if not math.isfinite(self.dk) or self.dk == 0:
      raise errors.InvalidTraceConfig(f"dk must be nonzero, got {self.dk}")
    if self.dk < 0 and span > 0:
      raise errors.InvalidTraceConfig(
          f"dk={self.dk} points away from k_end={self.k_end}")
    if abs(self.dk) > abs(span):
      raise errors.InvalidTraceConfig(
          f"|dk|={abs(self.dk)} exceeds the range |{self.k_end} - "
          f"{self.k_start}|")
    if int(self.reanchor_every) != self.reanchor_every or self.reanchor_every < 0:
      raise errors.InvalidTraceConfig("reanchor_every must be a nonnegative "
                                      "integer")
    if self.branch_event_tol <= 0 or self.max_step_factor <= 0:
      raise errors.InvalidTraceConfig("event tolerances must be positive")

  @property
  def step(self) -> float:
    """Signed step, pointing from k_start to k_end."""
    return math.copysign(abs(self.dk), self.k_end - self.k_start)

  @property
  def n_samples(self) -> int:
    return int(math.floor(abs(self.k_end - self.k_start) / abs(self.dk) + 1e-9)) + 1

  def grid(self) -> np.ndarray:
    k = self.k_start + self.step * np.arange(self.n_samples)
    if abs(k[-1] - self.k_end) <= 1e-9 * abs(self.dk):
      k[-1] = self.k_end
    return k

  def to_dict(self) -> Dict[str, Any]:
    return dataclasses.asdict(self)


class EventKind(str, enum.Enum):
  BRANCH_POINT_SUSPECTED = "branch_point_suspected"
  REANCHORED = "reanchored"
  DEGREE_DROP = "degree_drop"


@dataclasses.dataclass
class LocusEvent:
  k: float
  kind: EventKind
  detail: str = ""
  index: int = -1

  def to_dict(self) -> Dict[str, Any]:
    return {
        "k": self.k,
        "kind": self.kind.value,
        "detail": self.detail,
        "index": self.index
    }


class Sample(NamedTuple):
  k: float
  pole: complex
  velocity: complex


@dataclasses.dataclass
class Locus:
  """Sampled loci: row i of `poles`/`velocities` belongs to k[i]."""
  k: np.ndarray
  poles: np.ndarray
  velocities: np.ndarray
  config: TraceConfig
  events: List[LocusEvent] = dataclasses.field(default_factory=list)
  method: str = "tracer"
  param_name: str = "K"

  @property
  def nr_samples(self) -> int:
    return len(self.k)

  @property
  def nr_branches(self) -> int:
    return self.poles.shape[1]

  @property
  def final_poles(self) -> np.ndarray:
    return self.poles[-1]

  @property
  def branches(self) -> List[List[Sample]]:
    return [[
        Sample(float(k), complex(p), complex(v))
        for k, p, v in zip(self.k, self.poles[:, j], self.velocities[:, j])
    ] for j in range(self.nr_branches)]

  def samples(self) -> Iterator[tuple]:
    """Yields (k, branch, pole, velocity) in grid-major order."""
    for i, k in enumerate(self.k):
      for j in range(self.nr_branches):
        yield float(k), j, complex(self.poles[i, j]), complex(
            self.velocities[i, j])

  def events_of(self, kind: EventKind) -> List[LocusEvent]:
    return [e for e in self.events if e.kind == kind]


@dataclasses.dataclass
class BenchRow:
  name: str
  reps: int = 0
  tracer_mean: float = math.nan
  tracer_median: float = math.nan
  tracer_min: float = math.nan
  exact_mean: float = math.nan
  exact_median: float = math.nan
  exact_min: float = math.nan
  err_mean: float = math.nan
  err_max: float = math.nan
  n_samples: int = 0
  nr_events: int = 0
  error: Optional[str] = None

  @property
  def speedup(self) -> float:
    if not self.tracer_mean > 0:
      return math.nan
    return self.exact_mean / self.tracer_mean

  @property
  def tracer_faster(self) -> bool:
    return self.tracer_mean < self.exact_mean

  def to_dict(self) -> Dict[str, Any]:
    d = dataclasses.asdict(self)
    d["speedup"] = self.speedup
    return d

  @classmethod
  def from_dict(cls, d: Dict[str, Any]) -> 'BenchRow':
    fields = {f.name for f in dataclasses.fields(cls)}
    return cls(**{k: v for k, v in d.items() if k in fields})


@dataclasses.dataclass
class BenchReport:
  rows: List[BenchRow]
  environment: Dict[str, str] = dataclasses.field(default_factory=dict)
  config: Dict[str, Any] = dataclasses.field(default_factory=dict)
  baseline: str = "exact per-step Aberth solve with greedy matching"
  timed: bool = True

  @property
  def nr_faster(self) -> int:
    return sum(row.tracer_faster for row in self.rows if row.error is None)

  def row(self, name: str) -> BenchRow:
    for row in self.rows:
      if row.name == name:
        return row
    raise KeyError(name)

  def to_dict(self) -> Dict[str, Any]:
    return {
        "baseline": self.baseline,
        "timed": self.timed,
        "environment": self.environment,
        "config": self.config,
        "rows": [row.to_dict() for row in self.rows],
    }

  @classmethod
  def from_dict(cls, d: Dict[str, Any]) -> 'BenchReport':
    return cls(rows=[BenchRow.from_dict(r) for r in d["rows"]],
               environment=d.get("environment", {}),
               config=d.get("config", {}),
               baseline=d.get("baseline", ""),
               timed=d.get("timed", True))
