from typing import Dict, List, Optional, Sequence, Tuple
import argparse
import concurrent.futures
import dataclasses
import datetime
import json
import logging
import platform
import time
import numpy as np
import config
import errors
import io_formats
import poly
import ratfun
import tracer
from datatypes import BenchReport, BenchRow, TraceConfig

# name -> (formula, gain, numerator factors, denominator factors), ascending.
_FACTORS: Dict[str, Tuple[str, float, List[List[float]], List[List[float]]]] = {
    "g1": ("(s+3)/(s(s+2))", 1.0, [[3, 1]], [[0, 1], [2, 1]]),
    "g2": ("4s/((s+4)((s+1)^2+2^2))", 4.0, [[0, 1]], [[4, 1], [5, 2, 1]]),
    "g3": ("10(s-1)/(s(s+1)(s^2+8s+25))", 10.0, [[-1, 1]],
           [[0, 1], [1, 1], [25, 8, 1]]),
    "g4": ("10(s+0.2)/((s-1)(s-2)(s+10))", 10.0, [[0.2, 1]],
           [[-1, 1], [-2, 1], [10, 1]]),
    "g5": ("0.8/(s((s+2)^2+1))", 0.8, [], [[0, 1], [5, 4, 1]]),
    "g6": ("12/(s(s+1)(s+2)(s+3))", 12.0, [],
           [[0, 1], [1, 1], [2, 1], [3, 1]]),
    "g7": ("12/(s((s+2)^2+1)(s+4))", 12.0, [], [[0, 1], [5, 4, 1], [4, 1]]),
    "g8": ("10(s+2)^2/(s^2(s+4)^2)", 10.0, [[2, 1], [2, 1]],
           [[0, 1], [0, 1], [4, 1], [4, 1]]),
    "g9": ("30(s^2+4s+25)/(s^2(s+2)(s+6))", 30.0, [[25, 4, 1]],
           [[0, 1], [0, 1], [2, 1], [6, 1]]),
    "g10": ("10(s+2)^2/(s^2(s+2)^2+3s(s+1)(s+3))", 10.0, [[2, 1], [2, 1]],
            [[0, 9, 16, 7, 1]]),
}

# The same plant, as used in the pole sensitivity worked example.
ALIASES: Dict[str, str] = {"eq11": "g2"}
CASE_NAMES: List[str] = list(_FACTORS)


@dataclasses.dataclass
class BenchCase:
  name: str
  formula: str
  plant: ratfun.RationalTF
  k_start: float = 0.0
  k_end: float = 10.0
  dk: float = 0.01

  def trace_config(self, stabilizer_on: bool = True) -> TraceConfig:
    return TraceConfig(self.k_start, self.k_end, self.dk,
                       stabilizer_on=stabilizer_on)


def _expand(gain: float, factors: Sequence[Sequence[float]]) -> poly.Polynomial:
  out = poly.Polynomial([gain])
  for factor in factors:
    out = out * poly.Polynomial(factor)
  return out


def corpus(names: Optional[Sequence[str]] = None) -> List[BenchCase]:
  """The ten benchmark plants, expanded from their factored forms."""
  names = CASE_NAMES if names is None else [
      ALIASES.get(n, n) for n in names
  ]
  cases = []
  for name in names:
    if name not in _FACTORS:
      raise errors.InvalidArgument(
          f"Unknown case {name!r}, expected one of {list(_FACTORS)}")
    formula, gain, num, den = _FACTORS[name]
    cases.append(
        BenchCase(name=name,
                  formula=formula,
                  plant=ratfun.make_tf(_expand(gain, num), _expand(1.0, den)),
                  k_start=config.BENCH_K_START,
                  k_end=config.BENCH_K_END,
                  dk=config.DEFAULT_DK))
  return cases


def expansion_mismatches(cases: Sequence[BenchCase],
                         file_path: str = config.EXPANSIONS_FILE) -> List[str]:
  """Names of cases whose expansion differs from the hand-expanded fixture."""
  with open(file_path, "r") as f:
    fixture = json.load(f)

  mismatches = []
  for case in cases:
    entry = fixture[case.name]
    num = poly.Polynomial.from_desc(entry["num"])
    den = poly.Polynomial.from_desc(entry["den"])
    if not (case.plant.num.allclose(num, 1e-14) and
            case.plant.den.allclose(den, 1e-14)):
      logging.warning(f"Case {case.name} does not match its fixture expansion")
      mismatches.append(case.name)
  return mismatches


class StatsMeasurer:
  """Wall-clock samples of one timed section."""

  def __init__(self, label: str) -> None:
    self.label = label
    self.samples: List[float] = []
    self._start: float = 0.0

  def __enter__(self) -> 'StatsMeasurer':
    self._start = time.perf_counter()
    return self

  def __exit__(self, *exc) -> None:
    self.samples.append(time.perf_counter() - self._start)

  @property
  def mean(self) -> float:
    return float(np.mean(self.samples)) if self.samples else float("nan")

  @property
  def median(self) -> float:
    return float(np.median(self.samples)) if self.samples else float("nan")

  @property
  def min(self) -> float:
    return float(np.min(self.samples)) if self.samples else float("nan")


def _accuracy(case: BenchCase, cfg: TraceConfig) -> BenchRow:
  row = BenchRow(name=case.name)
  try:
    traced = tracer.trace_locus(case.plant, cfg)
    truth = tracer.exact_locus(case.plant, cfg)
    row.err_mean, row.err_max = tracer.locus_error(traced, truth)
    row.n_samples = traced.nr_samples
    row.nr_events = len(traced.events)
  except errors.LocusError as e:
    logging.error(f"Case {case.name} failed: {e}")
    row.error = f"{type(e).__name__}: {e}"
  return row


def _timed(case: BenchCase, cfg: TraceConfig, reps: int) -> BenchRow:
  row = BenchRow(name=case.name)
  try:
    # Warm-up over the first steps of the grid, not recorded.
    warmup = dataclasses.replace(
        cfg,
        k_end=cfg.k_start +
        cfg.step * min(config.BENCH_WARMUP_STEPS, cfg.n_samples - 1))
    tracer.trace_locus(case.plant, warmup)
    tracer.exact_locus(case.plant, warmup)

    tracer_clock, exact_clock = StatsMeasurer("tracer"), StatsMeasurer("exact")
    for _ in range(reps):
      with tracer_clock:
        traced = tracer.trace_locus(case.plant, cfg)
      with exact_clock:
        truth = tracer.exact_locus(case.plant, cfg)

    row.reps = len(tracer_clock.samples)
    row.tracer_mean, row.tracer_median, row.tracer_min = (
        tracer_clock.mean, tracer_clock.median, tracer_clock.min)
    row.exact_mean, row.exact_median, row.exact_min = (
        exact_clock.mean, exact_clock.median, exact_clock.min)
    row.err_mean, row.err_max = tracer.locus_error(traced, truth)
    row.n_samples = traced.nr_samples
    row.nr_events = len(traced.events)
    logging.info(f"{case.name}: tracer {row.tracer_mean * 1e3:.2f} ms, "
                 f"exact {row.exact_mean * 1e3:.2f} ms, "
                 f"speedup {row.speedup:.2f}x")
  except errors.LocusError as e:
    logging.error(f"Case {case.name} failed: {e}")
    row.error = f"{type(e).__name__}: {e}"
  return row


def environment() -> Dict[str, str]:
  clock = time.get_clock_info("perf_counter")
  return {
      "machine": platform.machine(),
      "processor": platform.processor(),
      "platform": platform.platform(),
      "python": platform.python_version(),
      "numpy": np.__version__,
      "clock": f"perf_counter ({clock.implementation}, "
               f"resolution {clock.resolution:g} s)",
      "timestamp": datetime.datetime.now().isoformat(timespec="seconds"),
  }


def run_bench(reps: int,
              cfg: Optional[TraceConfig] = None,
              cases: Optional[Sequence[BenchCase]] = None,
              timing: bool = True) -> BenchReport:
  """Times the tracer against the exact baseline on every case.

  Timed runs are serial. With `timing=False` only the accuracy columns are
  filled and the cases run in a thread pool. A failing case is recorded in
  its row and does not stop the run.
  """
  if int(reps) != reps or reps < 1:
    raise errors.InvalidArgument(f"reps must be a positive integer, got {reps}")
  cases = corpus() if cases is None else list(cases)

  def case_config(case: BenchCase) -> TraceConfig:
    return cfg if cfg is not None else case.trace_config()

  if timing:
    rows = [_timed(case, case_config(case), reps) for case in cases]
  else:
    with concurrent.futures.ThreadPoolExecutor(
        max_workers=config.BENCH_WORKERS) as pool:
      rows = list(
          pool.map(lambda case: _accuracy(case, case_config(case)), cases))

  report = BenchReport(rows=rows,
                       environment=environment(),
                       config=cfg.to_dict() if cfg is not None else {},
                       timed=timing)
  if timing:
    logging.info(f"Tracer faster on {report.nr_faster} of {len(rows)} cases")
  return report


def main() -> None:
  parser = argparse.ArgumentParser(
      description='Times the locus tracer against the exact per-step solver.')
  parser.add_argument('--reps', type=int, default=config.BENCH_REPS)
  parser.add_argument('--no-timing',
                      action='store_true',
                      help='Accuracy columns only, cases run in parallel.')
  args = parser.parse_args()

  logging.basicConfig(level=logging.INFO,
                      format="%(asctime)s %(levelname)s: %(message)s")

  report = run_bench(args.reps, timing=not args.no_timing)
  print(io_formats.format_bench_table(report))


if __name__ == "__main__":
  main()
