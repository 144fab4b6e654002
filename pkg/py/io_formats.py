from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import collections
import enum
import json
import math
import os
import numpy as np
import config
import errors
import poly
import ratfun
import sensitivity
from datatypes import (BenchReport, EventKind, Locus, LocusEvent,
                       PoleResidueSet, VelocityField)

CSV_HEADER = "k,branch,re,im,vel_re,vel_im"


def pythonize(d: Any) -> Any:
  """Transforms numpy arrays, scalars, enums and complex values to native
  JSON-ready Python types. Complex numbers become [re, im] pairs."""
  if isinstance(d, dict):
    return {pythonize(k): pythonize(v) for k, v in d.items()}
  if isinstance(d, (np.ndarray, list, tuple)):
    return [pythonize(v) for v in d]
  if isinstance(d, enum.Enum):
    return d.value
  if isinstance(d, (complex, np.complexfloating)):
    return [float(d.real), float(d.imag)]
  if isinstance(d, np.floating):
    return float(d)
  if isinstance(d, (np.integer, np.bool_)):
    return d.item()
  if isinstance(d, collections.abc.KeysView):
    return list(d)
  return d


def _load_json(file_path: str) -> Any:
  try:
    with open(file_path, "r") as f:
      return json.load(f)
  except FileNotFoundError:
    raise errors.SpecParseError(f"No such file: {file_path}")
  except json.JSONDecodeError as e:
    raise errors.SpecParseError(f"Could not decode {file_path}: {e}")


def _scalar(value: Any, where: str) -> complex:
  if isinstance(value, (int, float)) and not isinstance(value, bool):
    return complex(value)
  if (isinstance(value, list) and len(value) == 2 and
      all(isinstance(v, (int, float)) for v in value)):
    return complex(value[0], value[1])
  raise errors.SpecParseError(f"{where}: expected a number or [re, im], got "
                              f"{value!r}")


def _coeff_list(values: Any, order: str, where: str) -> np.ndarray:
  if not isinstance(values, list) or not values:
    raise errors.SpecParseError(f"{where}: expected a nonempty list")
  coeffs = np.array([_scalar(v, where) for v in values])
  return coeffs if order == "asc" else coeffs[::-1]


def _order(data: Dict[str, Any], where: str) -> str:
  if "order" not in data:
    raise errors.SpecParseError(f"{where}: coefficient order is required "
                                f"('asc' or 'desc')")
  order = data["order"]
  if order not in ("asc", "desc"):
    raise errors.SpecParseError(f"{where}: order must be 'asc' or 'desc', got "
                                f"{order!r}")
  return order


def parse_plant(data: Dict[str, Any]) -> ratfun.RationalTF:
  """Plant from {num, den, order} or {zeros, poles, gain}."""
  if not isinstance(data, dict):
    raise errors.SpecParseError("Plant spec must be a JSON object")
  coeff_form = "num" in data or "den" in data
  zpk_form = "zeros" in data or "poles" in data or "gain" in data
  if coeff_form == zpk_form:
    raise errors.SpecParseError(
        "Plant spec needs exactly one of {num, den, order} or "
        "{zeros, poles, gain}")

  if coeff_form:
    if "num" not in data or "den" not in data:
      raise errors.SpecParseError("Plant spec needs both num and den")
    order = _order(data, "plant")
    return ratfun.make_tf(_coeff_list(data["num"], order, "num"),
                          _coeff_list(data["den"], order, "den"))

  for key in ("zeros", "poles", "gain"):
    if key not in data:
      raise errors.SpecParseError(f"Plant spec is missing {key!r}")
  if not isinstance(data["zeros"], list) or not isinstance(data["poles"], list):
    raise errors.SpecParseError("zeros and poles must be lists")
  zeros = [_scalar(z, "zeros") for z in data["zeros"]]
  poles = [_scalar(p, "poles") for p in data["poles"]]
  return ratfun.from_zpk(zeros, poles, _scalar(data["gain"], "gain"))


def load_plant(file_path: str) -> ratfun.RationalTF:
  return parse_plant(_load_json(file_path))


def parse_param_model(data: Dict[str, Any]) -> sensitivity.ParamCharPoly:
  """Parameter model with an explicit A/B split per parameter."""
  if not isinstance(data, dict) or not isinstance(data.get("params"), list):
    raise errors.SpecParseError("Parameter model needs a 'params' list")
  order = _order(data, "model")
  params = []
  for entry in data["params"]:
    try:
      name, value, kind = entry["name"], float(entry["value"]), entry["kind"]
    except (KeyError, TypeError, ValueError) as e:
      raise errors.SpecParseError(f"Bad parameter entry {entry!r}: {e}")
    if kind not in [k.value for k in sensitivity.ParameterKind]:
      raise errors.SpecParseError(f"Parameter {name!r}: unknown kind {kind!r}")
    if kind == sensitivity.ParameterKind.CONNECTION.value and not entry.get(
        "square_affine", False):
      raise errors.SpecParseError(
          f"Connection parameter {name!r} must declare square_affine: true")
    if "A" not in entry or "B" not in entry:
      raise errors.SpecParseError(f"Parameter {name!r} needs A and B lists")
    params.append(
        sensitivity.Parameter(
            name=name,
            value=value,
            kind=sensitivity.ParameterKind(kind),
            A=poly.Polynomial(_coeff_list(entry["A"], order, f"{name}.A")),
            B=poly.Polynomial(_coeff_list(entry["B"], order, f"{name}.B")),
            square_affine=entry.get("square_affine", False)))
  return sensitivity.ParamCharPoly(params=params, name=data.get("name", ""))


def load_param_model(file_path: str) -> sensitivity.ParamCharPoly:
  return parse_param_model(_load_json(file_path))


def write_locus_csv(locus: Locus, file_path: str) -> None:
  n = locus.nr_branches
  k = np.repeat(locus.k, n)
  branch = np.tile(np.arange(n), locus.nr_samples)
  poles = locus.poles.ravel()
  vel = locus.velocities.ravel()
  table = np.column_stack(
      [k, branch, poles.real, poles.imag, vel.real, vel.imag])
  np.savetxt(file_path,
             table,
             fmt=config.CSV_FORMAT,
             delimiter=",",
             header=CSV_HEADER,
             comments="")


def read_locus_csv(file_path: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
  """(k, poles, velocities) with poles/velocities shaped (samples, branches)."""
  table = np.loadtxt(file_path, delimiter=",", skiprows=1, ndmin=2)
  n = int(table[:, 1].max()) + 1
  rows = table.reshape(-1, n, 6)
  k = rows[:, 0, 0]
  poles = rows[:, :, 2] + 1j * rows[:, :, 3]
  velocities = rows[:, :, 4] + 1j * rows[:, :, 5]
  return k, poles, velocities


def events_path(csv_path: str) -> str:
  return os.path.splitext(csv_path)[0] + ".events.json"


def write_events(locus: Locus, file_path: str) -> None:
  payload = {
      "method": locus.method,
      "param": locus.param_name,
      "config": locus.config.to_dict(),
      "events": [e.to_dict() for e in locus.events],
  }
  with open(file_path, "w") as f:
    json.dump(pythonize(payload), f, indent=2)


def read_events(file_path: str) -> List[LocusEvent]:
  data = _load_json(file_path)
  return [
      LocusEvent(e["k"], EventKind(e["kind"]), e["detail"], e["index"])
      for e in data["events"]
  ]


def write_report(report: BenchReport, out_dir: str) -> Tuple[str, str]:
  os.makedirs(out_dir, exist_ok=True)
  json_path = os.path.join(out_dir, "bench_report.json")
  txt_path = os.path.join(out_dir, "bench_report.txt")
  with open(json_path, "w") as f:
    json.dump(pythonize(report.to_dict()), f, indent=2)
  with open(txt_path, "w") as f:
    f.write(format_bench_table(report) + "\n")
  return json_path, txt_path


def read_report(file_path: str) -> BenchReport:
  return BenchReport.from_dict(_load_json(file_path))


def format_number(z: Union[complex, float],
                  digits: Optional[int] = None) -> str:
  """Full precision unless `digits` is given; complex values as a+bj."""
  spec = f".{digits}g" if digits is not None else ".17g"
  z = complex(z)
  if math.isnan(z.real) or math.isnan(z.imag):
    return "nan"
  if z.imag == 0:
    return f"{z.real:{spec}}"
  sign = "-" if z.imag < 0 else "+"
  return f"{z.real:{spec}}{sign}{abs(z.imag):{spec}}j"


def format_residue_table(field: VelocityField,
                         prs: PoleResidueSet,
                         digits: Optional[int] = None) -> str:
  lines = ["pole, multiplicity, residue, velocity"]
  for (pole, mult, residue), velocity in zip(prs.entries, field.velocities):
    lines.append(", ".join([
        format_number(pole, digits),
        str(mult),
        format_number(residue, digits),
        format_number(velocity, digits) if mult == 1 else "inf",
    ]))
  return "\n".join(lines)


def format_velocity_table(fields: Sequence[VelocityField],
                          digits: Optional[int] = None) -> str:
  """One row per pole, one velocity column per parameter."""
  lines = [", ".join(["pole"] + [f.param_name for f in fields])]
  base = fields[0]
  for j, pole in enumerate(base.poles):
    cells = [format_number(pole, digits)]
    for field in fields:
      # Poles come back in canonical order; realign in case a field differs.
      nearest = int(np.argmin(np.abs(field.poles - pole)))
      cells.append(format_number(field.velocities[nearest], digits))
    lines.append(", ".join(cells))
  return "\n".join(lines)


def format_bench_table(report: BenchReport) -> str:
  header = (f"{'case':<6}{'reps':>5}{'tracer ms':>12}{'exact ms':>12}"
            f"{'speedup':>9}{'err_mean':>12}{'err_max':>12}{'events':>8}")
  lines = [header, "-" * len(header)]
  for row in report.rows:
    if row.error is not None:
      lines.append(f"{row.name:<6} FAILED: {row.error}")
      continue
    lines.append(f"{row.name:<6}{row.reps:>5}{row.tracer_mean * 1e3:>12.3f}"
                 f"{row.exact_mean * 1e3:>12.3f}{row.speedup:>9.2f}"
                 f"{row.err_mean:>12.3e}{row.err_max:>12.3e}"
                 f"{row.nr_events:>8}")
  if report.timed:
    lines.append(f"tracer faster on {report.nr_faster} of "
                 f"{len(report.rows)} cases (baseline: {report.baseline})")
  return "\n".join(lines)
