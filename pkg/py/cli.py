from typing import Optional, Sequence
import argparse
import logging
import os
import sys
import config
import bench
import errors
import io_formats
import ratfun
import sensitivity
import tracer
import viz
from datatypes import Locus, TraceConfig

BUILTIN_MODELS = {"dcmotor": sensitivity.dc_motor_model}


def resolve_plant(ref: str) -> ratfun.RationalTF:
  """A PlantSpec JSON path, or the name of a benchmark plant (g1..g10, eq11)."""
  if os.path.exists(ref):
    return io_formats.load_plant(ref)
  name = ref.lower()
  if name in bench.ALIASES or name in bench.CASE_NAMES:
    return bench.corpus([name])[0].plant
  return io_formats.load_plant(ref)


def resolve_model(ref: str) -> sensitivity.ParamCharPoly:
  if os.path.exists(ref):
    return io_formats.load_param_model(ref)
  if ref.lower() in BUILTIN_MODELS:
    return BUILTIN_MODELS[ref.lower()]()
  return io_formats.load_param_model(ref)


def _stem(ref: str) -> str:
  return os.path.splitext(os.path.basename(ref))[0]


def _write_locus(locus: Locus, args: argparse.Namespace, stem: str) -> None:
  csv_path = args.out or os.path.join(config.OUTPUT_PATH,
                                      f"{stem}_{locus.method}.csv")
  out_dir = os.path.dirname(csv_path)
  if out_dir:
    os.makedirs(out_dir, exist_ok=True)
  io_formats.write_locus_csv(locus, csv_path)
  io_formats.write_events(locus, io_formats.events_path(csv_path))
  logging.info(f"Wrote {locus.nr_branches} branches x {locus.nr_samples} "
               f"samples to {csv_path}")
  if args.svg:
    svg_path = os.path.splitext(csv_path)[0] + ".svg"
    plotter = viz.LocusPlotter(locus.nr_branches,
                               arrows_per_branch=args.arrows,
                               arrow_scale=args.arrow_scale)
    plotter.plot_locus(locus, svg_path, title=f"{stem}: {locus.method} locus")
    logging.info(f"Wrote {svg_path}")

  final = ", ".join(
      io_formats.format_number(p, args.digits) for p in locus.final_poles)
  print(f"{locus.param_name}={locus.k[-1]:g}: {final}")
  if locus.events:
    print(f"{len(locus.events)} events, see "
          f"{io_formats.events_path(csv_path)}")


def cmd_residues(args: argparse.Namespace) -> int:
  plant = resolve_plant(args.plant)
  prs = ratfun.closed_loop_residues(plant, args.gain)
  field = sensitivity.gain_velocities(plant, args.gain)
  print(io_formats.format_residue_table(field, prs, args.digits))
  return 0


def cmd_trace(args: argparse.Namespace) -> int:
  plant = resolve_plant(args.plant)
  cfg = TraceConfig(args.kmin,
                    args.kmax,
                    args.dk,
                    stabilizer_on=not args.no_stabilizer,
                    reanchor_every=args.reanchor)
  run = tracer.trace_locus if args.method == "tracer" else tracer.exact_locus
  _write_locus(run(plant, cfg), args, _stem(args.plant))
  return 0


def cmd_contour(args: argparse.Namespace) -> int:
  model = resolve_model(args.model)
  h = model.params[model.index(args.param)].value
  kmin = 0.5 * h if args.kmin is None else args.kmin
  kmax = 1.5 * h if args.kmax is None else args.kmax
  dk = abs(h) / 100.0 if args.dk is None and h != 0 else args.dk
  cfg = TraceConfig(kmin,
                    kmax,
                    dk,
                    stabilizer_on=not args.no_stabilizer,
                    reanchor_every=args.reanchor)
  run = tracer.trace_contour if args.method == "tracer" else tracer.exact_contour
  _write_locus(run(model, args.param, cfg), args,
               f"{_stem(args.model)}_{args.param}")
  return 0


def cmd_param_vel(args: argparse.Namespace) -> int:
  model = resolve_model(args.model)
  fields = [sensitivity.param_velocities(model, name) for name in model.names]
  print(io_formats.format_velocity_table(fields, args.digits))
  if args.svg:
    scales = args.arrow_scale or [1.0]
    if len(scales) == 1:
      scales = scales * len(fields)
    if len(scales) != len(fields):
      raise errors.InvalidArgument(
          f"--arrow-scale takes 1 or {len(fields)} values, got {len(scales)}")
    svg_path = args.out or os.path.join(config.OUTPUT_PATH,
                                        f"{_stem(args.model)}_velocities.svg")
    plotter = viz.LocusPlotter(len(fields))
    plotter.plot_velocity_fields(fields, svg_path, scales=scales)
    logging.info(f"Wrote {svg_path}")
  return 0


def cmd_bench(args: argparse.Namespace) -> int:
  cases = bench.corpus(args.cases.split(",") if args.cases else None)
  cfg = None
  if args.dk is not None or args.no_stabilizer:
    cfg = TraceConfig(config.BENCH_K_START,
                      config.BENCH_K_END,
                      args.dk,
                      stabilizer_on=not args.no_stabilizer)
  report = bench.run_bench(args.reps or config.BENCH_REPS,
                           cfg=cfg,
                           cases=cases,
                           timing=not args.no_timing)
  json_path, txt_path = io_formats.write_report(report, args.out or
                                                config.OUTPUT_PATH)
  print(io_formats.format_bench_table(report))
  logging.info(f"Wrote {json_path} and {txt_path}")
  return 0


def _add_trace_flags(parser: argparse.ArgumentParser,
                     kmin: Optional[float], kmax: Optional[float]) -> None:
  parser.add_argument('--kmin', type=float, default=kmin)
  parser.add_argument('--kmax', type=float, default=kmax)
  parser.add_argument('--dk', type=float, help='Grid step (sign optional).')
  parser.add_argument('--method', choices=['tracer', 'exact'], default='tracer')
  parser.add_argument('--no-stabilizer',
                      action='store_true',
                      help='Drop the stabilizing term from the update.')
  parser.add_argument('--reanchor',
                      type=int,
                      help='Exact re-solve every N steps (0 = never).')
  parser.add_argument('--out', help='CSV path; events go next to it.')
  parser.add_argument('--svg', action='store_true')
  parser.add_argument('--arrows',
                      type=int,
                      help='Velocity arrows per branch in the SVG.')
  parser.add_argument('--arrow-scale', type=float, default=1.0)
  parser.add_argument('--digits', type=int)


def build_parser() -> argparse.ArgumentParser:
  parser = argparse.ArgumentParser(
      description='Root loci, contour loci and pole velocities from '
      'partial-fraction residues.')
  parser.add_argument('--settings', help='JSON file overriding config values.')
  parser.add_argument('-v', '--verbose', action='store_true')
  sub = parser.add_subparsers(dest='command', required=True)

  p = sub.add_parser('residues', help='Closed-loop residues and velocities.')
  p.add_argument('plant', help='PlantSpec JSON or a name such as g1 or eq11.')
  p.add_argument('-K', '--gain', type=float, default=0.0)
  p.add_argument('--digits', type=int)
  p.set_defaults(func=cmd_residues)

  p = sub.add_parser('trace', help='Root locus over the feedback gain.')
  p.add_argument('plant', help='PlantSpec JSON or a name such as g1 or eq11.')
  _add_trace_flags(p, kmin=0.0, kmax=10.0)
  p.set_defaults(func=cmd_trace)

  p = sub.add_parser('contour', help='Contour locus over one parameter.')
  p.add_argument('model', help='ParamModelSpec JSON or dcmotor.')
  p.add_argument('--param', required=True)
  _add_trace_flags(p, kmin=None, kmax=None)
  p.set_defaults(func=cmd_contour)

  p = sub.add_parser('paramvel', help='Pole velocities per parameter.')
  p.add_argument('model', help='ParamModelSpec JSON or dcmotor.')
  p.add_argument('--digits', type=int)
  p.add_argument('--svg', action='store_true')
  p.add_argument('--out', help='SVG path.')
  p.add_argument('--arrow-scale',
                 type=float,
                 nargs='+',
                 help='One display factor, or one per parameter.')
  p.set_defaults(func=cmd_param_vel)

  p = sub.add_parser('bench', help='Tracer versus exact baseline timings.')
  p.add_argument('--reps', type=int)
  p.add_argument('--dk', type=float)
  p.add_argument('--no-stabilizer', action='store_true')
  p.add_argument('--cases', help='Comma-separated subset, e.g. g1,g10.')
  p.add_argument('--no-timing',
                 action='store_true',
                 help='Accuracy only, cases run in parallel.')
  p.add_argument('--out', help='Directory for bench_report.{json,txt}.')
  p.set_defaults(func=cmd_bench)
  return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
  parser = build_parser()
  args = parser.parse_args(argv)

  logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                      format="%(asctime)s %(levelname)s: %(message)s")
  logging.captureWarnings(True)

  try:
    if args.settings:
      config.load_settings(args.settings)
    return args.func(args)
  except (errors.InvalidArgument, errors.UnknownParameter) as e:
    parser.print_usage(sys.stderr)
    print(f"error: {e}", file=sys.stderr)
    return 2
  except errors.LocusError as e:
    print(f"numeric failure: {type(e).__name__}: {e}", file=sys.stderr)
    return 3
  except (OSError, ValueError) as e:
    print(f"error: {e}", file=sys.stderr)
    return 2


if __name__ == "__main__":
  sys.exit(main())
