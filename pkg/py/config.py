from typing import Any, Dict, List, Optional
import os
import json
import logging
import matplotlib
matplotlib.use("Agg")
import matplotlib.colors
import matplotlib.pyplot as plt


def generate_colors(nr_colors: int, cmap_name: Optional[str] = None) -> List[str]:
  cmap = plt.get_cmap(cmap_name or BRANCH_CMAP)
  # Skip the black/white ends of the spectrum.
  indices = [0.1 + 0.8 * i / max(nr_colors - 1, 1) for i in range(nr_colors)]
  return [matplotlib.colors.to_hex(cmap(i)) for i in indices]


# Polynomial kernel
TRIM_REL_TOL: float = 1e-14
ABERTH_MAX_ITER: int = 500
ABERTH_STEP_TOL: float = 1e-13
ABERTH_ATTEMPTS: int = 3
NEWTON_POLISH_STEPS: int = 2
CLUSTER_ABS_TOL: float = 1e-8
CLUSTER_REL_TOL: float = 1e-6
RESIDUAL_REL_TOL: float = 1e-10

# Transfer functions
COMMON_FACTOR_TOL: float = 1e-8
DEGREE_DROP_TOL: float = 1e-12
ZERO_RESIDUE_REL_TOL: float = 1e-12

# Parameter sensitivity
FD_REL_STEP: float = 1e-6
REASSEMBLY_REL_TOL: float = 1e-10
FALLBACK_REL_TOL: float = 1e-6
AFFINE_CERT_REL_TOL: float = 1e-8
AFFINE_SAMPLE_REL_STEP: float = 0.1

# Tracer
DEFAULT_DK: float = 0.01
BRANCH_EVENT_TOL: float = 1e-3
MAX_STEP_FACTOR: float = 50.0
STEP_HISTORY: int = 10
STEP_GAP_RATIO: float = 0.2
STEP_ERROR_TOL: float = 3e-3
STEP_RESIDUAL_TOL: float = 2e-3
STEP_FLOOR_REL: float = 1e-9
COLLISION_TOL: float = 1e-12
DEFAULT_REANCHOR_EVERY: int = 0

# Benchmark
BENCH_K_START: float = 0.0
BENCH_K_END: float = 10.0
BENCH_REPS: int = 10
BENCH_WARMUP_STEPS: int = 50
BENCH_WORKERS: int = 4

# Output
CSV_FORMAT: str = "%.17g"
BRANCH_CMAP: str = "nipy_spectral"
SVG_ARROWS_PER_BRANCH: int = 4
SVG_FIG_SIZE: List[float] = [7.0, 6.0]

# Paths
PY_PATH: str = os.path.dirname(os.path.abspath(__file__))
ROOT_PATH: str = os.path.dirname(PY_PATH)
DATA_PATH: str = os.path.join(ROOT_PATH, "data")
PLANTS_PATH: str = os.path.join(DATA_PATH, "plants")
MODELS_PATH: str = os.path.join(DATA_PATH, "models")
EXPANSIONS_FILE: str = os.path.join(DATA_PATH, "expansions.json")
OUTPUT_PATH: str = os.path.join(ROOT_PATH, "output")

# Ensure paths are created if they don't exist
os.makedirs(OUTPUT_PATH, exist_ok=True)


def load_settings(file_path: str) -> Dict[str, Any]:
  """Overrides module settings from a JSON file of UPPER_CASE keys.

  Returns the settings that were applied.
  """
  with open(file_path, "r") as f:
    settings: Dict[str, Any] = json.load(f)

  applied = {}
  for key, value in settings.items():
    if not key.isupper() or key not in globals():
      logging.warning(f"Ignoring unknown setting {key!r} in {file_path}")
      continue
    globals()[key] = value
    applied[key] = value

  logging.info(f"Loaded {len(applied)} settings from {file_path}")
  return applied
