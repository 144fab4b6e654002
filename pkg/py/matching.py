from typing import Sequence
import numpy as np


def match_indices(reference: Sequence[complex],
                  candidates: Sequence[complex]) -> np.ndarray:
  """Greedy nearest-neighbour assignment of candidates to reference slots.

  Pairs are taken in order of increasing distance, ties broken by the
  candidate's real part and then its imaginary part. Non-finite reference
  values are matched last. Returns, per reference slot, the index of the
  assigned candidate or -1.
  """
  reference = np.asarray(reference, dtype=complex)
  candidates = np.asarray(candidates, dtype=complex)
  assignment = np.full(len(reference), -1, dtype=int)
  if len(reference) == 0 or len(candidates) == 0:
    return assignment

  with np.errstate(invalid="ignore"):
    dist = np.abs(reference[:, None] - candidates[None, :])
  dist[~np.isfinite(dist)] = np.inf

  nr_cand = len(candidates)
  cand_idx = np.tile(np.arange(nr_cand), len(reference))
  order = np.lexsort((candidates.imag[cand_idx], candidates.real[cand_idx],
                      dist.ravel()))

  ref_used = np.zeros(len(reference), dtype=bool)
  cand_used = np.zeros(nr_cand, dtype=bool)
  for flat in order:
    r, c = divmod(int(flat), nr_cand)
    if ref_used[r] or cand_used[c]:
      continue
    assignment[r] = c
    ref_used[r] = cand_used[c] = True
    if ref_used.all() or cand_used.all():
      break
  return assignment


def match_nearest(reference: Sequence[complex],
                  candidates: Sequence[complex]) -> np.ndarray:
  """Reorders `candidates` to line up with `reference`; gaps become NaN."""
  candidates = np.asarray(candidates, dtype=complex)
  assignment = match_indices(reference, candidates)
  out = np.full(len(assignment), complex(np.nan, np.nan))
  hit = assignment >= 0
  out[hit] = candidates[assignment[hit]]
  return out
