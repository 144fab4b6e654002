from typing import List, Optional, Sequence
import numpy as np
import config
import matplotlib.pyplot as plt
from datatypes import Locus, VelocityField


class LocusPlotter:
  """Static SVG figures of loci and pole velocity vectors."""

  def __init__(self,
               nr_colors: int,
               cmap_name: Optional[str] = None,
               arrows_per_branch: Optional[int] = None,
               arrow_scale: float = 1.0) -> None:
    self.colors = config.generate_colors(nr_colors, cmap_name)
    self.arrows_per_branch = (config.SVG_ARROWS_PER_BRANCH
                              if arrows_per_branch is None else
                              arrows_per_branch)
    self.arrow_scale = arrow_scale

  def _new_axes(self, title: str) -> tuple:
    fig, ax = plt.subplots(figsize=config.SVG_FIG_SIZE)
    ax.axhline(0.0, color="0.7", linewidth=0.6)
    ax.axvline(0.0, color="0.7", linewidth=0.6)
    ax.set_xlabel("Re(s)")
    ax.set_ylabel("Im(s)")
    ax.set_title(title)
    ax.grid(True, linewidth=0.3)
    return fig, ax

  def _save(self, fig: plt.Figure, file_path: str, description: str) -> str:
    fig.savefig(file_path, format="svg", metadata={"Description": description})
    plt.close(fig)
    return file_path

  def draw_arrows(self, ax: plt.Axes, origins: np.ndarray,
                  vectors: np.ndarray, color: str, scale: float) -> None:
    keep = np.isfinite(origins) & np.isfinite(vectors)
    if not keep.any():
      return
    ax.quiver(origins[keep].real,
              origins[keep].imag,
              vectors[keep].real * scale,
              vectors[keep].imag * scale,
              color=color,
              angles="xy",
              scale_units="xy",
              scale=1.0,
              width=0.004)

  def plot_locus(self,
                 locus: Locus,
                 file_path: str,
                 title: Optional[str] = None) -> str:
    fig, ax = self._new_axes(title or f"{locus.method} locus over "
                             f"{locus.param_name}")
    picks = np.linspace(0, locus.nr_samples - 1,
                        self.arrows_per_branch + 2).astype(int)[1:-1]
    for j in range(locus.nr_branches):
      color = self.colors[j % len(self.colors)]
      branch = locus.poles[:, j]
      ax.plot(branch.real, branch.imag, color=color, linewidth=1.2)
      ax.plot(branch.real[0], branch.imag[0], "x", color=color)
      ax.plot(branch.real[-1], branch.imag[-1], "o", color=color,
              fillstyle="none")
      if self.arrows_per_branch > 0:
        self.draw_arrows(ax, branch[picks], locus.velocities[picks, j], color,
                         self.arrow_scale)
    description = (f"kind=locus; method={locus.method}; "
                   f"param={locus.param_name}; "
                   f"range=[{locus.k[0]:g}, {locus.k[-1]:g}]; "
                   f"arrow_scale={self.arrow_scale:g}")
    return self._save(fig, file_path, description)

  def plot_velocity_fields(self,
                           fields: Sequence[VelocityField],
                           file_path: str,
                           scales: Optional[Sequence[float]] = None,
                           title: str = "Pole velocities") -> str:
    """Poles with one arrow per field, each field rescaled for display."""
    scales = list(scales) if scales is not None else [self.arrow_scale] * len(
        fields)
    fig, ax = self._new_axes(title)
    ax.plot(fields[0].poles.real, fields[0].poles.imag, "x", color="k")
    for idx, (field, scale) in enumerate(zip(fields, scales)):
      color = self.colors[idx % len(self.colors)]
      velocities = np.where(field.infinite, np.nan, field.velocities)
      self.draw_arrows(ax, field.poles, velocities, color, scale)
      ax.plot([], [], color=color, label=f"{field.param_name} (x{scale:g})")
    ax.legend(loc="best", fontsize="small")
    scale_text = ", ".join(f"{f.param_name}={s:g}" for f, s in zip(fields, scales))
    return self._save(fig, file_path,
                      f"kind=velocity_field; arrow_scale=[{scale_text}]")
