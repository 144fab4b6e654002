from typing import Optional
import numpy as np


class LocusError(Exception):
  """Base class for every numeric or input failure raised by this package."""


class InvalidArgument(LocusError, ValueError):
  pass


class InvalidTraceConfig(InvalidArgument):
  pass


class SpecParseError(InvalidArgument):
  pass


class ZeroLeadingCoefficient(LocusError):
  pass


class DegreeZero(LocusError):
  pass


class NoConvergence(LocusError):

  def __init__(self, message: str, best: Optional[np.ndarray] = None) -> None:
    super().__init__(message)
    self.best = best


class DegenerateDenominator(LocusError):
  pass


class ImproperTransferFunction(LocusError):
  pass


class DegreeDropAtK(LocusError):

  def __init__(self, k: float, leading: complex = 0.0) -> None:
    super().__init__(
        f"Leading coefficient of the characteristic polynomial vanishes at "
        f"K={k!r} (|lead|={abs(leading):.3e})")
    self.k = k
    self.leading = leading


class ImproperInput(LocusError):
  pass


class InvalidMultiplicity(LocusError):
  pass


class UnknownParameter(LocusError, KeyError):

  def __str__(self) -> str:
    return str(self.args[0]) if self.args else ""


class FallbackInconsistent(LocusError):
  pass


class ReassemblyMismatch(LocusError):
  pass


class NonAffineParameter(LocusError):
  pass


class CollidingEstimates(LocusError):

  def __init__(self, message: str, pair: Optional[tuple] = None) -> None:
    super().__init__(message)
    self.pair = pair


class GridMismatch(LocusError):
  pass


# Non-fatal conditions
class CommonFactorWarning(UserWarning):
  pass


class ZeroNumeratorWarning(UserWarning):
  pass


class PoleAtNumeratorRootWarning(UserWarning):
  pass
