

class SimulationError(RuntimeError):
	"""Base exception for simulation errors."""


class ConvergenceError(SimulationError):
	"""Raised when the steady-state solver exhausts its continuation schedule."""

	def __init__(self, message: str, *, best_residual: float, stage: str = "") -> None:
		super().__init__(f"{message} (best residual {best_residual:.3e})")
		self.best_residual = best_residual
		self.stage = stage


class IntegrationError(SimulationError):
	"""Raised when the time integrator fails (step-size underflow)."""

	def __init__(self, message: str, *, t_fail: float) -> None:
		super().__init__(f"{message} at t={t_fail:.6g}")
		self.t_fail = t_fail


class TracingError(SimulationError):
	"""Raised when curve tracing stops; carries the intracavity field reached."""

	def __init__(self, x: float, cause: BaseException) -> None:
		super().__init__(f"curve tracing stopped at x={x:.6g}: {cause}")
		self.x = x
		self.cause = cause


class PropagationError(SimulationError):
	"""Raised when the medium propagation fails at a position zeta in [0, 1]."""

	def __init__(self, zeta: float, cause: BaseException) -> None:
		super().__init__(f"medium propagation failed at zeta={zeta:.4f}: {cause}")
		self.zeta = zeta
		self.cause = cause


class CurveRangeError(SimulationError, ValueError):
	"""Raised when an input level lies outside the traced range of a curve."""

	def __init__(self, y: float, y_min: float, y_max: float) -> None:
		super().__init__(
			f"input {y:.6g} outside traced range [{y_min:.6g}, {y_max:.6g}]"
		)
		self.y = y
		self.y_min = y_min
		self.y_max = y_max


class SweepSpecError(SimulationError, ValueError):
	"""Raised for invalid sweep specifications."""


class CacheNotInitializedError(SimulationError):
	"""Raised when the result cache is used before ResultCacheConfig.init()."""


class DegenerateSteadyStateWarning(RuntimeWarning):
	"""Emitted when the steady state is not unique and a convention picks one."""


__all__ = [
	"SimulationError",
	"ConvergenceError",
	"IntegrationError",
	"TracingError",
	"PropagationError",
	"CurveRangeError",
	"SweepSpecError",
	"CacheNotInitializedError",
	"DegenerateSteadyStateWarning",
]
