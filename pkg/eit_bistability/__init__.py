from eit_bistability.bloch import (
	AtomParams,
	DensityState,
	Drive,
	SolverOptions,
	Trajectory,
	bloch_jacobian,
	bloch_rhs,
	integrate,
	steady_state,
	weak_probe_coherence,
	weak_probe_spectrum,
)
from eit_bistability.cavity import (
	CavityMode,
	CavityParams,
	Jump,
	ScanPoint,
	detect_jumps,
	hysteresis_scan,
	input_from_output,
	propagate_medium,
	ring_fixed_point,
	ring_map,
	state_equation,
)
from eit_bistability.config import (
	ConfigError,
	ResultCacheConfig,
	RunConfig,
	apply_overrides,
	dump_config,
	load_config,
	parse_config,
)
from eit_bistability.curves import OBCurve, count_solutions, trace_ob_curve
from eit_bistability.exceptions import (
	ConvergenceError,
	CurveRangeError,
	DegenerateSteadyStateWarning,
	IntegrationError,
	PropagationError,
	SimulationError,
	SweepSpecError,
	TracingError,
)
from eit_bistability.presets import PRESET_NAMES, figure_preset, preset_config
from eit_bistability.sweep import SweepRecord, SweepResult, SweepSpec, arun_sweep, run_sweep

__all__ = [
	"AtomParams",
	"DensityState",
	"Drive",
	"SolverOptions",
	"Trajectory",
	"bloch_jacobian",
	"bloch_rhs",
	"integrate",
	"steady_state",
	"weak_probe_coherence",
	"weak_probe_spectrum",
	"CavityMode",
	"CavityParams",
	"Jump",
	"ScanPoint",
	"detect_jumps",
	"hysteresis_scan",
	"input_from_output",
	"propagate_medium",
	"ring_fixed_point",
	"ring_map",
	"state_equation",
	"ConfigError",
	"ResultCacheConfig",
	"RunConfig",
	"apply_overrides",
	"dump_config",
	"load_config",
	"parse_config",
	"OBCurve",
	"count_solutions",
	"trace_ob_curve",
	"ConvergenceError",
	"CurveRangeError",
	"DegenerateSteadyStateWarning",
	"IntegrationError",
	"PropagationError",
	"SimulationError",
	"SweepSpecError",
	"TracingError",
	"PRESET_NAMES",
	"figure_preset",
	"preset_config",
	"SweepRecord",
	"SweepResult",
	"SweepSpec",
	"arun_sweep",
	"run_sweep",
]
