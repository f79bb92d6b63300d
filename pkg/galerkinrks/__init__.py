from .config import ExperimentConfig
from .diagnostics import (
	admissibility_report, best_approximation, condition_number, error_metrics, l2_distance,
	residue, stability_bounds)
from .experiments import ExperimentRunner
from .kernels import Generator, GeneratorKind, QuadratureSpec, correlation, integrate
from .model import (
	FriSignal, ShiftedFamily, apply_integral_operator, assemble_correlation, build_family,
	build_truncated_kernel, eval_signal, make_test_signal)
from .reconstruct import (
	apply_projector, assemble_system, build_projector, iterate_ap, solve_dual_galerkin,
	solve_galerkin, solve_subgalerkin_lsq)
from .sampling import (
	SamplingSet, capture, make_ctem, make_jittered, make_nonuniform, make_uniform, pre_reconstruct)

__all__ = [
	"ExperimentConfig",
	"ExperimentRunner",
	"FriSignal",
	"Generator",
	"GeneratorKind",
	"QuadratureSpec",
	"SamplingSet",
	"ShiftedFamily",
	"admissibility_report",
	"apply_integral_operator",
	"apply_projector",
	"assemble_correlation",
	"assemble_system",
	"best_approximation",
	"build_family",
	"build_projector",
	"build_truncated_kernel",
	"capture",
	"condition_number",
	"correlation",
	"error_metrics",
	"eval_signal",
	"integrate",
	"iterate_ap",
	"l2_distance",
	"make_ctem",
	"make_jittered",
	"make_nonuniform",
	"make_test_signal",
	"make_uniform",
	"pre_reconstruct",
	"residue",
	"solve_dual_galerkin",
	"solve_galerkin",
	"solve_subgalerkin_lsq",
	"stability_bounds",
]
