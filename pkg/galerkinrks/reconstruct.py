import logging
import math
import warnings

import numpy as np
import scipy.linalg

from .exceptions import (
	DivergenceDetected, EmptySampleSet, NotContractive, RankDeficient, SingularGram,
	SingularSystem, WindowMismatch)
from .model import (
	SINGULARITY_THRESHOLD, FriSignal, assemble_correlation, gram_matrix, pair_with_family)

logger = logging.getLogger(__name__)

# Consecutive growing increments after which the iteration is declared divergent
DIVERGENCE_WINDOW = 50


class GalerkinSystem:
	"""
	The sampled Galerkin system.

	matrix[i + L, j + L~] = sum_n w_n phi_0(gamma_n - i - theta_i) phi~_0(gamma_n - j - theta~_j)
	and rhs[j + L~] = sum_n w_n f(gamma_n) phi~_0(gamma_n - j - theta~_j). The
	Galerkin equations read matrix^T c = rhs.

	Attributes:
		matrix (numpy.ndarray): (2L+1) x (2L~+1) system matrix.
		rhs (numpy.ndarray): Right-hand side of length 2L~+1.
		L (int): Trial window half-width.
		L_tilde (int): Test window half-width.
		set (SamplingSet): The sampling set.
		trial (ShiftedFamily): Trial family.
		test (ShiftedFamily): Test family.
		trial_samples (numpy.ndarray): Trial members at the samples, N x (2L+1).
		test_samples (numpy.ndarray): Test members at the samples, N x (2L~+1).
	"""

	def __init__(self, matrix, rhs, L, L_tilde, sampling_set, trial, test, trial_samples, test_samples):
		self.matrix = matrix
		self.rhs = rhs
		self.L = L
		self.L_tilde = L_tilde
		self.set = sampling_set
		self.trial = trial
		self.test = test
		self.trial_samples = trial_samples
		self.test_samples = test_samples

	@property
	def is_square(self):
		return self.L == self.L_tilde


class ObliqueProjector:
	"""
	The oblique projection P f = sum_{i,j} <f, phi~_i> b~_ij phi_j onto the trial window.

	Attributes:
		trial (ShiftedFamily): Trial family.
		test (ShiftedFamily): Test family.
		L (int): Window half-width.
		correlation (numpy.ndarray): The correlation matrix over [-L, L].
		inverse_block (numpy.ndarray): Its inverse (b~_ij).
	"""

	def __init__(self, trial, test, L, correlation, inverse_block):
		self.trial = trial
		self.test = test
		self.L = L
		self.correlation = correlation
		self.inverse_block = inverse_block


class IterationReport:
	"""
	Outcome of the approximation-projection iteration.

	Attributes:
		iterates_norms (list): Increment norms ||c_{m+1} - c_m||_2, one per step.
		converged (bool): Whether the last increment met the tolerance.
		steps (int): Number of steps taken.
		contraction_estimate (float): Measured geometric ratio of the increments.
		certified_bound (float): Spectral norm of A_Gamma A_L^-1 - I.
		certified_bound_inf (float): Induced infinity norm of the same matrix.
		truncation_bound (float): Geometric tail bound rho^(m+1) / (1 - rho) * ||c_0||.
		status (str): "converged", "max_iter" or "not_contractive".
	"""

	def __init__(self, certified_bound, certified_bound_inf):
		self.iterates_norms = []
		self.converged = False
		self.steps = 0
		self.contraction_estimate = float("nan")
		self.certified_bound = certified_bound
		self.certified_bound_inf = certified_bound_inf
		self.truncation_bound = float("inf")
		self.status = "running"

	def rows(self):
		return [(step, norm) for step, norm in enumerate(self.iterates_norms, start=1)]


def assemble_system(trial, test, rec, L, L_tilde=None):
	"""
	Assembles the sampled Galerkin system by direct summation over the samples.

	Args:
		trial (ShiftedFamily): Trial family.
		test (ShiftedFamily): Test family.
		rec (SampleRecord): Samples of the signal.
		L (int): Trial window half-width.
		L_tilde (int, optional): Test window half-width. Defaults to L.

	Returns:
		GalerkinSystem: The system.

	Raises:
		EmptySampleSet: If the record holds no samples.
	"""
	L_tilde = L if L_tilde is None else L_tilde
	trial.check_window(L)
	test.check_window(L_tilde)
	if len(rec.set) == 0:
		logger.error("Galerkin system requested from an empty sampling set")
		raise EmptySampleSet("the sampling set holds no samples")

	gamma = rec.set.abscissae
	weights = rec.set.weights
	trial_samples = trial.basis(gamma, L)
	test_samples = test.basis(gamma, L_tilde)
	matrix = trial_samples.T @ (weights[:, None] * test_samples)
	rhs = test_samples.T @ (weights * rec.values)
	return GalerkinSystem(matrix, rhs, L, L_tilde, rec.set, trial, test, trial_samples, test_samples)


def solve_galerkin(sys):
	"""
	Solves the square Galerkin equations matrix^T c = rhs.

	Args:
		sys (GalerkinSystem): A square system.

	Returns:
		FriSignal: The Galerkin reconstruction on the trial family.

	Raises:
		SingularSystem: If the condition number exceeds 1e12.
	"""
	if not sys.is_square:
		raise WindowMismatch(f"square solve needs L == L_tilde, got {sys.L} and {sys.L_tilde}")
	condition = float(np.linalg.cond(sys.matrix))
	if not np.isfinite(condition) or condition > SINGULARITY_THRESHOLD:
		logger.error(f"Galerkin system is numerically singular (condition {condition:.3e})")
		raise SingularSystem(f"Galerkin matrix condition number {condition:.3e}", condition=condition)

	factors = scipy.linalg.lu_factor(sys.matrix.T)
	coeffs = scipy.linalg.lu_solve(factors, sys.rhs)

	residual = np.linalg.norm(sys.matrix.T @ coeffs - sys.rhs)
	bound = 1e-10 * (np.linalg.norm(sys.matrix, 2) * np.linalg.norm(coeffs) + np.linalg.norm(sys.rhs))
	if residual > bound:
		logger.warning(f"Galerkin residual {residual:.3e} above {bound:.3e}")
	return FriSignal(sys.trial, coeffs)


def _dual_norm_whitening(sys):
	# Cholesky factor of the test Gram matrix; the identity for orthonormal test families
	gram = gram_matrix(sys.test, sys.L_tilde)
	if np.allclose(gram, np.eye(gram.shape[0]), rtol=0.0, atol=1e-14):
		return None
	try:
		return scipy.linalg.cholesky(gram, lower=True)
	except np.linalg.LinAlgError as e:
		logger.error(f"Test Gram matrix is not positive definite: {e}")
		raise SingularGram("test Gram matrix is not positive definite")


def solve_subgalerkin_lsq(sys):
	"""
	Solves the Galerkin equations in the least-squares sense.

	The residual matrix^T c - rhs is measured in the dual norm of the test
	span, which is the Euclidean norm for orthonormal test families.

	Args:
		sys (GalerkinSystem): A system with L_tilde >= L.

	Returns:
		FriSignal: The sub-Galerkin reconstruction on the trial family.

	Raises:
		RankDeficient: If the system does not have full column rank 2L+1.
	"""
	if sys.L_tilde < sys.L:
		raise WindowMismatch(f"least squares needs L_tilde >= L, got {sys.L_tilde} < {sys.L}")

	system = sys.matrix.T
	rhs = sys.rhs
	factor = _dual_norm_whitening(sys)
	if factor is not None:
		system = scipy.linalg.solve_triangular(factor, system, lower=True)
		rhs = scipy.linalg.solve_triangular(factor, rhs, lower=True)

	rank = int(np.linalg.matrix_rank(system))
	if rank < system.shape[1]:
		logger.error(f"Sub-Galerkin system has rank {rank} < {system.shape[1]}")
		raise RankDeficient(f"system rank {rank} below {system.shape[1]}", rank=rank)

	coeffs, _, _, _ = scipy.linalg.lstsq(system, rhs, lapack_driver="gelsy")
	return FriSignal(sys.trial, coeffs)


def solve_dual_galerkin(sys, g):
	"""
	Solves the dual Galerkin equations <S f, h~> = <S f, g> for every trial f.

	Args:
		sys (GalerkinSystem): A square system.
		g (FriSignal or callable): The signal to represent, evaluable at the samples.

	Returns:
		FriSignal: h~ on the test family.
	"""
	if not sys.is_square:
		raise WindowMismatch(f"dual solve needs L == L_tilde, got {sys.L} and {sys.L_tilde}")
	condition = float(np.linalg.cond(sys.matrix))
	if not np.isfinite(condition) or condition > SINGULARITY_THRESHOLD:
		raise SingularSystem(f"Galerkin matrix condition number {condition:.3e}", condition=condition)
	values = np.asarray(g(sys.set.abscissae), dtype=float)
	rhs = sys.trial_samples.T @ (sys.set.weights * values)
	coeffs = scipy.linalg.lu_solve(scipy.linalg.lu_factor(sys.matrix), rhs)
	return FriSignal(sys.test, coeffs)


def build_projector(trial, test, L, spec=None):
	"""
	Builds the oblique projection onto the trial window [-L, L] along the test family.

	Args:
		trial (ShiftedFamily): Trial family.
		test (ShiftedFamily): Test family.
		L (int): Window half-width.
		spec (QuadratureSpec, optional): Quadrature tolerances.

	Returns:
		ObliqueProjector: The projector.

	Raises:
		SingularCorrelation: If the correlation matrix is numerically singular.
	"""
	correlation = assemble_correlation(trial, test, L, spec)
	return ObliqueProjector(trial, test, L, correlation.entries, correlation.inverse())


def apply_projector(P, f, spec=None):
	"""
	Applies an oblique projection.

	Args:
		P (ObliqueProjector): The projector.
		f (FriSignal or callable or None): The function; None stands for zero.
		spec (QuadratureSpec, optional): Quadrature tolerances for general callables.

	Returns:
		FriSignal: P f on the trial window.
	"""
	if f is None:
		return FriSignal(P.trial, np.zeros(2 * P.L + 1))
	pairings = pair_with_family(f, P.test, P.L, spec)
	return FriSignal(P.trial, P.inverse_block.T @ pairings)


def run_ap_iteration(transfer, c0, tol=1e-12, max_iter=10000):
	"""
	Runs the coefficient recursion c_{m+1}^T = c_m^T - c_m^T T + c_0^T.

	The increments obey d_{m+1}^T = d_m^T (I - T) with d_0 = c_0, and are
	accumulated directly.

	Args:
		transfer (numpy.ndarray): The matrix T = A_Gamma A_L^-1.
		c0 (numpy.ndarray): Starting coefficients.
		tol (float): Increment tolerance.
		max_iter (int): Maximum number of steps.

	Returns:
		tuple: (coefficients, IterationReport).

	Raises:
		DivergenceDetected: If the increments grow for 50 consecutive steps.
	"""
	c0 = np.asarray(c0, dtype=float)
	step_matrix = np.eye(transfer.shape[0]) - transfer
	rho = float(np.linalg.norm(step_matrix, 2))
	report = IterationReport(rho, float(np.linalg.norm(step_matrix, np.inf)))

	if rho >= 1.0:
		report.status = "not_contractive"
		logger.warning(f"Iteration matrix norm {rho:.4f} is not below one")
		warnings.warn(NotContractive(f"iteration matrix norm {rho:.4f} >= 1"), stacklevel=2)

	coeffs = c0.copy()
	increment = c0
	growing = 0
	for step in range(1, max_iter + 1):
		increment = step_matrix.T @ increment
		coeffs = coeffs + increment
		norm = float(np.linalg.norm(increment))
		growing = growing + 1 if report.iterates_norms and norm > report.iterates_norms[-1] else 0
		report.iterates_norms.append(norm)
		report.steps = step

		if not math.isfinite(norm) or growing >= DIVERGENCE_WINDOW:
			report.status = "diverged"
			logger.error(f"Iteration diverged after {step} steps")
			raise DivergenceDetected(f"increments grew for {growing} consecutive steps", report=report)
		if norm <= tol:
			report.converged = True
			break

	report.contraction_estimate = _contraction_estimate(report.iterates_norms)
	if rho < 1.0:
		report.truncation_bound = rho ** (report.steps + 1) / (1.0 - rho) * float(np.linalg.norm(c0))
	if report.status != "not_contractive":
		report.status = "converged" if report.converged else "max_iter"
	if not report.converged:
		logger.warning(f"Iteration stopped after {report.steps} steps without meeting {tol:.1e}")
	logger.debug(f"Iteration took {report.steps} steps, rho={rho:.4f}")
	return coeffs, report


def _contraction_estimate(norms, span=10):
	if norms and norms[-1] == 0.0:
		return 0.0
	window = norms[-span:]
	if len(window) < 2 or window[0] <= 0.0:
		return float("nan")
	return (window[-1] / window[0]) ** (1.0 / (len(window) - 1))


def iterate_ap(trial, test, rec, L, P, tol=1e-12, max_iter=10000):
	"""
	Runs the approximation-projection iteration from g_0 = P S f.

	Args:
		trial (ShiftedFamily): Trial family.
		test (ShiftedFamily): Test family.
		rec (SampleRecord): Samples of the signal.
		L (int): Window half-width.
		P (ObliqueProjector): Projector on the same window.
		tol (float): Increment tolerance.
		max_iter (int): Maximum number of steps.

	Returns:
		tuple: (FriSignal, IterationReport).

	Raises:
		WindowMismatch: When P belongs to another window or to other families.
	"""
	if P.L != L:
		raise WindowMismatch(f"projector window {P.L} differs from {L}")
	if not (P.trial.same_basis(trial) and P.test.same_basis(test)):
		logger.error("Projector families differ from the iteration families")
		raise WindowMismatch("projector families differ from the trial and test families")
	system = assemble_system(trial, test, rec, L, L)
	transfer = system.matrix @ P.inverse_block
	c0 = P.inverse_block.T @ system.rhs
	coeffs, report = run_ap_iteration(transfer, c0, tol, max_iter)
	return FriSignal(trial, coeffs), report
