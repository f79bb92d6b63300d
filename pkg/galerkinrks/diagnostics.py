import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg
from scipy import ndimage

from .exceptions import EmptySampleSet, SingularGram, SingularMatrix
from .kernels import DEFAULT_SPEC, GeneratorKind, eval_generator, gauss_tail_product, integrate
from .model import (
	SINGULARITY_THRESHOLD, FriSignal, UniformGrid, cross_correlation, gram_matrix, pair_with_family)

logger = logging.getLogger(__name__)

# Rows of kernel values processed at once in the grid sweeps
_BLOCK_ROWS = 256


class AdmissibilityReport:
	"""
	Numerical estimates of the admissibility constants of a pre-reconstruction operator.

	Every value comes from grid sweeps or finite pencils and is approximate.

	Attributes:
		D1 (float): Lower bound of the test-pairing seminorm on the trial window.
		D2 (float): Upper bound of the same seminorm.
		D4 (float): Lower bound of the trial/test cross pairing.
		r0 (float): Composite bound; values below one indicate admissibility.
		residue (float): Residue of the trial window outside the covered set.
		kW (float): Amalgam norm estimate of the kernel.
		omega_delta (float): Amalgam norm estimate of the kernel oscillation.
		delta (float): Covering radius, half the largest sampling gap.
		stability_constant (float): D2 / D1.
		quasi_optimality (float): (D1 + D2) / D1, the constant of least-squares reconstructions.
	"""

	def __init__(self, D1, D2, D4, r0, residue, kW, omega_delta, delta):
		self.D1 = D1
		self.D2 = D2
		self.D4 = D4
		self.r0 = r0
		self.residue = residue
		self.kW = kW
		self.omega_delta = omega_delta
		self.delta = delta
		self.stability_constant = D2 / D1 if D1 > 0 else math.inf
		self.quasi_optimality = (D1 + D2) / D1 if D1 > 0 else math.inf
		self.approximate = True

	def rows(self):
		return [
			("D1", self.D1, "approximate"),
			("D2", self.D2, "approximate"),
			("D4", self.D4, "approximate"),
			("r0", self.r0, "approximate"),
			("residue", self.residue, "approximate"),
			("kW", self.kW, "approximate"),
			("omega_delta", self.omega_delta, "approximate"),
			("delta", self.delta, "convention"),
			("stability_constant", self.stability_constant, "approximate"),
			("quasi_optimality", self.quasi_optimality, "approximate"),
		]


class StabilityReport:
	"""
	Weighted sampling stability bounds C1 ||f|| <= (sum_n w_n f(gamma_n)^2)^(1/2) <= C2 ||f||.

	Attributes:
		C1 (float): Lower bound.
		C2 (float): Upper bound.
		ratio (float): C2 / C1.
		stable (bool): False for degenerate (numerically zero) lower bounds.
	"""

	def __init__(self, C1, C2):
		self.C1 = C1
		self.C2 = C2
		self.ratio = C2 / C1 if C1 > 0 else math.inf
		self.stable = C1 > math.sqrt(np.finfo(float).eps) * C2

	def rows(self):
		return [
			("C1", self.C1, "exact"),
			("C2", self.C2, "exact"),
			("ratio", self.ratio, "exact"),
			("stable", float(self.stable), "exact"),
		]


class ErrorMetrics:
	"""
	L2 errors of reconstructions against a reference signal.

	Attributes:
		e (float or None): Best-approximation error ||x - y||.
		entries (dict): Per candidate: "error" ||x - z||, "epsilon" ||z - y||,
			"ratio_bound" 1 + epsilon / e and "ratio" ||x - z|| / e.
	"""

	def __init__(self, e):
		self.e = e
		self.entries = {}

	def rows(self):
		rows = []
		if self.e is not None:
			rows.append(("e", self.e, "exact"))
		for name, entry in self.entries.items():
			for key, value in entry.items():
				rows.append((f"{name}.{key}", value, "exact"))
		return rows


def _checked_gram(gram):
	condition = float(np.linalg.cond(gram))
	if not np.isfinite(condition) or condition > SINGULARITY_THRESHOLD:
		logger.error(f"Gram matrix is numerically singular (condition {condition:.3e})")
		raise SingularGram(f"Gram matrix condition number {condition:.3e}", condition=condition)
	return gram


def _pencil_extremes(form, gram):
	"""
	Extremal generalized eigenvalues of the symmetric-definite pencil (form, gram).

	Args:
		form (numpy.ndarray): Symmetric matrix of the quadratic form.
		gram (numpy.ndarray): Positive definite Gram matrix.

	Returns:
		tuple: (smallest, largest) eigenvalue.
	"""
	_checked_gram(gram)
	try:
		eigenvalues = scipy.linalg.eigh(0.5 * (form + form.T), 0.5 * (gram + gram.T), eigvals_only=True)
	except np.linalg.LinAlgError as e:
		logger.error(f"Pencil eigensolve failed: {e}")
		raise SingularGram("Gram matrix is not positive definite")
	return float(eigenvalues[0]), float(eigenvalues[-1])


def squared_norm(x, spec=None, interval=None):
	"""
	Squared L2 norm of a signal; closed form for expansions, quadrature otherwise.
	"""
	if isinstance(x, FriSignal):
		return float(x.coeffs @ gram_matrix(x.family, x.L, spec) @ x.coeffs)
	return integrate(lambda t: np.asarray(x(t), dtype=float) ** 2, interval, spec)


def l2_distance(u, v, spec=None, interval=None):
	"""
	L2 distance between two signals.

	Expansions on the same basis use the Gram form of the coefficient
	difference; expansions on different bases use the block Gram form; other
	callables are integrated over the interval (or the truncated whole line).

	Args:
		u (FriSignal or callable): First signal.
		v (FriSignal or callable): Second signal.
		spec (QuadratureSpec, optional): Quadrature tolerances.
		interval (tuple, optional): Integration interval for general callables.

	Returns:
		float: ||u - v||_2.
	"""
	if isinstance(u, FriSignal) and isinstance(v, FriSignal):
		if u.family.same_basis(v.family):
			L = max(u.L, v.L)
			family = u.family if u.family.window_halfwidth >= L else v.family
			difference = u.padded(L) - v.padded(L)
			value = difference @ gram_matrix(family, L, spec) @ difference
		else:
			value = (squared_norm(u, spec) + squared_norm(v, spec)
				- 2.0 * u.coeffs @ cross_correlation(u.family, u.L, v.family, v.L, spec) @ v.coeffs)
		return math.sqrt(max(float(value), 0.0))

	difference = lambda t: (np.asarray(u(t), dtype=float) - np.asarray(v(t), dtype=float)) ** 2
	return math.sqrt(max(integrate(difference, interval, spec), 0.0))


def best_approximation(x, trial, L, spec=None):
	"""
	Computes the orthogonal projection of x onto the trial window.

	Args:
		x (FriSignal or callable): The signal.
		trial (ShiftedFamily): Trial family.
		L (int): Window half-width.
		spec (QuadratureSpec, optional): Quadrature tolerances.

	Returns:
		tuple: (FriSignal y, error ||x - y||).

	Raises:
		SingularGram: If the trial Gram matrix is numerically singular.
	"""
	gram = _checked_gram(gram_matrix(trial, L, spec))
	pairings = pair_with_family(x, trial, L, spec)
	coeffs = scipy.linalg.solve(gram, pairings, assume_a="pos")
	best = FriSignal(trial, coeffs)

	if isinstance(x, FriSignal) and x.family.same_basis(trial):
		error = l2_distance(x, best, spec)
	else:
		value = squared_norm(x, spec) - 2.0 * coeffs @ pairings + coeffs @ gram @ coeffs
		error = math.sqrt(max(float(value), 0.0))
	return best, error


def condition_number(M):
	"""
	Spectral condition number sigma_max / sigma_min.

	Args:
		M (array_like): Square matrix.

	Returns:
		float: The condition number.

	Raises:
		SingularMatrix: If sigma_min is zero at working precision.
	"""
	M = np.asarray(M, dtype=float)
	if M.ndim != 2 or M.shape[0] != M.shape[1]:
		raise ValueError(f"condition number needs a square matrix, got shape {M.shape}")
	singular_values = np.linalg.svd(M, compute_uv=False)
	if singular_values[-1] <= singular_values[0] * M.shape[0] * np.finfo(float).eps:
		logger.error("Matrix is singular at working precision")
		raise SingularMatrix(f"smallest singular value {singular_values[-1]:.3e} underflows")
	return float(singular_values[0] / singular_values[-1])


def stability_bounds(trial, L, sampling_set, spec=None):
	"""
	Computes the weighted sampling stability bounds on the trial window.

	C1^2 and C2^2 are the extremal eigenvalues of the pencil
	(Phi_s^T W Phi_s, G).

	Args:
		trial (ShiftedFamily): Trial family.
		L (int): Window half-width.
		sampling_set (SamplingSet): The samples.
		spec (QuadratureSpec, optional): Quadrature tolerances.

	Returns:
		StabilityReport: The bounds; an empty set gives a degenerate report.
	"""
	gram = _checked_gram(gram_matrix(trial, L, spec))
	if len(sampling_set) == 0:
		logger.warning("Stability bounds of an empty sampling set are degenerate")
		return StabilityReport(0.0, 0.0)

	samples = trial.basis(sampling_set.abscissae, L)
	form = samples.T @ (sampling_set.weights[:, None] * samples)
	lowest, highest = _pencil_extremes(form, gram)
	return StabilityReport(math.sqrt(max(lowest, 0.0)), math.sqrt(max(highest, 0.0)))


def merge_intervals(intervals):
	merged = []
	for lower, upper in sorted((float(a), float(b)) for a, b in intervals if b > a):
		if merged and lower <= merged[-1][1]:
			merged[-1][1] = max(merged[-1][1], upper)
		else:
			merged.append([lower, upper])
	return [tuple(item) for item in merged]


def _complement_segments(intervals, lower, upper):
	segments = []
	cursor = lower
	for a, b in intervals:
		if a > cursor:
			segments.append((cursor, min(a, upper)))
		cursor = max(cursor, b)
		if cursor >= upper:
			break
	if cursor < upper:
		segments.append((cursor, upper))
	return [(a, b) for a, b in segments if b > a]


def residue(trial, L, F, spec=None):
	"""
	Largest fraction of L2 mass a trial-window signal can keep outside F.

	E^2 is the largest eigenvalue of the pencil (G_out, G), where G_out holds
	the Gram integrals over [-W, W] minus F, plus the closed-form tails beyond
	the window for Gaussian generators.

	Args:
		trial (ShiftedFamily): Trial family.
		L (int): Window half-width.
		F (list): Intervals (a, b) whose union is F.
		spec (QuadratureSpec, optional): Quadrature tolerances and window W.

	Returns:
		float: E in [0, 1].
	"""
	spec = spec or DEFAULT_SPEC
	gram = _checked_gram(gram_matrix(trial, L, spec))
	intervals = merge_intervals(F)
	if not intervals:
		return 1.0

	window = spec.infinite_window
	segments = _complement_segments(intervals, -window, window)
	generator = trial.generator
	reach = generator.reach(spec)
	centers = trial.centers(L)
	size = centers.size

	def entry(i, j):
		a, b = float(centers[i]), float(centers[j])
		lower, upper = max(a, b) - reach, min(a, b) + reach
		breakpoints = [a + p for p in generator.breakpoints] + [b + p for p in generator.breakpoints]
		total = 0.0
		for s0, s1 in segments:
			lo, hi = max(s0, lower), min(s1, upper)
			if lo < hi:
				total += integrate(
					lambda t: eval_generator(generator, t - a) * eval_generator(generator, t - b),
					(lo, hi), spec, breakpoints)
		if generator.kind is GeneratorKind.GAUSS:
			total += float(gauss_tail_product(a, b, window, "right") + gauss_tail_product(a, b, -window, "left"))
		return total

	pairs = [(i, j) for i in range(size) for j in range(i, size)]
	with ThreadPoolExecutor(max_workers=10) as executor:
		futures = [executor.submit(entry, i, j) for i, j in pairs]
		values = [future.result() for future in futures]

	outside = np.zeros((size, size))
	for (i, j), value in zip(pairs, values):
		outside[i, j] = outside[j, i] = value

	_, highest = _pencil_extremes(outside, gram)
	return float(min(max(math.sqrt(max(highest, 0.0)), 0.0), 1.0))


def _piece_labels(family, window, points):
	# Continuity piece of each point for discontinuous families, None otherwise
	if family.generator.is_continuous:
		return None
	jumps = np.sort(np.concatenate([family.centers(window) + b for b in family.generator.breakpoints]))
	return np.searchsorted(jumps, points, side="right")


def _running_extremes(values, labels, size, axis):
	# Running max/min along one axis, restarted at every change of piece label
	if labels is None:
		return (
			ndimage.maximum_filter1d(values, size, axis=axis, mode="nearest"),
			ndimage.minimum_filter1d(values, size, axis=axis, mode="nearest"))
	upper = np.empty_like(values)
	lower = np.empty_like(values)
	edges = np.concatenate([[0], np.flatnonzero(np.diff(labels)) + 1, [labels.size]])
	for start, stop in zip(edges[:-1], edges[1:]):
		piece = (slice(None),) * axis + (slice(start, stop),)
		upper[piece] = ndimage.maximum_filter1d(values[piece], size, axis=axis, mode="nearest")
		lower[piece] = ndimage.minimum_filter1d(values[piece], size, axis=axis, mode="nearest")
	return upper, lower


def _kernel_sweep(K, xs, ys, transform, pad):
	# Max over rows and columns of the trapezoid integrals of transform(K) on xs x ys;
	# transform receives the value block and the row range it covers
	x_weights = xs.trapezoid_weights()
	y_weights = ys.trapezoid_weights()
	x_points = xs.points
	right = K.inverse_correlation.T @ K.test_basis(ys.points).T
	row_sup = 0.0
	columns = np.zeros(ys.count)

	for start in range(0, xs.count, _BLOCK_ROWS):
		stop = min(start + _BLOCK_ROWS, xs.count)
		lo, hi = max(start - pad, 0), min(stop + pad, xs.count)
		values = transform(K.trial_basis(x_points[lo:hi]) @ right, lo, hi)[start - lo:stop - lo]
		row_sup = max(row_sup, float(np.max(values @ y_weights)))
		columns += x_weights[start:stop] @ values
	return max(row_sup, float(np.max(columns)))


def kernel_norms(K, delta, grid_step=0.05, omega_fraction=0.125, reach_cap=10.0, spec=None):
	"""
	Estimates the amalgam norms of the kernel and of its oscillation.

	||K||_W is the larger of sup_x of the integral of |K(x, .)| and sup_y of the
	integral of |K(., y)| on a grid of step grid_step. The oscillation
	sup over |x'|, |y'| <= delta of |K(x + x', y + y') - K(x, y)| is computed on a
	grid of step omega_fraction * delta with running max/min filters, so the
	perturbations are exact multiples of that step. For indicator members the
	perturbed point stays in the continuity cell of (x, y): the jumps of the
	family are not counted as oscillation.

	Args:
		K (TruncatedKernel): The kernel.
		delta (float): Perturbation radius.
		grid_step (float): Grid step of the norm sweep.
		omega_fraction (float): Perturbation step as a fraction of delta.
		reach_cap (float): Cap on the generator reach used for the sweep window.
		spec (QuadratureSpec, optional): Supplies the reach of slowly decaying generators.

	Returns:
		tuple: (kW, omega_delta).
	"""
	x_reach = K.window + 0.5 + min(K.trial_family.generator.reach(spec), reach_cap)
	y_reach = K.window + 0.5 + min(K.test_family.generator.reach(spec), reach_cap)

	kW = _kernel_sweep(
		K, UniformGrid.covering(-x_reach, x_reach, grid_step),
		UniformGrid.covering(-y_reach, y_reach, grid_step), lambda values, lo, hi: np.abs(values), 0)

	if delta <= 0:
		return kW, 0.0
	radius = int(round(1.0 / omega_fraction))
	step = delta / radius
	size = 2 * radius + 1

	xs = UniformGrid.covering(-x_reach, x_reach, step)
	ys = UniformGrid.covering(-y_reach, y_reach, step)
	x_labels = _piece_labels(K.trial_family, K.window, xs.points)
	y_labels = _piece_labels(K.test_family, K.window, ys.points)

	def oscillation(values, lo, hi):
		upper, lower = _running_extremes(values, y_labels, size, 1)
		rows = None if x_labels is None else x_labels[lo:hi]
		upper, _ = _running_extremes(upper, rows, size, 0)
		_, lower = _running_extremes(lower, rows, size, 0)
		return np.maximum(upper - values, values - lower)

	omega = _kernel_sweep(K, xs, ys, oscillation, radius)
	logger.debug(f"Kernel sweep: kW={kW:.6g}, omega={omega:.6g} at delta={delta:.4g}")
	return kW, omega


def admissibility_report(trial, test, L, sampling_set, K, spec=None, grid_step=0.05,
		omega_fraction=0.125, reach_cap=10.0):
	"""
	Estimates the admissibility constants of the pre-reconstruction operator.

	Args:
		trial (ShiftedFamily): Trial family.
		test (ShiftedFamily): Test family.
		L (int): Window half-width.
		sampling_set (SamplingSet): The samples; delta is half the largest gap.
		K (TruncatedKernel): The kernel of the pre-reconstruction operator.
		spec (QuadratureSpec, optional): Quadrature tolerances.
		grid_step (float): Grid step of the kernel norm sweep.
		omega_fraction (float): Perturbation step of the oscillation sweep, as a fraction of delta.
		reach_cap (float): Cap on the generator reach used for the sweep window.

	Returns:
		AdmissibilityReport: The estimates.
	"""
	if len(sampling_set) < 2:
		raise EmptySampleSet("admissibility estimates need at least two samples")
	delta = sampling_set.delta
	gamma = sampling_set.abscissae

	residue_value = residue(trial, L, [(g - delta, g + delta) for g in gamma], spec)
	kW, omega = kernel_norms(K, delta, grid_step, omega_fraction, reach_cap, spec)

	gram = _checked_gram(gram_matrix(trial, L, spec))
	test_gram = _checked_gram(gram_matrix(test, L, spec))
	cross = cross_correlation(trial, L, test, L, spec)
	cross_lowest, _ = _pencil_extremes(cross @ scipy.linalg.solve(test_gram, cross.T, assume_a="pos"), gram)
	D4 = math.sqrt(max(cross_lowest, 0.0))

	# Pairing form of the pre-reconstruction operator against the test window
	pairing = trial.basis(gamma, L).T @ (sampling_set.weights[:, None] * test.basis(gamma, L))
	lowest, highest = _pencil_extremes(
		pairing @ scipy.linalg.solve(test_gram, pairing.T, assume_a="pos"), gram)
	D1 = math.sqrt(max(lowest, 0.0))
	D2 = math.sqrt(max(highest, 0.0))

	r0 = (residue_value * kW + omega * (1.0 + kW + omega)) / D4 if D4 > 0 else math.inf
	return AdmissibilityReport(D1, D2, D4, r0, residue_value, kW, omega, delta)


def error_metrics(x, candidates, interval=None, spec=None, best=None):
	"""
	Tabulates L2 errors of reconstructions.

	Args:
		x (FriSignal or callable): Reference signal.
		candidates (dict or list): Reconstructions, by name (lists are named candidate_k).
		interval (tuple, optional): Integration interval when quadrature is needed.
		spec (QuadratureSpec, optional): Quadrature tolerances.
		best (FriSignal, optional): Best approximation y of x; enables e, epsilon and the ratios.

	Returns:
		ErrorMetrics: The table.
	"""
	if not isinstance(candidates, dict):
		candidates = {f"candidate_{k}": z for k, z in enumerate(candidates)}

	e = l2_distance(x, best, spec, interval) if best is not None else None
	metrics = ErrorMetrics(e)
	for name, z in candidates.items():
		entry = {"error": l2_distance(x, z, spec, interval)}
		if best is not None:
			epsilon = l2_distance(z, best, spec, interval)
			entry["epsilon"] = epsilon
			if e > 0:
				entry["ratio_bound"] = 1.0 + epsilon / e
				entry["ratio"] = entry["error"] / e
			else:
				entry["ratio_bound"] = 1.0 if epsilon == 0 else math.inf
				entry["ratio"] = 1.0 if entry["error"] == 0 else math.inf
		metrics.entries[name] = entry
	return metrics
