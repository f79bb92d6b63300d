import enum
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg

from .exceptions import GridTooCoarse, InvalidBound, SingularCorrelation, WindowMismatch
from .kernels import DEFAULT_SPEC, Generator, correlation, eval_generator, integrate

logger = logging.getLogger(__name__)

# Condition number above which a matrix is treated as numerically singular
SINGULARITY_THRESHOLD = 1e12

# Random stream identifiers, one per kind of draw
FAMILY_STREAM = 0
SIGNAL_STREAM = 1
NONUNIFORM_STREAM = 2
JITTER_STREAM = 3

_EVAL_CHUNK = 4096


class ShiftMode(enum.Enum):
	ZERO = "zero"
	RANDOM = "random"


class SignalLaw(enum.Enum):
	RANDOM_DECAY = "random"
	COSINE_DECAY = "cosine"


def rng_for(seed, stream):
	"""
	Returns the deterministic random generator of one (seed, stream) pair.

	Args:
		seed (int): 64-bit seed; None is read as 0.
		stream (int): Stream identifier.

	Returns:
		numpy.random.Generator: A PCG64 generator seeded through a SeedSequence.
	"""
	return np.random.default_rng([int(seed or 0), int(stream)])


class ShiftedFamily:
	"""
	A generator together with per-index shift perturbations.

	The i-th member is phi_0(. - i - theta_i) for i in [-L_model, L_model].

	Attributes:
		generator (Generator): The generator phi_0.
		shifts (numpy.ndarray): theta_i for i = -L_model..L_model.
		window_halfwidth (int): L_model.
		shift_mode (ShiftMode): How the shifts were drawn.
		bound (float): Shift bound of the random mode (0 for the zero mode).
		seed (int or None): Seed used for the draws.
	"""

	def __init__(self, generator, shifts, shift_mode=ShiftMode.ZERO, bound=0.0, seed=None):
		shifts = np.array(shifts, dtype=float)
		if shifts.ndim != 1 or shifts.size % 2 == 0:
			raise WindowMismatch("shifts must cover a symmetric integer window")
		if np.any(np.abs(shifts) > 0.5):
			raise InvalidBound("shift perturbations must satisfy |theta_i| <= 1/2")
		shifts.setflags(write=False)

		self.generator = generator if isinstance(generator, Generator) else Generator(generator)
		self.shifts = shifts
		self.window_halfwidth = (shifts.size - 1) // 2
		self.shift_mode = ShiftMode(shift_mode)
		self.bound = float(bound)
		self.seed = seed

	def check_window(self, L):
		if L < 0 or L > self.window_halfwidth:
			logger.error(f"Window {L} requested from a family of half-width {self.window_halfwidth}")
			raise WindowMismatch(
				f"window half-width {L} exceeds the family window {self.window_halfwidth}")

	def indices(self, L):
		self.check_window(L)
		return np.arange(-L, L + 1)

	def theta(self, i):
		return float(self.shifts[i + self.window_halfwidth])

	def centers(self, L):
		"""
		Returns the centers i + theta_i of the members in the window [-L, L].
		"""
		indices = self.indices(L)
		return indices + self.shifts[indices + self.window_halfwidth]

	def basis(self, t, L):
		"""
		Evaluates the members of the window [-L, L] at the given points.

		Args:
			t (array_like): Evaluation points.
			L (int): Window half-width.

		Returns:
			numpy.ndarray: Matrix of shape (len(t), 2L+1) with entries phi_0(t_n - i - theta_i).
		"""
		points = np.asarray(t, dtype=float).reshape(-1)
		return eval_generator(self.generator, points[:, None] - self.centers(L)[None, :])

	def basis_averaged(self, t, L, epsilon):
		"""
		Like basis, but takes the mean of the one-sided limits at jumps.

		Args:
			t (array_like): Evaluation points.
			L (int): Window half-width.
			epsilon (float): Offset used to reach both sides of a jump.

		Returns:
			numpy.ndarray: Matrix of shape (len(t), 2L+1).
		"""
		if self.generator.is_continuous:
			return self.basis(t, L)
		points = np.asarray(t, dtype=float).reshape(-1)
		return 0.5 * (self.basis(points - epsilon, L) + self.basis(points + epsilon, L))

	def same_basis(self, other):
		"""
		Tells whether both families describe the same functions on their common window.
		"""
		if self is other:
			return True
		if not isinstance(other, ShiftedFamily) or other.generator != self.generator:
			return False
		L = min(self.window_halfwidth, other.window_halfwidth)
		return bool(np.array_equal(self.centers(L), other.centers(L)))

	def __repr__(self):
		return (f"ShiftedFamily({self.generator.name!r}, mode={self.shift_mode.value!r}, "
				f"L_model={self.window_halfwidth})")


class FriSignal:
	"""
	A finite expansion sum_i c_i phi_0(t - i - theta_i) over a window [-L_sig, L_sig].

	Attributes:
		family (ShiftedFamily): The family supplying the basis.
		coeffs (numpy.ndarray): c_i for i = -L_sig..L_sig.
		law (SignalLaw or None): Coefficient law the signal was drawn from.
		seed (int or None): Seed of the draw.
	"""

	def __init__(self, family, coeffs, law=None, seed=None):
		coeffs = np.array(coeffs, dtype=float)
		if coeffs.ndim != 1 or coeffs.size % 2 == 0:
			raise WindowMismatch("coefficients must cover a symmetric integer window")
		family.check_window((coeffs.size - 1) // 2)
		coeffs.setflags(write=False)
		self.family = family
		self.coeffs = coeffs
		self.law = law
		self.seed = seed if seed is not None else family.seed

	@property
	def L(self):
		return (self.coeffs.size - 1) // 2

	@property
	def generator(self):
		return self.family.generator

	def coefficient(self, i):
		if abs(i) > self.L:
			return 0.0
		return float(self.coeffs[i + self.L])

	def padded(self, L):
		"""
		Returns the coefficient vector zero-padded to the window [-L, L].
		"""
		if L < self.L:
			raise WindowMismatch(f"cannot pad a window of half-width {self.L} down to {L}")
		padded = np.zeros(2 * L + 1)
		padded[L - self.L:L + self.L + 1] = self.coeffs
		return padded

	def scaled(self, factor):
		return FriSignal(self.family, factor * self.coeffs, self.law, self.seed)

	def __call__(self, t):
		return eval_signal(self, t)

	def __repr__(self):
		return f"FriSignal({self.generator.name!r}, L={self.L})"


class CorrelationMatrix:
	"""
	The correlation matrix (<phi_i(. - i - theta_i), phi~_j(. - j - theta~_j)>) over [-L, L]^2.

	Attributes:
		entries (numpy.ndarray): Dense (2L+1) x (2L+1) matrix indexed by (i + L, j + L).
		trial_family (ShiftedFamily): Family of the rows.
		test_family (ShiftedFamily): Family of the columns.
		L (int): Window half-width.
	"""

	def __init__(self, entries, trial_family, test_family, L):
		self.entries = entries
		self.trial_family = trial_family
		self.test_family = test_family
		self.L = L

	def condition(self):
		return float(np.linalg.cond(self.entries))

	def inverse(self):
		"""
		Inverts the matrix after checking its condition number.

		Returns:
			numpy.ndarray: The inverse matrix.

		Raises:
			SingularCorrelation: If the condition number exceeds the singularity threshold.
		"""
		condition = self.condition()
		if not np.isfinite(condition) or condition > SINGULARITY_THRESHOLD:
			logger.error(f"Correlation matrix is numerically singular (condition {condition:.3e})")
			raise SingularCorrelation(
				f"correlation matrix condition number {condition:.3e} exceeds {SINGULARITY_THRESHOLD:.0e}",
				condition=condition)
		return scipy.linalg.inv(self.entries)


class TruncatedKernel:
	"""
	The reproducing kernel K(x, y) = sum_{i,j} phi_i(x - i) b_ji phi~_j(y - j) over a padded window.

	Attributes:
		trial_family (ShiftedFamily): Family in the x variable.
		test_family (ShiftedFamily): Family in the y variable.
		L (int): Half-width of the reconstruction window.
		padding (int): Extra indices M on each side.
		correlation (numpy.ndarray): Padded correlation matrix.
		inverse_correlation (numpy.ndarray): Its inverse (b_ij).
	"""

	def __init__(self, trial_family, test_family, L, padding, correlation, inverse_correlation):
		self.trial_family = trial_family
		self.test_family = test_family
		self.L = L
		self.padding = padding
		self.correlation = correlation
		self.inverse_correlation = inverse_correlation

	@property
	def window(self):
		return self.L + self.padding

	def trial_basis(self, x):
		return self.trial_family.basis(x, self.window)

	def test_basis(self, y):
		return self.test_family.basis(y, self.window)

	def active_window(self, spec=None):
		"""
		Returns the interval outside which K(x, .) vanishes or is neglected.
		"""
		reach = self.window + 0.5 + self.test_family.generator.reach(spec)
		return -reach, reach

	def __call__(self, x, y):
		"""
		Evaluates the kernel on the product of two point sets.

		Args:
			x (float or array_like): First arguments.
			y (float or array_like): Second arguments.

		Returns:
			float or numpy.ndarray: K(x, y) as a scalar or a len(x) x len(y) matrix.
		"""
		values = self.trial_basis(x) @ self.inverse_correlation.T @ self.test_basis(y).T
		if np.ndim(x) == 0 and np.ndim(y) == 0:
			return float(values[0, 0])
		return values

	def apply(self, f, spec=None):
		"""
		Applies the integral operator T_0 f(x) = integral of K(x, y) f(y) dy exactly.

		Args:
			f (FriSignal or callable): The function to transform.
			spec (QuadratureSpec, optional): Tolerances for general callables.

		Returns:
			FriSignal: T_0 f on the trial family over the padded window.
		"""
		pairings = pair_with_family(f, self.test_family, self.window, spec)
		return FriSignal(self.trial_family, self.inverse_correlation.T @ pairings)


class UniformGrid:
	"""
	The points start + k * step for k = 0..count-1.
	"""

	def __init__(self, start, step, count):
		if not step > 0 or count < 2:
			raise ValueError("a uniform grid needs a positive step and at least two points")
		self.start = float(start)
		self.step = float(step)
		self.count = int(count)

	@classmethod
	def covering(cls, lower, upper, step):
		count = int(np.ceil((upper - lower) / step - 1e-9)) + 1
		return cls(lower, step, count)

	@property
	def stop(self):
		return self.start + (self.count - 1) * self.step

	@property
	def points(self):
		return self.start + self.step * np.arange(self.count)

	def trapezoid_weights(self):
		weights = np.full(self.count, self.step)
		weights[0] = weights[-1] = 0.5 * self.step
		return weights


def build_family(generator, shift_mode, L_model, seed=None, bound=0.2):
	"""
	Builds a shifted family over [-L_model, L_model].

	Args:
		generator (Generator or str): The generator.
		shift_mode (ShiftMode or str): "zero" for theta = 0, "random" for uniform draws on [-bound, bound].
		L_model (int): Window half-width, at least 1.
		seed (int, optional): Seed of the shift draws.
		bound (float): Shift bound of the random mode, in (0, 1/2].

	Returns:
		ShiftedFamily: The family.
	"""
	mode = ShiftMode(shift_mode)
	if L_model < 1:
		raise WindowMismatch(f"family window must be at least 1, got {L_model}")

	if mode is ShiftMode.RANDOM:
		if not 0 < bound <= 0.5:
			raise InvalidBound(f"shift bound must lie in (0, 1/2], got {bound}")
		shifts = rng_for(seed, FAMILY_STREAM).uniform(-bound, bound, size=2 * L_model + 1)
	else:
		shifts = np.zeros(2 * L_model + 1)
		bound = 0.0

	return ShiftedFamily(generator, shifts, mode, bound, seed)


def make_test_signal(family, law, L_sig, seed=None):
	"""
	Draws one of the test signals x(phi_0, l).

	Args:
		family (ShiftedFamily): Family of the signal.
		law (SignalLaw or str): "random" for c_i uniform in [-1, 1] / (1 + |i|),
			"cosine" for c_i = cos(pi i / 8) / (1 + |i|).
		L_sig (int): Window half-width of the signal.
		seed (int, optional): Seed of the random law.

	Returns:
		FriSignal: The signal.
	"""
	law = SignalLaw(law)
	if L_sig < 1:
		raise WindowMismatch(f"signal window must be at least 1, got {L_sig}")
	family.check_window(L_sig)

	indices = np.arange(-L_sig, L_sig + 1)
	decay = 1.0 + np.abs(indices)
	if law is SignalLaw.RANDOM_DECAY:
		coeffs = rng_for(seed, SIGNAL_STREAM).uniform(-1.0, 1.0, size=indices.size) / decay
	else:
		coeffs = np.cos(np.pi * indices / 8.0) / decay
	return FriSignal(family, coeffs, law, seed)


def eval_signal(f, t):
	"""
	Evaluates a finite expansion.

	Args:
		f (FriSignal): The signal.
		t (float or array_like): Evaluation points.

	Returns:
		float or numpy.ndarray: f(t), shaped like t.
	"""
	points = np.asarray(t, dtype=float)
	flat = points.reshape(-1)
	generator = f.family.generator
	centers = f.family.centers(f.L)
	values = np.zeros(flat.size)

	if generator.support is not None:
		# Only the few members whose support contains t contribute
		lower, upper = generator.support
		first = np.ceil(flat - upper - 0.5).astype(int)
		for offset in range(int(np.ceil(upper - lower)) + 2):
			index = first + offset
			mask = (index >= -f.L) & (index <= f.L)
			slot = index[mask] + f.L
			values[mask] += f.coeffs[slot] * eval_generator(generator, flat[mask] - centers[slot])
	else:
		for start in range(0, flat.size, _EVAL_CHUNK):
			block = flat[start:start + _EVAL_CHUNK]
			values[start:start + _EVAL_CHUNK] = eval_generator(
				generator, block[:, None] - centers[None, :]) @ f.coeffs

	if points.ndim == 0:
		return float(values[0])
	return values.reshape(points.shape)


def cross_correlation(trial, L_trial, test, L_test, spec=None):
	"""
	Computes the rectangular matrix of inner products between two families.

	Args:
		trial (ShiftedFamily): Row family.
		L_trial (int): Row window half-width.
		test (ShiftedFamily): Column family.
		L_test (int): Column window half-width.
		spec (QuadratureSpec, optional): Quadrature tolerances.

	Returns:
		numpy.ndarray: Matrix of shape (2 L_trial + 1, 2 L_test + 1).
	"""
	a = trial.centers(L_trial)
	b = test.centers(L_test)
	entries = np.asarray(
		correlation(trial.generator, test.generator, a[:, None], b[None, :], spec), dtype=float)
	if L_trial == L_test and trial.same_basis(test):
		entries = 0.5 * (entries + entries.T)
	return entries


def assemble_correlation(trial, test, L, spec=None):
	"""
	Assembles the square correlation matrix over [-L, L].

	Args:
		trial (ShiftedFamily): Trial family.
		test (ShiftedFamily): Test family.
		L (int): Window half-width.
		spec (QuadratureSpec, optional): Quadrature tolerances.

	Returns:
		CorrelationMatrix: The matrix.
	"""
	trial.check_window(L)
	test.check_window(L)
	return CorrelationMatrix(cross_correlation(trial, L, test, L, spec), trial, test, L)


def gram_matrix(family, L, spec=None):
	return cross_correlation(family, L, family, L, spec)


def pair_with_family(f, family, L, spec=None):
	"""
	Computes the inner products <f, phi_j(. - j - theta_j)> over the window [-L, L].

	Args:
		f (FriSignal or callable): The function. FriSignals use correlations,
			other callables are integrated numerically and must accept arrays.
		family (ShiftedFamily): The family to pair with.
		L (int): Window half-width.
		spec (QuadratureSpec, optional): Quadrature tolerances.

	Returns:
		numpy.ndarray: The 2L+1 inner products.
	"""
	spec = spec or DEFAULT_SPEC
	if isinstance(f, FriSignal):
		return cross_correlation(f.family, f.L, family, L, spec).T @ f.coeffs

	generator = family.generator
	reach = generator.reach(spec)

	def pairing(center):
		return integrate(
			lambda t: np.asarray(f(t), dtype=float) * eval_generator(generator, t - center),
			(center - reach, center + reach), spec,
			[center + p for p in generator.breakpoints])

	with ThreadPoolExecutor(max_workers=10) as executor:
		futures = [executor.submit(pairing, float(c)) for c in family.centers(L)]
		return np.array([future.result() for future in futures])


def build_truncated_kernel(trial, test, L, padding=10, spec=None):
	"""
	Builds the reproducing kernel from the inverse of the padded correlation matrix.

	Args:
		trial (ShiftedFamily): Trial family.
		test (ShiftedFamily): Test family.
		L (int): Reconstruction window half-width.
		padding (int): Padding M, the matrix covers [-L-M, L+M].
		spec (QuadratureSpec, optional): Quadrature tolerances.

	Returns:
		TruncatedKernel: The kernel.

	Raises:
		SingularCorrelation: If the padded correlation matrix is numerically singular.
	"""
	if padding < 0:
		raise WindowMismatch(f"padding must be nonnegative, got {padding}")
	window = L + padding
	correlation_matrix = assemble_correlation(trial, test, window, spec)
	inverse = correlation_matrix.inverse()
	logger.debug(f"Truncated kernel on [-{window}, {window}] built for {trial!r} / {test!r}")
	return TruncatedKernel(trial, test, L, padding, correlation_matrix.entries, inverse)


def apply_integral_operator(K, values, grid, spec=None):
	"""
	Discretizes T_0 f(x) = integral of K(x, y) f(y) dy with the trapezoid rule.

	At jumps of a discontinuous test generator the mean of the one-sided
	limits is used, so every cell integral is a proper trapezoid sum.

	Args:
		K (TruncatedKernel): The kernel.
		values (array_like): Samples of f on the grid.
		grid (UniformGrid): The grid, which must cover the kernel's active window.
		spec (QuadratureSpec, optional): Supplies the reach of slowly decaying generators.

	Returns:
		numpy.ndarray: T_0 f on the same grid.

	Raises:
		GridTooCoarse: If the grid step exceeds 0.05.
		WindowMismatch: If the grid does not cover the active window.
	"""
	if grid.step > 0.05:
		raise GridTooCoarse(f"grid step {grid.step} exceeds 0.05")
	lower, upper = K.active_window(spec)
	slack = 1e-9 * grid.step
	if grid.start > lower + slack or grid.stop < upper - slack:
		raise WindowMismatch(
			f"grid [{grid.start}, {grid.stop}] does not cover the kernel window [{lower}, {upper}]")

	values = np.asarray(values, dtype=float)
	y = grid.points
	pairings = K.test_family.basis_averaged(y, K.window, 1e-9 * grid.step).T @ (grid.trapezoid_weights() * values)
	return K.trial_basis(y) @ (K.inverse_correlation.T @ pairings)
