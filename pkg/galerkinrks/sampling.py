import enum
import logging

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import (
	InvalidGapRange, InvalidSamplingSet, JitterTooLarge, NoCrossings, WindowMismatch, ZeroSignal)
from .model import JITTER_STREAM, NONUNIFORM_STREAM, FriSignal, rng_for

logger = logging.getLogger(__name__)

# Signals whose sup falls below this are treated as identically zero
ZERO_SIGNAL_LEVEL = 1e-14
_MAX_BISECTIONS = 200


class SamplingKind(enum.Enum):
	NONUNIFORM = "nonuniform"
	JITTERED = "jittered"
	CTEM = "ctem"
	UNIFORM = "uniform"
	CUSTOM = "custom"


class SamplingSet:
	"""
	Ordered sample abscissae with trapezoid weights (gamma_{n+1} - gamma_{n-1}) / 2.

	The end points use gamma_0 = gamma_1 and gamma_{N+1} = gamma_N.

	Attributes:
		abscissae (numpy.ndarray): Strictly increasing sample positions.
		weights (numpy.ndarray): Trapezoid weights.
		kind (SamplingKind): How the set was built.
		interval (tuple): The interval [a, b] covered.
		seed (int or None): Seed of the construction.
		metadata (dict): Construction details (C-TEM threshold, tangencies, ...).
	"""

	def __init__(self, abscissae, kind=SamplingKind.CUSTOM, interval=None, seed=None, metadata=None):
		abscissae = np.array(abscissae, dtype=float).reshape(-1)
		if not np.all(np.isfinite(abscissae)):
			raise InvalidSamplingSet("sample abscissae must be finite")
		if np.any(np.diff(abscissae) <= 0):
			raise InvalidSamplingSet("sample abscissae must be strictly increasing")
		abscissae.setflags(write=False)

		self.abscissae = abscissae
		self.weights = trapezoid_weights(abscissae)
		self.kind = SamplingKind(kind)
		if interval is None and abscissae.size:
			interval = (float(abscissae[0]), float(abscissae[-1]))
		self.interval = interval
		self.seed = seed
		self.metadata = dict(metadata or {})

	@classmethod
	def from_points(cls, points, interval=None):
		return cls(points, SamplingKind.CUSTOM, interval)

	@property
	def delta(self):
		"""
		Covering radius used by the diagnostics: half the largest gap.
		"""
		if self.abscissae.size < 2:
			return 0.0
		return 0.5 * float(np.max(np.diff(self.abscissae)))

	def __len__(self):
		return self.abscissae.size

	def __repr__(self):
		return f"SamplingSet({self.kind.value!r}, N={len(self)}, interval={self.interval})"


class SampleRecord:
	"""
	Sampled data of one signal on one sampling set.

	Attributes:
		set (SamplingSet): Where the signal was sampled.
		values (numpy.ndarray): f(gamma_n).
		source_norm_inf (float or None): C-TEM threshold M used at capture.
	"""

	def __init__(self, sampling_set, values, source_norm_inf=None):
		values = np.array(values, dtype=float).reshape(-1)
		if values.size != len(sampling_set):
			raise InvalidSamplingSet(
				f"{values.size} values recorded for {len(sampling_set)} abscissae")
		values.setflags(write=False)
		self.set = sampling_set
		self.values = values
		self.source_norm_inf = source_norm_inf

	def scaled(self, factor):
		return SampleRecord(self.set, factor * self.values, self.source_norm_inf)


def trapezoid_weights(abscissae):
	gamma = np.asarray(abscissae, dtype=float)
	if gamma.size == 0:
		return np.zeros(0)
	previous = np.concatenate([gamma[:1], gamma[:-1]])
	following = np.concatenate([gamma[1:], gamma[-1:]])
	return 0.5 * (following - previous)


def make_uniform(interval, step):
	"""
	Builds the uniform set a, a + step, ... up to b.

	Args:
		interval (tuple): The interval (a, b).
		step (float): Sample spacing.

	Returns:
		SamplingSet: The set.
	"""
	lower, upper = interval
	if not step > 0 or not upper > lower:
		raise InvalidSamplingSet(f"invalid uniform grid {interval} with step {step}")
	count = int(np.floor((upper - lower) / step + 1e-9)) + 1
	points = lower + step * np.arange(count)
	return SamplingSet(points, SamplingKind.UNIFORM, (lower, upper), metadata={"step": step})


def _check_half_width(L):
	if L < 1:
		logger.error(f"Sampling set requested for window half-width {L}")
		raise WindowMismatch(f"window half-width must be at least 1, got {L}")


def make_nonuniform(L, gap_range=(0.9, 1.1), seed=None):
	"""
	Builds the nonuniform set: 2L+5 points starting at -L-2 with i.i.d. uniform gaps.

	Args:
		L (int): Reconstruction window half-width.
		gap_range (tuple): Gap bounds (lo, hi) with 0 < lo <= hi.
		seed (int, optional): Seed of the gap draws.

	Returns:
		SamplingSet: The set.

	Raises:
		WindowMismatch: If L < 1.
		InvalidGapRange: If the gap range is not 0 < lo <= hi.
	"""
	_check_half_width(L)
	lo, hi = gap_range
	if not 0 < lo <= hi:
		raise InvalidGapRange(f"gap range must satisfy 0 < lo <= hi, got [{lo}, {hi}]")
	gaps = rng_for(seed, NONUNIFORM_STREAM).uniform(lo, hi, size=2 * L + 4)
	abscissae = -L - 2 + np.concatenate([[0.0], np.cumsum(gaps)])
	return SamplingSet(
		abscissae, SamplingKind.NONUNIFORM, (float(abscissae[0]), float(abscissae[-1])), seed,
		{"gap_lo": lo, "gap_hi": hi})


def make_jittered(L, jitter=0.1, seed=None):
	"""
	Builds the jittered set gamma_k = k + delta_k, |k| <= L+2, delta_k uniform on [-jitter, jitter].

	Args:
		L (int): Reconstruction window half-width.
		jitter (float): Jitter bound, below 1/2.
		seed (int, optional): Seed of the jitter draws.

	Returns:
		SamplingSet: The set.

	Raises:
		WindowMismatch: If L < 1.
		JitterTooLarge: If jitter >= 1/2.
	"""
	_check_half_width(L)
	if not 0 <= jitter < 0.5:
		raise JitterTooLarge(f"jitter must lie in [0, 1/2), got {jitter}")
	k = np.arange(-L - 2, L + 3)
	offsets = rng_for(seed, JITTER_STREAM).uniform(-jitter, jitter, size=k.size)
	return SamplingSet(
		k + offsets, SamplingKind.JITTERED, (float(-L - 2), float(L + 2)), seed, {"jitter": jitter})


def _polished_sup(x, grid, values):
	# Grid maximum, refined by a bounded scalar search around the grid argmax
	k = int(np.argmax(np.abs(values)))
	grid_sup = float(abs(values[k]))
	lower = grid[max(k - 1, 0)]
	upper = grid[min(k + 1, grid.size - 1)]
	if grid_sup == 0.0 or not lower < upper:
		return grid_sup
	result = minimize_scalar(
		lambda s: -abs(x(s)), bounds=(lower, upper), method="bounded", options={"xatol": 1e-12})
	return max(grid_sup, float(abs(x(result.x))))


def make_ctem(x, interval, grid_step=1e-3, root_tol=1e-10):
	"""
	Records the times where the signal crosses the reference curve M sin(pi t).

	M is the sup of |x| on the interval. Roots of r(t) = x(t) - M sin(pi t) are
	bracketed by sign changes on a grid, bisected down to root_tol and finished
	by one linear interpolation step. Exact zeros at grid points and tangential
	near-roots (|r| <= root_tol at a local minimum of |r| without a sign
	change) are emitted too; the latter are counted in the metadata.

	Args:
		x (FriSignal or callable): The signal, evaluable on arrays.
		interval (tuple): The interval (a, b).
		grid_step (float): Bracketing grid step.
		root_tol (float): Bracket width at which bisection stops.

	Returns:
		SamplingSet: The crossing times, with metadata "norm_inf" = M.

	Raises:
		ZeroSignal: If M <= 1e-14.
		NoCrossings: If no crossing is found.
	"""
	lower, upper = float(interval[0]), float(interval[1])
	if not upper > lower or not grid_step > 0 or not root_tol > 0:
		raise InvalidSamplingSet(f"invalid C-TEM setup on {interval} with step {grid_step}")

	grid = np.linspace(lower, upper, int(np.ceil((upper - lower) / grid_step)) + 1)
	signal = np.asarray(x(grid), dtype=float)
	norm_inf = _polished_sup(x, grid, signal)
	if norm_inf <= ZERO_SIGNAL_LEVEL:
		logger.error(f"C-TEM sampling of a zero signal on [{lower}, {upper}]")
		raise ZeroSignal(f"signal sup {norm_inf:.3e} is numerically zero")

	def residual(t):
		return np.asarray(x(t), dtype=float) - norm_inf * np.sin(np.pi * t)

	r = signal - norm_inf * np.sin(np.pi * grid)
	exact = grid[r == 0.0]

	# Sign-change brackets, bisected together
	brackets = np.nonzero(r[:-1] * r[1:] < 0.0)[0]
	lo, hi = grid[brackets], grid[brackets + 1]
	r_lo = r[brackets]
	for _ in range(_MAX_BISECTIONS):
		if lo.size == 0 or np.max(hi - lo) <= root_tol:
			break
		mid = 0.5 * (lo + hi)
		r_mid = residual(mid)
		same_side = np.sign(r_mid) == np.sign(r_lo)
		lo = np.where(same_side, mid, lo)
		r_lo = np.where(same_side, r_mid, r_lo)
		hi = np.where(same_side, hi, mid)

	roots = lo
	if lo.size:
		r_hi = residual(hi)
		denominator = r_hi - r_lo
		safe = np.where(denominator != 0.0, denominator, 1.0)
		secant = np.where(denominator != 0.0, lo - r_lo * (hi - lo) / safe, 0.5 * (lo + hi))
		roots = np.clip(secant, lo, hi)

	# Tangential near-roots: small local minima of |r| without a sign change
	magnitude = np.abs(r)
	interior = np.arange(1, grid.size - 1)
	tangent = interior[
		(magnitude[interior] <= root_tol)
		& (magnitude[interior] > 0.0)
		& (magnitude[interior] <= magnitude[interior - 1])
		& (magnitude[interior] <= magnitude[interior + 1])
		& (r[interior - 1] * r[interior] > 0.0)
		& (r[interior] * r[interior + 1] > 0.0)]
	if tangent.size:
		logger.warning(f"C-TEM emitted {tangent.size} tangential crossing(s) on [{lower}, {upper}]")

	abscissae = np.sort(np.concatenate([roots, exact, grid[tangent]]))
	if abscissae.size == 0:
		logger.error(f"No C-TEM crossings found on [{lower}, {upper}]")
		raise NoCrossings(f"no crossing of x and {norm_inf:.6g} sin(pi t) on [{lower}, {upper}]")
	keep = np.concatenate([[True], np.diff(abscissae) > root_tol])
	abscissae = abscissae[keep]

	logger.debug(f"C-TEM found {abscissae.size} crossings on [{lower}, {upper}]")
	seed = getattr(x, "seed", None)
	return SamplingSet(
		abscissae, SamplingKind.CTEM, (lower, upper), seed,
		{"norm_inf": norm_inf, "tangencies": int(tangent.size), "grid_step": grid_step,
		 "root_tol": root_tol})


def capture(x, sampling_set):
	"""
	Samples a signal on a sampling set.

	Args:
		x (FriSignal or callable): The signal.
		sampling_set (SamplingSet): Where to sample.

	Returns:
		SampleRecord: The sampled values.
	"""
	values = np.asarray(x(sampling_set.abscissae), dtype=float).reshape(-1)
	return SampleRecord(sampling_set, values, sampling_set.metadata.get("norm_inf"))


def pre_reconstruct(rec, K):
	"""
	Applies the pre-reconstruction operator x -> sum_n w_n f(gamma_n) K(x, gamma_n).

	Args:
		rec (SampleRecord): The samples.
		K (TruncatedKernel): The kernel.

	Returns:
		FriSignal: The pre-reconstructed signal on the kernel's trial family.

	Raises:
		WindowMismatch: If a sample lies outside the kernel window.
	"""
	gamma = rec.set.abscissae
	window = K.window
	if gamma.size and (gamma[0] < -window - 0.5 or gamma[-1] > window + 0.5):
		raise WindowMismatch(
			f"samples on [{gamma[0]}, {gamma[-1]}] exceed the kernel window [-{window}, {window}]")
	pairings = K.test_basis(gamma).T @ (rec.set.weights * rec.values)
	return FriSignal(K.trial_family, K.inverse_correlation.T @ pairings)
