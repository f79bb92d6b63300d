import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.interpolate import BSpline
from scipy.special import erfc, sici

from .exceptions import InvalidQuadratureSpec
from .utils.quadrature import AdaptiveGaussKronrod

logger = logging.getLogger(__name__)

# Cubic B-spline on [-2, 2] and the degree-7 spline on [-4, 4] (its autocorrelation)
_CUBIC = BSpline.basis_element([-2.0, -1.0, 0.0, 1.0, 2.0], extrapolate=False)
_CUBIC_ANTIDERIVATIVE = _CUBIC.antiderivative()
_SEPTIC = BSpline.basis_element(np.arange(-4.0, 5.0), extrapolate=False)


class GeneratorKind(enum.Enum):
	SINC = "sinc"
	GAUSS = "gauss"
	SPLINE = "spline"
	INDICATOR = "indicator"


class QuadratureSpec:
	"""
	Tolerances of the adaptive quadrature behind every inner product.

	Attributes:
		abs_tol (float): Absolute error tolerance.
		rel_tol (float): Relative error tolerance.
		max_subdivisions (int): Maximum number of interval bisections.
		infinite_window (float): Half-width W used to truncate whole-line integrals.
	"""

	def __init__(self, abs_tol=1e-10, rel_tol=1e-10, max_subdivisions=2**20, infinite_window=500.0):
		if not (abs_tol > 0 and rel_tol > 0):
			raise InvalidQuadratureSpec("quadrature tolerances must be strictly positive")
		if int(max_subdivisions) < 1:
			raise InvalidQuadratureSpec("max_subdivisions must be a positive integer")
		if not infinite_window >= 10:
			raise InvalidQuadratureSpec(f"infinite_window must be at least 10, got {infinite_window}")
		self.abs_tol = float(abs_tol)
		self.rel_tol = float(rel_tol)
		self.max_subdivisions = int(max_subdivisions)
		self.infinite_window = float(infinite_window)

	def engine(self):
		return AdaptiveGaussKronrod(self.abs_tol, self.rel_tol, self.max_subdivisions)

	def to_dict(self):
		return {
			"abs_tol": self.abs_tol,
			"rel_tol": self.rel_tol,
			"max_subdivisions": self.max_subdivisions,
			"infinite_window": self.infinite_window,
		}


DEFAULT_SPEC = QuadratureSpec()


class Generator:
	"""
	One of the four built-in generator functions.

	Attributes:
		kind (GeneratorKind): Which generator.
		support (tuple or None): Closed support interval for finite-support generators.
		decay_halfwidth (float): Half-width beyond which the generator is neglected in integrals (inf for sinc).
		breakpoints (tuple): Points where the generator loses smoothness.
	"""

	_SUPPORT = {
		GeneratorKind.SINC: None,
		GeneratorKind.GAUSS: None,
		GeneratorKind.SPLINE: (-2.0, 2.0),
		GeneratorKind.INDICATOR: (-0.5, 0.5),
	}
	_DECAY = {
		GeneratorKind.SINC: math.inf,
		GeneratorKind.GAUSS: 6.0,
		GeneratorKind.SPLINE: 2.0,
		GeneratorKind.INDICATOR: 0.5,
	}
	_BREAKPOINTS = {
		GeneratorKind.SINC: (),
		GeneratorKind.GAUSS: (),
		GeneratorKind.SPLINE: (-2.0, -1.0, 0.0, 1.0, 2.0),
		GeneratorKind.INDICATOR: (-0.5, 0.5),
	}

	def __init__(self, kind):
		self.kind = GeneratorKind(kind)
		self.support = self._SUPPORT[self.kind]
		self.decay_halfwidth = self._DECAY[self.kind]
		self.breakpoints = self._BREAKPOINTS[self.kind]

	@property
	def name(self):
		return self.kind.value

	@property
	def is_continuous(self):
		return self.kind is not GeneratorKind.INDICATOR

	def reach(self, spec=None):
		"""
		Half-width of the region where the generator is not neglected.

		Args:
			spec (QuadratureSpec, optional): Supplies the truncation window for slowly decaying generators.

		Returns:
			float: The effective half-width.
		"""
		spec = spec or DEFAULT_SPEC
		return min(self.decay_halfwidth, spec.infinite_window)

	def __call__(self, t):
		return eval_generator(self, t)

	def __eq__(self, other):
		return isinstance(other, Generator) and other.kind is self.kind

	def __hash__(self):
		return hash(self.kind)

	def __repr__(self):
		return f"Generator({self.name!r})"


def _sinc(t):
	values = np.sinc(t)
	# Exact zeros at the nonzero integers
	return np.where((t != 0) & (t == np.round(t)), 0.0, values)


def _gauss(t):
	return np.exp(-1.5 * t * t)


def _cubic_spline(t):
	return np.where(np.abs(t) < 2.0, _CUBIC(np.clip(t, -2.0, 2.0)), 0.0)


def _indicator(t):
	return np.where((t >= -0.5) & (t < 0.5), 1.0, 0.0)


_EVALUATORS = {
	GeneratorKind.SINC: _sinc,
	GeneratorKind.GAUSS: _gauss,
	GeneratorKind.SPLINE: _cubic_spline,
	GeneratorKind.INDICATOR: _indicator,
}


def eval_generator(g, t):
	"""
	Evaluates a generator.

	Args:
		g (Generator): The generator.
		t (float or array_like): Evaluation points.

	Returns:
		float or numpy.ndarray: phi_0(t), shaped like t.
	"""
	points = np.asarray(t, dtype=float)
	values = _EVALUATORS[g.kind](points)
	if values.ndim == 0:
		return float(values)
	return values


def integrate(f, domain=None, spec=None, breakpoints=(), center=0.0):
	"""
	Integrates a real function of one variable.

	Args:
		f (callable): Vectorized integrand (accepts and returns numpy arrays).
		domain (tuple, optional): Finite interval (a, b). None means the whole line,
			truncated to [center - W, center + W] with W the infinite window of spec.
		spec (QuadratureSpec, optional): Tolerances. Defaults to DEFAULT_SPEC.
		breakpoints (iterable): Points where f may be discontinuous or kinked.
		center (float): Center of the integrand's active region for whole-line domains.

	Returns:
		float: The integral.

	Raises:
		SubdivisionLimitExceeded: If the tolerance cannot be met.
	"""
	spec = spec or DEFAULT_SPEC
	if domain is None:
		domain = (center - spec.infinite_window, center + spec.infinite_window)
	lower, upper = float(domain[0]), float(domain[1])
	value, _ = spec.engine().integrate(f, lower, upper, breakpoints=breakpoints, piece_length=1.0)
	return value


def _cubic_antiderivative(x):
	return _CUBIC_ANTIDERIVATIVE(np.clip(x, -2.0, 2.0))


def _septic_spline(x):
	return np.where(np.abs(x) < 4.0, _SEPTIC(np.clip(x, -4.0, 4.0)), 0.0)


# Closed forms of <g(. - a), g~(. - b)> as functions of d = b - a
def _sinc_sinc(d):
	return _sinc(d)


def _gauss_gauss(d):
	return math.sqrt(math.pi / 3.0) * np.exp(-0.75 * d * d)


def _spline_spline(d):
	return _septic_spline(d)


def _indicator_indicator(d):
	return np.maximum(0.0, 1.0 - np.abs(d))


def _sinc_indicator(d):
	upper, _ = sici(math.pi * (d + 0.5))
	lower, _ = sici(math.pi * (d - 0.5))
	return (upper - lower) / math.pi


def _gauss_indicator(d):
	# Even in d; erfc keeps the tails free of cancellation
	x = np.abs(d)
	root = math.sqrt(1.5)
	return math.sqrt(math.pi / 6.0) * (erfc(root * (x - 0.5)) - erfc(root * (x + 0.5)))


def _spline_indicator(d):
	return _cubic_antiderivative(d + 0.5) - _cubic_antiderivative(d - 0.5)


_CLOSED_FORMS = {
	(GeneratorKind.SINC, GeneratorKind.SINC): _sinc_sinc,
	(GeneratorKind.GAUSS, GeneratorKind.GAUSS): _gauss_gauss,
	(GeneratorKind.SPLINE, GeneratorKind.SPLINE): _spline_spline,
	(GeneratorKind.INDICATOR, GeneratorKind.INDICATOR): _indicator_indicator,
	(GeneratorKind.SINC, GeneratorKind.INDICATOR): _sinc_indicator,
	(GeneratorKind.GAUSS, GeneratorKind.INDICATOR): _gauss_indicator,
	(GeneratorKind.SPLINE, GeneratorKind.INDICATOR): _spline_indicator,
}


def has_closed_form(g, g_tilde):
	pair = (g.kind, g_tilde.kind)
	return pair in _CLOSED_FORMS or pair[::-1] in _CLOSED_FORMS


def correlation(g, g_tilde, a, b, spec=None, method="auto"):
	"""
	Computes the inner product <g(. - a), g~(. - b)>.

	Closed forms are used for every pair that has one; other pairs are
	integrated numerically over the overlap of the two active regions.

	Args:
		g (Generator): First generator.
		g_tilde (Generator): Second generator.
		a (float or array_like): Shift of the first generator.
		b (float or array_like): Shift of the second generator, broadcast against a.
		spec (QuadratureSpec, optional): Quadrature tolerances.
		method (str): "auto" or "quadrature" (forces numerical integration).

	Returns:
		float or numpy.ndarray: The inner products, shaped like the broadcast of a and b.
	"""
	spec = spec or DEFAULT_SPEC
	a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
	pair = (g.kind, g_tilde.kind)

	if method == "auto" and has_closed_form(g, g_tilde):
		if pair in _CLOSED_FORMS:
			values = np.asarray(_CLOSED_FORMS[pair](b_arr - a_arr), dtype=float)
		else:
			values = np.asarray(_CLOSED_FORMS[pair[::-1]](a_arr - b_arr), dtype=float)
	elif method in ("auto", "quadrature"):
		values = _correlations_by_quadrature(g, g_tilde, a_arr, b_arr, spec)
	else:
		raise ValueError(f"Unknown correlation method: {method}")

	if values.ndim == 0:
		return float(values)
	return values


def _correlation_by_quadrature(g, g_tilde, a, b, spec):
	lower = max(a - g.reach(spec), b - g_tilde.reach(spec))
	upper = min(a + g.reach(spec), b + g_tilde.reach(spec))
	if not lower < upper:
		return 0.0
	breakpoints = [a + p for p in g.breakpoints] + [b + p for p in g_tilde.breakpoints]
	return integrate(
		lambda t: _EVALUATORS[g.kind](t - a) * _EVALUATORS[g_tilde.kind](t - b),
		(lower, upper), spec, breakpoints)


def _correlations_by_quadrature(g, g_tilde, a, b, spec):
	flat_a, flat_b = a.ravel(), b.ravel()
	# Each entry is independent; results are placed by index
	with ThreadPoolExecutor(max_workers=10) as executor:
		futures = [
			executor.submit(_correlation_by_quadrature, g, g_tilde, float(x), float(y), spec)
			for x, y in zip(flat_a, flat_b)
		]
		flat = [future.result() for future in futures]
	logger.debug(f"Integrated {len(flat)} {g.name}/{g_tilde.name} correlations numerically")
	return np.array(flat, dtype=float).reshape(a.shape)


def gauss_tail_product(a, b, threshold, side):
	"""
	Closed form of the Gauss product integral over a half-line.

	Args:
		a (array_like): Shift of the first Gaussian.
		b (array_like): Shift of the second Gaussian.
		threshold (float): End point of the half-line.
		side (str): "right" for [threshold, inf), "left" for (-inf, threshold].

	Returns:
		numpy.ndarray: The integrals of gauss(t - a) * gauss(t - b).
	"""
	a = np.asarray(a, dtype=float)
	b = np.asarray(b, dtype=float)
	d = b - a
	m = 0.5 * (a + b)
	distance = threshold - m if side == "right" else m - threshold
	return np.exp(-0.75 * d * d) * 0.5 * math.sqrt(math.pi / 3.0) * erfc(math.sqrt(3.0) * distance)
