import copy
import json
import logging

import pkg_resources

from .exceptions import (
	InvalidBound, InvalidConfig, InvalidGapRange, InvalidQuadratureSpec, JitterTooLarge, WindowMismatch)
from .kernels import GeneratorKind, QuadratureSpec

logger = logging.getLogger(__name__)

SAMPLING_KINDS = ("nonuniform", "jittered", "ctem")
TRIAL_GENERATORS = ("sinc", "gauss", "spline")
# Laws 2 and 3 draw their signals on randomly shifted families
RANDOM_SHIFT_LAWS = (2, 3)


def load_resource(name):
	"""
	Loads a JSON resource shipped in the package data folder.

	Args:
		name (str): File name under data/.

	Returns:
		dict: The parsed content, empty if the resource cannot be read.
	"""
	try:
		data = pkg_resources.resource_string(__name__, f"data/{name}")
		return json.loads(data)
	except Exception as e:
		# Log exceptions (e.g., file not found, JSON decoding errors)
		logger.error(f"Error loading {name}: {e}")
		return {}


class ExperimentConfig:
	"""
	Parameters of an experiment run.

	Values are merged from the package defaults, an optional JSON file and
	explicit overrides, in that order. Attribute access reads the merged values.

	Attributes:
		values (dict): The merged parameters.
	"""

	def __init__(self, overrides=None):
		self.values = load_resource("defaults.json")
		if not self.values:
			raise InvalidConfig("package defaults could not be loaded")
		self.update(overrides or {})

	@classmethod
	def from_file(cls, path, overrides=None):
		"""
		Builds a config from a JSON file with the same keys as the defaults.

		Args:
			path (str): Path of the JSON file.
			overrides (dict, optional): Values applied after the file.

		Returns:
			ExperimentConfig: The merged config.
		"""
		try:
			with open(path, encoding="utf-8") as handle:
				values = json.load(handle)
		except (OSError, ValueError) as e:
			logger.error(f"Error loading config file {path}: {e}")
			raise InvalidConfig(f"cannot read config file {path}: {e}")
		if not isinstance(values, dict):
			raise InvalidConfig(f"config file {path} must hold a JSON object")
		config = cls(values)
		config.update(overrides or {})
		return config

	def update(self, overrides):
		unknown = sorted(set(overrides) - set(self.values))
		if unknown:
			logger.error(f"Unknown config keys: {unknown}")
			raise InvalidConfig(f"unknown config keys: {', '.join(unknown)}")
		for key, value in overrides.items():
			if value is not None or key == "Ltilde":
				self.values[key] = value
		return self

	def __getattr__(self, name):
		values = self.__dict__.get("values", {})
		if name in values:
			return values[name]
		raise AttributeError(name)

	@property
	def effective_shift_mode(self):
		if self.values["law"] in RANDOM_SHIFT_LAWS:
			return "random"
		return self.values["shift_mode"]

	def quadrature_spec(self):
		return QuadratureSpec(
			self.abs_tol, self.rel_tol, self.max_subdivisions, self.infinite_window)

	def validate(self):
		"""
		Checks every parameter before any computation.

		Raises:
			InvalidConfig: For malformed values.
			JitterTooLarge: If jitter is outside [0, 1/2).
			InvalidGapRange: If the gap range is not 0 < lo <= hi.
			InvalidBound: If the shift bound is outside (0, 1/2].
			WindowMismatch: For invalid window sizes.
			InvalidQuadratureSpec: For invalid quadrature tolerances.
		"""
		v = self.values
		if v["generator"] not in TRIAL_GENERATORS:
			raise InvalidConfig(f"generator must be one of {TRIAL_GENERATORS}, got {v['generator']!r}")
		if v["testgen"] not in [kind.value for kind in GeneratorKind]:
			raise InvalidConfig(f"unknown test generator {v['testgen']!r}")
		if v["law"] not in (0, 1, 2, 3):
			raise InvalidConfig(f"law must be one of 0, 1, 2, 3, got {v['law']!r}")
		if v["shift_mode"] not in ("zero", "random"):
			raise InvalidConfig(f"shift mode must be zero or random, got {v['shift_mode']!r}")
		if v["method"] not in ("direct", "iterative"):
			raise InvalidConfig(f"method must be direct or iterative, got {v['method']!r}")
		if v["protocol"] not in ("custom", "published"):
			raise InvalidConfig(f"protocol must be custom or published, got {v['protocol']!r}")
		unknown = [kind for kind in v["sampling"] if kind not in SAMPLING_KINDS]
		if unknown or not v["sampling"]:
			raise InvalidConfig(f"sampling kinds must be taken from {SAMPLING_KINDS}, got {v['sampling']!r}")
		if not v["seeds"] or any(not isinstance(s, int) or not 0 <= s < 2**64 for s in v["seeds"] + [v["seed"]]):
			raise InvalidConfig("seeds must be integers in [0, 2^64)")

		if not v["L"] or any(not isinstance(L, int) or L < 1 for L in v["L"]):
			raise WindowMismatch(f"window half-widths must be positive integers, got {v['L']!r}")
		if v["Ltilde"] is not None and any(v["Ltilde"] < L for L in v["L"]):
			raise WindowMismatch(f"Ltilde {v['Ltilde']} must not be below L")
		if not isinstance(v["padding"], int) or v["padding"] < 0:
			raise WindowMismatch(f"padding must be a nonnegative integer, got {v['padding']!r}")
		if not isinstance(v["Lsig_margin"], int) or v["Lsig_margin"] < 0:
			raise WindowMismatch(f"Lsig margin must be a nonnegative integer, got {v['Lsig_margin']!r}")

		if not 0 <= v["jitter"] < 0.5:
			raise JitterTooLarge(f"jitter must lie in [0, 1/2), got {v['jitter']}")
		if not 0 < v["gap_lo"] <= v["gap_hi"]:
			raise InvalidGapRange(f"gap range must satisfy 0 < lo <= hi, got [{v['gap_lo']}, {v['gap_hi']}]")
		if not 0 < v["shift_bound"] <= 0.5:
			raise InvalidBound(f"shift bound must lie in (0, 1/2], got {v['shift_bound']}")

		for key in ("tol", "grid_step", "root_tol", "figure_step", "diagnostic_grid_step", "omega_fraction"):
			if not v[key] > 0:
				raise InvalidConfig(f"{key} must be positive, got {v[key]!r}")
		if not isinstance(v["max_iter"], int) or v["max_iter"] < 1:
			raise InvalidConfig(f"max_iter must be a positive integer, got {v['max_iter']!r}")
		if not isinstance(v["workers"], int) or v["workers"] < 1:
			raise InvalidConfig(f"workers must be a positive integer, got {v['workers']!r}")
		try:
			self.quadrature_spec()
		except InvalidQuadratureSpec:
			logger.error("Invalid quadrature settings in the experiment config")
			raise
		return self

	def to_dict(self):
		"""
		Returns a deep copy of the merged values, for JSON dumps.
		"""
		return copy.deepcopy(self.values)


def load_protocol(name):
	"""
	Returns one of the protocol cell lists (table1, table2 or figures).
	"""
	protocols = load_resource("protocols.json")
	if name not in protocols:
		raise InvalidConfig(f"unknown protocol section {name!r}")
	return protocols[name]
