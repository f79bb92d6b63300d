class GalerkinError(Exception):
	"""
	Base class of every error raised by galerkinrks.

	The command line prints the class name of these errors on stderr, so the
	names are part of the public interface.
	"""


class InvalidQuadratureSpec(GalerkinError, ValueError):
	pass


class SubdivisionLimitExceeded(GalerkinError, ArithmeticError):
	pass


class InvalidBound(GalerkinError, ValueError):
	pass


class WindowMismatch(GalerkinError, ValueError):
	pass


class GridTooCoarse(GalerkinError, ValueError):
	pass


class InvalidGapRange(GalerkinError, ValueError):
	pass


class InvalidSamplingSet(GalerkinError, ValueError):
	pass


class JitterTooLarge(GalerkinError, ValueError):
	pass


class ZeroSignal(GalerkinError, ValueError):
	pass


class NoCrossings(GalerkinError, ArithmeticError):
	pass


class EmptySampleSet(GalerkinError, ValueError):
	pass


class InvalidConfig(GalerkinError, ValueError):
	pass


class SingularCorrelation(GalerkinError, ArithmeticError):
	def __init__(self, message, condition=None):
		super().__init__(message)
		self.condition = condition


class SingularSystem(GalerkinError, ArithmeticError):
	def __init__(self, message, condition=None):
		super().__init__(message)
		self.condition = condition


class SingularGram(GalerkinError, ArithmeticError):
	def __init__(self, message, condition=None):
		super().__init__(message)
		self.condition = condition


class SingularMatrix(GalerkinError, ArithmeticError):
	"""
	Raised by condition_number when the smallest singular value underflows.
	The attached condition is the +inf sentinel.
	"""

	def __init__(self, message):
		super().__init__(message)
		self.condition = float("inf")


class RankDeficient(GalerkinError, ArithmeticError):
	def __init__(self, message, rank=None):
		super().__init__(message)
		self.rank = rank


class DivergenceDetected(GalerkinError, ArithmeticError):
	def __init__(self, message, report=None):
		super().__init__(message)
		self.report = report


class NotContractive(UserWarning):
	"""
	Warning issued when the iteration matrix norm is at least one. The
	iteration is still attempted.
	"""
