import csv
import json
import logging

import numpy as np

from ..exceptions import InvalidConfig
from ..model import FriSignal, ShiftedFamily, ShiftMode
from ..sampling import SamplingKind, SamplingSet

logger = logging.getLogger(__name__)


def format_float(value):
	"""
	Formats a number with 17 significant digits, independent of the locale.
	"""
	return f"{float(value):.17g}"


def _format_cell(value):
	if isinstance(value, (bool, np.bool_)):
		return str(bool(value)).lower()
	if isinstance(value, (float, np.floating)):
		return format_float(value)
	return str(value)


def _read_header(lines):
	# Leading key=value lines, then the data rows
	header = {}
	index = 0
	for index, line in enumerate(lines):
		stripped = line.strip()
		if not stripped:
			continue
		if "=" not in stripped:
			break
		key, value = stripped.split("=", 1)
		header[key.strip()] = value.strip()
	else:
		index = len(lines)
	rows = [line.split() for line in lines[index:] if line.strip()]
	return header, rows


def write_signal(path, signal):
	"""
	Writes a signal as header lines followed by one "i theta_i c_i" line per coefficient.

	Args:
		path (str or pathlib.Path): Destination file.
		signal (FriSignal): The signal.
	"""
	family = signal.family
	lines = [
		f"generator={signal.generator.name}",
		f"L={signal.L}",
		f"seed={'' if signal.seed is None else int(signal.seed)}",
	]
	for i in range(-signal.L, signal.L + 1):
		lines.append(f"{i} {format_float(family.theta(i))} {format_float(signal.coefficient(i))}")
	with open(path, "w", encoding="utf-8", newline="\n") as handle:
		handle.write("\n".join(lines) + "\n")


def read_signal(path):
	"""
	Reads a signal written by write_signal.

	Args:
		path (str or pathlib.Path): Source file.

	Returns:
		FriSignal: The signal on a family carrying the stored shifts.

	Raises:
		InvalidConfig: If the file is malformed.
	"""
	with open(path, encoding="utf-8") as handle:
		header, rows = _read_header(handle.read().splitlines())
	try:
		L = int(header["L"])
		seed = int(header["seed"]) if header.get("seed") else None
		indices = np.array([int(row[0]) for row in rows])
		shifts = np.array([float(row[1]) for row in rows])
		coeffs = np.array([float(row[2]) for row in rows])
		generator = header["generator"]
	except (KeyError, IndexError, ValueError) as e:
		logger.error(f"Malformed signal file {path}: {e}")
		raise InvalidConfig(f"malformed signal file {path}: {e}")
	if not np.array_equal(indices, np.arange(-L, L + 1)):
		raise InvalidConfig(f"signal file {path} does not cover the window [-{L}, {L}]")

	mode = ShiftMode.RANDOM if np.any(shifts != 0) else ShiftMode.ZERO
	bound = float(np.max(np.abs(shifts)))
	family = ShiftedFamily(generator, shifts, mode, bound, seed)
	return FriSignal(family, coeffs, seed=seed)


def write_sampling_set(path, sampling_set):
	"""
	Writes a sampling set as header lines followed by one "gamma_n w_n" line per sample.

	Args:
		path (str or pathlib.Path): Destination file.
		sampling_set (SamplingSet): The set.
	"""
	interval = sampling_set.interval or ()
	lines = [
		f"kind={sampling_set.kind.value}",
		f"seed={'' if sampling_set.seed is None else int(sampling_set.seed)}",
		"interval=" + ",".join(format_float(v) for v in interval),
	]
	for gamma, weight in zip(sampling_set.abscissae, sampling_set.weights):
		lines.append(f"{format_float(gamma)} {format_float(weight)}")
	with open(path, "w", encoding="utf-8", newline="\n") as handle:
		handle.write("\n".join(lines) + "\n")


def read_sampling_set(path):
	"""
	Reads a sampling set written by write_sampling_set; weights are recomputed.
	"""
	with open(path, encoding="utf-8") as handle:
		header, rows = _read_header(handle.read().splitlines())
	try:
		kind = SamplingKind(header.get("kind", "custom"))
		seed = int(header["seed"]) if header.get("seed") else None
		interval = tuple(float(v) for v in header["interval"].split(",")) if header.get("interval") else None
		abscissae = [float(row[0]) for row in rows]
	except (KeyError, IndexError, ValueError) as e:
		logger.error(f"Malformed sampling file {path}: {e}")
		raise InvalidConfig(f"malformed sampling file {path}: {e}")
	return SamplingSet(abscissae, kind, interval, seed)


def write_csv(path, header, rows, meta=None):
	"""
	Writes a comma-separated table with an optional "# config: {...}" first line.

	Args:
		path (str or pathlib.Path): Destination file.
		header (list): Column names.
		rows (iterable): Row tuples; floats are written with 17 significant digits.
		meta (dict, optional): Metadata dumped as key-sorted JSON in the comment line.
	"""
	with open(path, "w", encoding="utf-8", newline="") as handle:
		if meta is not None:
			handle.write(f"# config: {json.dumps(meta, sort_keys=True)}\n")
		writer = csv.writer(handle, lineterminator="\n")
		writer.writerow(header)
		for row in rows:
			writer.writerow([_format_cell(value) for value in row])


def read_csv(path):
	"""
	Reads a table written by write_csv.

	Returns:
		tuple: (meta dict or None, list of row dicts with string values).
	"""
	meta = None
	with open(path, encoding="utf-8", newline="") as handle:
		lines = handle.read().splitlines()
	if lines and lines[0].startswith("# config: "):
		meta = json.loads(lines[0][len("# config: "):])
		lines = lines[1:]
	return meta, list(csv.DictReader(lines))
