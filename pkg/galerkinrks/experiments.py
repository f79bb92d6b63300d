import logging
import math
import pathlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ExperimentConfig, load_protocol
from .diagnostics import (
	admissibility_report, best_approximation, condition_number, error_metrics, stability_bounds)
from .exceptions import GalerkinError, WindowMismatch
from .model import SignalLaw, build_family, build_truncated_kernel, make_test_signal
from .reconstruct import (
	assemble_system, build_projector, iterate_ap, solve_galerkin, solve_subgalerkin_lsq)
from .sampling import capture, make_ctem, make_jittered, make_nonuniform, pre_reconstruct
from .utils.textio import write_csv, write_sampling_set, write_signal

# Configure logging
logging.basicConfig(level=logging.ERROR)
logger = logging.getLogger(__name__)

TABLE1_HEADER = ["generator", "law", "sampling", "L", "seed", "e", "epsilon", "ratio_bound", "status"]
TABLE2_HEADER = ["generator", "shift_mode", "sampling", "L", "seed", "cond", "status"]
FIGURE_NAMES = ("signal", "prerecon_diff", "galerkin_diff", "bestapprox_diff")


def signal_law(law):
	"""
	Maps a law number 0..3 to its coefficient law; odd numbers are the cosine laws.
	"""
	return SignalLaw.COSINE_DECAY if law % 2 else SignalLaw.RANDOM_DECAY


def failed_cells(rows):
	"""
	Counts the table rows whose status is not "ok".
	"""
	return sum(1 for row in rows if row[-1] != "ok")


class ExperimentCase:
	"""
	One (generator, law, sampling, L, seed) configuration with its signal and samples.

	Attributes:
		trial (ShiftedFamily): Trial family, wide enough for the reference signal and the kernel padding.
		test (ShiftedFamily): Test family.
		signal (FriSignal): Reference signal.
		sampling_set (SamplingSet): Sample positions.
		record (SampleRecord): Sampled values.
		L (int): Trial window half-width.
		L_tilde (int): Test window half-width.
	"""

	def __init__(self, trial, test, signal, sampling_set, record, L, L_tilde):
		self.trial = trial
		self.test = test
		self.signal = signal
		self.sampling_set = sampling_set
		self.record = record
		self.L = L
		self.L_tilde = L_tilde


class ExperimentRunner:
	"""
	Runs the reconstruction experiments and writes their data files.

	Attributes:
		config (ExperimentConfig): The validated configuration.
		spec (QuadratureSpec): Quadrature tolerances derived from the config.
		out (pathlib.Path): Output directory.
	"""

	def __init__(self, config=None):
		"""
		Initializes a new runner; the config is validated before anything is computed.

		Args:
			config (ExperimentConfig, optional): The configuration. Defaults to the package defaults.
		"""
		self.config = (config or ExperimentConfig()).validate()
		self.spec = self.config.quadrature_spec()
		self.out = pathlib.Path(self.config.out)

	def build_case(self, generator, law, L, sampling, seed, shift_mode=None):
		"""
		Draws the signal and samples of one configuration.

		Args:
			generator (str): Trial generator name.
			law (int): Signal law 0..3.
			L (int): Trial window half-width.
			sampling (str): "nonuniform", "jittered" or "ctem".
			seed (int): Seed of every draw of the case.
			shift_mode (str, optional): Overrides the shift mode implied by the law.

		Returns:
			ExperimentCase: The case.
		"""
		config = self.config
		if shift_mode is None:
			shift_mode = "random" if law in (2, 3) else config.shift_mode
		L_tilde = L if config.Ltilde is None else config.Ltilde
		L_sig = L + config.Lsig_margin
		kernel_window = max(L, L_tilde) + config.padding

		trial = build_family(generator, shift_mode, max(L_sig, kernel_window), seed, config.shift_bound)
		test = build_family(config.testgen, "zero", kernel_window)
		signal = make_test_signal(trial, signal_law(law), L_sig, seed)
		if config.amplitude != 1.0:
			signal = signal.scaled(config.amplitude)

		if sampling == "nonuniform":
			sampling_set = make_nonuniform(L, (config.gap_lo, config.gap_hi), seed)
		elif sampling == "jittered":
			sampling_set = make_jittered(L, config.jitter, seed)
		else:
			sampling_set = make_ctem(signal, (-L - 2.0, L + 2.0), config.grid_step, config.root_tol)
			sampling_set.seed = seed
		logger.info(f"Case {generator}/{law}/{sampling} L={L} seed={seed}: {len(sampling_set)} samples")
		return ExperimentCase(trial, test, signal, sampling_set, capture(signal, sampling_set), L, L_tilde)

	def solve(self, case):
		"""
		Reconstructs a case with the configured method.

		Returns:
			tuple: (GalerkinSystem, FriSignal solution, IterationReport or None).
		"""
		system = assemble_system(case.trial, case.test, case.record, case.L, case.L_tilde)
		if self.config.method == "iterative":
			if not system.is_square:
				raise WindowMismatch("the iterative method needs Ltilde == L")
			projector = build_projector(case.trial, case.test, case.L, self.spec)
			solution, report = iterate_ap(
				case.trial, case.test, case.record, case.L, projector, self.config.tol, self.config.max_iter)
			return system, solution, report
		if system.is_square:
			return system, solve_galerkin(system), None
		return system, solve_subgalerkin_lsq(system), None

	def _meta(self, **extra):
		meta = self.config.to_dict()
		meta.update(extra)
		return meta

	def _case_dir(self, L, sampling):
		# One directory per case when several are requested
		if len(self.config.L) * len(self.config.sampling) == 1:
			directory = self.out
		else:
			directory = self.out / f"L{L}_{sampling}"
		directory.mkdir(parents=True, exist_ok=True)
		return directory

	def reconstruct(self):
		"""
		Reconstructs the configured signal and writes signal, samples, solution and metrics.

		Returns:
			list: Paths of the written metrics files.
		"""
		config = self.config
		written = []
		for L in config.L:
			for sampling in config.sampling:
				case = self.build_case(config.generator, config.law, L, sampling, config.seed)
				system, solution, report = self.solve(case)
				best, _ = best_approximation(case.signal, case.trial, L, self.spec)
				metrics = error_metrics(case.signal, {"galerkin": solution}, spec=self.spec, best=best)

				rows = metrics.rows()
				try:
					rows.append(("cond", condition_number(system.matrix), "exact"))
				except GalerkinError as e:
					logger.warning(f"Condition number unavailable: {e}")
					rows.append(("cond", math.inf, "singular"))
				if report is not None:
					rows.append(("rho", report.certified_bound, "exact"))
					rows.append(("rho_inf", report.certified_bound_inf, "exact"))
					rows.append(("steps", report.steps, report.status))

				directory = self._case_dir(L, sampling)
				write_signal(directory / "signal.txt", case.signal)
				write_sampling_set(directory / "sampling.txt", case.sampling_set)
				write_signal(directory / "solution.txt", solution)
				meta = self._meta(L=L, sampling=sampling)
				write_csv(directory / "metrics.csv", ["name", "value", "flag"], rows, meta)
				if report is not None:
					write_csv(directory / "iteration.csv", ["step", "increment_norm"], report.rows(), meta)
				written.append(directory / "metrics.csv")
		return written

	def _run_cells(self, cells, compute):
		# Cells run concurrently; results are placed by index
		with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
			futures = [executor.submit(compute, *cell) for cell in cells]
			return [future.result() for future in futures]

	def _report_failures(self, name, rows):
		failed = failed_cells(rows)
		if failed:
			logger.warning(f"{name}: {failed} of {len(rows)} cells failed")
		else:
			logger.info(f"{name}: all {len(rows)} cells succeeded")
		return failed

	def _table1_cell(self, generator, law, sampling, L, seed):
		try:
			case = self.build_case(generator, law, L, sampling, seed)
			_, solution, _ = self.solve(case)
			best, _ = best_approximation(case.signal, case.trial, L, self.spec)
			metrics = error_metrics(case.signal, {"galerkin": solution}, spec=self.spec, best=best)
			entry = metrics.entries["galerkin"]
			return (generator, law, sampling, L, seed, metrics.e, entry["epsilon"], entry["ratio_bound"], "ok")
		except GalerkinError as e:
			logger.warning(f"Table cell {generator}/{law}/{sampling} L={L} seed={seed} failed: {e}")
			return (generator, law, sampling, L, seed, math.nan, math.nan, math.nan, type(e).__name__)

	def _table2_cell(self, generator, shift_mode, sampling, L, seed):
		try:
			case = self.build_case(generator, 0, L, sampling, seed, shift_mode)
			system = assemble_system(case.trial, case.test, case.record, L, L)
			return (generator, shift_mode, sampling, L, seed, condition_number(system.matrix), "ok")
		except GalerkinError as e:
			logger.warning(f"Table cell {generator}/{shift_mode}/{sampling} L={L} seed={seed} failed: {e}")
			return (generator, shift_mode, sampling, L, seed, math.nan, type(e).__name__)

	def _protocol_grid(self, name, columns):
		config = self.config
		if config.protocol == "published":
			protocol = load_protocol(name)
			heads = [tuple(cell[c] for c in columns) for cell in protocol["cells"]]
			Ls, samplings, seeds = protocol["L"], protocol["sampling"], protocol["seeds"]
		else:
			values = {"generator": config.generator, "law": config.law, "shift_mode": config.effective_shift_mode}
			heads = [tuple(values[c] for c in columns)]
			Ls, samplings, seeds = config.L, config.sampling, config.seeds
		return [head + (sampling, L, seed) for head in heads for sampling in samplings for L in Ls for seed in seeds]

	def table1(self):
		"""
		Computes the quasi-optimality table and writes table1.csv.

		Returns:
			list: The rows, sorted by (generator, law, sampling, L, seed).
		"""
		cells = self._protocol_grid("table1", ("generator", "law"))
		rows = sorted(self._run_cells(cells, self._table1_cell), key=lambda row: row[:5])
		self.out.mkdir(parents=True, exist_ok=True)
		write_csv(self.out / "table1.csv", TABLE1_HEADER, rows, self._meta())
		self._report_failures("table1", rows)
		return rows

	def table2(self):
		"""
		Computes the condition number table and writes table2.csv.

		Returns:
			list: The rows, sorted by (generator, shift_mode, sampling, L, seed).
		"""
		cells = self._protocol_grid("table2", ("generator", "shift_mode"))
		rows = sorted(self._run_cells(cells, self._table2_cell), key=lambda row: row[:5])
		self.out.mkdir(parents=True, exist_ok=True)
		write_csv(self.out / "table2.csv", TABLE2_HEADER, rows, self._meta())
		self._report_failures("table2", rows)
		return rows

	def figure_grids(self, case):
		"""
		Computes the figure grids of one case on [-L, L].

		Returns:
			tuple: (grid points, dict of name -> values).
		"""
		L = case.L
		count = int(round(2 * L / self.config.figure_step)) + 1
		t = np.linspace(-L, L, count)
		_, solution, _ = self.solve(case)
		best, _ = best_approximation(case.signal, case.trial, L, self.spec)
		kernel = build_truncated_kernel(case.trial, case.test, L, self.config.padding, self.spec)
		pre_reconstruction = pre_reconstruct(case.record, kernel)

		signal = case.signal(t)
		return t, {
			"signal": signal,
			"prerecon_diff": signal - pre_reconstruction(t),
			"galerkin_diff": signal - solution(t),
			"bestapprox_diff": best(t) - solution(t),
		}

	def figures(self):
		"""
		Writes the figure grids figure_<sampling>_<name>.csv.

		Returns:
			dict: (sampling, name) -> path.
		"""
		config = self.config
		if config.protocol == "published":
			protocol = load_protocol("figures")
			generator, law, L = protocol["generator"], protocol["law"], protocol["L"][0]
			samplings, seed = protocol["sampling"], protocol["seed"]
		else:
			generator, law, L, samplings, seed = config.generator, config.law, config.L[0], config.sampling, config.seed

		self.out.mkdir(parents=True, exist_ok=True)
		written = {}
		for sampling in samplings:
			case = self.build_case(generator, law, L, sampling, seed)
			t, grids = self.figure_grids(case)
			meta = self._meta(L=L, sampling=sampling)
			for name in FIGURE_NAMES:
				path = self.out / f"figure_{sampling}_{name}.csv"
				write_csv(path, ["t", "value"], zip(t, grids[name]), meta)
				written[(sampling, name)] = path
		return written

	def diagnose(self):
		"""
		Writes the admissibility and stability reports of the configured cases.

		Returns:
			list: (AdmissibilityReport, StabilityReport) per case.
		"""
		config = self.config
		reports = []
		for L in config.L:
			for sampling in config.sampling:
				case = self.build_case(config.generator, config.law, L, sampling, config.seed)
				kernel = build_truncated_kernel(case.trial, case.test, L, config.padding, self.spec)
				admissibility = admissibility_report(
					case.trial, case.test, L, case.sampling_set, kernel, self.spec,
					config.diagnostic_grid_step, config.omega_fraction)
				stability = stability_bounds(case.trial, L, case.sampling_set, self.spec)

				directory = self._case_dir(L, sampling)
				meta = self._meta(L=L, sampling=sampling)
				write_csv(directory / "admissibility.csv", ["name", "value", "flag"], admissibility.rows(), meta)
				write_csv(directory / "stability.csv", ["name", "value", "flag"], stability.rows(), meta)
				reports.append((admissibility, stability))
		return reports
