"""Monte-Carlo experiment runner: sweeps, scheme comparison, CSV emission.

Every trial draws from its own counter-derived stream, so results are
byte-identical across repeated runs, worker counts, and execution order.
"""
from __future__ import annotations

import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from itertools import product

from .ampmod import AmpModRunner, generate_codewords
from .geometry import Scenario, ScenarioError
from .results import MisidEstimate
from .spectral import SpectralRunner
from .streams import trial_rng
from .watermark import WatermarkRunner

RUNNERS = {
    "ampmod": AmpModRunner,
    "spectral": SpectralRunner,
    "watermark": WatermarkRunner,
}

# axes that modify the scenario itself; anything else is a parameter of the
# active scheme's block
_SCENARIO_AXES = {"snr_db", "num_delay_taps", "pdp_decay", "N"}


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    scheme: str
    axes: tuple[tuple[str, tuple], ...]   # ordered (name, values)
    trials: int
    master_seed: int | None = None

    def __post_init__(self):
        if self.scheme not in RUNNERS:
            raise SweepError(f"unknown scheme '{self.scheme}'")
        if not self.axes:
            raise SweepError("sweep needs at least one axis")
        for name, values in self.axes:
            if not values:
                raise SweepError(f"axis '{name}' has no values")
        if self.trials < 1:
            raise SweepError("trials must be >= 1")

    @property
    def axis_names(self) -> list[str]:
        return [name for name, _ in self.axes]

    def points(self) -> list[dict]:
        combos = product(*(values for _, values in self.axes))
        return [dict(zip(self.axis_names, combo)) for combo in combos]


def load_sweep_spec(text: str) -> SweepSpec:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SweepError(f"sweep spec parse error: {exc}") from exc
    unknown = set(doc) - {"scheme", "trials", "seed", "axes"}
    if unknown:
        raise SweepError(f"unknown key(s) {sorted(unknown)} in sweep spec")
    for key in ("scheme", "trials", "axes"):
        if key not in doc:
            raise SweepError(f"missing '{key}' in sweep spec")
    axes_table = doc["axes"]
    if not isinstance(axes_table, dict) or not axes_table:
        raise SweepError("[axes] must be a non-empty table of name = [values]")
    axes = []
    for name, values in axes_table.items():
        if not isinstance(values, list) or not values:
            raise SweepError(f"axis '{name}' must be a non-empty array")
        axes.append((name, tuple(values)))
    return SweepSpec(scheme=doc["scheme"], axes=tuple(axes),
                     trials=int(doc["trials"]), master_seed=doc.get("seed"))


def load_sweep_spec_file(path) -> SweepSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return load_sweep_spec(fh.read())


def apply_axis(scenario: Scenario, name: str, value) -> Scenario:
    """Bind one sweep-axis value onto a scenario."""
    if name == "N":
        if int(value) < 1:
            raise SweepError("axis N must be >= 1")
        ris_list = tuple(replace(r, num_elements=int(value)) for r in scenario.ris_list)
        return scenario.with_updates(ris_list=ris_list)
    if name in _SCENARIO_AXES:
        return scenario.with_updates(**{name: value})
    params = {k: dict(v) for k, v in scenario.scheme_params.items()}
    params[scenario.scheme][name] = value
    return scenario.with_updates(scheme_params=params)


def scenario_for_point(scenario: Scenario, scheme: str, point: dict) -> Scenario:
    out = scenario.with_updates(scheme=scheme)
    for name, value in point.items():
        out = apply_axis(out, name, value)
    return out


@dataclass(frozen=True)
class SweepRow:
    point_index: int
    params: dict
    estimate: MisidEstimate


def _count_block(scenario: Scenario, scheme: str, point: dict,
                 seed: int, point_index: int, start: int, count: int) -> tuple[int, int, int]:
    """(wrong, undecided) verdict counts over one block of trials."""
    runner = RUNNERS[scheme](scenario_for_point(scenario, scheme, point))
    serving = runner.scenario.serving_ris_id
    wrong = undecided = 0
    for t in range(start, start + count):
        result = runner.run_trial(trial_rng(seed, point_index, t))
        if not result.decided:
            undecided += 1
        elif result.verdict != serving:
            wrong += 1
    return point_index, wrong, undecided


def run_sweep(spec: SweepSpec, scenario: Scenario, jobs: int = 1) -> list[SweepRow]:
    """Evaluate the Cartesian axis grid; deterministic for any `jobs`."""
    if spec.master_seed is None:
        raise SweepError("sweep spec has no master seed")
    points = spec.points()
    # validate every point's configuration up front (cheap) so a bad axis
    # fails before any long run starts
    for point in points:
        RUNNERS[spec.scheme](scenario_for_point(scenario, spec.scheme, point))

    counts = {i: [0, 0] for i in range(len(points))}
    if jobs <= 1:
        for i, point in enumerate(points):
            _, wrong, undecided = _count_block(
                scenario, spec.scheme, point, spec.master_seed, i, 0, spec.trials)
            counts[i] = [wrong, undecided]
    else:
        block = max(250, math.ceil(spec.trials / (jobs * 4)))
        tasks = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, point in enumerate(points):
                for start in range(0, spec.trials, block):
                    n = min(block, spec.trials - start)
                    tasks.append(pool.submit(_count_block, scenario, spec.scheme,
                                             point, spec.master_seed, i, start, n))
            for fut in as_completed(tasks):
                i, wrong, undecided = fut.result()
                counts[i][0] += wrong
                counts[i][1] += undecided

    rows = []
    for i, point in enumerate(points):
        wrong, undecided = counts[i]
        est = MisidEstimate(errors=wrong + undecided, trials=spec.trials,
                            ambiguous=undecided)
        rows.append(SweepRow(point_index=i, params=point, estimate=est))
    return rows


def estimate_point(scenario: Scenario, scheme: str, seed: int,
                   point_index: int, trials: int, jobs: int = 1) -> MisidEstimate:
    """Misidentification estimate of one configuration at one stream point."""
    wrong = undecided = 0
    if jobs <= 1:
        _, wrong, undecided = _count_block(scenario, scheme, {}, seed,
                                           point_index, 0, trials)
    else:
        block = max(250, math.ceil(trials / (jobs * 4)))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_count_block, scenario, scheme, {}, seed,
                                   point_index, start, min(block, trials - start))
                       for start in range(0, trials, block)]
            for fut in as_completed(futures):
                _, w, u = fut.result()
                wrong += w
                undecided += u
    return MisidEstimate(errors=wrong + undecided, trials=trials, ambiguous=undecided)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def sweep_csv(rows: list[SweepRow], scheme: str, seed: int,
              axis_names: list[str]) -> str:
    """CSV text: one row per point, stable column order, 17-digit floats."""
    header = ["scheme", *axis_names, "trials", "errors", "ambiguous",
              "rate", "ci_low", "ci_high", "seed"]
    lines = [",".join(header)]
    for row in sorted(rows, key=lambda r: r.point_index):
        est = row.estimate
        lo, hi = est.ci95
        record = [scheme, *(_fmt(row.params[a]) for a in axis_names),
                  str(est.trials), str(est.errors - est.ambiguous),
                  str(est.ambiguous), _fmt(est.rate), _fmt(lo), _fmt(hi), str(seed)]
        lines.append(",".join(record))
    return "\n".join(lines) + "\n"


def write_text_atomic(text: str, path) -> None:
    """Write via a sibling temp file + rename so failures leave no partial file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ----------------------------------------------------------------------
# Cross-scheme comparison at matched identification airtime

@dataclass(frozen=True)
class CompareRow:
    scheme: str
    estimate: MisidEstimate
    airtime: int
    detector_ops: int


def matched_scenarios(scenario: Scenario, overhead_budget: int) -> dict[str, Scenario]:
    """Derive per-scheme duration parameters filling the airtime budget."""
    if overhead_budget < 1:
        raise SweepError("overhead budget must be positive")
    out = {}
    for scheme in ("ampmod", "spectral", "watermark"):
        if scheme not in scenario.scheme_params:
            raise ScenarioError(f"comparison needs a [scheme.{scheme}] block")
        params = dict(scenario.scheme_params[scheme])
        if scheme == "ampmod":
            count = len(scenario.ris_list)
            L = len(generate_codewords(count, params.get("L"),
                                       int(params.get("d_min", 2)))[0])
            slot = overhead_budget // (L + 2)
            if slot < 1:
                raise SweepError(
                    f"budget {overhead_budget} below the minimal ampmod frame ({L + 2} slots)")
            params["slot_length"] = slot
        elif scheme == "spectral":
            per_symbol = int(params.get("S", 64)) + int(params.get("cp_len", 16))
            M = overhead_budget // per_symbol
            if M < 1:
                raise SweepError(
                    f"budget {overhead_budget} below one OFDM symbol ({per_symbol} samples)")
            params["M"] = M
        else:
            length = (1 << int(params.get("m", 6))) - 1
            P = overhead_budget // length
            if P < 1:
                raise SweepError(
                    f"budget {overhead_budget} below one code period ({length} chips)")
            params["num_payload_symbols"] = P
        all_params = {k: dict(v) for k, v in scenario.scheme_params.items()}
        all_params[scheme] = params
        out[scheme] = scenario.with_updates(scheme=scheme, scheme_params=all_params)
    return out


def compare_schemes(scenario: Scenario, overhead_budget: int, trials: int,
                    seed: int, jobs: int = 1) -> list[CompareRow]:
    """One matched-airtime misidentification estimate per scheme."""
    scenarios = matched_scenarios(scenario, overhead_budget)
    rows = []
    for index, scheme in enumerate(("ampmod", "spectral", "watermark")):
        # stream point index = the scheme's position, so the three schemes
        # draw from disjoint streams
        runner = RUNNERS[scheme](scenarios[scheme])
        est = estimate_point(scenarios[scheme], scheme, seed, index, trials, jobs)
        rows.append(CompareRow(scheme=scheme, estimate=est,
                               airtime=runner.airtime, detector_ops=runner.detector_ops()))
    return rows


def compare_csv(rows: list[CompareRow], seed: int) -> str:
    header = ["scheme", "airtime", "detector_ops", "trials", "errors",
              "ambiguous", "rate", "ci_low", "ci_high", "seed"]
    lines = [",".join(header)]
    for row in rows:
        est = row.estimate
        lo, hi = est.ci95
        lines.append(",".join([
            row.scheme, str(row.airtime), str(row.detector_ops), str(est.trials),
            str(est.errors - est.ambiguous), str(est.ambiguous),
            _fmt(est.rate), _fmt(lo), _fmt(hi), str(seed)]))
    return "\n".join(lines) + "\n"
