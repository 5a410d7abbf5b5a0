"""Experiment harness.

Built-in example problems, convergence studies against a same-scheme
fine-step reference, pathwise error / experimental-order-of-convergence
tables with CSV emission, the stiffness stability demonstration, and a
deterministic local-order probe on a smooth driver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .fbm import FbmConfig, SamplePath, restrict, sample_fbm
from .fields import (
    cosine_diffusion,
    cubic_radial_drift,
    double_well_drift,
    linear_drift,
    zero_drift,
    geometric_diffusion,
)
from .grids import Grid, make_grid
from .lift import RoughLift, piecewise_linear_lift, tensors_over
from .schemes import (
    BlowupError,
    Problem,
    SchemeStepError,
    Trajectory,
    boundedness_bound,
    explicit_euler,
    implicit_euler_additive,
    semi_implicit_euler,
    semi_implicit_milstein,
    semi_implicit_milstein3,
    simplified_milstein,
    simplified_milstein3,
)

__all__ = [
    "EXAMPLES",
    "ADDITIVE_SCHEMES",
    "MULTIPLICATIVE_SCHEMES",
    "StudyConfig",
    "ErrorRow",
    "ErrorTable",
    "AggregateRow",
    "StudyResult",
    "example_problem",
    "run_scheme",
    "run_study",
    "eoc",
    "StabilityReport",
    "increment_flip_count",
    "sign_change_count",
    "stability_demo",
    "smooth_driver_path",
    "ProbeResult",
    "probe_default_problem",
    "local_error_probe",
]


# ---------------------------------------------------------------------------
# built-in problems


@dataclass(frozen=True)
class _Example:
    build: Callable[[], Problem]
    noise_dim: int
    default_hurst: tuple[float, ...]


EXAMPLES = {
    # scalar double-well drift, additive noise, started in the left well
    "example1": _Example(
        lambda: Problem(double_well_drift(), xi=[-3.0], T=1.0), 1, (0.75,)
    ),
    # stiff contractive linear drift, additive noise
    "example2": _Example(
        lambda: Problem(linear_drift(-70.0), xi=[2.7], T=1.0), 1, (0.75,)
    ),
    # planar cubic-radial drift with two cosine noise fields
    "example3": _Example(
        lambda: Problem(
            cubic_radial_drift(2), xi=[10.0, -10.0], T=1.0, diffusion=cosine_diffusion()
        ),
        2,
        (5.0 / 12.0, 5.0 / 12.0),
    ),
}

ADDITIVE_SCHEMES = ("implicit_euler", "explicit_euler")
MULTIPLICATIVE_SCHEMES = (
    "explicit_euler",
    "semi_implicit_euler",
    "semi_implicit_milstein",
    "semi_implicit_milstein3",
    "simplified_milstein",
    "simplified_milstein3",
)


def example_problem(name: str) -> tuple[Problem, int, tuple[float, ...]]:
    """Return (problem, noise dimension, default Hurst parameters)."""
    if name not in EXAMPLES:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(EXAMPLES)} or 'custom'")
    ex = EXAMPLES[name]
    return ex.build(), ex.noise_dim, ex.default_hurst


def run_scheme(scheme: str, problem: Problem, path: SamplePath) -> Trajectory:
    """Run one named scheme on one driver path (lifts are built on demand)."""
    if scheme == "implicit_euler":
        return implicit_euler_additive(problem, path)
    if scheme == "explicit_euler":
        return explicit_euler(problem, path)
    if scheme == "semi_implicit_euler":
        return semi_implicit_euler(problem, piecewise_linear_lift(path, include_level3=False))
    if scheme == "semi_implicit_milstein":
        return semi_implicit_milstein(problem, piecewise_linear_lift(path, include_level3=False))
    if scheme == "semi_implicit_milstein3":
        return semi_implicit_milstein3(problem, piecewise_linear_lift(path, include_level3=True))
    if scheme == "simplified_milstein":
        return simplified_milstein(problem, path)
    if scheme == "simplified_milstein3":
        return simplified_milstein3(problem, path)
    raise ValueError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# convergence studies


@dataclass(frozen=True)
class StudyConfig:
    """One convergence study: a problem, a scheme, step sizes 2^-k for the
    listed exponents, a finer same-scheme reference, and one run per seed."""

    problem: str
    scheme: str
    hurst: tuple[float, ...] | None = None
    step_exponents: tuple[int, ...] = (5, 6, 7, 8, 9, 10)
    ref_exponent: int = 12
    seeds: tuple[int, ...] = (0,)
    out_dir: str | Path | None = None
    zero_noise: bool = False
    max_dense_n: int = 4096


@dataclass(frozen=True)
class ErrorRow:
    h: float
    error: float  # nan when flagged
    eoc: float | None
    flag: str | None = None


@dataclass(frozen=True)
class ErrorTable:
    rows: tuple[ErrorRow, ...]

    @property
    def average_eoc(self) -> float:
        vals = [r.eoc for r in self.rows if r.eoc is not None]
        return float(np.mean(vals)) if vals else float("nan")

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    @property
    def steps(self) -> np.ndarray:
        return np.array([r.h for r in self.rows])


@dataclass(frozen=True)
class AggregateRow:
    h: float
    mean_error: float
    mean_eoc: float
    std_error: float
    flagged: int = 0


@dataclass(frozen=True)
class StudyResult:
    config: StudyConfig
    seed_tables: dict[int, ErrorTable]
    aggregate: tuple[AggregateRow, ...]
    mean_average_eoc: float
    bound_checks: int
    files: tuple[Path, ...] = ()


def eoc(errors, steps) -> np.ndarray:
    """Experimental orders of convergence between consecutive rows:
    (log e_i - log e_{i-1}) / (log h_i - log h_{i-1})."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(steps, dtype=float)
    if e.ndim != 1 or e.shape != h.shape or e.size < 2:
        raise ValueError("need matching 1-d errors and steps with at least two entries")
    if np.any(e <= 0.0):
        raise ValueError("errors must be positive")
    if np.any(h <= 0.0) or np.any(np.diff(h) >= 0.0):
        raise ValueError("steps must be positive and strictly decreasing")
    return np.diff(np.log(e)) / np.diff(np.log(h))


def _validate_config(config: StudyConfig, problem: Problem | None) -> None:
    if config.problem != "custom" and config.problem not in EXAMPLES:
        raise ValueError(f"unknown problem {config.problem!r}")
    if config.problem == "custom" and problem is None:
        raise ValueError("problem='custom' requires an explicit Problem")
    if not config.step_exponents:
        raise ValueError("need at least one step exponent")
    if config.ref_exponent <= max(config.step_exponents):
        raise ValueError(
            f"reference exponent {config.ref_exponent} must exceed every step exponent"
        )
    if not config.seeds:
        raise ValueError("need at least one seed")


def _check_compat(scheme: str, problem: Problem) -> None:
    allowed = ADDITIVE_SCHEMES if problem.additive else MULTIPLICATIVE_SCHEMES
    if scheme not in allowed:
        kind = "additive" if problem.additive else "multiplicative"
        raise ValueError(f"scheme {scheme!r} does not apply to {kind} problems ({allowed})")


def _zero_path(grid: Grid, m: int) -> SamplePath:
    return SamplePath(grid, np.zeros((grid.N + 1, m)))


def _certify_bound(problem: Problem, path: SamplePath, trajectory: Trajectory) -> bool:
    """Assert the a-priori bound on a drift-implicit additive trajectory.

    Applies when 0 <= C_b and 2*C_b*h <= 1; for negative C_b the exponential
    prefactor drops below 1 and the displayed bound is violated by the
    initial condition itself, so nothing is certified.
    """
    cb = problem.drift.one_sided_lipschitz
    if cb < 0.0 or 2.0 * cb * trajectory.grid.h > 1.0:
        return False
    bound = boundedness_bound(problem, path)
    peak = float(np.max(np.linalg.norm(trajectory.states, axis=1)))
    if peak > bound:
        raise RuntimeError(
            f"boundedness certificate violated: max |y| = {peak:.6g} > bound {bound:.6g}"
        )
    return True


def run_study(
    config: StudyConfig,
    problem: Problem | None = None,
    noise_dim: int | None = None,
) -> StudyResult:
    """Run the convergence study.

    For each seed one driver is sampled on the reference grid; the reference
    trajectory uses the same scheme at the reference step size and the driver
    is restricted to every coarser grid.  The pathwise error of a coarse run
    is the max over its nodes of the Euclidean distance to the reference.
    Divergence or a failed implicit solve is recorded as a flagged row, never
    raised.  Identical configs produce byte-identical CSV output.
    """
    _validate_config(config, problem)
    if config.problem == "custom":
        m = noise_dim if noise_dim is not None else (problem.dim if problem.additive else None)
        if m is None:
            raise ValueError("custom multiplicative problems need noise_dim")
        hurst = config.hurst if config.hurst is not None else (0.5,) * m
    else:
        problem, m, default_hurst = example_problem(config.problem)
        hurst = config.hurst if config.hurst is not None else default_hurst
    _check_compat(config.scheme, problem)

    exponents = tuple(sorted(config.step_exponents))
    ref_grid = make_grid(problem.T, 2**config.ref_exponent)
    certify = problem.additive and config.scheme == "implicit_euler"

    seed_tables: dict[int, ErrorTable] = {}
    bound_checks = 0
    for seed in config.seeds:
        if config.zero_noise:
            path_ref = _zero_path(ref_grid, m)
        else:
            path_ref = sample_fbm(
                FbmConfig(hurst, m, ref_grid, seed, max_dense_n=config.max_dense_n)
            )
        ref_traj: Trajectory | None = None
        ref_flag: str | None = None
        try:
            ref_traj = run_scheme(config.scheme, problem, path_ref)
        except BlowupError as err:
            ref_flag = f"reference-blowup:step={err.step}"
        except SchemeStepError as err:
            ref_flag = f"reference-solver:step={err.step}"
        if ref_traj is not None and certify and _certify_bound(problem, path_ref, ref_traj):
            bound_checks += 1

        raw: list[tuple[float, float, str | None]] = []
        for k in exponents:
            h = problem.T / 2**k
            factor = 2 ** (config.ref_exponent - k)
            coarse = restrict(path_ref, factor)
            if ref_flag is not None:
                raw.append((h, float("nan"), ref_flag))
                continue
            try:
                traj = run_scheme(config.scheme, problem, coarse)
            except BlowupError as err:
                raw.append((h, float("nan"), f"blowup:step={err.step}"))
                continue
            except SchemeStepError as err:
                raw.append((h, float("nan"), f"solver:step={err.step}"))
                continue
            if certify and _certify_bound(problem, coarse, traj):
                bound_checks += 1
            gap = ref_traj.states[::factor] - traj.states
            err_val = float(np.max(np.linalg.norm(gap, axis=1)))
            raw.append((h, err_val, None))

        rows = []
        for idx, (h, err_val, flag) in enumerate(raw):
            value = None
            if (
                idx > 0
                and flag is None
                and raw[idx - 1][2] is None
                and err_val > 0.0
                and raw[idx - 1][1] > 0.0
            ):
                value = float(
                    eoc([raw[idx - 1][1], err_val], [raw[idx - 1][0], h])[0]
                )
            rows.append(ErrorRow(h, err_val, value, flag))
        seed_tables[seed] = ErrorTable(tuple(rows))

    aggregate = []
    for idx, k in enumerate(exponents):
        h = problem.T / 2**k
        errs = [t.rows[idx].error for t in seed_tables.values() if t.rows[idx].flag is None]
        eocs = [t.rows[idx].eoc for t in seed_tables.values() if t.rows[idx].eoc is not None]
        flagged = sum(1 for t in seed_tables.values() if t.rows[idx].flag is not None)
        mean_err = float(np.mean(errs)) if errs else float("nan")
        std_err = float(np.std(errs, ddof=1)) if len(errs) > 1 else 0.0 if errs else float("nan")
        mean_eoc = float(np.mean(eocs)) if eocs else float("nan")
        aggregate.append(AggregateRow(h, mean_err, mean_eoc, std_err, flagged))

    per_seed_avgs = [t.average_eoc for t in seed_tables.values() if not math.isnan(t.average_eoc)]
    mean_avg = float(np.mean(per_seed_avgs)) if per_seed_avgs else float("nan")

    files: tuple[Path, ...] = ()
    if config.out_dir is not None:
        files = _write_study_files(config, seed_tables, tuple(aggregate))
    return StudyResult(config, seed_tables, tuple(aggregate), mean_avg, bound_checks, files)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _write_study_files(config, seed_tables, aggregate) -> tuple[Path, ...]:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{config.problem}_{config.scheme}"
    written = []
    for seed, table in seed_tables.items():
        p = out / f"{stem}_seed{seed}.csv"
        lines = ["h,error,eoc,flag"]
        for r in table.rows:
            eoc_txt = _fmt(r.eoc) if r.eoc is not None else ""
            lines.append(f"{_fmt(r.h)},{_fmt(r.error)},{eoc_txt},{r.flag or ''}")
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    p = out / f"{stem}_aggregate.csv"
    lines = ["h,mean_error,mean_eoc,std_error"]
    for r in aggregate:
        lines.append(f"{_fmt(r.h)},{_fmt(r.mean_error)},{_fmt(r.mean_eoc)},{_fmt(r.std_error)}")
    p.write_text("\n".join(lines) + "\n")
    written.append(p)
    # two-column log-log companion for plotting
    p = out / f"{stem}_loglog.csv"
    lines = ["log2_h,log2_mean_error"]
    for r in aggregate:
        if math.isfinite(r.mean_error) and r.mean_error > 0.0:
            lines.append(f"{_fmt(math.log2(r.h))},{_fmt(math.log2(r.mean_error))}")
    p.write_text("\n".join(lines) + "\n")
    written.append(p)
    return tuple(written)


# ---------------------------------------------------------------------------
# stiffness demonstration


@dataclass(frozen=True)
class StabilityReport:
    """Oscillation diagnostics for one forward/implicit pair on one driver.

    Two flip counts are reported per run: ``increment_flips`` counts strict
    sign changes between consecutive increments, ``sign_changes`` counts zero
    crossings of the trajectory itself (the visible oscillation of an
    unstable forward run).
    """

    h: float
    explicit: Trajectory
    implicit: Trajectory
    explicit_increment_flips: int
    implicit_increment_flips: int
    explicit_sign_changes: int
    implicit_sign_changes: int
    explicit_max_amplitude: float
    implicit_max_amplitude: float
    explicit_unstable: bool


def increment_flip_count(states: np.ndarray) -> int:
    """Number of strict sign changes between consecutive increments of a
    scalar trajectory."""
    y = np.asarray(states, dtype=float).reshape(len(states), -1)[:, 0]
    s = np.sign(np.diff(y))
    return int(np.sum(s[1:] * s[:-1] < 0.0))


def sign_change_count(states: np.ndarray) -> int:
    """Number of zero crossings of a scalar trajectory."""
    y = np.asarray(states, dtype=float).reshape(len(states), -1)[:, 0]
    s = np.sign(y)
    return int(np.sum(s[1:] * s[:-1] < 0.0))


DEFAULT_STABILITY_SEED = 13


def stability_demo(
    h: float,
    seed: int = DEFAULT_STABILITY_SEED,
    zero_noise: bool = False,
    hurst: float = 0.75,
) -> StabilityReport:
    """Run forward and drift-implicit Euler on the stiff linear problem with
    the same driver and report oscillation diagnostics.

    The forward drift map contracts iff |1 - 70h| <= 1, so the run is
    classified unstable when |1 - 70h| > 1; the implicit step has no size
    restriction (the one-sided Lipschitz constant is negative).
    """
    problem, m, _ = example_problem("example2")
    N = round(problem.T / h)
    if N < 1 or abs(N * h - problem.T) > 1e-9:
        raise ValueError(f"step size {h} does not divide the horizon T={problem.T}")
    grid = make_grid(problem.T, N)
    if zero_noise:
        path = _zero_path(grid, m)
    else:
        path = sample_fbm(FbmConfig((hurst,), m, grid, seed))
    expl = explicit_euler(problem, path)
    impl = implicit_euler_additive(problem, path)
    rate = -problem.drift.one_sided_lipschitz  # 70
    return StabilityReport(
        h=h,
        explicit=expl,
        implicit=impl,
        explicit_increment_flips=increment_flip_count(expl.states),
        implicit_increment_flips=increment_flip_count(impl.states),
        explicit_sign_changes=sign_change_count(expl.states),
        implicit_sign_changes=sign_change_count(impl.states),
        explicit_max_amplitude=float(np.max(np.abs(expl.states))),
        implicit_max_amplitude=float(np.max(np.abs(impl.states))),
        explicit_unstable=abs(1.0 - rate * h) > 1.0,
    )


# ---------------------------------------------------------------------------
# local-order probe on a smooth deterministic driver


def smooth_driver_path(grid: Grid, m: int = 1) -> SamplePath:
    """Deterministic sinusoidal driver, one frequency per component, pinned to
    zero at t = 0.  Lipschitz (p = 1), so local orders are visible."""
    t = grid.nodes
    values = np.empty((grid.N + 1, m))
    for i in range(m):
        amp = 1.0 + 0.2 * i
        freq = 1.0 + 0.5 * i
        phase = 0.3 + 0.4 * i
        values[:, i] = amp * (np.sin(2.0 * np.pi * freq * t + phase) - np.sin(phase))
    return SamplePath(grid, values)


@dataclass(frozen=True)
class ProbeResult:
    steps: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float  # nan when the scheme is exact on this configuration


def probe_default_problem() -> Problem:
    """Scalar test configuration sigma(y) = y with zero drift."""
    return Problem(zero_drift(1), xi=[1.0], T=1.0, diffusion=geometric_diffusion())


_PROBE_SCHEMES = {
    "euler": semi_implicit_euler,
    "milstein": semi_implicit_milstein,
    "milstein3": semi_implicit_milstein3,
}


def local_error_probe(
    problem: Problem,
    scheme: str,
    base_point,
    steps=tuple(2.0**-k for k in range(6, 13)),
    sub_steps: int = 256,
) -> ProbeResult:
    """One-step errors of a scheme against a fine-step reference started from
    the same point, on the smooth sinusoidal driver.

    For each step size h the driver is lifted piecewise-linearly at high
    resolution on [0, h]; the reference is the third-order scheme across all
    sub-steps, the probed scheme takes a single step with the composed
    tensors.  Returns the errors and the fitted log-log slope (nan when all
    errors sit at rounding level, i.e. the scheme is exact)."""
    if scheme not in _PROBE_SCHEMES:
        raise ValueError(f"unknown probe scheme {scheme!r}; choose from {sorted(_PROBE_SCHEMES)}")
    if problem.additive:
        raise ValueError("the probe needs a multiplicative problem")
    m = problem.diffusion.noise_dim
    base = np.asarray(base_point, dtype=float)
    errors = []
    for h in steps:
        fine_grid = make_grid(h, sub_steps)
        fine_lift = piecewise_linear_lift(smooth_driver_path(fine_grid, m))
        prob_h = Problem(problem.drift, base, h, diffusion=problem.diffusion)
        ref = semi_implicit_milstein3(prob_h, fine_lift).states[-1]
        x, X2, X3 = tensors_over(fine_lift, 0, sub_steps)
        one_lift = RoughLift(make_grid(h, 1), x[None], X2[None], X3[None])
        y1 = _PROBE_SCHEMES[scheme](prob_h, one_lift).states[-1]
        errors.append(float(np.linalg.norm(ref - y1)))
    usable = [(h, e) for h, e in zip(steps, errors) if e > 1e-15]
    if len(usable) >= 2:
        hs, es = zip(*usable)
        slope = float(np.polyfit(np.log(hs), np.log(es), 1)[0])
    else:
        slope = float("nan")
    return ProbeResult(tuple(steps), tuple(errors), slope)
