"""Named experiment presets and the orchestration that runs them.

Each preset is a complete, deterministic experiment description: which
benchmark, how the surrogate is built, what observation is inverted, and
which diagnostics run afterwards.  ``run_experiment`` executes one and
writes all artifacts (manifest, traces, posterior summary, profiles,
chains) into an output directory.  Numeric CSV content is written with
full round-trip precision so repeated runs with the same seed are
byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .baselines import FAMILIES as DETERMINISTIC_FAMILIES
from .baselines import eval_deterministic, fit_deterministic
from .benchmarks import eval_benchmark, get_benchmark
from .bo import BoConfig, BoTrace, run_bo, _validation_points
from .errors import ConfigurationError, InferenceError
from .gp import KernelSpec, gp_fit, gp_predict_many
from .inversion import (
    InverseProblem,
    PosteriorSummary,
    evaluate_profile_grid,
    high_probability_region,
    laplace_approximation,
    map_multistart,
)
from .sampling import McmcConfig, grid_posterior, kde_estimate, run_mcmc

__all__ = [
    "InversionSettings",
    "ExperimentConfig",
    "ExperimentResult",
    "PRESETS",
    "list_presets",
    "get_preset",
    "run_experiment",
    "config_to_text",
    "config_from_text",
    "load_config_file",
]

ONE_DIM_BENCHMARKS = ("mixed1d", "levy1d", "griewank1d", "forrester1d")


@dataclass(frozen=True)
class InversionSettings:
    """Observation and search settings for the inversion stage.

    When ``x_true`` is set the observation is synthesized noise-free from
    the benchmark at that point and recorded in the manifest; otherwise
    ``observed`` must be given directly.
    """

    observed: Optional[float] = None
    x_true: Optional[tuple[float, ...]] = None
    obs_variance: float = 0.01
    hp_threshold: float = 0.95
    grid_resolution: int = 2048
    n_starts: int = 16
    max_iter: int = 400
    map_seed: int = 0

    def __post_init__(self):
        if (self.observed is None) == (self.x_true is None):
            raise ConfigurationError(
                "exactly one of observed / x_true must be set"
            )
        if not self.obs_variance > 0:
            raise ConfigurationError("obs_variance must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """One runnable experiment: benchmark, surrogate stage, optional stages."""

    name: str
    benchmark: str
    description: str
    bo: BoConfig
    inversion: Optional[InversionSettings] = None
    mcmc: Optional[McmcConfig] = None
    mcmc_grid_resolution: int = 512
    compare_benchmarks: tuple[str, ...] = ()
    compare_n_samples: int = 14

    @property
    def kind(self) -> str:
        if self.compare_benchmarks:
            return "compare"
        if self.inversion is None:
            return "bo-only"
        return "inversion"


def _bo_1d(seed: int = 0, **overrides) -> BoConfig:
    base = dict(
        n_init=5,
        n_acq=1,
        max_evaluations=25,
        mse_threshold=1e-3,
        mse_mode="absolute",
        n_val=1000,
        kernel_family="matern52",
        noise_variance=1e-6,
        acquisition="ucb",
        kappa=200.0,
        restarts=3,
        seed=seed,
    )
    base.update(overrides)
    return BoConfig(**base)


def _build_presets() -> dict[str, ExperimentConfig]:
    presets = {}

    presets["forrester-inverse"] = ExperimentConfig(
        name="forrester-inverse",
        benchmark="forrester1d",
        description=(
            "Forrester surrogate + inversion of observed -6.02: a well-posed "
            "single-mode posterior with a narrow high-probability interval "
            "around 0.76 and Laplace credible interval"
        ),
        bo=_bo_1d(seed=0),
        inversion=InversionSettings(
            observed=-6.02, obs_variance=0.72, n_starts=16, map_seed=0
        ),
    )

    presets["mixed1d-inverse"] = ExperimentConfig(
        name="mixed1d-inverse",
        benchmark="mixed1d",
        description=(
            "Mixed Gaussian-periodic 1D surrogate + inversion of observed "
            "0.63: an ill-posed multimodal posterior with four admissible "
            "parameter configurations and a reduced high-probability union"
        ),
        bo=_bo_1d(seed=0),
        inversion=InversionSettings(
            observed=0.63, obs_variance=0.0016, n_starts=24, map_seed=0
        ),
    )

    presets["levy1d-inverse"] = ExperimentConfig(
        name="levy1d-inverse",
        benchmark="levy1d",
        description=(
            "Levy 1D surrogate + inversion of an observation synthesized at "
            "0.76: sharply concentrated posterior on a rugged landscape, "
            "with a mirror mode from the near-quadratic core"
        ),
        bo=_bo_1d(seed=0, max_evaluations=30, mse_threshold=5e-3),
        inversion=InversionSettings(
            x_true=(0.76,), obs_variance=0.0025, n_starts=16, map_seed=0
        ),
    )

    presets["griewank1d-inverse"] = ExperimentConfig(
        name="griewank1d-inverse",
        benchmark="griewank1d",
        description=(
            "Griewank 1D surrogate + inversion of observed 0.8: a "
            "periodically non-identifiable posterior with many equally "
            "plausible parameter configurations"
        ),
        bo=_bo_1d(seed=0, max_evaluations=35, mse_threshold=2e-3),
        inversion=InversionSettings(
            observed=0.8, obs_variance=0.01, n_starts=24, map_seed=0
        ),
    )

    presets["mixed2d-inverse"] = ExperimentConfig(
        name="mixed2d-inverse",
        benchmark="mixed2d",
        description=(
            "Mixed Gaussian-periodic 2D surrogate + inversion of an "
            "observation synthesized at (1.248, 1.812): reports the MAP "
            "cluster, least-squares residual, and per-parameter summary"
        ),
        bo=_bo_1d(seed=0, max_evaluations=45, mse_threshold=5e-3),
        inversion=InversionSettings(
            x_true=(1.248, 1.812),
            obs_variance=0.1444,
            n_starts=24,
            map_seed=3,
            grid_resolution=128,
        ),
    )

    presets["rosenbrock2d-inverse"] = ExperimentConfig(
        name="rosenbrock2d-inverse",
        benchmark="rosenbrock2d",
        description=(
            "Rosenbrock 2D surrogate + inversion of an observation "
            "synthesized at (-1.5, -0.6): anisotropic valley geometry; the "
            "scalar observation admits a curve of exact solutions"
        ),
        bo=_bo_1d(
            seed=0,
            max_evaluations=15,
            mse_threshold=1e-3,
            mse_mode="normalized",
            kernel_family="rbf",
            fixed_length_scale=8.0,
            fixed_signal_variance=1e10,
        ),
        inversion=InversionSettings(
            x_true=(-1.5, -0.6),
            obs_variance=2500.0,
            n_starts=32,
            map_seed=0,
            grid_resolution=128,
        ),
    )

    presets["compare-surrogates"] = ExperimentConfig(
        name="compare-surrogates",
        benchmark="mixed1d",
        description=(
            "Surrogate-family comparison on the four 1D benchmarks: GP "
            "(Matern 5/2 and RBF, unit length scale) versus Lagrange, "
            "Legendre, and cubic-spline baselines at a shared 14-sample "
            "budget, scored by validation MSE"
        ),
        bo=_bo_1d(seed=0, max_evaluations=14, mse_threshold=1e-12),
        compare_benchmarks=ONE_DIM_BENCHMARKS,
        compare_n_samples=14,
    )

    presets["mixed1d-mcmc"] = ExperimentConfig(
        name="mixed1d-mcmc",
        benchmark="mixed1d",
        description=(
            "Mixed 1D posterior diagnostics: 10 independent random-walk "
            "Metropolis chains on the surrogate posterior, per-chain kernel "
            "density estimates, and a dense-grid reference posterior with "
            "mode detection"
        ),
        bo=_bo_1d(seed=0),
        inversion=InversionSettings(
            observed=0.63, obs_variance=0.0016, n_starts=24, map_seed=0
        ),
        mcmc=McmcConfig(
            n_chains=10, n_steps=40000, burn_in=4000, proposal_scale=0.2, seed=0
        ),
        mcmc_grid_resolution=512,
    )

    presets["mixed1d-ei-demo"] = ExperimentConfig(
        name="mixed1d-ei-demo",
        benchmark="mixed1d",
        description=(
            "Expected-improvement demonstration on Mixed 1D: the "
            "improvement-seeking acquisition concentrates samples near the "
            "incumbent optimum instead of covering the domain"
        ),
        bo=_bo_1d(seed=0, acquisition="ei", kappa=0.0, max_evaluations=20),
    )

    return presets


PRESETS = _build_presets()


def list_presets() -> list[tuple[str, str]]:
    """(name, description) pairs in stable order."""
    return [(p.name, p.description) for p in PRESETS.values()]


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(PRESETS)
        raise ConfigurationError(f"unknown preset {name!r}; choose from: {known}")


# ---------------------------------------------------------------------------
# Flat key = value config format
# ---------------------------------------------------------------------------

_SCALAR_FIELDS = {
    "name": str,
    "benchmark": str,
    "description": str,
    "mcmc_grid_resolution": int,
    "compare_n_samples": int,
}


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    return str(v)


def config_to_text(config: ExperimentConfig) -> str:
    """Serialize a config to the flat dotted key = value format."""
    lines = []
    for key in ("name", "benchmark", "description"):
        lines.append(f"{key} = {getattr(config, key)}")
    for f in dataclasses.fields(BoConfig):
        v = getattr(config.bo, f.name)
        if v is not None:
            lines.append(f"bo.{f.name} = {_format_value(v)}")
    if config.inversion is not None:
        for f in dataclasses.fields(InversionSettings):
            v = getattr(config.inversion, f.name)
            if v is not None:
                lines.append(f"inversion.{f.name} = {_format_value(v)}")
    if config.mcmc is not None:
        for f in dataclasses.fields(McmcConfig):
            lines.append(f"mcmc.{f.name} = {_format_value(getattr(config.mcmc, f.name))}")
        lines.append(f"mcmc_grid_resolution = {config.mcmc_grid_resolution}")
    if config.compare_benchmarks:
        lines.append(
            "compare_benchmarks = " + _format_value(config.compare_benchmarks)
        )
        lines.append(f"compare_n_samples = {config.compare_n_samples}")
    return "\n".join(lines) + "\n"


def _coerce(field_type, raw: str):
    if field_type is bool or field_type == Optional[bool]:
        if raw.lower() not in ("true", "false"):
            raise ConfigurationError(f"expected true/false, got {raw!r}")
        return raw.lower() == "true"
    if field_type is int:
        return int(raw)
    if field_type is float:
        return float(raw)
    return raw


def config_from_text(text: str) -> ExperimentConfig:
    """Parse the flat dotted format back into an ExperimentConfig."""
    scalars: dict[str, str] = {}
    sections: dict[str, dict[str, str]] = {"bo": {}, "inversion": {}, "mcmc": {}}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if "." in key:
            section, _, sub = key.partition(".")
            if section not in sections:
                raise ConfigurationError(f"line {lineno}: unknown section {section!r}")
            sections[section][sub] = value
        else:
            scalars[key] = value

    def build(cls, raw: dict[str, str]):
        kwargs = {}
        hints = {f.name: f.type for f in dataclasses.fields(cls)}
        for k, v in raw.items():
            if k not in hints:
                raise ConfigurationError(f"unknown {cls.__name__} field {k!r}")
            hint = str(hints[k])
            if k == "x_true":
                kwargs[k] = tuple(float(t) for t in v.split(","))
            elif "int" in hint:
                kwargs[k] = int(v)
            elif "float" in hint:
                kwargs[k] = float(v)
            elif "bool" in hint:
                kwargs[k] = _coerce(bool, v)
            else:
                kwargs[k] = v
        return cls(**kwargs)

    if "benchmark" not in scalars:
        raise ConfigurationError("config is missing the 'benchmark' key")
    bo = build(BoConfig, sections["bo"])
    inversion = build(InversionSettings, sections["inversion"]) if sections["inversion"] else None
    mcmc = build(McmcConfig, sections["mcmc"]) if sections["mcmc"] else None
    compare = tuple(
        t.strip() for t in scalars.get("compare_benchmarks", "").split(",") if t.strip()
    )
    return ExperimentConfig(
        name=scalars.get("name", "custom"),
        benchmark=scalars["benchmark"],
        description=scalars.get("description", ""),
        bo=bo,
        inversion=inversion,
        mcmc=mcmc,
        mcmc_grid_resolution=int(scalars.get("mcmc_grid_resolution", 512)),
        compare_benchmarks=compare,
        compare_n_samples=int(scalars.get("compare_n_samples", 14)),
    )


def load_config_file(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_text(fh.read())


# ---------------------------------------------------------------------------
# Execution and artifact writing
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    """Full round-trip decimal representation for reproducible CSVs."""
    return repr(float(v))


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else _fmt(c) for c in row) + "\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class ExperimentResult:
    """In-memory handles to everything a run produced."""

    config: ExperimentConfig
    outdir: str
    manifest: dict
    trace: Optional[BoTrace] = None
    summary: Optional[PosteriorSummary] = None
    problem: Optional[InverseProblem] = None
    chains: list = field(default_factory=list)
    files: list[str] = field(default_factory=list)


def _run_inversion_stage(config, hf, model, outdir, manifest, result):
    settings = config.inversion
    if settings.x_true is not None:
        observed = eval_benchmark(hf, np.asarray(settings.x_true))
        manifest["inversion"]["observed_synthesized_from"] = list(settings.x_true)
    else:
        observed = settings.observed
    manifest["inversion"]["observed"] = observed

    problem = InverseProblem(
        surrogate=model,
        observed=float(observed),
        obs_variance=settings.obs_variance,
        bounds=hf.bounds,
    )
    summary = map_multistart(
        problem,
        n_starts=settings.n_starts,
        max_iter=settings.max_iter,
        seed=settings.map_seed,
    )
    summary.hp_regions = high_probability_region(
        problem, settings.hp_threshold, settings.grid_resolution
    )
    best = summary.map_clusters[0]
    try:
        laplace = laplace_approximation(problem, best.x)
        summary.laplace = laplace
        summary.credible_intervals = laplace.intervals
    except InferenceError as exc:
        summary.metadata["laplace_skipped"] = str(exc)
    summary.metadata.update(
        {
            "observed": float(observed),
            "obs_variance": settings.obs_variance,
            "hp_threshold": settings.hp_threshold,
            "grid_resolution": settings.grid_resolution,
        }
    )

    _write_json(os.path.join(outdir, "posterior.json"), summary.to_json_dict())
    result.files.append("posterior.json")

    axes, points, ls, nls, nls_norm = evaluate_profile_grid(
        problem, settings.grid_resolution
    )
    if problem.dim == 1:
        header = ["x", "ls", "nls", "nls_normalized"]
        rows = zip(points[:, 0], ls, nls, nls_norm)
    else:
        header = ["x", "y", "ls", "nls", "nls_normalized"]
        rows = zip(points[:, 0], points[:, 1], ls, nls, nls_norm)
    _write_csv(os.path.join(outdir, "profiles.csv"), header, rows)
    result.files.append("profiles.csv")

    result.problem = problem
    result.summary = summary
    manifest["inversion"]["n_clusters"] = len(summary.map_clusters)
    manifest["inversion"]["multimodal"] = summary.multimodal
    manifest["inversion"]["map"] = summary.map_clusters[0].x.tolist()
    manifest["inversion"]["map_ls_residual"] = summary.map_clusters[0].ls_residual
    manifest["inversion"]["hp_regions"] = summary.to_json_dict()["hp_regions"]


def _run_mcmc_stage(config, outdir, manifest, result):
    problem = result.problem
    chains = run_mcmc(problem, config.mcmc)
    result.chains = chains
    chains_dir = os.path.join(outdir, "chains")
    os.makedirs(chains_dir, exist_ok=True)
    kde_grid = np.linspace(
        problem.bounds[0][0], problem.bounds[0][1], 2001
    )
    overlay_rows = []
    for ch in chains:
        _write_csv(
            os.path.join(chains_dir, f"chain_{ch.chain_index:02d}.csv"),
            ["step", *(f"x{i}" for i in range(problem.dim)), "accepted"],
            (
                (t, *ch.path[t], str(int(ch.accepted[t])))
                for t in range(ch.path.shape[0])
            ),
        )
        result.files.append(f"chains/chain_{ch.chain_index:02d}.csv")
        if problem.dim == 1:
            dens = kde_estimate(ch.samples[:, 0], kde_grid)
            _write_csv(
                os.path.join(chains_dir, f"kde_{ch.chain_index:02d}.csv"),
                ["x", "density"],
                zip(kde_grid, dens),
            )
            result.files.append(f"chains/kde_{ch.chain_index:02d}.csv")
            overlay_rows.extend(
                (str(ch.chain_index), x, d) for x, d in zip(kde_grid, dens)
            )
    if overlay_rows:
        _write_csv(
            os.path.join(outdir, "kde_overlay.csv"),
            ["chain", "x", "density"],
            overlay_rows,
        )
        result.files.append("kde_overlay.csv")
    if problem.dim == 1:
        ref = grid_posterior(problem, config.mcmc_grid_resolution)
        _write_csv(
            os.path.join(outdir, "grid_posterior.csv"),
            ["x", "density"],
            zip(ref.grid, ref.density),
        )
        result.files.append("grid_posterior.csv")
        manifest["mcmc"]["grid_modes"] = ref.mode_locations.tolist()
    manifest["mcmc"]["acceptance_rates"] = [c.acceptance_rate for c in chains]


def _run_compare_stage(config, outdir, manifest, result):
    rows = []
    val_seed = 2000
    for name in config.compare_benchmarks:
        hf = get_benchmark(name)
        bo = dataclasses.replace(
            config.bo,
            max_evaluations=config.compare_n_samples,
            mse_threshold=1e-12,
        )
        trace = run_bo(hf, bo)
        data = trace.final_model.data
        points = _validation_points(hf, config.bo.n_val, val_seed)
        truth = np.array([eval_benchmark(hf, p) for p in points])

        scores = {}
        for fam in ("matern52", "rbf"):
            model = gp_fit(data, KernelSpec(fam, 1.0, 1.0), config.bo.noise_variance)
            pred, _ = gp_predict_many(model, points)
            scores["gp-" + fam] = float(np.mean((truth - pred) ** 2))
        for fam in DETERMINISTIC_FAMILIES:
            surr = fit_deterministic(fam, data)
            pred = np.array([eval_deterministic(surr, p[0]) for p in points])
            scores[fam] = float(np.mean((truth - pred) ** 2))
        for fam, mse in scores.items():
            rows.append((name, fam, str(data.n), mse))
        manifest["compare"][name] = scores
    _write_csv(
        os.path.join(outdir, "mse.csv"),
        ["benchmark", "family", "n_samples", "mse"],
        rows,
    )
    result.files.append("mse.csv")
    manifest["compare"]["validation_seed"] = val_seed
    manifest["compare"]["gp_length_scale"] = 1.0
    manifest["compare"]["gp_signal_variance"] = 1.0


def run_experiment(
    config: ExperimentConfig,
    outdir: str,
    seed_override: Optional[int] = None,
) -> ExperimentResult:
    """Execute one experiment and write its artifacts under ``outdir``.

    The manifest records every configuration value and derived quantity so
    that any number in any output file can be recomputed from it.
    """
    if seed_override is not None:
        config = dataclasses.replace(
            config, bo=dataclasses.replace(config.bo, seed=seed_override)
        )
    hf = get_benchmark(config.benchmark)
    os.makedirs(outdir, exist_ok=True)

    manifest: dict = {
        "preset": config.name,
        "benchmark": config.benchmark,
        "description": config.description,
        "bo": dataclasses.asdict(config.bo),
        "inversion": dataclasses.asdict(config.inversion) if config.inversion else None,
        "mcmc": dataclasses.asdict(config.mcmc) if config.mcmc else None,
        "compare": {} if config.kind == "compare" else None,
    }
    result = ExperimentResult(config=config, outdir=outdir, manifest=manifest)

    if config.kind == "compare":
        _run_compare_stage(config, outdir, manifest, result)
        _write_json(os.path.join(outdir, "manifest.json"), manifest)
        result.files.append("manifest.json")
        return result

    trace = run_bo(hf, config.bo)
    result.trace = trace
    manifest["bo_result"] = {
        "converged": trace.converged,
        "n_samples": trace.iterations[-1].n_samples,
        "final_mse": trace.iterations[-1].mse,
        "final_mse_normalized": trace.iterations[-1].mse_normalized,
        "validation_seed": trace.validation_seed,
        "validation_variance": trace.validation_variance,
    }
    _write_json(os.path.join(outdir, "trace.json"), trace.to_json_dict())
    _write_csv(
        os.path.join(outdir, "trace.csv"),
        ["iteration", "n_samples", "mse"],
        ((str(i), str(n), m) for i, n, m in trace.csv_rows()),
    )
    result.files.extend(["trace.json", "trace.csv"])

    if config.inversion is not None:
        _run_inversion_stage(config, hf, trace.final_model, outdir, manifest, result)
    if config.mcmc is not None:
        if config.inversion is None:
            raise ConfigurationError("mcmc stage requires an inversion stage")
        manifest["mcmc"] = dict(manifest["mcmc"])
        _run_mcmc_stage(config, outdir, manifest, result)

    _write_json(os.path.join(outdir, "manifest.json"), manifest)
    result.files.append("manifest.json")
    return result
