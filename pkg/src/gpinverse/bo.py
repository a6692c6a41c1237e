"""Adaptive surrogate construction: acquisition functions and the BO loop.

The loop alternates fit -> acquire -> evaluate -> extend until the surrogate
reaches a target validation mean-squared error or the evaluation budget is
exhausted.  With a large UCB exploration weight the acquisition is dominated
by predictive uncertainty, which is the regime used to build globally
accurate surrogates ahead of any inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize as sopt
from scipy import special as ssp

from .benchmarks import HighFidelityModel, eval_benchmark
from .data import Dataset
from .errors import ConfigurationError, GpInverseError, NumericalError
from .gp import GpModel, KernelSpec, gp_fit, gp_optimize_hyperparameters, gp_predict_many

__all__ = [
    "AcquisitionSpec",
    "BoConfig",
    "BoIteration",
    "BoTrace",
    "expected_improvement",
    "upper_confidence_bound",
    "acquisition_value",
    "acquire_batch",
    "validation_mse",
    "run_bo",
]

GRID_POINTS_1D = 1024
GRID_POINTS_PER_DIM_2D = 64
ASCENT_STARTS = 64
EXCLUSION_FRACTION = 0.01  # pending-point radius as a fraction of domain width


def _norm_pdf(z):
    return np.exp(-0.5 * np.square(z)) / math.sqrt(2.0 * math.pi)


def _norm_cdf(z):
    return 0.5 * (1.0 + ssp.erf(np.asarray(z) / math.sqrt(2.0)))


def expected_improvement(mu, sigma, incumbent):
    """Closed-form expected improvement above the incumbent (maximization).

    Vectorized over mu/sigma.  Degenerate sigma = 0 reduces to the hard
    improvement max(mu - incumbent, 0).
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    improve = mu - incumbent
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, improve / np.where(sigma > 0, sigma, 1.0), 0.0)
    ei = np.where(
        sigma > 0,
        improve * _norm_cdf(z) + sigma * _norm_pdf(z),
        np.maximum(improve, 0.0),
    )
    return np.maximum(ei, 0.0)


def upper_confidence_bound(mu, sigma, kappa):
    """mu + kappa * sigma; kappa = 0 reduces to the predictive mean."""
    return np.asarray(mu, dtype=float) + kappa * np.asarray(sigma, dtype=float)


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which acquisition to use and its parameters.

    ``incumbent`` only matters for EI and defaults to the best (largest)
    observed training output of the model being queried.
    """

    family: str = "ucb"
    kappa: float = 0.0
    incumbent: Optional[float] = None

    def __post_init__(self):
        if self.family not in ("ei", "ucb"):
            raise ConfigurationError(
                f"unknown acquisition family {self.family!r}; use 'ei' or 'ucb'"
            )
        if self.kappa < 0:
            raise ConfigurationError("kappa must be nonnegative")


def _incumbent_for(model: GpModel, spec: AcquisitionSpec) -> float:
    if spec.incumbent is not None:
        return float(spec.incumbent)
    return float(np.max(model.data.y))


def _acquisition_many(model, spec, x, sigma_override=None):
    mu, var = gp_predict_many(model, x)
    sigma = np.sqrt(var) if sigma_override is None else sigma_override
    if spec.family == "ucb":
        return upper_confidence_bound(mu, sigma, spec.kappa)
    return expected_improvement(mu, sigma, _incumbent_for(model, spec))


def acquisition_value(model: GpModel, spec: AcquisitionSpec, x) -> float:
    """Acquisition score at a single point."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return float(_acquisition_many(model, spec, x)[0])


def _probe_grid(bounds) -> np.ndarray:
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    d = len(bounds)
    if d == 1:
        return np.linspace(lo[0], hi[0], GRID_POINTS_1D).reshape(-1, 1)
    axes = [np.linspace(lo[j], hi[j], GRID_POINTS_PER_DIM_2D) for j in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _penalized_scores(model, spec, candidates, picked, radii):
    """Acquisition with predictive sigma suppressed near pending picks."""
    scores = _acquisition_many(model, spec, candidates)
    if picked:
        mu, _ = gp_predict_many(model, candidates)
        flat = (
            upper_confidence_bound(mu, 0.0, spec.kappa)
            if spec.family == "ucb"
            else expected_improvement(mu, 0.0, _incumbent_for(model, spec))
        )
        p = np.asarray(picked)
        dist = np.sqrt(
            np.sum(((candidates[:, None, :] - p[None, :, :]) / radii) ** 2, axis=2)
        )
        suppressed = np.any(dist <= 1.0, axis=1)
        scores = np.where(suppressed, flat, scores)
    return scores


def acquire_batch(
    model: GpModel,
    spec: AcquisitionSpec,
    bounds,
    n_acq: int,
    seed: int,
) -> np.ndarray:
    """Select n_acq in-bounds points by greedy acquisition maximization.

    Each pick maximizes the acquisition over a fixed probe grid plus local
    ascents from seeded uniform starts; already-picked locations have their
    predictive uncertainty zeroed inside a small exclusion radius so the next
    pick lands elsewhere.  Exact ties go to the lexicographically smallest
    point.  Fully deterministic for a fixed seed.
    """
    if n_acq < 1:
        raise ConfigurationError("n_acq must be >= 1")
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    widths = hi - lo
    if np.any(widths <= 0):
        raise ConfigurationError("degenerate bounds: every width must be positive")
    radii = EXCLUSION_FRACTION * widths
    rng = np.random.default_rng(seed)
    grid = _probe_grid(bounds)
    opt_bounds = [(float(a), float(b)) for a, b in zip(lo, hi)]

    picked: list[np.ndarray] = []
    for _ in range(n_acq):
        starts = lo + rng.random((ASCENT_STARTS, len(bounds))) * widths

        def neg_acq(x):
            return -float(_acquisition_many(model, spec, np.atleast_2d(x))[0])

        refined = []
        for s in starts:
            res = sopt.minimize(
                neg_acq,
                s,
                method="L-BFGS-B",
                bounds=opt_bounds,
                options={"maxiter": 30},
            )
            if np.all(np.isfinite(res.x)):
                refined.append(np.clip(res.x, lo, hi))
        candidates = np.vstack([grid, starts] + ([np.vstack(refined)] if refined else []))
        scores = _penalized_scores(model, spec, candidates, picked, radii)
        best = np.max(scores)
        tied = np.nonzero(scores >= best)[0]
        if tied.size > 1:
            order = np.lexsort(candidates[tied].T[::-1])
            choice = candidates[tied[order[0]]]
        else:
            choice = candidates[tied[0]]
        picked.append(choice.copy())
    return np.array(picked)


def validation_mse(
    model: GpModel, hf: HighFidelityModel, n_val: int, seed: int
) -> float:
    """Mean squared surrogate error on seeded uniform validation points."""
    if n_val < 1:
        raise ConfigurationError("n_val must be >= 1")
    points = _validation_points(hf, n_val, seed)
    truth = np.array([eval_benchmark(hf, p) for p in points])
    pred, _ = gp_predict_many(model, points)
    return float(np.mean((truth - pred) ** 2))


def _validation_points(hf: HighFidelityModel, n_val: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in hf.bounds])
    hi = np.array([b[1] for b in hf.bounds])
    return lo + rng.random((n_val, hf.dim)) * (hi - lo)


@dataclass(frozen=True)
class BoConfig:
    """Configuration of one surrogate-construction run.

    ``mse_threshold`` is interpreted per ``mse_mode``: against the raw MSE
    ("absolute") or against MSE divided by the validation output variance
    ("normalized", for benchmarks whose output scale makes a fixed absolute
    target meaningless).  Setting ``fixed_length_scale``/``fixed_signal_variance``
    skips marginal-likelihood fitting and uses those values directly.
    """

    n_init: int = 5
    n_acq: int = 1
    max_evaluations: int = 25
    mse_threshold: float = 1e-3
    mse_mode: str = "absolute"
    n_val: int = 1000
    kernel_family: str = "matern52"
    noise_variance: float = 1e-6
    acquisition: str = "ucb"
    kappa: float = 200.0
    restarts: int = 3
    seed: int = 0
    fixed_length_scale: Optional[float] = None
    fixed_signal_variance: Optional[float] = None

    def __post_init__(self):
        if self.n_init < 2:
            raise ConfigurationError("n_init must be >= 2")
        if self.n_acq < 1:
            raise ConfigurationError("n_acq must be >= 1")
        if self.max_evaluations < self.n_init:
            raise ConfigurationError("max_evaluations must be >= n_init")
        if not self.mse_threshold > 0:
            raise ConfigurationError("mse_threshold must be positive")
        if self.mse_mode not in ("absolute", "normalized"):
            raise ConfigurationError("mse_mode must be 'absolute' or 'normalized'")
        if self.n_val < 100:
            raise ConfigurationError(
                "n_val must be >= 100 for a meaningful validation estimate"
            )
        if self.kappa < 0:
            raise ConfigurationError("kappa must be nonnegative")
        if (self.fixed_length_scale is None) != (self.fixed_signal_variance is None):
            raise ConfigurationError(
                "fixed_length_scale and fixed_signal_variance must be set together"
            )


@dataclass(frozen=True)
class BoIteration:
    """One fit/validate record of the loop."""

    index: int
    n_samples: int
    mse: float
    mse_normalized: float
    length_scale: float
    signal_variance: float
    jitter: float
    acquired: np.ndarray  # points appended after this record, possibly empty


@dataclass
class BoTrace:
    """Full history of a BO run plus the final fitted surrogate."""

    iterations: list[BoIteration] = field(default_factory=list)
    final_model: Optional[GpModel] = None
    converged: bool = False
    validation_seed: int = 0
    validation_variance: float = 0.0

    def csv_rows(self):
        """(iteration, n_samples, mse) rows for convergence-curve plots."""
        return [(r.index, r.n_samples, r.mse) for r in self.iterations]

    def to_json_dict(self):
        return {
            "converged": self.converged,
            "validation_seed": self.validation_seed,
            "validation_variance": self.validation_variance,
            "iterations": [
                {
                    "index": r.index,
                    "n_samples": r.n_samples,
                    "mse": r.mse,
                    "mse_normalized": r.mse_normalized,
                    "length_scale": r.length_scale,
                    "signal_variance": r.signal_variance,
                    "jitter": r.jitter,
                    "acquired": np.asarray(r.acquired).tolist(),
                }
                for r in self.iterations
            ],
        }


def _fit_for_config(data: Dataset, config: BoConfig, refit_seed: int) -> GpModel:
    if config.fixed_length_scale is not None:
        spec = KernelSpec(
            family=config.kernel_family,
            length_scale=config.fixed_length_scale,
            signal_variance=config.fixed_signal_variance,
        )
        return gp_fit(data, spec, config.noise_variance)
    return gp_optimize_hyperparameters(
        data,
        family=config.kernel_family,
        noise_variance=config.noise_variance,
        restarts=config.restarts,
        seed=refit_seed,
    )


def run_bo(hf: HighFidelityModel, config: BoConfig) -> BoTrace:
    """Run the adaptive surrogate-construction loop on one benchmark."""
    from .benchmarks import sample_initial_design

    data = sample_initial_design(hf, config.n_init, config.seed)
    val_seed = int(np.random.default_rng([config.seed % (2**32), 1]).integers(2**31))
    val_points = _validation_points(hf, config.n_val, val_seed)
    val_truth = np.array([eval_benchmark(hf, p) for p in val_points])
    val_var = float(np.var(val_truth))
    if val_var <= 0:
        raise ConfigurationError(
            f"benchmark {hf.name} is constant on its validation set"
        )

    trace = BoTrace(validation_seed=val_seed, validation_variance=val_var)
    iteration = 0
    while True:
        try:
            model = _fit_for_config(data, config, refit_seed=config.seed + 65537 * iteration)
        except GpInverseError as exc:
            raise NumericalError(
                f"surrogate fit failed at iteration {iteration} "
                f"with {data.n} samples: {exc}"
            ) from exc
        pred, _ = gp_predict_many(model, val_points)
        mse = float(np.mean((val_truth - pred) ** 2))
        mse_norm = mse / val_var
        criterion = mse_norm if config.mse_mode == "normalized" else mse

        converged = criterion <= config.mse_threshold
        budget_left = config.max_evaluations - data.n
        acquired = np.empty((0, hf.dim))
        if not converged and budget_left > 0:
            spec = AcquisitionSpec(family=config.acquisition, kappa=config.kappa)
            acquired = acquire_batch(
                model,
                spec,
                hf.bounds,
                n_acq=min(config.n_acq, budget_left),
                seed=config.seed + 2 * iteration + 1,
            )
        trace.iterations.append(
            BoIteration(
                index=iteration,
                n_samples=data.n,
                mse=mse,
                mse_normalized=mse_norm,
                length_scale=model.kernel.length_scale,
                signal_variance=model.kernel.signal_variance,
                jitter=model.jitter,
                acquired=acquired,
            )
        )
        trace.final_model = model
        if converged:
            trace.converged = True
            return trace
        if acquired.shape[0] == 0:
            trace.converged = False
            return trace
        new_y = np.array([eval_benchmark(hf, p) for p in acquired])
        data = data.extended(acquired, new_y)
        iteration += 1
