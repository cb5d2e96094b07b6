"""Built-in target posteriors on unconstrained space.

Each model exposes an unnormalized log density and its analytic gradient,
batched over rows of a T x d matrix. Positive parameters are handled with a
log transform whose Jacobian is folded into the density, so optimizers and
samplers always work on all of R^d.

Conventions: Normal(a, b) means location a and *standard deviation* b, and a
t likelihood t_df(m, s) is a location-scale Student t.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np
from scipy import special

from .rng import rng_stream

__all__ = [
    "TargetModel",
    "EightSchoolsData",
    "RobustRegressionData",
    "load_eight_schools",
    "eight_schools_centered",
    "eight_schools_noncentered",
    "robust_regression",
    "generate_robust_regression_data",
    "conjugate_gaussian",
]


@dataclass(frozen=True)
class TargetModel:
    """Unnormalized log posterior with analytic gradient.

    ``log_density_batch`` maps a T x d matrix to T log densities;
    ``grad_log_density_batch`` returns the T x d matrix of gradients.
    ``transforms`` tags each unconstrained coordinate as "identity" or "log"
    (log means the coordinate is the log of a positive model parameter).
    ``to_report_coords`` maps draws to the parameterization used for
    reporting summaries; it defaults to the identity.
    """

    name: str
    dim: int
    log_density_batch: Callable[[np.ndarray], np.ndarray]
    grad_log_density_batch: Callable[[np.ndarray], np.ndarray]
    transforms: tuple[str, ...]
    param_names: tuple[str, ...]
    to_report_coords: Callable[[np.ndarray], np.ndarray] | None = None
    extras: dict = field(default_factory=dict)

    def log_density(self, theta: np.ndarray) -> float:
        return float(self.log_density_batch(np.atleast_2d(theta))[0])

    def grad_log_density(self, theta: np.ndarray) -> np.ndarray:
        return self.grad_log_density_batch(np.atleast_2d(theta))[0]

    def report_coords(self, draws: np.ndarray) -> np.ndarray:
        if self.to_report_coords is None:
            return draws
        return self.to_report_coords(draws)


@dataclass(frozen=True)
class EightSchoolsData:
    y: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        if self.y.shape != self.sigma.shape or self.y.ndim != 1:
            raise ValueError("y and sigma must be equal-length vectors")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma entries must be positive")


def load_eight_schools() -> EightSchoolsData:
    """Load the canonical eight-schools fixture shipped with the package."""
    raw = json.loads(resources.files("vibound").joinpath("data/eight_schools.json").read_text())
    return EightSchoolsData(y=raw["y"], sigma=raw["sigma"])


def _log_normal_pdf(x, loc, sd):
    z = (x - loc) / sd
    return -0.5 * np.log(2.0 * np.pi) - np.log(sd) - 0.5 * z * z


def _log_half_cauchy_pdf(x, scale):
    # support x >= 0; callers only evaluate at exp(log tau) > 0
    return np.log(2.0 / np.pi) - np.log(scale) - np.log1p((x / scale) ** 2)


def eight_schools_centered(data: EightSchoolsData) -> TargetModel:
    """Hierarchical model with school effects parameterized directly.

    Coordinates are (mu, log tau, theta_1..theta_8); the log-tau Jacobian
    term is included. Priors: mu ~ N(0, 5), tau ~ half-Cauchy(0, 5).
    """
    y, sigma = data.y, data.sigma
    n = y.shape[0]
    sig2 = sigma**2

    def logp(theta):
        theta = np.atleast_2d(theta)
        mu, log_tau, eff = theta[:, 0], theta[:, 1], theta[:, 2:]
        tau = np.exp(log_tau)
        lik = np.sum(_log_normal_pdf(y, eff, sigma), axis=1)
        group = np.sum(_log_normal_pdf(eff, mu[:, None], tau[:, None]), axis=1)
        prior = _log_normal_pdf(mu, 0.0, 5.0) + _log_half_cauchy_pdf(tau, 5.0)
        return lik + group + prior + log_tau

    def grad(theta):
        theta = np.atleast_2d(theta)
        mu, log_tau, eff = theta[:, 0], theta[:, 1], theta[:, 2:]
        tau = np.exp(log_tau)[:, None]
        dev = eff - mu[:, None]
        g = np.empty_like(theta)
        g[:, 0] = np.sum(dev / tau**2, axis=1) - mu / 25.0
        g[:, 1] = (
            -n + np.sum(dev**2 / tau**2, axis=1) - 2.0 * tau[:, 0] ** 2 / (25.0 + tau[:, 0] ** 2) + 1.0
        )
        g[:, 2:] = (y - eff) / sig2 - dev / tau**2
        return g

    names = ("mu", "log_tau") + tuple(f"theta_{i+1}" for i in range(n))
    return TargetModel(
        name="eight_schools_centered",
        dim=2 + n,
        log_density_batch=logp,
        grad_log_density_batch=grad,
        transforms=("identity", "log") + ("identity",) * n,
        param_names=names,
        extras={"data": data},
    )


def eight_schools_noncentered(data: EightSchoolsData) -> TargetModel:
    """Reparameterized hierarchy with standardized school effects.

    Coordinates are (mu, log tau, z_1..z_8) with theta_n = mu + tau * z_n.
    The observation scale sigma_n is kept from the centered model. Reporting
    coordinates are (mu, log tau, theta_1..theta_8), matching the centered
    parameterization.
    """
    y, sigma = data.y, data.sigma
    n = y.shape[0]
    sig2 = sigma**2

    def logp(theta):
        theta = np.atleast_2d(theta)
        mu, log_tau, z = theta[:, 0], theta[:, 1], theta[:, 2:]
        tau = np.exp(log_tau)[:, None]
        mean = mu[:, None] + tau * z
        lik = np.sum(_log_normal_pdf(y, mean, sigma), axis=1)
        group = np.sum(_log_normal_pdf(z, 0.0, 1.0), axis=1)
        prior = _log_normal_pdf(mu, 0.0, 5.0) + _log_half_cauchy_pdf(tau[:, 0], 5.0)
        return lik + group + prior + log_tau

    def grad(theta):
        theta = np.atleast_2d(theta)
        mu, log_tau, z = theta[:, 0], theta[:, 1], theta[:, 2:]
        tau = np.exp(log_tau)[:, None]
        resid = (y - mu[:, None] - tau * z) / sig2
        g = np.empty_like(theta)
        g[:, 0] = np.sum(resid, axis=1) - mu / 25.0
        g[:, 1] = np.sum(resid * tau * z, axis=1) - 2.0 * tau[:, 0] ** 2 / (25.0 + tau[:, 0] ** 2) + 1.0
        g[:, 2:] = resid * tau - z
        return g

    def to_centered(draws):
        draws = np.atleast_2d(draws)
        out = draws.copy()
        tau = np.exp(draws[:, 1])
        out[:, 2:] = draws[:, 0][:, None] + tau[:, None] * draws[:, 2:]
        return out

    names = ("mu", "log_tau") + tuple(f"z_{i+1}" for i in range(n))
    return TargetModel(
        name="eight_schools_noncentered",
        dim=2 + n,
        log_density_batch=logp,
        grad_log_density_batch=grad,
        transforms=("identity", "log") + ("identity",) * n,
        param_names=names,
        to_report_coords=to_centered,
        extras={"data": data},
    )


@dataclass(frozen=True)
class RobustRegressionData:
    X: np.ndarray
    y: np.ndarray
    true_beta: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "true_beta", np.asarray(self.true_beta, dtype=float))
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError("X must be N x d with matching y")

    def to_json_dict(self) -> dict:
        return {
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "true_beta": self.true_beta.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "RobustRegressionData":
        return cls(X=raw["X"], y=raw["y"], true_beta=raw["true_beta"], seed=raw["seed"])


def generate_robust_regression_data(
    n_obs: int = 25,
    dim: int = 2,
    beta=(-2.0, 1.0),
    corr: float = 0.75,
    seed: int = 0,
    lik_df: float = 40.0,
) -> RobustRegressionData:
    """Simulate covariates with unit variances and pairwise covariance ``corr``.

    Responses follow the t likelihood at ``beta`` with unit scale.
    """
    if abs(corr) >= 1:
        raise ValueError("corr must satisfy |corr| < 1")
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (dim,):
        raise ValueError("beta length must equal dim")
    rng = rng_stream(seed)
    cov = np.full((dim, dim), corr) + (1.0 - corr) * np.eye(dim)
    chol = np.linalg.cholesky(cov)
    X = rng.standard_normal((n_obs, dim)) @ chol.T
    y = X @ beta + rng.standard_t(lik_df, n_obs)
    return RobustRegressionData(X=X, y=y, true_beta=beta, seed=seed)


def robust_regression(
    data: RobustRegressionData, prior_sd: float = 10.0, lik_df: float = 40.0
) -> TargetModel:
    """Linear regression with independent N(0, prior_sd) coefficient priors
    and a t_df(x.beta, 1) likelihood. All coordinates identity-transformed."""
    X, y = data.X, data.y
    dim = X.shape[1]
    h = float(lik_df)
    t_const = (
        special.gammaln((h + 1.0) / 2.0) - special.gammaln(h / 2.0) - 0.5 * np.log(h * np.pi)
    )

    def logp(theta):
        theta = np.atleast_2d(theta)
        resid = y - theta @ X.T  # (T, N)
        lik = np.sum(t_const - 0.5 * (h + 1.0) * np.log1p(resid**2 / h), axis=1)
        prior = -0.5 * np.sum(theta**2, axis=1) / prior_sd**2 - dim * (
            0.5 * np.log(2.0 * np.pi) + np.log(prior_sd)
        )
        return lik + prior

    def grad(theta):
        theta = np.atleast_2d(theta)
        resid = y - theta @ X.T
        w = (h + 1.0) * resid / (h + resid**2)  # d/dm of the t log-density
        return w @ X - theta / prior_sd**2

    return TargetModel(
        name="robust_regression",
        dim=dim,
        log_density_batch=logp,
        grad_log_density_batch=grad,
        transforms=("identity",) * dim,
        param_names=tuple(f"beta_{i+1}" for i in range(dim)),
        extras={"data": data, "prior_sd": prior_sd, "lik_df": h},
    )


def conjugate_gaussian(
    dim: int, prior_sd: float = 1.0, noise_sd: float = 1.0, data=None
) -> TargetModel:
    """Gaussian location model with known evidence and posterior.

    ``data`` is an n x dim matrix of observations (default: a single zero
    observation). The exact log evidence, posterior mean and covariance are
    attached in ``extras`` for estimator calibration.
    """
    if data is None:
        data = np.zeros((1, dim))
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[1] != dim:
        raise ValueError("data must be n x dim")
    n = data.shape[0]

    prec = 1.0 / prior_sd**2 + n / noise_sd**2
    post_var = 1.0 / prec
    b = data.sum(axis=0) / noise_sd**2
    post_mean = post_var * b

    log_evidence = (
        0.5 * dim * np.log(2.0 * np.pi)
        - 0.5 * dim * np.log(prec)
        + 0.5 * post_var * float(b @ b)
        - 0.5 * float(np.sum(data**2)) / noise_sd**2
        - 0.5 * n * dim * np.log(2.0 * np.pi * noise_sd**2)
        - 0.5 * dim * np.log(2.0 * np.pi * prior_sd**2)
    )

    def logp(theta):
        theta = np.atleast_2d(theta)
        lik = -0.5 * np.sum((data[None, :, :] - theta[:, None, :]) ** 2, axis=(1, 2)) / noise_sd**2
        lik -= 0.5 * n * dim * np.log(2.0 * np.pi * noise_sd**2)
        prior = -0.5 * np.sum(theta**2, axis=1) / prior_sd**2 - 0.5 * dim * np.log(
            2.0 * np.pi * prior_sd**2
        )
        return lik + prior

    def grad(theta):
        theta = np.atleast_2d(theta)
        return (data.sum(axis=0) - n * theta) / noise_sd**2 - theta / prior_sd**2

    return TargetModel(
        name="conjugate_gaussian",
        dim=dim,
        log_density_batch=logp,
        grad_log_density_batch=grad,
        transforms=("identity",) * dim,
        param_names=tuple(f"theta_{i+1}" for i in range(dim)),
        extras={
            "log_evidence": float(log_evidence),
            "posterior_mean": post_mean,
            "posterior_cov": post_var * np.eye(dim),
        },
    )
