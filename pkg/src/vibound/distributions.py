"""Probability distributions used throughout the package.

Two groups live here:

* one-dimensional analytic families (`Normal`, `StudentT`, `Weibull`,
  `HalfCauchy`, `GeneralizedPareto`) used as fixtures, priors and oracle
  inputs;
* the variational families (`MeanFieldGaussian`, `MeanFieldT`,
  `FullRankGaussian`, `FullRankT`) supporting log-densities, reparameterized
  sampling and analytic moments.

All densities are computed in log space; no unlogged density is ever
materialized. Distribution objects are immutable and safe to share across
threads, and sampling is a pure function of (parameters, seed, stream).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.linalg import solve_triangular

from .rng import rng_stream

__all__ = [
    "Normal",
    "StudentT",
    "Weibull",
    "HalfCauchy",
    "GeneralizedPareto",
    "SampleBatch",
    "VariationalDistribution",
    "MeanFieldGaussian",
    "MeanFieldT",
    "FullRankGaussian",
    "FullRankT",
    "make_scalar",
    "make_variational",
    "log_density",
    "sample",
    "moments",
    "quantile",
]

_LOG_2PI = math.log(2.0 * math.pi)


def _check_finite(name, *values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{name}: parameters must be finite")


def _check_positive(name, value, what="scale"):
    if not np.all(np.asarray(value) > 0):
        raise ValueError(f"{name}: {what} must be strictly positive")


# ---------------------------------------------------------------------------
# One-dimensional families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Normal:
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        _check_finite("Normal", self.loc, self.scale)
        _check_positive("Normal", self.scale)

    def log_density(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        return -0.5 * _LOG_2PI - math.log(self.scale) - 0.5 * z * z

    def quantile(self, u):
        u = _check_u(u)
        return self.loc + self.scale * special.ndtri(u)

    def sample(self, size: int, seed: int, stream: int = 0):
        return self.loc + self.scale * rng_stream(seed, stream).standard_normal(size)

    def mean(self):
        return self.loc

    def var(self):
        return self.scale**2

    def mad(self):
        return self.scale * math.sqrt(2.0 / math.pi)

    # sup{p : E|X|^p finite}; infinity for light tails
    max_finite_moment = float("inf")
    support = (-math.inf, math.inf)


@dataclass(frozen=True)
class StudentT:
    """Location-scale Student t with ``df`` degrees of freedom."""

    loc: float = 0.0
    scale: float = 1.0
    df: float = 1.0

    def __post_init__(self):
        _check_finite("StudentT", self.loc, self.scale, self.df)
        _check_positive("StudentT", self.scale)
        _check_positive("StudentT", self.df, "df")

    def log_density(self, x):
        h = self.df
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        const = (
            special.gammaln((h + 1.0) / 2.0)
            - special.gammaln(h / 2.0)
            - 0.5 * math.log(h * math.pi)
            - math.log(self.scale)
        )
        return const - 0.5 * (h + 1.0) * np.log1p(z * z / h)

    def quantile(self, u):
        u = _check_u(u)
        return self.loc + self.scale * special.stdtrit(self.df, u)

    def sample(self, size: int, seed: int, stream: int = 0):
        return self.loc + self.scale * rng_stream(seed, stream).standard_t(self.df, size)

    def mean(self):
        if self.df <= 1:
            raise ValueError("mean undefined for df <= 1")
        return self.loc

    def var(self):
        if self.df <= 2:
            raise ValueError("variance undefined for df <= 2")
        return self.scale**2 * self.df / (self.df - 2.0)

    def mad(self):
        h = self.df
        if h <= 1:
            raise ValueError("MAD undefined for df <= 1")
        return (
            self.scale
            * 2.0
            * math.sqrt(h)
            / (math.sqrt(math.pi) * (h - 1.0))
            * math.exp(special.gammaln((h + 1.0) / 2.0) - special.gammaln(h / 2.0))
        )

    @property
    def max_finite_moment(self):
        return self.df

    support = (-math.inf, math.inf)


@dataclass(frozen=True)
class Weibull:
    """Weibull with shape ``k`` and scale; k=1 is Exp(1/scale)."""

    shape: float
    scale: float = 1.0

    def __post_init__(self):
        _check_finite("Weibull", self.shape, self.scale)
        _check_positive("Weibull", self.scale)
        _check_positive("Weibull", self.shape, "shape")

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        k, lam = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            z = x / lam
            out = math.log(k / lam) + (k - 1.0) * np.log(z) - z**k
        out = np.where(x < 0, -np.inf, out)
        if np.any(x == 0):
            # density at the origin: 0 for k>1, k/lam for k=1, +inf for k<1
            at0 = math.inf if k < 1 else (math.log(k / lam) if k == 1 else -math.inf)
            out = np.where(x == 0, at0, out)
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = _check_u(u)
        return self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)

    def sample(self, size: int, seed: int, stream: int = 0):
        return self.scale * rng_stream(seed, stream).weibull(self.shape, size)

    def raw_moment(self, p: float) -> float:
        """E[X^p] = scale^p * Gamma(1 + p/k); finite for every p."""
        return self.scale**p * math.gamma(1.0 + p / self.shape)

    def mean(self):
        return self.raw_moment(1.0)

    def var(self):
        return self.raw_moment(2.0) - self.mean() ** 2

    max_finite_moment = float("inf")

    @property
    def support(self):
        return (0.0, math.inf)


@dataclass(frozen=True)
class HalfCauchy:
    """Half-Cauchy on [loc, inf); appears only as a prior, never as q."""

    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        _check_finite("HalfCauchy", self.loc, self.scale)
        _check_positive("HalfCauchy", self.scale)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.loc) / self.scale
        out = math.log(2.0 / math.pi) - math.log(self.scale) - np.log1p(z * z)
        out = np.where(x < self.loc, -np.inf, out)
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = _check_u(u)
        return self.loc + self.scale * np.tan(0.5 * math.pi * u)

    def sample(self, size: int, seed: int, stream: int = 0):
        return self.loc + self.scale * np.abs(rng_stream(seed, stream).standard_cauchy(size))

    max_finite_moment = 1.0

    @property
    def support(self):
        return (self.loc, math.inf)


@dataclass(frozen=True)
class GeneralizedPareto:
    """GPD with real shape; shape 0 is the exponential, shape > 0 heavy tails."""

    loc: float = 0.0
    scale: float = 1.0
    shape: float = 0.0

    def __post_init__(self):
        _check_finite("GeneralizedPareto", self.loc, self.scale, self.shape)
        _check_positive("GeneralizedPareto", self.scale)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        k, sig = self.shape, self.scale
        z = (x - self.loc) / sig
        if k == 0.0:
            out = -math.log(sig) - z
            out = np.where(z < 0, -np.inf, out)
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                t = 1.0 + k * z
                out = -math.log(sig) - (1.0 / k + 1.0) * np.log(t)
            out = np.where((z < 0) | (t <= 0), -np.inf, out)
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = _check_u(u)
        k, sig = self.shape, self.scale
        if k == 0.0:
            return self.loc - sig * np.log1p(-u)
        return self.loc + sig * np.expm1(-k * np.log1p(-u)) / k

    def sample(self, size: int, seed: int, stream: int = 0):
        return self.quantile(rng_stream(seed, stream).random(size))

    @property
    def max_finite_moment(self):
        return math.inf if self.shape <= 0 else 1.0 / self.shape

    @property
    def support(self):
        hi = math.inf if self.shape >= 0 else self.loc - self.scale / self.shape
        return (self.loc, hi)


Scalar1D = (Normal, StudentT, Weibull, HalfCauchy, GeneralizedPareto)

_SCALAR_FACTORY = {
    "normal": (Normal, ("loc", "scale")),
    "student-t": (StudentT, ("loc", "scale", "df")),
    "weibull": (Weibull, ("shape", "scale")),
    "half-cauchy": (HalfCauchy, ("loc", "scale")),
    "gpd": (GeneralizedPareto, ("loc", "scale", "shape")),
}


def make_scalar(family: str, params):
    """Build a 1-D distribution from a family name and positional parameters."""
    key = family.lower().replace("_", "-")
    if key not in _SCALAR_FACTORY:
        raise ValueError(f"unknown 1-D family {family!r}; choose from {sorted(_SCALAR_FACTORY)}")
    cls, names = _SCALAR_FACTORY[key]
    params = [float(p) for p in params]
    if len(params) != len(names):
        raise ValueError(f"{key} takes {len(names)} parameters {names}, got {len(params)}")
    return cls(*params)


def _check_u(u):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    return u


# ---------------------------------------------------------------------------
# Variational families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleBatch:
    """Draws plus the pre-transform standardized noise that generated them.

    ``draws = loc + scale_transform(base_noise)`` holds bit-exactly, which is
    what makes reparameterization gradients and common-random-number finite
    differences possible.
    """

    draws: np.ndarray
    base_noise: np.ndarray
    seed: int

    def __post_init__(self):
        if self.draws.ndim != 2 or self.draws.shape != self.base_noise.shape:
            raise ValueError("draws and base_noise must be matching T x d matrices")
        if self.draws.shape[0] < 1:
            raise ValueError("sample batch needs at least one row")


class VariationalDistribution:
    """Shared behavior for the four variational families.

    Subclasses define the standardized base density, how noise is drawn, and
    how ``loc``/scale parameters transform it. Everything here is elliptical
    location-scale, so log q(theta) = base(eps) - sum(log scale diagonal) with
    eps the standardized residual.
    """

    kind: str = ""
    is_mean_field: bool = True
    df: float | None = None

    # subclasses fill these in
    loc: np.ndarray

    @property
    def dim(self) -> int:
        return self.loc.shape[0]

    # -- sampling -----------------------------------------------------------

    def _base_noise(self, size: int, rng) -> np.ndarray:
        raise NotImplementedError

    def transform_noise(self, eps: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, size: int, seed: int, stream: int = 0) -> SampleBatch:
        if size < 1:
            raise ValueError("sample size must be >= 1")
        rng = rng_stream(seed, stream)
        eps = self._base_noise(size, rng)
        return SampleBatch(draws=self.transform_noise(eps), base_noise=eps, seed=seed)

    # -- densities and moments ----------------------------------------------

    def log_density(self, x):
        raise NotImplementedError

    def moments(self):
        """Return (mean, cov) analytically."""
        raise NotImplementedError

    def scale_diag(self) -> np.ndarray:
        raise NotImplementedError

    def mad(self) -> np.ndarray:
        raise NotImplementedError

    def std(self) -> np.ndarray:
        return np.sqrt(np.diag(self.moments()[1]))

    def cov_spectral_norm(self) -> float:
        cov = self.moments()[1]
        return float(np.linalg.eigvalsh(cov)[-1])

    # -- unconstrained parameter vector for the optimizer --------------------

    def unconstrained_params(self) -> np.ndarray:
        raise NotImplementedError

    def with_unconstrained_params(self, vec: np.ndarray) -> "VariationalDistribution":
        raise NotImplementedError

    @property
    def n_params(self) -> int:
        return self.unconstrained_params().shape[0]

    def describe(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "loc": np.asarray(self.loc).tolist()}
        if self.df is not None:
            out["df"] = self.df
        if self.is_mean_field:
            out["scale"] = self.scale.tolist()
        else:
            out["scale_tril"] = self.tril.tolist()
        return out


def _as_vector(v, name):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    _check_finite(name, v)
    return v


def _as_tril(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("scale factor must be a square matrix")
    _check_finite("scale factor", m)
    if not np.allclose(m, np.tril(m)):
        raise ValueError("scale factor must be lower triangular")
    if np.any(np.diag(m) <= 0):
        raise ValueError("scale factor diagonal must be strictly positive")
    return m


def _t_log_norm_const(df: float, dim: int) -> float:
    return (
        special.gammaln((df + dim) / 2.0)
        - special.gammaln(df / 2.0)
        - 0.5 * dim * math.log(df * math.pi)
    )


def _t_mad_factor(df: float) -> float:
    # E|T| for a standard t_df, df > 1
    return (
        2.0
        * math.sqrt(df)
        / (math.sqrt(math.pi) * (df - 1.0))
        * math.exp(special.gammaln((df + 1.0) / 2.0) - special.gammaln(df / 2.0))
    )


@dataclass(frozen=True, eq=False)
class MeanFieldGaussian(VariationalDistribution):
    loc: np.ndarray
    scale: np.ndarray

    kind = "mean_field_gaussian"
    is_mean_field = True
    df = None

    def __post_init__(self):
        object.__setattr__(self, "loc", _as_vector(self.loc, "loc"))
        object.__setattr__(self, "scale", _as_vector(self.scale, "scale"))
        if self.scale.shape != self.loc.shape:
            raise ValueError("loc and scale must have equal length")
        _check_positive("MeanFieldGaussian", self.scale)

    def _base_noise(self, size, rng):
        return rng.standard_normal((size, self.dim))

    def transform_noise(self, eps):
        return self.loc + self.scale * eps

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.loc) / self.scale
        const = -0.5 * self.dim * _LOG_2PI - np.sum(np.log(self.scale))
        return const - 0.5 * np.sum(z * z, axis=-1)

    def moments(self):
        return self.loc.copy(), np.diag(self.scale**2)

    def scale_diag(self):
        return self.scale

    def mad(self):
        return self.scale * math.sqrt(2.0 / math.pi)

    def unconstrained_params(self):
        return np.concatenate([self.loc, np.log(self.scale)])

    def with_unconstrained_params(self, vec):
        d = self.dim
        return MeanFieldGaussian(loc=vec[:d], scale=np.exp(vec[d:]))


@dataclass(frozen=True, eq=False)
class MeanFieldT(VariationalDistribution):
    """Product of location-scale t distributions with common fixed df."""

    loc: np.ndarray
    scale: np.ndarray
    df: float = 40.0

    kind = "mean_field_t"
    is_mean_field = True

    def __post_init__(self):
        object.__setattr__(self, "loc", _as_vector(self.loc, "loc"))
        object.__setattr__(self, "scale", _as_vector(self.scale, "scale"))
        if self.scale.shape != self.loc.shape:
            raise ValueError("loc and scale must have equal length")
        _check_positive("MeanFieldT", self.scale)
        if not self.df > 2:
            raise ValueError("t families require df > 2 so the variance exists")

    def _base_noise(self, size, rng):
        # normal / chi-square composition keeps gradients flowing through
        # loc and scale only (df is fixed, not optimized)
        z = rng.standard_normal((size, self.dim))
        v = rng.chisquare(self.df, (size, self.dim))
        return z / np.sqrt(v / self.df)

    def transform_noise(self, eps):
        return self.loc + self.scale * eps

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        h = self.df
        z = (x - self.loc) / self.scale
        const = self.dim * _t_log_norm_const(h, 1) - np.sum(np.log(self.scale))
        return const - 0.5 * (h + 1.0) * np.sum(np.log1p(z * z / h), axis=-1)

    def moments(self):
        c_h = self.df / (self.df - 2.0)
        return self.loc.copy(), np.diag(c_h * self.scale**2)

    def scale_diag(self):
        return self.scale

    def mad(self):
        return self.scale * _t_mad_factor(self.df)

    def unconstrained_params(self):
        return np.concatenate([self.loc, np.log(self.scale)])

    def with_unconstrained_params(self, vec):
        d = self.dim
        return MeanFieldT(loc=vec[:d], scale=np.exp(vec[d:]), df=self.df)


@dataclass(frozen=True, eq=False)
class FullRankGaussian(VariationalDistribution):
    loc: np.ndarray
    tril: np.ndarray

    kind = "full_rank_gaussian"
    is_mean_field = False
    df = None

    def __post_init__(self):
        object.__setattr__(self, "loc", _as_vector(self.loc, "loc"))
        object.__setattr__(self, "tril", _as_tril(self.tril))
        if self.tril.shape[0] != self.loc.shape[0]:
            raise ValueError("loc length must match factor size")

    def _base_noise(self, size, rng):
        return rng.standard_normal((size, self.dim))

    def transform_noise(self, eps):
        return self.loc + eps @ self.tril.T

    def _standardize(self, x):
        diff = np.atleast_2d(np.asarray(x, dtype=float) - self.loc)
        return solve_triangular(self.tril, diff.T, lower=True).T

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        z = self._standardize(x)
        const = -0.5 * self.dim * _LOG_2PI - np.sum(np.log(np.diag(self.tril)))
        out = const - 0.5 * np.sum(z * z, axis=-1)
        return out if x.ndim > 1 else float(out[0])

    def moments(self):
        return self.loc.copy(), self.tril @ self.tril.T

    def scale_diag(self):
        return np.diag(self.tril)

    def mad(self):
        return np.sqrt(np.diag(self.moments()[1])) * math.sqrt(2.0 / math.pi)

    def unconstrained_params(self):
        d = self.dim
        rows, cols = np.tril_indices(d, -1)
        return np.concatenate([self.loc, np.log(np.diag(self.tril)), self.tril[rows, cols]])

    def with_unconstrained_params(self, vec):
        d = self.dim
        L = np.zeros((d, d))
        L[np.diag_indices(d)] = np.exp(vec[d : 2 * d])
        rows, cols = np.tril_indices(d, -1)
        L[rows, cols] = vec[2 * d :]
        return FullRankGaussian(loc=vec[:d], tril=L)


@dataclass(frozen=True, eq=False)
class FullRankT(VariationalDistribution):
    """Multivariate t with lower-triangular scale factor and fixed df."""

    loc: np.ndarray
    tril: np.ndarray
    df: float = 40.0

    kind = "full_rank_t"
    is_mean_field = False

    def __post_init__(self):
        object.__setattr__(self, "loc", _as_vector(self.loc, "loc"))
        object.__setattr__(self, "tril", _as_tril(self.tril))
        if self.tril.shape[0] != self.loc.shape[0]:
            raise ValueError("loc length must match factor size")
        if not self.df > 2:
            raise ValueError("t families require df > 2 so the variance exists")

    def _base_noise(self, size, rng):
        z = rng.standard_normal((size, self.dim))
        v = rng.chisquare(self.df, (size, 1))  # one mixing draw per sample
        return z / np.sqrt(v / self.df)

    def transform_noise(self, eps):
        return self.loc + eps @ self.tril.T

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        z = FullRankGaussian._standardize(self, x)
        h, d = self.df, self.dim
        const = _t_log_norm_const(h, d) - np.sum(np.log(np.diag(self.tril)))
        out = const - 0.5 * (h + d) * np.log1p(np.sum(z * z, axis=-1) / h)
        return out if x.ndim > 1 else float(out[0])

    def moments(self):
        c_h = self.df / (self.df - 2.0)
        return self.loc.copy(), c_h * (self.tril @ self.tril.T)

    def scale_diag(self):
        return np.diag(self.tril)

    def mad(self):
        # marginals are t_df with scale sqrt((L L^T)_jj)
        marg = np.sqrt(np.diag(self.tril @ self.tril.T))
        return marg * _t_mad_factor(self.df)

    def unconstrained_params(self):
        d = self.dim
        rows, cols = np.tril_indices(d, -1)
        return np.concatenate([self.loc, np.log(np.diag(self.tril)), self.tril[rows, cols]])

    def with_unconstrained_params(self, vec):
        d = self.dim
        L = np.zeros((d, d))
        L[np.diag_indices(d)] = np.exp(vec[d : 2 * d])
        rows, cols = np.tril_indices(d, -1)
        L[rows, cols] = vec[2 * d :]
        return FullRankT(loc=vec[:d], tril=L, df=self.df)


_VARIATIONAL_KINDS = {
    "mean_field_gaussian": MeanFieldGaussian,
    "mean_field_t": MeanFieldT,
    "full_rank_gaussian": FullRankGaussian,
    "full_rank_t": FullRankT,
}


def make_variational(
    kind: str,
    dim: int,
    df: float | None = None,
    loc=None,
    scale=1.0,
) -> VariationalDistribution:
    """Construct an initial member of one of the variational families.

    ``scale`` is a scalar or vector of marginal scales; full-rank kinds start
    from a diagonal factor.
    """
    key = kind.lower().replace("-", "_")
    if key not in _VARIATIONAL_KINDS:
        raise ValueError(f"unknown variational kind {kind!r}")
    loc = np.zeros(dim) if loc is None else _as_vector(loc, "loc")
    scale_vec = np.broadcast_to(np.asarray(scale, dtype=float), (dim,)).copy()
    if key == "mean_field_gaussian":
        return MeanFieldGaussian(loc=loc, scale=scale_vec)
    if key == "mean_field_t":
        return MeanFieldT(loc=loc, scale=scale_vec, df=40.0 if df is None else float(df))
    if key == "full_rank_gaussian":
        return FullRankGaussian(loc=loc, tril=np.diag(scale_vec))
    return FullRankT(loc=loc, tril=np.diag(scale_vec), df=40.0 if df is None else float(df))


# ---------------------------------------------------------------------------
# Functional façade mirroring the operation surface
# ---------------------------------------------------------------------------


def log_density(dist, x):
    """Natural-log density of ``dist`` at ``x``; -inf off the support."""
    return dist.log_density(x)


def sample(dist, size: int, seed: int, stream: int = 0):
    """Deterministic sampling given (seed, stream); see the class methods."""
    return dist.sample(size, seed, stream)


def moments(dist):
    """Analytic (mean, cov) of a variational distribution."""
    if isinstance(dist, (MeanFieldT, FullRankT)) and dist.df <= 2:
        raise ValueError("variance undefined")
    return dist.moments()


def quantile(dist, u):
    """Inverse CDF of a 1-D family at u in (0, 1)."""
    return dist.quantile(u)
