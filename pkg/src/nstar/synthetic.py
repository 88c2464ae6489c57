"""Gaussian return panels with a known covariance structure.

Used as oracles: the isotropic generator has N*(N) = N / (1 + (N-1) rho)
by construction, and the factor generator has covariance B B' + diag(s)^2.
"""

from dataclasses import dataclass
import datetime as dt

import numpy as np

from .errors import ValidationError
from .returns import ReturnPanel, daily_dates

DEFAULT_START = dt.date(2000, 1, 2)


def _asset_names(n, prefix="A"):
    width = len(str(n))
    return tuple(f"{prefix}{i:0{width}d}" for i in range(1, n + 1))


@dataclass(frozen=True)
class IsotropicSpec:
    """Isotropic correlation with common or per-asset volatility (percent/day)."""

    n_assets: int
    t_obs: int
    rho: float
    sigma: object = 1.0  # scalar, or a length-n_assets vector

    def __post_init__(self):
        if self.n_assets < 1:
            raise ValidationError(f"n_assets must be positive, got {self.n_assets}")
        if self.t_obs < 2:
            raise ValidationError(f"t_obs must be at least 2, got {self.t_obs}")
        lower = -1.0 / (self.n_assets - 1) if self.n_assets > 1 else -1.0
        if not (lower - 1e-12 <= self.rho <= 1.0):
            raise ValidationError(
                f"rho={self.rho} below -1/(n-1)={lower:.6g} or above 1: not a valid covariance"
            )
        sig = self.sigmas
        if not np.all(sig > 0):
            raise ValidationError("volatilities must be positive")

    @property
    def sigmas(self):
        sig = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if sig.size == 1:
            return np.full(self.n_assets, float(sig[0]))
        if sig.shape != (self.n_assets,):
            raise ValidationError(
                f"sigma vector has {sig.size} entries for {self.n_assets} assets"
            )
        return sig


@dataclass(frozen=True)
class FactorSpec:
    """r_t = mu + B f_t + e_t with f_t ~ N(0, I_K), e_t ~ N(0, diag(s)^2)."""

    loadings: np.ndarray  # N x K
    residual_sd: np.ndarray  # N
    t_obs: int
    mu: np.ndarray = None  # N; zero when omitted

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.loadings, dtype=float))
        s = np.atleast_1d(np.asarray(self.residual_sd, dtype=float))
        n = b.shape[0]
        if s.size == 1:
            s = np.full(n, float(s[0]))
        if s.shape != (n,):
            raise ValidationError(f"residual_sd has {s.size} entries for {n} assets")
        if np.any(s < 0):
            raise ValidationError("residual standard deviations must be non-negative")
        mu = np.zeros(n) if self.mu is None else np.atleast_1d(np.asarray(self.mu, dtype=float))
        if mu.shape != (n,):
            raise ValidationError(f"mu has {mu.size} entries for {n} assets")
        if self.t_obs < 2:
            raise ValidationError(f"t_obs must be at least 2, got {self.t_obs}")
        object.__setattr__(self, "loadings", b)
        object.__setattr__(self, "residual_sd", s)
        object.__setattr__(self, "mu", mu)

    @property
    def n_assets(self):
        return self.loadings.shape[0]

    @property
    def k_factors(self):
        return self.loadings.shape[1]

    def covariance(self):
        return self.loadings @ self.loadings.T + np.diag(self.residual_sd**2)


def block_loadings(block_sizes, loading=1.0):
    """Loadings where each asset loads on exactly one factor (one block per factor)."""
    k = len(block_sizes)
    b = np.zeros((sum(block_sizes), k))
    row = 0
    for j, size in enumerate(block_sizes):
        b[row:row + size, j] = loading
        row += size
    return b


def isotropic_covariance_matrix(spec):
    """diag(sigma) C diag(sigma) with C = rho off the diagonal and 1 on it."""
    n = spec.n_assets
    sig = spec.sigmas
    corr = np.full((n, n), float(spec.rho))
    np.fill_diagonal(corr, 1.0)
    cov = corr * np.outer(sig, sig)
    if np.linalg.eigvalsh(cov).min() < -1e-10 * max(1.0, float(sig.max() ** 2)):
        raise ValidationError(f"rho={spec.rho} gives a covariance that is not positive semi-definite")
    return cov


def _symmetric_sqrt(cov):
    w, v = np.linalg.eigh(cov)
    if w.min() < -1e-10 * max(1.0, abs(w.max())):
        raise ValidationError("covariance matrix is not positive semi-definite")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def gen_isotropic(spec, seed, start=DEFAULT_START):
    """Isotropic Gaussian returns panel, deterministic in ``(spec, seed)``.

    For rho >= 0 each return is sigma_i (sqrt(rho) z_t + sqrt(1 - rho) e_it);
    negative rho goes through a symmetric square root of the full covariance.
    """
    rng = np.random.default_rng(seed)
    n, t = spec.n_assets, spec.t_obs
    sig = spec.sigmas
    if spec.rho >= 0:
        common = rng.standard_normal(t)
        idio = rng.standard_normal((n, t))
        r = sig[:, None] * (np.sqrt(spec.rho) * common + np.sqrt(1.0 - spec.rho) * idio)
    else:
        root = _symmetric_sqrt(isotropic_covariance_matrix(spec))
        r = root @ rng.standard_normal((n, t))
    return ReturnPanel(_asset_names(n), daily_dates(start, t), r)


def gen_factor(spec, seed, start=DEFAULT_START):
    """Linear factor model returns panel, deterministic in ``(spec, seed)``."""
    rng = np.random.default_rng(seed)
    t = spec.t_obs
    f = rng.standard_normal((spec.k_factors, t))
    e = rng.standard_normal((spec.n_assets, t))
    r = spec.mu[:, None] + spec.loadings @ f + spec.residual_sd[:, None] * e
    return ReturnPanel(_asset_names(spec.n_assets), daily_dates(start, t), r)
