"""Parametric reward families.

Three families cover every experiment: Gaussian rewards with a scaled
mean, Bernoulli rewards whose mean is theta or 1 - theta, and finitely
supported rewards whose outcome probabilities are linear in theta. KL
divergences are closed-form in every family and use natural logs.

Models are immutable after construction and safe to share across
threads. Samplers draw from an externally owned generator, exactly one
raw variate per call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError
from .spaces import ParameterSpace

GAUSSIAN_SCALED = "gaussian_scaled"
BERNOULLI_LINK = "bernoulli_link"
FINITE_SUPPORT_LINEAR = "finite_support_linear"


@dataclass(frozen=True)
class SubGaussianCert:
    """Certified sub-Gaussianity parameter of the centered reward."""

    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigurationError("sub-Gaussian sigma must be positive and finite")


def bernoulli_kl(p: float, q: float) -> float:
    """KL between Bernoulli(p) and Bernoulli(q), both in (0, 1)."""
    return p * math.log(p / q) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q))


class ArmModel:
    """Base class: one arm's reward law as a function of theta.

    Subclasses implement scalar mean/kl/log_density/sample plus the
    vectorised mean_array/kl_array used by grid sweeps. The scalar kl
    direction is kl(theta1 || theta2) with theta1 the reference law.
    """

    family: str = ""
    mean_monotone: bool = False

    def __init__(self, space: ParameterSpace):
        self.space = space

    def mean(self, theta) -> float:
        raise NotImplementedError

    def kl(self, theta1, theta2) -> float:
        raise NotImplementedError

    def log_density(self, reward: float, theta) -> float:
        raise NotImplementedError

    def sample(self, theta, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def subgaussian(self) -> SubGaussianCert:
        raise NotImplementedError

    # vectorised counterparts over arrays of parameters; thetas has
    # shape (n,) for scalar spaces and (n, d) otherwise
    def mean_array(self, thetas: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def kl_array(self, thetas1: np.ndarray, thetas2: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_likelihood_array(self, rewards: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        """Sum of log densities of `rewards` at each parameter in `thetas`."""
        raise NotImplementedError

    def kl_matrix(self, grid: np.ndarray) -> np.ndarray:
        """Pairwise kl(grid[i] || grid[j]) as an (n, n) matrix."""
        if self.space.dim == 1:
            g = np.asarray(grid, dtype=float)
            return self.kl_array(g[:, None], g[None, :])
        raise NotImplementedError


class GaussianScaledArm(ArmModel):
    """Gaussian rewards with mean scale * theta and known noise sigma."""

    family = GAUSSIAN_SCALED
    mean_monotone = True

    def __init__(self, space: ParameterSpace, scale: float, noise: float):
        if space.dim != 1:
            raise ConfigurationError("gaussian_scaled requires a scalar parameter space")
        if not (math.isfinite(scale) and scale != 0.0):
            raise ConfigurationError("scale must be finite and nonzero")
        if not (noise > 0 and math.isfinite(noise)):
            raise ConfigurationError("noise must be positive and finite")
        super().__init__(space)
        self.scale = float(scale)
        self.noise = float(noise)

    def mean(self, theta) -> float:
        (th,) = self.space.require(theta)
        return self.scale * th

    def kl(self, theta1, theta2) -> float:
        (a,) = self.space.require(theta1)
        (b,) = self.space.require(theta2)
        d = self.scale * (a - b)
        return d * d / (2.0 * self.noise * self.noise)

    def log_density(self, reward: float, theta) -> float:
        (th,) = self.space.require(theta)
        v = self.noise * self.noise
        z = reward - self.scale * th
        return -0.5 * math.log(2.0 * math.pi * v) - z * z / (2.0 * v)

    def sample(self, theta, rng: np.random.Generator) -> float:
        (th,) = self.space.require(theta)
        return self.scale * th + self.noise * rng.standard_normal()

    def subgaussian(self) -> SubGaussianCert:
        return SubGaussianCert(self.noise)

    def mean_array(self, thetas: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(thetas, dtype=float)

    def kl_array(self, thetas1, thetas2) -> np.ndarray:
        d = self.scale * (np.asarray(thetas1, float) - np.asarray(thetas2, float))
        return d * d / (2.0 * self.noise * self.noise)

    def log_likelihood_array(self, rewards, thetas) -> np.ndarray:
        r = np.asarray(rewards, float)
        mu = self.mean_array(thetas)
        v = self.noise * self.noise
        n = r.size
        const = -0.5 * n * math.log(2.0 * math.pi * v)
        # sum_s (r_s - mu)^2 = sum r^2 - 2 mu sum r + n mu^2
        sr = float(r.sum())
        sr2 = float((r * r).sum())
        return const - (sr2 - 2.0 * mu * sr + n * mu * mu) / (2.0 * v)


class BernoulliLinkArm(ArmModel):
    """Bernoulli rewards with mean theta (identity link) or 1 - theta (mirror)."""

    family = BERNOULLI_LINK
    mean_monotone = True

    def __init__(self, space: ParameterSpace, link: str = "identity"):
        if space.dim != 1:
            raise ConfigurationError("bernoulli_link requires a scalar parameter space")
        if link not in ("identity", "mirror"):
            raise ConfigurationError(f"unknown bernoulli link {link!r}")
        # mean(theta) must stay inside (0, 1) over the whole space
        if not (space.lower[0] > 0.0 and space.upper[0] < 1.0):
            raise ConfigurationError(
                "bernoulli_link needs space bounds strictly inside (0, 1)")
        super().__init__(space)
        self.link = link

    @property
    def mirrored(self) -> bool:
        return self.link == "mirror"

    def mean(self, theta) -> float:
        (th,) = self.space.require(theta)
        return 1.0 - th if self.mirrored else th

    def kl(self, theta1, theta2) -> float:
        self.space.require(theta1)
        self.space.require(theta2)
        return bernoulli_kl(self.mean(theta1), self.mean(theta2))

    def log_density(self, reward: float, theta) -> float:
        m = self.mean(theta)
        if reward == 1.0:
            return math.log(m)
        if reward == 0.0:
            return math.log(1.0 - m)
        raise DataError(f"bernoulli reward must be 0 or 1, got {reward!r}")

    def sample(self, theta, rng: np.random.Generator) -> float:
        m = self.mean(theta)
        return 1.0 if rng.random() < m else 0.0

    def subgaussian(self) -> SubGaussianCert:
        # bounded in [0, 1], hence (range)/2 sub-Gaussian
        return SubGaussianCert(0.5)

    def mean_array(self, thetas) -> np.ndarray:
        t = np.asarray(thetas, float)
        return 1.0 - t if self.mirrored else t

    def kl_array(self, thetas1, thetas2) -> np.ndarray:
        p = self.mean_array(thetas1)
        q = self.mean_array(thetas2)
        return p * np.log(p / q) + (1.0 - p) * np.log((1.0 - p) / (1.0 - q))

    def log_likelihood_array(self, rewards, thetas) -> np.ndarray:
        r = np.asarray(rewards, float)
        if not np.all((r == 0.0) | (r == 1.0)):
            bad = r[(r != 0.0) & (r != 1.0)][0]
            raise DataError(f"bernoulli reward must be 0 or 1, got {bad!r}")
        m = self.mean_array(thetas)
        s = float(r.sum())
        n = r.size
        return s * np.log(m) + (n - s) * np.log(1.0 - m)


class FiniteSupportLinearArm(ArmModel):
    """Rewards on a finite support with probabilities linear in theta.

    With support s_1..s_N and mixing matrix A (N-1 square, identity when
    omitted), outcome probabilities are (A theta, 1 - sum(A theta)).
    The parameter space must be simplex-interior so every probability
    keeps a positive floor.
    """

    family = FINITE_SUPPORT_LINEAR
    mean_monotone = False

    def __init__(self, space: ParameterSpace, support, mixing=None):
        if space.kind != "simplex-interior":
            raise ConfigurationError(
                "finite_support_linear requires a simplex-interior space")
        support = tuple(float(s) for s in support)
        if len(support) != space.dim + 1:
            raise ConfigurationError(
                f"support needs {space.dim + 1} values for a {space.dim}-dim space")
        if len(set(support)) != len(support):
            raise ConfigurationError("support values must be distinct")
        if not all(math.isfinite(s) for s in support):
            raise ConfigurationError("support values must be finite")
        super().__init__(space)
        self.support = support
        d = space.dim
        if mixing is None:
            a = np.eye(d)
            self.mixing = None
        else:
            a = np.asarray(mixing, dtype=float)
            if a.shape != (d, d):
                raise ConfigurationError(f"mixing matrix must be {d}x{d}")
            self.mixing = tuple(tuple(float(x) for x in row) for row in a)
        self._a = a
        self._support_arr = np.asarray(support)
        # outcome probabilities are affine in theta, so checking the
        # floor at the space's vertices certifies the whole space
        for v in space.vertices():
            for p in self._probs_of(v):
                if not (space.floor - 1e-12 <= p <= 1.0):
                    raise ConfigurationError(
                        "mixing matrix pushes an outcome probability outside "
                        f"[{space.floor}, 1] at vertex {tuple(v)}")

    def _probs_of(self, th) -> np.ndarray:
        mixed = self._a @ np.asarray(th, dtype=float)
        return np.append(mixed, 1.0 - math.fsum(mixed))

    def probs(self, theta) -> tuple[float, ...]:
        th = self.space.require(theta)
        return tuple(self._probs_of(th))

    def mean(self, theta) -> float:
        return float(self._probs_of(self.space.require(theta)) @ self._support_arr)

    def kl(self, theta1, theta2) -> float:
        p = self._probs_of(self.space.require(theta1))
        q = self._probs_of(self.space.require(theta2))
        return float(np.sum(p * np.log(p / q)))

    def log_density(self, reward: float, theta) -> float:
        p = self._probs_of(self.space.require(theta))
        for k, s in enumerate(self.support):
            if reward == s:
                return math.log(p[k])
        raise DataError(f"reward {reward!r} is not a support point of {self.support}")

    def sample(self, theta, rng: np.random.Generator) -> float:
        p = self._probs_of(self.space.require(theta))
        u = rng.random()
        acc = 0.0
        for k, s in enumerate(self.support):
            acc += p[k]
            if u < acc:
                return s
        return self.support[-1]

    def subgaussian(self) -> SubGaussianCert:
        return SubGaussianCert((max(self.support) - min(self.support)) / 2.0)

    def _probs_array(self, thetas: np.ndarray) -> np.ndarray:
        t = np.asarray(thetas, dtype=float)
        if t.ndim == 1 and self.space.dim == 1:
            t = t[:, None]
        else:
            t = np.atleast_2d(t)
        mixed = t @ self._a.T
        resid = 1.0 - mixed.sum(axis=1, keepdims=True)
        return np.hstack([mixed, resid])

    def mean_array(self, thetas) -> np.ndarray:
        return self._probs_array(thetas) @ self._support_arr

    def kl_array(self, thetas1, thetas2) -> np.ndarray:
        p = self._probs_array(thetas1)
        q = self._probs_array(thetas2)
        return np.sum(p * np.log(p / q), axis=1)

    def kl_matrix(self, grid: np.ndarray) -> np.ndarray:
        p = self._probs_array(grid)
        lp = np.log(p)
        return (p * lp).sum(axis=1)[:, None] - p @ lp.T

    def log_likelihood_array(self, rewards, thetas) -> np.ndarray:
        r = np.asarray(rewards, float)
        counts = np.zeros(len(self.support))
        for k, s in enumerate(self.support):
            counts[k] = np.count_nonzero(r == s)
        if counts.sum() != r.size:
            off = r[~np.isin(r, self._support_arr)][0]
            raise DataError(f"reward {off!r} is not a support point of {self.support}")
        return np.log(self._probs_array(thetas)) @ counts
