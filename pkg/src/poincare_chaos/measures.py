"""Continuous 1-D input distributions and their independent products.

Every measure lives on a finite interval [a, b] (unbounded parents are
truncated and renormalized through their closed-form CDF), has a density
that is continuous and positive in the open interval, and exposes vectorized
``pdf`` / ``cdf`` / ``quantile`` evaluators.

Parametrization conventions
---------------------------
* ``gaussian``: ``mean`` plus either ``std`` or ``var``.  A spec such as
  N(30, 64) is read as variance 64, i.e. sigma = 8.
* ``gumbel``: location/scale ``(loc, scale)`` with parent density
  ``(1/scale) * exp(-(z + exp(-z)))``, ``z = (x - loc)/scale``.
* ``exponential``: ``rate``, parent support [0, inf).
* ``uniform`` / ``triangular``: natural finite support; an optional
  truncation interval intersects it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from ._quadrature import adaptive_quad
from .errors import InvalidParams, ZeroMass


class Family(str, Enum):
    UNIFORM = "uniform"
    TRIANGULAR = "triangular"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"
    TRUNCATED_GUMBEL = "truncated_gumbel"
    TRUNCATED_EXPONENTIAL = "truncated_exponential"


def _as_same_kind(x, values: np.ndarray):
    """Return array results, or a bare float for scalar input."""
    if np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0):
        return float(values)
    return values


@dataclass(frozen=True)
class Measure1D:
    """A continuous probability measure on a finite interval [a, b].

    ``_parent_pdf`` / ``_parent_cdf`` are the un-truncated family functions;
    the normalization constant ``_mass`` is the parent mass on [a, b].
    ``_parent_ppf`` may be None, in which case quantiles fall back to
    bracketed bisection plus Newton polishing.
    """

    a: float
    b: float
    family: Family
    params: tuple[float, ...]
    mean: float
    _parent_pdf: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _parent_cdf: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _parent_ppf: Callable[[np.ndarray], np.ndarray] | None = field(repr=False)
    _mass: float = field(repr=False)
    _cdf_a: float = field(repr=False)

    def pdf(self, x):
        xv = np.asarray(x, dtype=float)
        inside = (xv >= self.a) & (xv <= self.b)
        out = np.where(inside, self._parent_pdf(np.clip(xv, self.a, self.b)) / self._mass, 0.0)
        return _as_same_kind(x, out)

    def cdf(self, x):
        xv = np.asarray(x, dtype=float)
        raw = (self._parent_cdf(np.clip(xv, self.a, self.b)) - self._cdf_a) / self._mass
        out = np.clip(raw, 0.0, 1.0)
        return _as_same_kind(x, out)

    def quantile(self, u):
        """Inverse CDF; endpoints are returned exactly for u in {0, 1}."""
        uv = np.asarray(u, dtype=float)
        if np.any((uv < 0.0) | (uv > 1.0)):
            raise ValueError("quantile argument must lie in [0, 1]")
        if self._parent_ppf is not None:
            q = self._cdf_a + uv * self._mass
            x = self._parent_ppf(np.minimum(q, 1.0))
            x = np.clip(x, self.a, self.b)
        else:
            x = _invert_cdf(self.cdf, self.a, self.b, uv)
        x = np.where(uv == 0.0, self.a, x)
        x = np.where(uv == 1.0, self.b, x)
        return _as_same_kind(u, x)


@dataclass(frozen=True)
class ProductMeasure:
    """Independent product of 1-D measures."""

    components: tuple[Measure1D, ...]

    def __post_init__(self):
        if len(self.components) < 1:
            raise InvalidParams("a product measure needs at least one component")

    @property
    def dimension(self) -> int:
        return len(self.components)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """Draw n i.i.d. rows by quantile transform of independent uniforms.

        Deterministic: identical (n, seed) gives a bit-identical matrix.
        """
        if n < 1:
            raise ValueError("sample size must be >= 1")
        rng = np.random.default_rng(seed)
        u = rng.random((n, self.dimension))
        x = np.empty_like(u)
        for k, m in enumerate(self.components):
            x[:, k] = m.quantile(u[:, k])
        return x


def _invert_cdf(cdf, a: float, b: float, u: np.ndarray) -> np.ndarray:
    """Bracketed bisection with Newton polishing, |cdf(x) - u| driven below 1e-12."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.empty(u.shape)
    eps = 1e-15 * (b - a)
    for i, ui in np.ndenumerate(u):
        lo, hi = a + eps, b - eps
        if cdf(lo) >= ui:
            out[i] = a
            continue
        if cdf(hi) <= ui:
            out[i] = b
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if cdf(mid) < ui:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13 * (b - a):
                break
        out[i] = 0.5 * (lo + hi)
    return out.reshape(np.shape(u))


def _get(params: Mapping[str, float], *names: str) -> float:
    for name in names:
        if name in params:
            return float(params[name])
    raise InvalidParams(f"missing parameter {names[0]!r}")


def make_measure(
    family: Family | str,
    params: Mapping[str, float],
    truncation: Sequence[float] | None = None,
) -> Measure1D:
    """Build a normalized measure of the given family.

    ``truncation`` is required for families with unbounded parent support
    and optional for the finite-support ones (it then intersects the
    natural support).  The renormalization constant always comes from the
    closed-form parent CDF.

    Raises
    ------
    InvalidParams
        Malformed parameters or missing/empty truncation interval.
    ZeroMass
        Parent mass below 1e-300 on the truncation interval.
    """
    family = Family(family)

    if family is Family.UNIFORM:
        lo, hi = _get(params, "a"), _get(params, "b")
        if not lo < hi:
            raise InvalidParams("uniform needs a < b")
        width = hi - lo
        parent_pdf = lambda x: np.where((x >= lo) & (x <= hi), 1.0 / width, 0.0)
        parent_cdf = lambda x: np.clip((x - lo) / width, 0.0, 1.0)
        parent_ppf = lambda q: lo + q * width
        natural = (lo, hi)
        ptuple = (lo, hi)
        exact_mean = None

    elif family is Family.TRIANGULAR:
        lo, mode, hi = _get(params, "a"), _get(params, "c"), _get(params, "b")
        if not lo < mode < hi:
            raise InvalidParams("triangular needs a < c < b")
        width = hi - lo

        def parent_pdf(x, lo=lo, mode=mode, hi=hi, width=width):
            x = np.asarray(x, dtype=float)
            left = 2.0 * (x - lo) / (width * (mode - lo))
            right = 2.0 * (hi - x) / (width * (hi - mode))
            out = np.where(x < mode, left, right)
            return np.where((x >= lo) & (x <= hi), np.maximum(out, 0.0), 0.0)

        def parent_cdf(x, lo=lo, mode=mode, hi=hi, width=width):
            x = np.clip(np.asarray(x, dtype=float), lo, hi)
            left = (x - lo) ** 2 / (width * (mode - lo))
            right = 1.0 - (hi - x) ** 2 / (width * (hi - mode))
            return np.where(x < mode, left, right)

        fc = (mode - lo) / width

        def parent_ppf(q, lo=lo, mode=mode, hi=hi, width=width, fc=fc):
            q = np.asarray(q, dtype=float)
            left = lo + np.sqrt(np.maximum(q, 0.0) * width * (mode - lo))
            right = hi - np.sqrt(np.maximum(1.0 - q, 0.0) * width * (hi - mode))
            return np.where(q < fc, left, right)

        natural = (lo, hi)
        ptuple = (lo, mode, hi)
        exact_mean = None

    elif family is Family.TRUNCATED_GAUSSIAN:
        mu = _get(params, "mean", "mu", "loc")
        if "std" in params and "var" in params:
            raise InvalidParams("give either std or var, not both")
        if "std" in params or "sigma" in params or "scale" in params:
            sigma = _get(params, "std", "sigma", "scale")
        else:
            sigma = math.sqrt(_get(params, "var"))
        if sigma <= 0:
            raise InvalidParams("gaussian scale must be positive")
        parent_pdf = lambda x: np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
        parent_cdf = lambda x: ndtr((x - mu) / sigma)
        parent_ppf = lambda q: mu + sigma * ndtri(np.clip(q, 1e-320, 1.0))
        natural = None
        ptuple = (mu, sigma)
        exact_mean = None  # filled below from phi values

    elif family is Family.TRUNCATED_GUMBEL:
        eta = _get(params, "loc", "eta")
        beta = _get(params, "scale", "beta")
        if beta <= 0:
            raise InvalidParams("gumbel scale must be positive")

        def parent_pdf(x, eta=eta, beta=beta):
            z = (np.asarray(x, dtype=float) - eta) / beta
            return np.exp(-(z + np.exp(-z))) / beta

        def parent_cdf(x, eta=eta, beta=beta):
            z = (np.asarray(x, dtype=float) - eta) / beta
            return np.exp(-np.exp(-z))

        def parent_ppf(q, eta=eta, beta=beta):
            q = np.asarray(q, dtype=float)
            with np.errstate(divide="ignore"):
                return eta - beta * np.log(-np.log(q))

        natural = None
        ptuple = (eta, beta)
        exact_mean = None

    elif family is Family.TRUNCATED_EXPONENTIAL:
        rate = _get(params, "rate", "lam")
        if rate <= 0:
            raise InvalidParams("exponential rate must be positive")
        parent_pdf = lambda x: np.where(np.asarray(x, dtype=float) >= 0, rate * np.exp(-rate * np.asarray(x, dtype=float)), 0.0)
        parent_cdf = lambda x: np.where(np.asarray(x, dtype=float) >= 0, -np.expm1(-rate * np.clip(np.asarray(x, dtype=float), 0.0, None)), 0.0)
        parent_ppf = lambda q: -np.log1p(-np.asarray(q, dtype=float)) / rate
        natural = None
        ptuple = (rate,)
        exact_mean = None

    else:  # pragma: no cover
        raise InvalidParams(f"unknown family {family}")

    if truncation is None:
        if natural is None:
            raise InvalidParams(f"{family.value} requires a truncation interval")
        a, b = natural
    else:
        a, b = float(truncation[0]), float(truncation[1])
        if not a < b:
            raise InvalidParams("truncation interval must satisfy a < b")
        if natural is not None:
            a, b = max(a, natural[0]), min(b, natural[1])
            if not a < b:
                raise InvalidParams("truncation does not intersect the support")
        if family is Family.TRUNCATED_EXPONENTIAL and a < 0:
            a = 0.0

    cdf_a = float(parent_cdf(np.asarray(a)))
    mass = float(parent_cdf(np.asarray(b))) - cdf_a
    if mass < 1e-300:
        raise ZeroMass(f"parent mass {mass:g} on [{a}, {b}]")

    mean = _truncated_mean(family, ptuple, a, b, mass, cdf_a, parent_pdf)

    return Measure1D(
        a=a, b=b, family=family, params=ptuple, mean=mean,
        _parent_pdf=parent_pdf, _parent_cdf=parent_cdf, _parent_ppf=parent_ppf,
        _mass=mass, _cdf_a=cdf_a,
    )


def _truncated_mean(family, params, a, b, mass, cdf_a, parent_pdf) -> float:
    """Closed-form truncated mean where the family allows it, quadrature otherwise."""
    if family is Family.UNIFORM:
        return 0.5 * (a + b)
    if family is Family.TRIANGULAR and (a, b) == (params[0], params[2]):
        return (params[0] + params[1] + params[2]) / 3.0
    if family is Family.TRUNCATED_GAUSSIAN:
        mu, sigma = params
        alpha, beta_ = (a - mu) / sigma, (b - mu) / sigma
        phi = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
        return mu + sigma * (phi(alpha) - phi(beta_)) / mass
    if family is Family.TRUNCATED_EXPONENTIAL:
        (rate,) = params
        num = (a + 1.0 / rate) * math.exp(-rate * a) - (b + 1.0 / rate) * math.exp(-rate * b)
        return num / (math.exp(-rate * a) - math.exp(-rate * b))
    return adaptive_quad(lambda x: x * parent_pdf(x) / mass, a, b, rel_tol=1e-13)
