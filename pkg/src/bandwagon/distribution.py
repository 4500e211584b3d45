"""Idiosyncratic willingness-to-pay laws and the Γ / Γ̃ functions built on them.

A distribution supplies the pdf ``f``, its first two derivatives, the cdf ``F``
and the survival function ``1 - F`` with their inverses. Everything the market
model needs is expressed through

    Γ(η)  = -F⁻¹(1 - η)          (price offset at which a fraction η buys)
    Γ̃(η)  = d/dη [η Γ(η)] = Γ + ηΓ'

and their derivatives, which follow analytically from ``f``, ``f'`` and ``f''``.
"""
from __future__ import annotations

import csv
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate, special
from scipy.interpolate import PchipInterpolator, make_interp_spline
from scipy.optimize import minimize_scalar

from ._roots import brent
from .errors import ConvergenceError, DomainError

ETA_CLAMP = 1e-12
REGULARITY_POINTS = 4096


class IwpDistribution(ABC):
    """Zero-mean, unit-variance, unimodal law with full support on the real axis."""

    name = "abstract"

    @abstractmethod
    def pdf(self, x):
        ...

    @abstractmethod
    def dpdf(self, x):
        """First derivative of the pdf."""

    @abstractmethod
    def d2pdf(self, x):
        """Second derivative of the pdf."""

    @abstractmethod
    def cdf(self, x):
        ...

    def sf(self, x):
        """Survival function ``1 - F(x)``."""
        return 1.0 - self.cdf(x)

    @abstractmethod
    def ppf(self, q):
        """Quantile function ``F⁻¹(q)``."""

    def isf(self, q):
        """Inverse survival function: ``x`` such that ``1 - F(x) = q``."""
        return self.ppf(1.0 - np.asarray(q, dtype=float))

    def mode(self) -> float:
        """Location of the maximum of the pdf."""
        lo, hi = float(self.ppf(1e-6)), float(self.ppf(1 - 1e-6))
        xs = np.linspace(lo, hi, 2001)
        k = int(np.argmax(self.pdf(xs)))
        a, b = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]
        res = minimize_scalar(lambda x: -float(self.pdf(x)), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-12})
        if not res.success:
            raise ConvergenceError(f"mode of {self.name}: {res.message}")
        return float(res.x)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.asarray(self.ppf(rng.random(n)), dtype=float)

    def moments(self) -> tuple[float, float]:
        """Mean and variance by quadrature."""
        m1 = integrate.quad(lambda x: x * self.pdf(x), -np.inf, np.inf,
                            epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        m2 = integrate.quad(lambda x: x * x * self.pdf(x), -np.inf, np.inf,
                            epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        return m1, m2 - m1 * m1


class Logistic(IwpDistribution):
    """Logistic law ``F(x) = 1 / (1 + exp(-βx))`` with β = π/√3 (unit variance)."""

    name = "logistic"
    beta = math.pi / math.sqrt(3.0)

    def pdf(self, x):
        e = np.exp(-self.beta * np.abs(x))
        return self.beta * e / (1.0 + e) ** 2

    def dpdf(self, x):
        return -self.beta * self.pdf(x) * np.tanh(0.5 * self.beta * np.asarray(x, dtype=float))

    def d2pdf(self, x):
        f = self.pdf(x)
        t = np.tanh(0.5 * self.beta * np.asarray(x, dtype=float))
        return self.beta ** 2 * f * t * t - 2.0 * self.beta * f * f

    def cdf(self, x):
        return special.expit(self.beta * np.asarray(x, dtype=float))

    def sf(self, x):
        return special.expit(-self.beta * np.asarray(x, dtype=float))

    def ppf(self, q):
        return special.logit(q) / self.beta

    def isf(self, q):
        return -special.logit(q) / self.beta

    def mode(self) -> float:
        return 0.0

    def sample(self, rng, n):
        return rng.logistic(0.0, 1.0 / self.beta, n)


class Gaussian(IwpDistribution):
    """Standard normal law."""

    name = "gaussian"
    _norm = 1.0 / math.sqrt(2.0 * math.pi)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self._norm * np.exp(-0.5 * x * x)

    def dpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -x * self.pdf(x)

    def d2pdf(self, x):
        x = np.asarray(x, dtype=float)
        return (x * x - 1.0) * self.pdf(x)

    def cdf(self, x):
        return special.ndtr(x)

    def sf(self, x):
        return special.ndtr(-np.asarray(x, dtype=float))

    def ppf(self, q):
        return special.ndtri(q)

    def isf(self, q):
        return -special.ndtri(q)

    def mode(self) -> float:
        return 0.0

    def sample(self, rng, n):
        return rng.standard_normal(n)


class TabulatedDistribution(IwpDistribution):
    """Distribution given by ``(x, F)`` pairs.

    ``s(x) = logit F(x)`` is interpolated by a quintic spline whose second and
    third derivatives vanish at the table ends, so ``f``, ``f'`` and ``f''`` are
    continuous. Beyond the table ``s`` continues linearly, which gives
    exponential tails and full support on the real axis.
    """

    name = "table"
    MIN_POINTS = 6
    CHECK_PER_CELL = 16

    def __init__(self, x, F):
        x = np.asarray(x, dtype=float)
        F = np.asarray(F, dtype=float)
        if x.ndim != 1 or x.shape != F.shape or len(x) < self.MIN_POINTS:
            raise ValueError(f"need at least {self.MIN_POINTS} (x, F) pairs")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(F) <= 0):
            raise ValueError("x and F must both be strictly increasing")
        if F[0] <= 0 or F[-1] >= 1:
            raise ValueError("F must lie strictly inside (0, 1)")
        self.x, self.F = x, F
        flat = [(2, 0.0), (3, 0.0)]
        self._s = make_interp_spline(x, special.logit(F), k=5, bc_type=(flat, flat))
        self._ds = [self._s.derivative(k) for k in (1, 2, 3)]
        t = np.linspace(0.0, 1.0, self.CHECK_PER_CELL, endpoint=False)
        dense = np.append((x[:-1, None] + np.diff(x)[:, None] * t).ravel(), x[-1])
        s_dense = self._s(dense)
        if np.any(self._ds[0](dense) <= 0) or np.any(np.diff(s_dense) <= 0):
            raise ValueError("interpolated F is not strictly increasing; refine the table")
        self._inv = PchipInterpolator(s_dense, dense)
        self._s_ends = (float(s_dense[0]), float(s_dense[-1]))
        self._slope_ends = (float(self._ds[0](x[0])), float(self._ds[0](x[-1])))

    @classmethod
    def from_csv(cls, path) -> "TabulatedDistribution":
        """Read a two-column ``x,F`` CSV file with a header row."""
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        header = [c.strip() for c in rows[0]] if rows else []
        if header != ["x", "F"]:
            raise ValueError(f"expected header 'x,F', got {','.join(header)!r}")
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError("expected two numeric columns")
        return cls(data[:, 0], data[:, 1])

    def _derivs(self, x):
        """``s`` and its first three derivatives, continued linearly outside the table."""
        x = np.asarray(x, dtype=float)
        x0, x1 = self.x[0], self.x[-1]
        xc = np.clip(x, x0, x1)
        s = np.asarray(self._s(xc), dtype=float)
        s1, s2, s3 = (np.asarray(d(xc), dtype=float) for d in self._ds)
        lo, hi = x < x0, x > x1
        s = np.where(lo, self._s_ends[0] + self._slope_ends[0] * (x - x0), s)
        s = np.where(hi, self._s_ends[1] + self._slope_ends[1] * (x - x1), s)
        outside = lo | hi
        return s, s1, np.where(outside, 0.0, s2), np.where(outside, 0.0, s3)

    def cdf(self, x):
        return special.expit(self._derivs(x)[0])

    def sf(self, x):
        return special.expit(-self._derivs(x)[0])

    def pdf(self, x):
        s, s1, _, _ = self._derivs(x)
        return s1 * special.expit(s) * special.expit(-s)

    def dpdf(self, x):
        s, s1, s2, _ = self._derivs(x)
        F, G = special.expit(s), special.expit(-s)
        return F * G * (s2 + s1 * s1 * (G - F))

    def d2pdf(self, x):
        s, s1, s2, s3 = self._derivs(x)
        F, G = special.expit(s), special.expit(-s)
        u, c = F * G, G - F
        return u * (s1 * c * (s2 + s1 * s1 * c) + s3 + 2.0 * s1 * s2 * c - 2.0 * s1 ** 3 * u)

    def _solve(self, z):
        """Solve ``s(x) = z``: interpolated guess, Newton polish, linear tails."""
        z = np.asarray(z, dtype=float)
        (z0, z1), (k0, k1) = self._s_ends, self._slope_ends
        zc = np.clip(z, z0, z1)
        x = np.asarray(self._inv(zc), dtype=float)
        for _ in range(3):
            x = np.clip(x - (np.asarray(self._s(x)) - zc) / np.asarray(self._ds[0](x)),
                        self.x[0], self.x[-1])
        x = np.where(z < z0, self.x[0] + (z - z0) / k0, x)
        return np.where(z > z1, self.x[-1] + (z - z1) / k1, x)

    def ppf(self, q):
        return self._solve(special.logit(q))

    def isf(self, q):
        return self._solve(-special.logit(q))


@dataclass(frozen=True)
class CriticalScalars:
    f_B: float
    eta_B: float
    j_B: float


def _check_eta(eta):
    if isinstance(eta, float):
        if not 0.0 < eta < 1.0:
            raise DomainError("fraction of buyers must lie strictly inside (0, 1)")
        return min(max(eta, ETA_CLAMP), 1.0 - ETA_CLAMP)
    arr = np.asarray(eta, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise DomainError("fraction of buyers must lie strictly inside (0, 1)")
    return np.clip(arr, ETA_CLAMP, 1.0 - ETA_CLAMP)


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else np.asarray(arr)


class GammaFunctions:
    """Γ, Γ̃ and their derivatives for a given willingness-to-pay law.

    All evaluators accept scalars or arrays of fractions in (0, 1); values are
    clamped to ``[1e-12, 1 - 1e-12]`` and anything outside (0, 1) raises
    :class:`DomainError`.
    """

    def __init__(self, dist: IwpDistribution):
        self.dist = dist

    def __repr__(self):
        return f"GammaFunctions({self.dist.name})"

    def _x(self, eta):
        """Threshold ``x = F⁻¹(1 - η)``."""
        return self.dist.isf(_check_eta(eta))

    def gamma(self, eta):
        return _out(-self._x(eta))

    def dgamma(self, eta):
        return _out(1.0 / self.dist.pdf(self._x(eta)))

    def d2gamma(self, eta):
        x = self._x(eta)
        f = self.dist.pdf(x)
        return _out(self.dist.dpdf(x) / f ** 3)

    def d3gamma(self, eta):
        x = self._x(eta)
        f, df, d2f = self.dist.pdf(x), self.dist.dpdf(x), self.dist.d2pdf(x)
        return _out((3.0 * df * df - f * d2f) / f ** 5)

    def gamma_tilde(self, eta):
        eta = _check_eta(eta)
        return _out(self.gamma(eta) + eta * self.dgamma(eta))

    def dgamma_tilde(self, eta):
        eta = _check_eta(eta)
        return _out(2.0 * self.dgamma(eta) + eta * self.d2gamma(eta))

    def d2gamma_tilde(self, eta):
        eta = _check_eta(eta)
        return _out(3.0 * self.d2gamma(eta) + eta * self.d3gamma(eta))

    @cached_property
    def critical(self) -> CriticalScalars:
        """Height ``f_B`` of the pdf mode, ``η_B = argmin Γ'`` and ``j_B = 1/f_B``."""
        x_mode = self.dist.mode()
        f_B = float(self.dist.pdf(x_mode))
        return CriticalScalars(f_B=f_B, eta_B=float(self.dist.sf(x_mode)), j_B=1.0 / f_B)

    def critical_scalars(self) -> tuple[float, float, float]:
        c = self.critical
        return c.f_B, c.eta_B, c.j_B

    @cached_property
    def eta_A(self) -> float:
        """Location of the minimum of Γ̃'.

        Found as the zero of the analytic Γ̃'' inside a golden-section bracket.
        """
        res = minimize_scalar(lambda e: float(self.dgamma_tilde(e)),
                              bounds=(1e-6, self.critical.eta_B), method="bounded",
                              options={"xatol": 1e-10})
        e0 = float(res.x)
        lo, hi = max(e0 - 1e-3, 1e-9), min(e0 + 1e-3, 1 - 1e-9)
        d2 = self.d2gamma_tilde
        if d2(lo) < 0 < d2(hi):
            return brent(d2, lo, hi, name="eta_A")
        return e0

    @property
    def j_A(self) -> float:
        return 0.5 * float(self.dgamma_tilde(self.eta_A))

    def check_supply_regularity(self, grid=None):
        """Test that ``d²/dx² 1/(1 - F(x)) > 0`` on a quantile grid.

        Returns ``(ok, x_bad)`` where ``x_bad`` is the first violating abscissa
        or ``None``. The sign test uses ``f'(x)(1 - F) + 2f² > 0``, which is the
        condition multiplied by ``(1 - F)³``.
        """
        if grid is None:
            grid = self.dist.ppf(np.linspace(1e-8, 1 - 1e-8, REGULARITY_POINTS))
        x = np.asarray(grid, dtype=float)
        f = self.dist.pdf(x)
        value = self.dist.dpdf(x) * self.dist.sf(x) + 2.0 * f * f
        bad = np.nonzero(~(value > 0))[0]
        if bad.size:
            return False, float(x[bad[0]])
        return True, None


class LogisticGamma(GammaFunctions):
    """Closed forms for the logistic law: Γ(η) = logit(η)/β."""

    def __init__(self, dist: Logistic | None = None):
        super().__init__(dist or Logistic())
        self.beta = self.dist.beta

    def gamma(self, eta):
        return _out(special.logit(_check_eta(eta)) / self.beta)

    def dgamma(self, eta):
        e = _check_eta(eta)
        return _out(1.0 / (self.beta * e * (1.0 - e)))

    def d2gamma(self, eta):
        e = _check_eta(eta)
        u = e * (1.0 - e)
        return _out((2.0 * e - 1.0) / (self.beta * u * u))

    def d3gamma(self, eta):
        e = _check_eta(eta)
        u = e * (1.0 - e)
        return _out(2.0 * (u + (1.0 - 2.0 * e) ** 2) / (self.beta * u ** 3))

    def dgamma_tilde(self, eta):
        e = _check_eta(eta)
        return _out(1.0 / (self.beta * e * (1.0 - e) ** 2))


def make_gamma(dist: IwpDistribution | str) -> GammaFunctions:
    """Build the Γ evaluator for a distribution or a name (``logistic``, ``gaussian``, ``table:<path>``)."""
    if isinstance(dist, str):
        if dist == "logistic":
            dist = Logistic()
        elif dist == "gaussian":
            dist = Gaussian()
        elif dist.startswith("table:"):
            dist = TabulatedDistribution.from_csv(dist[len("table:"):])
        else:
            raise ValueError(f"unknown distribution {dist!r}")
    if isinstance(dist, Logistic):
        return LogisticGamma(dist)
    return GammaFunctions(dist)
