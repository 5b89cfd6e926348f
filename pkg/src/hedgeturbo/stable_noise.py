"""Symmetric alpha-stable noise: sampling, characteristic function, and
Cauchy-Gaussian mixture density approximations.

Two scale conventions meet here. An SaS law is parameterized by its
dispersion ``gamma`` (CF ``exp(-gamma |w|^alpha)``), while the Cauchy-Gaussian
mixture is parameterized by a *scale* ``c`` with ``gamma = c**alpha``. Use
:func:`sas_density` to go from an SaS hypothesis to an evaluable density.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import integrate

__all__ = [
    "CG",
    "DENSITY_FLOOR",
    "AlphaStableParams",
    "GsnrSpec",
    "CauchyDensity",
    "GaussianDensity",
    "BCGMDensity",
    "MixtureDensity",
    "ChannelDensity",
    "QuadratureError",
    "sas_char_fn",
    "sas_sample",
    "epsilon_bcgm",
    "epsilon_mebcgm_quadratic",
    "epsilon_mebcgm_integral",
    "bcgm_pdf",
    "sas_density",
    "density_eval",
    "integrate_density",
    "geometric_power",
    "gsnr_to_dispersion",
    "dispersion_to_gsnr",
]

#: exp(Euler-Mascheroni constant)
CG = math.exp(0.57721566490153286)

#: Lower bound applied to densities before taking logarithms.
DENSITY_FLOOR = 1e-300

_QUAD_UPPER = 50.0


class QuadratureError(RuntimeError):
    """Numerical integration did not reach the requested tolerance."""


@dataclass(frozen=True)
class AlphaStableParams:
    """Characteristic exponent ``alpha`` and dispersion ``gamma`` of an SaS law."""

    alpha: float
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def scale(self) -> float:
        return self.gamma ** (1.0 / self.alpha)


@dataclass(frozen=True)
class GsnrSpec:
    gsnr_db: float
    amplitude: float = 1.0
    cg: float = CG

    def __post_init__(self):
        if not self.amplitude > 0.0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")

    @property
    def linear(self) -> float:
        return 10.0 ** (self.gsnr_db / 10.0)


def sas_char_fn(p: AlphaStableParams, omega):
    """Characteristic function ``exp(-gamma |omega|^alpha)``; real by symmetry."""
    return np.exp(-p.gamma * np.abs(omega) ** p.alpha)


def _standard_sas(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    # Chambers-Mallows-Stuck, symmetric case, unit dispersion.
    v = rng.uniform(-0.5 * np.pi, 0.5 * np.pi, size=size)
    w = -np.log1p(-rng.random(size=size))
    if alpha == 1.0:
        return np.tan(v)
    if alpha == 2.0:
        # the generic formula is exact here too; this branch avoids 0**(-0.5)
        return 2.0 * np.sin(v) * np.sqrt(w)
    return (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * v) / w) ** ((1.0 - alpha) / alpha)
    )


def sas_sample(p: AlphaStableParams, n, rng=None) -> np.ndarray:
    """Draw ``n`` i.i.d. SaS(alpha, gamma) samples.

    ``n`` may be an int or a shape tuple. ``rng`` is anything accepted by
    :func:`numpy.random.default_rng`.
    """
    rng = np.random.default_rng(rng)
    if np.isscalar(n) and n < 1:
        raise ValueError("n must be >= 1")
    return p.scale * _standard_sas(p.alpha, n, rng)


def _check_unit_interval_alpha(alpha: float):
    if not 1.0 <= alpha <= 2.0:
        raise ValueError(f"alpha must lie in [1, 2], got {alpha}")


def epsilon_bcgm(alpha: float) -> float:
    """Cauchy weight ``(4 - alpha^2) / (3 alpha^2)`` of the BCGM model."""
    _check_unit_interval_alpha(alpha)
    return (4.0 - alpha * alpha) / (3.0 * alpha * alpha)


def epsilon_mebcgm_quadratic(alpha: float) -> float:
    """Quadratic fit to the minimum-error Cauchy weight, clamped to [0, 1]."""
    _check_unit_interval_alpha(alpha)
    eps = 3.01753 - 2.53103 * alpha + 0.513504 * alpha * alpha
    return min(1.0, max(0.0, eps))


def _quad_with_tail(f, quad_tol: float) -> float:
    # every integrand is bounded by 2 exp(-w) beyond the cutoff
    tail = 2.0 * math.exp(-_QUAD_UPPER)
    if tail > quad_tol:
        raise QuadratureError("truncation tail exceeds requested tolerance")
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                f, 0.0, _QUAD_UPPER, epsabs=quad_tol, epsrel=0.0, limit=200
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    if err > quad_tol:
        raise QuadratureError(f"estimated error {err:.3g} > {quad_tol:.3g}")
    return value


def epsilon_mebcgm_integral(alpha: float, quad_tol: float = 1e-8) -> float:
    """Minimum-error Cauchy weight ``B_alpha / A`` by numerical quadrature.

    ``A`` is the squared distance between the unit Cauchy and variance-2
    Gaussian characteristic functions, ``B_alpha`` the projection of the
    SaS CF onto that direction.
    """
    _check_unit_interval_alpha(alpha)

    def b_integrand(w):
        wa = w**alpha
        return (
            math.exp(-w - wa)
            + math.exp(-2.0 * w * w)
            - math.exp(-w - w * w)
            - math.exp(-wa - w * w)
        )

    def a_integrand(w):
        return math.exp(-2.0 * w) + math.exp(-2.0 * w * w) - 2.0 * math.exp(-w - w * w)

    b = _quad_with_tail(b_integrand, quad_tol)
    a = _quad_with_tail(a_integrand, quad_tol)
    return b / a


def bcgm_pdf(x, alpha: float, gamma: float, eps: float):
    """Cauchy-Gaussian mixture density with scale ``gamma`` and Cauchy weight ``eps``.

    ``alpha`` does not enter the formula; it is accepted so that calls read
    like the model they evaluate.
    """
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    x = np.asarray(x, dtype=float)
    cauchy = gamma / (np.pi * (x * x + gamma * gamma))
    gauss = np.exp(-x * x / (4.0 * gamma * gamma)) / (2.0 * gamma * math.sqrt(math.pi))
    return eps * cauchy + (1.0 - eps) * gauss


@dataclass(frozen=True)
class CauchyDensity:
    scale: float

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale / (np.pi * (x * x + self.scale * self.scale))

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.log(self.scale / np.pi) - np.log(x * x + self.scale * self.scale)

    @property
    def alpha(self) -> float:
        return 1.0


@dataclass(frozen=True)
class GaussianDensity:
    variance: float

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-x * x / (2.0 * self.variance)) / math.sqrt(2.0 * math.pi * self.variance)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -x * x / (2.0 * self.variance) - 0.5 * math.log(2.0 * math.pi * self.variance)

    @property
    def alpha(self) -> float:
        return 2.0


@dataclass(frozen=True)
class BCGMDensity:
    """BCGM density for hypothesis ``alpha``; ``scale`` is ``dispersion**(1/alpha)``.

    ``rule`` selects the Cauchy weight: ``"mebcgm"`` (quadratic fit),
    ``"mebcgm-integral"`` (quadrature) or ``"bcgm"``.
    """

    alpha: float
    scale: float
    rule: str = "mebcgm"

    def __post_init__(self):
        _check_unit_interval_alpha(self.alpha)
        if self.rule not in _EPS_RULES:
            raise ValueError(f"unknown epsilon rule {self.rule!r}")
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")

    @property
    def eps(self) -> float:
        return _EPS_RULES[self.rule](self.alpha)

    def pdf(self, x):
        return bcgm_pdf(x, self.alpha, self.scale, self.eps)

    def logpdf(self, x):
        return np.log(np.maximum(self.pdf(x), DENSITY_FLOOR))


@dataclass(frozen=True)
class MixtureDensity:
    components: tuple  # of (weight, density)

    def __post_init__(self):
        comps = tuple((float(w), d) for w, d in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        weights = np.array([w for w, _ in comps])
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must be positive and sum to 1")
        object.__setattr__(self, "components", comps)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return sum(w * d.pdf(x) for w, d in self.components)

    def logpdf(self, x):
        return np.log(np.maximum(self.pdf(x), DENSITY_FLOOR))


ChannelDensity = Union[CauchyDensity, GaussianDensity, BCGMDensity, MixtureDensity]

_EPS_RULES = {
    "mebcgm": epsilon_mebcgm_quadratic,
    "mebcgm-integral": epsilon_mebcgm_integral,
    "bcgm": epsilon_bcgm,
}


def sas_density(alpha: float, gamma: float, rule: str = "mebcgm") -> ChannelDensity:
    """Density used to decode under the hypothesis SaS(alpha, gamma).

    The endpoints map to their closed forms, Cauchy(gamma) and N(0, 2 gamma);
    interior exponents get a BCGM with scale ``gamma**(1/alpha)``.
    """
    p = AlphaStableParams(alpha, gamma)
    if alpha == 1.0:
        return CauchyDensity(gamma)
    if alpha == 2.0:
        return GaussianDensity(2.0 * gamma)
    return BCGMDensity(alpha, p.scale, rule)


def density_eval(d: ChannelDensity, x):
    return d.pdf(x)


def _density_scale(d: ChannelDensity) -> float:
    if isinstance(d, GaussianDensity):
        return math.sqrt(d.variance)
    if isinstance(d, MixtureDensity):
        return max(_density_scale(c) for _, c in d.components)
    return d.scale


def integrate_density(d: ChannelDensity, half_width: float = 1e6) -> float:
    """Total mass of ``d``, integrating over ``[-R, R]`` with ``R = half_width * scale``.

    The part beyond ``R`` is added analytically: only Cauchy components carry
    non-negligible mass there, ``(2/pi) arctan(c / R)`` for scale ``c``.
    """
    s = _density_scale(d)
    upper = half_width * s
    # symmetric: integrate the positive half on a log-spaced set of panels
    edges = np.concatenate([[0.0], s * np.logspace(-2, math.log10(half_width), 40)])
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda t: float(d.pdf(t)), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += val
    return 2.0 * total + _cauchy_tail_mass(d, upper)


def _cauchy_tail_mass(d: ChannelDensity, upper: float) -> float:
    if isinstance(d, CauchyDensity):
        return 1.0 - 2.0 / math.pi * math.atan(upper / d.scale)
    if isinstance(d, BCGMDensity):
        return d.eps * (1.0 - 2.0 / math.pi * math.atan(upper / d.scale))
    if isinstance(d, MixtureDensity):
        return sum(w * _cauchy_tail_mass(c, upper) for w, c in d.components)
    return 0.0


def geometric_power(p: AlphaStableParams, cg: float = CG) -> float:
    """Geometric power ``S0 = (cg * gamma)**(1/alpha) / cg``."""
    return (cg * p.gamma) ** (1.0 / p.alpha) / cg


def gsnr_to_dispersion(spec: GsnrSpec, alpha: float) -> float:
    """Dispersion that puts SaS(alpha, .) noise at ``spec.gsnr_db`` for amplitude ``spec.amplitude``."""
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    s0 = spec.amplitude / math.sqrt(2.0 * spec.cg * spec.linear)
    return (spec.cg * s0) ** alpha / spec.cg


def dispersion_to_gsnr(p: AlphaStableParams, amplitude: float = 1.0, cg: float = CG) -> float:
    """GSNR in dB of SaS(alpha, gamma) noise against amplitude ``amplitude``."""
    s0 = geometric_power(p, cg)
    return 10.0 * math.log10((amplitude / s0) ** 2 / (2.0 * cg))
