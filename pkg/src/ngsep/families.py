"""Parametric source families: descriptors, parsing, exact standardization
constants and samplers.

Supported families (all returned standardized to zero mean, unit variance):

* ``gaussian``
* ``uniform``               uniform on an interval
* ``exponential``           rate-1 exponential
* ``laplace``               double exponential
* ``gamma(shape)``          gamma with positive shape
* ``exppower(shape)``       symmetric density proportional to exp(-tau*|z|^shape)
* ``normal_mixture(pi,mu)`` two-component location mixture of unit normals

The scale parameters of the base laws are immaterial: every family is
standardized by its exact theoretical mean and standard deviation, so the
standardized law depends only on the shape arguments.
"""

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

FAMILY_NAMES = (
    "gaussian",
    "uniform",
    "exponential",
    "laplace",
    "gamma",
    "exppower",
    "normal_mixture",
)

# E g^j for a standard normal, j = 0..6
_STD_NORMAL_MOMENTS = (1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0)


@dataclass(frozen=True)
class SourceFamily:
    name: str
    shape: float | None = None
    pi: float | None = None
    mu: float | None = None

    def __post_init__(self):
        if self.name not in FAMILY_NAMES:
            raise ValueError(f"unknown family {self.name!r}")
        if self.name in ("gamma", "exppower"):
            if self.shape is None or self.shape <= 0:
                raise ValueError(f"{self.name} needs a positive shape parameter")
        if self.name == "normal_mixture":
            if self.pi is None or not (0.0 < self.pi < 1.0):
                raise ValueError("normal_mixture needs pi in (0, 1)")
            if self.mu is None or self.mu == 0.0:
                raise ValueError("normal_mixture needs a nonzero location offset mu")

    def __str__(self):
        if self.name == "gamma" or self.name == "exppower":
            return f"{self.name}({self.shape:g})"
        if self.name == "normal_mixture":
            return f"normal_mixture({self.pi:g},{self.mu:g})"
        return self.name


_FAMILY_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def parse_family(text):
    """Parse a family descriptor such as ``gamma(1.5)`` or
    ``normal_mixture(0.3,4)``."""
    m = _FAMILY_RE.match(text.strip().lower())
    if not m:
        raise ValueError(f"cannot parse family descriptor {text!r}")
    name, args = m.group(1), m.group(2)
    params = [float(a) for a in args.split(",")] if args else []
    if name in ("gaussian", "uniform", "exponential", "laplace"):
        if params:
            raise ValueError(f"{name} takes no parameters")
        return SourceFamily(name)
    if name in ("gamma", "exppower"):
        if len(params) != 1:
            raise ValueError(f"{name} takes exactly one shape parameter")
        return SourceFamily(name, shape=params[0])
    if name == "normal_mixture":
        if len(params) != 2:
            raise ValueError("normal_mixture takes (pi, mu)")
        return SourceFamily(name, pi=params[0], mu=params[1])
    raise ValueError(f"unknown family {name!r}")


def is_gaussian(family):
    return family.name == "gaussian"


def exppower_scale(shape):
    """Rate constant tau making exp(-tau |z|^shape) have unit variance."""
    return (gamma_fn(3.0 / shape) / gamma_fn(1.0 / shape)) ** (shape / 2.0)


def exppower_abs_moment(r, shape, tau):
    """E |z|^r for the density proportional to exp(-tau |z|^shape)."""
    return tau ** (-r / shape) * gamma_fn((r + 1.0) / shape) / gamma_fn(1.0 / shape)


def mixture_standardized_moments(pi, mu):
    """Standardized moments of orders 2..6 of the two-component normal
    location mixture, by exact central-moment expansion."""
    weights = (pi, 1.0 - pi)
    locs = (0.0, mu)
    mean = (1.0 - pi) * mu
    var = 1.0 + pi * (1.0 - pi) * mu * mu
    out = []
    for r in range(2, 7):
        total = 0.0
        for w_i, c_i in zip(weights, locs):
            delta = c_i - mean
            total += w_i * sum(
                math.comb(r, j) * _STD_NORMAL_MOMENTS[j] * delta ** (r - j)
                for j in range(r + 1)
            )
        out.append(total / var ** (r / 2.0))
    return tuple(out)


def closed_standardized_moments(family):
    """Exact standardized moments (m3, m4, m5, m6) for the families with a
    closed form, ``None`` for the shape families handled by quadrature."""
    if family.name == "gaussian":
        return (0.0, 3.0, 0.0, 15.0)
    if family.name == "uniform":
        return (0.0, 9.0 / 5.0, 0.0, 27.0 / 7.0)
    if family.name == "exponential":
        return (2.0, 9.0, 44.0, 265.0)
    if family.name == "laplace":
        return (0.0, 6.0, 0.0, 90.0)
    if family.name == "normal_mixture":
        _, m3, m4, m5, m6 = mixture_standardized_moments(family.pi, family.mu)
        return (m3, m4, m5, m6)
    return None


def sample_standardized(family, n, rng):
    """Draw n standardized variates; standardization uses the family's exact
    mean and standard deviation, never the sample's."""
    if family.name == "gaussian":
        return rng.standard_normal(n)
    if family.name == "uniform":
        return (rng.random(n) - 0.5) * math.sqrt(12.0)
    if family.name == "exponential":
        return rng.exponential(1.0, n) - 1.0
    if family.name == "laplace":
        return rng.laplace(0.0, 1.0, n) / math.sqrt(2.0)
    if family.name == "gamma":
        a = family.shape
        return (rng.gamma(a, 1.0, n) - a) / math.sqrt(a)
    if family.name == "exppower":
        lam = family.shape
        # with tau = 1, |z|^lam is Gamma(1/lam) distributed
        mag = rng.gamma(1.0 / lam, 1.0, n) ** (1.0 / lam)
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        sd = math.sqrt(gamma_fn(3.0 / lam) / gamma_fn(1.0 / lam))
        return signs * mag / sd
    if family.name == "normal_mixture":
        pi, mu = family.pi, family.mu
        locs = np.where(rng.random(n) < pi, 0.0, mu)
        x = rng.standard_normal(n) + locs
        mean = (1.0 - pi) * mu
        sd = math.sqrt(1.0 + pi * (1.0 - pi) * mu * mu)
        return (x - mean) / sd
    raise ValueError(f"unknown family {family.name!r}")
