"""Service-time distributions: sampling, Laplace transforms and moments.

Every distribution G here satisfies G(0) = 0 (no zero-size messages) and
has a finite, strictly positive mean 1/mu.  Besides the plain transform
Ghat(s) = E[exp(-s * sigma)], the stationary-excess transform
mu * (1 - Ghat(s)) / s is exposed because it shows up in every
age-of-information formula downstream.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = ["ServiceDistribution", "parse_dist"]

# below this |s| the removable singularity of the excess transform is
# resolved by its limit value
_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class ServiceDistribution:
    """A service-time law with sampler, Laplace transform and moments.

    Use the constructors :meth:`exponential`, :meth:`deterministic` or
    :meth:`generic` instead of instantiating directly.
    """

    kind: str                      # "exp" | "det" | "generic"
    rate: float = 0.0              # exp only
    value: float = 0.0             # det only
    _sampler: Optional[Callable] = field(default=None, repr=False)
    _transform: Optional[Callable] = field(default=None, repr=False)
    _mean: float = 0.0
    _second_moment: float = 0.0
    _pdf: Optional[Callable] = field(default=None, repr=False)

    # -- constructors ------------------------------------------------------

    @classmethod
    def exponential(cls, rate: float) -> "ServiceDistribution":
        if rate <= 0:
            raise ValueError(f"exponential rate must be positive, got {rate}")
        return cls(kind="exp", rate=float(rate))

    @classmethod
    def deterministic(cls, value: float) -> "ServiceDistribution":
        if value <= 0:
            raise ValueError(f"deterministic size must be positive, got {value}")
        return cls(kind="det", value=float(value))

    @classmethod
    def generic(
        cls,
        sampler: Callable,
        transform: Callable,
        mean: float,
        second_moment: float = math.inf,
        pdf: Optional[Callable] = None,
    ) -> "ServiceDistribution":
        """Caller-supplied law: ``sampler(rng, size)``, transform evaluator,
        mean and second moment (may be ``inf``).  ``pdf`` is optional and
        only needed for kernel quadrature."""
        if mean <= 0 or not math.isfinite(mean):
            raise ValueError(f"mean must be positive and finite, got {mean}")
        return cls(
            kind="generic",
            _sampler=sampler,
            _transform=transform,
            _mean=float(mean),
            _second_moment=float(second_moment),
            _pdf=pdf,
        )

    # -- basic quantities --------------------------------------------------

    @property
    def mean(self) -> float:
        if self.kind == "exp":
            return 1.0 / self.rate
        if self.kind == "det":
            return self.value
        return self._mean

    @property
    def mu(self) -> float:
        """Service rate mu = 1 / E[sigma]."""
        return 1.0 / self.mean

    def moment(self, p: int) -> float:
        """E[sigma^p] for p in {1, 2}; may be +inf for a generic law."""
        if p == 1:
            return self.mean
        if p == 2:
            if self.kind == "exp":
                return 2.0 / self.rate**2
            if self.kind == "det":
                return self.value**2
            return self._second_moment
        raise ValueError(f"moment order must be 1 or 2, got {p}")

    # -- transforms --------------------------------------------------------

    def laplace(self, s: complex) -> complex:
        """Ghat(s) = E[exp(-s * sigma)].

        Analytic for Re(s) >= 0; the exponential variant extends to
        Re(s) > -rate and the deterministic one to the whole plane.
        """
        s = complex(s)
        if self.kind == "exp":
            # real axis past the pole: the expectation truly diverges;
            # off-axis the rational form is the analytic continuation
            # contour inversion relies on
            if s.imag == 0.0 and s.real <= -self.rate:
                raise ValueError(
                    f"laplace transform of exp({self.rate}) undefined at s={s.real}"
                )
            return self.rate / (self.rate + s)
        if self.kind == "det":
            return cmath.exp(-s * self.value)
        if s.real < 0:
            raise ValueError("generic transform only defined for Re(s) >= 0")
        return complex(self._transform(s))

    def laplace_excess(self, s: complex) -> complex:
        """Transform of the stationary-excess law: mu * (1 - Ghat(s)) / s.

        The s = 0 singularity is removable; its limit is 1.
        """
        s = complex(s)
        if abs(s) < _ZERO_TOL:
            return 1.0 + 0.0j
        return self.mu * (1.0 - self.laplace(s)) / s

    def laplace_deriv(self, s: complex) -> complex:
        """Ghat'(s) = -E[sigma * exp(-s * sigma)]."""
        s = complex(s)
        if self.kind == "exp":
            return -self.rate / (self.rate + s) ** 2
        if self.kind == "det":
            return -self.value * cmath.exp(-s * self.value)
        h = 1e-6
        return (self.laplace(s + h) - self.laplace(s - h)) / (2 * h)

    # -- sampling ----------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        """Draw service times; mutates ``rng`` (streams are per-caller)."""
        if self.kind == "exp":
            return rng.exponential(1.0 / self.rate, size)
        if self.kind == "det":
            if size is None:
                return self.value
            return np.full(size, self.value)
        return self._sampler(rng, size)

    @property
    def pdf(self) -> Optional[Callable]:
        """Density of G where available (used for kernel quadrature)."""
        if self.kind == "exp":
            rate = self.rate
            return lambda u: rate * math.exp(-rate * u) if u >= 0 else 0.0
        if self.kind == "det":
            return None  # point mass, handled in closed form
        return self._pdf

    def spec_string(self) -> str:
        if self.kind == "exp":
            return f"exp:{self.rate:g}"
        if self.kind == "det":
            return f"det:{self.value:g}"
        return "generic"


def parse_dist(spec: str) -> ServiceDistribution:
    """Parse a CLI/config distribution spec, ``exp:<rate>`` or ``det:<value>``."""
    try:
        name, _, arg = spec.partition(":")
        value = float(arg)
    except ValueError:
        raise ValueError(f"malformed distribution spec {spec!r}") from None
    if name == "exp":
        return ServiceDistribution.exponential(value)
    if name == "det":
        return ServiceDistribution.deterministic(value)
    raise ValueError(f"unknown distribution family {name!r} in {spec!r}")
