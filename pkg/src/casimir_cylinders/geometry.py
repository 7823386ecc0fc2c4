"""Geometric configurations: eccentric annulus and cylinder-plane."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError


@dataclass(frozen=True)
class Geometry:
    """Two eccentric cylindrical shells of radii ``a < b``.

    ``eps`` is the distance between the two axes.  The shells must not
    intersect, which requires ``eps < b - a``.  ``length`` is the common
    cylinder length (assumed much larger than all radii).

    Dimensionless parameters: ``alpha = b/a`` and ``delta = eps/a``.
    """

    a: float
    b: float
    eps: float = 0.0
    length: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "eps", "length"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if not 0.0 < self.a < self.b:
            raise DomainError(f"need 0 < a < b, got a={self.a}, b={self.b}")
        if not 0.0 <= self.eps < self.b - self.a:
            raise DomainError(
                f"need 0 <= eps < b - a (non-intersecting shells), got "
                f"eps={self.eps}, b - a={self.b - self.a}"
            )
        if self.length <= 0.0:
            raise DomainError(f"length must be positive, got {self.length}")

    @property
    def alpha(self) -> float:
        return self.b / self.a

    @property
    def delta(self) -> float:
        return self.eps / self.a

    @property
    def gap(self) -> float:
        """Dimensionless closest surface separation, alpha - 1 - delta."""
        return self.alpha - 1.0 - self.delta

    @classmethod
    def from_dimensionless(cls, alpha, delta=0.0, a=1.0, length=1.0):
        return cls(a=a, b=alpha * a, eps=delta * a, length=length)

    def scaled(self, factor: float) -> "Geometry":
        """Same shape with every length multiplied by ``factor``."""
        if factor <= 0:
            raise DomainError("scale factor must be positive")
        return replace(
            self,
            a=factor * self.a,
            b=factor * self.b,
            eps=factor * self.eps,
            length=factor * self.length,
        )


@dataclass(frozen=True)
class CylPlaneGeometry:
    """A cylinder of radius ``a`` facing an infinite plane.

    ``h`` is the distance from the cylinder axis to the plane, so the
    surface-to-surface gap is ``h - a``.
    """

    a: float
    h: float
    length: float = 1.0

    def __post_init__(self):
        for name in ("a", "h", "length"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if not self.h > self.a > 0.0:
            raise DomainError(f"need h > a > 0, got a={self.a}, h={self.h}")
        if self.length <= 0.0:
            raise DomainError(f"length must be positive, got {self.length}")

    @property
    def gap(self) -> float:
        """Dimensionless surface separation, h/a - 1."""
        return self.h / self.a - 1.0
