"""Material parameters, permeability laws, and pointwise constitutive maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class PermeabilityError(ValueError):
    """Raised when a permeability evaluation is outside the admissible range."""


@dataclass
class MaterialParams:
    """Lame/Biot parameters.  Either (lam, mu) or (E, nu) must be given."""

    lam: float = None
    mu: float = None
    c0: float = 1.0
    alpha: float = 1.0
    mu_f: float = 1.0

    def __post_init__(self):
        if self.lam is None or self.mu is None:
            raise ValueError("lam and mu are required (use from_young_poisson)")
        if self.lam < 0 or self.mu <= 0:
            raise ValueError("need lam >= 0 and mu > 0")
        if self.c0 <= 0:
            raise ValueError("storativity c0 must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("Biot-Willis alpha must lie in [0, 1]")
        if self.mu_f <= 0:
            raise ValueError("fluid viscosity mu_f must be positive")

    @classmethod
    def from_young_poisson(cls, E, nu, **kwargs):
        lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
        mu = E / (2.0 * (1.0 + nu))
        return cls(lam=lam, mu=mu, **kwargs)


# Kozeny-Carman evaluations clamp zeta below the pole at 1 and count clamps.
KOZENY_CLAMP = 0.99


@dataclass
class PermeabilityLaw:
    """Scalar permeability coefficient kappa(zeta) multiplying the identity.

    variants:
      constant:       kappa = kappa0
      exponential:    kappa = k0/mu_f + (k1/mu_f) exp(k2 zeta)
      kozeny:         kappa = k0/mu_f + k1 zeta^3 / (mu_f (1 - zeta)^2)
      scaled-exp:     kappa = k0 kappa0 exp(k1 zeta) / mu_f
    """

    variant: str = "constant"
    kappa0: float = 1.0
    k0: float = 0.0
    k1: float = 0.0
    k2: float = 0.0
    clamp_count: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.variant not in ("constant", "exponential", "kozeny", "scaled-exp"):
            raise ValueError(f"unknown permeability variant {self.variant!r}")

    def __call__(self, params, zeta):
        """kappa at fluid content zeta (scalar or array)."""
        zeta = np.asarray(zeta, dtype=float)
        mu_f = params.mu_f
        if self.variant == "constant":
            value = np.full_like(zeta, self.kappa0 / mu_f)
        elif self.variant == "exponential":
            value = self.k0 / mu_f + (self.k1 / mu_f) * np.exp(self.k2 * zeta)
        elif self.variant == "scaled-exp":
            value = self.k0 * self.kappa0 * np.exp(self.k1 * zeta) / mu_f
        else:
            z = zeta
            if np.any(z > KOZENY_CLAMP):
                self.clamp_count += int(np.count_nonzero(z > KOZENY_CLAMP))
                z = np.minimum(z, KOZENY_CLAMP)
            if np.any(z == 1.0):
                raise PermeabilityError("Kozeny-Carman law evaluated at the zeta=1 pole")
            value = self.k0 / mu_f + self.k1 * z**3 / (mu_f * (1.0 - z) ** 2)
        if np.any(value <= 0.0):
            raise PermeabilityError(
                f"non-positive permeability for {self.variant!r} at zeta={zeta!r}"
            )
        return value if value.ndim else float(value)

    def derivative(self, params, zeta):
        """Analytic d kappa / d zeta."""
        zeta = np.asarray(zeta, dtype=float)
        mu_f = params.mu_f
        if self.variant == "constant":
            value = np.zeros_like(zeta)
        elif self.variant == "exponential":
            value = (self.k1 * self.k2 / mu_f) * np.exp(self.k2 * zeta)
        elif self.variant == "scaled-exp":
            value = self.k0 * self.kappa0 * self.k1 * np.exp(self.k1 * zeta) / mu_f
        else:
            z = np.minimum(zeta, KOZENY_CLAMP)
            value = self.k1 * (3.0 * z**2 * (1.0 - z) + 2.0 * z**3) / (
                mu_f * (1.0 - z) ** 3
            )
        return value if value.ndim else float(value)


def fluid_content(params, tr_d, p, phi0=None):
    """zeta = c0 p + alpha tr(d); porosity variant phi0 + (1-phi0)(c0 p + alpha tr d)."""
    base = params.c0 * np.asarray(p) + params.alpha * np.asarray(tr_d)
    if phi0 is None:
        return base
    return phi0 + (1.0 - phi0) * base


def hooke(params, d, tol=1e-10):
    """C d = lam tr(d) I + 2 mu d for a symmetric 2x2 tensor."""
    d = np.asarray(d, dtype=float)
    if abs(d[0, 1] - d[1, 0]) > tol * max(1.0, np.abs(d).max()):
        raise ValueError("hooke expects a symmetric tensor")
    return params.lam * np.trace(d) * np.eye(2) + 2.0 * params.mu * d


@dataclass
class ProblemData:
    """Loads and boundary data.  Fields are callables of (x, y) point arrays.

    ``f(points) -> (..., 2)`` body force, ``g(points) -> (...)`` mass source.
    Boundary maps associate a tag name with the datum on that part:
      dirichlet_displacement: natural data u_Gamma entering via H
      flux: natural data r_Gamma entering via G
      essential_traction: sigma.n prescribed by constraining stress DOFs
      essential_pressure: p prescribed by constraining pressure nodes
      slide: tangentially free sliding contact (u.n = 0 weakly)
    """

    f: object = None
    g: object = None
    dirichlet_displacement: dict = field(default_factory=dict)
    flux: dict = field(default_factory=dict)
    essential_traction: dict = field(default_factory=dict)
    essential_pressure: dict = field(default_factory=dict)
    slide: tuple = ()

    def __post_init__(self):
        seen = {}
        groups = {
            "dirichlet_displacement": self.dirichlet_displacement,
            "essential_traction": self.essential_traction,
        }
        for kind, mapping in groups.items():
            for tag in mapping:
                if tag in seen or tag in self.slide:
                    raise ValueError(f"tag {tag!r} bound to more than one displacement/stress condition")
                seen[tag] = kind
        for tag in self.slide:
            seen[tag] = "slide"
        pseen = set()
        for mapping in (self.flux, self.essential_pressure):
            for tag in mapping:
                if tag in pseen:
                    raise ValueError(f"tag {tag!r} bound to more than one pressure condition")
                pseen.add(tag)
