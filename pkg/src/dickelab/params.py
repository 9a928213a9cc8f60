"""Model selection and physical parameters.

Rates and interaction strengths are angular frequencies; the natural choice
is gamma_c = 1 (or gamma_i = 1 for the independent-decay model) so that all
other quantities are dimensionless multiples of the decay rate.

Model variants and their Hamiltonians (all with the 1/N interaction scaling):

============== ==========================================================
INDEPENDENT_XY (V/N)(Jx^2 - Jy^2), per-atom decay at rate gamma_i
COLLECTIVE_XY  (V/N)(Jx^2 - Jy^2), collective decay at rate gamma_c
DRIVEN         (Vx/N) Jx^2 + Omega Jx, collective decay
GENERAL        (Vx/N) Jx^2 + (Vy/N) Jy^2 + Omega Jx, collective decay
============== ==========================================================

For the XY variants the single coupling V maps to (vx, vy) = (V, -V).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import InvalidParameterError


class Model(enum.Enum):
    INDEPENDENT_XY = "independent_xy"
    COLLECTIVE_XY = "collective_xy"
    DRIVEN = "driven"
    GENERAL = "general"


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of one model instance.

    ``n_atoms`` is only consulted by the quantum backends; mean-field and
    Gaussian-fluctuation calculations are N-independent.
    """

    model: Model
    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0
    gamma_i: float = 0.0
    gamma_c: float = 1.0
    n_atoms: int = 0

    def __post_init__(self):
        if self.gamma_i < 0 or self.gamma_c < 0:
            raise InvalidParameterError("decay rates must be non-negative")
        if self.n_atoms < 0:
            raise InvalidParameterError("n_atoms must be non-negative")
        if self.model is Model.INDEPENDENT_XY:
            if abs(self.vx + self.vy) > 1e-12 * max(1.0, abs(self.vx)):
                raise InvalidParameterError(
                    "INDEPENDENT_XY requires vy = -vx (XY anisotropy)"
                )
            if self.omega != 0.0:
                raise InvalidParameterError("INDEPENDENT_XY has no drive term")
            if self.gamma_i <= 0:
                raise InvalidParameterError("INDEPENDENT_XY requires gamma_i > 0")
        elif self.model is Model.COLLECTIVE_XY:
            if abs(self.vx + self.vy) > 1e-12 * max(1.0, abs(self.vx)):
                raise InvalidParameterError(
                    "COLLECTIVE_XY requires vy = -vx (XY anisotropy)"
                )
            if self.omega != 0.0:
                raise InvalidParameterError("COLLECTIVE_XY has no drive term")
            if self.gamma_c <= 0:
                raise InvalidParameterError("COLLECTIVE_XY requires gamma_c > 0")
        elif self.model is Model.DRIVEN:
            if self.vy != 0.0:
                raise InvalidParameterError("DRIVEN omits the Jy^2 term (vy = 0)")
            if self.gamma_c <= 0:
                raise InvalidParameterError("DRIVEN requires gamma_c > 0")
        elif self.model is Model.GENERAL:
            if self.gamma_c <= 0:
                raise InvalidParameterError("GENERAL requires gamma_c > 0")

    @property
    def v(self) -> float:
        """XY coupling V for the two XY variants."""
        if self.model not in (Model.INDEPENDENT_XY, Model.COLLECTIVE_XY):
            raise InvalidParameterError(f"{self.model} has no single XY coupling")
        return self.vx

    @property
    def gamma(self) -> float:
        """The decay rate that sets the unit for this model."""
        if self.model is Model.INDEPENDENT_XY:
            return self.gamma_i
        return self.gamma_c

    def with_atoms(self, n_atoms: int) -> "ModelParams":
        return replace(self, n_atoms=int(n_atoms))


def independent_xy(v: float, gamma_i: float = 1.0, n_atoms: int = 0) -> ModelParams:
    """XY model with per-atom spontaneous decay."""
    return ModelParams(
        Model.INDEPENDENT_XY,
        vx=v,
        vy=-v,
        gamma_i=gamma_i,
        gamma_c=0.0,
        n_atoms=n_atoms,
    )


def collective_xy(v: float, gamma_c: float = 1.0, n_atoms: int = 0) -> ModelParams:
    """XY model with collective (superradiant) decay."""
    return ModelParams(
        Model.COLLECTIVE_XY, vx=v, vy=-v, gamma_c=gamma_c, n_atoms=n_atoms
    )


def driven(
    vx: float, omega: float, gamma_c: float = 1.0, n_atoms: int = 0
) -> ModelParams:
    """One-axis twisting plus transverse drive with collective decay."""
    return ModelParams(
        Model.DRIVEN, vx=vx, vy=0.0, omega=omega, gamma_c=gamma_c, n_atoms=n_atoms
    )


def general(
    vx: float,
    vy: float,
    omega: float,
    gamma_c: float = 1.0,
    n_atoms: int = 0,
) -> ModelParams:
    """Anisotropic interaction plus drive with collective decay."""
    return ModelParams(
        Model.GENERAL, vx=vx, vy=vy, omega=omega, gamma_c=gamma_c, n_atoms=n_atoms
    )


def critical_drive(params: ModelParams) -> float:
    """Drive strength at which the stable fixed point disappears.

    For the collective-decay family this is
    (gamma_c^2 + 4 Vx Vy) / (2 sqrt(gamma_c^2 + 4 Vy^2)); it may come out
    non-positive, in which case no drive strength admits a fixed point.
    """
    gc = params.gamma_c
    return (gc * gc + 4.0 * params.vx * params.vy) / (
        2.0 * math.sqrt(gc * gc + 4.0 * params.vy * params.vy)
    )
