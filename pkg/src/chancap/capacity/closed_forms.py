"""Closed-form capacities for the erasure and qubit depolarizing channels."""

from __future__ import annotations

from dataclasses import dataclass
from math import log2
from typing import NamedTuple

from ..channels import KrausChannel, complementary
from ..densemath import ValidationError
from ..states import BipartiteState
from .functionals import extended_entropy_gain


def _xlog2(x: float) -> float:
    return 0.0 if x == 0.0 else x * log2(x)


class QECForms(NamedTuple):
    chi_L_I: float
    C_E: float
    C1: float


def qec_closed_forms(eps: float, d: int, y: float) -> QECForms:
    """Erasure channel: unitary-encoding line, assisted and one-shot capacities.

    C_E = (1 - eps) 2 log2 d, C1 = C_E / 2 and
    chi_L_I(y) = C_E (1 - y / (2 log2 d)) for y in [0, 2 log2 d].
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps={eps!r} outside [0, 1]")
    if d < 2:
        raise ValueError(f"d={d!r} must be >= 2")
    ymax = 2 * log2(d)
    if not 0.0 <= y <= ymax + 1e-12:
        raise ValueError(f"y={y!r} outside [0, {ymax:g}]")
    c_e = (1.0 - eps) * ymax
    return QECForms(c_e * (1.0 - y / ymax), c_e, c_e / 2)


def qec_chi_integrand(eps: float, d: int, eps_op: KrausChannel, rho_sw: BipartiteState) -> float:
    """(1 - eps) (log2 d - E_{eps_op^c (x) id}[rho_SW])."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps={eps!r} outside [0, 1]")
    if eps_op.din != d or rho_sw.dimA != d:
        raise ValidationError(f"encoding/state signal dimension must be {d}")
    return (1.0 - eps) * (log2(d) - extended_entropy_gain(complementary(eps_op), rho_sw))


@dataclass(frozen=True)
class DepolarizingForms:
    lam: float
    C_E: float
    C: float

    def chi_star(self, q: float) -> float:
        """C_E (1 - q/2), the qubit line through (0, C_E) and (2, 0)."""
        return self.C_E * (1.0 - q / 2.0)


def depolarizing_closed_forms(lam: float) -> DepolarizingForms:
    """Qubit depolarizing channel lam I/2 + (1 - lam) rho."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam={lam!r} outside [0, 1]")
    c_e = 2.0 + _xlog2(1 - 3 * lam / 4) + 3 * (lam / 4) * (log2(lam / 4) if lam else 0.0)
    c = 1.0 + _xlog2(1 - lam / 2) + _xlog2(lam / 2)
    return DepolarizingForms(lam, c_e, c)
