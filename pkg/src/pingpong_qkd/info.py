"""Shannon and Holevo quantities, key rates, and the published closed forms."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .protocol import (JointDistribution, ProtocolScenario, Variant, bob_ensemble,
                       closed_form_joint, eve_ensemble, measure_joint)
from .quantum_core import Operator, von_neumann_entropy

PAIRS = {"AB": 1, "AE": 2, "EB": 0}  # axis summed out of P[A, E, B]
_ZERO = 1e-15


def marginalize(joint: JointDistribution | np.ndarray, pair: str) -> np.ndarray:
    """Two-index marginal; ``EB`` is returned indexed [E, B]."""
    p = joint.p if isinstance(joint, JointDistribution) else np.asarray(joint)
    try:
        axis = PAIRS[pair]
    except KeyError:
        raise ValueError(f"pair must be one of {sorted(PAIRS)}, got {pair!r}") from None
    return p.sum(axis=axis)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > _ZERO]
    return float(-np.sum(p * np.log2(p)))


def mutual_information(p2d) -> float:
    p = np.asarray(p2d, dtype=float)
    if p.ndim != 2:
        raise ValueError("expected a two-dimensional distribution")
    if p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"not a normalised distribution (sum {p.sum()!r}, min {p.min()!r})")
    p = np.clip(p, 0.0, None)
    rows, cols = p.sum(axis=1), p.sum(axis=0)
    mask = p > _ZERO
    ratio = p[mask] / np.outer(rows, cols)[mask]
    return max(float(np.sum(p[mask] * np.log2(ratio))), 0.0)


def holevo_bound(ensemble: Sequence[tuple[float, Operator]]) -> float:
    probs = np.array([pr for pr, _ in ensemble], dtype=float)
    if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"ensemble weights must be a distribution, got {probs}")
    avg = sum(pr * rho.matrix for pr, rho in ensemble)
    chi = von_neumann_entropy(avg) - sum(pr * von_neumann_entropy(rho) for pr, rho in ensemble)
    if chi < -1e-9:
        raise ArithmeticError(f"negative Holevo quantity {chi}")
    return max(chi, 0.0)


@dataclass(frozen=True)
class KeyRateReport:
    lam: float
    i_ab: float
    i_ae: float
    chi_ae: float
    chi_ab: float

    @property
    def k_min(self) -> float:
        return self.i_ab - self.chi_ae

    @property
    def k_max(self) -> float:
        return self.i_ab - self.i_ae

    def as_dict(self) -> dict:
        return {**asdict(self), "k_min": self.k_min, "k_max": self.k_max}

    def violations(self, tol: float = 1e-9) -> list[str]:
        """Checks every report must pass; empty when consistent."""
        out = []
        for name in ("i_ab", "i_ae", "chi_ae", "chi_ab"):
            v = getattr(self, name)
            if not (math.isfinite(v) and -tol <= v <= 2 + tol):
                out.append(f"{name}={v!r} outside [0, 2]")
        if abs(self.chi_ae - self.i_ae) > tol:
            out.append(f"chi_ae={self.chi_ae!r} differs from i_ae={self.i_ae!r}")
        if self.i_ab > self.chi_ab + tol:
            out.append(f"i_ab={self.i_ab!r} exceeds chi_ab={self.chi_ab!r}")
        return out


def key_rates(scenario: ProtocolScenario) -> KeyRateReport:
    joint = measure_joint(scenario)
    return KeyRateReport(
        lam=scenario.lam,
        i_ab=mutual_information(marginalize(joint, "AB")),
        i_ae=mutual_information(marginalize(joint, "AE")),
        chi_ae=holevo_bound(eve_ensemble(scenario)),
        chi_ab=holevo_bound(bob_ensemble(scenario)),
    )


def _check_unit(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")


def closed_form_iae(lam: float) -> float:
    """Published Alice-Eve information, converted to bits."""
    _check_unit(lam)
    return (1 + 0.5 * math.log2(2 / (lam + 3))
            + 0.25 * (lam + 1) * math.log2((lam + 1) / (lam + 3)))


def closed_form_iab_case2(lam: float) -> float:
    _check_unit(lam)
    return 0.75 * (1 - lam) * math.log2(4 / 3)


def iab_case1_as_printed(lam: float) -> float:
    """The published long-form case-1 Alice-Bob information, term by term.

    Kept as a cross-check only: away from lambda = 0 it does not match the
    mutual information of the published case-1 table. Terms whose
    coefficient vanishes are dropped (0 log 0 = 0).
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda must lie in [0, 1), got {lam}")
    s = math.sqrt(1 - lam)
    terms = [
        (lam - 2 * (s + 1), (-lam + 2 * s + 2) / (-lam + s + 2)),
        (lam - 2, (lam - 2) / (lam - s - 2)),
        (lam - 2, (lam - 2) / (lam + s - 2)),
        (lam, (lam + 2 * s - 2) / (lam + s - 2)),
        (2 * (s - 1), (lam + 2 * s - 2) / (lam + s - 2)),
    ]
    total = -2 * lam
    for coeff, arg in terms:
        if coeff == 0:
            continue
        if arg <= 0:
            raise ArithmeticError(f"log argument {arg!r} <= 0 at lambda={lam}")
        total += coeff * math.log2(arg)
    return -total / 8


def published_key_rate(variant: Variant | str, lam: float) -> float:
    """k_max from the published tables and closed-form Alice-Eve information."""
    joint = closed_form_joint(ProtocolScenario(Variant(variant), lam))
    return mutual_information(marginalize(joint, "AB")) - closed_form_iae(lam)
