"""Amplitude-damping family of channels and the damped Jaynes-Cummings
damping schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quantum_core import LayoutError, Operator, conjugate, trace_distance

_COMPLETENESS_TOL = 1e-9


@dataclass(frozen=True)
class DampingParams:
    """Lorentzian-bath parameters: ``g`` spectral width, ``gamma`` coupling."""

    g: float
    gamma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.g) and self.g > 0):
            raise ValueError(f"g must be > 0, got {self.g}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def regime(self) -> str:
        if 2 * self.gamma < self.g:
            return "markovian"
        if 2 * self.gamma > self.g:
            return "non-markovian"
        return "critical"


@dataclass(frozen=True)
class GadParams:
    p: float
    lam: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"GAD mixing p must lie in [0, 1/2], got {self.p}")
        _check_lambda(self.lam)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus: tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self) -> None:
        ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("channel needs at least one Kraus operator")
        d = ks[0].shape[0]
        for k in ks:
            if k.shape != (d, d):
                raise LayoutError("Kraus operators must be square and of equal size")
            k.setflags(write=False)
        err = self.completeness_error_of(ks)
        if err > _COMPLETENESS_TOL:
            raise ValueError(f"Kraus operators are not complete (error {err:.3g})")
        object.__setattr__(self, "kraus", ks)

    @staticmethod
    def completeness_error_of(ks) -> float:
        d = ks[0].shape[0]
        total = sum(k.conj().T @ k for k in ks)
        return float(np.max(np.abs(total - np.eye(d))))

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def completeness_error(self) -> float:
        return self.completeness_error_of(self.kraus)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """Apply to a bare ``dim x dim`` matrix."""
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ k.conj().T for k in self.kraus)


def _check_lambda(lam: float) -> None:
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"damping lambda must lie in [0, 1], got {lam}")


def jc_damping(params: DampingParams, t: float) -> float:
    """Damping probability lambda(t) of the damped Jaynes-Cummings model.

    With ``l = sqrt(g^2 - 2 gamma g)`` the surviving amplitude is
    ``e^{-gt/2} (cosh(lt/2) + (g/l) sinh(lt/2))``. Imaginary ``l`` switches
    to cos/sin and ``l = 0`` to the limit ``1 + gt/2``.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    g, gamma = params.g, params.gamma
    disc = g * g - 2.0 * gamma * g
    if disc > 0:
        l = math.sqrt(disc)
        bracket = math.cosh(l * t / 2) + (g / l) * math.sinh(l * t / 2)
    elif disc < 0:
        w = math.sqrt(-disc)
        bracket = math.cos(w * t / 2) + (g / w) * math.sin(w * t / 2)
    else:
        bracket = 1.0 + g * t / 2
    lam = 1.0 - math.exp(-g * t) * bracket * bracket
    if lam < -1e-9 or lam > 1 + 1e-9:
        raise ArithmeticError(f"lambda({t}) = {lam} escaped [0, 1]")
    return min(max(lam, 0.0), 1.0)


def ad_kraus_qubit(lam: float) -> KrausChannel:
    _check_lambda(lam)
    e0 = np.diag([1.0, math.sqrt(1 - lam)])
    e1 = np.array([[0.0, math.sqrt(lam)], [0.0, 0.0]])
    return KrausChannel((e0, e1), f"AD(lambda={lam:g})")


def ad_kraus_mode(lam: float) -> KrausChannel:
    """Amplitude damping on a polarization mode with vacuum level |2>."""
    _check_lambda(lam)
    e0 = np.diag([1.0, math.sqrt(1 - lam), 1.0])
    e1 = np.zeros((3, 3))
    e1[0, 1] = math.sqrt(lam)
    return KrausChannel((e0, e1), f"AD-mode(lambda={lam:g})")


def _gad_ops(p: float, lam: float) -> list[np.ndarray]:
    a, b = math.sqrt(1 - p), math.sqrt(p)
    sl, sr = math.sqrt(lam), math.sqrt(1 - lam)
    return [
        a * np.array([[1.0, 0.0], [0.0, sr]]),
        a * np.array([[0.0, sl], [0.0, 0.0]]),
        b * np.array([[0.0, 0.0], [sl, 0.0]]),
        b * np.array([[sr, 0.0], [0.0, 1.0]]),
    ]


def gad_kraus(params: GadParams) -> KrausChannel:
    return KrausChannel(tuple(_gad_ops(params.p, params.lam)),
                        f"GAD(p={params.p:g}, lambda={params.lam:g})")


def gad_kraus_mode(params: GadParams) -> KrausChannel:
    """GAD on the polarization block of a three-level mode.

    The vacuum weight is split sqrt(1-p) / sqrt(p) between the two Kraus
    operators that carry the identity-like diagonal, so vacuum populations
    pass through untouched.
    """
    vac = [math.sqrt(1 - params.p), 0.0, 0.0, math.sqrt(params.p)]
    ops = []
    for k, v in zip(_gad_ops(params.p, params.lam), vac):
        m = np.zeros((3, 3))
        m[:2, :2] = k
        m[2, 2] = v
        ops.append(m)
    return KrausChannel(tuple(ops), f"GAD-mode(p={params.p:g}, lambda={params.lam:g})")


def apply_channel(state: Operator, channel: KrausChannel, target: str) -> Operator:
    if state.layout.dim(target) != channel.dim:
        raise LayoutError(
            f"channel of dimension {channel.dim} cannot act on {target!r} "
            f"(dimension {state.layout.dim(target)})"
        )
    out = None
    for k in channel.kraus:
        term = conjugate(k, [target], state)
        out = term if out is None else out + term
    return out


def unitality_deviation(channel: KrausChannel) -> float:
    """Trace distance between E[I] and I, with I the unnormalised identity."""
    if channel.dim != 2:
        raise LayoutError(f"unitality probe is defined for qubit channels, got d={channel.dim}")
    eye = np.eye(2, dtype=complex)
    return trace_distance(channel(eye), eye)


@dataclass(frozen=True)
class WitnessReport:
    non_markovian: bool
    revival_intervals: list[tuple[float, float]]
    times: np.ndarray
    lambdas: np.ndarray


def nonmarkov_witness(params: DampingParams, t_max: float, n_points: int,
                      tol: float = 1e-12) -> WitnessReport:
    """Detect information backflow as decreases of lambda(t) on a grid.

    Under amplitude damping the trace distance of the evolved |0>, |1> pair
    is ``1 - lambda(t)``, so a drop in lambda is a revival of
    distinguishability.
    """
    if not (t_max > 0 and math.isfinite(t_max)):
        raise ValueError(f"t_max must be positive, got {t_max}")
    if n_points < 10:
        raise ValueError(f"need at least 10 grid points, got {n_points}")
    times = np.linspace(0.0, t_max, n_points)
    lams = np.array([jc_damping(params, float(t)) for t in times])
    falling = np.diff(lams) < -tol
    intervals: list[tuple[float, float]] = []
    start = None
    for i, f in enumerate(falling):
        if f and start is None:
            start = i
        elif not f and start is not None:
            intervals.append((float(times[start]), float(times[i])))
            start = None
    if start is not None:
        intervals.append((float(times[start]), float(times[-1])))
    return WitnessReport(bool(intervals), intervals, times, lams)
