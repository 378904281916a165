"""One ping-pong round under the Wojcik attack, with Bob's trusted noise.

Subsystems are ``h`` (home qubit), ``t`` (travel mode) and Eve's ancillary
modes ``x``, ``y``; modes are three-level with |2> the vacuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .channels import (GadParams, ad_kraus_mode, ad_kraus_qubit, apply_channel,
                       gad_kraus, gad_kraus_mode)
from .quantum_core import (Ket, Operator, SystemLayout, apply_to_subsystems,
                           basis_ket, partial_trace)

LAYOUT = SystemLayout.of(("h", 2), ("t", 3), ("x", 3), ("y", 3))
TXY = SystemLayout.of(("t", 3), ("x", 3), ("y", 3))
VACUUM = 2
MEMBERSHIP_TOL = 1e-9

BELL_LABELS = ("psi+", "psi-", "phi+", "phi-")


class ProtocolError(RuntimeError):
    """The state left the subspace the attack is defined on."""


class Variant(str, Enum):
    NOISELESS = "noiseless"
    CASE1 = "case1"
    CASE2 = "case2"
    GAD = "gad"


@dataclass(frozen=True)
class ProtocolScenario:
    variant: Variant
    lam: float = 0.0
    p: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"p must lie in [0, 1/2], got {self.p}")
        if self.variant is not Variant.GAD and self.p != 0.0:
            raise ValueError("p only applies to the gad variant")

    @classmethod
    def noiseless(cls) -> "ProtocolScenario":
        return cls(Variant.NOISELESS)


def _txy(t: int, x: int, y: int) -> np.ndarray:
    return basis_ket(TXY, t=t, x=x, y=y).amplitudes


@dataclass(frozen=True, eq=False)
class AttackMap:
    """A partial isometry given by orthonormal domain and image vectors."""

    domain: np.ndarray  # columns
    image: np.ndarray   # columns

    def __post_init__(self) -> None:
        for name in ("domain", "image"):
            cols = getattr(self, name)
            gram = cols.conj().T @ cols
            if np.max(np.abs(gram - np.eye(cols.shape[1]))) > 1e-12:
                raise ValueError(f"{name} vectors are not orthonormal")

    @property
    def forward(self) -> np.ndarray:
        return self.image @ self.domain.conj().T

    @property
    def backward(self) -> np.ndarray:
        return self.domain @ self.image.conj().T


def _wojcik_map() -> AttackMap:
    r = 1 / math.sqrt(2)
    domain = np.column_stack([_txy(0, 2, 0), _txy(0, 2, 1), _txy(1, 2, 0), _txy(1, 2, 1)])
    image = np.column_stack([
        r * (_txy(0, 0, 2) + _txy(2, 0, 1)),
        r * (_txy(0, 0, 2) - _txy(2, 0, 1)),
        r * (_txy(2, 1, 0) + _txy(1, 1, 2)),
        r * (_txy(2, 1, 0) - _txy(1, 1, 2)),
    ])
    return AttackMap(domain, image)


WOJCIK = _wojcik_map()


def _apply_partial_isometry(state: Ket, iso: np.ndarray, support: np.ndarray,
                            what: str) -> Ket:
    proj = support @ support.conj().T
    amps = state.amplitudes.reshape(2, TXY.size)
    residual = np.linalg.norm(amps - amps @ proj.T)
    if residual > MEMBERSHIP_TOL:
        raise ProtocolError(f"state has weight {residual:.3g} outside the {what}")
    return apply_to_subsystems(iso, ["t", "x", "y"], state)


def initial_state() -> Ket:
    """|psi+>_{ht} |2>_x |0>_y."""
    a = basis_ket(LAYOUT, h=0, t=1, x=2, y=0)
    b = basis_ket(LAYOUT, h=1, t=0, x=2, y=0)
    return (a + b) / math.sqrt(2)


def wojcik_onward(state: Ket) -> Ket:
    return _apply_partial_isometry(state, WOJCIK.forward, WOJCIK.domain, "attack domain")


def wojcik_return(state: Ket) -> Ket:
    return _apply_partial_isometry(state, WOJCIK.backward, WOJCIK.image, "attack image")


# sigma_z on polarization; the vacuum picks up no phase
Z_MODE = np.diag([1.0, -1.0, 1.0]).astype(complex)


def alice_encode(state: Ket, j: int) -> Ket:
    if j not in (0, 1):
        raise ValueError(f"Alice's bit must be 0 or 1, got {j}")
    return state if j == 0 else apply_to_subsystems(Z_MODE, ["t"], state)


def returned_state(j: int) -> Ket:
    """Pure state in Bob's hands after the full attacked round."""
    return wojcik_return(alice_encode(wojcik_onward(initial_state()), j))


def bob_add_noise(rho: Operator, scenario: ProtocolScenario) -> Operator:
    v, lam = scenario.variant, scenario.lam
    if v is Variant.NOISELESS:
        return rho
    if v is Variant.CASE1:
        return apply_channel(rho, ad_kraus_mode(lam), "t")
    if v is Variant.CASE2:
        rho = apply_channel(rho, ad_kraus_mode(lam), "t")
        return apply_channel(rho, ad_kraus_qubit(lam), "h")
    gp = GadParams(scenario.p, lam)
    rho = apply_channel(rho, gad_kraus_mode(gp), "t")
    return apply_channel(rho, gad_kraus(gp), "h")


@lru_cache(maxsize=4096)
def final_state(scenario: ProtocolScenario, j: int) -> Operator:
    return bob_add_noise(returned_state(j).projector(), scenario)


@lru_cache(maxsize=1)
def bell_projectors() -> tuple[np.ndarray, ...]:
    """Bell projectors on the polarization block of h (x) t, as 6x6 matrices
    in the order psi+, psi-, phi+, phi-."""
    ht = SystemLayout.of(("h", 2), ("t", 3))

    def k(h: int, t: int) -> np.ndarray:
        return basis_ket(ht, h=h, t=t).amplitudes

    r = 1 / math.sqrt(2)
    vecs = [r * (k(0, 1) + k(1, 0)), r * (k(0, 1) - k(1, 0)),
            r * (k(0, 0) + k(1, 1)), r * (k(0, 0) - k(1, 1))]
    return tuple(np.outer(v, v.conj()) for v in vecs)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """P[A, E, B] with A in {0,1}, E in {0,1,2}, B in {0..3} (Bell index)."""

    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.p, dtype=float)
        if p.shape != (2, 3, 4):
            raise ValueError(f"joint distribution must have shape (2, 3, 4), got {p.shape}")
        if p.min(initial=0.0) < -1e-12:
            raise ValueError(f"negative probability {p.min():.3g}")
        p = np.clip(p, 0.0, None)
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"joint distribution sums to {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __getitem__(self, idx):
        return self.p[idx]

    def max_deviation(self, other: "JointDistribution") -> float:
        return float(np.max(np.abs(self.p - other.p)))


def outcome_probabilities(rho: Operator) -> np.ndarray:
    """Unnormalised table [E, B] of Tr[(Pi_B (x) I_x (x) |E><E|_y) rho]."""
    t = rho.matrix.reshape(6, 3, 3, 6, 3, 3)
    # trace out x, keep the y diagonal
    ht_by_y = np.einsum("axebxe->eab", t)
    return np.array([[np.trace(pb @ ht_by_y[e]).real for pb in bell_projectors()]
                     for e in range(3)])


def vacuum_weight(rho: Operator) -> float:
    """Population of the travel-mode vacuum at Bob's measurement."""
    proj = np.zeros((3, 3))
    proj[VACUUM, VACUUM] = 1.0
    return float(np.trace(apply_to_subsystems(proj, ["t"], rho).matrix).real)


def measure_joint(scenario: ProtocolScenario) -> JointDistribution:
    table = np.zeros((2, 3, 4))
    for j in (0, 1):
        table[j] = 0.5 * outcome_probabilities(final_state(scenario, j))
    total = table.sum()
    if abs(total - 1.0) > 1e-9:
        raise ProtocolError(f"measurement statistics sum to {total!r}")
    return JointDistribution(table)


def closed_form_joint(scenario: ProtocolScenario) -> JointDistribution:
    """The published analytic P_AEB tables (noiseless, case 1, case 2)."""
    v, lam = scenario.variant, scenario.lam
    p = np.zeros((2, 3, 4))
    if v is Variant.NOISELESS:
        p[0, 0, 0] = 0.5
        p[1, 0:2, 0:2] = 1 / 8
    elif v is Variant.CASE1:
        s = math.sqrt(1 - lam)
        p[0, 0, 0] = (s + 1) ** 2 / 8
        p[0, 0, 1] = (s - 1) ** 2 / 8
        p[0, 0, 2] = p[0, 0, 3] = p[1, 0, 2] = p[1, 0, 3] = lam / 8
        p[1, 0, 0] = p[1, 0, 1] = 1 / 8
        p[1, 1, 0] = p[1, 1, 1] = (1 - lam) / 8
    elif v is Variant.CASE2:
        p[0, 0, 0] = (1 - lam) / 2
        p[0, 0, 2] = p[0, 0, 3] = p[1, 0, 2] = p[1, 0, 3] = lam / 4
        p[1, 0:2, 0:2] = (1 - lam) / 8
    else:
        raise ValueError(f"no closed form for variant {v.value!r}")
    return JointDistribution(p)


def eve_ensemble(scenario: ProtocolScenario) -> list[tuple[float, Operator]]:
    return [(0.5, partial_trace(final_state(scenario, j), ["x", "y"])) for j in (0, 1)]


def bob_ensemble(scenario: ProtocolScenario) -> list[tuple[float, Operator]]:
    return [(0.5, partial_trace(final_state(scenario, j), ["h", "t"])) for j in (0, 1)]
