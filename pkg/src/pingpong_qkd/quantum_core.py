"""Dense multipartite linear algebra: layouts, kets, operators and the
handful of spectral quantities the protocol analysis needs.

States are stored as numpy arrays in row-major Kronecker order, the first
subsystem of a layout being the most significant index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np


class LayoutError(ValueError):
    """Raised for unknown labels or dimension mismatches."""


class NotHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SystemLayout:
    """Ordered (label, dimension) pairs describing a tensor-product space."""

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        subs = tuple((str(lbl), int(dim)) for lbl, dim in self.subsystems)
        labels = [lbl for lbl, _ in subs]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate labels in layout: {labels}")
        for lbl, dim in subs:
            if dim < 2:
                raise LayoutError(f"subsystem {lbl!r} has dimension {dim} < 2")
        object.__setattr__(self, "subsystems", subs)

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "SystemLayout":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown subsystem label {label!r}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def index(self, **levels: int) -> int:
        """Flat basis index for the given per-subsystem levels."""
        if set(levels) != set(self.labels):
            raise LayoutError(f"need levels for exactly {self.labels}")
        return int(np.ravel_multi_index([levels[lbl] for lbl in self.labels], self.dims))

    def restrict(self, keep: Iterable[str]) -> "SystemLayout":
        keep = set(keep)
        for lbl in keep:
            self.axis(lbl)
        return SystemLayout(tuple(s for s in self.subsystems if s[0] in keep))

    def __add__(self, other: "SystemLayout") -> "SystemLayout":
        return SystemLayout(self.subsystems + other.subsystems)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Ket:
    amplitudes: np.ndarray
    layout: SystemLayout

    def __post_init__(self) -> None:
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (self.layout.size,):
            raise LayoutError(
                f"ket has {amps.size} amplitudes, layout needs {self.layout.size}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitude")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, **levels: int) -> complex:
        return complex(self.amplitudes[self.layout.index(**levels)])

    def projector(self) -> "Operator":
        v = self.amplitudes
        return Operator(np.outer(v, v.conj()), self.layout)

    def __add__(self, other: "Ket") -> "Ket":
        _same_layout(self.layout, other.layout)
        return Ket(self.amplitudes + other.amplitudes, self.layout)

    def __sub__(self, other: "Ket") -> "Ket":
        _same_layout(self.layout, other.layout)
        return Ket(self.amplitudes - other.amplitudes, self.layout)

    def __mul__(self, c: complex) -> "Ket":
        return Ket(self.amplitudes * c, self.layout)

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> "Ket":
        return Ket(self.amplitudes / c, self.layout)


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix acting on ``layout``."""

    matrix: np.ndarray
    layout: SystemLayout

    def __post_init__(self) -> None:
        m = _frozen(self.matrix)
        n = self.layout.size
        if m.shape != (n, n):
            raise LayoutError(f"operator shape {m.shape} does not match layout size {n}")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.layout)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def __add__(self, other: "Operator") -> "Operator":
        _same_layout(self.layout, other.layout)
        return Operator(self.matrix + other.matrix, self.layout)

    def __sub__(self, other: "Operator") -> "Operator":
        _same_layout(self.layout, other.layout)
        return Operator(self.matrix - other.matrix, self.layout)

    def __mul__(self, c: complex) -> "Operator":
        return Operator(self.matrix * c, self.layout)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _same_layout(self.layout, other.layout)
        return Operator(self.matrix @ other.matrix, self.layout)


State = Union[Ket, Operator]


def _same_layout(a: SystemLayout, b: SystemLayout) -> None:
    if a.dims != b.dims:
        raise LayoutError(f"layout mismatch: {a.subsystems} vs {b.subsystems}")


def basis_ket(layout: SystemLayout, **levels: int) -> Ket:
    v = np.zeros(layout.size, dtype=complex)
    v[layout.index(**levels)] = 1.0
    return Ket(v, layout)


def identity(layout: SystemLayout) -> Operator:
    return Operator(np.eye(layout.size), layout)


def operator(matrix, *pairs: tuple[str, int]) -> Operator:
    """Shorthand: ``operator([[0, 1], [1, 0]], ("h", 2))``."""
    return Operator(np.asarray(matrix, dtype=complex), SystemLayout(tuple(pairs)))


def tensor_product(a: State, b: State) -> State:
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(np.kron(a.amplitudes, b.amplitudes), a.layout + b.layout)
    if isinstance(a, Operator) and isinstance(b, Operator):
        return Operator(np.kron(a.matrix, b.matrix), a.layout + b.layout)
    raise TypeError("tensor_product needs two kets or two operators")


def _target_axes(layout: SystemLayout, targets: Sequence[str]) -> list[int]:
    if isinstance(targets, str):
        targets = [targets]
    axes = [layout.axis(t) for t in targets]
    if len(set(axes)) != len(axes):
        raise LayoutError(f"repeated target in {targets}")
    return axes


def _apply_left(op: np.ndarray, tensor: np.ndarray, dims: tuple[int, ...],
                axes: list[int]) -> np.ndarray:
    """Contract ``op`` into the given axes of a tensor whose leading
    ``len(dims)`` axes carry the layout."""
    k = len(axes)
    tdims = [dims[a] for a in axes]
    op_t = op.reshape(tdims + tdims)
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), axes))
    # tensordot puts the contracted op axes first; move them back into place
    return np.moveaxis(out, list(range(k)), axes)


def apply_to_subsystems(op: Operator | np.ndarray, targets: Sequence[str],
                        state: State) -> State:
    """Act with ``op`` on ``targets`` (in the given order), identity elsewhere.

    For an operator ``state`` this is the left product ``O @ state``; use
    :func:`conjugate` for ``O rho O^dag``.
    """
    layout = state.layout
    axes = _target_axes(layout, targets)
    m = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    need = math.prod(layout.dims[a] for a in axes)
    if m.shape != (need, need):
        raise LayoutError(f"operator of shape {m.shape} cannot act on {list(targets)} (dim {need})")
    dims = layout.dims
    if isinstance(state, Ket):
        t = state.amplitudes.reshape(dims)
        return Ket(_apply_left(m, t, dims, axes).reshape(-1), layout)
    t = state.matrix.reshape(dims + (layout.size,))
    return Operator(_apply_left(m, t, dims, axes).reshape(layout.size, layout.size), layout)


def lift(op: Operator | np.ndarray, targets: Sequence[str], layout: SystemLayout) -> Operator:
    """Full-space matrix of ``op`` on ``targets``."""
    return apply_to_subsystems(op, targets, identity(layout))


def conjugate(op: Operator | np.ndarray, targets: Sequence[str], rho: Operator) -> Operator:
    """``O rho O^dag`` with ``O`` acting on ``targets``."""
    left = apply_to_subsystems(op, targets, rho)
    both = apply_to_subsystems(op, targets, left.dag)
    return both.dag


def partial_trace(rho: Operator, keep: Iterable[str]) -> Operator:
    layout = rho.layout
    keep = set(keep)
    kept_axes = [layout.axis(lbl) for lbl in layout.labels if lbl in keep]
    for lbl in keep:
        layout.axis(lbl)
    n = len(layout.dims)
    t = rho.matrix.reshape(layout.dims + layout.dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = list(letters[:n])
    col = [letters[n + i] if i in kept_axes else row[i] for i in range(n)]
    out = "".join(row[i] for i in kept_axes) + "".join(col[i] for i in kept_axes)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    sub = layout.restrict(keep)
    return Operator(reduced.reshape(sub.size, sub.size), sub)


def _as_matrix(m: Operator | np.ndarray) -> np.ndarray:
    return m.matrix if isinstance(m, Operator) else np.asarray(m, dtype=complex)


def hermitian_eigenvalues(m: Operator | np.ndarray, tol: float = 1e-13,
                          max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, descending, by cyclic Jacobi.

    Each rotation first removes the phase of the pivot element with a
    diagonal unitary and then applies a real Givens rotation, so the
    working matrix stays Hermitian throughout.
    """
    a = np.array(_as_matrix(m), dtype=complex)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise LayoutError(f"expected a square matrix, got shape {a.shape}")
    herm_err = float(np.max(np.abs(a - a.conj().T), initial=0.0))
    if herm_err > 1e-9:
        raise NotHermitianError(f"matrix is not Hermitian (max |A - A^H| = {herm_err:.3g})")
    a = 0.5 * (a + a.conj().T)
    scale = max(1.0, float(np.linalg.norm(a)))

    offdiag = ~np.eye(n, dtype=bool)

    def off(x: np.ndarray) -> float:
        return float(np.linalg.norm(x[offdiag]))

    for _ in range(max_sweeps):
        if off(a) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                # V = diag(1, conj(phase)) @ [[c, s], [-s, c]] on rows/cols (p, q)
                v = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ v
                a[idx, :] = v.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    else:
        if off(a) > tol * scale:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    return np.sort(np.diag(a).real)[::-1]


def von_neumann_entropy(rho: Operator | np.ndarray) -> float:
    """Entropy in bits."""
    m = _as_matrix(rho)
    tr = np.trace(m).real
    if abs(tr - 1.0) > 1e-9:
        raise ValueError(f"density operator has trace {tr}")
    evals = hermitian_eigenvalues(m)
    if evals.min() < -1e-9:
        raise ValueError(f"density operator has eigenvalue {evals.min():.3g} < 0")
    evals = evals[evals > 1e-15]
    return float(max(-np.sum(evals * np.log2(evals)), 0.0))


def trace_distance(rho: Operator | np.ndarray, sigma: Operator | np.ndarray) -> float:
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise LayoutError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(0.5 * np.sum(np.abs(hermitian_eigenvalues(a - b))))
