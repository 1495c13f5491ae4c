"""Schmidt form of two-qubit pure states and the entanglement measures
built on it.

A two-qubit pure state is brought to ``a|00> + b|11>`` with ``a >= b >= 0``
by local unitaries.  The same (a, b) pair parameterizes both shared
channels and Alice's measurement families.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._tolerances import NORM_TOL, UNITARY_TOL
from .statevec import PureState, is_unitary

__all__ = [
    "SchmidtPair",
    "LocalFrame",
    "schmidt_decompose",
    "entanglement_entropy",
    "channel_width",
]


@dataclass(frozen=True)
class SchmidtPair:
    """Real Schmidt coefficients with ``a >= b >= 0`` and ``a**2 + b**2 = 1``."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("Schmidt coefficients must be finite")
        if b < 0.0 or a < b:
            raise ValueError(f"need a >= b >= 0, got a={a}, b={b}")
        if abs(a * a + b * b - 1.0) > NORM_TOL:
            raise ValueError(f"a^2 + b^2 = {a * a + b * b}, expected 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_b2(cls, b2: float) -> "SchmidtPair":
        """Build from the squared minor coefficient, ``0 <= b2 <= 1/2``."""
        b2 = float(b2)
        if not 0.0 <= b2 <= 0.5:
            raise ValueError(f"b^2 must lie in [0, 0.5], got {b2}")
        if b2 == 0.5:
            s = math.sqrt(0.5)
            return cls(s, s)
        return cls(math.sqrt(1.0 - b2), math.sqrt(b2))

    @classmethod
    def from_b(cls, b: float) -> "SchmidtPair":
        b = float(b)
        if not 0.0 <= b <= math.sqrt(0.5) + NORM_TOL:
            raise ValueError(f"b must lie in [0, 1/sqrt(2)], got {b}")
        b = min(b, math.sqrt(0.5))
        return cls(max(math.sqrt(1.0 - b * b), b), b)

    @property
    def b2(self) -> float:
        return self.b * self.b

    def state(self) -> PureState:
        """``a|00> + b|11>`` as a two-qubit state."""
        return PureState(np.array([self.a, 0.0, 0.0, self.b]), normalized=True)


@dataclass(frozen=True, eq=False)
class LocalFrame:
    """Local unitaries ``u_left`` (qubit 0) and ``u_right`` (qubit 1)."""

    u_left: np.ndarray
    u_right: np.ndarray

    def __post_init__(self):
        for name in ("u_left", "u_right"):
            u = np.array(getattr(self, name), dtype=np.complex128)
            if u.shape != (2, 2) or not is_unitary(u, UNITARY_TOL):
                raise ValueError(f"{name} is not a 2x2 unitary")
            u.setflags(write=False)
            object.__setattr__(self, name, u)

    def operator(self) -> np.ndarray:
        """The 4x4 operator ``u_left (x) u_right`` in register index order."""
        return np.kron(self.u_right, self.u_left)


def _coefficient_matrix(state: PureState) -> np.ndarray:
    # m[i, j] multiplies |i>_q0 |j>_q1, i.e. amplitude index i + 2j
    return state.amps.reshape(2, 2).T


def schmidt_decompose(state: PureState) -> tuple[SchmidtPair, LocalFrame]:
    """Schmidt coefficients of a normalized two-qubit state and the local
    frame that rotates the state onto ``a|00> + b|11>``.

    Singular vectors are ordered by decreasing singular value and each
    left vector has its first non-negligible component made real positive;
    the conjugate phase is pushed onto the matching right vector, so the
    result is deterministic even when ``a == b``.
    """
    if state.num_qubits != 2:
        raise ValueError("Schmidt decomposition is implemented for two qubits only")
    if not state.normalized:
        raise ValueError("state must be normalized")

    m = _coefficient_matrix(state)
    u, s, vh = np.linalg.svd(m)
    u = u.copy()
    vh = vh.copy()
    for k in range(2):
        col = u[:, k]
        pivot = col[np.argmax(np.abs(col) > 1e-12)]
        phase = pivot / abs(pivot)
        u[:, k] = col / phase
        vh[k, :] = vh[k, :] * phase

    # u^H m vh^H = diag(s); in operator form that is (u^H on q0) (x) (conj(vh) on q1)
    frame = LocalFrame(u_left=u.conj().T, u_right=vh.conj())
    a, b = float(s[0]), float(s[1])
    norm = math.hypot(a, b)
    a, b = a / norm, b / norm
    return SchmidtPair(max(a, b), min(a, b)), frame


def entanglement_entropy(p: SchmidtPair) -> float:
    """Binary entropy in bits of the Schmidt weights ``(a**2, b**2)``."""
    h = 0.0
    for w in (p.a * p.a, p.b * p.b):
        if w > 0.0:
            h -= w * math.log2(w)
    return min(1.0, max(0.0, h))


def channel_width(p: SchmidtPair) -> float:
    """``2 b**2``: the conclusive-teleportation probability a channel supports."""
    return 2.0 * p.b * p.b
