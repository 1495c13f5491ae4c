"""Dense pure-state vectors over small qubit registers.

Index convention: bit ``j`` of a basis index is the value of qubit ``j``
(qubit 0 is the least significant bit).  Kets written left to right, such
as ``|01>``, list qubits 0, 1, ... in that order, so ``ket("01")`` has its
single non-zero amplitude at index 2.

Internally the amplitude vector is reshaped to ``[2] * n`` in C order,
which puts qubit ``q`` on tensor axis ``n - 1 - q``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ._tolerances import MAX_QUBITS, NORM_TOL, UNITARY_TOL, ZERO_WEIGHT

__all__ = [
    "PureState",
    "UnnormalizedBranch",
    "ket",
    "tensor",
    "apply_unitary",
    "project",
    "permute_qubits",
    "measurement_branches",
    "sample_measurement",
    "draw_index",
    "fidelity",
    "is_unitary",
]


@dataclass(frozen=True, eq=False)
class PureState:
    """Immutable amplitude vector of length ``2**num_qubits``.

    ``normalized`` defaults to whatever the norm says; passing ``True``
    explicitly asserts it and raises when the vector disagrees.
    """

    amps: np.ndarray
    normalized: bool = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        size = amps.size
        if size < 2 or size & (size - 1):
            raise ValueError(f"amplitude vector length {size} is not 2**n with n >= 1")
        if size > 2**MAX_QUBITS:
            raise ValueError(f"register exceeds {MAX_QUBITS} qubits")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

        norm_ok = abs(float(np.vdot(amps, amps).real) - 1.0) <= NORM_TOL
        if self.normalized is None:
            object.__setattr__(self, "normalized", norm_ok)
        elif self.normalized and not norm_ok:
            raise ValueError("state flagged normalized but its norm differs from 1")

    @property
    def num_qubits(self) -> int:
        return self.amps.size.bit_length() - 1

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def normalize(self) -> "PureState":
        n2 = self.norm_sq
        if n2 <= 0.0:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.amps / np.sqrt(n2), normalized=True)

    def __repr__(self):
        return f"PureState(num_qubits={self.num_qubits}, amps={np.round(self.amps, 6).tolist()})"


class UnnormalizedBranch(NamedTuple):
    """Residual state after a projection plus its Born weight (squared norm)."""

    state: PureState
    weight: float


def ket(bits: str) -> PureState:
    """Computational basis state; ``bits[j]`` is the value of qubit ``j``."""
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"bad ket label {bits!r}")
    index = sum(1 << j for j, c in enumerate(bits) if c == "1")
    amps = np.zeros(2 ** len(bits), dtype=np.complex128)
    amps[index] = 1.0
    return PureState(amps, normalized=True)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= tol


def tensor(states: Sequence[PureState]) -> PureState:
    """Tensor product; the first factor occupies the lowest qubit indices."""
    if not states:
        raise ValueError("tensor needs at least one state")
    total = sum(s.num_qubits for s in states)
    if total > MAX_QUBITS:
        raise ValueError(f"tensor product of {total} qubits exceeds limit {MAX_QUBITS}")
    amps = np.ones(1, dtype=np.complex128)
    for s in states:
        amps = np.kron(s.amps, amps)
    normalized = all(s.normalized for s in states)
    return PureState(amps, normalized=True if normalized else False)


def _check_targets(targets: Sequence[int], n: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate targets in {targets}")
    if any(t < 0 or t >= n for t in targets):
        raise ValueError(f"targets {targets} out of range for {n} qubits")
    return targets


def _axes(targets: Sequence[int], n: int) -> list[int]:
    # tensor axes of the targets ordered most significant local bit first
    return [n - 1 - q for q in reversed(targets)]


def apply_unitary(state: PureState, u: np.ndarray, targets: Sequence[int]) -> PureState:
    """Apply ``u`` to ``targets``; ``targets[j]`` is bit ``j`` of ``u``'s index."""
    n = state.num_qubits
    targets = _check_targets(targets, n)
    t = len(targets)
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2**t, 2**t):
        raise ValueError(f"matrix shape {u.shape} does not act on {t} qubits")
    if not is_unitary(u):
        raise ValueError("matrix is not unitary within tolerance")

    axes = _axes(targets, n)
    psi = state.amps.reshape([2] * n)
    out = np.tensordot(u.reshape([2] * (2 * t)), psi, axes=(list(range(t, 2 * t)), axes))
    out = np.moveaxis(out, list(range(t)), axes)
    return PureState(out.reshape(-1), normalized=True if state.normalized else False)


def project(state: PureState, targets: Sequence[int], outcome_vector: PureState) -> UnnormalizedBranch:
    """Contract ``<outcome|`` on ``targets``, leaving the complement qubits.

    The residual keeps the complement qubits in ascending order and is not
    renormalized; its squared norm is the Born weight of the outcome.
    """
    n = state.num_qubits
    targets = _check_targets(targets, n)
    t = len(targets)
    if t >= n:
        raise ValueError("projection targets must be a strict subset of the register")
    if outcome_vector.num_qubits != t:
        raise ValueError("outcome vector size does not match the targets")
    if not outcome_vector.normalized:
        raise ValueError("outcome vector must be normalized")

    bra = outcome_vector.amps.conj().reshape([2] * t)
    psi = state.amps.reshape([2] * n)
    res = np.tensordot(bra, psi, axes=(list(range(t)), _axes(targets, n))).reshape(-1)
    weight = float(np.vdot(res, res).real)
    return UnnormalizedBranch(PureState(res, normalized=False), weight)


def permute_qubits(state: PureState, order: Sequence[int]) -> PureState:
    """Relabel qubits so that new qubit ``j`` is old qubit ``order[j]``."""
    n = state.num_qubits
    order = _check_targets(order, n)
    if len(order) != n:
        raise ValueError("order must be a permutation of all qubits")
    psi = state.amps.reshape([2] * n)
    perm = [n - 1 - order[n - 1 - ax] for ax in range(n)]
    return PureState(np.transpose(psi, perm).reshape(-1), normalized=True if state.normalized else False)


def _check_basis(basis: Sequence[PureState], t: int) -> np.ndarray:
    if len(basis) != 2**t:
        raise ValueError(f"basis on {t} qubits needs {2**t} vectors, got {len(basis)}")
    if any(b.num_qubits != t for b in basis):
        raise ValueError("basis vectors act on the wrong number of qubits")
    mat = np.stack([b.amps for b in basis])
    gram = mat.conj() @ mat.T
    if np.max(np.abs(gram - np.eye(len(basis)))) > NORM_TOL:
        raise ValueError("measurement basis is not orthonormal")
    return mat


def measurement_branches(
    state: PureState, targets: Sequence[int], basis: Sequence[PureState]
) -> tuple[np.ndarray, list[Optional[PureState]]]:
    """Born weights of every basis outcome and the normalized residuals.

    Residuals of zero-weight outcomes are ``None``.
    """
    _check_basis(basis, len(targets))
    branches = [project(state, targets, b) for b in basis]
    weights = np.array([br.weight for br in branches])
    residuals = [br.state.normalize() if br.weight > ZERO_WEIGHT else None for br in branches]
    return weights, residuals


def sample_measurement(
    state: PureState,
    targets: Sequence[int],
    basis: Sequence[PureState],
    rng: np.random.Generator,
) -> tuple[int, PureState]:
    """Born-rule measurement of ``targets`` in ``basis``.

    Returns the outcome index and the normalized residual on the complement
    qubits.
    """
    if not state.normalized:
        raise ValueError("can only sample from a normalized state")
    weights, residuals = measurement_branches(state, targets, basis)
    idx = draw_index(weights, rng)
    return idx, residuals[idx]


def draw_index(weights: Sequence[float], rng: np.random.Generator) -> int:
    """Index drawn with probability proportional to ``weights``."""
    w = [float(x) if x > ZERO_WEIGHT else 0.0 for x in weights]
    total = sum(w)
    if total <= 0.0:
        raise ValueError("all outcome weights are zero")
    u = rng.random() * total
    acc = 0.0
    for i, wi in enumerate(w):
        acc += wi
        if u < acc:
            return i
    # u rounded up to the total; fall back to the last possible outcome
    return max(i for i, wi in enumerate(w) if wi > 0.0)


def fidelity(s1: PureState, s2: PureState) -> float:
    """``|<s1|s2>|**2`` for normalized states of equal size."""
    if s1.num_qubits != s2.num_qubits:
        raise ValueError("fidelity of states with different qubit counts")
    if not (s1.normalized and s2.normalized):
        raise ValueError("fidelity needs normalized states")
    f = abs(np.vdot(s1.amps, s2.amps)) ** 2
    return float(min(1.0, max(0.0, f)))
