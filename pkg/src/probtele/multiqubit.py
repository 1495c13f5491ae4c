"""Teleporting k qubits through k independent partially entangled pairs.

Register layout: ``[P_1..P_k, A_1..A_k, B_1..B_k]``.  ``P_i`` are the
input qubits, ``(A_i, B_i)`` the i-th channel pair.  Input amplitudes are
indexed with bit ``i - 1`` holding ``P_i``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from ._tolerances import NORM_TOL, ZERO_WEIGHT
from .protocol import (
    PAULI_X,
    PAULI_Z,
    InputQubit,
    MeasurementFamily,
    bob_correction,
    measurement_basis,
    success_probability,
)
from .schmidt import SchmidtPair
from .statevec import PureState, apply_unitary, fidelity, ket, permute_qubits, project, tensor

__all__ = [
    "ChannelBank",
    "MeasurementBank",
    "MultiInput",
    "MultiReport",
    "FULL_VECTOR_MAX_K",
    "CLOSED_FORM_MAX_K",
    "multi_success_probability",
    "initial_state",
    "multi_teleport_exact",
]

FULL_VECTOR_MAX_K = 3
CLOSED_FORM_MAX_K = 16


@dataclass(frozen=True)
class ChannelBank:
    pairs: tuple[SchmidtPair, ...]

    def __post_init__(self):
        pairs = tuple(self.pairs)
        if not 1 <= len(pairs) <= CLOSED_FORM_MAX_K:
            raise ValueError(f"channel bank needs 1..{CLOSED_FORM_MAX_K} pairs")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_b2(cls, b2s: Iterable[float]) -> "ChannelBank":
        return cls(tuple(SchmidtPair.from_b2(v) for v in b2s))

    @classmethod
    def coerce(cls, ch: Union["ChannelBank", SchmidtPair]) -> "ChannelBank":
        return cls((ch,)) if isinstance(ch, SchmidtPair) else ch

    @property
    def k(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class MeasurementBank:
    families: tuple[MeasurementFamily, ...]

    def __post_init__(self):
        families = tuple(self.families)
        if not 1 <= len(families) <= CLOSED_FORM_MAX_K:
            raise ValueError(f"measurement bank needs 1..{CLOSED_FORM_MAX_K} families")
        object.__setattr__(self, "families", families)

    @classmethod
    def from_b2(cls, b2s: Iterable[float]) -> "MeasurementBank":
        return cls(tuple(MeasurementFamily.from_b2(v) for v in b2s))

    @classmethod
    def coerce(cls, mb: Union["MeasurementBank", MeasurementFamily]) -> "MeasurementBank":
        return cls((mb,)) if isinstance(mb, MeasurementFamily) else mb

    @property
    def k(self) -> int:
        return len(self.families)


@dataclass(frozen=True, eq=False)
class MultiInput:
    """Normalized k-qubit input on ``P_1..P_k``."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        size = amps.size
        if size < 2 or size & (size - 1):
            raise ValueError("input length must be 2**k with k >= 1")
        if abs(float(np.vdot(amps, amps).real) - 1.0) > NORM_TOL:
            raise ValueError("multi-qubit input is not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def k(self) -> int:
        return self.amps.size.bit_length() - 1

    @classmethod
    def coerce(cls, q: Union["MultiInput", InputQubit, PureState]) -> "MultiInput":
        if isinstance(q, MultiInput):
            return q
        if isinstance(q, InputQubit):
            return cls(np.array([q.alpha, q.beta]))
        return cls(q.amps)

    @classmethod
    def product(cls, qubits: Sequence[InputQubit]) -> "MultiInput":
        return cls(tensor([q.state() for q in qubits]).amps)

    @classmethod
    def random(cls, k: int, rng: np.random.Generator) -> "MultiInput":
        v = rng.normal(size=2**k) + 1j * rng.normal(size=2**k)
        return cls(v / np.linalg.norm(v))

    def state(self) -> PureState:
        return PureState(self.amps, normalized=True)


@dataclass(frozen=True)
class MultiReport:
    k: int
    contributions: dict[tuple[int, ...], float]
    outcome_weights: dict[tuple[int, ...], float]
    total: float
    fidelity: Optional[float]


def _check_lengths(ch: ChannelBank, mb: MeasurementBank) -> None:
    if ch.k != mb.k:
        raise ValueError(f"channel bank has {ch.k} pairs but measurement bank has {mb.k}")


def multi_success_probability(ch: ChannelBank, mb: MeasurementBank) -> float:
    """``2**k * prod(min(b_i, b_i')**2)``, the product of the single-pair laws."""
    ch, mb = ChannelBank.coerce(ch), MeasurementBank.coerce(mb)
    _check_lengths(ch, mb)
    p = 1.0
    for pair, fam in zip(ch.pairs, mb.families):
        p *= success_probability(pair, fam)
    return p


def initial_state(q: MultiInput, ch: ChannelBank) -> PureState:
    """Input tensored with every channel pair, in the fixed register layout."""
    k = ch.k
    if q.k != k:
        raise ValueError(f"input has {q.k} qubits but the bank has {k} pairs")
    # tensor order is [P_1..P_k, A_1, B_1, A_2, B_2, ...]
    raw = tensor([q.state()] + [p.state() for p in ch.pairs])
    order = list(range(k)) + [k + 2 * i for i in range(k)] + [k + 2 * i + 1 for i in range(k)]
    return permute_qubits(raw, order)


def alice_targets(k: int) -> list[int]:
    """Qubits measured jointly by Alice, as ``[P_1, A_1, P_2, A_2, ...]``."""
    return [q for i in range(k) for q in (i, k + i)]


def multi_teleport_exact(
    q: Union[MultiInput, InputQubit],
    ch: Union[ChannelBank, SchmidtPair],
    mb: Union[MeasurementBank, MeasurementFamily],
) -> MultiReport:
    """Full state-vector run over all ``4**k`` joint outcomes.

    For each outcome Bob corrects pair by pair with a fresh ancilla that
    is read as 0 and discarded, so the register never exceeds ``3k + 1``
    qubits.
    """
    q, ch, mb = MultiInput.coerce(q), ChannelBank.coerce(ch), MeasurementBank.coerce(mb)
    _check_lengths(ch, mb)
    k = ch.k
    if k > FULL_VECTOR_MAX_K:
        raise ValueError(f"full-vector path supports k <= {FULL_VECTOR_MAX_K}, got {k}")

    psi = initial_state(q, ch)
    bases = [measurement_basis(f) for f in mb.families]
    corrections = [
        [bob_correction(m, pair, fam) for m in range(1, 5)] for pair, fam in zip(ch.pairs, mb.families)
    ]
    targets = alice_targets(k)
    target_state = q.state()

    contributions = {}
    outcome_weights = {}
    fids = []
    for outcome in itertools.product(range(1, 5), repeat=k):
        vec = tensor([bases[i][m - 1] for i, m in enumerate(outcome)])
        bob, weight = project(psi, targets, vec)
        outcome_weights[outcome] = weight
        for i, m in enumerate(outcome):
            corr = corrections[i][m - 1]
            if corr.pauli_z:
                bob = apply_unitary(bob, PAULI_Z, [i])
            if corr.pauli_x:
                bob = apply_unitary(bob, PAULI_X, [i])
            bob = apply_unitary(tensor([bob, ket("0")]), corr.u_sim, [i, k])
            bob, _ = project(bob, [k], ket("0"))
        contributions[outcome] = bob.norm_sq
        if bob.norm_sq > ZERO_WEIGHT:
            fids.append(fidelity(bob.normalize(), target_state))

    return MultiReport(
        k=k,
        contributions=contributions,
        outcome_weights=outcome_weights,
        total=float(sum(contributions.values())),
        fidelity=min(fids) if fids else None,
    )
