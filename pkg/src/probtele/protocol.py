"""Single-qubit conclusive teleportation through a partially entangled channel.

Register layout for the single-pair protocol: qubit 0 carries the input
(particle 1), qubit 1 is Alice's channel half (particle 2), qubit 2 is
Bob's half (particle 3).  Bob's ancilla, when present, sits directly
above his qubit.

Alice measures qubits 0 and 1 in a four-state family fixed by a Schmidt
pair ``(a', b')``.  Each outcome leaves Bob holding, up to a Pauli frame,
``x alpha|0> + y beta|1>`` with real ``x, y >= 0``.  Bob undoes the frame,
then runs an ancilla-assisted unitary that shrinks the larger axis to the
smaller one.  Reading the ancilla as 0 leaves ``min(x, y) (alpha|0> +
beta|1>)``; reading 1 leaves a fixed blank state.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ._tolerances import NORM_TOL, UNITARY_TOL, ZERO_WEIGHT
from .schmidt import SchmidtPair
from .statevec import PureState, apply_unitary, fidelity, is_unitary, ket, project, tensor

__all__ = [
    "InputQubit",
    "MeasurementFamily",
    "OutcomeBranch",
    "ScaleTarget",
    "BobCorrection",
    "BranchRun",
    "MatchReport",
    "ProtocolReport",
    "PAULI_X",
    "PAULI_Z",
    "BLANK_INDEX",
    "u_sim",
    "measurement_basis",
    "branch_magnitudes",
    "collapsed_branches",
    "bob_correction",
    "run_branch",
    "success_probability",
    "matching_report",
    "teleport_exact",
    "DEFAULT_MATCH_TOL",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
# X on Bob's qubit inside the (bob, ancilla) pair
_X_BOB = np.kron(np.eye(2), PAULI_X)

BLANK_INDEX = 1
DEFAULT_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class InputQubit:
    """The state ``alpha|0> + beta|1>`` to be teleported."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        alpha, beta = complex(self.alpha), complex(self.beta)
        if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > NORM_TOL:
            raise ValueError("input qubit is not normalized")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "InputQubit":
        """Haar-random qubit."""
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        return cls(v[0], v[1])

    def state(self) -> PureState:
        return PureState(np.array([self.alpha, self.beta]), normalized=True)


@dataclass(frozen=True)
class MeasurementFamily:
    """Alice's two-qubit measurement, parameterized by a Schmidt pair (a', b')."""

    coeffs: SchmidtPair

    @classmethod
    def from_b2(cls, b2: float) -> "MeasurementFamily":
        return cls(SchmidtPair.from_b2(b2))

    @classmethod
    def bell(cls) -> "MeasurementFamily":
        return cls.from_b2(0.5)

    @property
    def a(self) -> float:
        return self.coeffs.a

    @property
    def b(self) -> float:
        return self.coeffs.b


class OutcomeBranch(NamedTuple):
    """Bob's unnormalized qubit after Alice reports outcome ``index``.

    ``x`` and ``y`` are the magnitudes on ``|0>`` and ``|1>``.  With
    ``flip_x`` the roles of alpha and beta are exchanged; with ``sign_z``
    the ``|1>`` term carries a minus sign.
    """

    index: int
    x: float
    y: float
    flip_x: bool
    sign_z: bool
    born_weight: float

    def residual(self, q: InputQubit) -> PureState:
        first, second = (q.beta, q.alpha) if self.flip_x else (q.alpha, q.beta)
        sign = -1.0 if self.sign_z else 1.0
        return PureState(np.array([first * self.x, sign * second * self.y]), normalized=False)


class ScaleTarget(enum.Enum):
    ZERO_AXIS = "zero_axis"
    ONE_AXIS = "one_axis"


@dataclass(frozen=True, eq=False)
class BobCorrection:
    """Pauli frame plus the amplitude-equalizing unitary for one outcome."""

    index: int
    pauli_x: bool
    pauli_z: bool
    ratio: float
    scale_target: ScaleTarget
    u_sim: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio {self.ratio} outside [0, 1]")
        if not is_unitary(self.u_sim, UNITARY_TOL):
            raise ValueError("u_sim is not unitary")

    @property
    def failure_flip(self) -> bool:
        """Whether the failure residual must be flipped onto the blank state."""
        return self.scale_target is ScaleTarget.ONE_AXIS


class BranchRun(NamedTuple):
    contribution: float
    success_state: Optional[PureState]
    failure_state: PureState
    failure_weight: float


class MatchReport(NamedTuple):
    matched: bool
    limiting_side: str
    wasted: float


@dataclass(frozen=True)
class ProtocolReport:
    contributions: tuple[float, ...]
    total: float
    matched: bool
    limiting_side: str
    wasted: float
    success_fidelity: Optional[float]
    failure_state_index: int
    branches: tuple[OutcomeBranch, ...]
    corrections: tuple[BobCorrection, ...]


def u_sim(ratio: float) -> np.ndarray:
    """Ancilla-assisted equalizer on (bob, ancilla), ancilla in the high bit.

    Maps ``|0>|0>`` to ``ratio|0>|0> + sqrt(1 - ratio**2)|1>|1>`` and leaves
    ``|1>|0>`` untouched; the remaining columns complete it to a unitary.
    """
    r = float(ratio)
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"ratio {r} outside [0, 1]")
    s = math.sqrt(max(0.0, 1.0 - r * r))
    return np.array(
        [
            [r, 0, s, 0],
            [0, 1, 0, 0],
            [0, 0, 0, -1],
            [s, 0, -r, 0],
        ],
        dtype=np.complex128,
    )


def measurement_basis(f: MeasurementFamily) -> list[PureState]:
    """The four eigenstates of Alice's measurement on (input, channel half).

    In ket notation with the input qubit written first::

        a'|00> + b'|11>,  b'|00> - a'|11>,  a'|10> + b'|01>,  b'|10> - a'|01>
    """
    a, b = f.a, f.b
    # register index = input bit + 2 * channel-half bit
    rows = [
        [a, 0, 0, b],
        [b, 0, 0, -a],
        [0, a, b, 0],
        [0, b, -a, 0],
    ]
    return [PureState(np.array(r, dtype=np.complex128), normalized=True) for r in rows]


def branch_magnitudes(m: int, channel: SchmidtPair, f: MeasurementFamily) -> tuple[float, float, bool, bool]:
    """``(x, y, flip_x, sign_z)`` for outcome ``m`` in 1..4."""
    a, b = channel.a, channel.b
    ap, bp = f.a, f.b
    if m == 1:
        return a * ap, b * bp, False, False
    if m == 2:
        return a * bp, b * ap, False, True
    if m == 3:
        return a * ap, b * bp, True, False
    if m == 4:
        return a * bp, b * ap, True, True
    raise ValueError(f"outcome index {m} not in 1..4")


def collapsed_branches(q: InputQubit, channel: SchmidtPair, f: MeasurementFamily) -> list[OutcomeBranch]:
    branches = []
    for m in range(1, 5):
        x, y, flip_x, sign_z = branch_magnitudes(m, channel, f)
        first, second = (q.beta, q.alpha) if flip_x else (q.alpha, q.beta)
        weight = abs(first * x) ** 2 + abs(second * y) ** 2
        branches.append(OutcomeBranch(m, x, y, flip_x, sign_z, weight))
    return branches


def bob_correction(m: int, channel: SchmidtPair, f: MeasurementFamily) -> BobCorrection:
    """Correction for outcome ``m``: Z if signed, X if flipped, then the equalizer.

    After the Pauli frame alpha sits on ``|0>``; the equalizer shrinks
    whichever axis carries the larger magnitude.  The ONE_AXIS variant is
    the ZERO_AXIS matrix conjugated by X on Bob's qubit.
    """
    x, y, flip_x, sign_z = branch_magnitudes(m, channel, f)
    on_zero, on_one = (y, x) if flip_x else (x, y)
    big = max(on_zero, on_one)
    # big == 0 only when b = b' = 0 on outcomes 2 and 4, which have zero weight
    ratio = min(on_zero, on_one) / big if big > 0.0 else 0.0
    if on_zero >= on_one:
        target, u = ScaleTarget.ZERO_AXIS, u_sim(ratio)
    else:
        target, u = ScaleTarget.ONE_AXIS, _X_BOB @ u_sim(ratio) @ _X_BOB
    return BobCorrection(m, flip_x, sign_z, ratio, target, u)


def run_branch(q: InputQubit, branch: OutcomeBranch, corr: BobCorrection) -> BranchRun:
    """Push one branch through Bob's correction and read the ancilla.

    The contribution is the joint probability of this outcome and an
    ancilla reading of 0.  The failure state is normalized and mapped onto
    the blank ``|1>``; when failure is impossible the blank is returned.
    """
    if corr.index != branch.index:
        raise ValueError(f"correction for outcome {corr.index} applied to branch {branch.index}")
    bob = branch.residual(q)
    if corr.pauli_z:
        bob = apply_unitary(bob, PAULI_Z, [0])
    if corr.pauli_x:
        bob = apply_unitary(bob, PAULI_X, [0])
    pair = apply_unitary(tensor([bob, ket("0")]), corr.u_sim, [0, 1])

    ok = project(pair, [1], ket("0"))
    fail = project(pair, [1], ket("1"))
    success_state = ok.state.normalize() if ok.weight > ZERO_WEIGHT else None

    failure_state = ket("1")
    if fail.weight > ZERO_WEIGHT:
        failure_state = fail.state.normalize()
        if corr.failure_flip:
            failure_state = apply_unitary(failure_state, PAULI_X, [0])
    return BranchRun(ok.weight, success_state, failure_state, fail.weight)


def success_probability(channel: SchmidtPair, f: MeasurementFamily) -> float:
    """Optimal conclusive-teleportation probability ``2 min(b, b')**2``."""
    c = min(channel.b, f.b)
    return 2.0 * c * c


def matching_report(channel: SchmidtPair, f: MeasurementFamily, tol: float = DEFAULT_MATCH_TOL) -> MatchReport:
    """Compare channel width ``2b**2`` with sending ability ``2b'**2``.

    ``limiting_side`` names whichever of the two is smaller, or "matched";
    ``wasted`` is the gap between them.
    """
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    matched = abs(channel.b - f.b) <= tol
    if matched:
        side = "matched"
    elif channel.b < f.b:
        side = "channel"
    else:
        side = "measurement"
    wasted = abs(2.0 * channel.b2 - 2.0 * f.coeffs.b2)
    return MatchReport(matched, side, wasted)


def teleport_exact(
    q: InputQubit,
    channel: SchmidtPair,
    f: MeasurementFamily,
    tol: float = DEFAULT_MATCH_TOL,
) -> ProtocolReport:
    branches = collapsed_branches(q, channel, f)
    corrections = [bob_correction(br.index, channel, f) for br in branches]
    runs = [run_branch(q, br, c) for br, c in zip(branches, corrections)]

    target = q.state()
    fids = [fidelity(r.success_state, target) for r in runs if r.success_state is not None]
    match = matching_report(channel, f, tol)
    return ProtocolReport(
        contributions=tuple(r.contribution for r in runs),
        total=float(sum(r.contribution for r in runs)),
        matched=match.matched,
        limiting_side=match.limiting_side,
        wasted=match.wasted,
        success_fidelity=min(fids) if fids else None,
        failure_state_index=BLANK_INDEX,
        branches=tuple(branches),
        corrections=tuple(corrections),
    )
