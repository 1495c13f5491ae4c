"""Alice/Bob state machines exchanging classical messages, and a seeded
Monte Carlo runner on top of them.

Only outcome indices cross the classical channel.  The channel bank and
measurement bank are agreed beforehand, so Bob derives his corrections
from them without further communication.

Each trial draws from Philox generators keyed by ``base_seed`` with the
trial index and party in the counter, so any trial can be replayed alone
and results do not depend on how trials are split across workers.

Measurement branches are a pure function of the outcome history, so a
plan memoizes them; a trial then only pays for its random draws and its
messages.
"""
from __future__ import annotations

import collections
import enum
import json
import math
import socket
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .multiqubit import (
    ChannelBank,
    MeasurementBank,
    MultiInput,
    alice_targets,
    initial_state,
)
from .protocol import PAULI_X, PAULI_Z, BobCorrection, bob_correction, measurement_basis
from .statevec import PureState, apply_unitary, draw_index, fidelity, ket, measurement_branches, tensor

__all__ = [
    "OutcomeMessage",
    "ReportMessage",
    "TransportError",
    "SessionAborted",
    "InProcessChannel",
    "SocketChannel",
    "AliceMachine",
    "BobMachine",
    "TrialRecord",
    "MonteCarloResult",
    "trial_rngs",
    "run_session",
    "monte_carlo",
]

_COMPUTATIONAL = [ket("0"), ket("1")]


class TransportError(RuntimeError):
    pass


class SessionAborted(RuntimeError):
    pass


class OutcomeMessage(NamedTuple):
    pair: int
    m: int

    def to_wire(self) -> str:
        return json.dumps({"type": "outcome", "pair": self.pair, "m": self.m}) + "\n"


class ReportMessage(NamedTuple):
    success: bool

    def to_wire(self) -> str:
        return json.dumps({"type": "report", "success": self.success}) + "\n"


def decode(line: str) -> Union[OutcomeMessage, ReportMessage]:
    """Parse one newline-delimited wire message."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TransportError(f"malformed message {line!r}") from exc
    kind = obj.get("type")
    if kind == "outcome":
        pair, m = obj.get("pair"), obj.get("m")
        if not isinstance(pair, int) or not isinstance(m, int) or not 1 <= m <= 4:
            raise TransportError(f"bad outcome message {obj}")
        return OutcomeMessage(pair, m)
    if kind == "report":
        if not isinstance(obj.get("success"), bool):
            raise TransportError(f"bad report message {obj}")
        return ReportMessage(obj["success"])
    raise TransportError(f"unknown message type {kind!r}")


class _QueueEndpoint:
    def __init__(self, inbox: collections.deque, outbox: collections.deque):
        self._inbox = inbox
        self._outbox = outbox

    def send(self, msg) -> None:
        self._outbox.append(msg.to_wire())

    def recv(self):
        if not self._inbox:
            raise TransportError("receive on an empty channel")
        return decode(self._inbox.popleft())


class InProcessChannel:
    """Ordered, reliable duplex channel backed by two queues of wire lines."""

    def __init__(self):
        a_to_b: collections.deque = collections.deque()
        b_to_a: collections.deque = collections.deque()
        self.alice = _QueueEndpoint(b_to_a, a_to_b)
        self.bob = _QueueEndpoint(a_to_b, b_to_a)

    def close(self) -> None:
        pass


class _SocketEndpoint:
    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._file = sock.makefile("rw", encoding="utf-8", newline="\n")

    def send(self, msg) -> None:
        try:
            self._file.write(msg.to_wire())
            self._file.flush()
        except OSError as exc:
            raise TransportError(str(exc)) from exc

    def recv(self):
        try:
            line = self._file.readline()
        except OSError as exc:
            raise TransportError(str(exc)) from exc
        if not line:
            raise TransportError("peer closed the connection")
        return decode(line)

    def close(self) -> None:
        self._file.close()
        self._sock.close()


class SocketChannel:
    """Same contract as :class:`InProcessChannel` over a local socket pair."""

    def __init__(self, timeout: float = 5.0):
        s1, s2 = socket.socketpair()
        s1.settimeout(timeout)
        s2.settimeout(timeout)
        self.alice = _SocketEndpoint(s1)
        self.bob = _SocketEndpoint(s2)

    def close(self) -> None:
        self.alice.close()
        self.bob.close()


class AliceState(enum.Enum):
    READY = "ready"
    MEASURED = "measured"
    DONE = "done"


class BobState(enum.Enum):
    WAITING = "waiting"
    CORRECTED = "corrected"
    REPORTED = "reported"


@dataclass(frozen=True, eq=False)
class _Plan:
    """Per-configuration data shared by every trial."""

    k: int
    world: PureState
    target: PureState
    bases: tuple
    corrections: tuple
    _memo: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, q, ch, mb) -> "_Plan":
        q, ch, mb = MultiInput.coerce(q), ChannelBank.coerce(ch), MeasurementBank.coerce(mb)
        if ch.k != mb.k:
            raise ValueError(f"channel bank has {ch.k} pairs but measurement bank has {mb.k}")
        return cls(
            k=ch.k,
            world=initial_state(q, ch),
            target=q.state(),
            bases=tuple(tuple(measurement_basis(f)) for f in mb.families),
            corrections=tuple(
                tuple(bob_correction(m, p, f) for m in range(1, 5)) for p, f in zip(ch.pairs, mb.families)
            ),
        )

    def alice_branches(self, history: tuple, world: PureState, targets: list[int], i: int):
        key = ("alice", history)
        if key not in self._memo:
            self._memo[key] = measurement_branches(world, targets, self.bases[i])
        return self._memo[key]

    def bob_branches(self, history: tuple, qubits: PureState, i: int, corr: BobCorrection):
        """Ancilla-readout branches after Bob's correction on pair ``i``."""
        key = ("bob", history)
        if key not in self._memo:
            k = self.k
            if corr.pauli_z:
                qubits = apply_unitary(qubits, PAULI_Z, [i])
            if corr.pauli_x:
                qubits = apply_unitary(qubits, PAULI_X, [i])
            qubits = apply_unitary(tensor([qubits, ket("0")]), corr.u_sim, [i, k])
            weights, residuals = measurement_branches(qubits, [k], _COMPUTATIONAL)
            if corr.failure_flip and residuals[1] is not None:
                residuals[1] = apply_unitary(residuals[1], PAULI_X, [i])
            self._memo[key] = weights, residuals
        return self._memo[key]

    def fidelity(self, history: tuple, qubits: PureState) -> float:
        key = ("fid", history)
        if key not in self._memo:
            self._memo[key] = fidelity(qubits, self.target)
        return self._memo[key]


class AliceMachine:
    """Measures each (input, channel-half) pair and announces the outcome."""

    def __init__(self, plan: _Plan, endpoint, rng: np.random.Generator):
        self._plan = plan
        self._endpoint = endpoint
        self._rng = rng
        self.state = AliceState.READY
        self.outcomes: tuple[int, ...] = ()
        self.report: Optional[ReportMessage] = None

    def measure(self, world: PureState) -> PureState:
        """Measure all pairs, send one message per pair, return Bob's qubits."""
        if self.state is not AliceState.READY:
            raise SessionAborted(f"Alice cannot measure in state {self.state.value}")
        k = self._plan.k
        labels = list(range(3 * k))
        held = alice_targets(k)
        outcomes = []
        for i in range(k):
            pos = [labels.index(held[2 * i]), labels.index(held[2 * i + 1])]
            weights, residuals = self._plan.alice_branches(tuple(outcomes), world, pos, i)
            idx = draw_index(weights, self._rng)
            world = residuals[idx]
            labels = [lb for lb in labels if lb not in (held[2 * i], held[2 * i + 1])]
            outcomes.append(idx + 1)
            self._endpoint.send(OutcomeMessage(i + 1, idx + 1))
        self.outcomes = tuple(outcomes)
        self.state = AliceState.MEASURED
        return world

    def finish(self) -> ReportMessage:
        if self.state is not AliceState.MEASURED:
            raise SessionAborted(f"Alice cannot finish in state {self.state.value}")
        msg = self._endpoint.recv()
        if not isinstance(msg, ReportMessage):
            raise SessionAborted(f"Alice expected a report, got {msg}")
        self.report = msg
        self.state = AliceState.DONE
        return msg


class BobMachine:
    """Waits for every outcome, then corrects and reads one ancilla per pair."""

    def __init__(self, plan: _Plan, endpoint, rng: np.random.Generator):
        self._plan = plan
        self._endpoint = endpoint
        self._rng = rng
        self.state = BobState.WAITING
        self.received: dict[int, int] = {}
        self.ancilla_bits: tuple[int, ...] = ()
        self.qubits: Optional[PureState] = None

    def receive(self) -> None:
        k = self._plan.k
        while len(self.received) < k:
            msg = self._endpoint.recv()
            if not isinstance(msg, OutcomeMessage) or not 1 <= msg.pair <= k or msg.pair in self.received:
                raise SessionAborted(f"unexpected message {msg}")
            self.received[msg.pair] = msg.m

    def correct(self, qubits: PureState) -> bool:
        if self.state is not BobState.WAITING or len(self.received) != self._plan.k:
            raise SessionAborted("Bob corrects only after receiving every outcome")
        k = self._plan.k
        bits = []
        outcomes = tuple(self.received[i + 1] for i in range(k))
        for i in range(k):
            corr: BobCorrection = self._plan.corrections[i][outcomes[i] - 1]
            weights, residuals = self._plan.bob_branches((outcomes, tuple(bits)), qubits, i, corr)
            bit = draw_index(weights, self._rng)
            qubits = residuals[bit]
            bits.append(bit)
        self.ancilla_bits = tuple(bits)
        self.qubits = qubits
        self.state = BobState.CORRECTED
        return not any(bits)

    def send_report(self) -> ReportMessage:
        if self.state is not BobState.CORRECTED:
            raise SessionAborted(f"Bob cannot report in state {self.state.value}")
        msg = ReportMessage(not any(self.ancilla_bits))
        self._endpoint.send(msg)
        self.state = BobState.REPORTED
        return msg


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    outcomes: tuple[int, ...]
    ancilla_bits: tuple[int, ...]
    success: bool
    fidelity: float


def trial_rngs(base_seed: int, trial: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent Alice and Bob generators for one trial.

    Both are Philox streams keyed by ``base_seed``; the trial index and the
    party occupy the high counter words, so streams never overlap.
    """
    if not 0 <= base_seed < 2**64:
        raise ValueError("base_seed must fit in 64 bits")
    if not 0 <= trial < 2**64:
        raise ValueError("trial index must fit in 64 bits")
    return tuple(  # type: ignore[return-value]
        np.random.Generator(np.random.Philox(key=int(base_seed), counter=[0, 0, int(trial), party]))
        for party in (0, 1)
    )


def _run_trial(plan: _Plan, base_seed: int, trial: int, transport: str) -> TrialRecord:
    chan = SocketChannel() if transport == "socket" else InProcessChannel()
    try:
        alice_rng, bob_rng = trial_rngs(base_seed, trial)
        alice = AliceMachine(plan, chan.alice, alice_rng)
        bob = BobMachine(plan, chan.bob, bob_rng)
        try:
            bob_qubits = alice.measure(plan.world)
            bob.receive()
            success = bob.correct(bob_qubits)
            bob.send_report()
            report = alice.finish()
        except TransportError as exc:
            raise SessionAborted(f"trial {trial}: {exc}") from exc
        if report.success != success:
            raise SessionAborted(f"trial {trial}: report mismatch")
        fid = plan.fidelity((alice.outcomes, bob.ancilla_bits), bob.qubits)
        return TrialRecord(trial, alice.outcomes, bob.ancilla_bits, success, fid)
    finally:
        chan.close()


def run_session(q, ch, mb, rng_seed: int, trial: int = 0, transport: str = "inprocess") -> TrialRecord:
    """One full Alice/Bob exchange; identical seeds give identical records."""
    if transport not in ("inprocess", "socket"):
        raise ValueError(f"unknown transport {transport!r}")
    return _run_trial(_Plan.build(q, ch, mb), rng_seed, trial, transport)


@dataclass(frozen=True)
class MonteCarloResult:
    n_trials: int
    successes: int
    success_frequency: float
    confidence_halfwidth: float
    histogram: dict[tuple[int, ...], int] = field(default_factory=dict)
    min_success_fidelity: Optional[float] = None

    @property
    def sigma(self) -> float:
        return self.confidence_halfwidth / 3.0


def _run_chunk(plan: _Plan, base_seed: int, trials: Sequence[int], transport: str) -> list[TrialRecord]:
    return [_run_trial(plan, base_seed, t, transport) for t in trials]


def monte_carlo(
    q,
    ch,
    mb,
    n_trials: int,
    base_seed: int,
    workers: int = 1,
    transport: str = "inprocess",
) -> MonteCarloResult:
    """Estimate the conclusive-teleportation frequency over seeded trials.

    The halfwidth is three binomial standard errors of the estimate.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    plan = _Plan.build(q, ch, mb)
    if workers <= 1:
        records = _run_chunk(plan, base_seed, range(n_trials), transport)
    else:
        bounds = np.linspace(0, n_trials, workers + 1).astype(int)
        chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [plan] * len(chunks), [base_seed] * len(chunks), chunks,
                             [transport] * len(chunks))
            records = [r for part in parts for r in part]

    successes = sum(r.success for r in records)
    histogram = collections.Counter(r.outcomes for r in records)
    fids = [r.fidelity for r in records if r.success]
    p_hat = successes / n_trials
    return MonteCarloResult(
        n_trials=n_trials,
        successes=successes,
        success_frequency=p_hat,
        confidence_halfwidth=3.0 * math.sqrt(p_hat * (1.0 - p_hat) / n_trials),
        histogram=dict(sorted(histogram.items())),
        min_success_fidelity=min(fids) if fids else None,
    )
