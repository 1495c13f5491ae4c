"""Brute-force verifier for the teleportation protocols.

Everything here is computed from state vectors with the ``statevec``
primitives.  Nothing from ``protocol`` or ``multiqubit`` is called: the
measurement basis is rebuilt from kets, and Bob's filter for each outcome
is derived from the linear map that outcome induces on his qubit, found
by pushing ``|0>`` and ``|1>`` through the protocol.  For a map ``M`` with
smallest singular value ``s`` the filter is ``K = s M^-1``, embedded in a
unitary on (bob, ancilla).  Both ancilla readings are enumerated.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, TextIO, Union

import numpy as np

from ._tolerances import ZERO_WEIGHT
from .statevec import PureState, apply_unitary, fidelity, ket, permute_qubits, project, tensor

__all__ = [
    "EnumerationRecord",
    "Verdict",
    "MAX_K",
    "enumerate_outcomes",
    "success_total",
    "branch_totals",
    "crosscheck",
    "write_records_csv",
]

MAX_K = 3


@dataclass(frozen=True, eq=False)
class EnumerationRecord:
    outcomes: tuple[int, ...]
    ancilla_bits: tuple[int, ...]
    probability: float
    bob_state: Optional[PureState]
    fidelity: Optional[float]

    @property
    def success(self) -> bool:
        return not any(self.ancilla_bits)


class Verdict(NamedTuple):
    passed: bool
    max_delta: float
    total_delta: float
    deltas: dict


def _family_basis(a: float, b: float) -> list[PureState]:
    # kets list (input qubit, channel half) left to right
    def combo(c0, k0, c1, k1):
        v = c0 * ket(k0).amps + c1 * ket(k1).amps
        return PureState(v, normalized=True)

    return [
        combo(a, "00", b, "11"),
        combo(b, "00", -a, "11"),
        combo(a, "10", b, "01"),
        combo(b, "10", -a, "01"),
    ]


def _pair_state(a: float, b: float) -> PureState:
    return PureState(a * ket("00").amps + b * ket("11").amps, normalized=True)


def _bob_map(a: float, b: float, basis_vec: PureState) -> np.ndarray:
    """2x2 map taking Alice's input to Bob's unnormalized qubit for one outcome."""
    cols = []
    for bit in "01":
        full = tensor([ket(bit), _pair_state(a, b)])
        res, _ = project(full, [0, 1], basis_vec)
        cols.append(res.amps)
    return np.stack(cols, axis=1)


def _filter_dilation(m: np.ndarray) -> np.ndarray:
    """Unitary on (bob, ancilla) whose ancilla-0 block is ``s_min M^-1``."""
    w, s, vh = np.linalg.svd(m)
    v = vh.conj().T
    if s[-1] <= np.sqrt(ZERO_WEIGHT):
        c = np.zeros(2)
    else:
        c = s[-1] / s
    # K = V diag(c) W^H; defects taken from the same SVD so they stay exact
    d = np.sqrt(np.clip(1.0 - c * c, 0.0, None))
    k = (v * c) @ w.conj().T
    u = np.zeros((4, 4), dtype=np.complex128)
    # ancilla is the high bit: rows/cols 0-1 are ancilla 0, 2-3 ancilla 1
    u[:2, :2] = k
    u[2:, :2] = (w * d) @ w.conj().T
    u[:2, 2:] = -(v * d) @ v.conj().T
    u[2:, 2:] = k.conj().T
    return u


def _as_lists(q, ch, f):
    # accept single-pair or bank objects without importing their modules
    pairs = list(getattr(ch, "pairs", [ch]))
    fams = list(getattr(f, "families", [f]))
    if hasattr(q, "alpha"):
        amps = np.array([q.alpha, q.beta])
    else:
        amps = np.asarray(q.amps)
    return PureState(amps, normalized=True), pairs, fams


def enumerate_outcomes(q, ch, f) -> list[EnumerationRecord]:
    """Every (Alice outcome, ancilla bits) record with its joint probability.

    Accepts either a single input qubit, Schmidt pair and measurement
    family, or k-pair banks with a 2**k amplitude input.  Records are in
    lexicographic order of (outcomes, ancilla bits).
    """
    psi_in, pairs, fams = _as_lists(q, ch, f)
    k = len(pairs)
    if len(fams) != k:
        raise ValueError(f"{k} channel pairs but {len(fams)} measurement families")
    if psi_in.num_qubits != k:
        raise ValueError(f"input has {psi_in.num_qubits} qubits but there are {k} pairs")
    if k > MAX_K:
        raise ValueError(f"oracle enumeration supports k <= {MAX_K}")

    bases = [_family_basis(fm.coeffs.a, fm.coeffs.b) for fm in fams]
    dilations = [
        [_filter_dilation(_bob_map(p.a, p.b, vec)) for vec in basis] for p, basis in zip(pairs, bases)
    ]

    # [P_1..P_k, A_1, B_1, ...] -> [P_1..P_k, A_1..A_k, B_1..B_k]
    raw = tensor([psi_in] + [_pair_state(p.a, p.b) for p in pairs])
    order = list(range(k)) + [k + 2 * i for i in range(k)] + [k + 2 * i + 1 for i in range(k)]
    total = permute_qubits(raw, order)
    targets = [qb for i in range(k) for qb in (i, k + i)]

    records = []
    for outcome in itertools.product(range(1, 5), repeat=k):
        vec = tensor([bases[i][m - 1] for i, m in enumerate(outcome)])
        bob, _ = project(total, targets, vec)
        leaves = [((), bob)]
        for i, m in enumerate(outcome):
            grown = []
            for bits, st in leaves:
                st = apply_unitary(tensor([st, ket("0")]), dilations[i][m - 1], [i, k])
                for bit in (0, 1):
                    child, _ = project(st, [k], ket(str(bit)))
                    grown.append((bits + (bit,), child))
            leaves = grown
        for bits, st in leaves:
            prob = st.norm_sq
            if prob > ZERO_WEIGHT:
                final = st.normalize()
                fid = fidelity(final, psi_in)
            else:
                final, fid = None, None
            records.append(EnumerationRecord(outcome, bits, prob, final, fid))
    return records


def success_total(records: Sequence[EnumerationRecord]) -> float:
    return float(sum(r.probability for r in records if r.success))


def branch_totals(records: Sequence[EnumerationRecord]) -> dict[tuple[int, ...], float]:
    """Success probability per Alice outcome."""
    out: dict[tuple[int, ...], float] = {}
    for r in records:
        out.setdefault(r.outcomes, 0.0)
        if r.success:
            out[r.outcomes] += r.probability
    return out


def _report_branches(report) -> dict[tuple[int, ...], float]:
    contributions = report.contributions
    if isinstance(contributions, dict):
        return dict(contributions)
    return {(m,): float(p) for m, p in enumerate(contributions, start=1)}


def crosscheck(report, records: Sequence[EnumerationRecord], tol: float = 1e-10) -> Verdict:
    """Compare a closed-form or simulated report against oracle records."""
    expected = _report_branches(report)
    observed = branch_totals(records)
    if set(expected) != set(observed):
        raise ValueError("report and records describe different configurations")
    deltas = {key: abs(expected[key] - observed[key]) for key in sorted(expected)}
    total_delta = abs(float(report.total) - success_total(records))
    max_delta = max(max(deltas.values()), total_delta)
    return Verdict(max_delta <= tol, max_delta, total_delta, deltas)


def write_records_csv(records: Sequence[EnumerationRecord], out: Union[TextIO, None] = None) -> str:
    """Write records as CSV; returns the text when no stream is given."""
    buf = out if out is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["outcome_label", "ancilla_bits", "probability", "fidelity"])
    for r in records:
        writer.writerow(
            [
                "-".join(str(m) for m in r.outcomes),
                "".join(str(b) for b in r.ancilla_bits),
                f"{r.probability:.17g}",
                "" if r.fidelity is None else f"{r.fidelity:.17g}",
            ]
        )
    return buf.getvalue() if out is None else ""
