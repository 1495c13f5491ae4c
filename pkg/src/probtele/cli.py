"""Command-line front end.

Subcommands ``teleport``, ``sweep``, ``multi``, ``session`` and ``oracle``
each print a table, CSV or JSON report.  The exit status is 0 only when
every internal cross-check of the run passes.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from typing import Optional

import numpy as np

from . import oracle
from .multiqubit import ChannelBank, MeasurementBank, MultiInput, multi_success_probability, multi_teleport_exact
from .protocol import (
    InputQubit,
    MeasurementFamily,
    matching_report,
    success_probability,
    teleport_exact,
    DEFAULT_MATCH_TOL,
)
from .schmidt import SchmidtPair, channel_width, entanglement_entropy
from .session import monte_carlo

log = logging.getLogger("probtele")

CROSSCHECK_TOL = 1e-10
FIDELITY_TOL = 1e-9
MC_SIGMAS = 4.0


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _b2(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 <= v <= 0.5:
        raise argparse.ArgumentTypeError(f"squared coefficient {v} outside [0, 0.5]")
    return v


def _banks(text: str) -> list[tuple[float, float]]:
    """``b2:bp2,b2:bp2,...`` -> list of (b2, bp2)."""
    out = []
    for item in text.split(","):
        try:
            b2, bp2 = item.split(":")
        except ValueError:
            raise argparse.ArgumentTypeError(f"bank entry {item!r} is not b2:bp2")
        out.append((_b2(b2), _b2(bp2)))
    return out


def _normalize(amps: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(amps))
    if norm == 0.0:
        raise ValueError("input amplitudes are all zero")
    if abs(norm * norm - 1.0) > 1e-6:
        log.warning("input renormalized (squared norm was %.9g)", norm * norm)
    return amps / norm


def _parse_amps(text: str) -> np.ndarray:
    try:
        return np.array([complex(t.replace(" ", "")) for t in text.split(",")])
    except ValueError:
        raise ValueError(f"cannot parse amplitudes {text!r}")


def _inputs(args, k: int) -> list[MultiInput]:
    """Inputs from ``--input``: ``random:N`` or a comma-separated amplitude list."""
    source = args.input
    if source is None:
        if k == 1:
            return [MultiInput(_normalize(np.array([args.alpha, args.beta], dtype=complex)))]
        source = "random:1"
    if source.startswith("random:"):
        n = int(source.split(":", 1)[1])
        if n < 1:
            raise ValueError("random:N needs N >= 1")
        rng = np.random.default_rng(args.seed)
        return [MultiInput.random(k, rng) for _ in range(n)]
    amps = _normalize(_parse_amps(source))
    if amps.size != 2**k:
        raise ValueError(f"expected {2**k} amplitudes, got {amps.size}")
    return [MultiInput(amps)]


def _pairs(args) -> list[tuple[float, float]]:
    if getattr(args, "banks", None):
        return args.banks
    return [(args.b2, args.bp2)]


def _config(args) -> tuple[ChannelBank, MeasurementBank]:
    pairs = _pairs(args)
    return ChannelBank.from_b2(p for p, _ in pairs), MeasurementBank.from_b2(f for _, f in pairs)


def _base_report(mode: str, args, ch: ChannelBank, mb: MeasurementBank) -> dict:
    pairs = _pairs(args)
    report = {
        "mode": mode,
        "params": {"b2": [p for p, _ in pairs], "bp2": [f for _, f in pairs]},
        "P_closed": multi_success_probability(ch, mb),
        "P_oracle": None,
        "branches": [],
        "matched": None,
        "limiting_side": None,
        "wasted": None,
        "mc": None,
    }
    if ch.k == 1:
        m = matching_report(ch.pairs[0], mb.families[0], DEFAULT_MATCH_TOL)
        report.update(matched=m.matched, limiting_side=m.limiting_side, wasted=m.wasted)
    return report


def _as_qubit(q: MultiInput) -> InputQubit:
    return InputQubit(q.amps[0], q.amps[1])


def cmd_teleport(args) -> tuple[dict, bool]:
    ch, mb = _config(args)
    pair, fam = ch.pairs[0], mb.families[0]
    inputs = _inputs(args, 1)
    report = _base_report("teleport", args, ch, mb)

    ok = True
    totals = []
    first = None
    for q in inputs:
        qubit = _as_qubit(q)
        rep = teleport_exact(qubit, pair, fam)
        records = oracle.enumerate_outcomes(qubit, pair, fam)
        verdict = oracle.crosscheck(rep, records, CROSSCHECK_TOL)
        ok &= verdict.passed
        ok &= rep.success_fidelity is None or rep.success_fidelity >= 1.0 - FIDELITY_TOL
        totals.append(rep.total)
        if first is None:
            first = rep, records
    ok &= max(totals) - min(totals) <= 1e-12
    ok &= abs(totals[0] - report["P_closed"]) <= CROSSCHECK_TOL

    # branch detail for the first input
    rep, records = first
    per_branch = oracle.branch_totals(records)
    report["P_oracle"] = oracle.success_total(records)
    report["branches"] = [
        {
            "m": br.index,
            "x": br.x,
            "y": br.y,
            "born_weight": br.born_weight,
            "p": p,
            "p_oracle": per_branch[(br.index,)],
            "scale_target": c.scale_target.value,
            "ratio": c.ratio,
        }
        for br, c, p in zip(rep.branches, rep.corrections, rep.contributions)
    ]
    report["channel_entropy"] = entanglement_entropy(pair)
    report["measurement_entropy"] = entanglement_entropy(fam.coeffs)
    report["channel_width"] = channel_width(pair)
    report["sending_ability"] = channel_width(fam.coeffs)
    report["inputs"] = len(inputs)
    report["P_spread"] = max(totals) - min(totals)
    return report, ok


def cmd_sweep(args) -> tuple[dict, bool]:
    n = args.grid
    if n < 2:
        raise ValueError("grid needs at least 2 points per axis")
    q = InputQubit(*_normalize(np.array([args.alpha, args.beta], dtype=complex)))
    grid = np.linspace(0.0, 0.5, n)
    rows = []
    for b2 in grid:
        for bp2 in grid:
            pair, fam = SchmidtPair.from_b2(b2), MeasurementFamily.from_b2(bp2)
            p_closed = success_probability(pair, fam)
            p_oracle = oracle.success_total(oracle.enumerate_outcomes(q, pair, fam))
            rows.append({"b2": float(b2), "bp2": float(bp2), "P_closed": p_closed,
                         "P_oracle": p_oracle, "delta": abs(p_closed - p_oracle)})
    max_delta = max(r["delta"] for r in rows)
    report = {
        "mode": "sweep",
        "params": {"grid": n, "alpha": [q.alpha.real, q.alpha.imag], "beta": [q.beta.real, q.beta.imag]},
        "P_closed": None,
        "P_oracle": None,
        "branches": [],
        "matched": None,
        "limiting_side": None,
        "wasted": None,
        "mc": None,
        "rows": rows,
        "max_delta": max_delta,
    }
    return report, max_delta <= CROSSCHECK_TOL


def cmd_multi(args) -> tuple[dict, bool]:
    ch, mb = _config(args)
    if ch.k > oracle.MAX_K:
        report = _base_report("multi", args, ch, mb)
        log.warning("k=%d exceeds the full-vector limit; closed form only", ch.k)
        return report, True
    inputs = _inputs(args, ch.k)
    report = _base_report("multi", args, ch, mb)
    ok = True
    fids = []
    for q in inputs:
        rep = multi_teleport_exact(q, ch, mb)
        records = oracle.enumerate_outcomes(q, ch, mb)
        ok &= oracle.crosscheck(rep, records, CROSSCHECK_TOL).passed
        ok &= abs(rep.total - report["P_closed"]) <= CROSSCHECK_TOL
        if rep.fidelity is not None:
            fids.append(rep.fidelity)
    ok &= all(f >= 1.0 - FIDELITY_TOL for f in fids)

    rep = multi_teleport_exact(inputs[0], ch, mb)
    per_outcome = oracle.branch_totals(oracle.enumerate_outcomes(inputs[0], ch, mb))
    report["P_oracle"] = float(sum(per_outcome.values()))
    report["P_sim"] = rep.total
    report["fidelity"] = min(fids) if fids else None
    report["branches"] = [
        {"outcome": "-".join(map(str, key)), "p": rep.contributions[key], "p_oracle": per_outcome[key],
         "born_weight": rep.outcome_weights[key]}
        for key in sorted(rep.contributions)
    ]
    return report, ok


def cmd_session(args) -> tuple[dict, bool]:
    ch, mb = _config(args)
    q = _inputs(args, ch.k)[0]
    mc = monte_carlo(q, ch, mb, args.trials, args.seed, workers=args.workers, transport=args.transport)
    report = _base_report("session", args, ch, mb)
    p = report["P_closed"]
    sigma = math.sqrt(max(p * (1.0 - p), 0.0) / args.trials)
    report["mc"] = {
        "trials": mc.n_trials,
        "successes": mc.successes,
        "freq": mc.success_frequency,
        "sigma": sigma,
        "halfwidth": mc.confidence_halfwidth,
    }
    report["branches"] = [
        {"outcome": "-".join(map(str, key)), "count": count} for key, count in mc.histogram.items()
    ]
    ok = abs(mc.success_frequency - p) <= MC_SIGMAS * sigma + 1e-12
    ok &= mc.min_success_fidelity is None or mc.min_success_fidelity >= 1.0 - FIDELITY_TOL
    return report, ok


def cmd_oracle(args) -> tuple[dict, bool]:
    ch, mb = _config(args)
    q = _inputs(args, ch.k)[0]
    records = oracle.enumerate_outcomes(q, ch, mb)
    report = _base_report("oracle", args, ch, mb)
    report["P_oracle"] = oracle.success_total(records)
    report["branches"] = [
        {"outcome": "-".join(map(str, r.outcomes)), "ancilla_bits": "".join(map(str, r.ancilla_bits)),
         "probability": r.probability, "fidelity": r.fidelity}
        for r in records
    ]
    report["records"] = records
    prob_sum = sum(r.probability for r in records)
    ok = abs(report["P_oracle"] - report["P_closed"]) <= CROSSCHECK_TOL
    ok &= abs(prob_sum - 1.0) <= 1e-9
    ok &= all(r.fidelity >= 1.0 - FIDELITY_TOL for r in records if r.success and r.fidelity is not None)
    return report, ok


COMMANDS = {
    "teleport": cmd_teleport,
    "sweep": cmd_sweep,
    "multi": cmd_multi,
    "session": cmd_session,
    "oracle": cmd_oracle,
}


def _csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    mode = report["mode"]
    if mode == "sweep":
        w.writerow(["b2", "bp2", "P_closed", "P_oracle", "delta"])
        for r in report["rows"]:
            w.writerow([_fmt(r[c]) for c in ("b2", "bp2", "P_closed", "P_oracle", "delta")])
    elif mode == "teleport":
        w.writerow(["m", "x", "y", "born_weight", "p", "p_oracle"])
        for br in report["branches"]:
            w.writerow([br["m"]] + [_fmt(br[c]) for c in ("x", "y", "born_weight", "p", "p_oracle")])
    elif mode == "multi":
        w.writerow(["outcome", "born_weight", "p", "p_oracle"])
        for br in report["branches"]:
            w.writerow([br["outcome"]] + [_fmt(br[c]) for c in ("born_weight", "p", "p_oracle")])
    elif mode == "session":
        mc = report["mc"]
        w.writerow(["trials", "successes", "freq", "sigma", "P_closed"])
        w.writerow([mc["trials"], mc["successes"], _fmt(mc["freq"]), _fmt(mc["sigma"]), _fmt(report["P_closed"])])
    elif mode == "oracle":
        return oracle.write_records_csv(report["records"])
    return buf.getvalue()


def _json(report: dict) -> str:
    clean = {k: v for k, v in report.items() if k != "records"}
    return json.dumps(clean, indent=2) + "\n"


def _table(report: dict) -> str:
    lines = [f"mode: {report['mode']}"]
    for key in ("P_closed", "P_oracle", "P_sim", "fidelity", "matched", "limiting_side", "wasted",
                "channel_width", "sending_ability", "max_delta"):
        if report.get(key) is not None:
            v = report[key]
            lines.append(f"{key:>16}: {v:.12g}" if isinstance(v, float) else f"{key:>16}: {v}")
    if report["mc"]:
        mc = report["mc"]
        lines.append(f"{'mc':>16}: {mc['successes']}/{mc['trials']} = {mc['freq']:.6f} (sigma {mc['sigma']:.2e})")
    if report["mode"] == "sweep":
        lines.append(f"{'b2':>8} {'bp2':>8} {'P_closed':>12} {'P_oracle':>12} {'delta':>10}")
        for r in report["rows"]:
            lines.append(f"{r['b2']:8.4f} {r['bp2']:8.4f} {r['P_closed']:12.8f} {r['P_oracle']:12.8f} {r['delta']:10.2e}")
    elif report["branches"]:
        keys = list(report["branches"][0])
        lines.append("  ".join(f"{k:>12}" for k in keys))
        for br in report["branches"]:
            cells = []
            for k in keys:
                v = br[k]
                cells.append(f"{v:12.8f}" if isinstance(v, float) else f"{str(v):>12}")
            lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


RENDERERS = {"table": _table, "csv": _csv, "json": _json}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="probtele", description="Conclusive teleportation through partially entangled channels.")
    sub = ap.add_subparsers(dest="mode", required=True)

    def common(p, pair=True, banks=False):
        if pair:
            p.add_argument("--b2", type=_b2, default=0.5, help="channel minor Schmidt weight b^2")
            p.add_argument("--bp2", type=_b2, default=0.5, help="measurement minor Schmidt weight b'^2")
        if banks:
            p.add_argument("--banks", type=_banks, help="per-pair b2:bp2 list, e.g. 0.2:0.5,0.2:0.5")
        p.add_argument("--alpha", type=complex, default=0.6)
        p.add_argument("--beta", type=complex, default=0.8)
        p.add_argument("--input", help="amplitude list a0,a1,... or random:N")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=sorted(RENDERERS), default="table")
        p.add_argument("--out", help="write output here instead of stdout")

    common(sub.add_parser("teleport", help="single-qubit protocol report"))
    sweep = sub.add_parser("sweep", help="closed form vs oracle over a (b2, bp2) grid")
    common(sweep, pair=False)
    sweep.add_argument("--grid", type=int, default=11)
    multi = sub.add_parser("multi", help="k-pair protocol")
    common(multi, pair=False, banks=True)
    session = sub.add_parser("session", help="Monte Carlo over Alice/Bob sessions")
    common(session, banks=True)
    session.add_argument("--trials", type=int, default=10000)
    session.add_argument("--workers", type=int, default=1)
    session.add_argument("--transport", choices=["inprocess", "socket"], default="inprocess")
    common(sub.add_parser("oracle", help="dump brute-force enumeration records"), banks=True)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.mode == "multi" and not args.banks:
        parser.error("multi needs --banks")
    try:
        report, ok = COMMANDS[args.mode](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = RENDERERS[args.format](report)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        print("cross-check FAILED", file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
