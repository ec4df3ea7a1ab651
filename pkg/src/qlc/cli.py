"""Command-line drivers that emit CSV or JSON artifacts.

Every command is deterministic for a fixed set of arguments. Failures map
to the exit code of the raised error class.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .bounds import classical_no_go_gap
from .circuit import perturb_circuit, random_circuit
from .errors import CapacityError, QlcError
from .linalg import expm_hermitian, pure_trace_distance, random_hermitian, random_state
from .localparam import decouple, localize_unitary, parameterize, random_decoupling_instance
from .protocol import DeskScaleParams, derive_config, error_ledger, memory_cost, run_pipeline_desk
from .qlan import ORACLE_CAP, amplitudes_from_values, qlan_bruteforce_oracle, qlan_overlap, qlan_overlap_detail


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _flatten(doc: dict, prefix: str = "") -> list[list]:
    rows = []
    for key in sorted(doc):
        value = doc[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows += _flatten(value, name + ".")
        elif isinstance(value, (list, tuple)) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                rows += _flatten(item, f"{name}.{i}.")
        elif isinstance(value, (list, tuple)):
            rows.append([name, ";".join(_fmt(v) for v in value)])
        else:
            rows.append([name, value])
    return rows


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def _emit_report(doc: dict, args) -> str:
    if args.format == "json":
        return json.dumps(_json_safe(doc), sort_keys=True, indent=2) + "\n"
    return _csv_text(["key", "value"], _flatten(doc))


def _emit_table(header: list[str], rows: list[list], args) -> str:
    if args.format == "json":
        return json.dumps(_json_safe([dict(zip(header, r)) for r in rows]), indent=2) + "\n"
    return _csv_text(header, rows)


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run_manifest(args) -> dict:
    """Command, parameters, seed, artifact path and version of one invocation."""
    params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest", "command")}
    return {
        "command": args.command,
        "parameters": _json_safe(params),
        "seed": getattr(args, "seed", None),
        "artifacts": [args.out] if args.out else [],
        "version": __version__,
    }


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("QLC_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# commands


def cmd_qlan_converge(args) -> str:
    if args.K > 4 or abs(args.amp) > 2:
        raise QlcError("qlan-converge needs K <= 4 and |amp| <= 2")
    amps = amplitudes_from_values([args.amp] * args.K)
    rows = []
    for N in args.N_list:
        res = qlan_overlap_detail(amps, N, args.cutoff)
        rows.append([N, args.K, abs(args.amp), max(0.0, res.infidelity), max(res.cutoffs, default=0), res.terms])
    values = [r[3] for r in rows]
    if any(b > a for a, b in zip(values, values[1:])):
        raise QlcError(f"one_minus_fidelity is not monotone: {values}")
    header = ["N", "K", "max_amp", "one_minus_fidelity", "cutoff", "terms_summed"]
    return _emit_table(header, rows, args)


def cmd_compress_plan(args) -> str:
    cfg = derive_config(args.n, args.d, args.N, args.delta_exp, enforce_window=not args.allow_outside_window)
    doc = {
        "config": cfg.as_dict(),
        "ledger": error_ledger(cfg).as_dict(),
        "memory": memory_cost(cfg).as_dict(),
    }
    return _emit_report(doc, args)


def _param_trial(job: tuple[int, int, float, int]) -> list:
    n, d, eps, seed = job
    rng = np.random.default_rng(seed)
    base = random_circuit(n, d, rng)
    target = perturb_circuit(base, eps, int(rng.integers(2**31)))
    lp = parameterize(target.circuit, base, max(target.state_distance_bound, 1e-12))
    cert = max((r.eps_certificate for r in lp.rotations), default=0.0)
    return [lp.reconstruction_error, lp.n_gate, lp.max_support, lp.max_overlap, cert, lp.state_distance]


def cmd_param_check(args) -> str:
    if args.n > 8 or args.d > 2:
        raise QlcError("param-check needs n <= 8 and d <= 2")
    seeds = np.random.SeedSequence(args.seed).generate_state(args.trials, dtype=np.uint32)
    jobs = [(args.n, args.d, args.eps, int(s)) for s in seeds]
    workers = min(_workers(), len(jobs)) or 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_param_trial, jobs))
    else:
        results = [_param_trial(j) for j in jobs]
    rows = [[i] + r for i, r in enumerate(results)]
    header = [
        "trial",
        "reconstruction_error",
        "n_gate",
        "max_support",
        "max_overlap",
        "max_certificate",
        "state_distance",
    ]
    return _emit_table(header, rows, args)


def cmd_noclassical(args) -> str:
    return _emit_report(classical_no_go_gap(args.cutoff).as_dict(), args)


def cmd_oracle_suite(args) -> str:
    """Closed-form Q-LAN against the dense oracle, then randomized rotation checks."""
    for K in (1, 2):
        if (K + 1) ** args.max_N > ORACLE_CAP:
            raise CapacityError(f"max_N = {args.max_N} needs (K+1)^N = {(K + 1) ** args.max_N} > {ORACLE_CAP}")
    rng = np.random.default_rng(args.seed)
    rows = []
    for K in (1, 2):
        for N in range(1, args.max_N + 1):
            u = rng.uniform(0.1, 1.0, K) * np.exp(2j * np.pi * rng.uniform(size=K))
            amps = amplitudes_from_values(u)
            gap = abs(qlan_overlap(amps, N) - qlan_bruteforce_oracle(amps, N))
            rows.append([f"qlan_K{K}_N{N}", gap, 1e-10, gap <= 1e-10])
    worst = 0.0
    for _ in range(args.trials):
        kw = random_decoupling_instance(rng, float(10 ** rng.uniform(-3, -1)))
        res = decouple(**kw)
        worst = max(worst, res.achieved / res.hypothesis if res.hypothesis > 0 else 0.0)
    rows.append(["decoupling_ratio_max", worst, 3.0, worst <= 3.0])
    worst = 0.0
    for _ in range(args.trials):
        phi = random_state(4, rng)
        v = expm_hermitian(random_hermitian(4, rng), float(10 ** rng.uniform(-3, -1)))
        d_tr = pure_trace_distance(phi, v @ phi)
        if d_tr > 0:
            worst = max(worst, localize_unitary(v, phi, 1.0).eps_certificate / d_tr)
    rows.append(["localization_ratio_max", worst, 4.0, worst <= 4.0])
    text = _csv_text(["check", "value", "tolerance", "passed"], rows)
    if not all(r[3] for r in rows):
        sys.stdout.write(text)
        raise QlcError("oracle suite found a failing comparison")
    return text


def cmd_pipeline(args) -> str:
    rng = np.random.default_rng(args.seed)
    c = random_circuit(args.n, args.d, rng)
    sim = DeskScaleParams(N_surrogate=int(args.N), perturbation=args.eps, delta_exp=args.delta_exp, seed=args.seed)
    return _emit_report(run_pipeline_desk(c, sim).as_dict(), args)


def _int_list(text: str) -> list[int]:
    return [int(float(x)) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qlc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt="csv"):
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=fmt)
        p.add_argument("--manifest", default=None, help="write the run manifest as JSON to this path")
        return p

    p = common(sub.add_parser("qlan-converge", help="Q-LAN infidelity against N"))
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--amp", type=float, default=1.0)
    p.add_argument("--N", dest="N_list", type=_int_list, default=[100, 1000, 10_000, 100_000])
    p.add_argument("--cutoff", type=int, default=None)
    p.set_defaults(func=cmd_qlan_converge)

    p = common(sub.add_parser("compress-plan", help="configuration, ledger and memory"), "json")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--delta-exp", type=float, required=True)
    p.add_argument("--allow-outside-window", action="store_true")
    p.set_defaults(func=cmd_compress_plan)

    p = common(sub.add_parser("param-check", help="local parameterization on random instances"))
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_param_check)

    p = common(sub.add_parser("noclassical", help="Hellinger/Bures no-go gap"), "json")
    p.add_argument("--cutoff", type=int, default=40)
    p.set_defaults(func=cmd_noclassical)

    p = common(sub.add_parser("oracle-suite", help="oracle comparisons"))
    p.add_argument("--max-N", type=int, default=6)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_suite)

    p = common(sub.add_parser("pipeline", help="desk-scale run of every protocol stage"), "json")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--N", type=float, default=10_000)
    p.add_argument("--delta-exp", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
    except QlcError as exc:
        print(f"qlc {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    _write(text, args.out)
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(run_manifest(args), sort_keys=True, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
