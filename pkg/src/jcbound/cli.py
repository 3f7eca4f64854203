"""Command-line interface: ``jcbound <subcommand> ...``.

Exit codes: 0 success, 1 invalid input, 2 a certificate or study assertion failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Any, Iterable, Sequence

import numpy as np

from .criteria import report
from .dynamics import (
    EvolutionSpec,
    RegimeError,
    certify_generation,
    evolve_resonant,
    evolve_unitary,
    initial_state,
)
from .harness import SampleConfig, grid_scan_family, hull_construct, monte_carlo_study, sample_arrays
from .normal_form import tau_dense
from .range_cert import certify_n4, range_search
from .state import (
    InvalidStateError,
    StructureError,
    SymmetricState,
    partial_transpose,
    state_from_dict,
    state_to_dict,
    validate,
)

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2

STATE_SCHEMA = """state JSON (one object per document or per line):
  {"N": int >= 2, "a": [N reals >= 0], "b": [N reals >= 0],
   "c": [N-1 objects {"re": real, "im": real}]}   # c[i] is c_{i+1}
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n\n{STATE_SCHEMA}")
        sys.exit(EXIT_INVALID)


def _dump(obj: Any) -> str:
    return json.dumps(obj, allow_nan=True)


def _read_states(path: str | None) -> list[SymmetricState]:
    if path in (None, "-"):
        text = sys.stdin.read()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    text = text.strip()
    if not text:
        raise StructureError("no input")
    try:
        docs = json.loads(text)
        docs = docs if isinstance(docs, list) else [docs]
    except json.JSONDecodeError:
        try:
            docs = [json.loads(line) for line in text.splitlines() if line.strip()]
        except json.JSONDecodeError as exc:
            raise StructureError(f"invalid JSON: {exc}") from None
    return [state_from_dict(d) for d in docs]


def cmd_validate(args) -> int:
    code = EXIT_OK
    for s in _read_states(args.input):
        rep = validate(s)
        print(_dump(rep.to_dict()))
        if not rep.ok:
            code = EXIT_INVALID
    return code


def cmd_report(args) -> int:
    code = EXIT_OK
    for s in _read_states(args.input):
        rep = validate(s)
        if not rep.ok:
            print(_dump({"error": "invalid state", **rep.to_dict()}))
            code = EXIT_INVALID
            continue
        print(_dump(report(s).to_dict()))
    return code


def _write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def cmd_evolve(args) -> int:
    spec = EvolutionSpec(args.lam, args.m, args.g, 0.0, args.omega0, args.delta, args.ncut)
    start = initial_state(spec)
    rows = []
    for t in np.linspace(0.0, args.t_max, args.steps + 1):
        st = spec.at(float(t))
        s = evolve_resonant(st) if spec.delta == 0 else evolve_unitary(start, st)
        r = report(s)
        rows.append([f"{t:.12g}", repr(r.negativity), repr(r.ccnr_norm), repr(r.cm_gap), r.verdict.value])
    _write_csv(["t", "negativity", "ccnr_norm", "cm_gap", "verdict"], rows)
    return EXIT_OK


def cmd_scan_family(args) -> int:
    scan = grid_scan_family((0.0, args.y2_max), (0.0, args.y3_max), args.step, search=args.search)
    sys.stdout.write(scan.to_csv())
    for f in scan.failures:
        print(f, file=sys.stderr)
    return EXIT_FAILED if scan.failures else EXIT_OK


def cmd_sample(args) -> int:
    if args.seed is None:
        print("warning: --seed not given, using 0", file=sys.stderr)
        args.seed = 0
    cfg = SampleConfig(args.n, args.count, args.seed, not args.unnormalized, args.ppt_only)
    if args.study:
        rep = monte_carlo_study(cfg)
        print(_dump(rep.to_dict()))
        return EXIT_OK if rep.ok else EXIT_FAILED
    a, b, c = sample_arrays(cfg)
    out = sys.stdout
    for i in range(cfg.count):
        out.write(_dump(state_to_dict(SymmetricState(a[i], b[i], c[i]))) + "\n")
    return EXIT_OK


def cmd_hull(args) -> int:
    dec = hull_construct(args.n, args.y)
    print(_dump(dec.to_dict()))
    return EXIT_OK if dec.reconstruction_error <= 1e-12 else EXIT_FAILED


def cmd_certify(args) -> int:
    if args.generation:
        spec = EvolutionSpec(args.lam, args.m, args.g, args.t)
        cert = certify_generation(spec, t_threshold=args.t_threshold, search=args.search)
        print(_dump(cert.to_dict()))
        return EXIT_OK if all(cert.details["checks"].values()) else EXIT_FAILED
    if args.y2 is None or args.y3 is None:
        raise StructureError("certify needs --y2 and --y3 (or --generation)")
    cert = certify_n4(args.y2, args.y3)
    out = cert.to_dict()
    code = EXIT_OK
    if args.search:
        tau = tau_dense([args.y2, args.y2, args.y3])
        rs = range_search(tau, partial_transpose(tau, "A"))
        out["search"] = rs.to_dict()
        if args.y2 < args.y3 and rs.verdict != cert.verdict:
            code = EXIT_FAILED
    print(_dump(out))
    return code


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jcbound", description="Entanglement of number-conserving qubit-qudit states.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check state JSON for validity")
    v.add_argument("input", nargs="?", help="file (default stdin)")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("report", help="criteria report for each input state")
    r.add_argument("input", nargs="?", help="file (default stdin)")
    r.set_defaults(func=cmd_report)

    e = sub.add_parser("evolve", help="JC time series as CSV")
    e.add_argument("--lam", type=float, required=True)
    e.add_argument("--m", type=float, required=True)
    e.add_argument("--g", type=float, default=1.0)
    e.add_argument("--t-max", type=float, required=True)
    e.add_argument("--steps", type=int, default=100)
    e.add_argument("--ncut", type=int, default=4)
    e.add_argument("--delta", type=float, default=0.0)
    e.add_argument("--omega0", type=float, default=0.0)
    e.set_defaults(func=cmd_evolve)

    f = sub.add_parser("scan-family", help="scan the N=4 bound entangled family, CSV")
    f.add_argument("--y2-max", type=float, default=10.0)
    f.add_argument("--y3-max", type=float, default=10.0)
    f.add_argument("--step", type=float, default=0.1)
    f.add_argument("--search", action="store_true", help="also run the numeric range search")
    f.set_defaults(func=cmd_scan_family)

    s = sub.add_parser("sample", help="seeded random states (JSON lines) or a study report")
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int)
    s.add_argument("--ppt-only", action="store_true")
    s.add_argument("--unnormalized", action="store_true")
    s.add_argument("--study", action="store_true", help="run the criteria study instead of emitting states")
    s.set_defaults(func=cmd_sample)

    h = sub.add_parser("hull", help="separable decomposition for N=2,3")
    h.add_argument("--n", type=int, required=True)
    h.add_argument("--y", type=float, nargs="+", required=True)
    h.set_defaults(func=cmd_hull)

    c = sub.add_parser("certify", help="bound-entanglement certificate (JSON)")
    c.add_argument("--y2", type=float)
    c.add_argument("--y3", type=float)
    c.add_argument("--search", action="store_true")
    c.add_argument("--generation", action="store_true", help="certify the dynamically generated state")
    c.add_argument("--lam", type=float, default=0.5)
    c.add_argument("--m", type=float, default=1.0)
    c.add_argument("--g", type=float, default=1.0)
    c.add_argument("--t", type=float, default=0.05)
    c.add_argument("--t-threshold", type=float, default=0.2)
    c.set_defaults(func=cmd_certify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:  # pragma: no cover - downstream closed early
        return EXIT_OK
    except (StructureError, InvalidStateError, RegimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
