"""Command line entry point: JSON problems in, JSON certificates out.

Exit codes: 0 pass, 1 usage or schema error, 2 infeasible or failed certificate.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import workflows
from .workflows import Infeasible, ProblemError

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


def _read_json(path: str | None):
    try:
        if path in (None, "-"):
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemError(f"cannot read JSON from {path or 'stdin'}: {exc}") from exc


def _write_json(obj, path: str | None):
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dbrinterp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_in=True):
        sp.add_argument("--setting", choices=workflows.SETTINGS)
        if needs_in:
            sp.add_argument("--in", dest="infile", default="-", help="problem JSON (default stdin)")
        sp.add_argument("--out", dest="outfile", default="-", help="output JSON (default stdout)")
        sp.add_argument("--order", type=int, help="truncation degree")
        sp.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")

    g = sub.add_parser("generate", help="random well-posed problem")
    common(g, needs_in=False)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--d", type=int, default=2, help="number of variables")
    g.add_argument("--n", type=int, default=3, help="state dimension")
    g.add_argument("--p", type=int, default=1, help="output dimension (rows of A for douglas)")
    g.add_argument("--q", type=int, default=1, help="input dimension of S0 (columns of B for douglas)")
    g.add_argument("--state-dim", type=int, default=2, help="state dimension of the S0 realization")

    s = sub.add_parser("solve", help="solve and emit solution plus certificate")
    common(s)
    c = sub.add_parser("certify", help="solve and emit only the certificate")
    common(c)
    v = sub.add_parser("verify", help="check a given solution against a problem")
    common(v)
    v.add_argument("--solution", required=True, help="solution JSON (output of solve or a bare solution)")
    a = sub.add_parser("appendix-b", help="two-point witness matrix and its definiteness verdict")
    a.add_argument("--out", dest="outfile", default="-")
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        if args.command == "appendix-b":
            cert = workflows.witness_certificate()
            _write_json(cert.to_json(), args.outfile)
            return EXIT_PASS if cert.passed else EXIT_FAIL
        if args.command == "generate":
            if args.setting is None:
                raise ProblemError("generate needs --setting")
            spec = workflows.generate(args.setting, args.seed, d=args.d, n=args.n, p=args.p, q=args.q,
                                      state_dim=args.state_dim, order=args.order)
            _write_json(spec, args.outfile)
            return EXIT_PASS
        spec = _read_json(args.infile)
        if args.command == "verify":
            solution = _read_json(args.solution)
            cert = workflows.verify(spec, solution, setting=args.setting, tol_scale=args.tol_scale,
                                    order=args.order)
            _write_json(cert.to_json(), args.outfile)
            return EXIT_PASS if cert.passed else EXIT_FAIL
        try:
            solution, cert = workflows.solve(spec, setting=args.setting, order=args.order,
                                             tol_scale=args.tol_scale)
        except Infeasible as exc:
            out = exc.certificate.to_json()
            out["infeasible"] = str(exc)
            _write_json(out if args.command == "certify" else {"solution": None, "certificate": out},
                        args.outfile)
            return EXIT_FAIL
        if args.command == "certify":
            _write_json(cert.to_json(), args.outfile)
        else:
            _write_json({"solution": solution, "certificate": cert.to_json()}, args.outfile)
        return EXIT_PASS if cert.passed else EXIT_FAIL
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
