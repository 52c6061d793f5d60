"""Batch command-line front end: generate, validate, verify, bound-check, certify."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bounds import check_bounds
from .builtins import FAMILIES, BuiltinParameterError, build
from .errors import BackendUnsupportedError, CanonicalizationError, ProtocolError
from .pauli import PauliParseError
from .protocol import Protocol, load_protocol
from .stringorder import certify_spt
from .verifier import (
    DEFAULT_SHOTS,
    DEFAULT_TOLERANCE,
    audit_violations,
    heisenberg_verify,
    verify_state_transfer,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
COMMANDS = ("gen", "validate", "verify", "bounds", "string-order", "report")


class UsageError(Exception):
    """Bad arguments or an unreadable protocol."""


def _add_source(p: argparse.ArgumentParser):
    p.add_argument("protocol", nargs="?", help="protocol JSON document")
    p.add_argument("--builtin", choices=FAMILIES, help="use a built-in family instead of a file")
    p.add_argument("--n", type=int, help="number of sites (cluster_x, cluster_y)")
    p.add_argument("--R", type=int, help="number of regions (cluster_y, kfold_cluster, valence_bond)")
    p.add_argument("--tets", type=int, help="number of tetrahedra (hypergraph)")
    p.add_argument("--k", type=int, help="number of logical qubits (kfold_cluster, valence_bond)")
    p.add_argument("--out", help="write the JSON report to this path")
    p.add_argument("--json", action="store_true", help="print the JSON report to stdout")


def _add_run(p: argparse.ArgumentParser, modes=True):
    p.add_argument("--backend", choices=("auto", "statevector", "stabilizer"), default="auto")
    if modes:
        p.add_argument(
            "--mode", choices=("enumerate", "sample", "heisenberg"), default="enumerate"
        )
        p.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="telespt", description="Teleportation protocol verifier and string-order certifier."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_source(sub.add_parser("gen", help="emit a built-in protocol document"))
    _add_source(sub.add_parser("validate", help="structural and commutation checks"))
    p = sub.add_parser("verify", help="check perfect state transfer")
    _add_source(p)
    _add_run(p)
    _add_source(sub.add_parser("bounds", help="evaluate the locality bounds"))
    p = sub.add_parser("string-order", help="certify the string order of the resource state")
    _add_source(p)
    _add_run(p, modes=False)
    p = sub.add_parser("report", help="verification, bounds and certificate in one document")
    _add_source(p)
    _add_run(p)
    return parser


def _builtin_params(args) -> tuple:
    fam = args.builtin

    def need(name):
        value = getattr(args, name)
        if value is None:
            raise UsageError(f"--builtin {fam} needs --{name}")
        return value

    if fam == "cluster_x":
        return (need("n"),)
    if fam == "cluster_y":
        if args.R is not None:
            return (args.R,)
        n = need("n")
        if (n - 1) % 3:
            raise UsageError(f"cluster_y needs N = 3R + 1, got {n}")
        return ((n - 1) // 3,)
    if fam == "hypergraph":
        return (need("tets"),)
    return (need("k"), need("R"))


def load_source(args) -> Protocol:
    if args.builtin and args.protocol:
        raise UsageError("give either a protocol file or --builtin, not both")
    if args.builtin:
        return build(args.builtin, *_builtin_params(args))
    if not args.protocol:
        raise UsageError("a protocol file or --builtin is required")
    path = Path(args.protocol)
    if not path.exists():
        raise UsageError(f"no such file: {path}")
    return load_protocol(path)


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(args, doc: dict, lines: list[str]):
    text = _dump(doc)
    if args.out:
        Path(args.out).write_text(text)
    if args.json:
        sys.stdout.write(text)
    else:
        for line in lines:
            print(line)


def _verification(p: Protocol, args):
    if args.mode == "heisenberg":
        return heisenberg_verify(p)
    return verify_state_transfer(
        p, mode=args.mode, backend=args.backend, shots=args.shots,
        seed=args.seed, tolerance=args.tolerance,
    )


def _verify_lines(rep) -> list[str]:
    status = "PASS" if rep.passed else "FAIL"
    if rep.results:
        counts = sorted({len(r.trajectories) for r in rep.results})
        per = "/".join(str(n) for n in counts)
        what = f"{len(rep.results)} inputs x {per} trajectories"
    else:
        what = f"{len(rep.heisenberg)} logical operators"
    lines = [
        f"{status} {rep.protocol}: {what}, "
        f"min fidelity {rep.min_fidelity:.12g} ({rep.mode}, {rep.backend})"
    ]
    lines += [f"  violation: {v}" for v in rep.violations]
    lines += [f"  failed: {f}" for f in rep.failures()]
    return lines


def _bounds_lines(rep) -> list[str]:
    lines = [
        f"{'PASS' if rep.passed else 'FAIL'} {rep.protocol}: L={rep.L} T={rep.T} "
        f"v={rep.v} M={rep.M} k={rep.k}"
    ]
    for c in rep.checks:
        mark = "ok" if c.passed else "FAIL"
        extra = "" if c.applies else " (not applicable)"
        lines.append(f"  {c.name}: {mark} value={c.value} slack={c.slack}{extra} {c.note}".rstrip())
    return lines


def _cert_lines(cert) -> list[str]:
    lines = [
        f"{'PASS' if cert.passed else 'FAIL'} {cert.protocol}: symmetry {cert.symmetry}, "
        f"R={cert.R}, {len(cert.expectations)} SOPs evaluated ({cert.method})"
    ]
    for e in cert.end_to_end:
        text = e["operator"] or " | ".join(
            " ".join(part) or "I" for part in (e["left"], e["bulk"], e["right"])
        )
        value = cert.expectations.get((e["slot"], e["axis"], *e["interval"]))
        lines.append(f"  S[{e['slot']},{e['axis']}] = {text}  <S> = {value}")
    lines.append("  generators: " + ", ".join(cert.generators))
    lines += [f"  issue: {i}" for i in cert.issues]
    lines += [f"  note: {i}" for i in cert.notes]
    return lines


def run(args) -> int:
    p = load_source(args)
    cmd = args.command
    if cmd == "gen":
        text = p.dumps()
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if cmd == "validate":
        violations = audit_violations(p)
        doc = {"protocol": p.name, "violations": violations, "pass": not violations}
        lines = [f"{'PASS' if not violations else 'FAIL'} {p.name}"]
        lines += [f"  violation: {v}" for v in violations]
        _emit(args, doc, lines)
        return EXIT_OK if not violations else EXIT_FAIL
    if cmd == "verify":
        rep = _verification(p, args)
        _emit(args, rep.to_dict(), _verify_lines(rep))
        return EXIT_OK if rep.passed else EXIT_FAIL
    if cmd == "bounds":
        rep = check_bounds(p)
        _emit(args, rep.to_dict(), _bounds_lines(rep))
        return EXIT_OK if rep.passed else EXIT_FAIL
    if cmd == "string-order":
        cert = certify_spt(p, backend=args.backend, tolerance=args.tolerance, seed=args.seed)
        _emit(args, cert.to_dict(), _cert_lines(cert))
        return EXIT_OK if cert.passed else EXIT_FAIL
    # report
    ver = _verification(p, args)
    cert = certify_spt(p, tolerance=args.tolerance, seed=args.seed)
    bounds = check_bounds(p, regions=cert.R)
    ok = ver.passed and bounds.passed and cert.passed
    doc = {
        "protocol": p.name,
        "verification": ver.to_dict(),
        "bounds": bounds.to_dict(),
        "certificate": cert.to_dict(),
        "pass": ok,
    }
    _emit(args, doc, _verify_lines(ver) + _bounds_lines(bounds) + _cert_lines(cert))
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return run(args)
    except (UsageError, BuiltinParameterError, ProtocolError, PauliParseError,
            json.JSONDecodeError, CanonicalizationError, BackendUnsupportedError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
