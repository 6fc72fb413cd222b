"""Command-line interface: ``margext {check,fixture,convert,kraus,pad}``.

Exit codes: 0 extremal, 1 not extremal, 2 inconclusive, 64 unreadable
input or unknown name, 65 inputs that parse but violate a precondition
(marginal mismatch, dimension mismatch, non-positive Choi matrix).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from margext import __version__
from margext.duality import (
    CPMapRep,
    check_membership_conditions,
    kraus_from_state,
    map_from_state,
    state_from_map,
)
from margext.extremality import (
    ExtremalityReport,
    MembershipError,
    Verdict,
    check_rank_bounds,
    is_extremal_state,
)
from margext.fixtures import (
    FIXTURE_NAMES,
    bell_projector,
    d3_kraus,
    d3_state_matrix,
    d4_kraus,
    qubit_basis,
)
from margext.matrixio import (
    MatrixFileError,
    digest,
    dumps,
    matrix_payload,
    read_matrix,
    write_matrix,
)
from margext.numerics import DEFAULT_REL_TOL
from margext.oracle import certify_verdict
from margext.states import BipartiteState, MarginalPair, pad_bipartite

EXIT_CODES = {Verdict.EXTREMAL: 0, Verdict.NOT_EXTREMAL: 1, Verdict.INCONCLUSIVE: 2}
EXIT_USAGE = 64
EXIT_DATA = 65
TOL_ENV = "MARGEXT_TOL"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_REL_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise CliError(f"{TOL_ENV}={raw!r} is not a number", EXIT_USAGE) from None
    if not tol > 0:
        raise CliError(f"{TOL_ENV} must be positive", EXIT_USAGE)
    return tol


def _read(path: str) -> tuple[np.ndarray, int | None]:
    try:
        return read_matrix(path)
    except MatrixFileError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None


def _load_state(path: str) -> BipartiteState:
    m, d = _read(path)
    try:
        return BipartiteState(d, m) if d is not None else BipartiteState.from_matrix(m)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}", EXIT_DATA) from None


def _load_basis(path: str | None, d: int) -> np.ndarray | None:
    if path is None:
        return None
    m, _ = _read(path)
    if m.shape != (d, d):
        raise CliError(f"{path}: basis must be {d}x{d}", EXIT_DATA)
    return m


def _marginals(rho1_path: str, rho2_path: str, basis: np.ndarray | None) -> MarginalPair:
    r1, _ = _read(rho1_path)
    r2, _ = _read(rho2_path)
    try:
        return MarginalPair.of(r1, r2, basis)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DATA) from None


def report_to_dict(report: ExtremalityReport, tol: float, input_digest: str) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "tool": "margext",
        "version": __version__,
        "verdict": report.verdict.value,
        "local_dim": report.d,
        "ell": report.ell,
        "joint_rank": report.joint_rank,
        "rank_margins": {
            "smallest_kept": report.rank_margins[0],
            "largest_dropped": report.rank_margins[1],
            "sigma_max": report.sigma_max,
        },
        "bound_sqrt2d": report.bound_sqrt2d,
        "bound_parthasarathy": report.bound_parthasarathy,
        "state_rank": report.state_rank,
        "singular": report.singular,
        "tolerance": tol,
        "input_digest": input_digest,
        "notes": list(report.notes),
    }
    if report.witness is not None:
        w = report.witness
        doc["witness"] = {
            "lambda": matrix_payload(w.lam),
            "state_plus": matrix_payload(w.state_plus.mat, report.d),
            "state_minus": matrix_payload(w.state_minus.mat, report.d),
        }
    return doc


def _text_report(doc: dict[str, Any]) -> str:
    lines = [
        f"verdict:          {doc['verdict']}",
        f"kraus operators:  {doc['ell']}",
        f"joint rank:       {doc['joint_rank']} of {doc['ell'] ** 2}",
        f"rank margins:     kept {doc['rank_margins']['smallest_kept']:.3e}, "
        f"dropped {doc['rank_margins']['largest_dropped']:.3e}",
        f"ell^2 <= 2d^2:    {doc['bound_sqrt2d']}",
        f"ell^2 <= 2d^2-1:  {doc['bound_parthasarathy']}",
        f"singular state:   {doc['singular']}",
    ]
    if "certification" in doc:
        lines.append(f"exact oracle:     {doc['certification']}")
    if "witness" in doc:
        lines.append("witness:          state = (state_plus + state_minus)/2 (see --json)")
    lines.extend(f"note: {n}" for n in doc["notes"])
    return "\n".join(lines) + "\n"


def cmd_check(args) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    rho = _load_state(args.state)
    marg = _marginals(args.rho1, args.rho2, _load_basis(args.basis, rho.d))
    if marg.d != rho.d:
        raise CliError(f"dimension mismatch: state d={rho.d}, marginals d={marg.d}", EXIT_DATA)
    try:
        report = is_extremal_state(rho, marg, rel_tol=tol)
    except MembershipError as exc:
        raise CliError(str(exc), EXIT_DATA) from None
    paths = [args.state, args.rho1, args.rho2] + ([args.basis] if args.basis else [])
    doc = report_to_dict(report, tol, digest(*paths))
    if args.exact:
        doc["certification"] = certify_verdict(report.kraus, report).value
    sys.stdout.write(dumps(doc) if args.format == "json" else _text_report(doc))
    return EXIT_CODES[report.verdict]


def _fixture_files(name: str) -> tuple[dict[str, tuple[np.ndarray, int | None]], int]:
    if name.startswith("qubit_bell"):
        _, _, basis = name.partition(":")
        try:
            u = qubit_basis(basis or "identity")
        except ValueError as exc:
            raise CliError(str(exc), EXIT_USAGE) from None
        tag = basis or "identity"
        return {f"qubit_bell_{tag}.json": (bell_projector(u).mat, 2)}, 2
    if name == "d3_state_matrix":
        return {"d3_state_matrix.json": (d3_state_matrix().mat, 3)}, 3
    if name in ("d3_cyclic", "d4_cyclic"):
        fam = d3_kraus() if name == "d3_cyclic" else d4_kraus()
        return {f"{name}_V{j + 1}.json": (v, None) for j, v in enumerate(fam)}, fam.d
    raise CliError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}", EXIT_USAGE)


def cmd_fixture(args) -> int:
    files, d = _fixture_files(args.name)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.with_marginals:
        mm = np.eye(d) / d
        files["rho1.json"] = (mm, None)
        files["rho2.json"] = (mm, None)
    for fname, (m, local_dim) in files.items():
        print(write_matrix(out / fname, m, local_dim))
    return 0


def cmd_convert(args) -> int:
    src = args.to_map or args.to_state
    m, d = _read(src)
    if d is None:
        d = int(round(np.sqrt(m.shape[0])))
    if args.basis == "eigen":
        if not args.to_map:
            raise CliError("--basis eigen only applies to --to-map", EXIT_USAGE)
        basis = None
    else:
        basis = _load_basis(args.basis, d)
    try:
        if args.to_map:
            rho = BipartiteState(d, m)
            if args.basis == "eigen":
                basis = MarginalPair.from_state(rho).eigenbasis2
            out = map_from_state(rho, basis).choi
        else:
            out = state_from_map(CPMapRep(d, m), basis).mat
    except ValueError as exc:
        raise CliError(f"{src}: {exc}", EXIT_DATA) from None
    text = dumps(matrix_payload(out, d))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_kraus(args) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    rho = _load_state(args.state)
    basis = _load_basis(args.basis, rho.d)
    try:
        marg = MarginalPair.from_state(rho, basis)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DATA) from None
    fam = kraus_from_state(rho, marg, tol)
    mc = check_membership_conditions(fam, marg, tol=1e-9)
    b1, b2 = check_rank_bounds(fam.ell, fam.d)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for j, v in enumerate(fam):
        names.append(write_matrix(out / f"V{j + 1}.json", v).name)
    write_matrix(out / "basis.json", marg.eigenbasis2)
    manifest = {
        "tool": "margext",
        "version": __version__,
        "local_dim": fam.d,
        "ell": fam.ell,
        "kraus_files": names,
        "basis_file": "basis.json",
        "residual_left": mc.residual1,
        "residual_right": mc.residual2,
        "bound_sqrt2d": b1,
        "bound_parthasarathy": b2,
        "tolerance": tol,
        "input_digest": digest(args.state),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(out / "manifest.json")
    return 0


def cmd_pad(args) -> int:
    m, _ = _read(args.matrix)
    d1, d2 = args.dims
    try:
        padded = pad_bipartite(m, d1, d2, args.to)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DATA) from None
    d = int(round(np.sqrt(padded.shape[0])))
    text = dumps(matrix_payload(padded, d))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="margext",
        description="Extremality of bipartite states with fixed marginals.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="decide extremality of a state in C(rho1, rho2)")
    c.add_argument("state")
    c.add_argument("rho1")
    c.add_argument("rho2")
    c.add_argument("--tol", type=float, default=None, help=f"rank tolerance (default ${TOL_ENV} or 1e-9)")
    c.add_argument("--basis", help="matrix file whose columns are the chosen eigenbasis of rho2")
    c.add_argument("--exact", action="store_true", help="certify the joint rank with exact arithmetic")
    fmt = c.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--text", dest="format", action="store_const", const="text")
    c.set_defaults(func=cmd_check, format="json")

    f = sub.add_parser("fixture", help="write a named fixture as matrix files")
    f.add_argument("name", help="qubit_bell[:identity|x|y|z|h], d3_cyclic, d3_state_matrix, d4_cyclic")
    f.add_argument("--out", default=".")
    f.add_argument("--with-marginals", action="store_true", help="also write maximally mixed rho1/rho2")
    f.set_defaults(func=cmd_fixture)

    v = sub.add_parser("convert", help="state <-> Choi matrix of the dual CP map")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--to-map", metavar="STATE")
    src.add_argument("--to-state", metavar="CHOI")
    v.add_argument("--basis", help="basis matrix file, or 'eigen' (to-map only) for the eigenbasis of tr_1(state)")
    v.add_argument("--out")
    v.set_defaults(func=cmd_convert)

    k = sub.add_parser("kraus", help="extract a linearly independent Kraus family")
    k.add_argument("state")
    k.add_argument("--basis")
    k.add_argument("--out-dir", required=True)
    k.add_argument("--tol", type=float, default=None)
    k.set_defaults(func=cmd_kraus)

    d = sub.add_parser("pad", help="embed a d1 x d2 bipartite operator into d x d")
    d.add_argument("matrix")
    d.add_argument("--dims", type=int, nargs=2, required=True, metavar=("D1", "D2"))
    d.add_argument("--to", type=int, default=None)
    d.add_argument("--out")
    d.set_defaults(func=cmd_pad)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CliError as exc:
        print(f"margext: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
