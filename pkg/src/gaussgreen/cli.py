"""Command-line front end.

Subcommands: ``check`` (classify a covariance), ``decompose`` (emit the
killed-chain construction), ``simulate`` (Monte-Carlo visit counts for a
decomposition file), ``laplace`` (determinant formula vs Monte-Carlo),
``zoo`` (generate covariance families), ``sweep`` (verdict table over a
family parameter grid).

Exit codes: 0 definite verdict / success, 1 input error (parse failure or
matrix not positive definite), 2 indeterminate at the working tolerance,
3 decomposition requested for a non-ID covariance.

All reports are JSON with sorted keys; identical configuration produces
byte-identical output (timings never enter reports).  Indices in reports
are 0-based.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .criteria import (
    MMatrixFailure,
    NoSignature,
    classify_green,
    is_id_square,
)
from .decomposition import decompose, reconstruct
from .kernels import (
    brownian_cov,
    fbm_cov,
    random_green,
    scale_conjugate,
    sheet_cov,
    sheet_counterexample,
)
from .linalg import NotPositiveDefiniteError, SingularMatrixError, Tolerances
from .simulate import ChainSpec, laplace_exact, laplace_mc, simulate_ct_green, simulate_green

SCHEMA_PREFIX = "gaussgreen"
INDETERMINATE_FACTOR = 10.0


class ParseError(Exception):
    """Input file could not be parsed into a square matrix."""


def load_matrix(path: str, fmt: str | None = None) -> np.ndarray:
    if fmt is None:
        fmt = "json" if path.endswith(".json") else "csv"
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from err
    if fmt == "json":
        return _matrix_from_json(text, path)
    return _matrix_from_csv(text, path)


def _matrix_from_csv(text: str, path: str) -> np.ndarray:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as err:
            raise ParseError(f"{path}:{lineno}: {err}") from err
    if not rows:
        raise ParseError(f"{path}: no numeric rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError(f"{path}: ragged rows")
    if len(rows) != width:
        raise ParseError(f"{path}: matrix is {len(rows)}x{width}, not square")
    return np.asarray(rows, dtype=float)


def _matrix_from_json(text: str, path: str) -> np.ndarray:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}: {err}") from err
    if not isinstance(doc, dict) or "entries" not in doc:
        raise ParseError(f"{path}: expected an object with an 'entries' field")
    try:
        M = np.asarray(doc["entries"], dtype=float)
    except (TypeError, ValueError) as err:
        raise ParseError(f"{path}: bad entries: {err}") from err
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParseError(f"{path}: entries are {M.shape}, not square")
    if "n" in doc and int(doc["n"]) != M.shape[0]:
        raise ParseError(f"{path}: declared n={doc['n']} but entries are {M.shape}")
    return M


def write_report(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta(schema: str, tol: Tolerances) -> dict:
    return {
        "schema": f"{SCHEMA_PREFIX}.{schema}/1",
        "version": __version__,
        "tolerances": {
            "eps_zero": tol.eps_zero,
            "eps_psd": tol.eps_psd,
            "sym_tol": tol.sym_tol,
        },
    }


def _witness_dict(w) -> dict | None:
    if w is None:
        return None
    if isinstance(w, NoSignature):
        return {
            "kind": "no_signature",
            "reason": w.reason,
            "entry": list(w.index),
            "value": w.value,
            "cycle": list(w.cycle) if w.cycle is not None else None,
        }
    if isinstance(w, MMatrixFailure):
        return {
            "kind": "m_matrix_failure",
            "reason": w.reason,
            "entry": list(w.index) if w.index is not None else None,
            "value": w.value,
        }
    return {"kind": "other", "detail": str(w)}


def _tolerances(args) -> Tolerances:
    return Tolerances(eps_zero=args.eps)


def cmd_check(args) -> int:
    G = load_matrix(args.input, args.format)
    tol = _tolerances(args)
    cls = classify_green(G, tol)
    relaxed = classify_green(G, tol.scaled(INDETERMINATE_FACTOR))
    verdict = cls.kind if cls.kind == relaxed.kind else "indeterminate"

    margins = dict(cls.verdict.margins)
    if cls.row_sums is not None:
        margins["min_row_sum"] = float(cls.row_sums.min())
    doc = _meta("check", tol)
    doc.update(
        {
            "command": "check",
            "input": os.path.basename(args.input),
            "n": G.shape[0],
            "verdict": verdict,
            "verdict_at_relaxed_tolerance": relaxed.kind,
            "signature": (
                cls.verdict.signature.signs.tolist()
                if cls.verdict.signature is not None
                else None
            ),
            "witness": _witness_dict(cls.verdict.witness),
            "margins": margins,
        }
    )
    write_report(doc, args.out)
    print(f"check: verdict={verdict} (n={G.shape[0]})", file=sys.stderr)
    return 0 if verdict != "indeterminate" else 2


def cmd_decompose(args) -> int:
    G = load_matrix(args.input, args.format)
    tol = _tolerances(args)
    verdict = is_id_square(G, tol)
    if not verdict.is_id:
        doc = _meta("decomposition", tol)
        doc.update(
            {
                "command": "decompose",
                "verdict": "not_id",
                "witness": _witness_dict(verdict.witness),
            }
        )
        write_report(doc, args.out)
        print(f"decompose: not infinitely divisible: "
              f"{_witness_dict(verdict.witness)}", file=sys.stderr)
        return 3
    dec = decompose(G, tol, verdict=verdict)
    rec = reconstruct(dec)
    rec_err = float(np.abs(rec - G).max()) / max(1.0, float(np.abs(G).max()))
    doc = _meta("decomposition", tol)
    doc.update(
        {
            "command": "decompose",
            "verdict": "id",
            "signature": dec.signature.signs.tolist(),
            "u": dec.u.tolist(),
            "c": dec.c,
            "T": dec.T.tolist(),
            "kappa": dec.kappa.tolist(),
            "g": dec.g.tolist(),
            "g_sym": dec.g_sym.tolist(),
            "mu_weights": dec.mu_weights.tolist(),
            "reconstruction_error": rec_err,
        }
    )
    write_report(doc, args.out)
    print(f"decompose: c={dec.c:.6g}, max row sum="
          f"{float(dec.T.sum(axis=1).max()):.6g}", file=sys.stderr)
    return 0


def _chain_from_doc(path: str) -> ChainSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ParseError(f"cannot read chain from {path}: {err}") from err
    try:
        T = np.asarray(doc["T"], dtype=float)
        kappa = np.asarray(doc["kappa"], dtype=float)
        c = float(doc.get("c", 1.0))
    except (KeyError, TypeError, ValueError) as err:
        raise ParseError(f"{path}: missing or malformed chain fields: {err}") from err
    return ChainSpec(T=T, kappa=kappa, c=c)


def cmd_simulate(args) -> int:
    chain = _chain_from_doc(args.input)
    runner = simulate_ct_green if args.ct else simulate_green
    report = runner(chain, n_paths=args.paths, seed=args.seed)
    doc = _meta("simreport", Tolerances(eps_zero=args.eps))
    doc.update(
        {
            "command": "simulate",
            "kind": "occupation" if args.ct else "visits",
            "c": chain.c,
        }
    )
    doc.update(report.to_dict())
    write_report(doc, args.out)
    print(f"simulate: {args.paths} paths/state, overflow={report.overflow}",
          file=sys.stderr)
    return 0


def cmd_laplace(args) -> int:
    G = load_matrix(args.input, args.format)
    try:
        t = np.asarray([float(v) for v in args.t.split(",")], dtype=float)
    except ValueError as err:
        raise ParseError(f"bad --t: {err}") from err
    exact = laplace_exact(G, t)
    doc = _meta("laplace", Tolerances(eps_zero=args.eps))
    doc.update({"command": "laplace", "t": t.tolist(), "exact": exact})
    if args.samples > 0:
        mc = laplace_mc(G, t, n_samples=args.samples, seed=args.seed)
        sigma = abs(mc.estimate - exact) / mc.stderr if mc.stderr > 0 else 0.0
        doc["mc"] = mc.to_dict()
        doc["sigmas_from_exact"] = sigma
    write_report(doc, args.out)
    print(f"laplace: exact={exact:.6g}", file=sys.stderr)
    return 0


def _parse_grid(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_zoo(args) -> int:
    params: dict = {}
    if args.family == "fbm":
        if args.grid is None or args.beta is None:
            raise ParseError("family fbm needs --grid and --beta")
        grid = _parse_grid(args.grid)
        G = fbm_cov(grid, args.beta)
        params = {"grid": grid, "beta": args.beta}
    elif args.family == "brownian":
        if args.grid is None:
            raise ParseError("family brownian needs --grid")
        grid = _parse_grid(args.grid)
        G = brownian_cov(grid)
        params = {"grid": grid}
    elif args.family == "sheet":
        if args.points is None:
            raise ParseError("family sheet needs --points 'x1,s1;x2,s2;...'")
        pts = [tuple(float(v) for v in p.split(",")) for p in args.points.split(";") if p.strip()]
        G = sheet_cov(pts)
        params = {"points": [list(p) for p in pts]}
    elif args.family == "counterexample":
        pts, G = sheet_counterexample()
        params = {"points": pts.tolist()}
    elif args.family == "random-green":
        chain, G = random_green(args.n, args.seed, symmetric=True)
        params = {"n": args.n, "seed": args.seed, "c": chain.c}
    else:
        raise ParseError(f"unknown family {args.family!r}")
    if args.scale is not None:
        d = _parse_grid(args.scale)
        G = scale_conjugate(G, d)
        params["scale"] = d
    doc = _meta("matrix", Tolerances(eps_zero=args.eps))
    doc.update(
        {
            "command": "zoo",
            "family": args.family,
            "params": params,
            "n": G.shape[0],
            "entries": G.tolist(),
        }
    )
    write_report(doc, args.out)
    print(f"zoo: {args.family} n={G.shape[0]}", file=sys.stderr)
    return 0


def default_sweep_grids() -> list[list[float]]:
    """Deterministic grid family used when --grids is not given."""
    grids = [[float(v) for v in range(1, k + 1)] for k in range(2, 7)]
    grids += [
        [1.0, 2.0, 4.0, 8.0],
        [0.5, 1.0, 2.0, 4.0, 8.0],
        [1.0, 1.5, 2.0, 2.5, 3.0, 3.5],
        [0.25, 0.75, 2.0, 5.0, 9.5],
    ]
    return grids


def cmd_sweep(args) -> int:
    if args.family != "fbm":
        raise ParseError("sweep supports --family fbm only")
    tol = _tolerances(args)
    betas = [float(v) for v in args.betas.split(",")]
    if args.grids is not None:
        grids = [_parse_grid(g) for g in args.grids.split(";") if g.strip()]
    else:
        grids = default_sweep_grids()

    rows = []
    summary: dict[str, dict] = {}
    for beta in betas:
        counts = {"id": 0, "not_id": 0}
        first_witness = None
        for grid in grids:
            verdict = is_id_square(fbm_cov(grid, beta), tol)
            key = "id" if verdict.is_id else "not_id"
            counts[key] += 1
            rows.append({"beta": beta, "grid": grid, "verdict": key})
            if key == "not_id" and first_witness is None:
                first_witness = {
                    "grid": grid,
                    "witness": _witness_dict(verdict.witness),
                }
        summary[str(beta)] = {
            "id": counts["id"],
            "not_id": counts["not_id"],
            "first_not_id": first_witness,
        }
    doc = _meta("sweep", tol)
    doc.update(
        {"command": "sweep", "family": "fbm", "rows": rows, "summary": summary}
    )
    write_report(doc, args.out)
    for beta in betas:
        s = summary[str(beta)]
        print(f"sweep: beta={beta}: id={s['id']} not_id={s['not_id']}",
              file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaussgreen",
        description=(
            "Decide infinite divisibility of squared Gaussian vectors, "
            "construct the underlying killed Markov chain, and verify by "
            "simulation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True, help="matrix file (csv or json)")
            p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--eps", type=float, default=1e-10,
                       help="relative zero band for sign decisions")
        p.add_argument("--out", default=None, help="write the JSON report here")

    p = sub.add_parser("check", help="classify a covariance")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("decompose", help="build the killed-chain decomposition")
    common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("simulate", help="Monte-Carlo visit counts for a chain file")
    p.add_argument("--input", required=True, help="decomposition/chain JSON")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ct", action="store_true",
                   help="continuous-time occupation instead of visit counts")
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("laplace", help="determinant formula and Monte-Carlo check")
    common(p)
    p.add_argument("--t", required=True, help="comma-separated nonnegative rates")
    p.add_argument("--samples", type=int, default=0,
                   help="Monte-Carlo sample count (0 = exact only)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_laplace)

    p = sub.add_parser("zoo", help="generate a covariance family instance")
    p.add_argument("--family", required=True,
                   choices=["fbm", "brownian", "sheet", "counterexample",
                            "random-green"])
    p.add_argument("--grid", default=None, help="comma-separated 1-d grid")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--points", default=None, help="sheet points 'x,s;x,s;...'")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", default=None,
                   help="comma-separated positive diagonal to conjugate by")
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_zoo)

    p = sub.add_parser("sweep", help="verdict table over a parameter sweep")
    p.add_argument("--family", default="fbm")
    p.add_argument("--betas", required=True, help="comma-separated indices")
    p.add_argument("--grids", default=None,
                   help="semicolon-separated comma grids (default: built-in)")
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except NotPositiveDefiniteError as err:
        print(f"error: input matrix is not positive definite ({err})",
              file=sys.stderr)
        return 1
    except (SingularMatrixError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
