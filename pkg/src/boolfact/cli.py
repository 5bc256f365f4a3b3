"""Command-line entry point: ``boolfact <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import statistics
import sys
import time
from pathlib import Path

from . import ingest, mipio, model, synth
from .boolmat import approximation_error, boolean_product, format_matrix, read_matrix, write_matrix
from .reduce import WeightedInstance, expand, reduce, reduction_stats
from .solve import SolveConfig, factorize, percent_reconstructed

log = logging.getLogger("boolfact")

DEFAULT_DATA_DIR = os.environ.get("BOOLFACT_DATA_DIR", "data")

CSV_FIELDS = [
    "experiment", "instance", "n", "m", "kappa", "mu", "seed", "k", "formulation", "preprocess",
    "reduced_rows", "reduced_cols", "variables", "binary", "constraints",
    "runtime", "objective", "lower_bound", "percent_reconstructed", "status",
]
SUMMARY_FIELDS = [
    "experiment", "instance", "n", "m", "kappa", "mu", "k", "formulation", "preprocess", "runs",
    "runtime_mean", "runtime_sem", "objective_mean", "objective_sem",
    "percent_reconstructed_mean", "percent_reconstructed_sem", "constraints_mean",
]


class UsageError(Exception):
    pass


def _load_input(source: str, data_dir: str):
    if source in ingest.DATASET_FILES and not Path(source).is_file():
        return ingest.load_dataset(source, data_dir)
    path = Path(source)
    if not path.is_file():
        raise UsageError(f"no such matrix file or dataset: {source}")
    return read_matrix(path)


def _config(args, k=None) -> SolveConfig:
    time_limit = args.time_limit
    if time_limit is None:
        time_limit = 600.0 if getattr(args, "kind", None) == "realdata-ranks" else 60.0
    return SolveConfig(
        k=k if k is not None else args.rank,
        time_limit=time_limit,
        node_limit=args.node_limit,
        seed=args.seed,
        warm_start=not args.no_warm_start,
        symmetry_breaking=not args.no_symmetry_breaking,
        workers=args.workers,
    )


# -- factorize -------------------------------------------------------------------


def factorize_report(X, cfg: SolveConfig, preprocess: bool = True) -> dict:
    out = factorize(X, cfg, preprocess=preprocess)
    n, m = X.shape
    res = out.result
    stats = reduction_stats(out.instance)
    pct = percent_reconstructed(out.error, n, m)
    return {
        "k": cfg.k,
        "formulation": "branch-and-bound",
        "preprocess": preprocess,
        **stats,
        "objective": res.objective,
        "error": out.error,
        "percent_reconstructed": pct,
        "percent_error": 100.0 - pct,
        "status": res.status,
        "lower_bound": res.lower_bound,
        "gap": res.gap,
        "relative_gap": res.relative_gap,
        "nodes": res.nodes,
        "elapsed": res.elapsed,
        "_factorization": out.factorization,
    }


def cmd_factorize(args) -> int:
    X = _load_input(args.input, args.data_dir)
    report = factorize_report(X, _config(args), preprocess=not args.no_preprocess)
    F = report.pop("_factorization")
    for key, val in report.items():
        print(f"{key}: {val:.6g}" if isinstance(val, float) else f"{key}: {val}")
    if args.factors:
        write_matrix(F.C, f"{args.factors}.C.txt")
        write_matrix(F.R, f"{args.factors}.R.txt")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=1) + "\n")
    return 0


# -- emit / preprocess / check-solution -----------------------------------------


def _instance(X, no_preprocess: bool) -> WeightedInstance:
    W = WeightedInstance.unreduced(X) if no_preprocess else reduce(X)
    if W.is_empty:
        raise UsageError("the matrix has no ones; the optimal factorization is all zeros")
    return W


def cmd_emit(args) -> int:
    X = _load_input(args.input, args.data_dir)
    M = model.build_model(_instance(X, args.no_preprocess), args.rank, args.formulation)
    text = mipio.write_mps(M) if args.format == "mps" else mipio.write_lp(M)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    counts = M.counts()
    print(
        f"{M.formulation}: {counts['variables']} variables ({counts['binary']} binary), "
        f"{counts['constraints']} constraints, {counts['nonzeros']} nonzeros",
        file=sys.stderr if not args.out else sys.stdout,
    )
    return 0


def cmd_preprocess(args) -> int:
    X = _load_input(args.input, args.data_dir)
    W = reduce(X)
    stats = reduction_stats(W)
    print(" ".join(f"{k}={v}" for k, v in stats.items()))
    if W.is_empty:
        print("all-zero matrix: nothing to factorize")
        return 0
    sys.stdout.write(format_matrix(W.matrix))
    print("alpha " + " ".join(map(str, W.alpha.tolist())))
    print("beta " + " ".join(map(str, W.beta.tolist())))
    print("row_map " + " ".join("-" if r is None else str(r + 1) for r in W.row_map))
    print("col_map " + " ".join("-" if c is None else str(c + 1) for c in W.col_map))
    return 0


def cmd_check_solution(args) -> int:
    X = _load_input(args.input, args.data_dir)
    W = _instance(X, args.no_preprocess)
    M = model.build_model(W, args.rank, args.formulation)
    values, obj = mipio.read_solution(Path(args.solution).read_text(), M)
    violations = model.check_feasible(M, values, tol=mipio.SOLUTION_TOL)
    print(f"objective: {obj:g}")
    print(f"violations: {len(violations)}")
    for v in violations[:20]:
        print(f"  {v}")
    if violations:
        return 1
    F = expand(W, mipio.factorization_from_values(M, values))
    err = approximation_error(X, boolean_product(F.C, F.R))
    print(f"error on original matrix: {err}")
    print(f"percent_reconstructed: {percent_reconstructed(err, *X.shape):.6g}")
    return 0


# -- synth -----------------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = synth.SynthConfig(
        n=args.n, m=args.m, kappa=args.kappa, mu=args.noise, seed=args.seed, target_density=args.density
    )
    inst = synth.generate(cfg)
    if args.out:
        write_matrix(inst.X, args.out)
        Path(f"{args.out}.json").write_text(synth.sidecar_json(cfg, inst))
    else:
        sys.stdout.write(format_matrix(inst.X))
    return 0


# -- experiments -----------------------------------------------------------------


def _parse_list(text: str, conv=float) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:] and conv is int:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(conv(part))
    return out


def _solve_row(X, k, cfg_args, preprocess, base: dict) -> dict:
    report = factorize_report(X, _config(cfg_args, k), preprocess=preprocess)
    return {
        **base,
        "k": k,
        "preprocess": int(preprocess),
        "reduced_rows": report["reduced_rows"],
        "reduced_cols": report["reduced_cols"],
        "runtime": round(report["elapsed"], 6),
        "objective": report["objective"],
        "lower_bound": report["lower_bound"],
        "percent_reconstructed": round(report["percent_reconstructed"], 4),
        "status": report["status"],
    }


def _synthetic_rows(args, kind: str):
    sizes = _parse_list(args.sizes, int)
    noises = _parse_list(args.noise) if kind == "noise-sweep" else [float(_parse_list(args.noise)[0])]
    kappa = args.kappa
    k = args.rank or kappa
    for n in sizes:
        for mu in noises:
            for rep in range(args.repeats):
                seed = args.seed + rep
                cfg = synth.SynthConfig(n=n, m=args.m, kappa=kappa, mu=mu, seed=seed)
                X = synth.generate(cfg).X
                base = {"experiment": kind, "instance": f"synth_n{n}_m{args.m}_kappa{kappa}_mu{mu:g}_s{seed}",
                        "n": n, "m": args.m, "kappa": kappa, "mu": mu, "seed": seed}
                if kind == "noise-sweep":
                    row = _solve_row(X, k, args, True, base)
                    row.update(formulation="branch-and-bound")
                    yield row
                    continue
                solved = {pre: _solve_row(X, k, args, pre, base) for pre in (False, True)}
                for form in model.FORMULATIONS:
                    for pre in (False, True):
                        W = reduce(X) if pre else WeightedInstance.unreduced(X)
                        row = dict(solved[pre], formulation=form)
                        if W.is_empty:
                            row.update(variables=0, binary=0, constraints=0)
                        else:
                            counts = model.build_model(W, k, form).counts()
                            row.update(variables=counts["variables"], binary=counts["binary"],
                                       constraints=counts["constraints"])
                        yield row


def _realdata_rows(args):
    names = [d.strip() for d in args.datasets.split(",") if d.strip()]
    for name in names:
        X = ingest.load_dataset(name, args.data_dir)
        n, m = X.shape
        for k in _parse_list(args.ranks, int):
            base = {"experiment": "realdata-ranks", "instance": name, "n": n, "m": m, "kappa": "", "mu": "",
                    "seed": args.seed}
            row = _solve_row(X, k, args, not args.no_preprocess, base)
            row.update(formulation="branch-and-bound")
            yield row


def _sem(values) -> float:
    return statistics.stdev(values) / math.sqrt(len(values)) if len(values) > 1 else 0.0


def summarize(rows: list) -> list:
    """Mean and standard error per parameter combination, across repeats."""
    groups: dict = {}
    keys = ("experiment", "n", "m", "kappa", "mu", "k", "formulation", "preprocess")
    for row in rows:
        key = tuple(row.get(k, "") for k in keys)
        if row["experiment"] == "realdata-ranks":
            key += (row["instance"],)
        groups.setdefault(key, []).append(row)
    out = []
    for key, grp in groups.items():
        first = grp[0]
        rt = [float(r["runtime"]) for r in grp]
        ob = [float(r["objective"]) for r in grp]
        pc = [float(r["percent_reconstructed"]) for r in grp]
        cons = [float(r["constraints"]) for r in grp if r.get("constraints") not in ("", None)]
        out.append({
            **{k: first.get(k, "") for k in keys},
            "instance": first["instance"] if first["experiment"] == "realdata-ranks" else "",
            "runs": len(grp),
            "runtime_mean": round(statistics.fmean(rt), 6), "runtime_sem": round(_sem(rt), 6),
            "objective_mean": round(statistics.fmean(ob), 6), "objective_sem": round(_sem(ob), 6),
            "percent_reconstructed_mean": round(statistics.fmean(pc), 4),
            "percent_reconstructed_sem": round(_sem(pc), 4),
            "constraints_mean": round(statistics.fmean(cons), 2) if cons else "",
        })
    return out


def _append_csv(path: Path, fields, rows) -> None:
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        if new:
            writer.writeheader()
        for row in rows:
            writer.writerow(row)
            fh.flush()


def cmd_experiment(args) -> int:
    if args.kind == "realdata-ranks":
        gen = _realdata_rows(args)
    else:
        gen = _synthetic_rows(args, args.kind)
    rows = []
    out = Path(args.out) if args.out else None
    writer = None
    if out is None:
        writer = csv.DictWriter(sys.stdout, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
    t0 = time.perf_counter()
    for row in gen:
        row = {f: row.get(f, "") for f in CSV_FIELDS}
        rows.append(row)
        if out is not None:
            _append_csv(out, CSV_FIELDS, [row])
        else:
            writer.writerow(row)
        log.info("%s k=%s %s: obj=%s (%.2fs)", row["instance"], row["k"], row["formulation"], row["objective"],
                 float(row["runtime"]))
    summary = summarize(rows)
    if out is not None:
        _append_csv(out.with_name(out.stem + ".summary.csv"), SUMMARY_FIELDS, summary)
    log.info("%d runs in %.1fs", len(rows), time.perf_counter() - t0)
    return 0


# -- argument parsing ------------------------------------------------------------


def _solver_flags(p: argparse.ArgumentParser, rank_required: bool = True, time_help: str = "60") -> None:
    p.add_argument("--rank", "-k", type=int, required=rank_required, default=None, help="factorization rank k")
    p.add_argument("--time-limit", type=float, default=None,
                   help=f"solver time budget per run in seconds (default {time_help})")
    p.add_argument("--node-limit", type=int, default=None, help="stop after this many search nodes")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--workers", type=int, default=1, help="solver processes; 1 is deterministic (default 1)")
    p.add_argument("--no-warm-start", action="store_true", help="start from the all-zero factorization")
    p.add_argument("--no-symmetry-breaking", action="store_true", help="search all factor permutations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boolfact", description="Exact low-rank Boolean matrix approximation.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--data-dir", default=DEFAULT_DATA_DIR,
                        help="directory holding the UCI dataset files (default $BOOLFACT_DATA_DIR or ./data)")
    # also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data-dir", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add("factorize", help="solve a rank-k instance and report the result")
    p.add_argument("input", help="matrix file, or one of spect, tumor, voting")
    _solver_flags(p)
    p.add_argument("--no-preprocess", action="store_true", help="solve the raw matrix without reduction")
    p.add_argument("--factors", metavar="PREFIX", help="write PREFIX.C.txt and PREFIX.R.txt")
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=cmd_factorize)

    p = add("emit", help="write the integer program as MPS or LP")
    p.add_argument("input", help="matrix file, or one of spect, tumor, voting")
    p.add_argument("--rank", "-k", type=int, required=True, help="factorization rank k")
    p.add_argument("--formulation", choices=model.FORMULATIONS, default="improved", help="(default improved)")
    p.add_argument("--format", choices=("mps", "lp"), default="mps", help="(default mps)")
    p.add_argument("--no-preprocess", action="store_true", help="build the model over the raw matrix")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_emit)

    p = add("preprocess", help="print the reduced matrix and its multiplicities")
    p.add_argument("input", help="matrix file, or one of spect, tumor, voting")
    p.set_defaults(func=cmd_preprocess)

    p = add("check-solution", help="validate an external solver's solution file")
    p.add_argument("input", help="matrix file, or one of spect, tumor, voting")
    p.add_argument("--rank", "-k", type=int, required=True, help="factorization rank k")
    p.add_argument("--formulation", choices=model.FORMULATIONS, default="improved", help="(default improved)")
    p.add_argument("--no-preprocess", action="store_true", help="model the raw matrix without reduction")
    p.add_argument("--solution", required=True, help="lines of '<variable> <value>'")
    p.set_defaults(func=cmd_check_solution)

    p = add("synth", help="generate a planted rank-kappa matrix with noise")
    p.add_argument("--n", type=int, required=True, help="rows")
    p.add_argument("--m", type=int, required=True, help="columns")
    p.add_argument("--kappa", type=int, required=True, help="planted Boolean rank")
    p.add_argument("--noise", type=float, default=0.0, help="percentage of entries flipped (default 0)")
    p.add_argument("--density", type=float, default=0.5, help="target P(x_ij = 1) (default 0.5)")
    p.add_argument("--seed", type=int, default=0, help="(default 0)")
    p.add_argument("--out", help="matrix file; planted factors go to OUT.json (default: matrix to stdout)")
    p.set_defaults(func=cmd_synth)

    p = add("experiment", help="run a batch experiment and write CSV rows")
    p.add_argument("kind", choices=("noise-sweep", "formulation-compare", "realdata-ranks"))
    _solver_flags(p, rank_required=False, time_help="60; 600 for realdata-ranks")
    p.add_argument("--repeats", type=int, default=10, help="instances per grid point (default 10)")
    p.add_argument("--sizes", default="10,20,30", help="comma list of row counts n (default 10,20,30)")
    p.add_argument("--m", type=int, default=20, help="column count of synthetic instances (default 20)")
    p.add_argument("--kappa", type=int, default=5, help="planted Boolean rank (default 5)")
    p.add_argument("--noise", default="0", help="comma list of noise percentages (default 0)")
    p.add_argument("--datasets", default="spect,tumor,voting", help="real datasets for realdata-ranks")
    p.add_argument("--ranks", default="1-5", help="rank range for realdata-ranks (default 1-5)")
    p.add_argument("--no-preprocess", action="store_true", help="solve the raw matrices without reduction")
    p.add_argument("--out", help="CSV file to append to (summary goes to OUT stem + .summary.csv)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError, ValueError) as exc:
        print(f"boolfact: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
