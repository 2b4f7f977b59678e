"""Command-line entry point: corpus generation, transformations, solving, diagnostics, bench.

Exit codes: 0 on success, 1 on domain errors (reported as JSON on stderr),
2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from .combdiam import combinatorial_diameter, combinatorial_length_exact, simplify_exact, simplify_greedy
from .errors import SparseCutError
from .instance import (
    CutInstance,
    attach_random_demands,
    format_rational,
    generate_partial_ktree,
    instance_to_dict,
    loads_instance,
)
from .lifting import build_lifted_lp, lpcut, solve_ratio
from .markov import build_H, check_lemmas
from .oracle import brute_force
from .rounding import algcut_exact, pair_path, repeated_round
from .shallow import (
    bridges,
    certified_diameter_bound,
    diameter_bound,
    effective_lambda,
    highways,
    layer_spacing,
    super_highways,
)
from .treedec import (
    TreeDecomposition,
    balance,
    decomposition_to_dict,
    depth_bound,
    loads_decomposition,
    min_fill_decomposition,
)

MODES = ("bridges", "highways", "superhighways")
BENCH_COLUMNS = (
    "n", "k", "mode", "lambda", "q", "seed",
    "width_before", "width_after", "depth",
    "certified_diameter", "measured_diameter",
    "alpha", "rounded_sparsity", "phi", "max_fitted_constant", "wall_time",
)


class InputError(SparseCutError):
    """Unreadable or malformed input file."""


# ---------------------------------------------------------------------------
# helpers


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(str(exc)) from exc


def _load_instance(path: str) -> CutInstance:
    try:
        return loads_instance(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_decomposition(path: str) -> TreeDecomposition:
    try:
        return loads_decomposition(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _rat(x) -> str:
    return format_rational(x) if isinstance(x, (Fraction, int)) else repr(float(x))


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _with_stats(T: TreeDecomposition, **extra) -> dict:
    data = decomposition_to_dict(T)
    data["stats"] = {"width": T.width, "depth": T.depth, **extra}
    return data


def transform(T: TreeDecomposition, mode: str | None, lam: int | None, q: int | None):
    """Apply one construction; returns ``(T', certified bound, spacing)``."""
    if mode is None:
        return T, None, None
    if mode == "superhighways":
        spacing = layer_spacing(T.width, T.depth, q)
        return super_highways(T, q, spacing), diameter_bound(mode, q=q), spacing
    lam_eff = effective_lambda(T, lam)
    build = bridges if mode == "bridges" else highways
    return build(T, lam), diameter_bound(mode, depth=T.depth, lam=lam_eff), None


def _pipeline_decomposition(inst: CutInstance, decomposition: str | None) -> TreeDecomposition:
    if decomposition:
        return _load_decomposition(decomposition)
    return balance(min_fill_decomposition(inst))


def fitted_constant(T: TreeDecomposition, sol, s: int, t: int):
    """``lpcut / (algcut * l^2)`` with ``l`` the exact combinatorial length (at least 1)."""
    raw = pair_path(T, s, t)
    trace = simplify_exact(raw)
    ell = max(1, trace.final_length)
    lp = Fraction(lpcut(sol, s, t))
    alg = Fraction(algcut_exact(T, sol, s, t, path=trace.final))
    if lp == 0:
        return Fraction(0), ell
    if alg == 0:
        return None, ell
    return lp / (alg * ell * ell), ell


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> None:
    inst, T = generate_partial_ktree(args.n, args.k, args.keep_prob, args.seed)
    if args.demands:
        inst = attach_random_demands(inst, args.demands, args.seed)
    if args.decomposition_out:
        _emit(decomposition_to_dict(T), args.decomposition_out)
    _emit(instance_to_dict(inst), args.out)


def cmd_decompose(args) -> None:
    T = min_fill_decomposition(_load_instance(args.instance))
    _emit(_with_stats(T), args.out)


def cmd_balance(args) -> None:
    T = _load_decomposition(args.decomposition)
    B = balance(T)
    _emit(_with_stats(B, depth_bound=depth_bound(T.num_nodes)), args.out)


def cmd_transform(args) -> None:
    T = _load_decomposition(args.decomposition)
    Tp, _, spacing = transform(T, args.mode, args.lam, args.q)
    bound, _ = certified_diameter_bound(
        Tp, args.mode, lam=args.lam, q=args.q, spacing=spacing, sample=args.sample, seed=args.seed
    )
    _emit(_with_stats(Tp, certified_diameter=bound), args.out)


def cmd_diameter(args) -> None:
    T = _load_decomposition(args.decomposition)
    d, witness = combinatorial_diameter(T, args.method, args.budget)
    _emit({"diameter": d, "method": args.method, "witness": list(witness)}, args.out)


def cmd_solve(args) -> None:
    inst = _load_instance(args.instance)
    T = _pipeline_decomposition(inst, args.decomposition)
    Tp, _, _ = transform(T, args.mode, args.lam, args.q)
    if args.lp_dump:
        with open(args.lp_dump, "w", encoding="utf-8") as fh:
            json.dump(build_lifted_lp(inst, Tp).lp.to_triplets(), fh)
            fh.write("\n")
    sol = solve_ratio(inst, Tp, exact=not args.float)
    res = repeated_round(inst, Tp, sol, args.trials, args.seed)
    oracle = brute_force(inst).phi if inst.n <= args.oracle_max_n else None
    diameter, _ = combinatorial_diameter(Tp, "greedy")
    _emit(
        {
            "alpha": _rat(sol.alpha),
            "cut": list(res.assignment),
            "sparsity": _rat(res.sparsity),
            "oracle_sparsity": None if oracle is None else _rat(oracle),
            "diameter_used": diameter,
            "good_fraction": _rat(res.good_fraction),
        },
        args.out,
    )


def cmd_oracle(args) -> None:
    res = brute_force(_load_instance(args.instance))
    _emit({"phi": _rat(res.phi), "cut": list(res.cut), "enumerated": res.enumerated}, args.out)


def cmd_diagnose(args) -> None:
    inst = _load_instance(args.instance)
    T = _pipeline_decomposition(inst, args.decomposition)
    Tp, _, _ = transform(T, args.mode, args.lam, args.q)
    sol = solve_ratio(inst, Tp)
    pairs = []
    for s, t, _ in inst.dem_edges:
        raw = pair_path(Tp, s, t)
        trace = simplify_exact(raw) if args.simplify == "exact" else simplify_greedy(raw)
        rep = check_lemmas(build_H(trace.final, sol, s, t))
        const, ell = fitted_constant(Tp, sol, s, t)
        pairs.append(
            {
                "s": s,
                "t": t,
                "path": list(trace.final.nodes),
                "comb_length": combinatorial_length_exact(raw),
                "layer_sizes": rep.layer_sizes,
                "lp_flow": None if rep.flow_value is None else _rat(rep.flow_value),
                "max_flow": _rat(rep.mincut),
                "p_s0_t1": _rat(rep.p_s0_t1),
                "phi": [_rat(x) for x in rep.phi],
                "phi_monotone": rep.phi_monotone,
                "variance_slack": _rat(rep.variance_slack),
                "threshold_slack": None
                if rep.threshold_weight is None
                else _rat(rep.threshold_bound - rep.threshold_weight),
                "separates": rep.separates,
                "mincut_slack": None if rep.mincut_bound is None else _rat(rep.mincut_bound - rep.mincut),
                "lpcut": _rat(lpcut(sol, s, t)),
                "algcut": _rat(algcut_exact(Tp, sol, s, t, path=trace.final)),
                "fitted_constant": None if const is None else _rat(const),
                "violations": rep.violations(),
            }
        )
    _emit({"alpha": _rat(sol.alpha), "pairs": pairs}, args.out)


def _lp_size(inst: CutInstance, T: TreeDecomposition) -> int:
    return sum(
        1 << len(T.bags[i] | {s, t}) for i in T.nodes for s, t, _ in inst.dem_edges
    )


def bench_row(params: dict, options: dict) -> dict:
    """One bench table row; deterministic in ``params`` unless timing is requested."""
    started = time.perf_counter()
    n, k, seed = int(params["n"]), int(params["k"]), int(params.get("seed", 0))
    mode = params.get("mode") or None
    lam = params.get("lambda")
    q = params.get("q")
    inst, T0 = generate_partial_ktree(n, k, float(params.get("keep_prob", 0.8)), seed)
    inst = attach_random_demands(inst, int(params.get("demands", 3)), seed)
    T = balance(T0)
    Tp, certified, _ = transform(T, mode, lam, q)
    measured, _ = combinatorial_diameter(Tp, "greedy")
    row = {
        "n": n, "k": k, "mode": mode or "none", "lambda": lam, "q": q, "seed": seed,
        "width_before": T.width, "width_after": Tp.width, "depth": Tp.depth,
        "certified_diameter": certified, "measured_diameter": measured,
        "alpha": None, "rounded_sparsity": None, "phi": None, "max_fitted_constant": None,
        "wall_time": None,
    }
    if n <= options["solve_max_n"] and _lp_size(inst, Tp) <= options["max_lp_vars"]:
        sol = solve_ratio(inst, Tp)
        res = repeated_round(inst, Tp, sol, options["trials"], seed)
        row["alpha"] = _rat(sol.alpha)
        row["rounded_sparsity"] = _rat(res.sparsity)
        consts = [fitted_constant(Tp, sol, s, t)[0] for s, t, _ in inst.dem_edges]
        row["max_fitted_constant"] = "inf" if None in consts else _rat(max(consts))
    if n <= options["oracle_max_n"]:
        row["phi"] = _rat(brute_force(inst).phi)
    if options["timing"]:
        row["wall_time"] = f"{time.perf_counter() - started:.3f}"
    return row


def _bench_row_star(item):
    return bench_row(*item)


def cmd_bench(args) -> None:
    corpus = json.loads(_read(args.corpus)) if args.corpus != "-" else json.load(sys.stdin)
    row_params = corpus.get("rows", []) if isinstance(corpus, dict) else corpus
    for r in row_params:
        _validate_mode_params(r.get("mode") or None, r.get("lambda"), r.get("q"), _bench_error)
    options = {
        "solve_max_n": args.solve_max_n,
        "oracle_max_n": args.oracle_max_n,
        "max_lp_vars": args.max_lp_vars,
        "trials": args.trials,
        "timing": args.timing,
    }
    items = [(r, options) for r in row_params]
    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_bench_row_star, items))
    else:
        rows = [bench_row(*it) for it in items]
    if args.format == "json":
        _emit({"columns": list(BENCH_COLUMNS), "rows": rows}, args.out)
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: ("" if row[c] is None else row[c]) for c in BENCH_COLUMNS})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


# ---------------------------------------------------------------------------
# argument handling


class _UsageError(Exception):
    pass


def _bench_error(msg: str):
    raise _UsageError(msg)


def _validate_mode_params(mode, lam, q, error) -> None:
    if mode is not None and mode not in MODES:
        error(f"unknown mode {mode!r}")
    if q is not None and mode != "superhighways":
        error("--q is only valid with --mode superhighways")
    if lam is not None and mode not in ("bridges", "highways"):
        error("--lambda is only valid with --mode bridges or highways")
    if mode in ("bridges", "highways"):
        if lam is None:
            error(f"--mode {mode} requires --lambda")
        elif lam < 1:
            error("--lambda must be >= 1")
    if mode == "superhighways":
        if q is None:
            error("--mode superhighways requires --q")
        elif q < 1:
            error("--q must be >= 1")


def _mode_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--mode", choices=MODES, required=required)
    p.add_argument("--lambda", dest="lam", type=int)
    p.add_argument("--q", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsecut", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="random partial k-tree instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--keep-prob", type=float, default=0.8)
    p.add_argument("--demands", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decomposition-out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("decompose", help="min-fill tree decomposition of an instance")
    p.add_argument("instance")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("balance", help="logarithmic-depth rebalancing")
    p.add_argument("decomposition")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("transform", help="bridges / highways / super-highways")
    p.add_argument("decomposition")
    _mode_flags(p, required=True)
    p.add_argument("--sample", type=int, default=300, help="node pairs traced for the certificate")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("diameter", help="combinatorial diameter")
    p.add_argument("decomposition")
    p.add_argument("--method", choices=("greedy", "exact"), default="greedy")
    p.add_argument("--budget", type=int, default=10**6)
    p.set_defaults(func=cmd_diameter)

    p = sub.add_parser("solve", help="lifted LP plus repeated rounding")
    p.add_argument("instance")
    p.add_argument("--decomposition")
    _mode_flags(p, required=False)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lp-dump")
    p.add_argument("--float", action="store_true", help="solve LPs in floating point")
    p.add_argument("--oracle-max-n", type=int, default=16)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="brute-force sparsest cut")
    p.add_argument("instance")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("diagnose", help="flow-graph lemma report per demand pair")
    p.add_argument("instance")
    p.add_argument("--decomposition")
    _mode_flags(p, required=False)
    p.add_argument("--simplify", choices=("exact", "greedy"), default="exact")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("bench", help="width/diameter/approximation table over a corpus file")
    p.add_argument("corpus", help="JSON list of rows {n, k, mode, lambda, q, seed, ...} or '-'")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--timing", action="store_true", help="fill the wall_time column")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--solve-max-n", type=int, default=10)
    p.add_argument("--oracle-max-n", type=int, default=16)
    p.add_argument("--max-lp-vars", type=int, default=20000)
    p.set_defaults(func=cmd_bench)

    for name, action in sub.choices.items():
        action.add_argument("--out", help="write the report here instead of stdout")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if hasattr(args, "mode"):
            _validate_mode_params(args.mode, args.lam, args.q, parser.error)
        if getattr(args, "trials", 1) < 1:
            parser.error("--trials must be >= 1")
    except SystemExit as exc:
        return int(exc.code)
    try:
        args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"sparsecut: error: {exc}\n")
        return 2
    except SparseCutError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
