"""Command-line interface: ``nndensity <subcommand> ...``.

Exit status is 0 on success, 2 on usage errors and 1 on other failures; failures
also print one JSON line ``{"error": ..., "type": ...}`` to stderr.

Seed precedence is ``--seed`` flag, then the ``NND_SEED`` environment variable,
then the ``--config`` file, then 0.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import Sequence


from . import bench, density, generators, solvers
from .core import InvalidInputError, Metric, Tour
from .tsplib_io import dump_json, read_instance_file, read_tour_file, tour_to_json, write_instance, write_tour

SEED_ENV = "NND_SEED"


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    # defaults are None so config-file values can fill the gaps
    options = {
        "family": dict(help="instance family: rue, rne, scale_free, parallel, convolution"),
        "n": dict(type=int, help="nodes per instance"),
        "count": dict(type=int, help="number of instances"),
        "seed": dict(type=int, help=f"master seed (overrides ${SEED_ENV} and the config file)"),
        "out": dict(help="output directory or file"),
        "algo": dict(choices=[a.value for a in solvers.Algorithm], help="nn, exact (Held-Karp) or ls"),
        "restarts": dict(type=int, help="local-search restarts"),
        "metric": dict(choices=[m.value for m in Metric], help="metric for nearest-neighbor sets"),
        "tie-eps": dict(type=float, help="relative tie tolerance for nearest-neighbor sets"),
        "defect-threshold": dict(type=float, help="gap above which a tour counts as defective"),
        "jobs": dict(type=int, help="worker processes"),
    }
    for name in names:
        p.add_argument(f"--{name}", **options[name])
    p.add_argument("--config", help="JSON file with default values for any long option")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nndensity", description="Nearest-neighbor density toolkit for Euclidean TSP.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate instances")
    _add_common(p, "family", "n", "count", "seed", "out", "jobs")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="generator parameter")
    p.add_argument("--format", choices=["json", "tsp"], default="json")

    p = sub.add_parser("solve", help="solve instance files and write tours")
    _add_common(p, "seed", "out", "algo", "restarts", "jobs")
    p.add_argument("--instances", required=True, help="instance file or directory")
    p.add_argument("--format", choices=["tour", "json"], default="tour")

    p = sub.add_parser("density", help="nearest-neighbor density of given tours")
    _add_common(p, "metric", "tie-eps", "out")
    p.add_argument("--instances", required=True)
    p.add_argument("--tours", required=True)

    p = sub.add_parser("eval", help="gaps, defect rate and rho bins for external tours")
    _add_common(p, "metric", "tie-eps", "defect-threshold", "out")
    p.add_argument("--instances", required=True)
    p.add_argument("--tours", required=True)
    p.add_argument("--refs", help="reference tours (default: the tours themselves)")
    p.add_argument("--bins", type=int, default=10)

    p = sub.add_parser("stats", help="generate, solve and score a batch; write CSV/JSON/SVG reports")
    _add_common(p, "family", "n", "count", "seed", "out", "algo", "restarts", "metric", "tie-eps",
                "defect-threshold", "jobs")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--render", type=int, default=None, help="SVG overlays to write (default 1)")

    p = sub.add_parser("analytic", help="closed-form nearest-neighbor statistics")
    asub = p.add_subparsers(dest="quantity", required=True)
    q = asub.add_parser("lower-bound", help="density lower bound (27 - 32 beta) / 7")
    q.add_argument("--beta", type=float, default=density.BETA)
    q = asub.add_parser("e-rk", help="mean k-th nearest-neighbor distance")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--dim", type=int, default=2)
    q.add_argument("--asymptotic", action="store_true")
    q = asub.add_parser("pdf", help="density of the nearest-neighbor distance")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--r", type=float, nargs="+", required=True)
    asub.add_parser("coefficients", help="limits of sqrt(n) E(r_k) and the tour coefficients")

    p = sub.add_parser("render", help="SVG overlay of a tour and its uncovered nearest-neighbor edges")
    _add_common(p, "metric", "tie-eps", "out")
    p.add_argument("--instance", required=True)
    p.add_argument("--tour", help="tour file (default: solve with local search)")

    p = sub.add_parser("tsplib", help="solve a TSPLIB file and report length and density")
    _add_common(p, "seed", "algo", "restarts", "metric", "tie-eps", "out")
    p.add_argument("file")
    p.add_argument("--tour", help="use this tour instead of solving")

    p = sub.add_parser("calibrate", help="sweep the scale-free attraction constant k")
    _add_common(p, "n", "count", "seed", "restarts", "out")
    p.add_argument("--k", type=float, nargs="+", default=[0.05, 0.1, 0.15, 0.2])
    p.add_argument("--target", type=float, default=0.7571)
    p.add_argument("--m", type=int, default=None, help="attachments per new node (also the seed-path size)")
    return ap


def _apply_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if dest == "seed":
                continue
            if getattr(args, dest, None) is None and hasattr(args, dest):
                setattr(args, dest, value)
    if hasattr(args, "seed"):
        args.seed = resolve_seed(args.seed, os.environ.get(SEED_ENV), cfg.get("seed"))
    return cfg


def resolve_seed(flag, env, config) -> int:
    for source, value in (("--seed", flag), (SEED_ENV, env), ("config", config)):
        if value is None or value == "":
            continue
        try:
            seed = int(value)
        except (TypeError, ValueError):
            raise UsageError(f"{source}: seed must be an integer, got {value!r}") from None
        if not 0 <= seed < 2**64:
            raise UsageError(f"{source}: seed must be in [0, 2**64)")
        return seed
    return 0


def _need(args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_"), None) is None:
            raise UsageError(f"--{name} is required")


def _gen_config(args) -> generators.GeneratorConfig:
    _need(args, "family", "n")
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    cfg = generators.make_config(args.family, n=args.n, **params)
    cfg.validate()
    return cfg


def _solve_config(args, seed: int) -> solvers.SolveConfig:
    kw = {"seed": seed}
    if getattr(args, "algo", None):
        kw["algorithm"] = args.algo
    if getattr(args, "restarts", None):
        kw["restarts"] = args.restarts
    return solvers.SolveConfig(**kw)


def _files(path: str, suffixes) -> list[Path]:
    p = Path(path)
    if p.is_file():
        return [p]
    if not p.is_dir():
        raise InvalidInputError(f"{path} does not exist")
    return [f for f in sorted(p.iterdir()) if f.suffix.lower() in suffixes]


def _stem(p: Path) -> str:
    s = p.name[: -len(p.suffix)]
    return s[:-4] if s.endswith(".opt") else s


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    _need(args, "count", "out")
    cfg = _gen_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for inst in generators.gen_batch(cfg, args.count, args.seed, args.jobs or 1):
        if args.format == "json":
            (out / f"{inst.name}.json").write_text(dump_json(inst), encoding="utf-8")
        else:
            (out / f"{inst.name}.tsp").write_text(write_instance(inst), encoding="utf-8")
    print(json.dumps({"written": args.count, "out": str(out)}))
    return 0


def cmd_solve(args) -> int:
    _need(args, "out")
    files = _files(args.instances, bench.INSTANCE_SUFFIXES)
    if not files:
        raise InvalidInputError(f"no instance files in {args.instances}")
    insts = [read_instance_file(f) for f in files]
    tours = solvers.solve_batch(insts, _solve_config(args, args.seed), args.jobs or 1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for f, inst, tour in zip(files, insts, tours):
        if not tour:
            failed += 1
            print(json.dumps({"error": tour.error, "file": f.name}), file=sys.stderr)
            continue
        stem = _stem(f)
        if args.format == "json":
            (out / f"{stem}.json").write_text(tour_to_json(tour, stem), encoding="utf-8")
        else:
            (out / f"{stem}.tour").write_text(write_tour(tour, stem), encoding="utf-8")
        print(json.dumps({"name": stem, "length": tour.length}))
    return 1 if failed else 0


def _pair_files(instances: str, tours: str) -> list[tuple[Path, Path]]:
    ifiles = {_stem(f): f for f in _files(instances, bench.INSTANCE_SUFFIXES)}
    tfiles = {_stem(f): f for f in _files(tours, bench.TOUR_SUFFIXES)}
    if len(ifiles) == 1 and len(tfiles) == 1:
        return [(next(iter(ifiles.values())), next(iter(tfiles.values())))]
    missing = sorted(set(ifiles) ^ set(tfiles))
    if missing:
        name = missing[0]
        f = ifiles.get(name) or tfiles.get(name)
        raise InvalidInputError(f"unmatched file {f.name}: instances and tours must pair up by name")
    return [(ifiles[k], tfiles[k]) for k in sorted(ifiles)]


def cmd_density(args) -> int:
    lines = ["name,n,rho,tie_count"]
    values = []
    for ipath, tpath in _pair_files(args.instances, args.tours):
        inst = read_instance_file(ipath)
        order = read_tour_file(tpath, inst.n)
        rep = density.rho(inst, order, density.nn_sets(inst, args.metric, args.tie_eps))
        values.append(rep.rho)
        lines.append(f"{inst.name},{inst.n},{rep.rho!r},{rep.tie_count}")
    _emit("\n".join(lines) + "\n", args.out)
    s = density.summarize(values)
    print(json.dumps({"count": s.count, "rho_mean": s.mean, "rho_sd": s.sd}), file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    report = bench.evaluate_external_tours(
        args.instances, args.tours, args.refs,
        args.defect_threshold if args.defect_threshold is not None else density.DEFECT_THRESHOLD,
        args.bins, args.metric, args.tie_eps,
    )
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0 if report["scored"] == report["count"] else 1


def cmd_stats(args) -> int:
    _need(args, "count")
    gen = _gen_config(args)
    kw = dict(
        generator=gen,
        count=args.count,
        master_seed=args.seed,
        solver=_solve_config(args, args.seed),
        metric=args.metric,
        tie_eps=args.tie_eps,
        out_dir=Path(args.out) if args.out else None,
        jobs=args.jobs or 1,
    )
    if args.defect_threshold is not None:
        kw["defect_threshold"] = args.defect_threshold
    if args.render is not None:
        kw["render"] = args.render
    res = bench.run_pipeline(bench.ExperimentConfig(**kw))
    s = {k: res.summary[k] for k in ("family", "n", "count", "completed", "rho_mean", "rho_sd", "mean_len", "defect_rate")}
    print(json.dumps(s))
    return 0 if res.summary["completed"] == res.summary["count"] else 1


def cmd_analytic(args) -> int:
    q = args.quantity
    if q == "lower-bound":
        print(f"{density.rho_lower_bound(args.beta):.4f}")
    elif q == "e-rk":
        print(repr(density.analytic_E_rk(args.n, args.k, args.dim, args.asymptotic)))
    elif q == "pdf":
        for r in args.r:
            print(f"{r!r},{density.analytic_pdf_r1(args.n, r)!r}")
    else:
        a, b = density.tour_coefficients()
        ks = [density.analytic_E_rk(10**6, k, asymptotic=True) * 1000 for k in (1, 2, 3)]
        print(json.dumps({"sqrt_n_E_rk": ks, "tour_coefficients": [a, b]}))
    return 0


def cmd_render(args) -> int:
    inst = read_instance_file(args.instance)
    if args.tour:
        tour = Tour.from_order(inst, read_tour_file(args.tour, inst.n))
    else:
        tour = solvers.local_search_tour(inst)
    _emit(bench.render_overlay(inst, tour, density.nn_sets(inst, args.metric, args.tie_eps)), args.out)
    return 0


def cmd_tsplib(args) -> int:
    inst = read_instance_file(args.file)
    if args.tour:
        tour = Tour.from_order(inst, read_tour_file(args.tour, inst.n))
    else:
        tour = solvers.solve(inst, _solve_config(args, args.seed))
    rep = density.rho(inst, tour, density.nn_sets(inst, args.metric, args.tie_eps))
    if args.out:
        _emit(write_tour(tour, inst.name), args.out)
    print(json.dumps({"name": inst.name, "n": inst.n, "length": tour.length, "rho": rep.rho, "tie_count": rep.tie_count}))
    return 0


def cmd_calibrate(args) -> int:
    _need(args, "n", "count")
    base = generators.ScaleFreeConfig(args.n)
    if args.m is not None:
        base = dataclasses.replace(base, m0=args.m, m=args.m)
    solver = solvers.SolveConfig(restarts=args.restarts or 3, max_no_improve=5)
    rep = bench.calibrate_k(args.n, args.k, args.count, args.seed, args.target, base, solver)
    _emit(json.dumps(rep, indent=2, sort_keys=True) + "\n", args.out)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "density": cmd_density,
    "eval": cmd_eval,
    "stats": cmd_stats,
    "analytic": cmd_analytic,
    "render": cmd_render,
    "tsplib": cmd_tsplib,
    "calibrate": cmd_calibrate,
}


def _error_line(exc: BaseException) -> str:
    return json.dumps({"error": str(exc), "type": type(exc).__name__})


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        _apply_config(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
