"""Experiment pipelines, external-tour evaluation, calibration and SVG overlays.

Reports are written in instance order whatever the worker count, and floats use
``repr`` so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import density, generators, solvers
from .core import Instance, InvalidInputError, Metric, Tour, aggregate_gaps, optimality_gap
from .seeding import ordered_map, sub_seed
from .tsplib_io import read_instance_file, read_tour_file

CSV_COLUMNS = ("name", "n", "family", "seed", "tour_len", "best_len", "gap", "rho", "tie_count", "status")


@dataclass(frozen=True)
class ExperimentConfig:
    """One generate -> solve -> score run.

    ``solver`` produces the reference tour that ``rho`` and ``best_len`` are measured
    on; ``candidate`` produces ``tour_len`` and the gaps (the greedy heuristic by default).
    """

    generator: generators.GeneratorConfig
    count: int
    master_seed: int = 0
    solver: solvers.SolveConfig = field(default_factory=solvers.SolveConfig)
    candidate: solvers.SolveConfig = field(default_factory=lambda: solvers.SolveConfig(algorithm="nn"))
    metric: Metric | None = None
    tie_eps: float | None = None
    defect_threshold: float = density.DEFECT_THRESHOLD
    out_dir: Path | None = None
    render: int = 1
    jobs: int = 1

    def __post_init__(self):
        if self.count < 1:
            raise InvalidInputError("count must be >= 1")
        if self.defect_threshold <= 0:
            raise InvalidInputError("defect threshold must be positive")
        self.generator.validate()

    def to_dict(self) -> dict:
        return {
            "generator": {"family": self.generator.family, **generators.config_params(self.generator)},
            "count": self.count,
            "master_seed": self.master_seed,
            "solver": _solve_cfg_dict(self.solver),
            "candidate": _solve_cfg_dict(self.candidate),
            "metric": None if self.metric is None else Metric.parse(self.metric).value,
            "tie_eps": self.tie_eps,
            "defect_threshold": self.defect_threshold,
        }


def _solve_cfg_dict(cfg: solvers.SolveConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["algorithm"] = cfg.algorithm.value
    return d


@dataclass(frozen=True)
class Row:
    name: str
    n: int
    family: str
    seed: int
    tour_len: float | None = None
    best_len: float | None = None
    gap: float | None = None
    rho: float | None = None
    tie_count: int | None = None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class PipelineResult:
    rows: list[Row]
    summary: dict
    instances: list[Instance | None]
    tours: list[Tour | None]
    files: dict[str, str]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[Row]:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        def num(key, cast=float):
            return cast(rec[key]) if rec[key] != "" else None

        out.append(Row(rec["name"], int(rec["n"]), rec["family"], int(rec["seed"]), num("tour_len"),
                       num("best_len"), num("gap"), num("rho"), num("tie_count", int), rec["status"]))
    return out


def summarize_rows(rows: Sequence[Row], family: str, n: int, defect_threshold: float) -> dict:
    """Summary statistics from instance rows; recomputing from the CSV gives the same numbers."""
    ok = [r for r in rows if r.ok]
    s = {
        "family": family,
        "n": n,
        "count": len(rows),
        "completed": len(ok),
        "incomplete": [r.name for r in rows if not r.ok],
        "rho_mean": None,
        "rho_sd": None,
        "mean_len": None,
        "defect_rate": None,
        "gap_mean_of_gaps": None,
        "gap_ratio_of_means": None,
    }
    if ok:
        rho = np.array([r.rho for r in ok])
        s["rho_mean"] = float(np.mean(rho))
        s["rho_sd"] = float(np.std(rho, ddof=1)) if rho.size > 1 else 0.0
        s["mean_len"] = float(np.mean([r.best_len for r in ok]))
        s["defect_rate"] = density.defect_rate([r.gap for r in ok], defect_threshold)
        agg = aggregate_gaps([r.tour_len for r in ok], [r.best_len for r in ok])
        s["gap_mean_of_gaps"] = agg["mean_of_gaps"]
        s["gap_ratio_of_means"] = agg["ratio_of_means"]
    return s


def _item_seed(master: int, i: int) -> int:
    return sub_seed(master, i)


def _run_item(args):
    i, cfg = args
    seed = _item_seed(cfg.master_seed, i)
    name = f"{cfg.generator.family}_n{cfg.generator.n}_{i:06d}"
    base = dict(name=name, n=cfg.generator.n, family=cfg.generator.family, seed=seed)
    try:
        inst = dataclasses.replace(generators.generate(cfg.generator, seed), name=name)
        # solver seeds are derived from the instance seed so rows do not depend on their neighbors
        ref = solvers.solve(inst, dataclasses.replace(cfg.solver, seed=sub_seed(seed, 1)))
        cand = solvers.solve(inst, dataclasses.replace(cfg.candidate, seed=sub_seed(seed, 2)))
        best = min(ref.length, cand.length)
        ns = density.nn_sets(inst, cfg.metric, cfg.tie_eps)
        rep = density.rho(inst, ref, ns)
        row = Row(**base, tour_len=cand.length, best_len=best, gap=optimality_gap(cand.length, best),
                  rho=rep.rho, tie_count=rep.tie_count)
        return row, inst, ref
    except Exception as exc:  # recorded per row; the batch carries on
        return Row(**base, status=f"error: {type(exc).__name__}: {exc}"), None, None


def run_pipeline(cfg: ExperimentConfig) -> PipelineResult:
    """Generate, solve, score and (when ``cfg.out_dir`` is set) write the reports.

    Files: ``instances.csv``, ``summary.json``, ``rho_hist.csv`` and
    ``overlay_<name>.svg`` for the first ``cfg.render`` completed instances.
    """
    results = ordered_map(_run_item, [(i, cfg) for i in range(cfg.count)], cfg.jobs)
    rows = [r[0] for r in results]
    summary = summarize_rows(rows, cfg.generator.family, cfg.generator.n, cfg.defect_threshold)
    summary["config"] = cfg.to_dict()
    summary["master_seed"] = cfg.master_seed
    files: dict[str, str] = {
        "instances.csv": rows_to_csv(rows),
        "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n",
        "rho_hist.csv": histogram_csv(density.histogram([r.rho for r in rows if r.ok])),
    }
    rendered = 0
    for row, inst, tour in results:
        if rendered >= cfg.render:
            break
        if inst is not None:
            files[f"overlay_{row.name}.svg"] = render_overlay(inst, tour, density.nn_sets(inst, cfg.metric, cfg.tie_eps))
            rendered += 1
    if cfg.out_dir is not None:
        write_files(Path(cfg.out_dir), files)
    return PipelineResult(rows, summary, [r[1] for r in results], [r[2] for r in results], files)


def write_files(out_dir: Path, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text, encoding="utf-8", newline="")


def histogram_csv(hist) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("bin_left", "bin_right", "count"))
    for lo, hi, c in hist:
        w.writerow((repr(lo), repr(hi), c))
    return buf.getvalue()


INSTANCE_SUFFIXES = (".tsp", ".json")
TOUR_SUFFIXES = (".tour", ".json")


def _index_dir(path: Path, suffixes) -> dict[str, Path]:
    out: dict[str, Path] = {}
    for p in sorted(Path(path).iterdir()):
        if p.suffix.lower() in suffixes:
            stem = p.name[: -len(p.suffix)]
            if stem.endswith(".opt"):
                stem = stem[:-4]
            out.setdefault(stem, p)
    return out


def evaluate_external_tours(
    instances_dir: str | Path,
    tours_dir: str | Path,
    reference_dir: str | Path | None = None,
    threshold: float = density.DEFECT_THRESHOLD,
    bins: int = 10,
    metric=None,
    tie_eps=None,
) -> dict:
    """Score externally produced tours against reference tours.

    Files are matched by name stem (``x.tsp`` / ``x.json`` with ``x.tour``,
    ``x.opt.tour`` or ``x.json``). Without a reference directory the candidate
    tours are their own references. Returns a report with one row per instance,
    the defect rate over scored rows and a rho-binned gap table.
    """
    insts = _index_dir(Path(instances_dir), INSTANCE_SUFFIXES)
    if not insts:
        raise InvalidInputError(f"no instance files in {instances_dir}")
    tours = _index_dir(Path(tours_dir), TOUR_SUFFIXES)
    refs = _index_dir(Path(reference_dir), TOUR_SUFFIXES) if reference_dir is not None else tours
    rows = []
    for stem, ipath in insts.items():
        row = {"name": stem, "tour_len": None, "ref_len": None, "gap": None, "rho": None, "status": "ok"}
        try:
            inst = read_instance_file(ipath)
            if stem not in tours:
                raise InvalidInputError(f"no tour file for {ipath.name}")
            if stem not in refs:
                raise InvalidInputError(f"no reference tour for {ipath.name}")
            cand = Tour.from_order(inst, read_tour_file(tours[stem], inst.n))
            ref = Tour.from_order(inst, read_tour_file(refs[stem], inst.n))
            row["tour_len"] = cand.length
            row["ref_len"] = ref.length
            row["gap"] = optimality_gap(cand.length, ref.length)
            row["rho"] = density.rho(inst, ref, density.nn_sets(inst, metric, tie_eps)).rho
        except Exception as exc:  # per-row error entry
            row["status"] = f"error: {type(exc).__name__}: {exc}"
        rows.append(row)
    unmatched = sorted(set(tours) - set(insts))
    ok = [r for r in rows if r["status"] == "ok"]
    report = {
        "count": len(rows),
        "scored": len(ok),
        "threshold": threshold,
        "rows": rows,
        "unmatched_tours": unmatched,
        "defect_rate": density.defect_rate([r["gap"] for r in ok], threshold) if ok else None,
        "by_rho": [],
    }
    if ok:
        report["by_rho"] = [
            dict(zip(("rho_lo", "rho_hi", "count", "defect_rate", "mean_gap"), b))
            for b in density.defect_by_rho([r["rho"] for r in ok], [r["gap"] for r in ok], bins, threshold)
        ]
    return report


def calibrate_k(
    n: int,
    ks: Sequence[float],
    count: int,
    master_seed: int = 0,
    target: float = 0.7571,
    base: generators.ScaleFreeConfig | None = None,
    solver: solvers.SolveConfig | None = None,
) -> dict:
    """Sweep ``k_attract`` and report mean rho per value; picks the value closest to ``target``."""
    if not ks:
        raise InvalidInputError("need at least one k value")
    base = base or generators.ScaleFreeConfig(n)
    solver = solver or solvers.SolveConfig(restarts=3, max_no_improve=5)
    table = []
    for k in ks:
        cfg = dataclasses.replace(base, n=n, k_attract=float(k))
        insts = generators.gen_batch(cfg, count, master_seed)
        tours = solvers.solve_batch(insts, solver)
        s = density.rho_batch(insts, tours)
        table.append({"k": float(k), "rho_mean": s.mean, "rho_sd": s.sd, "rho_sem": s.sem})
    best = min(table, key=lambda r: (abs(r["rho_mean"] - target), r["k"]))
    return {"n": n, "count": count, "target": target, "master_seed": master_seed, "table": table, "best_k": best["k"]}


SVG_SIZE = 480.0
SVG_PAD = 0.05


def render_overlay(instance: Instance, tour: Tour | Sequence[int], neighbor_sets: density.NeighborSets | None = None) -> str:
    """SVG of the tour (class ``tour``), nearest-neighbor edges missing from it
    (class ``nn-uncovered``, one line per unordered pair) and the nodes."""
    order = np.asarray(tour.order if isinstance(tour, Tour) else tour)
    ns = neighbor_sets or density.nn_sets(instance)
    pts = instance.coords
    lo = pts.min(axis=0)
    span = float((pts.max(axis=0) - lo).max()) or 1.0
    pad = SVG_PAD * span
    scale = SVG_SIZE / (span + 2 * pad)
    w = (float(pts[:, 0].max() - lo[0]) + 2 * pad) * scale
    h = (float(pts[:, 1].max() - lo[1]) + 2 * pad) * scale

    def xy(i):
        # SVG y grows downward
        x = (pts[i, 0] - lo[0] + pad) * scale
        y = h - (pts[i, 1] - lo[1] + pad) * scale
        return f"{x:.3f}", f"{y:.3f}"

    uncovered = density.uncovered_nn_edges(order, ns)
    r = max(1.0, min(4.0, 200.0 / math.sqrt(instance.n)) / 2)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3f}" height="{h:.3f}" viewBox="0 0 {w:.3f} {h:.3f}">',
        f"<title>{_xml_escape(instance.name)}</title>",
        "<style>.tour{stroke:#555;stroke-width:1;fill:none}"
        ".nn-uncovered{stroke:#d62728;stroke-width:2;fill:none}.node{fill:#1f77b4}</style>",
        f'<g class="tour" data-edges="{len(order)}">',
    ]
    for a, b in zip(order, np.roll(order, -1)):
        (x1, y1), (x2, y2) = xy(a), xy(b)
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
    out.append("</g>")
    out.append(f'<g class="nn-uncovered" data-edges="{len(uncovered)}">')
    for a, b in uncovered:
        (x1, y1), (x2, y2) = xy(a), xy(b)
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
    out.append("</g>")
    out.append('<g class="node">')
    for i in range(instance.n):
        x, y = xy(i)
        out.append(f'<circle cx="{x}" cy="{y}" r="{r:.2f}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
