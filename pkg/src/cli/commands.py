# CLI subcommands
# gen, sparsify, anova, report and trials on top of the library

import argparse
import contextlib
import logging
import os
import re
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

import config
from src.core.decomposition import (
    anova_term_norms,
    compose_rotation,
    derivative_smallness_counts,
    minimal_term_norm,
    term_norm_report_rows,
)
from src.core.functions import SampledFunction
from src.errors import InvalidInputError
from src.events import StageTimer, TrajectoryRecorder, get_event_bus, log_event
from src.models import QuadratureSpec
from src.sparsify import (
    protocol_specs,
    run_pipeline,
    run_trials,
    sample_function,
    summarize_rows,
    summarize_trials,
)
from src.storage import (
    ArtifactStore,
    block_result_to_json,
    function_instance_to_json,
    function_spec_from_json,
    function_spec_to_json,
    get_store,
    instance_to_json,
    load_instance,
    matrix_spec_to_json,
)
from src.testgen import (
    build_function,
    builtin_benchmark,
    gen_matrix_set,
    random_function_spec,
    random_instance_spec,
)

from .manifest import build_manifest, load_pipeline_config, parse_float_list

logger = logging.getLogger(__name__)

COUNTING_CONVENTION = "chi counts ordered off-diagonal pairs plus diagonal support"


def _store(args: argparse.Namespace) -> ArtifactStore:
    out = getattr(args, "out", None)
    return ArtifactStore(out) if out else get_store()


@contextlib.contextmanager
def _observed(*observers):
    """Attach observers and the event log to the shared bus for one command."""
    bus = get_event_bus()
    bus.subscribe_all(log_event)
    for observer in observers:
        observer.attach(bus)
    try:
        yield bus
    finally:
        for observer in observers:
            observer.detach(bus)
        bus.unsubscribe_all(log_event)


def _seed(args: argparse.Namespace) -> int:
    return config.DEFAULT_SEED if args.seed is None else args.seed


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _pipeline_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "init": getattr(args, "init", None),
        "grid.h": getattr(args, "h", None),
        "optimizer.method": getattr(args, "method", None),
        "optimizer.step": getattr(args, "nu", None),
        "optimizer.landing_penalty": getattr(args, "lam", None),
        "optimizer.max_iters": getattr(args, "max_iters", None),
        "etas": parse_float_list(getattr(args, "eta", None)),
        "tau_rel": getattr(args, "tau", None),
        "delta": getattr(args, "delta", None),
        "seed": getattr(args, "seed", None),
        "jobs": getattr(args, "jobs", None),
    }


# ==================== gen ====================


def cmd_gen(args: argparse.Namespace) -> int:
    """Write a generated matrix set or a sampled test function."""
    store = _store(args)
    seed = _seed(args)

    if args.kind == "matrices":
        if args.J_size is None:
            raise InvalidInputError("gen matrices needs --J-size")
        spec = random_instance_spec(args.d, args.J_size, args.N, args.sigma, seed)
        instance = gen_matrix_set(spec)
        payload = instance_to_json(instance)
        name = args.output or f"matrices_d{args.d}_J{args.J_size}_seed{seed}.json"
        config_payload = matrix_spec_to_json(spec)
        seeds = {"seed": seed, "rotation_seed": spec.rotation_seed, "entry_seed": spec.entry_seed}
    else:
        if args.kind == "function":
            spec = random_function_spec(seed, args.d, noisy=args.noisy, rotate=not args.no_rotate)
            f = build_function(spec)
            description = {"type": "generated", **function_spec_to_json(spec)}
            pattern, R = f.ground_truth["pattern"], f.ground_truth.get("R")
            name = args.output or f"function_d{args.d}_seed{seed}.json"
        else:
            bench = builtin_benchmark(args.which, rotate=args.rotate, noisy=args.noisy, seed=seed)
            f = bench.function
            description = {
                "type": "builtin",
                "which": args.which,
                "rotate": args.rotate,
                "noisy": args.noisy,
                "seed": seed,
            }
            pattern, R = bench.base.ground_truth["pattern"], bench.R
            name = args.output or f"builtin_{args.which}_seed{seed}.json"
        samples = sample_function(f, args.points, seed)
        payload = function_instance_to_json(description, samples, pattern, R, noisy=args.noisy)
        config_payload = description
        seeds = {"seed": seed}

    path = store.path_for(name)
    payload["manifest"] = build_manifest(f"gen {args.kind}", config_payload, seeds, outputs=[path])
    store.save_json(path, payload)
    print(f"Wrote {path}")
    return 0


# ==================== sparsify ====================


def cmd_sparsify(args: argparse.Namespace) -> int:
    """Run the pipeline on an instance file and write the report."""
    store = _store(args)
    loaded = load_instance(store.load_json(args.input))
    cfg = load_pipeline_config(args.config, _pipeline_overrides(args)).adapted_to_noise(loaded.noisy)

    timer, recorder = StageTimer(), TrajectoryRecorder()
    with _observed(timer, recorder) as bus:
        result = run_pipeline(loaded.samples, cfg, loaded.truth, loaded.clean, bus)

    stem = args.output or f"{_stem(args.input)}_report"
    report_path = store.path_for(f"{stem}.json")
    trajectory_path = store.path_for(f"{stem}_trajectories.csv")
    rows = [
        {"run_id": run_id, **row}
        for run_id, run_rows in sorted(recorder.rows.items())
        for row in run_rows
    ]
    store.save_csv(trajectory_path, rows, columns=["run_id", "iter", "loss", "grad_norm", "defect"])

    report = result.to_report()
    report.manifest = build_manifest(
        "sparsify",
        cfg,
        {"seed": cfg.seed},
        inputs=[args.input],
        outputs=[report_path, trajectory_path],
        timings=timer.timings if args.timings else None,
    )
    payload = report.model_dump(mode="json")
    payload["block_diag"] = block_result_to_json(result.blockdiag)
    payload["diagnostics"] = dict(result.diagnostics)
    if result.certificate is not None:
        cert = result.certificate
        payload["certificate"] = {
            "status": cert.status.value,
            "nonzeros_ordered": cert.nonzeros_ordered,
            "nonzeros_unordered": cert.nonzeros_unordered,
            "dim_span": cert.dim_span,
            "max_rank": cert.max_rank,
        }
    store.save_json(report_path, payload)

    print(f"d={result.d}, d1={result.d1}, profile={list(result.profile)}")
    if result.chi is not None:
        for eta, chi in result.chi.items():
            print(f"  chi(eta={eta:g}) = {chi}")
    print(f"Wrote {report_path}")
    return 0


# ==================== anova ====================


def _function_from_args(args: argparse.Namespace, store: ArtifactStore) -> SampledFunction:
    seed = _seed(args)
    if args.input:
        description = store.load_json(args.input).get("function")
        if not description:
            raise InvalidInputError(f"{args.input} does not describe a function")
        if description.get("type") == "builtin":
            return builtin_benchmark(
                description["which"],
                rotate=bool(description.get("rotate")),
                noisy=bool(description.get("noisy")),
                seed=description.get("seed"),
            ).function
        return build_function(function_spec_from_json(description))
    return builtin_benchmark(args.which, rotate=args.rotate, noisy=args.noisy, seed=seed).function


def cmd_anova(args: argparse.Namespace) -> int:
    """Derivative smallness counts and ANOVA term norms of a function."""
    store = _store(args)
    seed = _seed(args)
    f = _function_from_args(args, store)
    if args.transform:
        U = np.asarray(store.load_json(args.transform)["U_total"], dtype=float)
        f = compose_rotation(f, U)

    points = f.sample_points(args.points, np.random.default_rng(seed))
    counts = {}
    for p, label in ((1, "1"), (np.inf, "inf")):
        G, H = derivative_smallness_counts(f, points, p, args.tol)
        counts[label] = {"G": G, "H": H}
        print(f"p={label}: G={G}, H={H}")

    stem = args.output or f"anova_{f.name.replace('~', 't')}_seed{seed}"
    outputs = [store.path_for(f"{stem}.json")]
    payload: Dict[str, Any] = {"function": f.name, "d": f.d, "tol": args.tol, "counts": counts}

    orders = [int(o) for o in parse_float_list(args.orders)] if args.orders else []
    if orders:
        q = QuadratureSpec(samples_or_nodes=args.mc_samples, seed=seed)
        term_points = points[: args.term_points]
        norms = anova_term_norms(f, term_points, q, orders=orders)
        rows = term_norm_report_rows(f, norms, term_points, args.tol)
        csv_path = store.path_for(f"{stem}_terms.csv")
        store.save_csv(csv_path, rows, columns=["subset", "p", "estimate", "bound", "n_samples", "seed"])
        outputs.append(csv_path)
        payload["minimal_term_norm"] = {
            str(order): {
                "1": minimal_term_norm(norms, order, 1),
                "inf": minimal_term_norm(norms, order, np.inf),
            }
            for order in orders
        }

    payload["manifest"] = build_manifest(
        "anova",
        {"function": f.name, "tol": args.tol, "orders": orders, "points": args.points},
        {"seed": seed},
        inputs=[p for p in (args.input, args.transform) if p],
        outputs=outputs,
    )
    store.save_json(outputs[0], payload)
    print(f"Wrote {outputs[0]}")
    return 0


# ==================== report ====================


def report_rows(reports: List[Tuple[str, Dict[str, Any]]]) -> Tuple[List[Dict[str, Any]], List[float]]:
    """Flatten sparsify/trial reports into table rows keyed by (d, init, method)."""
    rows, etas = [], set()
    for path, report in reports:
        try:
            cfg = report["config"]
            row: Dict[str, Any] = {
                "source": path,
                "d": int(report["d"]),
                "init": cfg["init"],
                "method": cfg["optimizer"]["method"],
                "optimality_gap": report.get("optimality_gap"),
            }
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"{path} is not a sparsify report: missing {exc}") from exc
        for key, chi in (report.get("chi_by_eta") or {}).items():
            eta = float(key)
            etas.add(eta)
            row[f"chi@{eta:g}"] = chi
        rows.append(row)
    return rows, sorted(etas)


def cmd_report(args: argparse.Namespace) -> int:
    """Aggregate failure ratios, chi histograms and optimality gaps."""
    store = _store(args)
    paths: List[str] = []
    for item in args.inputs:
        if os.path.isdir(item):
            paths.extend(
                os.path.join(item, name)
                for name in sorted(os.listdir(item))
                if name.endswith(".json") and not name.startswith("summary")
            )
        else:
            paths.append(item)
    if not paths:
        raise InvalidInputError("report needs at least one report file")

    rows, etas = report_rows([(p, store.load_json(p)) for p in paths])
    if not etas:
        raise InvalidInputError("None of the reports carries chi values (no ground truth)")
    table = summarize_rows(rows, etas)

    if args.table != "summary":
        match = re.fullmatch(r"dim(\d+)", args.table)
        if match is None:
            raise InvalidInputError(f"Unknown table {args.table!r}; use 'summary' or 'dimK'")
        table = table[table["d"] == int(match.group(1))]
        bins = [c for c in table.columns if c.startswith("chi=")]
        table = table[["init", "method", "eta", "trials", *bins]]

    stem = args.output or f"report_{args.table}"
    csv_path = store.path_for(f"{stem}.csv")
    json_path = store.path_for(f"{stem}.json")
    store.save_csv(csv_path, table.to_dict(orient="records"), columns=list(table.columns))
    store.save_json(
        json_path,
        {
            "table": args.table,
            "counting_convention": COUNTING_CONVENTION,
            "rows": table.astype(object).where(pd.notna(table), None).to_dict(orient="records"),
            "manifest": build_manifest(
                "report", {"table": args.table}, {}, inputs=paths, outputs=[csv_path, json_path]
            ),
        },
    )
    print(table.to_string(index=False))
    return 0


# ==================== trials ====================


def cmd_trials(args: argparse.Namespace) -> int:
    """Generate and sparsify a batch of matrix sets, one report per trial."""
    store = _store(args)
    seed = _seed(args)
    cfg = load_pipeline_config(args.config, _pipeline_overrides(args))
    specs = protocol_specs(args.d, args.trials, args.N, args.sigma, seed)

    timer = StageTimer()
    with _observed(timer) as bus:
        results = run_trials(specs, cfg, jobs=args.jobs or 1, bus=bus)

    directory = args.output or f"trials_d{args.d}_seed{seed}"
    outputs = []
    for trial in results:
        report = trial.result.to_report()
        path = store.path_for(os.path.join(directory, f"trial_{trial.index:03d}.json"))
        report.manifest = build_manifest(
            "trials",
            trial.result.config,
            {"seed": seed, "rotation_seed": trial.spec.rotation_seed, "entry_seed": trial.spec.entry_seed},
            outputs=[path],
        )
        payload = report.model_dump(mode="json")
        payload["instance"] = matrix_spec_to_json(trial.spec)
        store.save_json(path, payload)
        outputs.append(path)

    table = summarize_trials(results, cfg.etas)
    csv_path = store.path_for(os.path.join(directory, "summary.csv"))
    store.save_csv(csv_path, table.to_dict(orient="records"), columns=list(table.columns))
    store.save_json(
        os.path.join(directory, "summary.json"),
        {
            "trials": len(results),
            "counting_convention": COUNTING_CONVENTION,
            "manifest": build_manifest(
                "trials",
                cfg,
                {"seed": seed},
                outputs=outputs + [csv_path],
                timings=timer.timings if args.timings else None,
            ),
        },
    )
    print(table.to_string(index=False))
    return 0
