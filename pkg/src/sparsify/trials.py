# Matrix-set trials
# Generate-and-sparsify batches with per-trial chi and aggregate tables

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import InvalidInputError
from src.events import PipelineEventBus, TrialCompletedEvent
from src.models import MatrixInstanceSpec, PipelineConfig
from src.testgen import PROTOCOL_MAX_SIZE, gen_matrix_set, random_instance_spec

from .metrics import GroundTruth, chi_histogram, failure_ratio
from .pipeline import FunctionSamples, PipelineResult, run_pipeline

logger = logging.getLogger(__name__)


@dataclass
class TrialResult:
    """One generated instance and the pipeline run on it"""

    index: int
    spec: MatrixInstanceSpec
    result: PipelineResult
    elapsed: float

    @property
    def chi(self) -> Dict[float, int]:
        return self.result.chi or {}

    def row(self) -> Dict[str, Any]:
        """Flat summary of the trial for tables."""
        cfg = self.result.config
        row: Dict[str, Any] = {
            "trial": self.index,
            "d": self.spec.d,
            "J_size": len(self.spec.off_diag) + len(self.spec.diag),
            "sigma": self.spec.sigma,
            "init": cfg.init.value,
            "method": cfg.optimizer.method.value,
            "optimality_gap": self.result.optimality_gap,
            "elapsed": self.elapsed,
        }
        for eta, chi in self.chi.items():
            row[f"chi@{eta:g}"] = chi
        return row


def protocol_specs(
    d: int, n_trials: int, N: int = 10, sigma: float = 0.0, seed: int = 0
) -> List[MatrixInstanceSpec]:
    """Instance specs with |J| uniform in [1, bound(d)] as in the matrix experiments."""
    if n_trials < 1:
        raise InvalidInputError("At least one trial is required")
    bound = PROTOCOL_MAX_SIZE.get(d, d * (d + 1) // 2)
    rng = np.random.default_rng(seed)
    specs = []
    for _ in range(n_trials):
        size = int(rng.integers(1, bound + 1))
        specs.append(random_instance_spec(d, size, N, sigma, int(rng.integers(0, 2**31 - 1))))
    return specs


def run_trial(
    index: int,
    spec: MatrixInstanceSpec,
    cfg: PipelineConfig,
    bus: Optional[PipelineEventBus] = None,
) -> TrialResult:
    """Generate H_R(J, sigma), sparsify it and score the result against the truth."""
    started = time.perf_counter()
    instance = gen_matrix_set(spec)
    trial_cfg = cfg.adapted_to_noise(spec.sigma > 0)
    truth = GroundTruth(instance.pattern, instance.truth_transform)
    result = run_pipeline(
        FunctionSamples(instance.mats),
        trial_cfg,
        truth=truth,
        clean_reference=instance.clean,
        bus=bus,
    )
    elapsed = time.perf_counter() - started
    if bus is not None:
        bus.publish(
            TrialCompletedEvent(
                index, {f"{e:g}": c for e, c in (result.chi or {}).items()}, result.optimality_gap
            )
        )
    logger.debug(f"Trial {index} (d={spec.d}, |J|={len(spec.off_diag) + len(spec.diag)}): chi {result.chi}")
    return TrialResult(index, spec, result, elapsed)


def run_trials(
    specs: Sequence[MatrixInstanceSpec],
    cfg: Optional[PipelineConfig] = None,
    jobs: int = 1,
    bus: Optional[PipelineEventBus] = None,
) -> List[TrialResult]:
    """
    Run a batch of trials, optionally in a thread pool.

    Results come back in the order of `specs` whatever the scheduling.
    """
    cfg = cfg or PipelineConfig()
    if jobs > 1:
        cfg = cfg.model_copy(update={"jobs": 1})

    def work(k: int) -> TrialResult:
        return run_trial(k, specs[k], cfg, bus)

    if jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, range(len(specs))))
    else:
        results = [work(k) for k in range(len(specs))]
    logger.info(f"Completed {len(results)} trials")
    return results


def summarize_rows(rows: Sequence[Dict[str, Any]], etas: Sequence[float]) -> pd.DataFrame:
    """
    Aggregate trial rows per (d, init, method, eta).

    Columns: trials, failure ratio, histogram bins of chi and the mean
    optimality gap.
    """
    frame = pd.DataFrame(list(rows))
    if frame.empty:
        raise InvalidInputError("No trial rows to summarize")
    out = []
    for (d, init, method), group in frame.groupby(["d", "init", "method"], sort=True):
        for eta in etas:
            column = f"chi@{eta:g}"
            if column not in group:
                continue
            gaps = [int(c) for c in group[column].dropna()]
            if not gaps:
                continue
            entry = {
                "d": int(d),
                "init": init,
                "method": method,
                "eta": float(eta),
                "trials": len(gaps),
                "failure_ratio": failure_ratio(gaps),
            }
            entry.update({f"chi={k}": v for k, v in chi_histogram(gaps).items()})
            mean_gap = group["optimality_gap"].dropna() if "optimality_gap" in group else []
            entry["mean_optimality_gap"] = float(np.mean(mean_gap)) if len(mean_gap) else None
            out.append(entry)
    return pd.DataFrame(out)


def summarize_trials(results: Sequence[TrialResult], etas: Sequence[float]) -> pd.DataFrame:
    return summarize_rows([r.row() for r in results], etas)
