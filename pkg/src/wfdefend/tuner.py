"""Random search over regulator parameters under a weighted loss.

Each trial samples a parameter set, defends the dataset with it, measures
closed-world accuracy plus mean overheads, and scores them as a weighted
sum. Per-trial seeds derive from (master seed, trial index), so extending
the trial count reruns nothing and never worsens the best loss found.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .attack import evaluate_closed_world
from .metrics import dataset_overhead
from .regulator import RegulatorParams, apply_regulator
from .seeding import stable_seed
from .traces import Dataset


@dataclass(frozen=True, slots=True)
class LossWeights:
    w_accuracy: float = 1.0
    w_bandwidth: float = 1.0
    w_latency: float = 1.0

    def __post_init__(self):
        if min(self.w_accuracy, self.w_bandwidth, self.w_latency) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.w_accuracy == self.w_bandwidth == self.w_latency == 0:
            raise ValueError("at least one loss weight must be positive")


@dataclass(frozen=True, slots=True)
class SearchSpace:
    """Closed sampling intervals per parameter; defaults bracket the presets."""

    R: tuple[float, float] = (100.0, 600.0)
    D: tuple[float, float] = (0.7, 0.99)
    T: tuple[float, float] = (1.0, 10.0)
    N: tuple[int, int] = (500, 8000)
    U: tuple[float, float] = (1.0, 8.0)
    C: tuple[float, float] = (0.5, 5.0)

    def __post_init__(self):
        for name in ("R", "D", "T", "N", "U", "C"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"empty interval for {name}: ({lo}, {hi})")
        if self.R[0] <= 0 or self.T[0] <= 0 or self.U[0] <= 0 or self.C[0] <= 0:
            raise ValueError("R, T, U, C intervals must be positive")
        if not (0 < self.D[0] and self.D[1] <= 1):
            raise ValueError("D interval must lie in (0, 1]")
        if self.N[0] < 0:
            raise ValueError("N interval must be non-negative")


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed: int
    params: RegulatorParams
    accuracy: float
    mean_bandwidth: float
    mean_latency: float
    loss: float


def loss(
    weights: LossWeights, accuracy: float, bandwidth: float, latency: float
) -> float:
    """Weighted combination of attack accuracy and the two overheads."""
    return (
        weights.w_accuracy * accuracy
        + weights.w_bandwidth * bandwidth
        + weights.w_latency * latency
    )


def sample_params(space: SearchSpace, rng: np.random.Generator) -> RegulatorParams:
    """Uniform draw from the space; N as an integer. Draw order is fixed."""
    return RegulatorParams(
        R=float(rng.uniform(*space.R)),
        D=float(rng.uniform(*space.D)),
        T=float(rng.uniform(*space.T)),
        N=int(rng.integers(space.N[0], space.N[1], endpoint=True)),
        U=float(rng.uniform(*space.U)),
        C=float(rng.uniform(*space.C)),
    )


def run_trial(
    dataset: Dataset,
    params: RegulatorParams,
    trial_seed: int,
    weights: LossWeights,
    trial_index: int,
    eval_k: int = 5,
    eval_folds: int = 10,
) -> TrialRecord:
    defended = [
        apply_regulator(trace, params, stable_seed(trial_seed, "trace", i))
        for i, trace in enumerate(dataset.traces)
    ]
    overhead = dataset_overhead(dataset.traces, defended)
    result = evaluate_closed_world(
        dataset,
        defense=lambda trace, i, d=defended: d[i],
        k=eval_k,
        folds=eval_folds,
        seed=trial_seed,
    )
    trial_loss = loss(
        weights, result.accuracy, overhead.mean_bandwidth, overhead.mean_latency
    )
    return TrialRecord(
        trial_index=trial_index,
        seed=trial_seed,
        params=params,
        accuracy=result.accuracy,
        mean_bandwidth=overhead.mean_bandwidth,
        mean_latency=overhead.mean_latency,
        loss=trial_loss,
    )


def random_search(
    dataset: Dataset,
    space: SearchSpace,
    weights: LossWeights,
    trials: int,
    seed: int,
    eval_k: int = 5,
    eval_folds: int = 10,
    start_trial: int = 0,
    on_trial: Optional[Callable[[TrialRecord], None]] = None,
) -> list[TrialRecord]:
    """Run trials [start_trial, trials) and return them sorted by loss.

    `on_trial` fires after each trial in run order, which lets callers
    append to a resumable log. Fully deterministic given the seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= start_trial <= trials:
        raise ValueError("start_trial must lie in [0, trials]")
    records = []
    for index in range(start_trial, trials):
        trial_seed = stable_seed(seed, "trial", index)
        params = sample_params(space, np.random.default_rng(trial_seed))
        record = run_trial(
            dataset, params, trial_seed, weights, index, eval_k, eval_folds
        )
        if on_trial is not None:
            on_trial(record)
        records.append(record)
    return sorted(records, key=lambda r: (r.loss, r.trial_index))


def trial_json(record: TrialRecord, master_seed: int) -> str:
    """One-line JSON encoding for the append-only trial log."""
    payload = {
        "master_seed": master_seed,
        "trial_index": record.trial_index,
        "seed": record.seed,
        "params": asdict(record.params),
        "accuracy": record.accuracy,
        "mean_bandwidth": record.mean_bandwidth,
        "mean_latency": record.mean_latency,
        "loss": record.loss,
    }
    return json.dumps(payload, sort_keys=True)


def parse_trial_json(line: str) -> tuple[TrialRecord, int]:
    payload = json.loads(line)
    record = TrialRecord(
        trial_index=payload["trial_index"],
        seed=payload["seed"],
        params=RegulatorParams(**payload["params"]),
        accuracy=payload["accuracy"],
        mean_bandwidth=payload["mean_bandwidth"],
        mean_latency=payload["mean_latency"],
        loss=payload["loss"],
    )
    return record, payload["master_seed"]
