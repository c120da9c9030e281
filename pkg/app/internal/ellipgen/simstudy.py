"""
Monte-Carlo harness for the iterative generator estimator.

Provides the test generators, MISE scoring, missing-data injection and
seeded sweeps over sample size, dimension, correlation, bandwidth,
psi_a constant, missingness and initialization. Replications run in a
process pool and are streamed to the caller in a fixed order.
"""

import hashlib
import itertools
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Any, Callable, Iterator, Optional, Sequence

import numpy as np

from .config import GeneratorId, MecipConfig
from .copula import sample_meta_elliptical
from .exceptions import (
    EllipGenError,
    OutOfDomainError,
    TailMassWarning,
    TooManyMissingError,
)
from .generator import Generator, NormalizedGenerator, normalize
from .matrices import DataMatrix, structured_corr
from .mecip import mecip_estimate
from .models import ExperimentSpec, MiseRecord, ReplicationRecord
from .tabulated import DEFAULT_GRID, UniformGrid, check_same_grid
from ..logging import get_logger


logger = get_logger(__name__)

# wide source grid the test generators are tabulated on before normalization
SOURCE_GRID = UniformGrid.span(0.0, 500.0, 0.005)


def bump(x):
    """(x - 1)(1 + pi - x) sin(x - 1) on [1, 1 + pi], 0 elsewhere."""
    x = np.asarray(x, dtype=float)
    inside = (x >= 1.0) & (x <= 1.0 + math.pi)
    return np.where(inside, (x - 1.0) * (1.0 + math.pi - x) * np.sin(x - 1.0), 0.0)


GENERATOR_FUNCTIONS: dict[GeneratorId, Callable[[np.ndarray], np.ndarray]] = {
    GeneratorId.INVERSE_QUADRATIC: lambda x: 1.0 / (1.0 + x ** 2),
    GeneratorId.EXPONENTIAL: lambda x: np.exp(-x),
    GeneratorId.EXPONENTIAL_BUMP: lambda x: np.exp(-x) + bump(x),
    GeneratorId.EXPONENTIAL_COSINE: lambda x: np.exp(-x) + np.exp(-x / 3) * np.cos(x) ** 2,
    GeneratorId.RATIONAL_HUMP: lambda x: x / (1.0 + x ** 3),
    GeneratorId.GAUSSIAN_HUMP: lambda x: x ** 2 * np.exp(-x ** 2),
}

# exp(-t/2) and exp(-t) normalize to the same generator
ALIASES: dict[GeneratorId, GeneratorId] = {GeneratorId.GAUSSIAN: GeneratorId.EXPONENTIAL}


@lru_cache(maxsize=64)
def truth_generator(
    generator_id: GeneratorId,
    dim: int = 2,
    b: float = 1.0,
    grid: UniformGrid = DEFAULT_GRID,
) -> NormalizedGenerator:
    """
    Test generator tabulated on SOURCE_GRID and normalized onto grid.

    Args:
        generator_id: One of the test generators (gaussian is an alias of exponential).
        dim: Dimension d.
        b: Value of the marginal density at 0.
        grid: Output grid.
    """
    generator_id = GeneratorId(generator_id)
    func = GENERATOR_FUNCTIONS[ALIASES.get(generator_id, generator_id)]
    source = Generator.from_callable(func, dim, SOURCE_GRID)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailMassWarning)
        return normalize(source, b, grid=grid)


def builtin_generators(dim: int = 2, grid: UniformGrid = DEFAULT_GRID) -> list[tuple[GeneratorId, NormalizedGenerator]]:
    """The six test generators, normalized with b = 1."""
    return [(generator_id, truth_generator(generator_id, dim, 1.0, grid)) for generator_id in GENERATOR_FUNCTIONS]


def mise(
    estimates: Sequence[Generator | NormalizedGenerator],
    truth: Generator | NormalizedGenerator,
    tuple_index: int = 0,
    params: Optional[dict[str, Any]] = None,
    failures: int = 0,
) -> MiseRecord:
    """
    Squared L2 grid errors step * sum (g_hat - g)^2 of each estimate, with their summary.

    Raises:
        GridMismatchError: If an estimate is not on the grid of the truth.
    """
    errors = []
    for estimate in estimates:
        check_same_grid(estimate.grid, truth.grid)
        errors.append(estimate.table.squared_error(truth.table))
    return MiseRecord(tuple_index=tuple_index, params=params or {}, errors=errors, failures=failures)


def inject_missing(x: DataMatrix, n_missing: int, rng: np.random.Generator) -> DataMatrix:
    """
    Blank entries of n_missing distinct rows of trivariate data.

    A uniform number N1 in {0..n_missing} of these rows lose one coordinate,
    the others lose two; the coordinates are chosen uniformly.

    Raises:
        TooManyMissingError: If n_missing exceeds the number of rows.
    """
    if x.d != 3:
        raise OutOfDomainError(f"Missing-data injection needs d = 3, got {x.d}")
    if not 0 <= n_missing <= x.n:
        raise TooManyMissingError(f"Cannot blank {n_missing} rows of a {x.n}-row sample")
    if n_missing == 0:
        return x

    rows = rng.choice(x.n, size=n_missing, replace=False)
    single = int(rng.integers(0, n_missing + 1))

    mask = x.mask.copy()
    mask[rows[:single], rng.integers(0, 3, size=single)] = True
    keep = rng.integers(0, 3, size=n_missing - single)
    for row, kept in zip(rows[single:], keep):
        mask[row] = True
        mask[row, kept] = False

    logger.debug(f"Blanked {single} single and {n_missing - single} double entries")
    return DataMatrix(values=x.values, mask=mask)


# =============================================================================
# Experiments
# =============================================================================

SWEEP_AXES: tuple[str, ...] = ("n", "d", "rho12", "h", "a", "n_missing", "init")


def sweep_tuples(spec: ExperimentSpec) -> list[dict[str, Any]]:
    """Parameter tuples of the sweep product, last axis varying fastest."""
    axes = [getattr(spec, name) for name in SWEEP_AXES]
    tuples = []
    for values in itertools.product(*axes):
        params = dict(zip(SWEEP_AXES, values))
        params["init"] = params["init"].value
        tuples.append(params)
    return tuples


def derive_seed(master_seed: int, params: dict[str, Any], replication: int) -> int:
    """Seed of one replication, a function of the parameter values and not of their sweep position."""
    digest = hashlib.sha256(json.dumps(params, sort_keys=True).encode()).digest()
    entropy = [master_seed, int.from_bytes(digest[:8], "little"), replication]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0] >> 1)


def run_replication(
    spec: ExperimentSpec,
    tuple_index: int,
    params: dict[str, Any],
    replication: int,
) -> ReplicationRecord:
    """
    Simulate, estimate and score one replication; failures are recorded, not raised.
    """
    seed = derive_seed(spec.master_seed, params, replication)
    record = ReplicationRecord(tuple_index=tuple_index, params=params, replication=replication, seed=seed)
    started = time.perf_counter()

    try:
        truth = truth_generator(spec.truth, params["d"], spec.b)
        sigma = structured_corr(spec.sigma_kind, params["rho12"], params["d"])
        rng = np.random.default_rng(seed)

        x = sample_meta_elliptical(truth, sigma, params["n"], rng)
        if params["n_missing"]:
            x = inject_missing(x, params["n_missing"], rng)

        cfg = MecipConfig(
            b=spec.b,
            a=params["a"],
            h=params["h"],
            grid=truth.grid,
            init=params["init"],
            estimator=spec.estimator,
            n_max=spec.n_max,
            tol=spec.tol,
            seed=seed,
        )
        result = mecip_estimate(x, cfg)

        record.mise = result.g_final.table.squared_error(truth.table)
        record.mise_initial = result.g_initial.table.squared_error(truth.table)
        record.iterations = result.iterations
        record.converged = result.converged
    except EllipGenError as e:
        logger.warning(f"Replication {replication} of tuple {tuple_index} failed: {e.message}")
        record.failed = True
        record.error = f"{e.__class__.__name__}: {e.message}"
    except Exception as e:
        logger.exception(f"Replication {replication} of tuple {tuple_index} failed unexpectedly")
        record.failed = True
        record.error = f"{e.__class__.__name__}: {e}"

    record.wall_clock = time.perf_counter() - started
    return record


def _run_task(task: tuple[ExperimentSpec, int, dict[str, Any], int]) -> ReplicationRecord:
    return run_replication(*task)


def iter_replications(spec: ExperimentSpec, workers: int = 1) -> Iterator[ReplicationRecord]:
    """
    Replication records in (tuple index, replication) order.

    Args:
        spec: Experiment definition.
        workers: Worker processes; 1 runs in-process.
    """
    tasks = [
        (spec, index, params, replication)
        for index, params in enumerate(sweep_tuples(spec))
        for replication in range(spec.replications)
    ]
    logger.info(f"Running {len(tasks)} replication(s) on {workers} worker(s)")

    if workers <= 1:
        yield from map(_run_task, tasks)
        return

    with ProcessPoolExecutor(max_workers=workers) as executor:
        yield from executor.map(_run_task, tasks)


def summarize(records: Sequence[ReplicationRecord]) -> list[MiseRecord]:
    """One MiseRecord per parameter tuple, failed replications counted apart."""
    summary = []
    for index, group in itertools.groupby(sorted(records, key=lambda r: r.tuple_index), key=lambda r: r.tuple_index):
        group = list(group)
        errors = [record.mise for record in group if not record.failed]
        failures = sum(record.failed for record in group)
        summary.append(MiseRecord(tuple_index=index, params=group[0].params, errors=errors, failures=failures))
    return summary


def run_experiment(
    spec: ExperimentSpec,
    workers: int = 1,
    on_record: Optional[Callable[[ReplicationRecord], None]] = None,
) -> list[MiseRecord]:
    """
    Run every replication of every sweep tuple and summarize by tuple.

    Args:
        spec: Experiment definition.
        workers: Worker processes.
        on_record: Called with each replication record as soon as it is available.

    Returns:
        One MiseRecord per sweep tuple, in sweep order.
    """
    records = []
    for record in iter_replications(spec, workers):
        if on_record is not None:
            on_record(record)
        records.append(record)

    summary = summarize(records)
    failed = sum(record.failures for record in summary)
    if failed:
        logger.warning(f"{failed} replication(s) failed")
    return summary
