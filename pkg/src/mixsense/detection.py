"""Peak detection and Monte Carlo error-probability estimation.

A trial transmits one uniformly drawn mixture, simulates the array snapshot,
recovers mixture weights, and detects the peak.  A trial counts as an error
when the detected index differs from the transmitted one or when the solver
could not certify a solution (infeasible programs included: an overconstrained
recovery is a failed detection, not an exception).
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .affinity import AffinityMatrix
from .config import RngStream, SystemConfig
from .channel import simulate_snapshot
from .errors import EmptyVector
from .mixtures import MixtureMatrix
from .recovery import SolveStatus, recover_op2


@dataclass(frozen=True)
class DetectionResult:
    """One-hot detection decision.

    ``correct`` is None when no ground truth was supplied.  ``degenerate``
    flags an all-tied weight vector (e.g. all zeros), where the lowest-index
    rule fires with no real evidence.
    """

    s_hat: np.ndarray
    detected_index: int
    correct: bool | None
    degenerate: bool


@dataclass(frozen=True)
class ErrorEstimate:
    """Error probability with a 95% confidence halfwidth.

    ``p_e`` is exactly errors/trials.  The halfwidth uses the normal
    approximation, replaced by the Wilson interval when fewer than 5 errors
    were observed.  ``infeasible_fraction`` counts trials whose recovery did
    not certify (infeasible or uncertified); ``mean_solver_iterations`` is a
    deterministic per-trial effort measure.
    """

    p_e: float
    trials: int
    ci_halfwidth: float
    errors: int
    infeasible_fraction: float
    mean_solver_iterations: float


def peak_detect(w_hat: np.ndarray, ground_truth: int | None = None) -> DetectionResult:
    """One-hot decision at the argmax of the weights; ties break low-index."""
    w_hat = np.asarray(w_hat, dtype=float)
    if w_hat.size == 0:
        raise EmptyVector("cannot peak-detect an empty weight vector")
    idx = int(np.argmax(w_hat))
    s_hat = np.zeros(w_hat.size)
    s_hat[idx] = 1.0
    return DetectionResult(
        s_hat=s_hat,
        detected_index=idx,
        correct=None if ground_truth is None else idx == ground_truth,
        degenerate=bool(np.all(w_hat == w_hat[0])),
    )


def _ci_halfwidth(errors: int, trials: int) -> float:
    z = 1.959963984540054  # two-sided 95% normal quantile
    p = errors / trials
    if errors >= 5:
        return float(z * np.sqrt(p * (1.0 - p) / trials))
    # Wilson interval behaves sanely at very low counts
    denom = 1.0 + z**2 / trials
    halfwidth = z * np.sqrt(p * (1.0 - p) / trials + z**2 / (4.0 * trials**2))
    return float(halfwidth / denom)


def _run_one_trial(cfg, affinity, mixtures, stream):
    gen = stream.generator()
    truth = int(gen.integers(mixtures.num_mixtures))
    obs = simulate_snapshot(cfg, affinity, mixtures, truth, gen)
    sol = recover_op2(obs, affinity, mixtures, cfg)
    det = peak_detect(sol.w_hat, ground_truth=truth)
    error = sol.status != SolveStatus.OPTIMAL or not det.correct
    failed = sol.status != SolveStatus.OPTIMAL
    return error, failed, sol.solver_iterations, truth, obs


def _trial_block(args):
    cfg, affinity, mixtures, rng, indices, want_trace = args
    out = []
    for t in indices:
        error, failed, iters, truth, obs = _run_one_trial(cfg, affinity, mixtures, rng.child(t))
        trace = None
        if want_trace:
            trace = (truth, obs.counts.received.tolist(), obs.y.tolist())
        out.append((t, error, failed, iters, trace))
    return out


def run_trials(
    cfg: SystemConfig,
    affinity: AffinityMatrix,
    mixtures: MixtureMatrix,
    num_trials: int,
    rng: RngStream,
    threads: int = 1,
    trace_path=None,
) -> ErrorEstimate:
    """Estimate the detection error probability over seeded independent trials.

    Trial t draws everything from ``rng.child(t)``, so the estimate is
    invariant to ``threads`` and to scheduling order.  ``trace_path``
    optionally records one CSV line per trial (trial id, transmitted mixture,
    received counts, array signal) for debugging and replay.
    """
    if num_trials < 1:
        raise ValueError(f"num_trials must be >= 1, got {num_trials}")
    want_trace = trace_path is not None

    indices = list(range(num_trials))
    if threads > 1:
        chunks = [indices[i::threads] for i in range(threads)]
        args = [(cfg, affinity, mixtures, rng, chunk, want_trace) for chunk in chunks if chunk]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = [row for block in pool.map(_trial_block, args) for row in block]
        results.sort(key=lambda row: row[0])
    else:
        results = _trial_block((cfg, affinity, mixtures, rng, indices, want_trace))

    errors = sum(1 for _, e, _, _, _ in results if e)
    failed = sum(1 for _, _, f, _, _ in results if f)
    mean_iters = float(np.mean([it for _, _, _, it, _ in results]))

    if want_trace:
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["trial_id", "mixture_index"]
                + [f"x{q}" for q in range(mixtures.num_molecules)]
                + [f"y{r}" for r in range(affinity.num_receptors)]
            )
            for t, _, _, _, trace in results:
                truth, x, y = trace
                writer.writerow([t, truth] + [repr(v) for v in x] + [repr(v) for v in y])

    return ErrorEstimate(
        p_e=errors / num_trials,
        trials=num_trials,
        ci_halfwidth=_ci_halfwidth(errors, num_trials),
        errors=errors,
        infeasible_fraction=failed / num_trials,
        mean_solver_iterations=mean_iters,
    )
