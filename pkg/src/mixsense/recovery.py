"""Convex recovery of molecule concentrations and mixture weights.

The receiver only sees the clipped array signal, so the recovery programs
split the receptors into the activated set (where the pre-activation signal is
observed up to noise) and the non-activated set (where it is only known to be
at most the threshold, statistically).  Two programs are exposed:

* the concentration program: minimize ||x||_1 subject to a quadratic
  reconstruction-error ball over the activated rows and per-row inequality
  constraints over the non-activated rows;
* the alphabet-aware program: minimize ||w||_1 over mixture weights w, with
  the same two constraint families plus per-molecule quadratic constraints
  tying the concentration estimate x to its alphabet-implied mean Mw, whose
  Poisson variance equals that same mean.

Both are second-order cone programs.  They are stored as explicit constraint
data (:class:`ConicProgram`) so that solutions can be re-certified by direct
substitution, independent of whatever solver produced them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp
import clarabel

from .affinity import AffinityMatrix
from .channel import ArrayObservation
from .config import SystemConfig
from .errors import NoFeasiblePoint, OutOfRange
from .mixtures import MixtureMatrix


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class BallConstraint:
    """||matrix @ z + offset||_2^2 <= bound."""

    matrix: np.ndarray
    offset: np.ndarray
    bound: float


@dataclass(frozen=True)
class ConicProgram:
    """Explicit data of one recovery program over z = [x; w].

    Constraint families (any may be empty):
      * one ball constraint (see :class:`BallConstraint`);
      * scalar affine inequalities  ineq_matrix @ z + ineq_offset <= 0;
      * rotated-quadratic rows  (quad_lhs @ z + quad_lhs_offset)^2
        <= quad_rhs @ z + quad_rhs_offset;
      * z >= 0 always.

    The objective is the l1 norm of the x block or the w block; since both
    blocks are constrained nonnegative this equals a plain sum.
    """

    num_x: int
    num_w: int
    objective_block: str
    ball: BallConstraint | None
    ineq_matrix: np.ndarray
    ineq_offset: np.ndarray
    quad_lhs: np.ndarray
    quad_lhs_offset: np.ndarray
    quad_rhs: np.ndarray
    quad_rhs_offset: np.ndarray

    @property
    def num_vars(self) -> int:
        return self.num_x + self.num_w


@dataclass(frozen=True)
class RecoverySolution:
    """Solver output plus the diagnostics needed to trust it.

    ``residuals`` holds per-family constraint violation magnitudes computed by
    direct substitution of the returned point; ``max_residual`` is their
    overall maximum.  ``solver_iterations`` is deterministic for a fixed
    program; ``solve_time_ms`` is wall-clock and informational only.
    """

    x_hat: np.ndarray
    w_hat: np.ndarray | None
    objective_value: float
    status: SolveStatus
    residuals: dict
    max_residual: float
    solver_iterations: int
    solve_time_ms: float


def _require_positive_noise(noise_mean: float) -> None:
    if noise_mean <= 0.0:
        raise OutOfRange(
            "recovery constraints degenerate at lambda = 0 (zero error budget); "
            "use a small positive noise mean, e.g. lambda = 1e-3, for noiseless studies"
        )


def build_op1(obs: ArrayObservation, affinity: AffinityMatrix, cfg: SystemConfig) -> ConicProgram:
    """Concentration recovery program: minimize ||x||_1.

    Activated rows contribute the reconstruction ball
        ||y_A - (A_A x + (lambda - x_thr) 1)||^2 <= |A| lambda eps,
    non-activated rows the per-row statistical bounds
        A_Ac x + (lambda - x_thr) 1 <= sqrt(lambda eps) 1.
    Either family is omitted when its receptor set is empty.
    """
    _require_positive_noise(cfg.noise_mean)
    lam = float(cfg.noise_mean)
    thr = float(cfg.activation_threshold)
    eps = float(cfg.recon_error_eps)
    num_x = affinity.num_molecules

    act = obs.activated
    non = obs.non_activated
    if len(act) + len(non) != affinity.num_receptors:
        raise OutOfRange("activated/non-activated sets must partition the receptors")

    ball = None
    if len(act):
        ball = BallConstraint(
            matrix=-affinity.entries[act],
            offset=obs.y[act] - (lam - thr),
            bound=len(act) * lam * eps,
        )
    if len(non):
        ineq_matrix = affinity.entries[non].copy()
        ineq_offset = np.full(len(non), lam - thr - np.sqrt(lam * eps))
    else:
        ineq_matrix = np.zeros((0, num_x))
        ineq_offset = np.zeros(0)

    return ConicProgram(
        num_x=num_x,
        num_w=0,
        objective_block="x",
        ball=ball,
        ineq_matrix=ineq_matrix,
        ineq_offset=ineq_offset,
        quad_lhs=np.zeros((0, num_x)),
        quad_lhs_offset=np.zeros(0),
        quad_rhs=np.zeros((0, num_x)),
        quad_rhs_offset=np.zeros(0),
    )


def build_op2(
    obs: ArrayObservation,
    affinity: AffinityMatrix,
    mixtures: MixtureMatrix,
    cfg: SystemConfig,
) -> ConicProgram:
    """Alphabet-aware recovery program: minimize ||w||_1 over (x, w).

    Extends the concentration program with one rotated-quadratic row per
    molecule type,  (x_q - [Mw]_q)^2 <= delta [Mw]_q,  keeping the estimated
    concentrations within a Poisson-scaled deviation of their alphabet mean.
    A zero mean [Mw]_q forces x_q = 0 exactly.
    """
    base = build_op1(obs, affinity, cfg)
    num_x = base.num_x
    num_w = mixtures.num_mixtures
    if mixtures.num_molecules != num_x:
        raise OutOfRange(
            f"mixture matrix has {mixtures.num_molecules} molecule types, affinity has {num_x}"
        )
    delta = float(cfg.deviation_delta)

    def widen(matrix: np.ndarray) -> np.ndarray:
        return np.hstack([matrix, np.zeros((matrix.shape[0], num_w))])

    ball = base.ball
    if ball is not None:
        ball = BallConstraint(matrix=widen(ball.matrix), offset=ball.offset, bound=ball.bound)

    quad_lhs = np.hstack([np.eye(num_x), -mixtures.entries])
    quad_rhs = np.hstack([np.zeros((num_x, num_x)), delta * mixtures.entries])

    return ConicProgram(
        num_x=num_x,
        num_w=num_w,
        objective_block="w",
        ball=ball,
        ineq_matrix=widen(base.ineq_matrix),
        ineq_offset=base.ineq_offset,
        quad_lhs=quad_lhs,
        quad_lhs_offset=np.zeros(num_x),
        quad_rhs=quad_rhs,
        quad_rhs_offset=np.zeros(num_x),
    )


def constraint_residuals(program: ConicProgram, x: np.ndarray, w: np.ndarray | None = None) -> dict:
    """Violation magnitudes of every constraint at (x, w), by direct substitution.

    Independent of the solver: uses only the stored program data.  All entries
    are nonnegative; zero means satisfied.
    """
    if program.num_w:
        if w is None:
            raise ValueError("program has a w block but no w was given")
        z = np.concatenate([np.asarray(x, dtype=float), np.asarray(w, dtype=float)])
    else:
        z = np.asarray(x, dtype=float)

    out: dict[str, np.ndarray] = {"nonneg": np.maximum(-z, 0.0)}
    if program.ball is not None:
        lhs = float(np.sum((program.ball.matrix @ z + program.ball.offset) ** 2))
        out["ball"] = np.array([max(lhs - program.ball.bound, 0.0)])
    else:
        out["ball"] = np.zeros(0)
    out["linear"] = np.maximum(program.ineq_matrix @ z + program.ineq_offset, 0.0)
    lhs = (program.quad_lhs @ z + program.quad_lhs_offset) ** 2
    rhs = program.quad_rhs @ z + program.quad_rhs_offset
    out["quad"] = np.maximum(lhs - rhs, 0.0)
    return out


def max_residual(residuals: dict) -> float:
    return max((float(v.max()) for v in residuals.values() if v.size), default=0.0)


def _polish(program: ConicProgram, z: np.ndarray, tau: float) -> np.ndarray:
    """Newton feasibility restoration for near-feasible iterates.

    Interior-point iterates land within ~1e-9 of the constraint surface in the
    solver's scaled geometry, which on large-signal problems can still be an
    absolute violation above tau.  Each round linearizes the violated
    constraints at z and applies the minimum-norm correction that zeroes them
    (with a small safety margin); violations this small are in the Newton
    convergence regime, so a few rounds reach machine-level feasibility.  The
    correction norm is of the order of the violation, hence the objective moves
    by a vanishing amount relative to the solver's gap certificate.
    """
    def worst(zc: np.ndarray) -> float:
        x = zc[: program.num_x]
        w = zc[program.num_x :] if program.num_w else None
        return max_residual(constraint_residuals(program, x, w))

    z = np.maximum(np.asarray(z, dtype=float).copy(), 0.0)
    margin = 1e-3 * tau
    degenerate = _degenerate_quad_rows(program)
    current = worst(z)
    for _ in range(12):
        if current <= 0.5 * tau:
            break
        rows = []
        rhs = []
        if program.ball is not None:
            u = program.ball.matrix @ z + program.ball.offset
            viol = float(u @ u) - program.ball.bound
            if viol > 0.0:
                rows.append(2.0 * (u @ program.ball.matrix))
                rhs.append(-viol - margin)
        lin = program.ineq_matrix @ z + program.ineq_offset
        for i in np.flatnonzero(lin > 0.0):
            rows.append(program.ineq_matrix[i])
            rhs.append(-lin[i] - margin)
        if program.quad_lhs.shape[0]:
            lhs_val = program.quad_lhs @ z + program.quad_lhs_offset
            rhs_val = program.quad_rhs @ z + program.quad_rhs_offset
            for i in np.flatnonzero(lhs_val**2 - rhs_val > 0.0):
                if degenerate[i]:
                    # zero right side means an equality: head straight to it
                    rows.append(program.quad_lhs[i])
                    rhs.append(-lhs_val[i])
                else:
                    rows.append(2.0 * lhs_val[i] * program.quad_lhs[i] - program.quad_rhs[i])
                    rhs.append(-(lhs_val[i] ** 2 - rhs_val[i]) - margin)
        if not rows:
            break
        dz, *_ = np.linalg.lstsq(np.vstack(rows), np.asarray(rhs), rcond=None)
        # backtrack: ill-conditioned active sets can make a full Newton step
        # overshoot, so only accept steps that reduce the worst violation
        improved = False
        step = 1.0
        for _ in range(8):
            cand = np.maximum(z + step * dz, 0.0)
            cand_worst = worst(cand)
            if cand_worst < current:
                z, current, improved = cand, cand_worst, True
                break
            step *= 0.5
        if not improved:
            break
    return z


def _degenerate_quad_rows(program: ConicProgram) -> np.ndarray:
    """Quadratic rows whose right side is identically zero.

    (f.z + g)^2 <= 0 is really the equality f.z + g = 0; representing it as a
    second-order cone leaves the cone without interior and stalls
    interior-point iterations, so these rows are lowered to equalities.
    """
    if program.quad_lhs.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return ~(program.quad_rhs.any(axis=1) | (program.quad_rhs_offset != 0.0))


def _assemble_cone_data(program: ConicProgram):
    """Lower the program to the solver's  A z + s = b,  s in K  form."""
    n = program.num_vars
    p = program.ineq_matrix.shape[0]
    degenerate = _degenerate_quad_rows(program)
    eq_rows = np.flatnonzero(degenerate)
    soc_rows = np.flatnonzero(~degenerate)
    k_ball = 0 if program.ball is None else program.ball.matrix.shape[0]

    rows = len(eq_rows) + n + p + (k_ball + 1 if program.ball is not None else 0) + 3 * len(soc_rows)
    A = np.zeros((rows, n))
    b = np.zeros(rows)
    cones = []
    r = 0

    if len(eq_rows):
        A[: len(eq_rows)] = program.quad_lhs[eq_rows]
        b[: len(eq_rows)] = -program.quad_lhs_offset[eq_rows]
        cones.append(clarabel.ZeroConeT(len(eq_rows)))
        r = len(eq_rows)

    # variable nonnegativity and scalar inequalities share one nonnegative cone
    A[r : r + n] = -np.eye(n)
    r += n
    if p:
        A[r : r + p] = program.ineq_matrix
        b[r : r + p] = -program.ineq_offset
        r += p
    cones.append(clarabel.NonnegativeConeT(n + p))

    if program.ball is not None:
        A[r + 1 : r + 1 + k_ball] = -program.ball.matrix
        b[r] = np.sqrt(program.ball.bound)
        b[r + 1 : r + 1 + k_ball] = program.ball.offset
        cones.append(clarabel.SecondOrderConeT(k_ball + 1))
        r += k_ball + 1

    # (f.z + g)^2 <= h.z + k  becomes the 3-row cone
    # ( (h.z+k+1)/2, f.z+g, (h.z+k-1)/2 )
    for i in soc_rows:
        A[r] = -program.quad_rhs[i] / 2.0
        b[r] = (program.quad_rhs_offset[i] + 1.0) / 2.0
        A[r + 1] = -program.quad_lhs[i]
        b[r + 1] = program.quad_lhs_offset[i]
        A[r + 2] = -program.quad_rhs[i] / 2.0
        b[r + 2] = (program.quad_rhs_offset[i] - 1.0) / 2.0
        cones.append(clarabel.SecondOrderConeT(3))
        r += 3

    q = np.zeros(n)
    if program.objective_block == "w":
        q[program.num_x :] = 1.0
    else:
        q[: program.num_x] = 1.0
    return q, A, b, cones


_INFEASIBLE_STATUSES = (
    clarabel.SolverStatus.PrimalInfeasible,
    clarabel.SolverStatus.AlmostPrimalInfeasible,
)

#: statuses whose termination criterion certifies the duality gap, given that
#: the reduced tolerances are set to the requested gap tolerance
_CERTIFIED_STATUSES = (clarabel.SolverStatus.Solved, clarabel.SolverStatus.AlmostSolved)


def solve(
    program: ConicProgram,
    tau_feas: float = 1e-6,
    tau_gap: float = 1e-6,
    max_iter: int = 100_000,
) -> RecoverySolution:
    """Solve the program with an interior-point method and certify the result.

    A returned OPTIMAL status means the solver's own termination criterion
    held at tolerances well inside (tau_feas, tau_gap) *and* direct
    substitution of the returned point violates no constraint by more than
    tau_feas.  Claimed-but-uncertified solves degrade to MAX_ITERATIONS with
    the best iterate attached; infeasibility certificates map to INFEASIBLE.
    """
    if tau_feas <= 0 or tau_gap <= 0:
        raise ValueError("tau_feas and tau_gap must be positive")

    def finish(x_raw, w_raw, status, iterations, time_ms):
        x_hat = np.maximum(x_raw, 0.0)
        w_hat = np.maximum(w_raw, 0.0) if w_raw is not None else None
        res = constraint_residuals(program, x_hat, w_hat)
        block = w_hat if program.objective_block == "w" else x_hat
        return RecoverySolution(
            x_hat=x_hat,
            w_hat=w_hat,
            objective_value=float(block.sum()),
            status=status,
            residuals=res,
            max_residual=max_residual(res),
            solver_iterations=iterations,
            solve_time_ms=time_ms,
        )

    zeros_w = np.zeros(program.num_w) if program.num_w else None
    if program.ball is not None and program.ball.bound < 0.0:
        # empty ball: trivial infeasibility, no solver call needed
        sol = finish(np.zeros(program.num_x), zeros_w, SolveStatus.INFEASIBLE, 0, 0.0)
        return replace(sol, objective_value=float("nan"))

    q, A, b, cones = _assemble_cone_data(program)
    n = program.num_vars
    P = sp.csc_matrix((n, n))
    A_csc = sp.csc_matrix(A)

    # Two-stage tolerance ladder: almost every program certifies at the first
    # (cheap) setting; borderline ones get one tighter, longer attempt before
    # being reported as uncertified.
    base_tol = min(tau_feas, tau_gap, 1e-7) * 1e-1
    attempts = ((base_tol, 200), (base_tol * 1e-2, 5000))

    best = last = None
    for tol, iter_cap in attempts:
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.max_iter = int(min(max_iter, iter_cap))
        settings.tol_feas = tol
        settings.tol_gap_abs = tol
        settings.tol_gap_rel = tol
        # a stalled run that still meets these reduced tolerances certifies the
        # gap at exactly the contract level
        settings.reduced_tol_feas = min(1e-7, tau_feas)
        settings.reduced_tol_gap_abs = tau_gap
        settings.reduced_tol_gap_rel = tau_gap
        solver = clarabel.DefaultSolver(P, q, A_csc, b, cones, settings)
        raw = solver.solve()

        z = np.asarray(raw.x, dtype=float)
        x_raw = z[: program.num_x]
        w_raw = z[program.num_x :] if program.num_w else None
        time_ms = float(raw.solve_time) * 1e3
        iters = int(raw.iterations)

        if raw.status in _INFEASIBLE_STATUSES:
            sol = finish(np.zeros(program.num_x), zeros_w, SolveStatus.INFEASIBLE, iters, time_ms)
            return replace(sol, objective_value=float("nan"))
        if raw.status in _CERTIFIED_STATUSES:
            z_pol = _polish(program, z, tau_feas)
            x_pol = z_pol[: program.num_x]
            w_pol = z_pol[program.num_x :] if program.num_w else None
            sol = finish(x_pol, w_pol, SolveStatus.OPTIMAL, iters, time_ms)
            if sol.max_residual <= tau_feas:
                return sol
            sol = replace(sol, status=SolveStatus.MAX_ITERATIONS)
        else:
            # MaxIterations, MaxTime, NumericalError, InsufficientProgress, ...
            sol = finish(x_raw, w_raw, SolveStatus.MAX_ITERATIONS, iters, time_ms)
        last = sol
        if np.isfinite(sol.max_residual) and (best is None or sol.max_residual < best.max_residual):
            best = sol
    return best if best is not None else last


def recover_op2(
    obs: ArrayObservation,
    affinity: AffinityMatrix,
    mixtures: MixtureMatrix,
    cfg: SystemConfig,
    tau_feas: float = 1e-6,
    tau_gap: float = 1e-6,
    max_iter: int = 100_000,
) -> RecoverySolution:
    """Build and solve the alphabet-aware program for one observation."""
    program = build_op2(obs, affinity, mixtures, cfg)
    return solve(program, tau_feas=tau_feas, tau_gap=tau_gap, max_iter=max_iter)


def op0_oracle(
    obs: ArrayObservation,
    affinity: AffinityMatrix,
    cfg: SystemConfig,
    grid_step: float,
    max_support: int,
    x_max: float | None = None,
) -> np.ndarray:
    """Exhaustive sparsest-concentration search, for tiny problems only.

    Enumerates supports by increasing cardinality (up to ``max_support``) and
    concentration values on a regular grid, returning the first cardinality
    level that contains a feasible point; ties inside a level break toward the
    smaller l1 norm.  The expected array signal for a candidate x is evaluated
    through the activation nonlinearity with the noise fixed at its mean, and
    the error budget is eps times the summed linearized signal variance
    (lambda per receptor).
    """
    num_x = affinity.num_molecules
    if num_x > 6:
        raise ValueError(f"exhaustive oracle is limited to Q <= 6, got Q={num_x}")
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    if not 0 <= max_support <= num_x:
        raise ValueError(f"max_support must lie in [0, {num_x}]")

    lam = float(cfg.noise_mean)
    thr = float(cfg.activation_threshold)
    budget = cfg.recon_error_eps * affinity.num_receptors * lam

    if x_max is None:
        x_max = 1.5 * (float(obs.y.max()) + thr) + grid_step
    values = np.arange(grid_step, x_max + 1e-12, grid_step)

    def feasible(xs: np.ndarray) -> np.ndarray:
        expected = np.maximum(xs @ affinity.entries.T + (lam - thr), 0.0)
        return np.sum((obs.y - expected) ** 2, axis=1) <= budget

    for cardinality in range(max_support + 1):
        best = None
        if cardinality == 0:
            if feasible(np.zeros((1, num_x)))[0]:
                return np.zeros(num_x)
            continue
        combos = np.array(
            np.meshgrid(*([values] * cardinality), indexing="ij")
        ).reshape(cardinality, -1).T
        for support in itertools.combinations(range(num_x), cardinality):
            xs = np.zeros((combos.shape[0], num_x))
            xs[:, support] = combos
            ok = feasible(xs)
            if np.any(ok):
                candidates = xs[ok]
                idx = int(np.argmin(candidates.sum(axis=1)))
                if best is None or candidates[idx].sum() < best.sum():
                    best = candidates[idx]
        if best is not None:
            return best
    raise NoFeasiblePoint(
        f"no x with support <= {max_support} on the grid satisfies the error budget"
    )


def dump_program(program: ConicProgram) -> str:
    """Render the program as self-describing text for external cross-checking."""

    def fmt(vec) -> str:
        return " ".join(f"{v:.12g}" for v in np.atleast_1d(vec))

    lines = [
        f"variables x {program.num_x} w {program.num_w} nonneg",
        f"objective l1 {program.objective_block}",
    ]
    if program.ball is not None:
        lines.append(f"ball rows {program.ball.matrix.shape[0]} bound {program.ball.bound:.12g}")
        for row, off in zip(program.ball.matrix, program.ball.offset):
            lines.append(f"  {fmt(row)} | {off:.12g}")
    else:
        lines.append("ball none")
    lines.append(f"linear rows {program.ineq_matrix.shape[0]}")
    for row, off in zip(program.ineq_matrix, program.ineq_offset):
        lines.append(f"  {fmt(row)} | {off:.12g}")
    lines.append(f"quad rows {program.quad_lhs.shape[0]}")
    for i in range(program.quad_lhs.shape[0]):
        lines.append(
            f"  {fmt(program.quad_lhs[i])} | {program.quad_lhs_offset[i]:.12g}"
            f" <= {fmt(program.quad_rhs[i])} | {program.quad_rhs_offset[i]:.12g}"
        )
    return "\n".join(lines) + "\n"
