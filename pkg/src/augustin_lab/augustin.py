"""Fixed-point computation of weighted divergence minimizers.

The central object is the operator

    T_F(U) = (sum_j w_j A_j^alpha / Tr[A_j^alpha U])^((1-alpha)/alpha),

which is a Thompson-metric contraction with ratio |1 - 1/alpha| for orders in
(1/2, 1) or (1, inf).  Iterating Q_{t+1} = T_F(Q_t^(1-alpha))^(1/(1-alpha))
drives Q_t to the minimizer of the weighted divergence objective; each sweep
costs one eigendecomposition plus n trace pairings.

The module also provides the commuting (vector) specialization, the dual-space
iteration it coincides with, the multiplicative-update baseline, and entropic
mirror descent with an adaptive step size as a reference method for orders
without a contraction guarantee.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .divergences import (
    INF,
    AugustinProblem,
    ClassicalAugustinProblem,
    classical_pairings,
    divergence_from_pairing,
    objective_f,
    pairing_traces,
)
from .errors import (
    DegenerateTrace,
    DegenerateTraceWarning,
    InvalidInput,
    SingularMatrix,
    Unsupported,
)
from .linalg import (
    EIG_FLOOR,
    hermitian_eig,
    hermitize,
    matrix_power,
    thompson_metric_psd,
    thompson_metric_vec,
)
from .trace import IterationTrace, TraceRow

STOP_MAX_ITER = "MaxIter"
STOP_RESIDUAL = "FixedPointResidual"
STOP_NON_FINITE = "NonFinite"

DEFAULT_MAX_ITER = 200
DEFAULT_RESIDUAL_TOL = 1e-10


def contraction_factor(alpha: float) -> float:
    """The per-sweep Thompson contraction ratio |1 - 1/alpha|."""
    return abs(1.0 - 1.0 / alpha)


# ---------------------------------------------------------------------------
# operator application
# ---------------------------------------------------------------------------


def _combination(problem: AugustinProblem, pairings: np.ndarray) -> np.ndarray:
    if np.any(pairings <= EIG_FLOOR):
        raise DegenerateTrace(
            f"trace pairing collapsed (min {pairings.min():.3e}); operator undefined"
        )
    coeff = problem.weights / pairings
    return np.tensordot(coeff, problem.state_powers, axes=1)


def _state_pairings(problem: AugustinProblem, u: np.ndarray) -> np.ndarray:
    # Re Tr[A_j^alpha U] for every j; U Hermitian.
    return np.real(np.einsum("nij,ji->n", problem.state_powers, u))


def apply_T_F(problem: AugustinProblem, u: np.ndarray) -> np.ndarray:
    """Apply the contraction operator to a positive definite matrix U."""
    u = hermitize(u)
    s = _combination(problem, _state_pairings(problem, u))
    alpha = problem.order
    return matrix_power(s, (1.0 - alpha) / alpha)


def apply_T_f(problem: ClassicalAugustinProblem, u: np.ndarray) -> np.ndarray:
    """Coordinatewise analogue of :func:`apply_T_F` on positive vectors."""
    u = np.asarray(u, dtype=float)
    if not np.all(u > 0):
        raise InvalidInput("operator argument must be strictly positive")
    pair = problem.point_powers @ u
    if np.any(pair <= EIG_FLOOR):
        raise DegenerateTrace(
            f"pairing collapsed (min {pair.min():.3e}); operator undefined"
        )
    s = (problem.weights / pair) @ problem.point_powers
    alpha = problem.order
    return s ** ((1.0 - alpha) / alpha)


# ---------------------------------------------------------------------------
# iterate states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IterateState:
    """One iterate of the fixed-point sweep.

    ``matrix`` is the raw (possibly non-unit-trace) iterate Q_t, ``power``
    its cached (1-alpha) power, ``pairings`` the vector Tr[A_j^alpha
    Q_t^(1-alpha)], and ``f_value`` the objective at the trace-normalized
    iterate.
    """

    step: int
    matrix: np.ndarray
    power: np.ndarray
    pairings: np.ndarray
    trace: float
    f_value: float

    @property
    def normalized(self) -> np.ndarray:
        return self.matrix / self.trace


def _f_from_pairings(weights: np.ndarray, pairings: np.ndarray, alpha: float, trace: float) -> float:
    # F(Q/trace) = sum_j w_j log(pairing_j) / (alpha-1) + log(trace)
    total = 0.0
    for wj, pj in zip(weights, pairings):
        d = divergence_from_pairing(float(pj), alpha)
        if d == INF:
            return INF
        total += wj * d
    return total + math.log(trace)


def initial_state(problem: AugustinProblem, q1: np.ndarray) -> IterateState:
    """Wrap a positive definite starting matrix as a step-0 iterate."""
    alpha = problem.order
    q1 = hermitize(q1)
    spec = hermitian_eig(q1)
    power = matrix_power(q1, 1.0 - alpha, spectrum=spec)
    pair = _state_pairings(problem, power)
    tr = float(np.trace(q1).real)
    return IterateState(
        step=0,
        matrix=q1,
        power=power,
        pairings=pair,
        trace=tr,
        f_value=_f_from_pairings(problem.weights, pair, alpha, tr),
    )


def _renormalized(state: IterateState, alpha: float) -> IterateState:
    """Rescale the iterate to unit trace; the normalized sequence is unchanged."""
    if state.trace == 1.0:
        return state
    g = state.trace ** (alpha - 1.0)
    return IterateState(
        step=state.step,
        matrix=state.matrix / state.trace,
        power=state.power * g,
        pairings=state.pairings * g,
        trace=1.0,
        f_value=state.f_value,
    )


def petz_augustin_step(problem: AugustinProblem, state: IterateState) -> IterateState:
    """One fixed-point sweep Q -> T_F(Q^(1-alpha))^(1/(1-alpha)).

    Costs one eigendecomposition plus n trace pairings; the new iterate's
    (1-alpha) power and pairings are produced as by-products.
    """
    alpha = problem.order
    s = _combination(problem, state.pairings)
    spec = hermitian_eig(s)
    lam = spec.eigenvalues
    floor = EIG_FLOOR * max(float(lam.max()), 0.0)
    if lam.min() <= floor:
        raise SingularMatrix(
            f"update combination is numerically singular (min eigenvalue {lam.min():.3e})"
        )
    # T_F output is s^((1-alpha)/alpha); the iterate is its 1/(1-alpha) power.
    q_vals = lam ** (1.0 / alpha)
    q_new = spec.apply(q_vals)
    p_new = spec.apply(lam ** ((1.0 - alpha) / alpha))
    pair = _state_pairings(problem, p_new)
    tr = float(q_vals.sum())
    return IterateState(
        step=state.step + 1,
        matrix=q_new,
        power=p_new,
        pairings=pair,
        trace=tr,
        f_value=_f_from_pairings(problem.weights, pair, alpha, tr),
    )


@dataclass(frozen=True)
class ClassicalIterateState:
    """Vector analogue of :class:`IterateState`."""

    step: int
    vector: np.ndarray
    power: np.ndarray
    pairings: np.ndarray
    total: float
    f_value: float

    @property
    def normalized(self) -> np.ndarray:
        return self.vector / self.total


def initial_classical_state(problem: ClassicalAugustinProblem, q1: np.ndarray) -> ClassicalIterateState:
    alpha = problem.order
    q1 = np.asarray(q1, dtype=float)
    if not np.all(q1 > 0):
        raise InvalidInput("starting vector must be strictly positive")
    power = q1 ** (1.0 - alpha)
    pair = problem.point_powers @ power
    total = float(q1.sum())
    return ClassicalIterateState(
        step=0,
        vector=q1,
        power=power,
        pairings=pair,
        total=total,
        f_value=_f_from_pairings(problem.weights, pair, alpha, total),
    )


def _renormalized_classical(state: ClassicalIterateState, alpha: float) -> ClassicalIterateState:
    if state.total == 1.0:
        return state
    g = state.total ** (alpha - 1.0)
    return ClassicalIterateState(
        step=state.step,
        vector=state.vector / state.total,
        power=state.power * g,
        pairings=state.pairings * g,
        total=1.0,
        f_value=state.f_value,
    )


def classical_augustin_step(
    problem: ClassicalAugustinProblem, state: ClassicalIterateState
) -> ClassicalIterateState:
    """One fixed-point sweep of the commuting specialization."""
    alpha = problem.order
    pair = state.pairings
    if np.any(pair <= EIG_FLOOR):
        raise DegenerateTrace(
            f"pairing collapsed (min {pair.min():.3e}); update undefined"
        )
    s = (problem.weights / pair) @ problem.point_powers
    q_new = s ** (1.0 / alpha)
    p_new = s ** ((1.0 - alpha) / alpha)
    pair_new = problem.point_powers @ p_new
    total = float(q_new.sum())
    return ClassicalIterateState(
        step=state.step + 1,
        vector=q_new,
        power=p_new,
        pairings=pair_new,
        total=total,
        f_value=_f_from_pairings(problem.weights, pair_new, alpha, total),
    )


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


@dataclass
class SolveReport:
    """Outcome of a fixed-point run: trace, final normalized iterate, status."""

    iterates: IterationTrace
    final: np.ndarray
    converged: bool
    stop_reason: str
    guaranteed: bool
    raw_iterates: list | None = None
    degenerate_evals: int = 0


def _solve_loop(
    *,
    state,
    advance,
    renormalize,
    residual_metric,
    normalized_of,
    reference_distance,
    max_iter: int,
    residual_tol: float,
    guaranteed: bool,
    keep_iterates: bool,
):
    rows = IterationTrace()
    raw = [state] if keep_iterates else None
    degenerate = 0
    rows.append(
        TraceRow(
            step=0,
            f_value=state.f_value,
            trace=_scale_of(state),
            residual_thompson=None,
            dist_to_reference=reference_distance(state),
            wall_time_ms=0.0,
        )
    )
    converged = False
    reason = STOP_MAX_ITER
    for _ in range(max_iter):
        carried = renormalize(state) if not guaranteed else state
        began = perf_counter()
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DegenerateTraceWarning)
                new = advance(carried)
                residual = residual_metric(new, carried)
            degenerate += sum(
                1 for c in caught if issubclass(c.category, DegenerateTraceWarning)
            )
        except (SingularMatrix, DegenerateTrace, InvalidInput, FloatingPointError):
            reason = STOP_NON_FINITE
            break
        if not (
            math.isfinite(residual)
            and math.isfinite(new.f_value)
            and math.isfinite(_scale_of(new))
            and _scale_of(new) > 0
        ):
            reason = STOP_NON_FINITE
            break
        state = new
        rows.append(
            TraceRow(
                step=state.step,
                f_value=state.f_value,
                trace=_scale_of(state),
                residual_thompson=residual,
                dist_to_reference=reference_distance(state),
                wall_time_ms=(perf_counter() - began) * 1e3,
            )
        )
        if keep_iterates:
            raw.append(state)
        if residual <= residual_tol:
            converged = True
            reason = STOP_RESIDUAL
            break
    return SolveReport(
        iterates=rows,
        final=normalized_of(state),
        converged=converged,
        stop_reason=reason,
        guaranteed=guaranteed,
        raw_iterates=raw,
        degenerate_evals=degenerate,
    )


def _scale_of(state) -> float:
    return state.trace if hasattr(state, "trace") else state.total


def solve_petz_augustin(
    problem: AugustinProblem,
    q1: np.ndarray | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    *,
    reference: np.ndarray | None = None,
    keep_iterates: bool = False,
) -> SolveReport:
    """Run the fixed-point sweep from a full-rank start until the Thompson
    residual between consecutive trace-normalized powered iterates drops below
    ``residual_tol`` or ``max_iter`` sweeps have been applied.

    For orders at or below 1/2 there is no contraction guarantee; the run is
    labeled accordingly, the carried iterate is re-normalized every sweep to
    postpone overflow, and non-finite values stop the run early with the
    partial trace preserved.
    """
    if max_iter < 1:
        raise InvalidInput("max_iter must be >= 1")
    alpha = problem.order
    if q1 is None:
        q1 = np.eye(problem.dim, dtype=complex) / problem.dim
    guaranteed = alpha > 0.5
    ref_power = None
    if reference is not None:
        ref_power = matrix_power(hermitize(reference), 1.0 - alpha)

    def reference_distance(state: IterateState):
        if ref_power is None:
            return None
        norm_power = state.power * state.trace ** (alpha - 1.0)
        return thompson_metric_psd(ref_power, norm_power)

    def residual(new: IterateState, old: IterateState) -> float:
        # residual between consecutive trace-normalized powered iterates
        return thompson_metric_psd(
            new.power * new.trace ** (alpha - 1.0),
            old.power * old.trace ** (alpha - 1.0),
        )

    return _solve_loop(
        state=initial_state(problem, q1),
        advance=lambda s: petz_augustin_step(problem, s),
        renormalize=lambda s: _renormalized(s, alpha),
        residual_metric=residual,
        normalized_of=lambda s: s.normalized,
        reference_distance=reference_distance,
        max_iter=max_iter,
        residual_tol=residual_tol,
        guaranteed=guaranteed,
        keep_iterates=keep_iterates,
    )


def solve_classical_augustin(
    problem: ClassicalAugustinProblem,
    q1: np.ndarray | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    *,
    reference: np.ndarray | None = None,
    keep_iterates: bool = False,
) -> SolveReport:
    """Vector analogue of :func:`solve_petz_augustin`."""
    if max_iter < 1:
        raise InvalidInput("max_iter must be >= 1")
    alpha = problem.order
    if q1 is None:
        q1 = np.full(problem.dim, 1.0 / problem.dim)
    guaranteed = alpha > 0.5
    ref_power = None
    if reference is not None:
        ref_power = np.asarray(reference, dtype=float) ** (1.0 - alpha)

    def reference_distance(state: ClassicalIterateState):
        if ref_power is None:
            return None
        return thompson_metric_vec(ref_power, state.power * state.total ** (alpha - 1.0))

    def residual(new: ClassicalIterateState, old: ClassicalIterateState) -> float:
        return thompson_metric_vec(
            new.power * new.total ** (alpha - 1.0),
            old.power * old.total ** (alpha - 1.0),
        )

    return _solve_loop(
        state=initial_classical_state(problem, q1),
        advance=lambda s: classical_augustin_step(problem, s),
        renormalize=lambda s: _renormalized_classical(s, alpha),
        residual_metric=residual,
        normalized_of=lambda s: s.normalized,
        reference_distance=reference_distance,
        max_iter=max_iter,
        residual_tol=residual_tol,
        guaranteed=guaranteed,
        keep_iterates=keep_iterates,
    )


# ---------------------------------------------------------------------------
# dual-space iteration (equivalence baseline)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualState:
    """Dual iterate v together with its primal image mu(v)."""

    v: np.ndarray
    mu: np.ndarray


def make_dual_state(problem: AugustinProblem, v: np.ndarray) -> DualState:
    """Assemble mu(v) = (sum_j w_j exp((1-alpha) v_j) A_j^alpha)^(1/alpha)."""
    alpha = problem.order
    v = np.asarray(v, dtype=float)
    if v.shape != (problem.n,):
        raise InvalidInput(f"expected {problem.n} dual coordinates, got {v.shape}")
    coeff = problem.weights * np.exp((1.0 - alpha) * v)
    s = np.tensordot(coeff, problem.state_powers, axes=1)
    return DualState(v=v, mu=matrix_power(s, 1.0 / alpha))


def cheng_dual_step(problem: AugustinProblem, state: DualState) -> DualState:
    """Dual update v_j <- divergence of A_j from mu(v)."""
    alpha = problem.order
    pair = pairing_traces(problem.state_powers, alpha, state.mu)
    v_new = np.array([divergence_from_pairing(float(p), alpha) for p in pair])
    if not np.all(np.isfinite(v_new)):
        raise DegenerateTrace("dual update produced non-finite divergences")
    return make_dual_state(problem, v_new)


def dual_objective_H(problem: AugustinProblem, v: np.ndarray) -> float:
    """Concave dual objective whose maximizer reproduces the minimizer."""
    alpha = problem.order
    state = make_dual_state(problem, v)
    mu_trace = float(np.trace(state.mu).real)
    return float(
        (1.0 - alpha) / alpha * np.dot(problem.weights, state.v) - math.log(mu_trace)
    )


# ---------------------------------------------------------------------------
# classical baselines
# ---------------------------------------------------------------------------


def classical_gradient(problem: ClassicalAugustinProblem, q: np.ndarray) -> np.ndarray:
    """Gradient of the classical objective at a strictly positive point."""
    q = np.asarray(q, dtype=float)
    if not np.all(q > 0):
        raise InvalidInput("gradient requires a strictly positive point")
    pair = classical_pairings(problem, q)
    neg = ((problem.weights / pair) @ problem.point_powers) * q ** (-problem.order)
    return -neg


def augustin_classical_baseline_step(
    problem: ClassicalAugustinProblem, q: np.ndarray
) -> np.ndarray:
    """Multiplicative baseline update q <- q * (-grad f(q)).

    Preserves normalization exactly: the weighted pairing structure makes the
    coordinates of the update sum to one.
    """
    q = np.asarray(q, dtype=float)
    if not np.all(q > 0):
        raise InvalidInput("baseline update requires a strictly positive point")
    return q * (-classical_gradient(problem, q))


def emd_polyak_step(problem, q, f_best: float):
    """Entropic mirror-descent step with an adaptive (target-gap) step size.

    The step size is (f(q) - f_best) / ||g~||_inf^2 where g~ is the gradient
    reduced by its q-weighted mean; the reduction leaves the multiplicative
    update invariant and vanishes at the minimizer, which keeps the step size
    from collapsing near the solution.  Quantum problems are accepted when the
    states commute, by updating in their joint eigenbasis.
    """
    if isinstance(problem, AugustinProblem):
        basis, classical = commuting_reduction(problem)
        q_vec = _diagonalize_in(basis, q)
        out = emd_polyak_step(classical, q_vec, f_best)
        return hermitize((basis * out) @ basis.conj().T)
    q = np.asarray(q, dtype=float)
    f_value = objective_f(problem, q)
    g = classical_gradient(problem, q)
    if not np.all(np.isfinite(g)):
        raise InvalidInput("gradient is non-finite at the given point")
    reduced = g - np.dot(q, g)
    norm = float(np.abs(reduced).max())
    gap = f_value - f_best
    # Both the gap and the reduced gradient vanish at the minimizer; treat
    # float-noise remnants as zero so the step size cannot blow up there.
    if norm <= 1e-12 * float(np.abs(g).max()) or gap <= 1e-12 * (1.0 + abs(f_value)):
        return q.copy()
    eta = gap / norm**2
    scaled = np.exp(-eta * (g - g.min()))
    out = q * scaled
    return out / out.sum()


@dataclass
class PolyakRun:
    best_value: float
    best_point: np.ndarray
    values: list[float]


def emd_polyak_run(problem, steps: int, f_best: float, q1=None) -> PolyakRun:
    """Iterate :func:`emd_polyak_step`, tracking the best objective value."""
    classical = isinstance(problem, ClassicalAugustinProblem)
    if q1 is None:
        d = problem.dim
        q1 = np.full(d, 1.0 / d) if classical else np.eye(d, dtype=complex) / d
    evaluate = objective_f if classical else _objective_commuting
    q = q1
    best_value = INF
    best_point = q1
    values = []
    for _ in range(steps):
        value = evaluate(problem, q)
        values.append(value)
        if value < best_value:
            best_value = value
            best_point = np.array(q, copy=True)
        q = emd_polyak_step(problem, q, f_best)
    return PolyakRun(best_value=best_value, best_point=best_point, values=values)


def _objective_commuting(problem: AugustinProblem, q: np.ndarray) -> float:
    from .divergences import objective_F

    return objective_F(problem, q)


def commuting_reduction(problem: AugustinProblem):
    """Joint eigenbasis and classical reduction of a commuting problem.

    Diagonalizes a generic weighted combination of the states and verifies the
    whole family is diagonal in that basis; raises :class:`Unsupported` for
    genuinely non-commuting inputs.
    """
    # Generic coefficients break eigenvalue ties of the plain sum.
    coeff = problem.weights * np.linspace(1.0, 2.0, problem.n)
    spec = hermitian_eig(np.tensordot(coeff, problem.states, axes=1))
    basis = spec.eigenvectors
    rotated = np.einsum("ij,njk,kl->nil", basis.conj().T, problem.states, basis)
    diags = np.real(np.einsum("nii->ni", rotated))
    off = rotated - np.einsum("ni,ij->nij", diags, np.eye(problem.dim))
    if np.abs(off).max() > 1e-10:
        raise Unsupported("states do not commute; no joint eigenbasis")
    rows = np.clip(diags, 0.0, None)
    rows = rows / rows.sum(axis=1, keepdims=True)
    classical = ClassicalAugustinProblem.create(rows, problem.weights, problem.order)
    return basis, classical


def _diagonalize_in(basis: np.ndarray, q: np.ndarray) -> np.ndarray:
    rotated = basis.conj().T @ hermitize(q) @ basis
    diag = np.real(np.diag(rotated))
    off = np.abs(rotated - np.diag(diag)).max()
    if off > 1e-10 * max(1.0, np.abs(diag).max()):
        raise Unsupported("iterate does not commute with the problem states")
    if np.any(diag <= 0):
        raise InvalidInput("iterate must be positive definite")
    return diag
