"""KL-regularized navigation MDP solver.

Minimizes the expected total cost of walking to an absorbing target, where
each step from node u pays gamma * trans_cost(u) plus the KL divergence
(in nats) of the chosen transition row from the unbiased random walk row.
The optimal cost-to-go L satisfies

    L(u) = gamma * trans_cost(u) - log sum_v P0(v|u) exp(-L(v)),  L(t) = 0,

equivalently e = T P0 e in the exponentiated variable e = exp(-L) with
T = diag(exp(-gamma * trans_cost)). The fixed point is computed by
iterating the log-domain recursion with logsumexp, which is immune to the
underflow of exp(-gamma * hops) at large gamma; the two forms are
algebraically identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .baselines import Policy, urw_kernel
from .graph import Graph

DEFAULT_TOL = 1e-12
# Largest loss whose exponential stays a normal double; beyond it the
# linear-domain residual is not representable.
_LINEAR_DOMAIN_LIMIT = 700.0


class ConvergenceError(RuntimeError):
    """Fixed-point iteration did not reach the requested tolerance."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(residual {residual:.3e}); raise max_iter"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class NavigationProblem:
    """A single-target navigation instance.

    ``trans_cost`` is the per-step transition cost vector (zero at the
    target); ``gamma`` trades transition cost against information cost and
    is interpreted in nats.
    """

    graph: Graph
    target: int
    gamma: float
    trans_cost: np.ndarray

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        c = np.asarray(self.trans_cost, dtype=np.float64)
        if c.shape != (self.graph.n,):
            raise ValueError("trans_cost must have one entry per node")
        if np.any(c < 0):
            raise ValueError("trans_cost must be nonnegative")
        if c[self.target] != 0.0:
            raise ValueError("trans_cost at the target must be zero")
        object.__setattr__(self, "trans_cost", c)

    @classmethod
    def create(
        cls,
        graph: Graph,
        target: str | int,
        gamma: float,
        trans_cost: np.ndarray | None = None,
    ) -> "NavigationProblem":
        t = graph.index_of(target)
        if trans_cost is None:
            trans_cost = np.ones(graph.n)
            trans_cost[t] = 0.0
        return cls(graph=graph, target=t, gamma=float(gamma), trans_cost=trans_cost)


@dataclass(frozen=True, eq=False)
class DesirabilitySolution:
    """Converged fixed point of the navigation recursion.

    ``loss`` is the optimal expected total cost-to-go (nats),
    ``desirability`` its exponential exp(-loss) (may underflow to zero at
    very large gamma; the loss vector is always exact), and
    ``log_row_normalizer`` is log Z(u) = log sum_v P0(v|u) exp(-loss(v)).
    ``residual`` is the final sup-norm loss update; ``linear_residual`` is
    the relative residual of e = T P0 e, or None where exp(-loss)
    underflows.
    """

    loss: np.ndarray
    desirability: np.ndarray
    log_row_normalizer: np.ndarray
    residual: float
    linear_residual: float | None
    iterations: int


def build_operator(p: NavigationProblem, p0: Policy | None = None) -> sp.csr_array:
    """The linear operator T P0 whose fixed point is the desirability.

    T scales row u of the absorbing-walk kernel P0 by
    exp(-gamma * trans_cost(u)); the target row is unscaled.
    """
    if p0 is None:
        p0 = urw_kernel(p.graph, p.target)
    shrink = np.exp(-p.gamma * p.trans_cost)
    return sp.csr_array(sp.diags_array(shrink) @ p0.kernel)


def _row_logsumexp(values: np.ndarray, indptr: np.ndarray, row_of: np.ndarray) -> np.ndarray:
    """logsumexp of ``values`` segmented by CSR row; rows must be nonempty."""
    row_max = np.maximum.reduceat(values, indptr[:-1])
    shifted = np.exp(values - row_max[row_of])
    return row_max + np.log(np.add.reduceat(shifted, indptr[:-1]))


def solve_desirability(
    p: NavigationProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    initial_loss: np.ndarray | None = None,
    p0: Policy | None = None,
) -> DesirabilitySolution:
    """Solve the navigation fixed point in the log domain.

    Iterates L(u) <- gamma * trans_cost(u) - logsumexp_v [log P0(v|u) - L(v)]
    with L(target) pinned to 0, from L = 0 (or ``initial_loss``, e.g. the
    solution at a smaller gamma) until the sup-norm update drops below
    ``tol``. Raises ConvergenceError after ``max_iter`` sweeps (default
    10 * n * (1 + gamma)).

    Parameters
    ----------
    p : NavigationProblem
    tol : float
        Convergence threshold on max |loss update|.
    max_iter : int, optional
    initial_loss : ndarray, optional
        Warm start; must be a pointwise lower bound of the solution to
        preserve monotone convergence (any smaller gamma's loss is).
    p0 : Policy, optional
        Precomputed unbiased kernel for ``p.graph`` and ``p.target``.
    """
    if max_iter is None:
        max_iter = math.ceil(10 * p.graph.n * (1.0 + p.gamma))
    if p0 is None:
        p0 = urw_kernel(p.graph, p.target)
    kernel = p0.kernel
    indptr = kernel.indptr
    cols = kernel.indices
    log_p0 = np.log(kernel.data)
    row_of = np.repeat(np.arange(p.graph.n), np.diff(indptr))
    base = p.gamma * p.trans_cost
    t = p.target

    loss = np.zeros(p.graph.n) if initial_loss is None else np.array(initial_loss, dtype=np.float64)
    loss[t] = 0.0
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        log_z = _row_logsumexp(log_p0 - loss[cols], indptr, row_of)
        new_loss = base - log_z
        new_loss[t] = 0.0
        residual = float(np.max(np.abs(new_loss - loss)))
        loss = new_loss
        if residual < tol:
            break
    else:
        raise ConvergenceError(residual, max_iter)

    log_z = _row_logsumexp(log_p0 - loss[cols], indptr, row_of)
    desirability = np.exp(-loss)
    linear_residual = None
    if loss.max() < _LINEAR_DOMAIN_LIMIT:
        operator = build_operator(p, p0)
        diff = desirability - operator @ desirability
        linear_residual = float(np.max(np.abs(diff)) / np.max(desirability))
    return DesirabilitySolution(
        loss=loss,
        desirability=desirability,
        log_row_normalizer=log_z,
        residual=residual,
        linear_residual=linear_residual,
        iterations=iterations,
    )


def optimal_policy(sol: DesirabilitySolution, p0: Policy) -> Policy:
    """Optimal transition kernel P*(v|u) = P0(v|u) exp(-L(v)) / Z(u).

    Row normalization happens in the log domain (softmax), so the result
    is well defined at any gamma. The support never exceeds the support
    of P0, and target rows stay absorbing.
    """
    kernel = p0.kernel
    indptr = kernel.indptr
    row_of = np.repeat(np.arange(p0.n), np.diff(indptr))
    z = np.log(kernel.data) - sol.loss[kernel.indices]
    z_max = np.maximum.reduceat(z, indptr[:-1])
    weights = np.exp(z - z_max[row_of])
    row_sum = np.add.reduceat(weights, indptr[:-1])
    star = sp.csr_array(
        (weights / row_sum[row_of], kernel.indices.copy(), indptr.copy()),
        shape=kernel.shape,
    )
    return Policy(kernel=star, targets=p0.targets)


def bellman_gap(
    p: NavigationProblem,
    sol: DesirabilitySolution,
    q: Policy,
    p0: Policy | None = None,
) -> np.ndarray:
    """Per-node slack of a candidate policy against the converged loss.

    For each non-target u returns

        gamma * trans_cost(u) + KL(q(.|u) || P0(.|u)) + sum_v q(v|u) loss(v)
        - loss(u),

    which is nonnegative for every support-respecting policy and zero
    exactly at the optimum. Entries of q outside the support of P0 raise.
    """
    if p0 is None:
        p0 = urw_kernel(p.graph, p.target)
    n = p.graph.n
    gap = np.zeros(n)
    for u in range(n):
        if u == p.target:
            continue
        cols_q, vals_q = q.row(u)
        cols_0, vals_0 = p0.row(u)
        ref = dict(zip(cols_0.tolist(), vals_0.tolist()))
        expected = 0.0
        kl = 0.0
        for v, qv in zip(cols_q.tolist(), vals_q.tolist()):
            if qv == 0.0:
                continue
            if v not in ref:
                raise ValueError(
                    f"policy mass outside the reference support at ({u}, {v})"
                )
            kl += qv * math.log(qv / ref[v])
            expected += qv * sol.loss[v]
        gap[u] = p.gamma * p.trans_cost[u] + kl + expected - sol.loss[u]
    return gap


@dataclass(frozen=True)
class BellmanCheckReport:
    """Outcome of randomized optimality probing."""

    trials: int
    magnitude: float
    seed: int
    max_violation: float
    min_gap: float


def bellman_check(
    p: NavigationProblem,
    sol: DesirabilitySolution,
    policy: Policy,
    trials: int = 100,
    seed: int = 0,
    magnitude: float = 0.5,
) -> BellmanCheckReport:
    """Probe optimality with random support-respecting perturbations.

    Each trial tilts the optimal rows multiplicatively in log space by
    Gaussian noise of the given magnitude and renormalizes, then checks
    that the perturbed policy never beats the converged loss. Magnitude 0
    reproduces ``policy`` itself, where the gap is zero up to solver
    tolerance.
    """
    rng = np.random.default_rng(seed)
    p0 = urw_kernel(p.graph, p.target)
    kernel = policy.kernel
    indptr = kernel.indptr
    row_of = np.repeat(np.arange(policy.n), np.diff(indptr))
    with np.errstate(divide="ignore"):
        log_base = np.log(kernel.data)
    min_gap = np.inf
    for _ in range(max(trials, 1)):
        z = log_base + magnitude * rng.standard_normal(kernel.data.shape)
        z_max = np.maximum.reduceat(z, indptr[:-1])
        w = np.exp(z - z_max[row_of])
        w_sum = np.add.reduceat(w, indptr[:-1])
        perturbed = sp.csr_array(
            (w / w_sum[row_of], kernel.indices.copy(), indptr.copy()),
            shape=kernel.shape,
        )
        gaps = bellman_gap(p, sol, Policy(kernel=perturbed, targets=policy.targets), p0=p0)
        min_gap = min(min_gap, float(gaps.min()))
    return BellmanCheckReport(
        trials=trials,
        magnitude=magnitude,
        seed=seed,
        max_violation=max(0.0, -min_gap),
        min_gap=min_gap,
    )
