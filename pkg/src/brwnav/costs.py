"""Description-length bookkeeping for navigation policies.

All reported quantities are in bits (log base 2); the solver's natural-log
KL values convert at 1/ln 2. The routing-table size of a node is its
neighbor count times log2(n) bits per index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baselines import Policy
from .graph import Graph

LOG2E = 1.0 / math.log(2.0)


class SupportViolationError(ValueError):
    """A policy places mass where the reference walk has none."""


def round_half_away_from_zero(x):
    """Paper-and-pencil rounding: 2.5 -> 3, not banker's 2."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass(frozen=True)
class CodingModel:
    """Constants of the two-part coding scheme."""

    bits_per_index: float
    beta: float = 1.0
    target_count: int = 1

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.target_count < 1:
            raise ValueError("target_count must be at least 1")

    @classmethod
    def for_graph(cls, g: Graph, beta: float = 1.0, target_count: int = 1) -> "CodingModel":
        return cls(bits_per_index=math.log2(g.n), beta=beta, target_count=target_count)


def _paired_reference(p_star: Policy, p0: Policy) -> np.ndarray:
    """Reference probabilities aligned with the entries of p_star.

    Raises SupportViolationError when p_star has positive mass on an entry
    absent from p0 (a solver bug, never a data condition).
    """
    star = p_star.kernel
    coo = star.tocoo()
    ref = np.asarray(p0.kernel[coo.row, coo.col]).ravel()
    bad = (coo.data > 0) & (ref == 0)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise SupportViolationError(
            f"policy mass {coo.data[k]!r} at ({coo.row[k]}, {coo.col[k]}) "
            "where the reference walk has none"
        )
    return ref


def kl_per_node(p_star: Policy, p0: Policy) -> np.ndarray:
    """Per-node KL divergence of the policy from the reference, in bits.

    Zero-probability policy entries contribute nothing; target rows are
    identical in both kernels and contribute zero.
    """
    star = p_star.kernel
    ref = _paired_reference(p_star, p0)
    coo = star.tocoo()
    terms = np.zeros_like(coo.data)
    pos = coo.data > 0
    terms[pos] = coo.data[pos] * np.log2(coo.data[pos] / ref[pos])
    out = np.zeros(p_star.n)
    np.add.at(out, coo.row, terms)
    # Clamp the tiny negative float noise of rows that equal the reference.
    out[np.abs(out) < 1e-15] = 0.0
    return out


def mdl_step_cross_entropy(p_star_row: np.ndarray, p0_row: np.ndarray) -> float:
    """Bits to encode one step of the policy row under the reference code.

    Equals entropy(p_star_row) + KL(p_star_row || p0_row) in bits.
    """
    q = np.asarray(p_star_row, dtype=np.float64)
    p = np.asarray(p0_row, dtype=np.float64)
    pos = q > 0
    if np.any(p[pos] == 0):
        raise SupportViolationError("policy row has mass outside the reference support")
    return float(-(q[pos] * np.log2(p[pos])).sum())


def per_node_reference_table_bits(model: CodingModel, g: Graph) -> np.ndarray:
    """Amortized one-time cost of the reference table at each node."""
    return model.beta * g.neighbor_counts * model.bits_per_index


def per_node_full_table_bits(model: CodingModel, g: Graph) -> np.ndarray:
    """Per-step table size when every target keeps its own explicit row."""
    return (model.target_count + 1) * model.beta * g.neighbor_counts * model.bits_per_index


def full_table_bits(model: CodingModel, g: Graph) -> float:
    """Up-front cost of target-specific routing tables for the whole graph.

    target_count * (total table entries) * log2(n) bits, where the entry
    count is the sum of neighbor-list lengths (twice the edge count).
    """
    return float(model.target_count * int(g.neighbor_counts.sum()) * model.bits_per_index)


def trajectory_bound(kl_bits: np.ndarray, mfpt: np.ndarray) -> float:
    """Worst-case cumulative information cost of a walk, in bits.

    Bounds the walk length by the rounded largest mean first passage time
    and each step by the largest per-node KL cost.
    """
    kl_bits = np.asarray(kl_bits, dtype=np.float64)
    mfpt = np.asarray(mfpt, dtype=np.float64)
    if kl_bits.size == 0 or mfpt.size == 0:
        return 0.0
    return float(round_half_away_from_zero(mfpt.max()) * kl_bits.max())


def coding_decision(bound_bits: float, full_bits: float) -> str:
    """'incremental' when per-step coding undercuts the full tables.

    Ties favor the simpler deterministic table.
    """
    return "incremental" if bound_bits < full_bits else "full_table"


def cumulative_difference_sign(bound_bits: float, full_bits: float) -> int:
    """Sign of (cumulative KL bound - full table cost); negative means the
    incremental regime where the cost trade-off is nontrivial."""
    return int(np.sign(bound_bits - full_bits))


@dataclass(frozen=True, eq=False)
class CostReport:
    """Information and transition cost summary for one solved policy."""

    gamma_used: float
    kl_per_node: np.ndarray
    max_kl: float
    mfpt: np.ndarray
    trajectory_bound: float
    per_node_bound: np.ndarray
    full_table_bits: float
    coding_decision: str
    cumulative_difference_sign: int


def build_cost_report(
    g: Graph,
    p_star: Policy,
    p0: Policy,
    mfpt: np.ndarray,
    gamma: float,
    model: CodingModel | None = None,
) -> CostReport:
    """Assemble the per-solve cost report from its constituent parts."""
    if model is None:
        model = CodingModel.for_graph(g)
    kl = kl_per_node(p_star, p0)
    bound = trajectory_bound(kl, mfpt)
    full = full_table_bits(model, g)
    return CostReport(
        gamma_used=float(gamma),
        kl_per_node=kl,
        max_kl=float(kl.max()),
        mfpt=np.asarray(mfpt, dtype=np.float64),
        trajectory_bound=bound,
        per_node_bound=round_half_away_from_zero(mfpt) * float(kl.max()),
        full_table_bits=full,
        coding_decision=coding_decision(bound, full),
        cumulative_difference_sign=cumulative_difference_sign(bound, full),
    )
