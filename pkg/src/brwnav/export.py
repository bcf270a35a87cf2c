"""Artifact serialization: JSON/CSV/DOT views of solver outputs.

Writers are atomic (tmp file + rename) and deterministic: identical inputs
produce identical bytes, so artifacts never embed timestamps.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .analysis import ComparisonRow, MfptField
from .baselines import DistanceField, Policy
from .costs import CostReport
from .solver import DesirabilitySolution


def write_text_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def write_json_atomic(path: str | Path, obj) -> None:
    write_text_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def policy_to_json_obj(policy: Policy, labels: Sequence[str]) -> dict:
    out: dict[str, dict[str, float]] = {}
    k = policy.kernel
    for u in range(policy.n):
        lo, hi = k.indptr[u], k.indptr[u + 1]
        row = {
            labels[v]: float(p)
            for v, p in zip(k.indices[lo:hi], k.data[lo:hi])
            if p > 0
        }
        out[labels[u]] = row
    return out


def solution_to_json_obj(
    sol: DesirabilitySolution,
    policy: Policy,
    labels: Sequence[str],
    provenance: Mapping | None = None,
) -> dict:
    obj = {
        "loss": {labels[u]: float(sol.loss[u]) for u in range(len(labels))},
        "desirability": {labels[u]: float(sol.desirability[u]) for u in range(len(labels))},
        "policy": policy_to_json_obj(policy, labels),
        "residual": sol.residual,
        "linear_residual": sol.linear_residual,
        "iterations": sol.iterations,
    }
    if provenance:
        obj["provenance"] = dict(provenance)
    return obj


def cost_report_to_json_obj(
    report: CostReport,
    labels: Sequence[str],
    provenance: Mapping | None = None,
) -> dict:
    obj = {
        "gamma": report.gamma_used,
        "kl_bits": {labels[u]: float(report.kl_per_node[u]) for u in range(len(labels))},
        "max_kl_bits": report.max_kl,
        "mfpt": {labels[u]: float(report.mfpt[u]) for u in range(len(labels))},
        "per_node_bound_bits": {
            labels[u]: float(report.per_node_bound[u]) for u in range(len(labels))
        },
        "trajectory_bound_bits": report.trajectory_bound,
        "full_table_bits": report.full_table_bits,
        "coding_decision": report.coding_decision,
        "cumulative_difference_sign": report.cumulative_difference_sign,
    }
    if provenance:
        obj["provenance"] = dict(provenance)
    return obj


def _csv_lines(header: Sequence[str], rows, comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(str(x) for x in row))
    return "\n".join(lines) + "\n"


def cost_report_csv(report: CostReport, labels: Sequence[str], comments: Sequence[str] = ()) -> str:
    rows = [
        (
            labels[u],
            f"{report.kl_per_node[u]:.6f}",
            f"{report.mfpt[u]:.6f}",
            f"{report.per_node_bound[u]:.6f}",
        )
        for u in range(len(labels))
    ]
    return _csv_lines(("node", "kl_bits", "mfpt", "bound_bits"), rows, comments)


def mfpt_csv(field: MfptField, labels: Sequence[str], comments: Sequence[str] = ()) -> str:
    rows = [
        (labels[u], f"{field.values[u]:.6f}", int(field.rounded[u]))
        for u in range(len(labels))
    ]
    return _csv_lines(("node", "mfpt", "rounded"), rows, comments)


def distance_field_csv(field: DistanceField, labels: Sequence[str], comments: Sequence[str] = ()) -> str:
    rows = [
        (labels[u], f"{field.dist[u]:.9g}", int(field.hops[u]), int(field.path_hops[u]))
        for u in range(len(labels))
    ]
    return _csv_lines(("node", "dist", "hops", "path_hops"), rows, comments)


def comparison_csv(rows: Sequence[ComparisonRow], comments: Sequence[str] = ()) -> str:
    body = [
        (
            f"{r.gamma:g}",
            f"{r.mean_mfpt:.6f}",
            f"{r.max_mfpt:.6f}",
            f"{r.max_kl:.6f}",
            f"{r.trajectory_bound:.6f}",
            f"{r.full_table_bits:.6f}",
            r.coding_decision,
        )
        for r in rows
    ]
    header = (
        "gamma", "mean_mfpt", "max_mfpt", "max_kl_bits",
        "trajectory_bound_bits", "full_table_bits", "coding_decision",
    )
    return _csv_lines(header, body, comments)


def comparison_json_obj(rows: Sequence[ComparisonRow], provenance: Mapping | None = None) -> dict:
    obj = {
        "rows": [
            {
                "gamma": r.gamma,
                "mean_mfpt": r.mean_mfpt,
                "max_mfpt": r.max_mfpt,
                "max_kl_bits": r.max_kl,
                "trajectory_bound_bits": r.trajectory_bound,
                "full_table_bits": r.full_table_bits,
                "coding_decision": r.coding_decision,
            }
            for r in rows
        ]
    }
    if provenance:
        obj["provenance"] = dict(provenance)
    return obj


def policy_to_dot(policy: Policy, labels: Sequence[str], name: str = "policy") -> str:
    """Graphviz digraph of the kernel; edge opacity tracks probability."""
    lines = [f"digraph {name} {{"]
    k = policy.kernel
    for u in range(policy.n):
        lo, hi = k.indptr[u], k.indptr[u + 1]
        for v, p in zip(k.indices[lo:hi], k.data[lo:hi]):
            if p <= 0:
                continue
            alpha = int(round(255 * min(1.0, float(p))))
            lines.append(
                f'  "{labels[u]}" -> "{labels[v]}" '
                f'[color="#1f77b4{alpha:02x}", label="{p:.3f}"];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_jsonable(x):
    """Recursively convert numpy scalars/arrays for json.dumps."""
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, dict):
        return {k: to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    return x
