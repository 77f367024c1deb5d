"""On-disk formats: interval-MDP interchange, policies, results, reports.

All files are deterministic byte-for-byte for a given input: floats are
rendered with shortest round-trip decimals (Python repr) and every file
embeds the run's provenance hash so the pipeline stages can refuse
mismatched inputs.  Lines starting with '#' in the text formats carry
metadata and are skipped by the readers.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .abstraction import Imdp, RefRecord, SparseRow
from .intervals import Interval
from .partition import Partition

TOOL_VERSION = "0.1.0"


class FormatError(ValueError):
    pass


class ManifestMismatch(RuntimeError):
    def __init__(self, expected: str, found: str, path: str) -> None:
        super().__init__(
            f"provenance mismatch for {path}: expected manifest {expected}, found {found}"
        )
        self.expected = expected
        self.found = found


def pipeline_identity(config_sha256: str, eta: float, rho: float, k: float) -> str:
    """Hash identifying one (config, abstraction parameters) pipeline run.

    Deliberately excludes timestamps and per-stage parameters such as the
    Monte Carlo seed, so all stages of one pipeline share the hash and the
    output files stay byte-identical across re-runs.
    """
    payload = json.dumps(
        {
            "config_sha256": config_sha256,
            "eta": eta,
            "rho": rho,
            "k": k,
            "tool_version": TOOL_VERSION,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RunManifest:
    """Sidecar provenance record of one pipeline stage (timestamps included)."""

    config_path: str
    config_sha256: str
    subcommand: str
    provenance_hash: str
    params: dict[str, Any] = field(default_factory=dict)
    tool_version: str = TOOL_VERSION
    started_at: str = ""
    finished_at: str = ""

    def to_json(self) -> dict[str, Any]:
        return {
            "config_path": self.config_path,
            "config_sha256": self.config_sha256,
            "subcommand": self.subcommand,
            "params": self.params,
            "tool_version": self.tool_version,
            "provenance_hash": self.provenance_hash,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


def now_stamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


def write_manifest(manifest: RunManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n")


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# Interval-MDP interchange file
#
#   # manifest <hash>
#   imdp <N+1> <|Act|> <n> <eta> <rho>
#   label <state> <prop> ...
#   t <action> <i> <j> <lo> <hi>
#
# States and actions are 1-based; the sink is state N+1 and its unit
# self-loop row is implicit.
# ---------------------------------------------------------------------------


def write_imdp(imdp: Imdp, path: str | Path, manifest_hash: str) -> None:
    lines = [f"# manifest {manifest_hash}"]
    lines.append(
        f"imdp {imdp.num_states} {imdp.num_actions} {imdp.n} {_fmt(imdp.eta)} {_fmt(imdp.rho)}"
    )
    for state in range(1, imdp.num_states + 1):
        props = " ".join(sorted(imdp.labels[state - 1]))
        lines.append(f"label {state}{(' ' + props) if props else ''}")
    for a in range(imdp.num_actions):
        for i in range(1, imdp.num_cells + 1):
            row = imdp.rows[a][i - 1]
            for c, lo, hi in zip(row.cols, row.lo, row.hi):
                lines.append(f"t {a + 1} {i} {int(c)} {_fmt(lo)} {_fmt(hi)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_imdp(path: str | Path) -> tuple[Imdp, str | None]:
    """Parse an interchange file; returns the model and its manifest hash."""
    manifest_hash: str | None = None
    header: list[str] | None = None
    labels: dict[int, frozenset[str]] = {}
    entries: dict[tuple[int, int], list[tuple[int, float, float]]] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "manifest":
                manifest_hash = parts[1]
            continue
        parts = line.split()
        if parts[0] == "imdp":
            if len(parts) != 6:
                raise FormatError(f"{path}:{lineno}: malformed header")
            header = parts
        elif parts[0] == "label":
            if header is None:
                raise FormatError(f"{path}:{lineno}: label line before header")
            labels[int(parts[1])] = frozenset(parts[2:])
        elif parts[0] == "t":
            if len(parts) != 6:
                raise FormatError(f"{path}:{lineno}: malformed transition line")
            a, i, j = int(parts[1]), int(parts[2]), int(parts[3])
            entries.setdefault((a, i), []).append((j, float(parts[4]), float(parts[5])))
        else:
            raise FormatError(f"{path}:{lineno}: unknown record {parts[0]!r}")
    if header is None:
        raise FormatError(f"{path}: missing imdp header line")
    num_states = int(header[1])
    num_actions = int(header[2])
    n = int(header[3])
    eta, rho = float(header[4]), float(header[5])
    label_tuple = tuple(labels.get(s, frozenset()) for s in range(1, num_states + 1))

    rows: list[tuple[SparseRow, ...]] = []
    for a in range(1, num_actions + 1):
        action_rows = []
        for i in range(1, num_states):
            recs = entries.get((a, i), [])
            recs.sort(key=lambda r: r[0])
            cols = np.array([r[0] for r in recs], dtype=np.int64)
            lo = np.array([r[1] for r in recs], dtype=float)
            hi = np.array([r[2] for r in recs], dtype=float)
            action_rows.append(SparseRow(cols=cols, lo=lo, hi=hi))
        rows.append(tuple(action_rows))

    # Action points are not part of the interchange format; use indices as
    # placeholders when the model is consumed without its config.
    actions = tuple((float(a),) for a in range(num_actions))
    imdp = Imdp(
        num_states=num_states,
        n=n,
        actions=actions,
        labels=label_tuple,
        rows=tuple(rows),
        eta=eta,
        rho=rho,
    )
    return imdp, manifest_hash


# ---------------------------------------------------------------------------
# Policy file:  "pi <state> <action>"  (1-based, sink included)
# ---------------------------------------------------------------------------


def write_policy(policy: np.ndarray, path: str | Path, manifest_hash: str) -> None:
    lines = [f"# manifest {manifest_hash}"]
    for state, a in enumerate(policy, start=1):
        lines.append(f"pi {state} {int(a) + 1}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_policy(path: str | Path) -> tuple[np.ndarray, str | None]:
    manifest_hash: str | None = None
    assignments: dict[int, int] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "manifest":
                manifest_hash = parts[1]
            continue
        parts = line.split()
        if parts[0] != "pi" or len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: malformed policy line")
        assignments[int(parts[1])] = int(parts[2]) - 1
    if not assignments:
        raise FormatError(f"{path}: empty policy")
    num_states = max(assignments)
    if sorted(assignments) != list(range(1, num_states + 1)):
        raise FormatError(f"{path}: policy must cover states 1..{num_states}")
    return np.array([assignments[s] for s in range(1, num_states + 1)], dtype=np.int64), manifest_hash


# ---------------------------------------------------------------------------
# Results and report JSON
# ---------------------------------------------------------------------------


def write_results(
    path: str | Path,
    manifest_hash: str,
    prop_text: str,
    p_lo: Sequence[float],
    p_hi: Sequence[float],
    verdicts: Sequence[str | None],
    iterations: int,
    residual: float,
) -> None:
    doc = {
        "manifest": manifest_hash,
        "property": prop_text,
        "iterations": iterations,
        "residual": residual,
        "states": [
            {
                "state": s,
                "p_lo": float(lo),
                "p_hi": float(hi),
                "verdict": v,
            }
            for s, (lo, hi, v) in enumerate(zip(p_lo, p_hi, verdicts), start=1)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_results(path: str | Path) -> dict[str, Any]:
    doc = json.loads(Path(path).read_text())
    if "states" not in doc:
        raise FormatError(f"{path}: not a results file")
    return doc


def write_report(path: str | Path, doc: dict[str, Any]) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_ref_record(record: RefRecord, path: str | Path, manifest_hash: str) -> None:
    doc: dict[str, Any] = {
        "manifest": manifest_hash,
        "eta": record.eta,
        "ws": record.ws,
        "tv": record.tv,
        "entries": [
            {
                "state": cell,
                "action": action + 1,
                "refs": [
                    {
                        "mean": list(ref.mean),
                        "var": list(ref.var),
                        "var_snapped": list(ref.var_snapped),
                        "w1_bound": ref.w1_bound,
                        "row": list(ref.row),
                    }
                    for ref in refs
                ],
            }
            for (cell, action), refs in sorted(record.entries.items())
        ],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Heatmap CSV: one row per cell (sink excluded), state order.
# ---------------------------------------------------------------------------


def write_heatmap(
    path: str | Path,
    part: Partition,
    p_lo: Sequence[float],
    p_hi: Sequence[float],
    policy: np.ndarray,
) -> None:
    cols = ["cell_id"] + [f"center_{d + 1}" for d in range(part.n)] + ["p_lo", "p_hi", "action"]
    lines = [",".join(cols)]
    for state in range(1, part.num_cells + 1):
        center = part.cell_center(state)
        fields = [str(state)]
        fields += [_fmt(c) for c in center]
        fields += [_fmt(p_lo[state - 1]), _fmt(p_hi[state - 1]), str(int(policy[state - 1]) + 1)]
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def write_trajectory_csv(path: str | Path, rows: Sequence[tuple[int, bool, int]]) -> None:
    lines = ["trajectory,success,stop_index"]
    for idx, ok, stop in rows:
        lines.append(f"{idx},{int(ok)},{stop}")
    Path(path).write_text("\n".join(lines) + "\n")
