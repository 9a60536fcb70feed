"""CSV and JSON artifacts.

Every CSV starts with ``#version=``, ``#seed=`` and ``#config-hash=`` comment
lines followed by a header row. Floats are written with 12 significant digits
and nothing time-dependent goes into a file, so identical invocations produce
identical bytes.
"""

import csv
import hashlib
import json
import logging
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import click
import numpy as np

from . import __version__
from .decay import Trajectory
from .exceptions import InvalidState
from .measures import MeasureRecord
from .ree import CssCandidate
from .scan import Envelope, PairClassification, ScanRecord
from .states import DensityMatrix

logger = logging.getLogger(__name__)

SCAN_COLUMNS = (
    "state_id",
    "family_tag",
    "purity",
    "C",
    "E_F",
    "N",
    "E_PPT",
    "B",
    "E_R",
    "ree_method",
    "ree_converged",
)
ENVELOPE_COLUMNS = ("bin_lo", "bin_hi", "count", "lower", "upper", "lower_id", "upper_id")
TRAJECTORY_COLUMNS = ("label", "t", "gamma_t", "eta", "C", "N", "E_PPT", "B", "E_R")
TRACE_COLUMNS = ("restart", "evaluations", "best_value", "converged")
ORDERING_COLUMNS = (
    "pattern",
    "source",
    "id_a",
    "id_b",
    "delta_C",
    "delta_N",
    "delta_E_R",
    "delta_B",
    "b_witness",
)


def config_hash(config: Mapping[str, Any]) -> str:
    """sha256 of the sorted-key JSON encoding of an invocation's settings."""
    payload = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "nan" if np.isnan(value) else f"{float(value):.12g}"
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(
    path: str,
    columns: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
    seed: Optional[int],
    config: Mapping[str, Any],
) -> int:
    """Write rows under the metadata lines and a header row.

    Args:
        path: Output file, or ``-`` for stdout.
        columns: Header names; rows may omit trailing optional columns.
        rows: Mappings from column name to value.
        seed: Seed of the run (written as empty when the run is deterministic).
        config: Settings that produced the rows; only their hash is written.

    Returns:
        Number of data rows written.
    """
    count = 0
    with click.open_file(path, "w", encoding="utf-8") as f:
        f.write(f"#version={__version__}\n")
        f.write(f"#seed={'' if seed is None else seed}\n")
        f.write(f"#config-hash={config_hash(config)}\n")
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: format_value(v) for k, v in row.items()})
            count += 1
    logger.debug(f"Wrote {count} rows to {path}")
    return count


def read_csv(path: str) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """Read back a CSV written by write_csv as (metadata, rows)."""
    meta: Dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, _, value = line[1:].partition("=")
        meta[key] = value
    rows = list(csv.DictReader(lines[body_start:]))
    return meta, rows


# Row builders


def scan_rows(records: Iterable[ScanRecord]) -> Iterable[Dict[str, Any]]:
    for r in records:
        m = r.measures
        yield {
            "state_id": r.state_id,
            "family_tag": r.family_tag,
            "purity": r.purity,
            "C": m.c,
            "E_F": m.e_f,
            "N": m.n,
            "E_PPT": m.e_ppt,
            "B": m.b,
            "E_R": m.e_r,
            "ree_method": m.ree_method,
            "ree_converged": m.ree_converged,
        }


def envelope_columns(envelope: Envelope) -> Tuple[str, ...]:
    return ENVELOPE_COLUMNS + tuple(sorted(envelope.curves))


def envelope_rows(envelope: Envelope) -> Iterable[Dict[str, Any]]:
    for b in range(len(envelope.counts)):
        row = {
            "bin_lo": envelope.edges[b],
            "bin_hi": envelope.edges[b + 1],
            "count": int(envelope.counts[b]),
            "lower": envelope.lower[b],
            "upper": envelope.upper[b],
            "lower_id": int(envelope.lower_ids[b]),
            "upper_id": int(envelope.upper_ids[b]),
        }
        for name in sorted(envelope.curves):
            row[name] = envelope.curves[name][b]
        yield row


def trajectory_rows(trajectories: Iterable[Trajectory]) -> Iterable[Dict[str, Any]]:
    for traj in trajectories:
        for i, record in enumerate(traj.records):
            yield {
                "label": traj.label,
                "t": traj.times[i],
                "gamma_t": traj.gamma_t[i],
                "eta": traj.eta[i],
                "C": record.c,
                "N": record.n,
                "E_PPT": record.e_ppt,
                "B": record.b,
                "E_R": record.e_r,
            }


def trace_rows(candidate: CssCandidate) -> Iterable[Dict[str, Any]]:
    for summary in candidate.trace:
        yield {
            "restart": summary.restart,
            "evaluations": summary.evaluations,
            "best_value": summary.best_value,
            "converged": summary.converged,
        }


def ordering_rows(
    witnesses: Iterable[Tuple[str, ScanRecord, ScanRecord, PairClassification]]
) -> Iterable[Dict[str, Any]]:
    for source, a, b, result in witnesses:
        yield {
            "pattern": str(result.ordering),
            "source": source,
            "id_a": a.state_id,
            "id_b": b.state_id,
            "delta_C": result.deltas[0],
            "delta_N": result.deltas[1],
            "delta_E_R": result.deltas[2],
            "delta_B": result.b_delta,
            "b_witness": result.b_witness,
        }


# State JSON


def write_state_json(path: str, rho: DensityMatrix):
    with click.open_file(path, "w", encoding="utf-8") as f:
        json.dump(rho.to_json_dict(), f, indent=2)
        f.write("\n")
    logger.debug(f"Wrote state to {path}")


def read_state_json(path: str) -> DensityMatrix:
    """Load a state file; the matrix is validated, never repaired.

    Raises:
        InvalidState: If the file is not JSON or the matrix fails validation.
    """
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        logger.error(f"State file {path} is not valid JSON: {e}")
        raise InvalidState(f"State file {path} is not valid JSON", [str(e)])
    return DensityMatrix.from_json_dict(data)


def _optional_float(text: str) -> Optional[float]:
    return None if text in ("", None) else float(text)


def _optional_bool(text: str) -> Optional[bool]:
    return None if text in ("", None) else text == "true"


def read_scan_records(path: str) -> List[ScanRecord]:
    """Rebuild ScanRecords from a scan CSV (family parameters are not stored)."""
    _, rows = read_csv(path)
    records = []
    for row in rows:
        measures = MeasureRecord(
            c=float(row["C"]),
            e_f=float(row["E_F"]),
            n=float(row["N"]),
            e_ppt=float(row["E_PPT"]),
            b=float(row["B"]),
            e_r=_optional_float(row["E_R"]),
            ree_method=row["ree_method"],
            ree_converged=_optional_bool(row["ree_converged"]),
        )
        records.append(
            ScanRecord(int(row["state_id"]), row["family_tag"], float(row["purity"]), measures)
        )
    logger.debug(f"Read {len(records)} scan records from {path}")
    return records
