"""File formats: covariance matrices as CSV/JSON, reports and samples.

Numbers are written with 17 significant digits so every file round-trips
bit-exactly.  Output files embed the configuration that produced them; the
only non-reproducible field is the timestamp, which lives in metadata.
"""

from __future__ import annotations

import csv
import io
import json
from datetime import datetime, timezone

import numpy as np

from .montecarlo import HistogramReport
from .symplectic import GaussianPureState

FLOAT_FMT = "%.17g"


def _format_row(row) -> list[str]:
    return [FLOAT_FMT % x for x in row]


def write_covariance_csv(state: GaussianPureState, path) -> None:
    """Row-major covariance CSV with a self-describing header line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# n_modes={state.n_modes} ordering=interleaved\n")
        writer = csv.writer(fh)
        for row in state.covariance:
            writer.writerow(_format_row(row))


def read_covariance_csv(path) -> GaussianPureState:
    """Read a covariance CSV produced by :func:`write_covariance_csv`."""
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError("missing header line '# n_modes=<n> ordering=interleaved'")
        fields = dict(
            part.split("=", 1) for part in header.lstrip("#").split() if "=" in part
        )
        n_modes = int(fields["n_modes"])
        if fields.get("ordering", "interleaved") != "interleaved":
            raise ValueError(f"unsupported quadrature ordering {fields['ordering']!r}")
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    return GaussianPureState(n_modes=n_modes, covariance=np.array(rows))


def state_to_json_dict(state: GaussianPureState) -> dict:
    return {
        "n_modes": state.n_modes,
        "covariance": state.covariance.tolist(),
        "displacement": state.displacement.tolist(),
    }


def state_from_json_dict(data: dict) -> GaussianPureState:
    return GaussianPureState(
        n_modes=int(data["n_modes"]),
        covariance=np.array(data["covariance"], dtype=float),
        displacement=np.array(data.get("displacement", []), dtype=float)
        if data.get("displacement")
        else None,
    )


def read_state(path) -> GaussianPureState:
    """Read a state from CSV or JSON, dispatching on the file suffix."""
    if str(path).endswith(".json"):
        with open(path) as fh:
            return state_from_json_dict(json.load(fh))
    return read_covariance_csv(path)


def report_to_json_dict(report: HistogramReport) -> dict:
    return {
        "bin_edges": [np.asarray(e).tolist() for e in report.bin_edges],
        "counts": np.asarray(report.counts).tolist(),
        "normalized_density": np.asarray(report.normalized_density).tolist(),
        "comparison": report.comparison,
        "metadata": report.metadata,
    }


def write_samples_csv(samples: np.ndarray, energies, path) -> None:
    """One accepted sample per row: nu_1 ... nu_m, E_A, E_B."""
    samples = np.atleast_2d(samples)
    e_a, e_b = energies
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"nu_{k + 1}" for k in range(samples.shape[1])] + ["E_A", "E_B"])
        for row in samples:
            writer.writerow(_format_row(list(row) + [e_a, e_b]))


def write_density_grid_csv(grid_columns: dict, path) -> None:
    """Plot-ready CSV of density evaluations: nu columns then a density column."""
    names = list(grid_columns)
    columns = [np.asarray(grid_columns[name]).ravel() for name in names]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*columns):
            writer.writerow(_format_row(row))


def dump_output(payload: dict, path: str | None, timestamp: bool = True) -> str:
    """Serialize a result payload to JSON; write to ``path`` or return it.

    The timestamp is attached under metadata only, so stripping it recovers a
    byte-identical document for identical (config, seed).
    """
    if timestamp:
        payload = dict(payload)
        meta = dict(payload.get("metadata", {}))
        meta["timestamp"] = datetime.now(timezone.utc).isoformat()
        payload["metadata"] = meta
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def samples_csv_text(samples: np.ndarray, energies) -> str:
    buf = io.StringIO()
    samples = np.atleast_2d(samples)
    e_a, e_b = energies
    writer = csv.writer(buf)
    writer.writerow([f"nu_{k + 1}" for k in range(samples.shape[1])] + ["E_A", "E_B"])
    for row in samples:
        writer.writerow(_format_row(list(row) + [e_a, e_b]))
    return buf.getvalue()
