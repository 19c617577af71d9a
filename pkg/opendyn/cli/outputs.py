"""CSV tables and the JSON metadata sidecar."""

import csv
import json
import logging
import subprocess
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from opendyn import __version__
from opendyn.config import BASE_DIR
from opendyn.ode import OdeSolution
from opendyn.trajectories import TrajectoryResult
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger(__name__)

Result = Union[OdeSolution, TrajectoryResult]
Table = Tuple[List[str], List[List[float]]]


def format_number(x: float) -> str:
    """Shortest decimal that reads back to the same double."""
    return repr(float(x))


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=BASE_DIR, capture_output=True, text=True, timeout=5, check=False,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def to_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, Path):
        return str(value)
    return value


# ============================================
# TABLES
# ============================================

def _basis_labels(d: int) -> List[str]:
    n = int(round(np.log2(d)))
    return [format(k, f"0{n}b") for k in range(d)]


def solution_table(
    result: Result,
    observables: Optional[Dict[str, np.ndarray]] = None,
    populations: bool = False,
) -> Table:
    """
    Columns: t, then ⟨O⟩ per observable and P per basis state when asked;
    otherwise the flattened state (re/im per component). Ensemble results
    add a standard-error column per observable.
    """
    observables = observables or {}
    t = np.asarray(result.t, dtype=float)
    header, columns = ["t"], [t]
    ensemble = isinstance(result, TrajectoryResult)

    if observables or populations:
        rhos = result.mean if ensemble else result.density_matrices()
        for name, op in observables.items():
            header.append(f"<{name}>")
            if ensemble and name in result.observables:
                mean, err = result.observables[name]
                columns.append(mean)
                header.append(f"<{name}>_stderr")
                columns.append(err)
            else:
                columns.append(np.real(np.einsum("ij,nji->n", op, rhos)))
        if populations:
            pops = np.real(np.einsum("nii->ni", rhos))
            for k, label in enumerate(_basis_labels(pops.shape[1])):
                header.append(f"P_{label}")
                columns.append(pops[:, k])
    else:
        states = result.mean if ensemble else result.states
        flat = states.reshape(len(t), -1)
        if ensemble or result.tag == "matrix":
            d = states.shape[1]
            names = [f"rho_{i}_{j}" for i in range(d) for j in range(d)]
        elif result.tag == "unitary":
            d = states.shape[1]
            names = [f"u_{i}_{j}" for i in range(d) for j in range(d)]
        else:
            names = [f"psi_{k}" for k in range(flat.shape[1])]
        for k, name in enumerate(names):
            header.extend([f"re_{name}", f"im_{name}"])
            columns.extend([flat[:, k].real, flat[:, k].imag])

    rows = [list(r) for r in zip(*columns)] if len(t) else []
    return header, rows


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[float]]):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(x) for x in row])


def read_csv(path: Path) -> Table:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    return header, rows


# ============================================
# METADATA
# ============================================

def solution_metadata(result: Result) -> Dict[str, Any]:
    if isinstance(result, TrajectoryResult):
        return {
            "status": "success" if result.success else "failed",
            "trajectories": result.n_trajectories,
            "seed": result.seed,
            "failures": result.failures,
            "jump_counts": {
                "mean": float(np.mean(result.jump_counts)) if len(result.jump_counts) else 0.0,
                "max": int(np.max(result.jump_counts)) if len(result.jump_counts) else 0,
            },
            **{k: v for k, v in result.metadata.items()},
        }
    meta = {k: v for k, v in result.metadata.items() if k != "frame_states"}
    meta.update({
        "status": result.status,
        "message": result.message,
        "accepted_steps": result.n_accepted,
        "rejected_steps": result.n_rejected,
        "rhs_evaluations": result.n_rhs,
    })
    if result.t_event is not None:
        meta["t_event"] = result.t_event
    return meta


def emit_outputs(
    directory: Path,
    prefix: str,
    header: Sequence[str],
    rows: Sequence[Sequence[float]],
    metadata: Dict[str, Any],
    extra_tables: Optional[Dict[str, Table]] = None,
) -> Dict[str, Path]:
    """
    Write `<prefix>.csv`, any extra tables as `<prefix>_<name>.csv`, and
    `<prefix>.json` with the metadata plus version, git describe and traces.
    The directory is created here and nowhere earlier.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tracer = get_tracer()
    paths: Dict[str, Path] = {}

    csv_path = directory / f"{prefix}.csv"
    write_csv(csv_path, header, rows)
    tracer.log_output(str(csv_path))
    paths["csv"] = csv_path
    for name, (extra_header, extra_rows) in (extra_tables or {}).items():
        extra_path = directory / f"{prefix}_{name}.csv"
        write_csv(extra_path, extra_header, extra_rows)
        tracer.log_output(str(extra_path))
        paths[name] = extra_path

    sidecar = directory / f"{prefix}.json"
    document = {
        **metadata,
        "version": __version__,
        "git": git_describe(),
        "columns": list(header),
        "rows": len(rows),
        "files": {k: p.name for k, p in paths.items()},
    }
    tracer.log_output(str(sidecar))
    document["traces"] = tracer.get_traces()
    sidecar.write_text(json.dumps(to_jsonable(document), indent=2, default=str))
    paths["metadata"] = sidecar
    logger.debug("outputs written to %s", directory)
    return paths
