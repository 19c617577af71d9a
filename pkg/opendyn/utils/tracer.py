"""Run tracer for problem assembly, solver runs, ensembles and fits."""

import json
import time
from datetime import datetime
from typing import Any, Dict, List, Optional

from opendyn.config import DEBUG_MODE

CATEGORY_COLORS = {
    "PROBLEM": "\033[94m",   # Blue
    "BATH": "\033[92m",      # Green
    "SOLVER": "\033[95m",    # Magenta
    "STEP": "\033[90m",      # Grey
    "ENSEMBLE": "\033[96m",  # Cyan
    "FIT": "\033[93m",       # Yellow
    "OUTPUT": "\033[97m",    # White
    "WARNING": "\033[91m",   # Red
}
RESET = "\033[0m"
INDENT = " " * 13


class Tracer:
    """
    Records what a run did (problem size, bath diagnostics, solver status,
    ensemble progress) as structured entries. Entries always accumulate so
    they can be written into the metadata sidecar; the console echo is
    controlled by DEBUG_MODE in config.
    """

    def __init__(self, enabled: Optional[bool] = None):
        self.enabled = DEBUG_MODE if enabled is None else enabled
        self.entries: List[Dict[str, Any]] = []
        self._t0 = time.perf_counter()

    def log(self, category: str, message: str, data: Any = None):
        entry: Dict[str, Any] = {
            "timestamp": datetime.now().isoformat(),
            "elapsed_ms": round(1000.0 * (time.perf_counter() - self._t0), 3),
            "category": category,
            "message": message,
        }
        if data is not None:
            entry["data"] = data
        self.entries.append(entry)
        if self.enabled:
            self._echo(entry)

    def _echo(self, entry: Dict[str, Any]):
        color = CATEGORY_COLORS.get(entry["category"], "")
        print(f"{color}[{entry['elapsed_ms']:>9.1f}ms] [{entry['category']:^10}] {entry['message']}{RESET}")
        data = entry.get("data")
        if isinstance(data, dict):
            # one key per line; numbers in short form
            for key, value in data.items():
                shown = f"{value:.6g}" if isinstance(value, float) else json.dumps(value, default=str)[:200]
                print(f"{INDENT}{key} = {shown}")
        elif data is not None:
            print(f"{INDENT}{str(data)[:500]}")

    # ============================================
    # RUN EVENTS
    # ============================================

    def log_problem(self, dimension: int, n_couplings: int, t_f: float):
        self.log("PROBLEM", f"d={dimension}, couplings={n_couplings}, t_f={t_f} ns")

    def log_bath(self, name: str, params: dict):
        self.log("BATH", f"Bath: {name}", params)

    def log_timescales(self, tau_sb: float, tau_b: float):
        self.log("BATH", f"tau_SB={tau_sb:.6g} ns, tau_B={tau_b:.6g} ns")

    def log_solver_start(self, solver: str, options: Optional[dict] = None):
        self.log("SOLVER", f"Starting {solver}", options)

    def log_solver_end(self, solver: str, status: str, accepted: int, rejected: int):
        self.log(
            "SOLVER",
            f"{solver} finished with status '{status}' "
            f"({accepted} accepted / {rejected} rejected steps)",
        )

    def log_ensemble(self, message: str, data: Any = None):
        self.log("ENSEMBLE", message, data)

    def log_fit(self, h_p: float, gamma: Optional[float], residual: Optional[float]):
        self.log("FIT", f"h_p={h_p}: Gamma={gamma}, residual={residual}")

    def log_output(self, path: str):
        self.log("OUTPUT", f"Wrote {path}")

    def log_warning(self, message: str):
        self.log("WARNING", message)

    def get_traces(self) -> List[Dict[str, Any]]:
        return list(self.entries)

    def clear(self):
        self.entries = []
        self._t0 = time.perf_counter()


_tracer: Optional[Tracer] = None


def get_tracer(reset: bool = False) -> Tracer:
    """Module-wide tracer; `reset=True` starts a fresh trace for a new run."""
    global _tracer
    if _tracer is None or reset:
        _tracer = Tracer()
    return _tracer


def trace_enabled() -> bool:
    return DEBUG_MODE
