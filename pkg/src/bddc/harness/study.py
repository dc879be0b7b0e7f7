"""Weak, strong and BDDC-versus-CG studies producing CSV rows."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field

from ..errors import BddcError
from ..krylov import SolverOptions, pcg
from ..preconditioner import setup_bddc
from ..problem import Problem, poisson_problem

log = logging.getLogger(__name__)

CSV_COLUMNS = ("mode", "k", "n_subdomains", "global_dofs", "coarse_dim", "setup_seconds",
               "solve_seconds", "iterations", "final_relative_residual",
               "condition_estimate", "error")
MODES = ("weak", "strong", "compare", "single")


@dataclass
class ExperimentConfig:
    mode: str
    k_list: list
    local_cells: int = 32
    global_cells: int | None = None
    tolerance: float = 1e-8
    workers: int = 1
    seed: int = 1
    rhs: str = "manufactured"
    variant: str = "literal"
    max_iterations: int = 10_000
    output_path: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.k_list or any(k < 2 for k in self.k_list):
            raise ValueError("k_list must be non-empty with every k >= 2")
        if self.workers < 1:
            raise ValueError("worker count must be at least 1")
        if self.mode == "strong" and self.global_cells is None:
            self.global_cells = self.local_cells * max(self.k_list)


@dataclass
class RunResult:
    mode: str
    k: int | None
    n_subdomains: int
    global_dofs: int
    coarse_dim: int | None = None
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0
    iterations: int | None = None
    final_relative_residual: float | None = None
    condition_estimate: float | None = None
    error: str = ""
    converged: bool = False
    history: list = field(default_factory=list, repr=False)
    max_solve_residual: float | None = None
    setup_residuals: tuple | None = None
    solution: object = field(default=None, repr=False)

    @property
    def ok(self):
        return not self.error and self.converged

    def row(self):
        def fmt(v, spec=None):
            if v is None:
                return ""
            return format(v, spec) if spec else str(v)

        return {
            "mode": self.mode,
            "k": fmt(self.k),
            "n_subdomains": self.n_subdomains,
            "global_dofs": self.global_dofs,
            "coarse_dim": fmt(self.coarse_dim),
            "setup_seconds": f"{self.setup_seconds:.6f}",
            "solve_seconds": f"{self.solve_seconds:.6f}",
            "iterations": fmt(self.iterations),
            "final_relative_residual": fmt(self.final_relative_residual, ".17g"),
            "condition_estimate": fmt(self.condition_estimate, ".17g"),
            "error": self.error,
        }


def run_problem(problem: Problem, mode, k, tolerance=1e-8, workers=1, preconditioned=True,
                variant="literal", max_iterations=10_000, monitor=False) -> RunResult:
    """Set up (optionally) BDDC and solve ``problem`` once."""
    dec = problem.decomposition
    res = RunResult(mode, k, dec.n_subdomains, dec.n_global)
    opts = SolverOptions(rel_tolerance=tolerance, max_iterations=max_iterations)
    M = None
    try:
        if preconditioned:
            t0 = time.perf_counter()
            M = setup_bddc(problem.A, problem.local_matrices, dec, workers=workers,
                           variant=variant, monitor=monitor)
            res.setup_seconds = time.perf_counter() - t0
            res.coarse_dim = M.coarse.n_coarse
        t0 = time.perf_counter()
        x, rep = pcg(problem.A, problem.rhs, M, opts)
        res.solve_seconds = time.perf_counter() - t0
        res.iterations = rep.iterations
        res.final_relative_residual = rep.final_relative_residual
        res.condition_estimate = rep.condition_estimate
        res.converged = rep.converged
        res.history = rep.residual_history or []
        res.solution = x
        if M is not None and monitor:
            res.max_solve_residual = M.max_solve_residual
            res.setup_residuals = M.setup_residuals()
        if not rep.converged:
            res.error = f"not converged after {rep.iterations} iterations"
    except (BddcError, ValueError) as exc:
        res.error = f"{type(exc).__name__}: {exc}"
        log.warning("run %s k=%s failed: %s", mode, k, exc)
    finally:
        if M is not None:
            M.close()
    return res


def _failed(mode, k, exc):
    n = k * k if k else 0
    return RunResult(mode, k, n, 0, error=f"{type(exc).__name__}: {exc}")


def run_study(config: ExperimentConfig, monitor=False):
    """One BDDC run per k (plus a plain-CG run per k in compare mode)."""
    results = []
    for k in config.k_list:
        if config.mode == "strong":
            if config.global_cells % k:
                results.append(_failed("strong", k, ValueError(
                    f"{config.global_cells} global cells not divisible by k={k}")))
                continue
            m = config.global_cells // k
        else:
            m = config.local_cells
        try:
            problem = poisson_problem(k, m, rhs=config.rhs, seed=config.seed)
        except (BddcError, ValueError) as exc:
            results.append(_failed(config.mode, k, exc))
            continue
        common = dict(tolerance=config.tolerance, workers=config.workers,
                      variant=config.variant, max_iterations=config.max_iterations,
                      monitor=monitor)
        if config.mode == "compare":
            results.append(run_problem(problem, "compare-bddc", k, **common))
            results.append(run_problem(problem, "compare-cg", k, preconditioned=False, **common))
        else:
            results.append(run_problem(problem, config.mode, k, **common))
        log.info("%s k=%d done", config.mode, k)
    return results


def write_csv(results, path=None) -> str:
    """Write rows to ``path`` (if given) and return the CSV text."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow(r.row())
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def square_side(n):
    k = math.isqrt(n)
    return k if k * k == n else None
