"""Two-mesh error estimation, convergence rates, and the Allen-Cahn test tables.

Two-mesh convention (the comparison is restricted to coincident nodes, no
interpolation): a temporal study doubles M at fixed N; a spatial study
doubles N and re-ties M to the study's N-rule.  Graded meshes with a common
r nest under M-doubling, uniform spatial grids nest under N-doubling.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .mesh import TemporalMesh, build_graded
from .nonlinearity import builtin
from .pde import Problem, SolutionHistory, SolverConfig, solve_pde
from .scalar import ScalarTrajectory
from .spatial import BoundarySpec, CoefficientField, Grid

__all__ = [
    "ErrorReport",
    "two_mesh_error",
    "exact_error",
    "rate",
    "TableSpec",
    "table_run",
    "allen_cahn_problem",
    "rows_to_csv",
    "BudgetError",
]

CSV_HEADER = ("alpha", "r", "M", "N", "study", "err", "rate")


class BudgetError(RuntimeError):
    pass


@dataclass
class ErrorReport:
    alpha: float
    r: float | None
    M: int
    N: int | None
    err_final: float
    err_global: float
    mode: str  # 'two-mesh' | 'exact'
    rate_final: float | None = None
    rate_global: float | None = None


def rate(err_coarse: float, err_fine: float) -> float:
    """log2 ratio of successive errors."""
    if not (err_coarse > 0 and err_fine > 0):
        raise ValueError("rates require positive errors")
    return math.log2(err_coarse / err_fine)


def _nesting_stride(coarse: TemporalMesh, fine: TemporalMesh) -> int:
    if fine.M % coarse.M != 0:
        raise ValueError("fine temporal mesh must refine the coarse one")
    k = fine.M // coarse.M
    if not np.allclose(fine.nodes[::k], coarse.nodes, rtol=1e-12, atol=1e-14):
        raise ValueError("temporal meshes do not nest at coincident nodes")
    return k


def _spatial_stride(coarse: Grid, fine: Grid) -> int:
    if coarse.X != fine.X or coarse.d != fine.d:
        raise ValueError("grids live on different domains")
    if fine.N % coarse.N != 0:
        raise ValueError("fine grid must refine the coarse one")
    return fine.N // coarse.N


def _restrict_field(field_flat: np.ndarray, fine: Grid, stride: int) -> np.ndarray:
    f = field_flat.reshape(fine.shape)
    sl = (slice(None, None, stride),) * fine.d
    return f[sl].ravel()


def two_mesh_error(run_coarse, run_fine) -> ErrorReport:
    """Max nodal difference at coincident (t, x); err_final at t = T, err_global over all levels."""
    if isinstance(run_coarse, ScalarTrajectory):
        k = _nesting_stride(run_coarse.mesh, run_fine.mesh)
        diffs = np.abs(run_coarse.values - run_fine.values[::k])
        return ErrorReport(
            alpha=math.nan, r=run_coarse.mesh.r, M=run_coarse.mesh.M, N=None,
            err_final=float(diffs[-1]), err_global=float(diffs.max()), mode="two-mesh",
        )
    ck: SolutionHistory = run_coarse
    fk: SolutionHistory = run_fine
    kt = _nesting_stride(ck.mesh, fk.mesh)
    ks = _spatial_stride(ck.grid, fk.grid)
    diffs = np.empty(ck.mesh.M + 1)
    for m in range(ck.mesh.M + 1):
        fine_field = fk.fields[m * kt]
        if ks > 1:
            fine_field = _restrict_field(fine_field, fk.grid, ks)
        diffs[m] = np.max(np.abs(ck.fields[m] - fine_field))
    return ErrorReport(
        alpha=math.nan, r=ck.mesh.r, M=ck.mesh.M, N=ck.grid.N,
        err_final=float(diffs[-1]), err_global=float(diffs.max()), mode="two-mesh",
    )


def exact_error(run, exact: Callable) -> ErrorReport:
    """Errors against a supplied truth: exact(t) for scalar runs, exact(points, t) for PDE runs."""
    if isinstance(run, ScalarTrajectory):
        truth = np.array([exact(t) for t in run.mesh.nodes])
        diffs = np.abs(run.values - truth)
        return ErrorReport(
            alpha=math.nan, r=run.mesh.r, M=run.mesh.M, N=None,
            err_final=float(diffs[-1]), err_global=float(diffs.max()), mode="exact",
        )
    pts = run.grid.points()
    diffs = np.empty(run.mesh.M + 1)
    for m, t in enumerate(run.mesh.nodes):
        diffs[m] = np.max(np.abs(run.fields[m] - exact(pts, t)))
    return ErrorReport(
        alpha=math.nan, r=run.mesh.r, M=run.mesh.M, N=run.grid.N,
        err_final=float(diffs[-1]), err_global=float(diffs.max()), mode="exact",
    )


def allen_cahn_problem(alpha: float) -> Problem:
    """The 2D Allen-Cahn benchmark: f = (u^3 - u)/alpha on (0, pi)^2,
    u0 = (2/5)(2y - x^2) sin x sin y, homogeneous Dirichlet."""

    def u0(pts):
        x, y = pts[:, 0], pts[:, 1]
        return 0.4 * (2.0 * y - x**2) * np.sin(x) * np.sin(y)

    return Problem(
        coeffs=CoefficientField(a=(1.0, 1.0)),
        bc=BoundarySpec.dirichlet0(2),
        f=builtin("allen_cahn", alpha=alpha),
        u0=u0,
        alpha=alpha,
    )


_N_RULES = {
    "N=2M": lambda M: 2 * M,
    "M=N^2": lambda M: int(round(math.isqrt(M))),
    "N=M/2": lambda M: M // 2,
    "N=M/4": lambda M: M // 4,
    "N=M/128": lambda M: M // 128,
}


@dataclass
class TableSpec:
    alphas: tuple
    rs: Callable | tuple  # tuple of floats, or callable alpha -> tuple
    Ms: tuple
    n_rule: str  # key of _N_RULES or 'fixed'
    study: str  # 'time' | 'space' | 'global'
    fixed_N: int | None = None
    T: float = 1.0
    problem_factory: Callable = allen_cahn_problem
    solver: SolverConfig | None = None
    max_cost: float | None = 5e13  # ~ sum of M^2 * n_unknown over runs

    def rs_for(self, alpha: float) -> tuple:
        return tuple(self.rs(alpha)) if callable(self.rs) else tuple(self.rs)

    def n_for(self, M: int) -> int:
        if self.n_rule == "fixed":
            if self.fixed_N is None:
                raise ValueError("fixed N-rule needs fixed_N")
            return self.fixed_N
        try:
            return _N_RULES[self.n_rule](M)
        except KeyError:
            raise ValueError(f"unknown N-rule {self.n_rule!r}") from None


def _estimate_cost(spec: TableSpec) -> float:
    total = 0.0
    for alpha in spec.alphas:
        for _r in spec.rs_for(alpha):
            for M in spec.Ms:
                N = spec.n_for(M)
                n = max(1, (N - 1) ** 2)
                total += (M**2 + 4 * M**2) * n  # coarse + its fine companion
                if spec.study in ("space",):
                    total += (4 * M) ** 2 * max(1, (2 * N - 1) ** 2)
    return total


def table_run(spec: TableSpec, workers: int | None = None) -> list[dict]:
    """Run the convergence study and return CSV-ready rows.

    Temporal/global studies double M at fixed N; spatial studies double N
    with M re-tied by the N-rule.  Independent (alpha, r, M, N) solves run
    on a thread pool sized by FRAXOLVE_THREADS (default 1, deterministic
    either way: each run is independent and rows are emitted in spec order).
    """
    if spec.max_cost is not None:
        est = _estimate_cost(spec)
        if est > spec.max_cost:
            raise BudgetError(
                f"estimated cost {est:.3g} exceeds budget {spec.max_cost:.3g}"
            )
    if workers is None:
        workers = int(os.environ.get("FRAXOLVE_THREADS", "1"))

    # collect the distinct (alpha, r, M, N) runs needed
    jobs: dict[tuple, tuple] = {}
    for alpha in spec.alphas:
        for r in spec.rs_for(alpha):
            for M in spec.Ms:
                N = spec.n_for(M)
                if spec.study == "space":
                    M_f, N_f = 4 * M if spec.n_rule == "M=N^2" else M, 2 * N
                else:
                    M_f, N_f = 2 * M, N
                for MM, NN in ((M, N), (M_f, N_f)):
                    jobs.setdefault((alpha, r, MM, NN), (alpha, r, MM, NN))

    def run_one(key):
        alpha, r, M, N = key
        problem = spec.problem_factory(alpha)
        mesh = build_graded(M, spec.T, r)
        grid = Grid(d=2, N=N, X=math.pi)
        return solve_pde(problem, mesh, grid, spec.solver)

    results: dict[tuple, SolutionHistory] = {}
    keys = list(jobs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for key, sol in zip(keys, ex.map(run_one, keys)):
                results[key] = sol
    else:
        for key in keys:
            results[key] = run_one(key)

    rows = []
    for alpha in spec.alphas:
        for r in spec.rs_for(alpha):
            prev_err = None
            for M in spec.Ms:
                N = spec.n_for(M)
                if spec.study == "space":
                    M_f, N_f = 4 * M if spec.n_rule == "M=N^2" else M, 2 * N
                else:
                    M_f, N_f = 2 * M, N
                rep = two_mesh_error(results[(alpha, r, M, N)], results[(alpha, r, M_f, N_f)])
                err = rep.err_global if spec.study == "global" else rep.err_final
                row = {
                    "alpha": alpha, "r": r, "M": M, "N": N,
                    "study": spec.study, "err": err,
                    "rate": rate(prev_err, err) if prev_err is not None else None,
                }
                rows.append(row)
                prev_err = err
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(
            [
                f"{row['alpha']:g}",
                f"{row['r']:g}",
                row["M"],
                row["N"] if row["N"] is not None else "",
                row["study"],
                f"{row['err']:.6e}",
                f"{row['rate']:.6e}" if row["rate"] is not None else "",
            ]
        )
    return buf.getvalue()
