"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single PASS/FAIL line; the lines are repeated in the
terminal summary.
"""
import time

import numpy as np
import pytest

from bddc import build_constraints, poisson_problem, setup_bddc
from bddc.decomposition import prolong, restrict
from bddc.harness.study import ExperimentConfig, run_problem, run_study
from bddc.sparse import CompressedSparseMatrix, lu_factor, lu_solve, solve_residual, spmv
from oracles import DenseBddc, saddle_family

pytestmark = pytest.mark.acceptance

RUN1_K = (2, 3, 4, 5, 6, 8)
RUN1_M = 32
TOL = 1e-8


@pytest.fixture(scope="module")
def run1():
    t0 = time.perf_counter()
    res = run_study(ExperimentConfig("compare", list(RUN1_K), local_cells=RUN1_M, tolerance=TOL,
                                     workers=1, seed=1), monitor=True)
    elapsed = time.perf_counter() - t0
    bddc = [r for r in res if r.mode == "compare-bddc"]
    cg = [r for r in res if r.mode == "compare-cg"]
    return bddc, cg, elapsed


@pytest.fixture(scope="module")
def run2():
    t0 = time.perf_counter()
    p = poisson_problem(2, 4)
    cons = build_constraints(p.decomposition)
    M = setup_bddc(p.A, p.local_matrices, p.decomposition, cons, monitor=True)
    D = M.densify()
    O = DenseBddc(p, cons).operator
    return M, D, O, time.perf_counter() - t0


@pytest.fixture(scope="module")
def run3():
    t0 = time.perf_counter()
    small = {}
    for k in (2, 3):
        p = poisson_problem(k, 4)
        M = setup_bddc(p.A, p.local_matrices, p.decomposition, monitor=True)
        small[k] = (M, M.densify())
    p = poisson_problem(6, 16)
    M = setup_bddc(p.A, p.local_matrices, p.decomposition, monitor=True)
    rng = np.random.default_rng(1)
    gaps = []
    for _ in range(20):
        r, s = rng.standard_normal((2, M.n))
        Mr, Ms = M.apply(r), M.apply(s)
        gaps.append(abs(s @ Mr - r @ Ms) / (np.linalg.norm(s) * np.linalg.norm(Mr)))
    return small, M, max(gaps), time.perf_counter() - t0


def test_criterion_1_iteration_flatness(run1, acceptance_report):
    bddc, cg, elapsed = run1
    its = [r.iterations for r in bddc]
    plain = [r.iterations for r in cg]
    converged = all(r.ok for r in bddc + cg)
    flat = max(its) - min(its) <= 4
    small = max(its) <= 5
    growing = all(a < b for a, b in zip(plain, plain[1:]))
    ratio = plain[-1] / its[-1]
    ok = converged and flat and small and growing and ratio >= 10 and elapsed < 120
    acceptance_report(1, "iteration flatness", ok,
                      f"BDDC {its}, plain CG {plain}, ratio at k=8 {ratio:.1f}, "
                      f"flat={flat}, <=5={small}, {elapsed:.1f}s")
    assert converged
    assert flat, its
    assert small, f"BDDC iteration counts {its} exceed 5"
    assert growing, plain
    assert ratio >= 10
    assert elapsed < 120


def test_criterion_2_oracle_equivalence(run2, acceptance_report):
    _, D, O, elapsed = run2
    gap = np.abs(D - O).max()
    ok = gap <= 1e-9 and elapsed < 5
    acceptance_report(2, "oracle equivalence", ok, f"max gap {gap:.2e}, {elapsed:.2f}s")
    assert gap <= 1e-9
    assert elapsed < 5


def test_criterion_3_symmetry_and_definiteness(run3, acceptance_report):
    small, _, bilinear_gap, elapsed = run3
    p = poisson_problem(2, 4)
    S = setup_bddc(p.A, p.local_matrices, p.decomposition, variant="symmetric").densify()
    asym = {k: np.abs(D - D.T).max() for k, (_, D) in small.items()}
    mineig = {k: np.linalg.eigvalsh(0.5 * (D + D.T))[0] for k, (_, D) in small.items()}
    symmetric = all(v <= 1e-8 for v in asym.values())
    definite = all(v > 0 for v in mineig.values())
    bilinear = bilinear_gap <= 1e-8
    ok = symmetric and definite and bilinear and elapsed < 30
    acceptance_report(3, "symmetry and definiteness", ok,
                      "max|M-M^T| " + ", ".join(f"k={k}: {v:.2e}" for k, v in asym.items())
                      + "; min eig of sym part " + ", ".join(f"k={k}: {v:.3f}" for k, v in mineig.items())
                      + f"; bilinear gap k=6 {bilinear_gap:.2e}; {elapsed:.1f}s"
                      + f"; symmetric variant k=2 {np.abs(S - S.T).max():.1e}")
    assert definite
    assert symmetric, asym
    assert bilinear, bilinear_gap
    assert elapsed < 30


def test_criterion_4_saddle_point_residuals(run1, run2, run3, acceptance_report):
    bddc, _, _ = run1
    small, big, _, _ = run3
    setups = [r.setup_residuals for r in bddc]
    setups += [M.setup_residuals() for M in [run2[0], big] + [m for m, _ in small.values()]]
    cons = max(s[0] for s in setups)
    energy = max(s[1] for s in setups)
    ok = cons <= 1e-10 and energy <= 1e-10
    acceptance_report(4, "saddle-point residuals", ok,
                      f"{len(setups)} runs, max|C Phi - I| {cons:.2e}, "
                      f"max|A Phi + C^T Lambda|/|A| {energy:.2e}")
    assert cons <= 1e-10
    assert energy <= 1e-10


def test_criterion_5_direct_solver_gate(run1, run2, run3, acceptance_report):
    bddc, _, _ = run1
    small, big, _, _ = run3
    worst = max(max(r.max_solve_residual, r.setup_residuals[2]) for r in bddc)
    for M in [run2[0], big] + [m for m, _ in small.values()]:
        worst = max(worst, M.max_solve_residual, M.setup_residuals()[2])
    rng = np.random.default_rng(5)
    family = 0.0
    for K in saddle_family(100, seed=13):
        A = CompressedSparseMatrix.from_dense(K)
        b = rng.standard_normal(K.shape[0])
        family = max(family, solve_residual(A, lu_solve(lu_factor(A), b), b))
    ok = worst <= 1e-10 and family <= 1e-10
    acceptance_report(5, "direct solver gate", ok,
                      f"runs 1-3 worst {worst:.2e}, 100-sample family worst {family:.2e}")
    assert worst <= 1e-10
    assert family <= 1e-10


def test_criterion_6_splitting_and_partition_of_unity(acceptance_report):
    rng = np.random.default_rng(6)
    split = unity = 0.0
    for k in RUN1_K:
        p = poisson_problem(k, RUN1_M)
        dec = p.decomposition
        x = rng.standard_normal(dec.n_global)
        Ax = np.zeros_like(x)
        Wx = np.zeros_like(x)
        for i in range(dec.n_subdomains):
            xi = restrict(dec, i, x)
            prolong(dec, i, spmv(p.local_matrices[i], xi), out=Ax)
            prolong(dec, i, dec.weights[i] * xi, out=Wx)
        split = max(split, np.abs(spmv(p.A, x) - Ax).max())
        unity = max(unity, np.abs(Wx - x).max())
    ok = split <= 1e-13 and unity <= 1e-13
    acceptance_report(6, "splitting and partition of unity", ok,
                      f"k={list(RUN1_K)}, m={RUN1_M}: splitting {split:.2e}, unity {unity:.2e}")
    assert split <= 1e-13
    assert unity <= 1e-13


def test_criterion_7_discretization_order(acceptance_report):
    t0 = time.perf_counter()
    errors = []
    for m in (4, 8, 16, 32):
        p = poisson_problem(2, m)
        res = run_problem(p, "single", 2, tolerance=1e-12)
        assert res.ok
        errors.append(np.abs(res.solution - p.exact).max())
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    elapsed = time.perf_counter() - t0
    ok = all(3.5 <= q <= 4.5 for q in ratios) and elapsed < 30
    acceptance_report(7, "second-order discretization", ok,
                      "global cells 8..64, error ratios " + ", ".join(f"{q:.3f}" for q in ratios)
                      + f", {elapsed:.1f}s")
    assert all(3.5 <= q <= 4.5 for q in ratios), ratios
    assert elapsed < 30


def test_criterion_8_determinism(run1, acceptance_report):
    bddc, _, _ = run1
    again = run_study(ExperimentConfig("weak", list(RUN1_K), local_cells=RUN1_M, tolerance=TOL,
                                       workers=4, seed=1))
    same_its = [a.iterations == b.iterations for a, b in zip(bddc, again)]
    same_hist = [a.history == b.history for a, b in zip(bddc, again)]
    ok = all(same_its) and all(same_hist)
    acceptance_report(8, "determinism across worker counts", ok,
                      f"workers 1 vs 4, identical iterations {sum(same_its)}/{len(same_its)}, "
                      f"identical histories {sum(same_hist)}/{len(same_hist)}")
    assert all(same_its)
    assert all(same_hist)
