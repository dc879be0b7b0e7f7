import csv
import io
import math

import numpy as np
import pytest

from bddc.errors import BundleError
from bddc.harness.bundle import export_bundle, ingest_bundle
from bddc.harness.cli import main
from bddc.harness.study import CSV_COLUMNS, ExperimentConfig, run_problem, run_study, write_csv
from bddc.problem import poisson_problem
from bddc.sparse import read_matrix_market, write_matrix_market

HEADER = ("mode,k,n_subdomains,global_dofs,coarse_dim,setup_seconds,solve_seconds,"
          "iterations,final_relative_residual,condition_estimate,error")


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_csv_header():
    assert ",".join(CSV_COLUMNS) == HEADER
    assert write_csv([]).splitlines() == [HEADER]


def test_compare_mode_rows():
    res = run_study(ExperimentConfig("compare", [2, 3, 4], local_cells=8))
    rows = _rows(write_csv(res))
    assert len(rows) == 6
    assert [r["mode"] for r in rows] == ["compare-bddc", "compare-cg"] * 3
    for bddc, cg in zip(rows[::2], rows[1::2]):
        assert bddc["global_dofs"] == cg["global_dofs"]
        assert int(bddc["iterations"]) < int(cg["iterations"])
        assert cg["coarse_dim"] == ""
        assert bddc["error"] == cg["error"] == ""


def test_weak_mode_sizes():
    m = 4
    rows = _rows(write_csv(run_study(ExperimentConfig("weak", [2, 3], local_cells=m))))
    for r in rows:
        k = int(r["k"])
        assert int(r["global_dofs"]) == (k * m - 1) ** 2
        assert int(r["n_subdomains"]) == k * k
        assert int(r["coarse_dim"]) == (k - 1) ** 2 + 2 * k * (k - 1)
        assert float(r["final_relative_residual"]) <= 1e-8


def test_strong_mode_fixed_mesh():
    rows = _rows(write_csv(run_study(ExperimentConfig("strong", [2, 4], local_cells=4))))
    assert {r["global_dofs"] for r in rows} == {str(15 ** 2)}


def test_strong_mode_indivisible_reports_error():
    res = run_study(ExperimentConfig("strong", [2, 3], local_cells=4, global_cells=8))
    assert res[0].ok and not res[1].ok
    assert "divisible" in res[1].error


def test_config_validation():
    for bad in (dict(mode="sideways", k_list=[2]), dict(mode="weak", k_list=[]),
                dict(mode="weak", k_list=[1]), dict(mode="weak", k_list=[2], workers=0)):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)


def test_non_convergence_is_reported():
    p = poisson_problem(2, 8)
    res = run_problem(p, "single", 2, tolerance=1e-14, max_iterations=2)
    assert not res.ok and not res.converged
    assert "not converged" in res.row()["error"]


def test_reproducible_and_worker_independent():
    p = poisson_problem(3, 6, rhs="random", seed=4)
    a = run_problem(p, "single", 3, workers=1)
    b = run_problem(p, "single", 3, workers=1)
    c = run_problem(p, "single", 3, workers=3)
    for other in (b, c):
        assert other.iterations == a.iterations
        assert other.history == a.history
        np.testing.assert_array_equal(other.solution, a.solution)


def test_bundle_round_trip(tmp_path):
    p = poisson_problem(2, 4)
    manifest = export_bundle(p, tmp_path / "b")
    text = manifest.read_text()
    assert sum(line.startswith("subdomain ") for line in text.splitlines()) == 4
    q = ingest_bundle(manifest)
    assert q.A.nnz == p.A.nnz
    np.testing.assert_array_equal(q.A.to_dense(), p.A.to_dense())
    np.testing.assert_array_equal(q.rhs, p.rhs)
    for a, b in zip(p.local_matrices, q.local_matrices):
        assert a.nnz == b.nnz
        np.testing.assert_array_equal(a.to_dense(), b.to_dense())
    ra = run_problem(p, "single", 2)
    rb = run_problem(q, "ingest", 2)
    assert ra.iterations == rb.iterations
    assert ra.history == rb.history


def test_bundle_accepts_unordered_maps(tmp_path):
    p = poisson_problem(2, 4)
    root = tmp_path / "b"
    export_bundle(p, root)
    A = read_matrix_market(root / "sub0002.mtx")
    dofs = np.loadtxt(root / "sub0002.map", dtype=np.int64)
    perm = np.random.default_rng(3).permutation(dofs.size)
    write_matrix_market(root / "sub0002.mtx", A.submatrix(perm, perm))
    (root / "sub0002.map").write_text("".join(f"{g}\n" for g in dofs[perm]))
    q = ingest_bundle(root)
    np.testing.assert_array_equal(q.A.to_dense(), p.A.to_dense())
    assert run_problem(q, "ingest", 2).iterations == run_problem(p, "single", 2).iterations


def test_bundle_uncovered_dof(tmp_path):
    p = poisson_problem(2, 4)
    root = tmp_path / "b"
    export_bundle(p, root)
    dofs = np.loadtxt(root / "sub0000.map", dtype=np.int64)
    A = read_matrix_market(root / "sub0000.mtx")
    keep = np.arange(1, dofs.size)
    write_matrix_market(root / "sub0000.mtx", A.submatrix(keep, keep))
    (root / "sub0000.map").write_text("".join(f"{g}\n" for g in dofs[1:]))
    with pytest.raises(BundleError) as err:
        ingest_bundle(root / "manifest.txt")
    assert err.value.dof == int(dofs[0])
    assert f"dof {int(dofs[0])}" in str(err.value)


def test_bundle_shared_dof_marked_interior(tmp_path):
    p = poisson_problem(2, 4)
    root = tmp_path / "b"
    export_bundle(p, root)
    g = int(np.flatnonzero(p.decomposition.multiplicity == 2)[0])
    lines = (root / "classes.txt").read_text().splitlines()
    lines[g] = "interior"
    (root / "classes.txt").write_text("\n".join(lines) + "\n")
    with pytest.raises(BundleError) as err:
        ingest_bundle(root)
    assert err.value.dof == g


def test_bundle_missing_file(tmp_path):
    p = poisson_problem(2, 4)
    root = tmp_path / "b"
    export_bundle(p, root)
    (root / "sub0003.mtx").unlink()
    with pytest.raises(BundleError, match="sub0003.mtx"):
        ingest_bundle(root)
    with pytest.raises(BundleError):
        ingest_bundle(tmp_path / "nowhere" / "manifest.txt")


def test_bundle_size_mismatch(tmp_path):
    p = poisson_problem(2, 4)
    root = tmp_path / "b"
    export_bundle(p, root)
    (root / "rhs.txt").write_text("1.0\n")
    with pytest.raises(BundleError, match="rhs"):
        ingest_bundle(root)


def test_cli_run(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = main(["run", "--mode", "weak", "--k", "2,3", "--local-cells", "4",
                 "--tol", "1e-8", "--workers", "2", "--seed", "1", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0] == HEADER
    assert len(_rows(text)) == 2


def test_cli_stdout_and_failure_exit(capsys):
    code = main(["run", "--mode", "single", "--k", "2", "--local-cells", "8",
                 "--tol", "1e-14", "--max-iterations", "2"])
    assert code == 1
    assert capsys.readouterr().out.splitlines()[0] == HEADER


def test_cli_export_ingest(tmp_path, capsys):
    d = tmp_path / "bundle"
    assert main(["export", "--k", "2", "--local-cells", "4", "--out", str(d)]) == 0
    out = tmp_path / "r.csv"
    assert main(["ingest", "--bundle", str(d / "manifest.txt"), "--tol", "1e-8",
                 "--out", str(out)]) == 0
    (row,) = _rows(out.read_text())
    assert row["mode"] == "ingest" and row["n_subdomains"] == "4"
    assert float(row["final_relative_residual"]) <= 1e-8


def test_cli_bad_input(tmp_path, capsys):
    assert main(["ingest", "--bundle", str(tmp_path / "missing.txt")]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["run", "--k", "two"])


def test_condition_estimate_column_is_finite():
    (res,) = run_study(ExperimentConfig("single", [2], local_cells=8))
    kappa = float(res.row()["condition_estimate"])
    assert math.isfinite(kappa) and kappa >= 1.0


def test_single_mode_bddc_needs_fewer_iterations_than_plain_cg():
    p = poisson_problem(4, 32)
    bddc = run_problem(p, "single", 4)
    plain = run_problem(p, "single", 4, preconditioned=False)
    assert bddc.ok and plain.ok
    assert bddc.iterations <= plain.iterations
