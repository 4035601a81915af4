"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL verdict (printed in the terminal summary) and
then asserts it, so a criterion that is not met shows up red.
"""
import itertools

import numpy as np
import pytest

from conftest import timed
from soras_lab import harness
from soras_lab.assembly import ROTATING, ZERO, Coefficients, assemble_local
from soras_lab.decomp import PUKind, build_decomposition, build_pu, pu_sum
from soras_lab.krylov import gmres_right
from soras_lab.linalg import jacobi_eig_sym, lanczos_extremes
from soras_lab.mesh import build_strip_mesh
from soras_lab.schwarz import build_preconditioner

pytestmark = pytest.mark.slow

REFERENCE = {
    "table1": [[(21, 21), (20, 17), (20, 15), (19, 14)],
               [(14, 14), (13, 11), (12, 11), (12, 10)],
               [(21, 21), (20, 18), (20, 15), (19, 14)],
               [(15, 15), (14, 12), (13, 11), (13, 11)]],
    "table2": [[(21, 21), (21, 19), (20, 17), (20, 15)],
               [(16, 16), (16, 14), (16, 13), (16, 13)],
               [(22, 22), (22, 19), (22, 17), (21, 16)],
               [(17, 17), (16, 15), (16, 14), (16, 13)]],
    "table3": [[(20, 20), (20, 18), (20, 16), (20, 15)],
               [(11, 11), (11, 12), (11, 12), (11, 12)],
               [(20, 20), (20, 18), (20, 16), (20, 15)],
               [(12, 12), (12, 12), (12, 13), (12, 12)]],
    # columns N = 2, 4, 8, 16
    "table4": [[(18, 15), (23, 20), (28, 24), (35, 28)],
               [(8, 8), (10, 12), (16, 16), (23, 24)],
               [(18, 15), (23, 20), (29, 25), (35, 29)],
               [(8, 8), (10, 12), (16, 17), (24, 25)]],
}
LAMBDA_MAX = {"PU1": [11.25, 10.61, 10.07, 9.60], "PU2": [11.25, 5.98, 4.01, 3.02]}

_HISTORIES = []


def run_grid(name):
    """``(grid[row][col] = (PU1, PU2) iterations, elapsed seconds)`` for a table preset."""
    cfgs = harness.table_grid(name)
    (rows, reports, ok), secs = timed(harness.run_cells, cfgs)
    assert ok, f"{name}: some cells failed"
    _HISTORIES.extend((name, r.residual_history) for r in reports)
    grid = [[None] * 4 for _ in range(4)]
    for cfg, rep in zip(cfgs, reports):
        i = harness.COEFF_ROWS.index((cfg.c0, cfg.nu))
        j = (harness.WEAK_SCALING_N.index(cfg.N) if name == "table4"
             else cfg.overlap_layers - 1)
        cell = list(grid[i][j] or (None, None))
        cell[0 if cfg.pu == "PU1" else 1] = rep.iterations
        grid[i][j] = tuple(cell)
    return grid, secs


def band_misses(grid, ref, band):
    return [(i, j, got, want) for i, j in itertools.product(range(4), range(4))
            for got, want in zip(grid[i][j], ref[i][j]) if abs(got - want) > band]


def fmt(grid):
    return " / ".join(" ".join(f"{a}({b})" for a, b in row) for row in grid)


@pytest.fixture(scope="module")
def grids():
    return {}


def grid_for(grids, name):
    if name not in grids:
        grids[name] = run_grid(name)
    return grids[name]


def test_c01_partition_of_unity_identity(verdicts):
    worst = 0.0
    for N, width, layers, kind in itertools.product([1, 2, 3, 5], [2, 4, 6, 8], [1, 2, 3, 4],
                                                   PUKind):
        if 2 * layers > width:
            continue
        mesh = build_strip_mesh(N, width)
        sds = build_decomposition(mesh, N, layers)
        pu = build_pu(kind, mesh, sds, layers)
        worst = max(worst, np.abs(pu_sum(mesh, sds, pu) - 1.0).max())
    ok = worst <= 1e-14
    verdicts.record("C01 partition of unity identity", ok, f"max deviation {worst:.1e} (<= 1e-14)")
    assert ok


def test_c02_pu_coincide_one_layer(verdicts):
    ok = True
    for N, ny in [(2, 4), (3, 6), (5, 60), (8, 10)]:
        mesh = build_strip_mesh(N, ny)
        sds = build_decomposition(mesh, N, 1)
        a, b = build_pu("PU1", mesh, sds, 1), build_pu("PU2", mesh, sds, 1)
        ok &= all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
    verdicts.record("C02 PU1 == PU2 at delta=2h", ok, "bitwise equal weights")
    assert ok


def test_c03_table5_spectrum(verdicts, table5):
    spectra, secs = table5
    lo = {pu: [spectra[(l, pu)].lambda_min for l in harness.OVERLAP_LAYERS] for pu in LAMBDA_MAX}
    hi = {pu: [spectra[(l, pu)].lambda_max for l in harness.OVERLAP_LAYERS] for pu in LAMBDA_MAX}
    checks = {
        "lambda_min 0.50+-0.02": all(abs(v - 0.5) <= 0.02 for p in lo for v in lo[p]),
        "lambda_max within 10%": all(abs(v - r) <= 0.1 * r for p in hi
                                     for v, r in zip(hi[p], LAMBDA_MAX[p])),
        "PU2 strictly decreasing": all(np.diff(hi["PU2"]) < 0),
        "PU1 decreasing, < 20% total": (all(np.diff(hi["PU1"]) <= 0)
                                        and hi["PU1"][0] - hi["PU1"][-1] < 0.2 * hi["PU1"][0]),
        "runtime <= 5 min": secs <= 300,
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    detail = (f"lambda_max PU1 {np.round(hi['PU1'], 2).tolist()} PU2 {np.round(hi['PU2'], 2).tolist()}"
              f", lambda_min {min(min(v) for v in lo.values()):.4f}..{max(max(v) for v in lo.values()):.4f}"
              f", {secs:.0f}s" + (f"; failed: {failed}" if failed else ""))
    verdicts.record("C03 table5 preset spectrum", ok, detail)
    assert ok, detail


def _table_verdict(verdicts, label, grid, secs, ref, extra, band=2, limit=180):
    misses = band_misses(grid, ref, band)
    checks = {f"cells within +-{band}": not misses, **extra, f"runtime <= {limit}s": secs <= limit}
    failed = [k for k, v in checks.items() if not v]
    ok = not failed
    detail = f"{fmt(grid)}, {secs:.0f}s" + (f"; failed: {failed}, misses {misses}" if failed else "")
    verdicts.record(label, ok, detail)
    return ok, detail


def test_c04_table1(verdicts, grids):
    grid, secs = grid_for(grids, "table1")
    pu2_nonincreasing = all(row[j + 1][1] <= row[j][1] for row in grid for j in range(3))
    pu1_tv = max(sum(abs(row[j + 1][0] - row[j][0]) for j in range(3)) for row in grid)
    ok, detail = _table_verdict(verdicts, "C04 table1 preset rotating", grid, secs,
                                REFERENCE["table1"],
                                {"PU2 nonincreasing in delta": pu2_nonincreasing,
                                 "PU1 total variation <= 2": pu1_tv <= 2})
    assert ok, detail


def test_c05_table2(verdicts, grids, caplog):
    with caplog.at_level("WARNING", logger="soras_lab.harness"):
        grid, secs = grid_for(grids, "table2")
    logged = "c_tilde > 0 violated" in caplog.text
    ok, detail = _table_verdict(verdicts, "C05 table2 preset a=[-x,-y]", grid, secs,
                                REFERENCE["table2"], {"c_tilde violation logged": logged})
    assert ok, detail


def test_c06_table3(verdicts, grids):
    grid, secs = grid_for(grids, "table3")
    spread = max(max(c[k] for c in grid[i]) - min(c[k] for c in grid[i])
                 for i in (1, 3) for k in (0, 1))
    ok, detail = _table_verdict(verdicts, "C06 table3 preset a=[1,0] SUPG", grid, secs,
                                REFERENCE["table3"], {"nu=0.001 spread <= 2": spread <= 2})
    assert ok, detail


def test_c07_table4_weak_scaling(verdicts, grids):
    grid, secs = grid_for(grids, "table4")
    monotone = all(row[j + 1][k] >= row[j][k] for row in grid for j in range(3) for k in (0, 1))
    ok, detail = _table_verdict(verdicts, "C07 table4 preset weak scaling", grid, secs,
                                REFERENCE["table4"], {"nondecreasing in N": monotone},
                                band=3, limit=600)
    assert ok, detail


def test_c08_fov_areas(verdicts):
    reports, secs = timed(lambda: {(l, pu): harness.fov_report(l, pu)
                                   for l in harness.OVERLAP_LAYERS for pu in ("PU1", "PU2")})
    area = {pu: [reports[(l, pu)].area for l in harness.OVERLAP_LAYERS] for pu in ("PU1", "PU2")}
    pu1 = area["PU1"]
    checks = {
        "PU2 strictly decreasing": all(np.diff(area["PU2"]) < 0),
        "PU2 2h area >= 1.25 x 8h area": area["PU2"][0] >= 1.25 * area["PU2"][-1],
        "PU1 areas within 5%": max(pu1) - min(pu1) <= 0.05 * min(pu1),
        "convex polygons": all(r.is_convex() for r in reports.values()),
        "runtime <= 10 min": secs <= 600,
    }
    failed = [k for k, v in checks.items() if not v]
    ok = not failed
    detail = (f"areas PU1 {np.round(pu1, 3).tolist()} PU2 {np.round(area['PU2'], 3).tolist()}"
              f", {secs:.0f}s" + (f"; failed: {failed}" if failed else ""))
    verdicts.record("C08 numerical range areas", ok, detail)
    assert ok, detail


def test_c09_oracle_suites(verdicts):
    def work():
        # dense expansion of the preconditioner
        mesh = build_strip_mesh(2, 6)
        coeffs = Coefficients(1.0, 1.0, ROTATING)
        sds = build_decomposition(mesh, 2, 2)
        pu = build_pu("PU2", mesh, sds, 2)
        Bs = [assemble_local(mesh, sd, coeffs) for sd in sds]
        P = build_preconditioner(sds, pu, Bs, n=mesh.n_nodes)
        n = mesh.n_nodes
        M = np.zeros((n, n))
        for sd, d, B in zip(sds, pu.weights, Bs):
            R = np.zeros((sd.n, n))
            R[np.arange(sd.n), sd.nodes] = 1.0
            M += R.T @ np.diag(d) @ np.linalg.inv(B.toarray()) @ np.diag(d) @ R
        rng = np.random.default_rng(9)
        e1 = max(np.linalg.norm(P(v) - M @ v) / np.linalg.norm(M @ v)
                 for v in rng.standard_normal((20, n)))
        # GMRES against a dense solve
        A = rng.standard_normal((30, 30)) + 10 * np.eye(30)
        b = rng.standard_normal(30)
        x, _ = gmres_right(A, None, b, tol=1e-12)
        ref = np.linalg.solve(A, b)
        e2 = np.linalg.norm(x - ref) / np.linalg.norm(ref)
        # Lanczos against Jacobi
        e3 = 0.0
        for size in (60, 150):
            S = rng.standard_normal((size, size))
            S = S + S.T
            w, _ = jacobi_eig_sym(S)
            lo, hi = lanczos_extremes(lambda v: S @ v, size, k=size, tol=1e-12)
            e3 = max(e3, abs(lo - w[0]), abs(hi - w[-1]))
        return e1, e2, e3

    (e1, e2, e3), secs = timed(work)
    ok = e1 <= 1e-10 and e2 <= 1e-8 and e3 <= 1e-7 and secs < 60
    verdicts.record("C09 oracle suites", ok, f"preconditioner {e1:.1e}, GMRES {e2:.1e}, "
                                             f"Lanczos {e3:.1e}, {secs:.1f}s")
    assert ok


def test_c10_degenerate_contracts(verdicts):
    rep, _ = harness.run_experiment(harness.ExperimentConfig(N=1, ny=20))
    mesh = build_strip_mesh(2, 10)
    coeffs = Coefficients(1.0, 1.0, ZERO)
    sds = build_decomposition(mesh, 2, 2)
    P = build_preconditioner(sds, build_pu("PU2", mesh, sds, 2),
                             [assemble_local(mesh, sd, coeffs) for sd in sds], n=mesh.n_nodes)
    M = P.to_dense()
    sym = np.abs(M - M.T).max() / np.abs(M).max()
    # every GMRES history produced by this module's table runs, plus a fresh one
    extra, _ = harness.run_experiment(harness.ExperimentConfig(N=2, ny=10, overlap_layers=2))
    histories = [h for _, h in _HISTORIES] + [extra.residual_history, rep.residual_history]
    monotone = all(np.all(np.diff(h) <= 1e-14) for h in histories)
    ok = rep.iterations == 1 and sym <= 1e-11 and monotone
    verdicts.record("C10 degenerate contracts", ok,
                    f"N=1 iterations {rep.iterations}, SORAS symmetry defect {sym:.1e}, "
                    f"{len(histories)} monotone histories: {monotone}")
    assert ok
