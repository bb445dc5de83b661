"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N: PASS|FAIL ...`` line; the lines are also
collected into the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from screensig.cli import run
from screensig.farfield import reciprocity_defect
from screensig.mesh import DomainSpec, generate_mesh, refine_mesh
from screensig.oracle import SignConvention, annular_spectrum, impedance_disk_farfield, sector_spectrum
from screensig.scatter import PmlConfig, aux_farfield_matrix, screen_farfield_matrix
from screensig.signature import SweepConfig, fsharp, lsm_sweep, sensitivity_table
from screensig.steklov import SigmaProfile, perturb_first_order, solve_steklov

from conftest import ACCEPTANCE_LINES, K, N_DIRS
from test_oracle import ANNULAR_08, ANNULAR_09, SECTOR_TABLE


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def fem_sigma1(half_disk_mesh):
    return solve_steklov(half_disk_mesh, K, SigmaProfile.constant(1.0), 6).values


def test_criterion_01_sector_reference(tmp_path):
    t0 = time.perf_counter()
    vals = sector_spectrum(2.0, math.pi, 1.0, 0.0, 9, SignConvention.APPENDIX).values
    out = tmp_path / "o.csv"
    code = run(["oracle", "sector", "--k", "2", "--alpha", "pi", "--r2", "1", "--count", "9",
                "-o", str(out)])
    cli_vals = [float(line.split(",")[1]) for line in out.read_text().splitlines()[2:]]
    dt = time.perf_counter() - t0
    err = max(np.max(np.abs(vals - SECTOR_TABLE)), np.max(np.abs(np.array(cli_vals) - SECTOR_TABLE)))
    report(1, code == 0 and err < 5e-4 and dt < 1.0, f"max err {err:.2e}, {dt:.2f} s")


def test_criterion_02_annular_reference():
    t0 = time.perf_counter()
    errs = []
    for r1, row in ((0.8, ANNULAR_08), (0.9, ANNULAR_09)):
        vals = annular_spectrum(2.0, math.pi / 2, r1, 1.0, 0.0, 9, SignConvention.APPENDIX).values
        errs.append(np.max(np.abs(vals - row)))
    dt = time.perf_counter() - t0
    report(2, max(errs) < 5e-4 and dt < 1.0, f"max err {max(errs):.2e}, {dt:.2f} s")


def test_criterion_03_fem_oracle(half_disk):
    t0 = time.perf_counter()
    ref = np.sort(sector_spectrum(K, math.pi, 1.0, 0.0, 12, SignConvention.MAIN).values)[::-1][:6]
    coarse = generate_mesh(half_disk, 0.1)
    errs = []
    for mesh in (coarse, refine_mesh(coarse)):
        vals = solve_steklov(mesh, K, SigmaProfile.constant(0.0), 6).values
        errs.append(np.abs(vals - ref) / np.abs(ref))
    dt = time.perf_counter() - t0
    ok = np.max(errs[1]) < 1e-3 and np.all(errs[1] < errs[0]) and dt < 60
    report(3, ok, f"rel err {np.max(errs[0]):.1e} -> {np.max(errs[1]):.1e}, {dt:.1f} s")


def test_criterion_04_exact_shift(half_disk_mesh):
    t0 = time.perf_counter()
    v0 = solve_steklov(half_disk_mesh, K, SigmaProfile.constant(0.0), 6).values
    v1 = solve_steklov(half_disk_mesh, K, SigmaProfile.constant(1.0), 6).values
    dt = time.perf_counter() - t0
    err = np.max(np.abs(v1 - v0 - 1.0))
    report(4, err < 1e-9 and dt < 60, f"max |shift - 1| {err:.1e}, {dt:.1f} s")


def test_criterion_05_positivity(half_disk_mesh):
    quadrant = generate_mesh(DomainSpec.sector(math.pi / 2, 1.0), 0.05)
    tops = [solve_steklov(m, K, SigmaProfile.constant(1.0), 1).values[0]
            for m in (half_disk_mesh, quadrant)]
    report(5, min(tops) > 0, f"largest eigenvalues {tops[0]:.4f} (half disk), {tops[1]:.4f} (quadrant)")


def test_criterion_06_zero_screen(screen_sigma0):
    norm = float(np.linalg.norm(screen_sigma0.entries))
    report(6, norm < 1e-3 * N_DIRS, f"|A|_F = {norm:.1e} (bound {1e-3 * N_DIRS:.0e})")


def test_criterion_07_aux_disk(exterior_disk):
    t0 = time.perf_counter()
    F = aux_farfield_matrix(exterior_disk, K, 1.0, N_DIRS, PmlConfig.for_mesh(exterior_disk))
    ref = impedance_disk_farfield(K, 1.0, 1.0, N_DIRS)
    dt = time.perf_counter() - t0
    rel = np.linalg.norm(F.entries - ref.entries) / np.linalg.norm(ref.entries)
    rec = reciprocity_defect(F)
    report(7, rel < 0.02 and rec < 1e-2 and dt < 300,
           f"rel Frobenius {rel:.1e}, reciprocity {rec:.1e}, {dt:.1f} s")


def test_criterion_08_lsm_detection(half_disk, screen_sigma1, aux_provider, fem_sigma1):
    t0 = time.perf_counter()
    cfg = SweepConfig.for_domain(half_disk)
    curve = lsm_sweep(screen_sigma1, aux_provider, cfg)
    dt = time.perf_counter() - t0
    peaks = curve.peak_positions
    top3 = fem_sigma1[:3]
    covered = all(np.min(np.abs(peaks - e)) <= 0.1 for e in top3)
    spurious = [p for p in peaks if np.min(np.abs(fem_sigma1 - p)) > 0.3]
    report(8, covered and not spurious and dt < 1800,
           f"peaks {np.round(peaks, 3).tolist()}, FEM {np.round(fem_sigma1, 3).tolist()}, "
           f"sweep {dt:.1f} s")


def test_criterion_09_sensitivity(half_disk, half_disk_mesh, exterior_half_disk, pml, aux_provider):
    cfg = SweepConfig.for_domain(half_disk)
    positions = []
    for a in (0.0, 0.5, 1.0):
        sigma = SigmaProfile.angular(a, 0.0)
        vals = solve_steklov(half_disk_mesh, K, sigma, 6).values
        target = vals[np.argmin(np.abs(vals))]
        A = screen_farfield_matrix(exterior_half_disk, K, sigma, N_DIRS, pml)
        peaks = lsm_sweep(A, aux_provider, cfg).peak_positions
        near = peaks[np.abs(peaks - target) <= 0.1]
        positions.append(float(near[np.argmin(np.abs(near - target))]) if len(near) else math.nan)
    monotone = all(np.diff(positions) > 0)
    rows = sensitivity_table(half_disk_mesh, K, [1.0, 1.5, 2.0], [0.0], 6)
    dominant = True
    for a in (1.0, 1.5, 2.0):
        rel = {r.j: abs(r.rel_change) for r in rows if r.alpha == a}
        dominant &= all(rel[1] > rel[j] for j in range(2, 7))
    report(9, monotone and dominant,
           f"j=1 peak positions {np.round(positions, 4).tolist()}, j=1 dominates: {dominant}")


def test_criterion_10_fsharp_positivity(screen_sigma1):
    W = fsharp(screen_sigma1)
    vals = np.linalg.eigvalsh(W)
    ratio = vals.min() / np.linalg.norm(W, 2)
    report(10, ratio >= -1e-3, f"min eig / norm = {ratio:.1e}")


def test_criterion_11_perturbation(half_disk_mesh):
    s0 = SigmaProfile.constant(1.0)
    s1 = SigmaProfile.custom(lambda th: np.sin(th) ** 2, "sin2")
    lam0 = solve_steklov(half_disk_mesh, K, s0, 1).values[0]
    slope = perturb_first_order(half_disk_mesh, K, s0, s1)
    rem = []
    for eps in (0.4, 0.2, 0.1, 0.05):
        s = SigmaProfile.custom(lambda th, e=eps: 1.0 + e * np.sin(th) ** 2, f"1+{eps}sin2")
        lam = solve_steklov(half_disk_mesh, K, s, 1, check_admissible=False).values[0]
        rem.append(abs(lam - lam0 - eps * slope))
    ratios = np.array(rem[:-1]) / np.array(rem[1:])
    report(11, bool(np.all((ratios >= 3) & (ratios <= 5))),
           f"remainder ratios {np.round(ratios, 3).tolist()}")


def test_criterion_12_determinism(tmp_path):
    args = ["sweep", "--gamma", "1e-10", "--dirs", "60", "--zpoints", "20", "--seed", "1",
            "--step", "0.25"]
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = [run(args + ["-o", str(p)]) for p in outs]
    same = outs[0].read_bytes() == outs[1].read_bytes()
    report(12, codes == [0, 0] and same, f"exit codes {codes}, identical CSV: {same}")
