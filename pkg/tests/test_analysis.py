import numpy as np
import pytest

from sfvem.analysis import (AUDIT_HEADER, CONVERGENCE_HEADER,
                            ConvergenceRecord, audit_catalog, audit_row,
                            convergence_row, convergence_study, error_norms,
                            fit_rates, jacobi_singular_values, spectral_audit,
                            unit_diffusion_matrix, write_audit_csv,
                            write_convergence_csv)
from sfvem.element import ell_rule
from sfvem.mesh import CatalogPolygon, catalog_polygons, generate_distorted_grid
from sfvem.poly import (Poly2, build_benchmark_coefficients, bubble_problem,
                        manufactured_problem)
from sfvem.system import DiscreteSolution, assemble, solve

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
RNG = np.random.default_rng(41)


def interpolant_solution(mesh, func):
    values = func(mesh.vertices)
    return DiscreteSolution(values, mesh, np.ones(mesh.n_cells, dtype=int),
                            "sfvem", 0.0)


# ---------------------------------------------------------------------------
# Jacobi SVD


@pytest.mark.parametrize("n", [2, 5, 11, 20])
def test_jacobi_matches_lapack(n):
    A = RNG.standard_normal((n, n))
    got = jacobi_singular_values(A)
    want = np.linalg.svd(A, compute_uv=False)
    assert np.all(np.diff(got) <= 0)  # descending
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * want[0])


def test_jacobi_on_rank_deficient_matrix():
    A = np.outer(np.arange(1.0, 5.0), np.ones(4))
    got = jacobi_singular_values(A)
    want = np.linalg.svd(A, compute_uv=False)
    np.testing.assert_allclose(got, want, atol=1e-13 * want[0])
    assert got[-1] <= 1e-14 * got[0]


def test_jacobi_identity():
    np.testing.assert_allclose(jacobi_singular_values(np.eye(6)), np.ones(6),
                               atol=1e-15)


# ---------------------------------------------------------------------------
# spectral audit


def test_audit_kernel_always_present():
    for p in catalog_polygons()[::4]:
        audit = spectral_audit(p, ell_rule(p.n_vertices))
        assert audit.sigma_min <= 1e-11 * audit.sigma_max, p.name


def test_audit_regular_pentagon_detached():
    pentagon = next(p for p in catalog_polygons()
                    if p.name == "regular" and p.n_vertices == 5)
    audit = spectral_audit(pentagon, 1)
    assert audit.ell == 1
    assert audit.sigma_r_over_max >= 1e-8


def test_audit_unit_square_cross_oracle():
    # symmetric PSD matrix: singular values equal eigenvalue magnitudes
    poly = CatalogPolygon("unit-square", SQUARE)
    audit = spectral_audit(poly, 1)
    A = unit_diffusion_matrix(SQUARE, 1)
    eig = np.sort(np.abs(np.linalg.eigvalsh(A)))[::-1]
    np.testing.assert_allclose(audit.singular_values, eig, rtol=1e-12,
                               atol=1e-12 * eig[0])
    assert audit.sigma_r == pytest.approx(eig[-2], rel=1e-12)


def test_audit_catalog_rule_pairs_and_margins():
    audits = audit_catalog()
    assert len(audits) == 18
    assert [(a.n_vertices, a.ell) for a in audits] == [
        (n, ell_rule(n)) for n in range(3, 21)]
    for a in audits:
        assert a.sigma_min <= 1e-11 * a.sigma_max, a.name
        assert a.sigma_r_over_max >= 1e-8, a.name
        assert np.all(a.singular_values >= 0)
        assert np.all(np.diff(a.singular_values) <= 0)


def test_audit_exploratory_offset_reports_without_asserting():
    audits = audit_catalog(ell_offset=-1)
    assert len(audits) == 18
    for a in audits:
        assert np.isfinite(a.sigma_r_over_max)
    # at least one larger polygon actually collapses below the rule
    worst = min(a.sigma_r_over_max for a in audits if a.n_vertices >= 6)
    assert worst < 1e-8


def test_per_dof_projection_energy_monotone_in_ell():
    # diag entries of P^T G P are the projected energies of the hat
    # functions; enlarging the harmonic space can only increase them
    for p in catalog_polygons()[::5]:
        prev = None
        for ell in range(0, 7):
            diag = np.diag(unit_diffusion_matrix(p.vertices, ell))
            if prev is not None:
                assert np.all(diag >= prev - 1e-12 * max(1.0, diag.max())), p.name
            prev = diag


# ---------------------------------------------------------------------------
# error norms


def test_error_norms_linear_interpolant_exact():
    u = Poly2([[0.25], [2.0]]) + Poly2([[0.0, -1.5]])  # 0.25 + 2x - 1.5y
    zero = Poly2.zero()
    spec = manufactured_problem(np.eye(2), (zero, zero), zero, u)
    mesh = generate_distorted_grid(4, delta=0.3, seed=6)
    sol = interpolant_solution(mesh, u)
    e0, e1 = error_norms(sol, spec)
    assert e0 <= 1e-12
    assert e1 <= 1e-12


def test_error_norms_zero_over_zero_guard():
    zero = Poly2.zero()
    spec = manufactured_problem(np.eye(2), (zero, zero), zero, Poly2.zero())
    mesh = generate_distorted_grid(2, delta=0.0)
    sol = interpolant_solution(mesh, lambda pts: np.zeros(len(pts)))
    with pytest.warns(RuntimeWarning, match="zero norm"):
        e0, e1 = error_norms(sol, spec)
    assert (e0, e1) == (0.0, 0.0)


def test_error_norms_zero_exact_nonzero_discrete_raises():
    zero = Poly2.zero()
    spec = manufactured_problem(np.eye(2), (zero, zero), zero, Poly2.zero())
    mesh = generate_distorted_grid(2, delta=0.0)
    sol = interpolant_solution(mesh, lambda pts: pts[:, 0] * (1 - pts[:, 0]))
    with pytest.raises(ValueError, match="zero norm"):
        error_norms(sol, spec)


def test_error_norms_missing_exact_solution():
    from sfvem.poly import poisson_problem
    mesh = generate_distorted_grid(2, delta=0.0)
    sol = interpolant_solution(mesh, lambda pts: pts[:, 0])
    with pytest.raises(ValueError, match="exact"):
        error_norms(sol, poisson_problem())


def test_error_norms_scale_invariant():
    zero = Poly2.zero()
    u = Poly2.from_separable([0.0, 1.0, -1.0], [0.0, 1.0, -1.0])
    mesh = generate_distorted_grid(4, delta=0.2, seed=3)
    spec1 = manufactured_problem(np.eye(2), (zero, zero), zero, u)
    spec2 = manufactured_problem(np.eye(2), (zero, zero), zero, 37.0 * u)
    sol1 = solve(assemble(mesh, spec1))
    sol2 = DiscreteSolution(37.0 * sol1.values, mesh, sol1.ell_by_cell,
                            sol1.method, sol1.residual)
    a = error_norms(sol1, spec1)
    b = error_norms(sol2, spec2)
    assert a[0] == pytest.approx(b[0], rel=1e-13)
    assert a[1] == pytest.approx(b[1], rel=1e-13)


def test_error_norms_benchmark_halving():
    # one refinement roughly halves the gradient error (first-order method)
    spec = build_benchmark_coefficients()
    e1s = []
    for n in (8, 16):
        mesh = generate_distorted_grid(n, delta=0.3, seed=42)
        sol = solve(assemble(mesh, spec))
        e1s.append(error_norms(sol, spec)[1])
    ratio = e1s[0] / e1s[1]
    assert 1.6 <= ratio <= 2.6


def test_error_norms_weighted_by_tensor():
    # with K = diag(4, 1), a pure-x gradient error is doubled relative to
    # K = I; build fields whose error is exactly along x
    zero = Poly2.zero()
    u = Poly2([[0.0], [1.0]])  # x
    mesh = generate_distorted_grid(2, delta=0.0)
    # discrete values: x + bubble-ish interior perturbation at center node
    values = mesh.vertices[:, 0].copy()
    interior = [i for i in range(mesh.n_vertices)
                if i not in mesh.boundary_vertices]
    values[interior] += 0.1
    specI = manufactured_problem(np.eye(2), (zero, zero), zero, u)
    specK = manufactured_problem(np.diag([4.0, 1.0]), (zero, zero), zero, u)
    solI = DiscreteSolution(values, mesh, np.ones(4, dtype=int), "sfvem", 0.0)
    eI = error_norms(solI, specI)
    eK = error_norms(solI, specK)
    assert eI[0] == pytest.approx(eK[0], rel=1e-13)  # L2 part unweighted
    assert eK[1] != pytest.approx(eI[1], rel=1e-3)


# ---------------------------------------------------------------------------
# rate fitting


def synthetic_records(hs, e0s, e1s):
    out = []
    for i, (h, e0, e1) in enumerate(zip(hs, e0s, e1s)):
        out.append(ConvergenceRecord(level=i, h=h, ndof=10, e0_sfvem=e0,
                                     e1_sfvem=e1, e0_vem=2 * e0, e1_vem=2 * e1,
                                     ratio_e0=2.0, ratio_e1=2.0))
    return out


def test_fit_rates_exact_powers():
    hs = np.array([0.5, 0.25, 0.125, 0.0625])
    recs = synthetic_records(hs, hs**2, hs)
    rates = fit_rates(recs)
    assert rates["sfvem"][0] == pytest.approx(2.0, abs=1e-12)
    assert rates["sfvem"][1] == pytest.approx(1.0, abs=1e-12)
    assert rates["vem"][0] == pytest.approx(2.0, abs=1e-12)


def test_fit_rates_requires_two_levels():
    recs = synthetic_records([0.5], [0.25], [0.5])
    with pytest.raises(ValueError, match="2"):
        fit_rates(recs)


def test_fit_rates_omits_all_nan_method():
    hs = np.array([0.5, 0.25])
    nan = float("nan")
    recs = [ConvergenceRecord(level=i, h=h, ndof=1, e0_sfvem=h, e1_sfvem=h,
                              e0_vem=nan, e1_vem=nan, ratio_e0=nan,
                              ratio_e1=nan)
            for i, h in enumerate(hs)]
    rates = fit_rates(recs)
    assert "vem" not in rates
    assert "sfvem" in rates


# ---------------------------------------------------------------------------
# convergence study


def test_convergence_study_bubble_grid():
    spec = bubble_problem()
    records = convergence_study(spec, [4, 8], delta=0.2, seed=7)
    assert len(records) == 2
    assert records[0].h > records[1].h
    assert records[0].ndof == 9 and records[1].ndof == 49
    for r in records:
        assert 0 < r.e0_sfvem < 1
        assert 0 < r.e1_sfvem < 1
        assert r.ratio_e0 == pytest.approx(r.e0_vem / r.e0_sfvem)
    # second level should improve both errors
    assert records[1].e0_sfvem < records[0].e0_sfvem
    assert records[1].e1_sfvem < records[0].e1_sfvem


def test_convergence_study_voronoi_generator():
    spec = bubble_problem()
    records = convergence_study(spec, [3, 6], generator="voronoi", seed=2,
                                lloyd_iters=2, distortion=0.1)
    assert len(records) == 2
    assert records[1].h < records[0].h
    assert records[1].e1_sfvem < records[0].e1_sfvem


def test_convergence_study_single_method():
    spec = bubble_problem()
    records = convergence_study(spec, [3, 5], methods=("sfvem",), delta=0.1)
    assert np.isnan(records[0].e0_vem)
    rates = fit_rates(records)
    assert "vem" not in rates


def test_convergence_study_requires_decreasing_h():
    spec = bubble_problem()
    with pytest.raises(ValueError, match="decrease"):
        convergence_study(spec, [4, 4], delta=0.1)


def test_convergence_study_unknown_generator():
    with pytest.raises(ValueError, match="generator"):
        convergence_study(bubble_problem(), [2, 4], generator="quadtree")


def test_convergence_study_streams_records():
    seen = []
    convergence_study(bubble_problem(), [2, 4], delta=0.1,
                      methods=("sfvem",), on_record=seen.append)
    assert [r.level for r in seen] == [2, 4]


# ---------------------------------------------------------------------------
# CSV serialization


def test_audit_csv_format(tmp_path):
    audits = audit_catalog()
    path = tmp_path / "audit.csv"
    write_audit_csv(audits, path)
    lines = path.read_text().splitlines()
    assert lines[0] == AUDIT_HEADER
    assert len(lines) == 19
    fields = lines[1].split(",")
    assert fields[0] == "irregular"
    assert fields[1] == "3" and fields[2] == "0"
    # full-precision scientific notation round-trips
    assert float(fields[5]) == audits[0].sigma_max
    assert audit_row(audits[0]) == lines[1]


def test_convergence_csv_format(tmp_path):
    records = synthetic_records([0.5, 0.25], [0.1, 0.025], [0.2, 0.1])
    path = tmp_path / "conv.csv"
    write_convergence_csv(records, path)
    lines = path.read_text().splitlines()
    assert lines[0] == CONVERGENCE_HEADER
    assert len(lines) == 3
    assert lines[1] == convergence_row(records[0])
    fields = lines[1].split(",")
    assert fields[0] == "0" and fields[2] == "10"
    assert float(fields[1]) == 0.5
