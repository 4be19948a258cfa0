import numpy as np
import pytest

from boundarylab import (
    BoundaryGraph, DomainError, EllipticityPair, FixedOp, GridProblem,
    LaplaceOp, MonotonicityError, PucciOp, abp_check, discretize, solve,
)

R = 0.5
ZERO = lambda p: np.zeros(len(np.atleast_2d(p)))


def _harmonic(p):
    p = np.atleast_2d(p)
    return np.exp(p[:, 0]) * np.sin(p[:, 1])


def test_grid_geometry_checks():
    g = BoundaryGraph("zero")
    with pytest.raises(DomainError):
        GridProblem(g, 0.5, 0.1, LaplaceOp(), ZERO, ZERO)  # h > r/16
    with pytest.raises(DomainError):
        GridProblem(BoundaryGraph("zero", dim=3), 0.5, 0.01, LaplaceOp(), ZERO, ZERO)


def test_linear_exactness_with_cut_cells():
    lin = lambda p: 1.0 + 0.3 * np.atleast_2d(p)[:, 0] + 0.7 * np.atleast_2d(p)[:, 1]
    for fam, kw in [("cone", {"L": 0.2}), ("sinusoid", {"A": 0.05, "k": 4.0})]:
        g = BoundaryGraph(fam, **kw)
        sol = solve(GridProblem(g, R, 2 * R / 48, LaplaceOp(), ZERO, lin))
        assert np.abs(sol.values - lin(sol.nodes)).max() < 1e-12


def test_harmonic_convergence_order():
    g = BoundaryGraph("cone", L=0.2)
    errs = []
    for n in (32, 64, 128):
        sol = solve(GridProblem(g, R, 2 * R / n, LaplaceOp(), ZERO, _harmonic))
        errs.append(np.abs(sol.values - _harmonic(sol.nodes)).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.5)


def test_monotonicity_certificate():
    g = BoundaryGraph("zero")
    sys_ = discretize(GridProblem(g, R, 2 * R / 32, LaplaceOp(), ZERO, ZERO))
    assert sys_.certificate["monotone"]
    assert sys_.certificate["min_direction_weight"] >= 0.0


def test_fixed_offdiagonal_needs_wide_stencil():
    g = BoundaryGraph("zero")
    A = np.array([[1.0, 0.4], [0.4, 1.0]])
    op = FixedOp(A=lambda x: A)
    with pytest.raises(MonotonicityError):
        solve(GridProblem(g, R, 2 * R / 32, op, ZERO, ZERO, stencil="standard5"))
    # wide stencil accepts the same operator
    u = lambda p: np.atleast_2d(p)[:, 0] ** 2 - np.atleast_2d(p)[:, 1] ** 2
    f = lambda p: np.full(len(np.atleast_2d(p)), 2.0 * A[0, 0] - 2.0 * A[1, 1])
    sol = solve(GridProblem(g, R, 2 * R / 32, op, f, u, stencil="wide"))
    assert np.abs(sol.values - u(sol.nodes)).max() < 1e-9


def test_fixed_eigenvalue_range_enforced():
    g = BoundaryGraph("zero")
    A = np.diag([0.5, 3.0])
    op = FixedOp(A=lambda x: A, E=EllipticityPair(1.0, 2.0))
    with pytest.raises(DomainError):
        solve(GridProblem(g, R, 2 * R / 32, op, ZERO, ZERO, stencil="wide"))


def test_pucci_collapses_to_laplacian():
    g = BoundaryGraph("sinusoid", A=0.05, k=4.0)
    lam = 2.0
    f = lambda p: -np.ones(len(np.atleast_2d(p)))
    sol_lap = solve(GridProblem(g, R, 2 * R / 64, LaplaceOp(),
                                lambda p: f(p) / lam, ZERO))
    for sign in ("minus", "plus"):
        op = PucciOp(EllipticityPair(lam, lam), sign)
        sol_p = solve(GridProblem(g, R, 2 * R / 64, op, f, ZERO, stencil="wide"))
        assert np.abs(sol_p.values - sol_lap.values).max() <= 1e-10


def test_pucci_ordering_and_iteration():
    g = BoundaryGraph("zero")
    E = EllipticityPair(1.0, 2.0)
    f = lambda p: -np.ones(len(np.atleast_2d(p)))
    lo = solve(GridProblem(g, R, 2 * R / 48, PucciOp(E, "minus"), f, ZERO, stencil="wide"))
    hi = solve(GridProblem(g, R, 2 * R / 48, PucciOp(E, "plus"), f, ZERO, stencil="wide"))
    # for concave solutions (f = -1) the M+ equation needs curvature -1/lam,
    # the M- equation only -1/Lam, so the plus solution dominates
    assert np.all(hi.values >= lo.values - 1e-12)
    assert lo.iterations >= 1 and hi.iterations >= 1


def test_comparison_principle():
    g = BoundaryGraph("cone", L=0.1)
    g1 = lambda p: np.atleast_2d(p)[:, 1] + 0.5
    g2 = lambda p: np.atleast_2d(p)[:, 1] + 0.6
    s1 = solve(GridProblem(g, R, 2 * R / 48, LaplaceOp(), ZERO, g1))
    s2 = solve(GridProblem(g, R, 2 * R / 48, LaplaceOp(), ZERO, g2))
    assert np.all(s2.values >= s1.values - 1e-13)


def test_determinism():
    g = BoundaryGraph("sinusoid", A=0.05, k=4.0)
    E = EllipticityPair(1.0, 3.0)
    f = lambda p: -np.ones(len(np.atleast_2d(p)))
    a = solve(GridProblem(g, R, 2 * R / 32, PucciOp(E, "minus"), f, ZERO, stencil="wide"))
    b = solve(GridProblem(g, R, 2 * R / 32, PucciOp(E, "minus"), f, ZERO, stencil="wide"))
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.policy, b.policy)


def test_interpolation_and_grid_values():
    g = BoundaryGraph("zero")
    lin = lambda p: np.atleast_2d(p)[:, 1]
    sol = solve(GridProblem(g, R, 2 * R / 32, LaplaceOp(), ZERO, lin))
    pts = np.array([[0.1, 0.2], [-0.2, 0.15], [0.0, 0.33]])
    np.testing.assert_allclose(sol.interpolate(pts, fill=lambda q: lin(q)),
                               lin(pts), atol=1e-12)


def test_abp_max_principle_exact():
    g = BoundaryGraph("cone", L=0.2)
    data = lambda p: np.cos(3.0 * np.atleast_2d(p)[:, 0]) + np.atleast_2d(p)[:, 1]
    sol = solve(GridProblem(g, R, 2 * R / 48, LaplaceOp(), ZERO, data))
    rep = abp_check(sol)
    assert rep.max_principle_exact
    assert rep.forcing_norm == 0.0


def test_abp_bound_with_forcing():
    g = BoundaryGraph("zero")
    f = lambda p: -np.ones(len(np.atleast_2d(p)))
    consts = []
    for n in (48, 96):
        rep = abp_check(solve(GridProblem(g, R, 2 * R / n, LaplaceOp(), f, ZERO)))
        assert rep.max_interior > 0
        consts.append(rep.bound_constant)
    assert abs(consts[1] - consts[0]) <= 0.1 * consts[0]
