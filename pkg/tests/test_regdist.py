import numpy as np
import pytest

from boundarylab import BoundaryGraph, DomainError, power
from boundarylab.barriers import sample_domain_points
from boundarylab.regdist import (
    Mollifier, RegularizedDistanceField, batch_table, check_distance_bounds,
)


def test_mollifier_normalized():
    for ds in (1, 2):
        m = Mollifier(ds)
        assert m.norm_certificate <= 1e-10
        # mass check at an independent order
        if ds == 1:
            x, w = np.polynomial.legendre.leggauss(300)
            assert w @ m.eta(np.abs(x)) == pytest.approx(1.0, abs=1e-12)
        assert np.all(m.eta(np.array([0.0, 0.5, 0.99])) >= 0)
        assert m.eta(np.array([1.0]))[0] == 0.0
        assert m.eta(np.array([1.3]))[0] == 0.0


def test_p_trivial_families():
    f0 = RegularizedDistanceField(BoundaryGraph("zero"))
    assert f0.eval_p(np.array([0.1, 0.2])) == pytest.approx(0.2, abs=1e-14)
    fl = RegularizedDistanceField(BoundaryGraph("linear", a=0.2))
    # even mollifier kills the linear term: p = a x' + s
    assert fl.eval_p(np.array([0.1, 0.2])) == pytest.approx(0.22, abs=1e-12)


def test_d_flat_and_linear_exact():
    f0 = RegularizedDistanceField(BoundaryGraph("zero"))
    y = np.array([[0.05, 0.3], [-0.2, 0.1]])
    assert np.abs(f0.eval_d(y) - y[:, 1]).max() < 1e-10
    fl = RegularizedDistanceField(BoundaryGraph("linear", a=0.2))
    y = np.array([[0.05, 0.3], [-0.1, 0.2]])
    gap = y[:, 1] - 0.2 * y[:, 0]
    assert np.abs(fl.eval_d(y) - gap).max() < 1e-10
    np.testing.assert_allclose(fl.eval_grad_d(y[0]), [-0.2, 1.0], atol=1e-9)
    assert np.abs(fl.eval_hess_d(y[0])).max() < 1e-8


def test_inverse_consistency():
    g = BoundaryGraph("cone", L=0.15)
    f = RegularizedDistanceField(g)
    pts = sample_domain_points(g, 0.3, 50, np.random.default_rng(5))
    d = f.eval_d(pts)
    for i in range(len(pts)):
        p = f.eval_p(np.append(pts[i, :-1], d[i]))
        assert p == pytest.approx(pts[i, -1], abs=1e-12)


def test_grad_hess_fd_crosscheck_runs():
    # check=True raises on any disagreement beyond 1e-3 relative
    g = BoundaryGraph("sinusoid", A=0.05, k=4.0)
    f = RegularizedDistanceField(g)
    y = np.array([0.0, 0.1])
    grad = f.eval_grad_d(y, check=True)
    hess = f.eval_hess_d(y, check=True)
    assert grad.shape == (2,)
    assert np.allclose(hess, hess.T)


def test_three_bounds_with_calibrated_constant():
    from boundarylab import load_calibration
    cal = load_calibration()
    rng = np.random.default_rng(17)
    for fam, kw in [("cone", {"L": 0.1}), ("sinusoid", {"A": 0.05, "k": 4.0}),
                    ("c1model", {"omega": power(0.5, 0.2, 1.0)})]:
        g = BoundaryGraph(fam, **kw)
        f = RegularizedDistanceField(g)
        pts = sample_domain_points(g, 0.3, 300, rng)
        rep = check_distance_bounds(f, pts, cal.C_regdist_2d)
        assert rep.passed, (fam, rep.to_dict())


def test_c1model_hessian_vanishes_at_boundary():
    # d |D^2 d| -> 0 along the vertical axis for omega(0) = 0 domains
    g = BoundaryGraph("c1model", omega=power(0.5, 0.2, 1.0))
    f = RegularizedDistanceField(g)
    heights = 0.2 * 2.0 ** (-np.arange(6, dtype=float))
    vals = []
    for h in heights:
        y = np.array([0.0, h])
        d = f.eval_d(y)
        H = f.eval_hess_d(y, check=False)
        vals.append(d * np.abs(np.linalg.eigvalsh(H)).max())
    assert vals[-1] < 0.25 * vals[0]


def test_locality_of_table_modification():
    # changing the graph outside the mollifier support leaves d unchanged
    ts = np.linspace(-0.5, 0.5, 101)
    base = 0.02 * np.sin(6.0 * ts)
    g1 = BoundaryGraph("table", ts=ts, values=base)
    far = base + np.where(np.abs(ts) > 0.3, 0.05 * (np.abs(ts) - 0.3), 0.0)
    g2 = BoundaryGraph("table", ts=ts, values=far)
    f1 = RegularizedDistanceField(g1)
    f2 = RegularizedDistanceField(g2)
    y = np.array([0.0, 0.05])     # reads Gamma only on |x'| <= d << 0.3
    assert f1.eval_d(y) == f2.eval_d(y)


def test_3d_cone():
    g = BoundaryGraph("cone", dim=3, L=0.1)
    f = RegularizedDistanceField(g)
    y = np.array([0.02, -0.03, 0.1])
    d = f.eval_d(y)
    gap = 0.1 - 0.1 * np.hypot(0.02, 0.03)
    assert 0.8 * gap < d < 1.2 * gap
    grad = f.eval_grad_d(y)
    assert np.linalg.norm(grad) == pytest.approx(1.0, abs=0.3)
    H = f.eval_hess_d(y)
    assert np.allclose(H, H.T)


def test_chart_and_steepness_guards():
    with pytest.raises(DomainError):
        RegularizedDistanceField(BoundaryGraph("linear", a=0.3))
    f = RegularizedDistanceField(BoundaryGraph("zero"))
    with pytest.raises(DomainError):
        f.eval_p(np.array([0.4, 0.2]))    # |x'| + s beyond the working radius
    with pytest.raises(DomainError):
        f.eval_p(np.array([0.1, -0.01]))


def test_batch_table_columns():
    g = BoundaryGraph("cone", L=0.1)
    f = RegularizedDistanceField(g)
    pts = sample_domain_points(g, 0.25, 20, np.random.default_rng(0))
    tab = batch_table(f, pts)
    assert tab.shape == (20, 6)
    np.testing.assert_allclose(tab[:, :2], pts)
    assert np.all(tab[:, 2] > 0)          # d
    assert np.all(np.abs(tab[:, 5] - 1.0) < 0.2)   # ratio near 1
