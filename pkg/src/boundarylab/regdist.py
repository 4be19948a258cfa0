"""Locally regularized distance for Lipschitz graph domains.

The map p(x', s) = (eta_s * Gamma)(x') + s is strictly increasing in s for
small Lipschitz constants; its vertical inverse d satisfies

    (1 - C S) (x_n - Gamma(x')) <= d <= (1 + C S) (x_n - Gamma(x')),
    |grad d| in [1 - C S, 1 + C S],      |D^2 d| <= C S / d,

where S is the Lipschitz seminorm of Gamma at scale d and C is a
dimensional constant (calibrated empirically, see calibrate.py).

Derivatives of d are computed from exact inverse-function identities with
the derivatives of p obtained by differentiated quadrature; kernels with
one derivative on the mollifier avoid second derivatives of Gamma, so
merely Lipschitz graphs (cone) are handled.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError, MonotonicityError, QuadratureError
from .geometry import BoundaryGraph

__all__ = ["Mollifier", "RegularizedDistanceField", "DistanceBoundsReport",
           "check_distance_bounds", "batch_table"]

# chart guard; graphs steeper than this break the p-inversion margin
MAX_LIPSCHITZ = 0.25


@lru_cache(maxsize=32)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def _bump(rho):
    """exp(-1/(1 - rho^2)) on [0, 1), zero outside; returns (phi, phi', phi'')."""
    rho = np.asarray(rho, dtype=float)
    inside = rho < 1.0
    phi = np.zeros_like(rho)
    dphi = np.zeros_like(rho)
    d2phi = np.zeros_like(rho)
    r = rho[inside]
    g = 1.0 - r * r
    f = np.exp(-1.0 / g)
    phi[inside] = f
    dphi[inside] = f * (-2.0 * r / g**2)
    d2phi[inside] = f * (4.0 * r**2 / g**4 - 2.0 / g**2 - 8.0 * r**2 / g**3)
    return phi, dphi, d2phi


class Mollifier:
    """Radial C^infty bump on the unit ball of R^(n-1), normalized to mass 1.

    The normalization integral is computed once by quadrature; the stored
    certificate is the disagreement between two refinement levels.
    """

    def __init__(self, dim_surface: int, order: int = 200):
        if dim_surface not in (1, 2):
            raise DomainError(f"mollifier supports surface dimension 1 or 2, got {dim_surface}")
        self.dim_surface = dim_surface
        coarse = self._mass(order)
        fine = self._mass(2 * order)
        self.normalization = fine
        self.norm_certificate = abs(fine - coarse)
        if self.norm_certificate > 1e-10:
            raise QuadratureError(
                f"mollifier normalization uncertain: certificate {self.norm_certificate:g}"
            )

    def _mass(self, order: int) -> float:
        x, w = _leggauss(order)
        if self.dim_surface == 1:
            phi, _, _ = _bump(np.abs(x))
            return float(w @ phi)
        # radial: 2*pi * int_0^1 rho * phi(rho) d rho
        rho = 0.5 * (x + 1.0)
        phi, _, _ = _bump(rho)
        return float(2.0 * np.pi * 0.5 * (w @ (rho * phi)))

    def eta(self, rho):
        return _bump(rho)[0] / self.normalization

    def eta_derivs(self, rho):
        phi, dphi, d2phi = _bump(rho)
        c = self.normalization
        return phi / c, dphi / c, d2phi / c


class RegularizedDistanceField:
    """Evaluable regularized distance d with gradient and Hessian.

    Immutable after construction; evaluations are pure and reentrant.
    """

    def __init__(self, graph: BoundaryGraph, order: int = 32,
                 working_radius: float | None = None,
                 max_lipschitz: float = MAX_LIPSCHITZ):
        if graph.L_global > max_lipschitz:
            raise DomainError(
                f"graph Lipschitz constant {graph.L_global:.4g} exceeds the chart "
                f"guard {max_lipschitz}; the vertical inversion is not certified"
            )
        self.graph = graph
        self.order = int(order)
        self.mollifier = Mollifier(graph.dim - 1)
        wr = min(0.5, graph.chart_radius) if working_radius is None else working_radius
        if not 0 < wr <= 0.5:
            raise DomainError(f"working radius must lie in (0, 1/2], got {wr}")
        if wr > graph.chart_radius:
            raise DomainError("working radius exceeds the graph chart radius")
        self.working_radius = wr

    # -- p and its derivatives ---------------------------------------------

    def _check_chart(self, xp, s):
        xp = np.atleast_2d(np.asarray(xp, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s <= 0):
            raise DomainError("p(x', s) requires s > 0")
        if np.any(np.linalg.norm(xp, axis=-1) + s > self.working_radius * (1 + 1e-9)):
            raise DomainError("point outside the chart: |x'| + s must not exceed the working radius")
        return xp, s

    def _nodes_1d(self, xp, s, order):
        """Panelized Gauss-Legendre nodes/weights on [-1, 1], split at the
        image of the graph's kink (or at 0), per point."""
        t, w = _leggauss(order)
        m = s.shape[0]
        if self.graph.radial_kink:
            c = np.clip(-xp[:, 0] / s, -1.0, 1.0)
        else:
            c = np.zeros(m)
        a0, b0 = -np.ones(m), c
        a1, b1 = c, np.ones(m)
        T = np.empty((m, 2 * order))
        W = np.empty((m, 2 * order))
        for k, (a, b) in enumerate(((a0, b0), (a1, b1))):
            half = 0.5 * (b - a)
            T[:, k * order:(k + 1) * order] = a[:, None] + half[:, None] * (t[None, :] + 1.0)
            W[:, k * order:(k + 1) * order] = half[:, None] * w[None, :]
        return T, W

    def _p_derivs_1d(self, xp, s, order):
        """All needed derivatives of p for n = 2, vectorized over points."""
        T, W = self._nodes_1d(xp, s, order)
        absT = np.abs(T)
        eta, deta_r, d2eta_r = self.mollifier.eta_derivs(absT)
        # odd/even extensions of the radial profile derivatives
        etap = np.sign(T) * deta_r           # eta'(t)
        k1 = -(eta + absT * deta_r)          # -(t eta)'
        k2 = 2.0 * eta + 4.0 * absT * deta_r + T * T * d2eta_r   # (t^2 eta)''

        pts = xp[:, 0][:, None] + s[:, None] * T
        g = self.graph.gamma(pts[..., None])
        dg = self.graph.grad_gamma(pts[..., None])[..., 0]
        g0 = np.atleast_1d(self.graph.gamma(xp))
        dg0 = self.graph.grad_gamma(xp)[:, 0]

        p = (W * eta * g).sum(axis=1) + s
        px = (W * eta * dg).sum(axis=1)
        ps = 1.0 + (W * eta * T * dg).sum(axis=1)
        pxx = -(W * etap * dg).sum(axis=1) / s
        pxs = (W * k1 * dg).sum(axis=1) / s
        # subtract the affine part: int k2 = int k2*t = 0, improves accuracy
        pss = (W * k2 * (g - g0[:, None] - s[:, None] * T * dg0[:, None])).sum(axis=1) / s**2
        return {
            "p": p,
            "px": px[:, None],
            "ps": ps,
            "pxx": pxx[:, None, None],
            "pxs": pxs[:, None],
            "pss": pss,
        }

    def _disk_nodes(self, xp_i, s_i, order):
        """Polar quadrature nodes over the unit disk for one point (n = 3).

        If the graph has a radial kink whose preimage falls inside the disk,
        the polar rule is centered there so that Gamma is smooth in the
        radial variable.
        """
        t, w = _leggauss(order)
        n_theta = 2 * order
        theta = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)   # (M, 2)
        c = np.zeros(2)
        if self.graph.radial_kink:
            cand = -xp_i / s_i
            if np.linalg.norm(cand) < 1.0:
                c = cand
        cu = u @ c
        R = -cu + np.sqrt(np.maximum(1.0 - c @ c + cu**2, 0.0))    # (M,)
        rho = 0.5 * R[:, None] * (t[None, :] + 1.0)                # (M, Q)
        wq = 0.5 * R[:, None] * w[None, :] * rho * (2.0 * np.pi / n_theta)
        nodes = c[None, None, :] + rho[..., None] * u[:, None, :]  # (M, Q, 2)
        return nodes.reshape(-1, 2), wq.ravel()

    def _p_derivs_2d(self, xp, s, order):
        """All needed derivatives of p for n = 3, one point at a time."""
        m = s.shape[0]
        out = {
            "p": np.empty(m), "px": np.empty((m, 2)), "ps": np.empty(m),
            "pxx": np.empty((m, 2, 2)), "pxs": np.empty((m, 2)), "pss": np.empty(m),
        }
        for i in range(m):
            T, W = self._disk_nodes(xp[i], s[i], order)
            rho = np.linalg.norm(T, axis=-1)
            eta, deta_r, d2eta_r = self.mollifier.eta_derivs(rho)
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(rho[:, None] > 0, T / np.where(rho == 0, 1.0, rho)[:, None], 0.0)
            grad_eta = deta_r[:, None] * unit
            k1 = -2.0 * eta - rho * deta_r
            k2 = 6.0 * eta + 6.0 * rho * deta_r + rho**2 * d2eta_r

            pts = xp[i][None, :] + s[i] * T
            g = self.graph.gamma(pts)
            dg = self.graph.grad_gamma(pts)
            g0 = float(self.graph.gamma(xp[i]))
            dg0 = self.graph.grad_gamma(xp[i][None, :])[0]

            out["p"][i] = W @ (eta * g) + s[i]
            out["px"][i] = (W[:, None] * eta[:, None] * dg).sum(axis=0)
            out["ps"][i] = 1.0 + W @ (eta * (T * dg).sum(axis=-1))
            pxx = -(W[:, None, None] * grad_eta[:, :, None] * dg[:, None, :]).sum(axis=0) / s[i]
            out["pxx"][i] = 0.5 * (pxx + pxx.T)
            out["pxs"][i] = (W[:, None] * k1[:, None] * dg).sum(axis=0) / s[i]
            affine = g - g0 - s[i] * (T @ dg0)
            out["pss"][i] = W @ (k2 * affine) / s[i] ** 2
        return out

    def _p_derivs(self, xp, s, order=None, certify=True):
        order = self.order if order is None else order
        fn = self._p_derivs_1d if self.graph.dim == 2 else self._p_derivs_2d
        fine = fn(xp, s, 2 * order)
        if certify:
            coarse = fn(xp, s, order)
            scale = np.maximum(np.abs(fine["p"]), 1e-12)
            if np.any(np.abs(fine["p"] - coarse["p"]) > 1e-6 * scale):
                raise QuadratureError(
                    "order-doubling changed p by more than 1e-6 relative; "
                    "increase the quadrature order for this boundary family"
                )
        return fine

    # -- public evaluation --------------------------------------------------

    def eval_p(self, x, certify=True):
        """p(x', x_n) for x_n > 0 inside the chart."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 1
        pts = np.atleast_2d(x)
        xp, s = self._check_chart(pts[:, :-1], pts[:, -1])
        p = self._p_derivs(xp, s, certify=certify)["p"]
        return float(p[0]) if scalar else p

    def _solve_d(self, xp, yn, certify=True):
        """Vertical inversion: the t > 0 with p(y', t) = y_n, per point."""
        g = np.atleast_1d(self.graph.gamma(xp))
        gap = yn - g
        if np.any(gap <= 0):
            raise DomainError("eval_d requires points strictly inside the domain")
        if np.any(gap >= self.working_radius):
            raise DomainError("x_n - Gamma(x') must stay below the working radius")
        L = self.graph.L_global
        lo = np.full_like(gap, 1e-14)
        hi = gap * (1.0 + L) + L * np.maximum(yn, 0.0) + 1e-14
        hi = np.minimum(hi, self.working_radius * (1 + 1e-9) - np.linalg.norm(xp, axis=-1))
        # certify the bracket
        for _ in range(60):
            p_hi = self._p_derivs(xp, hi, certify=False)["p"]
            if np.all(p_hi >= yn):
                break
            grow = p_hi < yn
            hi[grow] *= 1.25
        else:
            raise ConvergenceError("failed to bracket the vertical inverse")

        t = np.clip(gap, lo, hi)
        for _ in range(100):
            der = self._p_derivs(xp, t, certify=False)
            res = der["p"] - yn
            if np.any(der["ps"] <= 0.5):
                raise MonotonicityError(
                    "d_s p <= 1/2 encountered; the Lipschitz constant is too "
                    "large for a certified inversion on this chart"
                )
            if np.all(np.abs(res) <= 1e-13):
                break
            lo = np.where(res < 0, t, lo)
            hi = np.where(res > 0, t, hi)
            t_new = t - res / der["ps"]
            bad = (t_new <= lo) | (t_new >= hi)
            t_new[bad] = 0.5 * (lo[bad] + hi[bad])
            t = t_new
        else:
            raise ConvergenceError("vertical inversion did not reach 1e-13 residual")
        if certify:
            res = self._p_derivs(xp, t)["p"] - yn
            if np.any(np.abs(res) > 1e-12):
                raise ConvergenceError("certified residual of the inversion exceeds 1e-12")
        return t

    def eval_d(self, y, certify=True):
        """The regularized distance d(y) for y in the domain chart."""
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 1
        pts = np.atleast_2d(y)
        d = self._solve_d(pts[:, :-1], pts[:, -1], certify=certify)
        return float(d[0]) if scalar else d

    def _grad_hess(self, pts, check):
        xp, yn = pts[:, :-1], pts[:, -1]
        d = self._solve_d(xp, yn, certify=False)
        der = self._p_derivs(xp, d, certify=False)
        q = der["ps"]
        nm1 = self.graph.dim - 1
        grad = np.empty((pts.shape[0], self.graph.dim))
        grad[:, :nm1] = -der["px"] / q[:, None]
        grad[:, nm1] = 1.0 / q

        hess = np.empty((pts.shape[0], self.graph.dim, self.graph.dim))
        di = grad[:, :nm1]                       # tangential derivatives of d
        pxx, pxs, pss = der["pxx"], der["pxs"], der["pss"]
        hij = -(pxx
                + pxs[:, :, None] * di[:, None, :]
                + pxs[:, None, :] * di[:, :, None]
                + pss[:, None, None] * di[:, :, None] * di[:, None, :]) / q[:, None, None]
        hin = -(pxs + pss[:, None] * di) / q[:, None] ** 2
        hnn = -pss / q**3
        hess[:, :nm1, :nm1] = hij
        hess[:, :nm1, nm1] = hin
        hess[:, nm1, :nm1] = hin
        hess[:, nm1, nm1] = hnn

        if check:
            self._fd_check(pts, d, grad, hess)
        return d, grad, hess

    def _fd_check(self, pts, d, grad, hess):
        """Cross-check grad/Hessian against central differences of eval_d."""
        n = self.graph.dim
        for i in range(pts.shape[0]):
            h = 1e-5 * d[i]
            y = pts[i]
            fd_grad = np.empty(n)
            fd_hess = np.empty((n, n))
            dvals = {}

            def dval(offset):
                key = tuple(np.round(offset / h).astype(int))
                if key not in dvals:
                    z = np.atleast_2d(y + offset)
                    dvals[key] = float(self._solve_d(z[:, :-1], z[:, -1], certify=False)[0])
                return dvals[key]

            d0 = d[i]
            for a in range(n):
                ea = np.zeros(n); ea[a] = h
                fp, fm = dval(ea), dval(-ea)
                fd_grad[a] = (fp - fm) / (2 * h)
                fd_hess[a, a] = (fp - 2 * d0 + fm) / h**2
            for a in range(n):
                for b in range(a + 1, n):
                    ea = np.zeros(n); ea[a] = h
                    eb = np.zeros(n); eb[b] = h
                    fd = (dval(ea + eb) - dval(ea - eb) - dval(-ea + eb) + dval(-ea - eb)) / (4 * h**2)
                    fd_hess[a, b] = fd_hess[b, a] = fd
            if not np.allclose(fd_grad, grad[i], rtol=1e-3, atol=1e-9):
                raise QuadratureError(
                    f"gradient cross-check failed at {y}: {grad[i]} vs FD {fd_grad}"
                )
            # second differences carry cancellation noise ~ eps * d / h^2
            noise = 100 * np.finfo(float).eps * d0 / h**2
            scale = max(np.abs(fd_hess).max(), np.abs(hess[i]).max(), noise / 1e-3)
            if np.abs(fd_hess - hess[i]).max() > 1e-3 * scale:
                raise QuadratureError(
                    f"Hessian cross-check failed at {y}: |diff| = "
                    f"{np.abs(fd_hess - hess[i]).max():g} vs scale {scale:g}"
                )

    def eval_grad_d(self, y, check=True):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 1
        _, grad, _ = self._grad_hess(np.atleast_2d(y), check)
        return grad[0] if scalar else grad

    def eval_hess_d(self, y, check=True):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 1
        _, _, hess = self._grad_hess(np.atleast_2d(y), check)
        return hess[0] if scalar else hess

    def eval_all(self, y, check=False):
        """(d, grad d, hess d) for a batch of points, ordered by input index."""
        return self._grad_hess(np.atleast_2d(np.asarray(y, dtype=float)), check)


class DistanceBoundsReport:
    """Worst-case margins of the three pointwise distance bounds on samples.

    ratio_dev   = max |d/(y_n - Gamma) - 1| / S        (want <= C_hat)
    grad_dev    = max ||grad d| - 1| / S               (want <= C_hat)
    hess_scale  = max d |D^2 d| / S                    (want <= C_hat)

    S is the local Lipschitz seminorm of Gamma over B'_scale(y') at
    scale max(d, gap); points with S below s_floor are excluded from the
    normalized maxima (0/0 on exactly flat regions) but still checked for
    exactness (deviation <= abs_tol).
    """

    def __init__(self, field, pts, C_hat, s_floor=1e-12, abs_tol=1e-10):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d, grad, hess = field.eval_all(pts, check=False)
        gap = pts[:, -1] - np.atleast_1d(field.graph.gamma(pts[:, :-1]))
        S = np.array([field.graph.seminorm_at(pts[i, :-1], max(d[i], gap[i]))
                      for i in range(len(pts))])
        ratio = np.abs(d / gap - 1.0)
        gdev = np.abs(np.linalg.norm(grad, axis=-1) - 1.0)
        hnorm = np.array([np.abs(np.linalg.eigvalsh(h)).max() for h in hess])
        rough = S > s_floor
        with np.errstate(divide="ignore", invalid="ignore"):
            self.ratio_dev = float(np.max(ratio[rough] / S[rough])) if rough.any() else 0.0
            self.grad_dev = float(np.max(gdev[rough] / S[rough])) if rough.any() else 0.0
            self.hess_scale = float(np.max(d[rough] * hnorm[rough] / S[rough])) if rough.any() else 0.0
        flat = ~rough
        self.flat_exact = bool(np.all(ratio[flat] <= abs_tol)
                               and np.all(gdev[flat] <= abs_tol)
                               and np.all(d[flat] * hnorm[flat] <= abs_tol))
        self.n_samples = len(pts)
        self.C_hat = C_hat
        self.columns = np.column_stack(
            [pts, d, np.linalg.norm(grad, axis=-1), hnorm, d / gap])

    @property
    def passed(self) -> bool:
        worst = max(self.ratio_dev, self.grad_dev, self.hess_scale)
        return self.flat_exact and worst <= self.C_hat

    def to_dict(self):
        return {
            "pass": self.passed,
            "ratio_dev": self.ratio_dev,
            "grad_dev": self.grad_dev,
            "hess_scale": self.hess_scale,
            "flat_exact": self.flat_exact,
            "C_hat": self.C_hat,
            "n_samples": self.n_samples,
        }


def check_distance_bounds(field: RegularizedDistanceField, pts, C_hat: float) -> DistanceBoundsReport:
    """Verify the three displayed distance bounds with the calibrated constant."""
    return DistanceBoundsReport(field, pts, C_hat)


def batch_table(field: RegularizedDistanceField, pts) -> np.ndarray:
    """Rows (y_1..y_n, d, |grad d|, |D^2 d|, d/(y_n - Gamma)) for CSV export."""
    return DistanceBoundsReport(field, pts, C_hat=np.inf).columns
