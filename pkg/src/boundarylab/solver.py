"""Monotone finite-difference solver on Omega cap B_r with Dirichlet data.

2-D only.  The standard stencil uses the 5-point Laplacian with
Shortley-Weller shortened arms where the grid meets the graph boundary or
the circle; the wide stencil adds rotated lattice directions so that
anisotropic and Pucci (Bellman) operators admit a monotone decomposition.
Pucci operators are solved by policy iteration over the extremal
coefficient matrices a v v^T + b w w^T, a, b in {lambda, Lambda}, each
discretized canonically, with a fixed tie-break for determinism.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.optimize import brentq, nnls
from scipy.sparse.linalg import splu

from .errors import ConvergenceError, DomainError, MonotonicityError
from .geometry import BoundaryGraph
from .pucci import EllipticityPair, sym_eigvals

__all__ = [
    "LaplaceOp", "FixedOp", "PucciOp", "GridProblem", "GridSolution",
    "discretize", "solve", "abp_check", "ABPReport",
]


@dataclass(frozen=True)
class LaplaceOp:
    kind: str = "laplace"


@dataclass(frozen=True)
class FixedOp:
    """Tr(A(x) D^2 u) for a fixed coefficient field A(x) in [lam I, Lam I]."""
    A: Callable[[np.ndarray], np.ndarray]
    E: Optional[EllipticityPair] = None
    kind: str = "fixed"


@dataclass(frozen=True)
class PucciOp:
    E: EllipticityPair
    sign: str    # "minus" or "plus"
    kind: str = "pucci"


# lattice directions; the first four serve width 2, all eight width 4
_DIRECTIONS = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (-1, 2), (1, 2), (-2, 1)]
# orthogonal frames among the directions, as index pairs into _DIRECTIONS
_FRAMES = [(0, 1), (2, 3), (4, 5), (6, 7)]


def _direction_count(stencil: str, width: int) -> int:
    if stencil == "standard5":
        return 2
    if stencil == "wide":
        if width == 2:
            return 4
        if width == 4:
            return 8
        raise DomainError(f"wide stencil width must be 2 or 4, got {width}")
    raise DomainError(f"unknown stencil {stencil!r}")


class GridProblem:
    """A discretized Dirichlet problem on Omega cap B_r.

    rhs and dirichlet are callables on points (vectorized over (m, 2)
    arrays); dirichlet is evaluated at the exact cut intersection points.
    """

    def __init__(self, graph: BoundaryGraph, r: float, h: float, operator,
                 rhs: Callable, dirichlet: Callable,
                 stencil: str = "standard5", width: int = 4):
        if graph.dim != 2:
            raise DomainError("the grid solver is 2-D only")
        if h > r / 16 * (1 + 1e-12):
            raise DomainError(f"need h <= r/16, got h={h}, r={r}")
        self.graph = graph
        self.r = float(r)
        n = int(round(2 * r / h))
        self.n = n
        self.h = 2 * r / n
        self.operator = operator
        self.rhs = rhs
        self.dirichlet = dirichlet
        self.stencil = stencil
        self.width = width
        self.n_dir = _direction_count(stencil, width)
        if isinstance(operator, (FixedOp, PucciOp)) and self.n_dir < 4 \
                and not _is_isotropic(operator):
            # anisotropy generally needs the rotated directions
            pass


def _is_isotropic(op) -> bool:
    return isinstance(op, PucciOp) and op.E.is_laplacian


class _DiscreteSystem:
    """Per-direction second-difference operators plus boundary bookkeeping."""

    def __init__(self, problem: GridProblem):
        self.problem = problem
        g = problem.graph
        r, h, n = problem.r, problem.h, problem.n
        xs = -r + h * np.arange(n + 1)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        inside = (X**2 + Y**2 < r**2 - 1e-14) & (Y > g.gamma(X.reshape(-1, 1)).reshape(X.shape))
        self.ids = -np.ones(X.shape, dtype=int)
        self.ids[inside] = np.arange(inside.sum())
        self.m = int(inside.sum())
        if self.m == 0:
            raise DomainError("no interior grid nodes; refine the grid or enlarge r")
        self.nodes = np.stack([X[inside], Y[inside]], axis=-1)
        self.shape = X.shape
        self.xs = xs

        self.D = []            # per-direction sparse operators
        self.c = []            # per-direction boundary contribution vectors
        self.boundary_points = []
        self.boundary_values = []
        dirichlet = problem.dirichlet
        ii, jj = np.nonzero(inside)
        for v in _DIRECTIONS[: problem.n_dir]:
            rows, cols, vals = [], [], []
            cvec = np.zeros(self.m)
            arm = h * np.hypot(*v)
            for k in range(self.m):
                i, j = ii[k], jj[k]
                x = self.nodes[k]
                deltas = []
                contrib = []   # (kind, index-or-value)
                for sgn in (1, -1):
                    ni, nj = i + sgn * v[0], j + sgn * v[1]
                    nid = self.ids[ni, nj] if 0 <= ni <= n and 0 <= nj <= n else -1
                    if nid >= 0:
                        deltas.append(arm)
                        contrib.append(("n", nid))
                    else:
                        w = np.array([sgn * v[0] * h, sgn * v[1] * h])
                        s = _cut_fraction(g, r, x, w)
                        bp = x + s * w
                        bv = float(np.atleast_1d(dirichlet(bp[None, :]))[0])
                        deltas.append(s * arm)
                        contrib.append(("b", bv))
                        self.boundary_points.append(bp)
                        self.boundary_values.append(bv)
                dp, dm = deltas
                wp = 2.0 / (dp * (dp + dm))
                wm = 2.0 / (dm * (dp + dm))
                rows.append(k); cols.append(k); vals.append(-(wp + wm))
                for (kind, val), wgt in zip(contrib, (wp, wm)):
                    if kind == "n":
                        rows.append(k); cols.append(val); vals.append(wgt)
                    else:
                        cvec[k] += wgt * val
            D = sparse.csr_matrix((vals, (rows, cols)), shape=(self.m, self.m))
            self.D.append(D)
            self.c.append(cvec)
        self.boundary_points = (np.asarray(self.boundary_points)
                                if self.boundary_points else np.zeros((0, 2)))
        self.boundary_values = np.asarray(self.boundary_values)

        self.weights, self.policies = _operator_weights(problem, self.nodes)
        self.certificate = self._certify()

    def operator_matrix(self, alpha: np.ndarray):
        """Assemble sum_m alpha[:, m] * D_m and the boundary correction."""
        A = None
        c = np.zeros(self.m)
        for m_idx in range(len(self.D)):
            a = alpha[:, m_idx]
            if not np.any(a):
                continue
            term = sparse.diags(a) @ self.D[m_idx]
            A = term if A is None else A + term
            c += a * self.c[m_idx]
        return A.tocsc(), c

    def _certify(self) -> dict:
        """Monotonicity certificate: nonnegative off-diagonal weights and a
        dominant negative diagonal for every admissible weight choice."""
        min_alpha = np.inf
        source = self.weights if self.policies is None else None
        if source is not None:
            min_alpha = float(source.min())
        else:
            min_alpha = float(min(a.min() for a in self.policies["alphas"]))
        if min_alpha < -1e-12:
            raise MonotonicityError(
                f"negative direction weight {min_alpha:g}: stencil too narrow "
                "for this operator's anisotropy"
            )
        return {"min_direction_weight": max(min_alpha, 0.0), "monotone": True}


def _cut_fraction(graph: BoundaryGraph, r: float, x: np.ndarray, w: np.ndarray,
                  samples: int = 64) -> float:
    """First exit s in (0, 1] of the segment x + s w from Omega cap B_r."""
    cands = []
    a = w @ w
    b = 2.0 * (x @ w)
    c = x @ x - r * r
    disc = b * b - 4 * a * c
    if disc >= 0:
        s_ball = (-b + np.sqrt(disc)) / (2 * a)
        if 0 < s_ball <= 1 + 1e-12:
            cands.append(min(s_ball, 1.0))

    def psi(s):
        p = x + s * w
        return p[1] - float(graph.gamma(np.array([p[0]])))

    ss = np.linspace(0.0, 1.0, samples + 1)
    vals = np.array([psi(s) for s in ss])
    neg = np.nonzero(vals <= 0)[0]
    if neg.size:
        i = neg[0]
        if vals[i] == 0.0:
            cands.append(ss[i])
        else:
            cands.append(brentq(psi, ss[i - 1], ss[i], xtol=1e-14))
    if not cands:
        # segment leaves the bounding square; treat the far end as boundary
        return 1.0
    return max(min(cands), 1e-10)


def _decompose_spd(A: np.ndarray, dirs: list) -> np.ndarray:
    """Nonnegative weights alpha with sum alpha_m vhat_m vhat_m^T = A.

    Closed-form axis + diagonal split when |a12| <= min(a11, a22);
    otherwise nonnegative least squares over the available directions.
    """
    a11, a22, a12 = A[0, 0], A[1, 1], A[0, 1]
    alpha = np.zeros(len(dirs))
    if abs(a12) <= min(a11, a22) + 1e-14:
        if a12 >= 0:
            need = (1, 1) in dirs or a12 == 0
            if need:
                alpha[dirs.index((1, 0))] = a11 - a12
                alpha[dirs.index((0, 1))] = a22 - a12
                if a12 > 0:
                    alpha[dirs.index((1, 1))] = 2 * a12
                return alpha
        else:
            if (1, -1) in dirs:
                alpha[dirs.index((1, 0))] = a11 + a12
                alpha[dirs.index((0, 1))] = a22 + a12
                alpha[dirs.index((1, -1))] = -2 * a12
                return alpha
    # wide fallback
    B = np.empty((3, len(dirs)))
    for m, v in enumerate(dirs):
        vv = np.asarray(v, dtype=float)
        vv /= np.linalg.norm(vv)
        B[:, m] = [vv[0] ** 2, vv[1] ** 2, vv[0] * vv[1]]
    target = np.array([a11, a22, a12])
    sol, res = nnls(B, target)
    if res > 1e-10 * max(np.linalg.norm(target), 1.0):
        raise MonotonicityError(
            f"coefficient matrix {A.tolist()} admits no nonnegative "
            "decomposition over the stencil directions; widen the stencil"
        )
    return sol


def _operator_weights(problem: GridProblem, nodes: np.ndarray):
    """(per-node weights, None) for linear operators, or (None, policies)."""
    dirs = _DIRECTIONS[: problem.n_dir]
    op = problem.operator
    m = nodes.shape[0]
    if isinstance(op, LaplaceOp):
        w = np.zeros((m, len(dirs)))
        w[:, 0] = 1.0
        w[:, 1] = 1.0
        return w, None
    if isinstance(op, FixedOp):
        w = np.empty((m, len(dirs)))
        for k in range(m):
            A = np.asarray(op.A(nodes[k]), dtype=float)
            if op.E is not None:
                ev = sym_eigvals(A)
                if ev[0] < op.E.lam - 1e-10 or ev[-1] > op.E.Lam + 1e-10:
                    raise DomainError(
                        f"A({nodes[k]}) has eigenvalues {ev} outside "
                        f"[{op.E.lam}, {op.E.Lam}]"
                    )
            w[k] = _decompose_spd(A, dirs)
        return w, None
    if isinstance(op, PucciOp):
        lam, Lam = op.E.lam, op.E.Lam
        mats, alphas = [], []
        n_frames = 1 if op.E.is_laplacian else len(dirs) // 2
        for fi in range(n_frames):
            vi, wi = _FRAMES[fi]
            v = np.asarray(dirs[vi], dtype=float); v /= np.linalg.norm(v)
            u = np.asarray(dirs[wi], dtype=float); u /= np.linalg.norm(u)
            for a in (lam, Lam):
                for b in (lam, Lam):
                    A = a * np.outer(v, v) + b * np.outer(u, u)
                    if any(np.allclose(A, M, atol=1e-14) for M in mats):
                        continue
                    mats.append(A)
                    alphas.append(_decompose_spd(A, dirs))
        return None, {"matrices": mats, "alphas": alphas,
                      "sense": "min" if op.sign == "minus" else "max"}
    raise DomainError(f"unknown operator {op!r}")


class GridSolution:
    """Solved field on the grid; immutable after construction."""

    def __init__(self, problem: GridProblem, system: _DiscreteSystem,
                 values: np.ndarray, residual: float, iterations: int,
                 policy: Optional[np.ndarray] = None):
        self.problem = problem
        self.nodes = system.nodes
        self.values = values
        self.residual = residual
        self.iterations = iterations
        self.h = problem.h
        self.policy = policy
        self.certificate = system.certificate
        self.boundary_points = system.boundary_points
        self.boundary_values = system.boundary_values
        self._ids = system.ids
        self._xs = system.xs

    def grid_values(self, fill) -> np.ndarray:
        """Full-grid array; non-interior nodes take fill (scalar or callable)."""
        full = np.empty(self._ids.shape)
        if callable(fill):
            X, Y = np.meshgrid(self._xs, self._xs, indexing="ij")
            pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
            full[:] = np.asarray(fill(pts)).reshape(full.shape)
        else:
            full[:] = fill
        full[self._ids >= 0] = self.values
        return full

    def interpolate(self, pts: np.ndarray, fill=0.0) -> np.ndarray:
        """Bilinear interpolation from the four surrounding grid nodes."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        full = self.grid_values(fill)
        h = self.h
        x0 = self._xs[0]
        fi = (pts[:, 0] - x0) / h
        fj = (pts[:, 1] - x0) / h
        i = np.clip(np.floor(fi).astype(int), 0, len(self._xs) - 2)
        j = np.clip(np.floor(fj).astype(int), 0, len(self._xs) - 2)
        tx = fi - i
        ty = fj - j
        return ((1 - tx) * (1 - ty) * full[i, j] + tx * (1 - ty) * full[i + 1, j]
                + (1 - tx) * ty * full[i, j + 1] + tx * ty * full[i + 1, j + 1])

    def max_interior(self) -> float:
        return float(self.values.max())

    def max_boundary(self) -> float:
        return float(self.boundary_values.max())


def discretize(problem: GridProblem) -> _DiscreteSystem:
    """Assemble the per-direction monotone difference operators."""
    return _DiscreteSystem(problem)


def _linear_solve(A, rhs, tol_units):
    lu = splu(A)
    u = lu.solve(rhs)
    # iterative refinement in node units (residual over the diagonal scale)
    diag = np.abs(A.diagonal())
    for _ in range(3):
        res = A @ u - rhs
        if np.max(np.abs(res) / diag) <= tol_units:
            break
        u = u - lu.solve(res)
    return u, float(np.max(np.abs(A @ u - rhs) / diag))


def solve(problem: GridProblem, system: Optional[_DiscreteSystem] = None,
          max_policy_rounds: int = 200) -> GridSolution:
    """Solve the discrete problem; deterministic given the problem.

    Linear operators go through a sparse LU factorization with iterative
    refinement; Pucci operators alternate per-node optimal policy selection
    with frozen-policy linear solves until the policy is stationary.
    """
    sys_ = discretize(problem) if system is None else system
    f = np.atleast_1d(np.asarray(problem.rhs(sys_.nodes), dtype=float))
    if f.ndim == 0 or f.size == 1:
        f = np.full(sys_.m, float(f))
    g_scale = float(np.abs(sys_.boundary_values).max()) if sys_.boundary_values.size else 0.0
    tol = 1e-10 * g_scale + 1e-10

    if sys_.policies is None:
        A, c = sys_.operator_matrix(sys_.weights)
        u, res = _linear_solve(A, f - c, tol)
        if res > tol:
            raise ConvergenceError(f"linear solve residual {res:g} exceeds {tol:g}")
        return GridSolution(problem, sys_, u, res, 1)

    # policy iteration
    alphas = sys_.policies["alphas"]
    sense = sys_.policies["sense"]
    n_pol = len(alphas)
    policy = np.zeros(sys_.m, dtype=int)
    u = np.zeros(sys_.m)
    res = np.inf
    for it in range(1, max_policy_rounds + 1):
        alpha_nodes = np.stack([alphas[p] for p in policy])
        A, c = sys_.operator_matrix(alpha_nodes)
        u, res = _linear_solve(A, f - c, tol)
        # evaluate every policy's operator value at every node
        Evals = np.stack([sys_.D[m_] @ u + sys_.c[m_] for m_ in range(len(sys_.D))],
                         axis=1)                      # (m, ndir)
        pol_vals = Evals @ np.stack(alphas).T          # (m, npol)
        new_policy = (np.argmin(pol_vals, axis=1) if sense == "min"
                      else np.argmax(pol_vals, axis=1))
        # keep the old policy on exact ties to guarantee termination
        old_vals = pol_vals[np.arange(sys_.m), policy]
        best_vals = pol_vals[np.arange(sys_.m), new_policy]
        unchanged = np.abs(best_vals - old_vals) <= 1e-12 * (1 + np.abs(best_vals))
        new_policy[unchanged] = policy[unchanged]
        if np.array_equal(new_policy, policy):
            if res > tol:
                raise ConvergenceError(f"policy solve residual {res:g} exceeds {tol:g}")
            return GridSolution(problem, sys_, u, res, it, policy)
        policy = new_policy
    raise ConvergenceError(f"policy iteration did not settle in {max_policy_rounds} rounds")


@dataclass(frozen=True)
class ABPReport:
    max_interior: float
    max_boundary: float
    forcing_norm: float           # discrete L^n norm of f^-
    diameter: float
    bound_constant: float         # empirical (max_u - max_g)/(diam * ||f^-||)
    max_principle_exact: bool     # for f == 0: max attained on the boundary

    def to_dict(self):
        return {
            "max_interior": self.max_interior,
            "max_boundary": self.max_boundary,
            "forcing_norm": self.forcing_norm,
            "diameter": self.diameter,
            "empirical_C": self.bound_constant,
            "max_principle_exact": self.max_principle_exact,
        }


def abp_check(solution: GridSolution) -> ABPReport:
    """Discrete maximum-principle / ABP report for a solved problem."""
    prob = solution.problem
    f = np.atleast_1d(np.asarray(prob.rhs(solution.nodes), dtype=float))
    if f.size == 1:
        f = np.full(len(solution.nodes), float(f))
    h = solution.h
    n_dim = 2
    f_neg = np.minimum(f, 0.0)
    norm = float((np.sum(np.abs(f_neg) ** n_dim) * h**n_dim) ** (1.0 / n_dim))
    max_u = solution.max_interior()
    max_g = solution.max_boundary()
    diam = 2 * prob.r
    C = (max_u - max_g) / (diam * norm) if norm > 0 else 0.0
    return ABPReport(
        max_interior=max_u,
        max_boundary=max_g,
        forcing_norm=norm,
        diameter=diam,
        bound_constant=float(max(C, 0.0)),
        max_principle_exact=bool(norm == 0.0 and max_u <= max_g + 1e-12 * (1 + abs(max_g))),
    )
