"""Benchmark problems: constrained l^s location, finite-neuron s-Laplacian,
a grid-graph Darcy-Forchheimer analogue and random quadratic KKT fixtures."""
from __future__ import annotations

import numpy as np

from .alm import ConstrainedProblem
from .normed_spaces import holder_conjugate
from .oracles import DELTA_HESS, FunctionalOracle, QuadraticOracle


class LocationOracle(FunctionalOracle):
    """``F(v) = (1/s) sum_j ||v - a_j||_s^s`` for anchors stored row-wise."""

    def __init__(self, anchors, s: float, delta_hess: float = DELTA_HESS):
        self.anchors = np.asarray(anchors, dtype=float)
        self.s = float(s)
        self.dim = self.anchors.shape[1]
        self.delta_hess = delta_hess

    def value(self, v):
        d = self._vec(v)[None, :] - self.anchors
        return float(np.sum(np.abs(d) ** self.s) / self.s)

    def gradient(self, v):
        d = self._vec(v)[None, :] - self.anchors
        return np.sum(np.sign(d) * np.abs(d) ** (self.s - 1.0), axis=0)

    def hessian(self, v):
        d = np.maximum(np.abs(self._vec(v)[None, :] - self.anchors), self.delta_hess)
        return np.diag((self.s - 1.0) * np.sum(d ** (self.s - 2.0), axis=0))


class LocationProblem(ConstrainedProblem):
    kind = "location"

    def __init__(self, n: int, J: int, s: float, seed: int):
        if n < 2 or J < 1 or not s > 1.0:
            raise ValueError("location problem needs n >= 2, J >= 1, s > 1")
        self.n, self.J, self.s, self.seed = int(n), int(J), float(s), int(seed)
        rng = np.random.default_rng(seed)
        self.anchors = rng.uniform(-1.0, 1.0, size=(J, n))
        B = np.zeros((1, n))
        B[0, 0] = 1.0
        super().__init__(LocationOracle(self.anchors, s), B, np.zeros(1))

    def spec(self):
        return {"kind": self.kind, "n": self.n, "J": self.J, "s": self.s, "seed": self.seed}


def make_location(n: int = 10, J: int = 100, s: float = 3.0, seed: int = 0) -> LocationProblem:
    return LocationProblem(n, J, s, seed)


def _partial_sums(c):
    return np.cumsum(c)


def _adjoint_partial_sums(x):
    """``T^t x`` for the all-ones lower-triangular ``T``: reverse cumulative sum."""
    return np.cumsum(x[::-1])[::-1]


class FiniteNeuronOracle(FunctionalOracle):
    """Ritz energy of ``v = sum_i c_i ReLU(x - t_i)`` with load ``f = 1``.

    ``v'`` equals the partial sum ``S_k = c_1 + ... + c_k`` on the k-th cell,
    so the energy is ``(1/(sN)) sum_k |S_k|^s - sum_i c_i (1 - t_i)^2 / 2``.
    """

    def __init__(self, N: int, s: float, delta_hess: float = DELTA_HESS):
        self.N, self.s, self.dim = int(N), float(s), int(N)
        self.knots = np.arange(N) / N
        self.load = 0.5 * (1.0 - self.knots) ** 2
        self.delta_hess = delta_hess
        self.T = np.tril(np.ones((N, N)))

    def value(self, c):
        c = self._vec(c)
        S = _partial_sums(c)
        return float(np.sum(np.abs(S) ** self.s) / (self.s * self.N) - self.load @ c)

    def gradient(self, c):
        S = _partial_sums(self._vec(c))
        return _adjoint_partial_sums(np.sign(S) * np.abs(S) ** (self.s - 1.0) / self.N) - self.load

    def hessian(self, c):
        S = np.maximum(np.abs(_partial_sums(self._vec(c))), self.delta_hess)
        D = (self.s - 1.0) * S ** (self.s - 2.0) / self.N
        return self.T.T @ (D[:, None] * self.T)


def w1s_seminorm_distance(c1, c2, s: float, N: int | None = None) -> float:
    """``((1/N) sum_k |S_k(c1) - S_k(c2)|^s)^(1/s)``: exact W^{1,s} seminorm of the difference."""
    c1, c2 = np.asarray(c1, dtype=float), np.asarray(c2, dtype=float)
    if c1.shape != c2.shape:
        raise ValueError("coefficient vectors differ in length")
    N = c1.size if N is None else N
    dS = np.abs(_partial_sums(c1 - c2))
    m = dS.max(initial=0.0)
    if m == 0.0:
        return 0.0
    return float(m * (np.sum((dS / m) ** s) / N) ** (1.0 / s))


class FiniteNeuronProblem(ConstrainedProblem):
    kind = "finite_neuron"

    def __init__(self, N: int, s: float):
        if N < 2 or not s > 1.0:
            raise ValueError("finite neuron problem needs N >= 2, s > 1")
        self.N, self.s = int(N), float(s)
        oracle = FiniteNeuronOracle(N, s)
        self.knots = oracle.knots
        super().__init__(oracle, (1.0 - self.knots)[None, :], np.zeros(1))

    def primal_error(self, u, u_ref):
        return w1s_seminorm_distance(u, u_ref, self.s, self.N)

    def evaluate(self, c, x):
        """Network output ``sum_i c_i ReLU(x - t_i)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.maximum(x[:, None] - self.knots[None, :], 0.0) @ np.asarray(c, dtype=float)

    def spec(self):
        return {"kind": self.kind, "N": self.N, "s": self.s}


def make_finite_neuron(N: int = 64, s: float = 3.0) -> FiniteNeuronProblem:
    return FiniteNeuronProblem(N, s)


def slap_exact_solution(s: float, x):
    """Solution of ``-(|u'|^{s-2} u')' = 1`` on (0, 1) with zero boundary values."""
    if not s > 1.0:
        raise ValueError("s must exceed 1")
    q = holder_conjugate(s)
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("x must lie in [0, 1]")
    out = (0.5 ** q - np.abs(x - 0.5) ** q) / q
    return float(out) if out.ndim == 0 else out


def grid_incidence(m: int):
    """Signed cell-edge incidence of an ``m x m`` cell grid.

    Interior edges join neighbouring cells (oriented towards increasing
    index); every boundary face carries an outward edge to a ghost cell.
    Returns ``(B, boundary_mask)``; ``(Bv)_c`` is the net outflow of cell c.
    """
    def cell(i, j):
        return i * m + j

    edges = []
    boundary = []
    for i in range(m):
        for j in range(m):
            if j + 1 < m:
                edges.append((cell(i, j), cell(i, j + 1)))
                boundary.append(False)
            if i + 1 < m:
                edges.append((cell(i, j), cell(i + 1, j)))
                boundary.append(False)
    for i in range(m):
        for j in range(m):
            faces = (i == 0) + (i == m - 1) + (j == 0) + (j == m - 1)
            for _ in range(faces):
                edges.append((cell(i, j), None))
                boundary.append(True)
    B = np.zeros((m * m, len(edges)))
    for e, (a, b) in enumerate(edges):
        B[a, e] = 1.0
        if b is not None:
            B[b, e] = -1.0
    return B, np.array(boundary)


class ForchheimerOracle(FunctionalOracle):
    """Per-edge ``(mu/(2 rho K)) v^2 + (beta/(3 rho)) |v|^3 - f v``."""

    def __init__(self, n_edges: int, mu_visc, rho, K, beta_f, loads=None):
        self.dim = n_edges
        self.a = mu_visc / (rho * K)
        self.b = beta_f / rho
        self.f = np.zeros(n_edges) if loads is None else np.asarray(loads, dtype=float)

    def value(self, v):
        v = self._vec(v)
        return float(np.sum(0.5 * self.a * v ** 2 + self.b / 3.0 * np.abs(v) ** 3 - self.f * v))

    def gradient(self, v):
        v = self._vec(v)
        return self.a * v + self.b * np.abs(v) * v - self.f

    def hessian(self, v):
        return np.diag(self.a + 2.0 * self.b * np.abs(self._vec(v)))


class GraphDarcyForchheimer(ConstrainedProblem):
    kind = "graph_df"

    def __init__(self, m: int, mu_visc: float, rho: float, K: float, beta_f: float, seed: int):
        if m < 2:
            raise ValueError("grid needs at least 2 cells per side")
        if min(mu_visc, rho, K) <= 0 or beta_f < 0:
            raise ValueError("coefficients must be positive (beta_f nonnegative)")
        self.m, self.seed = int(m), int(seed)
        self.mu_visc, self.rho, self.K, self.beta_f = float(mu_visc), float(rho), float(K), float(beta_f)
        B, self.boundary_mask = grid_incidence(m)
        rng = np.random.default_rng(seed)
        self.sources = rng.uniform(-1.0, 1.0, size=m * m)
        oracle = ForchheimerOracle(B.shape[1], mu_visc, rho, K, beta_f)
        super().__init__(oracle, B, self.sources)

    def spec(self):
        return {"kind": self.kind, "m": self.m, "mu_visc": self.mu_visc, "rho": self.rho,
                "K": self.K, "beta_f": self.beta_f, "seed": self.seed}


def make_graph_df(m: int = 8, mu_visc: float = 1.0, rho: float = 1.0, K: float = 1.0,
                  beta_f: float = 10.0, seed: int = 0) -> GraphDarcyForchheimer:
    return GraphDarcyForchheimer(m, mu_visc, rho, K, beta_f, seed)


class QuadraticKktFixture(ConstrainedProblem):
    """Random SPD quadratic with spectrum spread over [1, 10] and random constraints.

    The exact saddle point solves ``[A B^t; B 0][u; lam] = [b; g]``.
    """

    kind = "quadratic"

    def __init__(self, dim: int, n_constraints: int, seed: int):
        if not 1 <= n_constraints < dim:
            raise ValueError("need 1 <= n_constraints < dim")
        self.dim, self.n_constraints, self.seed = int(dim), int(n_constraints), int(seed)
        rng = np.random.default_rng(seed)
        Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        self.spectrum = np.linspace(1.0, 10.0, dim)
        A = Q @ np.diag(self.spectrum) @ Q.T
        A = 0.5 * (A + A.T)
        b = rng.standard_normal(dim)
        B = rng.standard_normal((n_constraints, dim))
        if np.linalg.matrix_rank(B) < n_constraints:
            raise ValueError("sampled B is rank deficient; choose another seed")
        g = rng.standard_normal(n_constraints)
        super().__init__(QuadraticOracle(A, b), B, g)
        self.A, self.b = A, b
        K = np.block([[A, B.T], [B, np.zeros((n_constraints, n_constraints))]])
        sol = np.linalg.solve(K, np.concatenate([b, g]))
        self.u_exact, self.lam_exact = sol[:dim], sol[dim:]

    @property
    def L(self) -> float:
        return float(self.spectrum[-1])

    def spec(self):
        return {"kind": self.kind, "dim": self.dim, "n_constraints": self.n_constraints, "seed": self.seed}


def make_quadratic_fixture(dim: int = 12, n_constraints: int = 3, seed: int = 0) -> QuadraticKktFixture:
    return QuadraticKktFixture(dim, n_constraints, seed)


_FACTORIES = {
    "location": make_location,
    "finite_neuron": make_finite_neuron,
    "graph_df": make_graph_df,
    "quadratic": make_quadratic_fixture,
}


def make_problem(spec: dict) -> ConstrainedProblem:
    """Build a problem from its serialised spec (``kind`` plus parameters)."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _FACTORIES:
        raise ValueError(f"unknown problem kind {kind!r}; expected one of {sorted(_FACTORIES)}")
    try:
        return _FACTORIES[kind](**spec)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind!r}: {exc}") from exc
