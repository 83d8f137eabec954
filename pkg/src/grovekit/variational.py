"""Criticality solving and geodesics over policy-lever space.

Payoffs are plain finite-dimensional functionals; criticality means a
vanishing central-difference gradient.  Metrics on lever space come either
from user callables or from second differences of a finite-group policy
cost, and geodesics are integrated with a classical fourth-order
Runge-Kutta scheme.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .infotheory import smoothed_delta


class VariationalError(Exception):
    pass


class CriticalityError(VariationalError):
    """Raised when the iteration cap is reached; carries the best point."""

    def __init__(self, message: str, best_theta: np.ndarray, residual: float):
        super().__init__(message)
        self.best_theta = best_theta
        self.residual = residual


@dataclass(frozen=True)
class Functional:
    """A real-valued payoff over a d-dimensional parameter vector."""

    evaluate: Callable[[np.ndarray], float]
    dimension: int
    tag: str = ""

    def __call__(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dimension,):
            raise VariationalError(
                f"{self.tag or 'functional'}: expected {self.dimension} "
                f"parameters, got shape {theta.shape}")
        return float(self.evaluate(theta))


def first_variation(F: Functional, theta, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of F at theta."""
    if h <= 0:
        raise VariationalError("step h must be > 0")
    theta = np.asarray(theta, dtype=float)
    grad = np.empty(F.dimension)
    for i in range(F.dimension):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        fu, fd = F(up), F(dn)
        if not (math.isfinite(fu) and math.isfinite(fd)):
            raise VariationalError(
                f"non-finite evaluation while varying component {i} at "
                f"offset ±{h}")
        grad[i] = (fu - fd) / (2.0 * h)
    return grad


def solve_critical(F: Functional, theta0, tol: float = 1e-6,
                   h: float = 1e-5, max_iter: int = 50000,
                   step0: float = 1.0,
                   trace: list | None = None) -> np.ndarray:
    """Damped gradient descent with backtracking until |grad| < tol.

    Deterministic: fixed step schedule, no randomness.  The first point
    reaching the residual tolerance is returned.  Hitting the iteration
    cap raises CriticalityError carrying the best point seen.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    value = F(theta)
    best_theta, best_res = theta.copy(), math.inf
    step = step0
    for it in range(max_iter):
        grad = first_variation(F, theta, h)
        res = float(np.linalg.norm(grad))
        if trace is not None:
            trace.append((it, theta.copy(), value, res))
        if res < best_res:
            best_theta, best_res = theta.copy(), res
        if res < tol:
            return theta
        moved = False
        while step > 1e-14:
            cand = theta - step * grad
            cval = F(cand)
            if math.isfinite(cval) and cval < value:
                theta, value = cand, cval
                step *= 1.5
                moved = True
                break
            step *= 0.5
        if not moved:
            # cannot descend further at machine scale; report best point
            break
    raise CriticalityError(
        f"no point with residual < {tol} within {max_iter} iterations "
        f"(best residual {best_res:.3e})", best_theta, best_res)


def critical_trace_csv(trace: Sequence[tuple]) -> str:
    if not trace:
        return "iteration,value,residual\n"
    d = len(trace[0][1])
    buf = io.StringIO()
    cols = ",".join(f"theta{i}" for i in range(d))
    buf.write(f"iteration,{cols},value,residual\n")
    for it, theta, value, res in trace:
        pts = ",".join(repr(float(t)) for t in theta)
        buf.write(f"{it},{pts},{value!r},{res!r}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# metrics and geodesics
# ---------------------------------------------------------------------------

MIN_EIGENVALUE = 1e-9


@dataclass(frozen=True)
class MetricField:
    """Pointwise symmetric positive-definite metric on lever space."""

    dimension: int
    matrix_at: Callable[[np.ndarray], np.ndarray]

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        g = np.asarray(self.matrix_at(p), dtype=float)
        if g.shape != (self.dimension, self.dimension):
            raise VariationalError(
                f"metric returned shape {g.shape}, expected "
                f"({self.dimension}, {self.dimension})")
        if not np.allclose(g, g.T, atol=0.0):
            raise VariationalError(f"metric is not symmetric at {p.tolist()}")
        if float(np.linalg.eigvalsh(g)[0]) <= MIN_EIGENVALUE:
            raise VariationalError(
                f"metric is not positive-definite at {p.tolist()}")
        return g


def euclidean_metric(dimension: int) -> MetricField:
    eye = np.eye(dimension)
    return MetricField(dimension, lambda p: eye)


def constant_metric(matrix) -> MetricField:
    matrix = np.asarray(matrix, dtype=float)
    return MetricField(matrix.shape[0], lambda p: matrix)


def sphere_metric() -> MetricField:
    """Unit 2-sphere in (theta, phi) coordinates, diag(1, sin^2 theta)."""
    def g(p):
        s = math.sin(p[0])
        return np.array([[1.0, 0.0], [0.0, s * s]])
    return MetricField(2, g)


def christoffel(g: MetricField, p, h: float = 1e-5) -> np.ndarray:
    """Connection coefficients Gamma^k_ij by central metric differences."""
    if h <= 0:
        raise VariationalError("step h must be > 0")
    p = np.asarray(p, dtype=float)
    d = g.dimension
    dg = np.empty((d, d, d))  # dg[l] = d g / d p_l
    for l in range(d):
        up, dn = p.copy(), p.copy()
        up[l] += h
        dn[l] -= h
        dg[l] = (g(up) - g(dn)) / (2.0 * h)
    ginv = np.linalg.inv(g(p))
    gamma = np.empty((d, d, d))
    for k in range(d):
        for i in range(d):
            for j in range(d):
                s = 0.0
                for l in range(d):
                    s += ginv[k, l] * (dg[i][l, j] + dg[j][l, i] - dg[l][i, j])
                gamma[k, i, j] = 0.5 * s
    return gamma


@dataclass(frozen=True)
class GeodesicPath:
    """Discrete geodesic: points and velocities at uniform parameter steps."""

    points: np.ndarray        # (steps + 1, d)
    velocities: np.ndarray    # (steps + 1, d)
    h: float

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def energies(self, g: MetricField) -> np.ndarray:
        """g(v, v) at every sample; constant along a true geodesic."""
        return np.array([float(v @ g(p) @ v)
                         for p, v in zip(self.points, self.velocities)])

    def to_csv(self) -> str:
        d = self.points.shape[1]
        v0 = ";".join(repr(float(v)) for v in self.velocities[0])
        buf = io.StringIO()
        buf.write(f"# h={self.h!r} velocity={v0}\n")
        buf.write(",".join([f"p{i}" for i in range(d)]
                           + [f"v{i}" for i in range(d)]) + "\n")
        for p, v in zip(self.points, self.velocities):
            buf.write(",".join(repr(float(x)) for x in (*p, *v)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GeodesicPath":
        lines = text.strip().splitlines()
        if not lines or not lines[0].startswith("# h="):
            raise VariationalError("missing geodesic header")
        h = float(lines[0].split("h=")[1].split()[0])
        rows = [tuple(float(x) for x in ln.split(",")) for ln in lines[2:]]
        arr = np.array(rows)
        d = arr.shape[1] // 2
        return cls(arr[:, :d], arr[:, d:], h)


def integrate_geodesic(g: MetricField, start, velocity, steps: int,
                       h: float, diff_h: float = 1e-5) -> GeodesicPath:
    """Integrate x'' = -Gamma(x)(v, v) with classical RK4.

    A metric failure mid-path raises VariationalError with the partial
    path attached as the ``partial`` attribute.
    """
    if steps < 1:
        raise VariationalError("need at least one step")
    x = np.asarray(start, dtype=float).copy()
    v = np.asarray(velocity, dtype=float).copy()
    points, velocities = [x.copy()], [v.copy()]

    def accel(xx, vv):
        gamma = christoffel(g, xx, diff_h)
        return -np.einsum("kij,i,j->k", gamma, vv, vv)

    for n in range(steps):
        try:
            k1x, k1v = v, accel(x, v)
            k2x, k2v = v + 0.5 * h * k1v, accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
            k3x, k3v = v + 0.5 * h * k2v, accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
            k4x, k4v = v + h * k3v, accel(x + h * k3x, v + h * k3v)
        except VariationalError as exc:
            err = VariationalError(
                f"metric failed at step {n}: {exc}")
            err.partial = GeodesicPath(np.array(points), np.array(velocities), h)
            raise err from exc
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        points.append(x.copy())
        velocities.append(v.copy())
    return GeodesicPath(np.array(points), np.array(velocities), h)


# ---------------------------------------------------------------------------
# finite groups and policy cost
# ---------------------------------------------------------------------------

MAX_GROUP_ORDER = 64


@dataclass(frozen=True)
class FiniteGroup:
    """Finite group by composition table; element 0 is the identity."""

    labels: tuple[str, ...]
    table: np.ndarray            # table[a, b] = index of a*b
    generators: tuple[int, ...]

    def __post_init__(self):
        n = len(self.labels)
        if n == 0:
            raise VariationalError("group must be nonempty")
        if n > MAX_GROUP_ORDER:
            raise VariationalError(f"group order {n} exceeds {MAX_GROUP_ORDER}")
        t = np.asarray(self.table)
        if t.shape != (n, n) or t.min() < 0 or t.max() >= n:
            raise VariationalError("malformed composition table")
        if not (np.all(t[0] == np.arange(n)) and np.all(t[:, 0] == np.arange(n))):
            raise VariationalError("element 0 is not an identity")
        # every row and column must be a permutation (inverses exist)
        full = frozenset(range(n))
        for a in range(n):
            if set(t[a]) != full or set(t[:, a]) != full:
                raise VariationalError(
                    f"element {self.labels[a]} has no inverse")
        # exhaustive associativity check: (a*b)*c == a*(b*c)
        if not np.array_equal(t[t[:, :, None], np.arange(n)[None, None, :]],
                              t[np.arange(n)[:, None, None], t[None, :, :]]):
            raise VariationalError("composition table is not associative")
        for x in self.generators:
            if not 0 <= x < n:
                raise VariationalError(f"generator index {x} out of range")

    @property
    def order(self) -> int:
        return len(self.labels)

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def inverse(self, a: int) -> int:
        row = np.nonzero(self.table[a] == 0)[0]
        return int(row[0])


def cyclic_group(n: int) -> FiniteGroup:
    idx = np.arange(n)
    table = (idx[:, None] + idx[None, :]) % n
    labels = tuple(f"r{i}" for i in range(n))
    return FiniteGroup(labels, table, (1 % n,))


def dihedral_group(n: int) -> FiniteGroup:
    """Symmetries of the regular n-gon, order 2n; (r, s) with s r s = r^-1."""
    size = 2 * n

    def compose(a, b):
        ra, fa = a % n, a // n
        rb, fb = b % n, b // n
        if fa == 0:
            return ((ra + rb) % n) + n * fb
        return ((ra - rb) % n) + n * (1 - fb)

    table = np.array([[compose(a, b) for b in range(size)]
                      for a in range(size)])
    labels = tuple(f"r{i}" for i in range(n)) + tuple(f"sr{i}" for i in range(n))
    return FiniteGroup(labels, table, (1 % n, n))


def direct_product(a: FiniteGroup, b: FiniteGroup) -> FiniteGroup:
    na, nb = a.order, b.order
    if na * nb > MAX_GROUP_ORDER:
        raise VariationalError(
            f"product order {na * nb} exceeds {MAX_GROUP_ORDER}")

    def idx(i, j):
        return i * nb + j

    table = np.empty((na * nb, na * nb), dtype=int)
    for i in range(na):
        for j in range(nb):
            for k in range(na):
                for l in range(nb):
                    table[idx(i, j), idx(k, l)] = idx(a.mul(i, k), b.mul(j, l))
    labels = tuple(f"{la}.{lb}" for la in a.labels for lb in b.labels)
    gens = tuple(idx(x, 0) for x in a.generators) + \
        tuple(idx(0, y) for y in b.generators)
    return FiniteGroup(labels, table, gens)


@dataclass(frozen=True)
class PolicyCostFunction:
    """Pairwise action cost over a finite group.

    ``cost(a, b)`` takes two element indices and returns a real; the
    scalar profile used by the information density is P(g) = cost(e, g).
    """

    group: FiniteGroup
    cost: Callable[[int, int], float]

    def profile(self) -> np.ndarray:
        vals = np.array([float(self.cost(0, g))
                         for g in range(self.group.order)])
        if not np.all(np.isfinite(vals)):
            bad = int(np.nonzero(~np.isfinite(vals))[0][0])
            raise VariationalError(
                f"cost is not finite at element {self.group.labels[bad]}")
        return vals


def word_distance_cost(group: FiniteGroup) -> PolicyCostFunction:
    """cost(a, b) = generator word length of a^-1 b (breadth-first)."""
    n = group.order
    dist = np.full(n, -1, dtype=int)
    dist[0] = 0
    frontier = [0]
    gens = set(group.generators) | {group.inverse(x) for x in group.generators}
    while frontier:
        nxt = []
        for g in frontier:
            for x in gens:
                t = group.mul(g, x)
                if dist[t] < 0:
                    dist[t] = dist[g] + 1
                    nxt.append(t)
        frontier = nxt
    if dist.min() < 0:
        raise VariationalError("generators do not generate the group")
    return PolicyCostFunction(
        group, lambda a, b: float(dist[group.mul(group.inverse(a), b)]))


def policy_information(pcf: PolicyCostFunction, eps: float,
                       normalized: bool = True, samples: int = 512) -> float:
    """Information of the policy density f(g, a) = smoothed delta of P(g) - a.

    The score combines the offset derivative with symmetric log-differences
    along each generator direction.  With ``normalized`` the group sum uses
    counting measure weighted by 1/|G| (a constant cost then yields the
    single-delta self-information, 1/eps^2); without it the plain sum is
    returned, which scales linearly in group size for cost-neutral factors.
    """
    if eps <= 0:
        raise VariationalError("smoothing width must be > 0")
    group = pcf.group
    prof = pcf.profile()
    lo = float(prof.min()) - 6.0 * eps
    hi = float(prof.max()) + 6.0 * eps
    da = (hi - lo) / samples
    alpha = lo + (np.arange(samples) + 0.5) * da

    f = smoothed_delta(prof[:, None], alpha[None, :], eps)  # (|G|, samples)
    floor = 1e-300
    logf = np.log(np.maximum(f, floor))
    dlog_a = np.gradient(logf, da, axis=1)
    score2 = dlog_a ** 2
    for x in group.generators:
        fwd = np.array([group.mul(g, x) for g in range(group.order)])
        bwd = np.array([group.mul(g, group.inverse(x))
                        for g in range(group.order)])
        dlog_g = 0.5 * (logf[fwd] - logf[bwd])
        score2 = score2 + dlog_g ** 2
    total = float(np.sum(f * score2) * da)
    return total / group.order if normalized else total


def lever_metric(pcf: PolicyCostFunction, floor: float = 1e-6) -> MetricField:
    """Constant metric from second cost differences on length-2 words.

    h_ij = P(x_i x_j) - P(x_i) - P(x_j) + P(e) over the generator levers,
    symmetrized; the spectrum is floored at ``floor`` to keep the field
    positive-definite.
    """
    group = pcf.group
    gens = group.generators
    if not gens:
        raise VariationalError("policy group declares no generators")
    d = len(gens)
    pe = float(pcf.cost(0, 0))
    p1 = [float(pcf.cost(0, x)) for x in gens]
    h = np.empty((d, d))
    for i, xi in enumerate(gens):
        for j, xj in enumerate(gens):
            h[i, j] = float(pcf.cost(0, group.mul(xi, xj))) - p1[i] - p1[j] + pe
    sym = 0.5 * (h + h.T)
    vals, vecs = np.linalg.eigh(sym)
    vals = np.maximum(vals, floor)
    return constant_metric(vecs @ np.diag(vals) @ vecs.T)


def optimal_policy_path(pcf: PolicyCostFunction, start, steps: int,
                        velocity=None, h: float = 0.01) -> GeodesicPath:
    """Geodesic of the lever metric from ``start``.

    The default velocity is the unit vector along the first lever axis.
    """
    metric = lever_metric(pcf)
    d = metric.dimension
    start = np.asarray(start, dtype=float)
    if start.shape != (d,):
        raise VariationalError(f"start must have {d} lever coordinates")
    if velocity is None:
        velocity = np.zeros(d)
        velocity[0] = 1.0
    return integrate_geodesic(metric, start, velocity, steps, h)
