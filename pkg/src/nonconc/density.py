"""Density of the Phi-Hausdorff measure and its positivity.

At a point ``x`` the density is

    inf over T in GL(n) of  max_{|a| = q} |(T*d)^a Phi(x, .., x)|^(n/q) / |det T|

where ``a = (alpha_1, .., alpha_k)`` ranges over k-tuples of multiindices of
total order q and ``(T*d)_i = sum_j T[j][i] d_j`` acts on every block.

The derivatives are read off the Taylor expansion ``Phi(x + v_1, .., x + v_k)``:
each block-homogeneous part becomes a dense derivative tensor with one axis
per differentiation, and the substitution ``v_j = T w_j`` contracts every axis
with ``T``.  The objective is scale invariant, so the search runs over
``T = O diag(e^u)`` with ``O`` orthogonal and ``sum(u) = 0``.

Positivity is decided by the convex-hull test: the density is positive iff for
every orthogonal frame ``O`` the point ``(q/n, .., q/n)`` lies in the convex
hull of the exponent sums ``alpha_1 + .. + alpha_k`` of the nonvanishing
order-q derivatives in that frame.  The identity frame is checked exactly;
other frames are sampled, so a "positive" verdict is evidence, not proof.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import linprog, minimize

from .diagonal import taylor_at
from .geometry import PhiSpec
from .poly import Polynomial, PolyVector, as_rational, det_rational, inverse_rational, linear_images

U_CLIP = 30.0
LOWER_ORDER_TOL = 1e-10
CLOUD_REL_TOL = 1e-10


# ---------------------------------------------------------------------------
# derivative tensors


@dataclass
class BlockTensor:
    """Derivative tensor of one block-homogeneous part.

    ``data`` has shape ``(m, n, .., n)`` with ``sum(degrees)`` trailing axes,
    grouped by block; entry ``[c, i_1, .., i_D]`` is the mixed partial of
    component ``c`` in the listed coordinates at the origin.
    """

    degrees: tuple[int, ...]
    data: np.ndarray

    @property
    def order(self) -> int:
        return sum(self.degrees)


def _block_index_tuples(mono: Sequence[int], n: int, k: int):
    # all orderings of the differentiation indices, permuted within each block
    per_block = []
    for j in range(k):
        idx = []
        for i in range(n):
            idx += [i] * mono[j * n + i]
        per_block.append(sorted(set(permutations(idx))))

    def rec(j):
        if j == k:
            yield ()
            return
        for head in per_block[j]:
            for tail in rec(j + 1):
                yield head + tail

    yield from rec(0)


def derivative_tensors(
    parts: PolyVector | Sequence[Polynomial],
    n: int,
    k: int,
    orders: Sequence[int] | None = None,
    max_block: int | None = None,
) -> list[BlockTensor]:
    """Dense derivative tensors at the origin of a polynomial in k blocks of n variables."""
    comps = list(parts)
    m = len(comps)
    groups: dict[tuple[int, ...], dict[tuple[int, ...], list]] = {}
    for c, p in enumerate(comps):
        for mono, coef in p.terms():
            degrees = tuple(sum(mono[j * n:(j + 1) * n]) for j in range(k))
            total = sum(degrees)
            if total == 0:
                continue
            if orders is not None and total not in orders:
                continue
            if max_block is not None and max(degrees) > max_block:
                continue
            groups.setdefault(degrees, {}).setdefault(mono, [Fraction(0)] * m)[c] += coef
    out = []
    for degrees, monos in sorted(groups.items()):
        D = sum(degrees)
        data = np.zeros((m,) + (n,) * D)
        for mono, coefs in monos.items():
            fact = 1
            for e in mono:
                fact *= math.factorial(e)
            vals = np.array([float(c * fact) for c in coefs])
            for idx in _block_index_tuples(mono, n, k):
                data[(slice(None),) + idx] = vals
        out.append(BlockTensor(degrees, data))
    return out


def transform_tensor(data: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Contract every derivative axis with ``B`` (the substitution ``v = B w``)."""
    D = data.ndim - 1
    out = data
    for _ in range(D):
        out = np.tensordot(out, B, axes=([1], [0]))
    return out


def _entry_norms(data: np.ndarray, norm: str) -> np.ndarray:
    flat = data.reshape(data.shape[0], -1)
    if flat.shape[0] == 1:
        return np.abs(flat[0])
    if norm == "euclidean":
        return np.sqrt((flat ** 2).sum(axis=0))
    return np.abs(flat).max(axis=0)


def _exponent_counts(degrees: Sequence[int], n: int) -> np.ndarray:
    """For each flattened tensor entry, the coordinate counts summed over blocks."""
    D = sum(degrees)
    grids = np.indices((n,) * D).reshape(D, -1).T if D else np.zeros((1, 0), dtype=int)
    counts = np.zeros((grids.shape[0], n), dtype=int)
    for axis in range(D):
        counts[np.arange(grids.shape[0]), grids[:, axis]] += 1
    return counts


# ---------------------------------------------------------------------------
# Taylor data at a point


class QOrderError(ValueError):
    """A derivative of order below q is nonzero at the point."""


@dataclass
class OrderQData:
    n: int
    k: int
    q: int
    norm: str
    part: PolyVector
    tensors: list[BlockTensor]

    def max_at(self, T: np.ndarray) -> float:
        best = 0.0
        for bt in self.tensors:
            vals = _entry_norms(transform_tensor(bt.data, T), self.norm)
            if vals.size:
                best = max(best, float(vals.max()))
        return best

    def objective(self, T) -> float:
        """``max |(T*d)^a Phi|^(n/q) / |det T|``."""
        T = np.asarray(T, dtype=float)
        det = abs(np.linalg.det(T))
        if det == 0:
            return math.inf
        return self.max_at(T) ** (self.n / self.q) / det


def order_q_data(phi: PhiSpec, q: int, x: Sequence, params: Sequence = (), norm: str | None = None) -> OrderQData:
    """Order-q Taylor part at ``(x, .., x)``; raises QOrderError if a lower order survives."""
    if phi.params and len(params) != phi.params:
        raise ValueError(f"Phi has {phi.params} parameters; pass their values")
    parts = taylor_at(phi, x, params)
    nv = phi.k * phi.n
    part = parts.get(q, PolyVector([Polynomial.zero(nv) for _ in range(phi.m)]))
    scale = max((abs(c) for p in part for _, c in p.terms()), default=Fraction(0))
    for d, lower in parts.items():
        if d >= q:
            continue
        worst = max(abs(c) for p in lower for _, c in p.terms())
        if scale == 0 or worst > LOWER_ORDER_TOL * scale:
            raise QOrderError(f"derivative of order {d} < q = {q} is nonzero at this point")
    tensors = derivative_tensors(part, phi.n, phi.k, orders=[q])
    return OrderQData(phi.n, phi.k, q, norm or phi.norm, part, tensors)


def density_objective(phi: PhiSpec, q: int, x: Sequence, params: Sequence = (), norm: str | None = None):
    """The function ``T -> max |(T*d)^a Phi(x..x)|^(n/q) / |det T|`` for float matrices."""
    return order_q_data(phi, q, x, params, norm).objective


# ---------------------------------------------------------------------------
# frame optimization


def skew(theta: np.ndarray, n: int) -> np.ndarray:
    S = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    S[iu] = theta
    return S - S.T


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix."""
    Z = rng.standard_normal((n, n))
    Qm, R = np.linalg.qr(Z)
    return Qm * np.sign(np.diag(R))


def frame_matrix(O0: np.ndarray, params: np.ndarray, n: int) -> tuple[np.ndarray, float]:
    """``T = O0 expm(skew(theta)) diag(e^u)`` and ``log|det T|``."""
    nt = n * (n - 1) // 2
    theta, u = params[:nt], params[nt:]
    u = np.clip(u, -U_CLIP, U_CLIP)
    ufull = np.append(u, np.clip(-u.sum(), -U_CLIP, U_CLIP))
    O = O0 @ expm(skew(theta, n)) if nt else O0
    return O * np.exp(ufull), float(ufull.sum())


@dataclass
class FrameSearch:
    best_log: float
    best_T: np.ndarray
    starts: int
    iterations: int
    evaluations: int


def minimize_over_frames(log_objective, n: int, starts: int, maxiter: int, seed: int, workers: int = 1) -> FrameSearch:
    """Multi-start Nelder-Mead over ``(theta, u)``; the first start is the identity frame.

    ``log_objective(T, logdet)`` returns the log of the objective (``-inf``
    for an exact zero).  Every start owns a child seed, so the result does
    not depend on ``workers``.
    """
    nt = n * (n - 1) // 2
    dim = nt + n - 1
    if dim == 0:
        T = np.eye(n)
        return FrameSearch(log_objective(T, 0.0), T, 1, 0, 1)
    children = np.random.SeedSequence(seed).spawn(starts)

    def run(i: int):
        rng = np.random.default_rng(children[i])
        if i == 0:
            O0, x0 = np.eye(n), np.zeros(dim)
        else:
            O0 = random_orthogonal(rng, n)
            x0 = np.concatenate([np.zeros(nt), rng.standard_normal(n - 1)])
        best = [math.inf, None]

        def f(p):
            T, logdet = frame_matrix(O0, p, n)
            val = log_objective(T, logdet)
            if val < best[0]:
                best[0], best[1] = val, T
            return val if val > -1e300 else -1e300

        simplex = np.vstack([x0] + [x0 + 0.5 * e for e in np.eye(dim)])
        f(x0)
        if best[0] == -math.inf:
            return best[0], best[1], 0, 1
        res = minimize(
            f,
            x0,
            method="Nelder-Mead",
            options={"maxiter": maxiter, "fatol": 1e-10, "xatol": 1e-10, "initial_simplex": simplex},
        )
        return best[0], best[1], int(res.nit), int(res.nfev) + 1

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(starts)))
    else:
        results = [run(i) for i in range(starts)]
    idx = min(range(len(results)), key=lambda i: (results[i][0], i))
    return FrameSearch(
        results[idx][0],
        results[idx][1],
        starts,
        sum(r[2] for r in results),
        sum(r[3] for r in results),
    )


# ---------------------------------------------------------------------------
# reports


@dataclass
class PositivityResult:
    verdict: str  # "positive", "zero" or "unknown"
    witness_kind: str | None = None  # "weights" or "separator"
    weights: dict[tuple[int, ...], float] | None = None
    separator: list[float] | None = None
    frame: list[list[float]] | None = None
    identity_exact: bool = False
    samples: int = 0
    min_margin: float | None = None
    cloud: list[tuple[int, ...]] | None = None

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict,
            "exponent_cloud": [list(a) for a in self.cloud] if self.cloud is not None else None,
            "identity_frame_exact": self.identity_exact,
            "sampled_frames": self.samples,
            "min_margin": self.min_margin,
        }
        if self.witness_kind == "separator":
            out["witness"] = self.separator
            out["witness_kind"] = "separator"
            out["frame"] = self.frame
        elif self.witness_kind == "weights":
            out["witness_kind"] = "weights"
            out["witness"] = [{"exponent_sum": list(a), "weight": w} for a, w in sorted(self.weights.items())]
        return out


@dataclass
class DensityReport:
    point: list[float]
    upper: float
    certificate_T: list[list[float]]
    q: int
    positivity: str = "unknown"
    hull_witness: PositivityResult | None = None
    seed: int = 0
    starts: int = 0
    iterations: int = 0
    evaluations: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "point": self.point,
            "upper": self.upper,
            "certificate_T": self.certificate_T,
            "q": self.q,
            "positivity": self.positivity,
            "seed": self.seed,
            "starts": self.starts,
            "iterations": self.iterations,
            "evaluations": self.evaluations,
        }
        if self.hull_witness is not None:
            out["hull"] = self.hull_witness.to_json()
        out.update(self.extra)
        return out


def density_infimum(
    phi: PhiSpec,
    q: int,
    x: Sequence,
    params: Sequence = (),
    starts: int = 64,
    maxiter: int = 500,
    seed: int = 0,
    norm: str | None = None,
    workers: int = 1,
    with_positivity: bool = False,
    O_samples: int = 200,
) -> DensityReport:
    """Best value found for the density infimum at ``x`` (an upper bound) and its argmin."""
    data = order_q_data(phi, q, x, params, norm)
    n = phi.n
    expo = n / q

    def log_obj(T, logdet):
        mx = data.max_at(T)
        if mx == 0:
            return -math.inf
        return expo * math.log(mx) - logdet

    search = minimize_over_frames(log_obj, n, starts, maxiter, seed, workers)
    upper = math.exp(search.best_log) if search.best_log > -math.inf else 0.0
    report = DensityReport(
        point=[float(v) for v in x],
        upper=upper,
        certificate_T=search.best_T.tolist(),
        q=q,
        seed=seed,
        starts=search.starts,
        iterations=search.iterations,
        evaluations=search.evaluations,
    )
    if with_positivity:
        pos = positivity_criterion(phi, q, x, params=params, O_samples=O_samples, seed=seed, norm=norm)
        report.positivity = pos.verdict
        report.hull_witness = pos
    return report


# ---------------------------------------------------------------------------
# convex-hull criterion


def exponent_cloud_exact(data: OrderQData) -> set[tuple[int, ...]]:
    """Exponent sums of the nonzero order-q derivatives in the identity frame (exact)."""
    n, k = data.n, data.k
    cloud = set()
    for p in data.part:
        for mono, _ in p.terms():
            cloud.add(tuple(sum(mono[j * n + i] for j in range(k)) for i in range(n)))
    return cloud


def exponent_cloud(data: OrderQData, O: np.ndarray, rel_tol: float = CLOUD_REL_TOL) -> set[tuple[int, ...]]:
    """Exponent sums of the order-q derivatives in frame ``O`` above ``rel_tol`` times the largest."""
    transformed = []
    for bt in data.tensors:
        transformed.append((bt, _entry_norms(transform_tensor(bt.data, O), data.norm)))
    scale = max((float(v.max()) for _, v in transformed if v.size), default=0.0)
    if scale == 0:
        return set()
    cloud = set()
    for bt, vals in transformed:
        counts = _exponent_counts(bt.degrees, data.n)
        for row in np.unique(counts[vals > rel_tol * scale], axis=0):
            cloud.add(tuple(int(v) for v in row))
    return cloud


@dataclass
class HullTest:
    member: bool
    margin: float
    weights: dict[tuple[int, ...], float] | None
    separator: np.ndarray | None
    separation: float


def hull_membership(points: Sequence[Sequence[int]], target: Sequence[float]) -> HullTest:
    """Is ``target`` in the convex hull of ``points``?

    The margin is the largest ``t`` with a representation whose weights are
    all at least ``t``; it is positive iff the target is in the relative
    interior.  When the target is outside, the separating LP maximizes
    ``min_a l . (a - target)`` over ``|l_i| <= 1``.
    """
    A = np.asarray(sorted(points), dtype=float)
    target = np.asarray(target, dtype=float)
    if A.size == 0:
        return HullTest(False, 0.0, None, None, 0.0)
    N, n = A.shape
    # variables: weights (N), t
    c = np.zeros(N + 1)
    c[-1] = -1.0
    A_eq = np.zeros((n + 1, N + 1))
    A_eq[:n, :N] = A.T
    A_eq[n, :N] = 1.0
    b_eq = np.append(target, 1.0)
    A_ub = np.hstack([-np.eye(N), np.ones((N, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(N), A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * N + [(None, 1.0)], method="highs")
    if res.status == 0:
        w = res.x[:N]
        weights = {tuple(int(v) for v in A[i]): float(w[i]) for i in range(N) if w[i] > 1e-12}
        return HullTest(True, float(res.x[-1]), weights, None, 0.0)
    # separation: maximize s subject to l.(a - target) >= s
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-(A - target), np.ones((N, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(N), bounds=[(-1, 1)] * n + [(None, None)], method="highs")
    sep = res.x[:n] if res.status == 0 else None
    return HullTest(False, 0.0, None, sep, float(-res.fun) if res.status == 0 else 0.0)


def _solve_exact(columns: list[tuple[int, ...]], target: list[Fraction]) -> list[Fraction] | None:
    # exact weights on a support: sum w_a a = target, sum w = 1
    rows = len(target) + 1
    ncol = len(columns)
    M = [[Fraction(columns[c][r]) for c in range(ncol)] + [target[r]] for r in range(len(target))]
    M.append([Fraction(1)] * ncol + [Fraction(1)])
    piv_cols = []
    r = 0
    for c in range(ncol):
        piv = next((i for i in range(r, rows) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(rows):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        piv_cols.append(c)
        r += 1
    if any(M[i][-1] for i in range(r, rows)):
        return None
    w = [Fraction(0)] * ncol
    for i, c in enumerate(piv_cols):
        w[c] = M[i][-1]
    return w


def exact_membership(cloud: set[tuple[int, ...]], q: int, n: int) -> dict[tuple[int, ...], Fraction] | None:
    """Exact convex weights for ``(q/n) 1``, from the support of a vertex LP solution."""
    if not cloud:
        return None
    target = [Fraction(q, n)] * n
    pts = sorted(cloud)
    A = np.asarray(pts, dtype=float)
    N = len(pts)
    A_eq = np.vstack([A.T, np.ones(N)])
    b_eq = np.append(np.full(n, q / n), 1.0)
    res = linprog(np.zeros(N), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * N, method="highs-ds")
    if res.status != 0:
        return None
    support = [pts[i] for i in range(N) if res.x[i] > 1e-12]
    w = _solve_exact(support, target)
    if w is None or any(v < 0 for v in w):
        return None
    return {a: v for a, v in zip(support, w) if v}


def exact_separator(cloud: set[tuple[int, ...]], q: int, n: int, approx: np.ndarray) -> list[Fraction] | None:
    """Rationalize a float separator and confirm ``l.a > (q/n) l.1`` exactly for every cloud point."""
    scale = float(np.abs(approx).max())
    if scale == 0:
        return None
    for denom in (1, 2, 4, 8, 100, 10000):
        ell = [Fraction(float(v) / scale).limit_denominator(denom) for v in approx]
        rhs = Fraction(q, n) * sum(ell)
        if all(sum(l * a for l, a in zip(ell, pt)) > rhs for pt in cloud):
            return ell
    return None


def positivity_criterion(
    phi: PhiSpec,
    q: int,
    x: Sequence,
    params: Sequence = (),
    O_samples: int = 200,
    seed: int = 0,
    margin: float = 1e-6,
    norm: str | None = None,
) -> PositivityResult:
    """Convex-hull verdict: exact at the identity frame, sampled over random orthogonal frames."""
    data = order_q_data(phi, q, x, params, norm)
    n = phi.n
    target = np.full(n, q / n)
    cloud0 = exponent_cloud_exact(data)
    exact_w = exact_membership(cloud0, q, n)
    if exact_w is None:
        test = hull_membership(cloud0, target)
        ell = exact_separator(cloud0, q, n, test.separator) if test.separator is not None else None
        if ell is not None:
            return PositivityResult(
                "zero", "separator", separator=[float(v) for v in ell], frame=np.eye(n).tolist(),
                identity_exact=True, samples=0, cloud=sorted(cloud0),
            )
        return PositivityResult("unknown", identity_exact=False, cloud=sorted(cloud0))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    min_margin = hull_membership(cloud0, target).margin
    all_pass = True
    for s in range(O_samples):
        O = random_orthogonal(rng, n)
        cloud = exponent_cloud(data, O)
        test = hull_membership(cloud, target)
        if not test.member:
            if test.separation > 1e-9:
                return PositivityResult(
                    "zero", "separator", separator=[float(v) for v in test.separator], frame=O.tolist(),
                    identity_exact=True, samples=s + 1, cloud=sorted(cloud),
                )
            all_pass = False
            continue
        min_margin = min(min_margin, test.margin)
        if test.margin < margin:
            all_pass = False
    verdict = "positive" if all_pass else "unknown"
    weights = {a: float(v) for a, v in exact_w.items()}
    return PositivityResult(verdict, "weights", weights=weights, identity_exact=True,
                            samples=O_samples, min_margin=min_margin, cloud=sorted(cloud0))


# ---------------------------------------------------------------------------
# determinantal bound for triangular frames


class BoundViolation(AssertionError):
    pass


def _det_poly(nprime: int) -> Polynomial:
    from .poly import det_poly_matrix

    nv = nprime * nprime
    v = [Polynomial.var(nv, i) for i in range(nv)]
    return det_poly_matrix([[v[i * nprime + j] for j in range(nprime)] for i in range(nprime)])


def triangular_determinantal_bound(nprime: int, T, tol: float = 1e-9) -> tuple[float, float]:
    """``max_{|alpha| = n'} |(T*d)^alpha_1 det(A_1 - A_2)|`` at the diagonal, and ``|det T|^(1/n')``.

    Only the first block is differentiated, so the derivative reduces to that
    of ``det`` itself.  Raises BoundViolation if the maximum falls below the
    determinant term minus ``tol`` (relative to the larger side when above 1).
    """
    if not 1 <= nprime <= 3:
        raise ValueError("nprime must be 1, 2 or 3")
    T = np.asarray(T, dtype=float)
    size = nprime * nprime
    if T.shape != (size, size):
        raise ValueError(f"T must be {size} x {size}")
    if np.any(np.abs(np.triu(T, 1)) > 0):
        raise ValueError("T must be lower triangular")
    det = float(np.prod(np.diag(T)))
    if det == 0:
        raise ValueError("T is singular")
    tensors = derivative_tensors([_det_poly(nprime)], size, 1, orders=[nprime])
    mx = max(float(np.abs(transform_tensor(bt.data, T)).max()) for bt in tensors)
    rhs = abs(det) ** (1.0 / nprime)
    if mx < rhs - tol * max(1.0, rhs):
        raise BoundViolation(f"max derivative {mx} < |det T|^(1/{nprime}) = {rhs}")
    return mx, rhs


def permutation_product_bound(nprime: int, T) -> float:
    """Geometric mean over permutations of ``|c_{1 s(1)} .. c_{n s(n)}|`` (c = diagonal of T)."""
    diag = np.abs(np.diag(np.asarray(T, dtype=float))).reshape(nprime, nprime)
    logs = [sum(math.log(diag[i, s[i]]) for i in range(nprime)) for s in permutations(range(nprime))]
    return math.exp(sum(logs) / len(logs))


# ---------------------------------------------------------------------------
# multisystem density over a finite family of coordinate changes


def _inf_max_lines(slopes: Sequence[float], intercepts: Sequence[float]) -> float:
    """``inf_L max_a (p_a L + b_a)``: best flat line or best opposite-slope pair (LP duality)."""
    best = -math.inf
    pts = [(p, b) for p, b in zip(slopes, intercepts) if b > -math.inf]
    for p, b in pts:
        if abs(p) < 1e-12:
            best = max(best, b)
    neg = [(p, b) for p, b in pts if p < -1e-12]
    pos = [(p, b) for p, b in pts if p > 1e-12]
    for pa, ba in neg:
        for pb, bb in pos:
            best = max(best, (pb * ba - pa * bb) / (pb - pa))
    return best


@dataclass
class CoordinateChange:
    """Polynomial map ``chi : R^n -> R^n``; used centered, ``y -> chi(y) - chi(0)``."""

    chi: PolyVector
    name: str = ""

    def centered_linearized(self) -> PolyVector:
        """``chi(M y) - chi(0)`` with ``M = D chi(0)^-1``, so the differential at 0 is the identity."""
        n = self.chi.nvars
        zero = [0] * n
        J = [[c.partial(j).eval(zero) for j in range(n)] for c in self.chi]
        if det_rational(J) == 0:
            raise ValueError(f"coordinate change {self.name or self.chi!r} is not invertible at the base point")
        M = inverse_rational(J)
        images = linear_images(n, M)
        return PolyVector((c - c.eval(zero)).substitute(images) for c in self.chi)


def standard_coordinates(n: int) -> CoordinateChange:
    return CoordinateChange(PolyVector(Polynomial.var(n, i) for i in range(n)), "standard")


def _pullback(phi: PhiSpec, chi: PolyVector, x: Sequence, N: int) -> list[BlockTensor]:
    n, k = phi.n, phi.k
    nv = k * n
    xs = [as_rational(v) for v in x]
    images = []
    for j in range(k):
        emb = [j * n + i for i in range(n)]
        for l in range(n):
            images.append(chi[l].embed(nv, emb) + xs[l])
    pulled = [c.substitute(images) for c in phi.body]
    return derivative_tensors(pulled, n, k, max_block=N)


def multisystem_density(
    phi: PhiSpec,
    s,
    N: int,
    coord_family: Sequence[CoordinateChange] | None,
    x: Sequence,
    params: Sequence = (),
    starts: int = 16,
    maxiter: int = 400,
    seed: int = 0,
    norm: str | None = None,
) -> float:
    """Density with derivatives in the supplied coordinate frames, minimized over T and the family.

    For each coordinate change ``chi`` the derivatives are those of
    ``w -> Phi(x + chi(M T w_1), .., x + chi(M T w_k))`` at 0 with every
    ``|alpha_j| <= N``, where ``M = D chi(0)^-1``.  The overall scale of T is
    optimized exactly (the objective is piecewise linear in ``log scale``), the
    rest by the frame search.  Only the supplied family is searched, so the
    result is an upper bound for the infimum over all multisystems.
    """
    if phi.params:
        phi = phi.freeze(params)
    n = phi.n
    s = float(Fraction(s)) if not isinstance(s, float) else s
    norm = norm or phi.norm
    family = list(coord_family) if coord_family else [standard_coordinates(n)]
    best = math.inf
    for fi, cc in enumerate(family):
        tensors = _pullback(phi, cc.centered_linearized(), x, N)
        if not tensors:
            return 0.0
        orders = sorted({bt.order for bt in tensors})

        def log_obj(T, logdet, tensors=tensors, orders=orders):
            by_order = {a: 0.0 for a in orders}
            for bt in tensors:
                vals = _entry_norms(transform_tensor(bt.data, T), norm)
                if vals.size:
                    by_order[bt.order] = max(by_order[bt.order], float(vals.max()))
            slopes = [a / s - n for a in orders]
            inter = [(math.log(by_order[a]) / s if by_order[a] > 0 else -math.inf) - logdet for a in orders]
            return _inf_max_lines(slopes, inter)

        search = minimize_over_frames(log_obj, n, starts, maxiter, seed + fi)
        val = math.exp(search.best_log) if search.best_log > -math.inf else 0.0
        best = min(best, val)
    return best


__all__ = [
    "BlockTensor",
    "BoundViolation",
    "CoordinateChange",
    "DensityReport",
    "HullTest",
    "OrderQData",
    "PositivityResult",
    "QOrderError",
    "density_infimum",
    "density_objective",
    "derivative_tensors",
    "exact_membership",
    "exponent_cloud",
    "exponent_cloud_exact",
    "hull_membership",
    "minimize_over_frames",
    "multisystem_density",
    "order_q_data",
    "permutation_product_bound",
    "positivity_criterion",
    "random_orthogonal",
    "standard_coordinates",
    "transform_tensor",
    "triangular_determinantal_bound",
]
