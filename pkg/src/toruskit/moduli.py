"""Moduli connectivity: hop adjacency through shared flat metrics.

Two complex structures are adjacent when one flat metric is preserved by
both; the criterion is that the metric ratio has all eigenvalues in pairs.
Chains of at most 6 hops are built by factoring the target metric ratio into
two paired factors (a nonsmooth eigenvalue-matching problem solved by
multi-start simplex search plus a Gauss-Newton polish on the pair gaps).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import ChainNotFound, FactorizationFailed, NotPaired
from .linalg import frob, haar_orthogonal, min_eig_sym, rel_residual
from .torus import ComplexStructure, Metric, identity_metric, random_structure

PAIRED_TOL = 1e-9
FACTORIZE_PAIRED_TOL = 1e-7
HOP_TOL = 1e-8


@dataclass(frozen=True)
class Pairing:
    """Perfect matching of eigenvalue positions (ascending order, 0-based)."""

    pairs: tuple
    eigenvalues: np.ndarray = field(compare=False, default=None)


def _ratio_eigs(g: Metric, g1: Metric) -> np.ndarray:
    w = g.sqrt_inv()
    return np.linalg.eigvalsh(w @ g1.g @ w)


def paired_eigenvalues(g: Metric, g1: Metric, tol: float = PAIRED_TOL):
    """Pairing of the eigenvalues of the symmetrized ratio, or None.

    Sorts the eigenvalues of g^{-1/2} g1 g^{-1/2} and pairs consecutive
    values; succeeds iff every pair gap is below tol relative to the value.
    """
    w = _ratio_eigs(g, g1)
    pairs = []
    for i in range(0, len(w), 2):
        gap = w[i + 1] - w[i]
        if gap > tol * max(abs(w[i + 1]), 1e-300):
            return None
        pairs.append((i, i + 1))
    return Pairing(pairs=tuple(pairs), eigenvalues=w)


def pair_defect(g: Metric, g1: Metric) -> float:
    """Sum of squared consecutive gaps of the sorted ratio eigenvalues."""
    w = _ratio_eigs(g, g1)
    gaps = w[1::2] - w[0::2]
    return float(np.sum(gaps * gaps))


def common_structure_from_metrics(g: Metric, g1: Metric,
                                  tol: float = PAIRED_TOL) -> ComplexStructure:
    """Complex structure compatible with both metrics of a paired ratio.

    Builds the common orthogonal eigenbasis, rotates by the standard 2x2
    block on each eigenvalue pair, and conjugates back. Raises NotPaired when
    the ratio eigenvalues do not pair at tolerance.
    """
    if paired_eigenvalues(g, g1, tol) is None:
        raise NotPaired("ratio eigenvalues do not occur in pairs")
    w = g.sqrt_inv()
    _, q = np.linalg.eigh(w @ g1.g @ w)
    e = w @ q
    n2 = g.dim
    k = np.zeros((n2, n2))
    for i in range(0, n2, 2):
        k[i, i + 1] = 1.0
        k[i + 1, i] = -1.0
    j = e @ k @ np.linalg.inv(e)
    return ComplexStructure(j)


def invariant_metric_subspace(i: ComplexStructure, j: ComplexStructure,
                              rtol: float = 1e-10) -> list[np.ndarray]:
    """Orthonormal basis of {M symmetric : I^T M I = M and J^T M J = M}."""
    n2 = i.dim
    basis = []
    for a in range(n2):
        for b in range(a, n2):
            e = np.zeros((n2, n2))
            if a == b:
                e[a, a] = 1.0
            else:
                e[a, b] = e[b, a] = 1.0 / np.sqrt(2.0)
            basis.append(e)
    rows = []
    for e in basis:
        for s in (i.j, j.j):
            f = s.T @ e @ s - e
            rows.append([float(np.sum(f * g)) for g in basis])
    a = np.array(rows)
    _, sv, vt = np.linalg.svd(a)
    null = [vt[r] for r in range(len(basis))
            if r >= len(sv) or sv[r] <= rtol * max(sv[0], 1.0)]
    return [sum(c * e for c, e in zip(v, basis)) for v in null]


def common_metric(i: ComplexStructure, j: ComplexStructure,
                  max_iter: int = 5000, min_eig: float = 1e-7):
    """A flat metric preserved by both structures, or None.

    Searches the invariant symmetric subspace for a positive definite element
    (unit-trace slice) by Dykstra alternating projections between the slice
    and a shifted positive semidefinite cone. Absence of a witness is reported
    as None, not proven infeasibility.
    """
    n2 = i.dim
    span = invariant_metric_subspace(i, j)
    if not span:
        return None

    def proj_span(x):
        return sum(float(np.sum(x * e)) * e for e in span)

    tau = proj_span(np.eye(n2))
    tnorm2 = float(np.sum(tau * tau))
    if tnorm2 < 1e-20:
        return None  # all invariant elements are traceless: never PD

    target_tr = float(n2)

    def proj_slice(x):
        p = proj_span(x)
        return p + (target_tr - float(np.trace(p))) / tnorm2 * tau

    delta = 1e-6

    def proj_cone(x):
        w, q = np.linalg.eigh(0.5 * (x + x.T))
        return (q * np.maximum(w, delta)) @ q.T

    x = proj_slice(np.eye(n2))
    if min_eig_sym(x) > min_eig:
        return Metric(x)
    p = np.zeros((n2, n2))
    q = np.zeros((n2, n2))
    for it in range(max_iter):
        y = proj_cone(x + p)
        p = x + p - y
        x_new = proj_slice(y + q)
        q = y + q - x_new
        drift = frob(x_new - x)
        x = x_new
        if min_eig_sym(x) > min_eig:
            return Metric(x)
        if drift < 1e-14 and it > 10:
            break
    return Metric(x) if min_eig_sym(x) > min_eig else None


# ---------------------------------------------------------------------------
# Pair factorization


@dataclass(frozen=True)
class FactorizeOptions:
    restarts: int = 16
    max_evals: int = 20000
    defect_tol: float = 1e-10
    paired_tol: float = FACTORIZE_PAIRED_TOL
    seed: int = 0
    threads: int = 1


def _doubled(vals: np.ndarray) -> np.ndarray:
    return np.repeat(vals, 2)


def _skew_from_params(theta: np.ndarray, n2: int) -> np.ndarray:
    k = np.zeros((n2, n2))
    idx = 0
    for a in range(n2):
        for b in range(a + 1, n2):
            k[a, b] = theta[idx]
            k[b, a] = -theta[idx]
            idx += 1
    return k


def _cyclic_chain(d: np.ndarray):
    """Closed-form interleaved-pairing solve for a diagonal target.

    Chain (0-based): alpha_0 = d_0, d_{2k+1} = alpha_k beta_k,
    d_{2k+2} = alpha_{k+1} beta_k, closing onto d_0 through beta_{n-1} = 1.
    The cycle is exactly consistent iff the products of alternate entries
    agree; otherwise the chain is still a warm start and the returned closure
    measures the mismatch.
    """
    n = len(d) // 2
    alpha = np.empty(n)
    beta = np.empty(n)
    t = 1.0
    alpha[0] = d[0] / t
    for k in range(n):
        beta[k] = d[2 * k + 1] / alpha[k]
        if k + 1 < n:
            alpha[k + 1] = d[2 * k + 2] / beta[k]
    closure = beta[n - 1] / t
    return alpha, beta, abs(np.log(closure))


def _cycle_arrangement_starts(h_hat: np.ndarray, limit: int = 12) -> list:
    """Warm starts from eigenvalue arrangements around the pairing cycle.

    The interleaved matchings close exactly when a 3-subset of eigenvalues
    balances the alternating product; the arrangements with the smallest
    closure mismatch (solved least-squares in logs) make the best seeds.
    """
    from itertools import combinations, permutations
    n2 = h_hat.shape[0]
    n = n2 // 2
    wv, qv = np.linalg.eigh(h_hat)
    logd = np.log(wv)
    cands = []
    for sub in combinations(range(n2), n):
        rest = tuple(i for i in range(n2) if i not in sub)
        eps = abs(logd[list(sub)].sum() - logd[list(rest)].sum())
        cands.append((eps, sub, rest))
    cands.sort()
    starts = []
    for eps, sub, rest in cands:
        for perm in list(permutations(rest))[: max(1, limit // len(cands) + 1)]:
            order = []
            for k in range(n):
                order.append(sub[k])
                order.append(perm[k])
            d = wv[list(order)]
            a = np.zeros((n2, n2))
            for k in range(n):
                a[2 * k, k] += 1
                a[2 * k, n + k] += 1
                a[2 * k + 1, (k + 1) % n] += 1
                a[2 * k + 1, n + k] += 1
            sol, *_ = np.linalg.lstsq(a, np.log(d), rcond=None)
            starts.append((qv[:, list(order)], -0.5 * sol[:n]))
            if len(starts) >= limit:
                return starts
    return starts


class _FactorizeProblem:
    """Work in the frame where g = Id and h is scale-normalized.

    The unknown is Y = X^{-1/2} = Q diag(exp(t) doubled) Q^T; X automatically
    has doubled spectrum, and the defect measures how far Y h Y is from having
    one too. The internal objective uses gaps relative to the pair mean:
    the absolute gaps have a degenerate descent direction (collapse a whole
    eigenvalue pair of the ratio towards zero) that fakes convergence without
    ever satisfying the relative pairing criterion.
    """

    def __init__(self, h_hat: np.ndarray):
        self.h = h_hat
        self.n2 = h_hat.shape[0]
        self.n = self.n2 // 2
        self.evals = 0

    def y_matrix(self, q: np.ndarray, t: np.ndarray) -> np.ndarray:
        # det-1 gauge: the overall scale of Y is invisible to relative gaps.
        t = np.clip(t - np.mean(t), -40.0, 40.0)
        return (q * _doubled(np.exp(t))) @ q.T

    def x_matrix(self, q: np.ndarray, t: np.ndarray) -> np.ndarray:
        """X = Y^{-2} at the raw (uncentered) scale of t."""
        return (q * _doubled(np.exp(-2.0 * t))) @ q.T

    def ratio_eigs(self, q: np.ndarray, t: np.ndarray):
        y = self.y_matrix(q, t)
        return np.linalg.eigvalsh(y @ self.h @ y)

    def defect_qt(self, q: np.ndarray, t: np.ndarray) -> float:
        """Relative pair-gap defect (internal objective)."""
        self.evals += 1
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                w = self.ratio_eigs(q, t)
        except np.linalg.LinAlgError:
            return np.inf
        if not np.all(np.isfinite(w)):
            return np.inf
        with np.errstate(over="ignore"):
            means = np.maximum(0.5 * (w[1::2] + w[0::2]), 1e-300)
            gaps = (w[1::2] - w[0::2]) / means
            return float(np.sum(gaps * gaps))

    def abs_defect(self, q: np.ndarray, t: np.ndarray) -> float:
        """Sum of squared absolute gaps (the reported defect)."""
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                w = self.ratio_eigs(q, t)
        except np.linalg.LinAlgError:
            return np.inf
        with np.errstate(over="ignore"):
            gaps = w[1::2] - w[0::2]
            return float(np.sum(gaps * gaps))

    def pack_objective(self, q0: np.ndarray):
        ntheta = self.n2 * (self.n2 - 1) // 2

        def f(x):
            k = _skew_from_params(x[:ntheta], self.n2)
            q = scipy.linalg.expm(k) @ q0
            return self.defect_qt(q, x[ntheta:])

        return f, ntheta

    def polish(self, q: np.ndarray, t: np.ndarray, max_iter: int = 60):
        """Gauss-Newton on the relative pair-gap residuals.

        Near a solution each eigenvalue pair behaves like a 2x2 symmetric
        block; the smooth residuals (difference of diagonal, twice the
        off-diagonal in the frozen eigenbasis, both over the pair mean)
        vanish exactly when the pair coalesces, so the iteration converges
        quadratically to machine level.
        """
        ntheta = self.n2 * (self.n2 - 1) // 2
        pairs = [(2 * i, 2 * i + 1) for i in range(self.n)]
        best = self.defect_qt(q, t)
        for _ in range(max_iter):
            y = self.y_matrix(q, t)
            r_mat = y @ self.h @ y
            w, v = np.linalg.eigh(r_mat)
            means = [max(0.5 * (w[a] + w[b]), 1e-300) for a, b in pairs]
            res = []
            for i, (a, b) in enumerate(pairs):
                res.extend([(w[a] - w[b]) / means[i],
                            2.0 * float(v[:, a] @ r_mat @ v[:, b]) / means[i]])
            res = np.array(res)
            if np.sum(res * res) < 1e-28:
                break
            cols = []
            d_exp = _doubled(np.exp(np.clip(t - np.mean(t), -40.0, 40.0)))
            for k in range(ntheta):
                e = _skew_from_params(np.eye(ntheta)[k], self.n2)
                dy = e @ y - y @ e
                cols.append(dy @ self.h @ y + y @ self.h @ dy)
            for idx in range(self.n):
                sel = np.zeros(self.n2)
                sel[2 * idx] = sel[2 * idx + 1] = d_exp[2 * idx]
                dy = (q * sel) @ q.T
                cols.append(dy @ self.h @ y + y @ self.h @ dy)
            jac = np.zeros((2 * self.n, ntheta + self.n))
            for c, dr in enumerate(cols):
                for pi, (a, b) in enumerate(pairs):
                    jac[2 * pi, c] = (v[:, a] @ dr @ v[:, a]
                                      - v[:, b] @ dr @ v[:, b]) / means[pi]
                    jac[2 * pi + 1, c] = 2.0 * float(v[:, a] @ dr @ v[:, b]) / means[pi]
            step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
            norm = np.linalg.norm(step)
            if norm > 3.0:
                step *= 3.0 / norm
            scale = 1.0
            for _bt in range(12):
                dq = scipy.linalg.expm(
                    _skew_from_params(scale * step[:ntheta], self.n2))
                q_new = dq @ q
                t_new = t + scale * step[ntheta:]
                val = self.defect_qt(q_new, t_new)
                if val < best:
                    q, t, best = q_new, t_new, val
                    break
                scale *= 0.5
            else:
                break
        return q, t, best


def pair_factorize(g: Metric, h: Metric, opts: FactorizeOptions | None = None) -> Metric:
    """Middle metric g1 with both ratios g->g1 and g1->h eigenvalue-paired.

    Normalizes to g = Id, parametrizes the candidate as an orthogonal
    conjugate of a doubled diagonal, and minimizes the pairing defect of the
    remaining ratio by multi-start Nelder-Mead plus a Gauss-Newton polish. The
    interleaved-pairing closed form seeds the search and answers near-diagonal
    targets outright. Raises FactorizationFailed with the best candidate when
    the defect stays above tolerance.
    """
    opts = opts or FactorizeOptions()
    w = g.sqrt_inv()
    h_t = w @ h.g @ w
    h_t = 0.5 * (h_t + h_t.T)
    n2 = h_t.shape[0]
    _, logdet = np.linalg.slogdet(h_t)
    scale = float(np.exp(logdet / n2))
    h_hat = h_t / scale
    problem = _FactorizeProblem(h_hat)

    off_diag = frob(h_hat - np.diag(np.diag(h_hat)))
    starts: list[tuple[np.ndarray, np.ndarray]] = []
    if off_diag <= 1e-12 * max(frob(h_hat), 1.0):
        alpha, _, _ = _cyclic_chain(np.diag(h_hat))
        starts.append((np.eye(n2), -0.5 * np.log(alpha)))
    wv, qv = np.linalg.eigh(h_hat)
    alpha, _, _ = _cyclic_chain(wv)
    starts.append((qv, -0.5 * np.log(np.abs(alpha))))
    pair_means = np.sqrt(wv[0::2] * wv[1::2])
    starts.append((qv, -0.5 * np.log(pair_means)))
    starts.append((np.eye(n2), np.zeros(n2 // 2)))
    starts.extend(_cycle_arrangement_starts(h_hat))

    ntheta = n2 * (n2 - 1) // 2
    n_probe = 2 * opts.restarts          # cheap random Gauss-Newton probes
    per_restart = max(200, opts.max_evals // max(opts.restarts, 1))
    success_defect = 1e-26

    def run_job(k: int):
        """Warm-start polishes first, then cheap random-start polishes, then
        seeded simplex restarts followed by the polish. Jobs are independent;
        per-job rngs keep each result a pure function of (inputs, seed, k)."""
        if k < len(starts):
            q0, t0 = starts[k]
            return problem.polish(q0, t0)
        if k < len(starts) + n_probe:
            rng = np.random.default_rng([opts.seed, k])
            q0 = haar_orthogonal(n2, rng)
            t0 = rng.normal(scale=1.0, size=problem.n)
            return problem.polish(q0, t0)
        q0, t0 = starts[k % len(starts)]
        rng = np.random.default_rng([opts.seed, k])
        x0 = np.concatenate([rng.normal(scale=0.6, size=ntheta),
                             t0 + rng.normal(scale=0.3, size=problem.n)])
        f, _ = problem.pack_objective(q0)
        out = scipy.optimize.minimize(
            f, x0, method="Nelder-Mead",
            options={"maxfev": per_restart, "xatol": 1e-10, "fatol": 1e-14})
        kk = _skew_from_params(out.x[:ntheta], n2)
        return problem.polish(scipy.linalg.expm(kk) @ q0, out.x[ntheta:])

    n_jobs = len(starts) + n_probe + opts.restarts
    results: dict[int, tuple] = {}
    if opts.threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            for k, res in enumerate(pool.map(run_job, range(n_jobs))):
                results[k] = res
    else:
        for k in range(n_jobs):
            results[k] = run_job(k)
            if results[k][2] <= success_defect:
                break

    # Deterministic merge regardless of thread count: the first job index
    # reaching full convergence wins, else the smallest (defect, index).
    winner = None
    for k in sorted(results):
        if results[k][2] <= success_defect:
            winner = k
            break
    if winner is None:
        winner = min(sorted(results), key=lambda k: (results[k][2], k))
    best_q, best_t, _ = results[winner]
    # Warm starts carry a meaningful raw scale (the cyclic chain's); clamp
    # only runaway means so a wandering restart cannot blow up the report.
    mean = float(np.clip(np.mean(best_t), -20.0, 20.0))
    best_t = best_t - np.mean(best_t) + mean

    x_hat = problem.x_matrix(best_q, best_t)
    x_mat = 0.5 * scale * (x_hat + x_hat.T)
    w_inv = np.linalg.inv(w)
    g1 = Metric(w_inv @ x_mat @ w_inv)
    best_defect = pair_defect(g1, h)
    ok = (best_defect <= opts.defect_tol
          and paired_eigenvalues(g, g1, opts.paired_tol) is not None
          and paired_eigenvalues(g1, h, opts.paired_tol) is not None)
    if not ok:
        raise FactorizationFailed(
            f"pairing defect {best_defect:.3e} above tolerance {opts.defect_tol:.1e}",
            best=g1, defect=best_defect)
    return g1


# ---------------------------------------------------------------------------
# Chains


@dataclass(frozen=True)
class Chain:
    """Hop path: structures with a shared compatible metric per hop."""

    structures: tuple
    metrics: tuple

    def __post_init__(self):
        structures = tuple(self.structures)
        metrics = tuple(self.metrics)
        if len(structures) == 0:
            raise ValueError("chain needs at least one structure")
        if len(metrics) != len(structures) - 1:
            raise ValueError("chain needs one metric per consecutive pair")
        if len(metrics) > 6:
            raise ValueError(f"chain exceeds 6 hops ({len(metrics)})")
        object.__setattr__(self, "structures", structures)
        object.__setattr__(self, "metrics", metrics)

    @property
    def hops(self) -> int:
        return len(self.metrics)


@dataclass(frozen=True)
class ChainReport:
    ok: bool
    max_residual: float
    hops: int
    hop_residuals: tuple


def verify_chain(chain: Chain, tol: float = HOP_TOL) -> ChainReport:
    """Check every hop: both endpoint structures preserve the hop metric,
    structures square to -Id, metrics are positive definite."""
    residuals = []
    worst = 0.0
    ok = True
    for k, metric in enumerate(chain.metrics):
        if min_eig_sym(metric.g) <= 0:
            ok = False
        r = max(chain.structures[k].compatibility_residual(metric),
                chain.structures[k + 1].compatibility_residual(metric))
        n2 = chain.structures[k].dim
        r = max(r, rel_residual(chain.structures[k].j @ chain.structures[k].j,
                                -np.eye(n2)))
        residuals.append(r)
        worst = max(worst, r)
    if chain.metrics:
        last = chain.structures[-1]
        worst = max(worst, rel_residual(last.j @ last.j, -np.eye(last.dim)))
    if worst > tol:
        ok = False
    return ChainReport(ok=ok, max_residual=worst, hops=chain.hops,
                       hop_residuals=tuple(residuals))


@dataclass(frozen=True)
class ConnectOptions:
    seed: int = 0
    max_attempts: int = 8
    direct_retries: int = 3
    hop_tol: float = HOP_TOL
    certify_generic: bool = False
    bound: int = 10
    factorize: FactorizeOptions = field(default_factory=FactorizeOptions)
    threads: int = 1


def compatible_metric(j: ComplexStructure, rng=None) -> Metric:
    """A metric preserved by j: the {1, j}-average of Id (or of a seeded SPD)."""
    n2 = j.dim
    if rng is None:
        base = np.eye(n2)
    else:
        from .linalg import random_spd
        base = random_spd(n2, rng, cond=4.0)
    return Metric(0.5 * (base + j.j.T @ base @ j.j))


def _three_hops(i: ComplexStructure, j: ComplexStructure, rng,
                opts: ConnectOptions) -> Chain:
    last_err = None
    for attempt in range(opts.direct_retries):
        g = compatible_metric(i, None if attempt == 0 else rng)
        h = compatible_metric(j, None if attempt == 0 else rng)
        fopts = replace(opts.factorize,
                        seed=int(rng.integers(0, 2 ** 32)) if attempt else opts.factorize.seed)
        try:
            g1 = pair_factorize(g, h, fopts)
        except FactorizationFailed as err:
            last_err = err
            continue
        i1 = common_structure_from_metrics(g, g1, tol=opts.factorize.paired_tol)
        i2 = common_structure_from_metrics(g1, h, tol=opts.factorize.paired_tol)
        chain = Chain(structures=(i, i1, i2, j), metrics=(g, g1, h))
        if verify_chain(chain, opts.hop_tol).ok:
            return chain
    raise last_err or FactorizationFailed("no verified 3-hop chain", None, None)


def _middle_is_generic(m: ComplexStructure, bound: int) -> bool:
    from .hodge import is_generic
    from .torus import torus_from_structure
    report = is_generic(torus_from_structure(m), bound=bound)
    return report.verdict == "no_obstruction_found"


def connect(i: ComplexStructure, j: ComplexStructure,
            opts: ConnectOptions | None = None) -> Chain:
    """Chain of at most 6 hops between two structures on the same lattice.

    Strategy: 1 hop when a common metric exists; otherwise the direct 3-hop
    route through a pair factorization; otherwise meet-in-the-middle through a
    random intermediate structure (3 + 3 hops), retried with fresh middles.
    """
    opts = opts or ConnectOptions()
    if i.dim != j.dim:
        raise ValueError("structures live on different lattices")
    if frob(i.j - j.j) == 0.0:
        return Chain(structures=(i,), metrics=())
    rng = np.random.default_rng(opts.seed)
    g = common_metric(i, j)
    if g is not None:
        chain = Chain(structures=(i, j), metrics=(g,))
        if verify_chain(chain, opts.hop_tol).ok:
            return chain
    try:
        return _three_hops(i, j, rng, opts)
    except FactorizationFailed:
        pass
    for _ in range(opts.max_attempts):
        middle = random_structure(identity_metric(i.dim),
                                  int(rng.integers(0, 2 ** 32)))
        if opts.certify_generic and not _middle_is_generic(middle, opts.bound):
            continue
        try:
            left = _three_hops(i, middle, rng, opts)
            right = _three_hops(middle, j, rng, opts)
        except FactorizationFailed:
            continue
        chain = Chain(structures=left.structures + right.structures[1:],
                      metrics=left.metrics + right.metrics)
        if verify_chain(chain, opts.hop_tol).ok:
            return chain
    raise ChainNotFound(
        f"no chain within {opts.max_attempts} random middles")
