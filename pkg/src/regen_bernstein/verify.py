"""Verification harness: tail estimation, domination checks, structure tests.

Everything here either estimates a tail probability (Monte Carlo over
independent replica substreams, or exact dynamic programming on small
finite chains), fits the norm parameters the bound evaluators consume,
or tests a structural claim of the regeneration construction: i.i.d.
gaps, 1-dependent excursions, the occupation-measure identity, and the
conditional block-Markov identity.
"""

from __future__ import annotations

import math
import os
import tempfile
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from . import _kernels
from ._rng import (TAG_COLLECT, TAG_FIT_EXCURSION, TAG_FIT_FIRST_BLOCK,
                   TAG_PITMAN, TAG_STRUCTURE, TAG_TAIL, TAG_TWO_BLOCK,
                   stream_description, substream)
from .bounds import BernsteinParams, thm_bi, thm_bi2, thm_sbi
from .chain_models import ChainInstance, resolve_functional
from .errors import GuardError
from .orlicz import psi_norm_empirical
from .split_regen import excursions, gap_lengths, simulate_split, split_measure
from .variance import sigma_mrv_exact, sigma_mrv_regenerative

_ENUM_GUARD = 1e8
_FRACTION_GUARD = 2_000_000
_LATTICE_WIDTH_CAP = 5_000_000
_U64_MAX = np.iinfo(np.uint64).max


# ---------------------------------------------------------------------------
# curves and verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TailCurve:
    """P(|sum| > t) on a grid, estimated or exact.

    se is None exactly when the curve comes from enumeration. The grid
    is strictly increasing and the estimates non-increasing along it.
    """

    t: np.ndarray
    estimate: np.ndarray
    se: np.ndarray | None
    provenance: str
    n: int
    replicas: int | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        est = np.asarray(self.estimate, dtype=np.float64)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("empty t grid")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("t grid must be strictly increasing")
        if t.shape != est.shape:
            raise ValueError("t grid and estimates must align")
        if np.any(est < -1e-12) or np.any(est > 1.0 + 1e-12):
            raise ValueError("tail estimates must lie in [0, 1]")
        if np.any(np.diff(est) > 1e-12):
            raise ValueError("tail estimates must be non-increasing in t")
        if self.provenance not in ("monte_carlo", "enumeration"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        se = self.se
        if se is not None:
            se = np.asarray(se, dtype=np.float64)
            if se.shape != t.shape or np.any(se < 0.0):
                raise ValueError("se must be a non-negative array on the grid")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "estimate", np.clip(est, 0.0, 1.0))
        object.__setattr__(self, "se", se)

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class DominationVerdict:
    """Outcome of bound >= estimate - z * se over a whole grid."""

    passed: bool
    worst_margin: float
    worst_t: float
    n_points: int
    z: float


def check_domination(tail: TailCurve, bound_values, *, z: float = 3.0
                     ) -> DominationVerdict:
    """Verdict on bound(t) >= estimate(t) - z * se(t) at every grid point.

    bound_values may hold floats or BoundValue objects. Exact curves
    carry se = 0 and must be dominated outright (up to 1e-12 slack).
    """
    bounds = np.asarray([float(b) for b in bound_values], dtype=np.float64)
    if bounds.shape != tail.t.shape:
        raise ValueError("grid mismatch between tail and bound curves")
    if z < 0.0:
        raise ValueError("z must be non-negative")
    se = tail.se if tail.se is not None else np.zeros_like(tail.estimate)
    margins = bounds - (tail.estimate - z * se)
    worst = int(np.argmin(margins))
    return DominationVerdict(
        passed=bool(margins[worst] >= -1e-12),
        worst_margin=float(margins[worst]),
        worst_t=float(tail.t[worst]),
        n_points=int(tail.t.size),
        z=float(z),
    )


def _validated_grid(t_grid) -> np.ndarray:
    t = np.unique(np.asarray(t_grid, dtype=np.float64).ravel())
    if t.size == 0:
        raise ValueError("empty t grid")
    if not np.all(np.isfinite(t)):
        raise ValueError("t grid must be finite")
    if np.any(t < 0.0):
        raise ValueError("t grid must be non-negative")
    return t


# ---------------------------------------------------------------------------
# Monte Carlo tails
# ---------------------------------------------------------------------------


def _finite_init_plan(chain: ChainInstance, init):
    """(point_state, cumulative_weights): exactly one of the two is set."""
    if isinstance(init, tuple) and len(init) == 2 and init[0] == "point":
        init = init[1]
    if isinstance(init, str):
        token = init.lower()
        if token == "nu":
            weights = np.asarray(chain.minorization.nu, dtype=np.float64)
        elif token in ("pi", "pi-approx"):
            weights = chain.pi_vector()
        else:
            raise ValueError(f"unknown init {init!r}")
        return None, np.cumsum(weights)
    x = int(init)
    if not (0 <= x < chain.kernel.n_states):
        raise ValueError(f"initial state {x} out of range")
    return x, None


def _mod1_init_bits(chain: ChainInstance, init):
    """Fixed initial bits, or None for a uniform draw per replica."""
    if isinstance(init, tuple) and len(init) == 2 and init[0] == "point":
        init = init[1]
    if isinstance(init, str):
        if init.lower() in ("nu", "pi", "pi-approx", "lebesgue"):
            return None
        raise ValueError(f"unknown init {init!r}")
    return chain.mod1.float_to_bits(float(init))


def _replica_chunk(replicas: int, n: int, bytes_per_step: int = 8) -> int:
    per = max(1, n) * bytes_per_step
    return int(min(replicas, 65536, max(256, 64_000_000 // per)))


def mc_tail(chain: ChainInstance, f, init, n: int, t_grid, replicas: int,
            seed: int, *, threads: int = 1, backend: str | None = None
            ) -> TailCurve:
    """Empirical tail of |sum of f over n states| across replicas.

    Each replica owns the substream (seed, TAG_TAIL, replica_index), so
    the result is bit-identical for a fixed (seed, replicas) no matter
    how the work is chunked or threaded. init is a point state, "nu",
    or "pi".
    """
    n = int(n)
    replicas = int(replicas)
    if n < 1:
        raise ValueError("n must be at least 1")
    if replicas < 1000:
        raise ValueError("need at least 1000 replicas")
    t = _validated_grid(t_grid)
    fspec = resolve_functional(chain, f)
    steps = n - 1

    if chain.is_finite:
        point, cum_init = _finite_init_plan(chain, init)
        cum_rows = chain.kernel.cumulative_rows()
        f_vals = fspec.values

        def worker(bounds_pair):
            lo, hi = bounds_pair
            count = hi - lo
            uniforms = np.empty((count, steps), dtype=np.float64)
            x0 = np.empty(count, dtype=np.int64)
            for i in range(count):
                rng = substream(seed, TAG_TAIL, lo + i)
                if point is None:
                    idx = int(np.searchsorted(cum_init, rng.random(),
                                              side="right"))
                    x0[i] = min(idx, len(cum_init) - 1)
                else:
                    x0[i] = point
                uniforms[i] = rng.random(steps)
            sums = _kernels.finite_chain_sums(cum_rows, f_vals, x0, uniforms,
                                              backend=backend)
            return _tail_counts(sums, t)

        chunk = _replica_chunk(replicas, steps)
    elif chain.mod1 is not None:
        mod1 = chain.mod1
        point_bits = _mod1_init_bits(chain, init)
        shift, scale = mod1.float_params()

        def worker(bounds_pair):
            lo, hi = bounds_pair
            count = hi - lo
            eps = np.empty((count, steps), dtype=np.uint8)
            words = np.empty((count, steps), dtype=np.uint64)
            x0 = np.empty(count, dtype=np.uint64)
            for i in range(count):
                rng = substream(seed, TAG_TAIL, lo + i)
                if point_bits is None:
                    w = int(rng.integers(0, _U64_MAX, dtype=np.uint64,
                                         endpoint=True))
                    x0[i] = w & mod1.wrap_mask
                else:
                    x0[i] = point_bits
                eps[i] = rng.integers(0, 2, size=steps, dtype=np.uint8)
                words[i] = rng.integers(0, _U64_MAX, size=steps,
                                        dtype=np.uint64, endpoint=True)
            sums = _kernels.mod1_chain_sums(
                mod1.odd_mask, mod1.even_mask, mod1.wrap_mask, shift, scale,
                fspec.code, x0, eps, words, backend=backend)
            return _tail_counts(sums, t)

        chunk = _replica_chunk(replicas, steps, bytes_per_step=9)
    else:
        raise ValueError("mc_tail needs a finite or mod-1 chain")

    pairs = [(lo, min(lo + chunk, replicas))
             for lo in range(0, replicas, chunk)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(worker, pairs))
    else:
        parts = [worker(p) for p in pairs]
    counts = np.sum(parts, axis=0, dtype=np.int64)
    estimate = counts / replicas
    se = np.sqrt(estimate * (1.0 - estimate) / replicas)
    return TailCurve(t=t, estimate=estimate, se=se, provenance="monte_carlo",
                     n=n, replicas=replicas)


def _tail_counts(sums: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Per-grid-point counts of |sum| strictly above t."""
    ordered = np.sort(np.abs(sums))
    return (ordered.size - np.searchsorted(ordered, t, side="right")
            ).astype(np.int64)


# ---------------------------------------------------------------------------
# exact tails on small finite chains
# ---------------------------------------------------------------------------


def _enumeration_guard(k: int, n: int):
    if k > 1 and n * math.log(k) > math.log(_ENUM_GUARD):
        raise GuardError(
            f"path space {k}^{n} exceeds the {_ENUM_GUARD:.0e} enumeration guard")


def _strict_cutoff(t: float, lcm_den: int) -> int:
    """Smallest integer M with M / lcm_den > t, exactly."""
    thr = Fraction(t) * lcm_den
    return thr.numerator // thr.denominator + 1


def exact_tail(chain: ChainInstance, f, x0: int, n: int, t_grid) -> TailCurve:
    """Exact P_x(|sum of f over n states| > t) by dynamic programming.

    Sums are tracked exactly: on an integer lattice after clearing the
    (binary-rational) denominators of f when that lattice is small
    enough, otherwise as exact rationals keyed per (state, sum) pair.
    Strictness at the threshold is decided in exact arithmetic.
    """
    if not chain.is_finite:
        raise ValueError("exact tails need a finite chain")
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    k = chain.kernel.n_states
    _enumeration_guard(k, n)
    x0 = int(x0)
    if not (0 <= x0 < k):
        raise ValueError(f"initial state {x0} out of range")
    t = _validated_grid(t_grid)
    fspec = resolve_functional(chain, f)
    fracs = [Fraction(*float(v).as_integer_ratio()) for v in fspec.values]
    lcm_den = math.lcm(*(fr.denominator for fr in fracs))
    f_int = [int(fr * lcm_den) for fr in fracs]
    lo, hi = min(f_int), max(f_int)
    base = min(lo, n * lo)
    top = max(hi, n * hi)
    width = top - base + 1
    matrix = chain.kernel.matrix
    if lcm_den <= 2 ** 40 and width <= _LATTICE_WIDTH_CAP \
            and max(abs(base), abs(top)) < 2 ** 62:
        probs = _exact_tail_lattice(matrix, f_int, x0, n, base, width,
                                    lcm_den, t)
    else:
        probs = _exact_tail_fractions(matrix, fracs, x0, n, t)
    return TailCurve(t=t, estimate=probs, se=None, provenance="enumeration",
                     n=n)


def _exact_tail_lattice(matrix, f_int, x0, n, base, width, lcm_den, t):
    k = matrix.shape[0]
    dp = np.zeros((k, width), dtype=np.float64)
    dp[x0, f_int[x0] - base] = 1.0
    for _ in range(n - 1):
        new = np.zeros_like(dp)
        for y in range(k):
            vec = matrix[:, y] @ dp
            shift = f_int[y]
            if shift >= 0:
                if shift < width:
                    new[y, shift:] += vec[:width - shift]
            elif -shift < width:
                new[y, :width + shift] += vec[-shift:]
        dp = new
    total = float(dp.sum())
    if abs(total - 1.0) > 1e-9:
        raise RuntimeError(f"lattice DP lost probability mass: total {total!r}")
    weight = dp.sum(axis=0)
    sums_int = base + np.arange(width, dtype=np.int64)
    order = np.argsort(np.abs(sums_int), kind="stable")
    abs_sorted = np.abs(sums_int)[order]
    suffix = np.concatenate([np.cumsum(weight[order][::-1])[::-1], [0.0]])
    cuts = np.array([_strict_cutoff(tj, lcm_den) for tj in t], dtype=np.int64)
    idx = np.searchsorted(abs_sorted, cuts, side="left")
    return np.clip(suffix[idx], 0.0, 1.0)


def _exact_tail_fractions(matrix, fracs, x0, n, t):
    k = matrix.shape[0]
    p_frac = [[Fraction(*float(matrix[x, y]).as_integer_ratio())
               for y in range(k)] for x in range(k)]
    dp = {(x0, fracs[x0]): Fraction(1)}
    for _ in range(n - 1):
        new = defaultdict(Fraction)
        for (x, total), p in dp.items():
            row = p_frac[x]
            for y in range(k):
                if row[y]:
                    new[(y, total + fracs[y])] += p * row[y]
        if len(new) > _FRACTION_GUARD:
            raise GuardError(
                f"exact sum enumeration grew past {_FRACTION_GUARD} "
                "(state, sum) pairs")
        dp = dict(new)
    if sum(dp.values()) != 1:
        raise RuntimeError("fraction DP lost probability mass")
    probs = []
    for tj in t:
        thr = Fraction(tj)
        probs.append(float(sum(p for (_, total), p in dp.items()
                               if abs(total) > thr)))
    return np.asarray(probs, dtype=np.float64)


# ---------------------------------------------------------------------------
# exact regeneration-count tails and gap law
# ---------------------------------------------------------------------------


def _fraction_vector(weights) -> list:
    vec = [Fraction(*float(w).as_integer_ratio()) for w in weights]
    total = sum(vec)
    if total <= 0:
        raise ValueError("weights must have positive total mass")
    return [w / total for w in vec]


def _block_transition_fractions(chain: ChainInstance):
    """(B0, B1) with B1[x][y] = 1_C(x) delta nu(y) and B0 = P^m - B1."""
    k = chain.kernel.n_states
    spec = chain.minorization
    p_frac = [[Fraction(*float(chain.kernel.matrix[x, y]).as_integer_ratio())
               for y in range(k)] for x in range(k)]
    pm = p_frac
    for _ in range(chain.m - 1):
        pm = [[sum(pm[x][z] * p_frac[z][y] for z in range(k))
               for y in range(k)] for x in range(k)]
    delta = Fraction(*float(spec.delta).as_integer_ratio())
    nu = _fraction_vector(spec.nu)
    in_c = np.asarray(spec.small_set, dtype=bool)
    b1 = [[delta * nu[y] if in_c[x] else Fraction(0) for y in range(k)]
          for x in range(k)]
    b0 = [[pm[x][y] - b1[x][y] for y in range(k)] for x in range(k)]
    for x in range(k):
        for y in range(k):
            if b0[x][y] < 0:
                raise ValueError(
                    "minorization fails in exact arithmetic at "
                    f"({x}, {y}): P^m - delta nu = {float(b0[x][y]):.3e}")
    return b0, b1


def exact_regeneration_count_tail(chain: ChainInstance, n: int,
                                  threshold: int, init=0) -> float:
    """Exact P(N > threshold) where N counts regenerations before n - m.

    N is the number of level-1 block starts sigma_i < n - m, matching
    the block-decomposition count. Exact rational dynamic programming
    over (state, capped count) across the m-step block transitions.
    init is a state index, "pi", or "nu".
    """
    if not chain.is_finite:
        raise ValueError("exact regeneration counts need a finite chain")
    n = int(n)
    m = chain.m
    if n < m:
        raise ValueError("horizon n must be at least m")
    threshold = int(threshold)
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    blocks = -((n - m) // -m) if n > m else 0
    b0, b1 = _block_transition_fractions(chain)
    k = chain.kernel.n_states
    if isinstance(init, str):
        token = init.lower()
        if token == "pi":
            start = _fraction_vector(chain.pi_vector())
        elif token == "nu":
            start = _fraction_vector(chain.minorization.nu)
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        x = int(init)
        if not (0 <= x < k):
            raise ValueError(f"initial state {x} out of range")
        start = [Fraction(1) if y == x else Fraction(0) for y in range(k)]
    cap = threshold + 1
    dp = [[start[x] if c == 0 else Fraction(0) for c in range(cap + 1)]
          for x in range(k)]
    for _ in range(blocks):
        new = [[Fraction(0)] * (cap + 1) for _ in range(k)]
        for x in range(k):
            row0, row1 = b0[x], b1[x]
            for c in range(cap + 1):
                w = dp[x][c]
                if not w:
                    continue
                bumped = min(c + 1, cap)
                for y in range(k):
                    if row0[y]:
                        new[y][c] += w * row0[y]
                    if row1[y]:
                        new[y][bumped] += w * row1[y]
        dp = new
    return float(sum(dp[x][cap] for x in range(k)))


def exact_gap_distribution(chain: ChainInstance, *, gmax: int = 4096,
                           tol: float = 1e-15):
    """(gap lengths in steps, probabilities, remaining mass), from nu.

    P(gap = g m) = nu B0^(g-1) u with u = delta 1_C, evaluated
    iteratively until the unregenerated mass drops below tol or gmax
    block steps are reached.
    """
    if not chain.is_finite:
        raise ValueError("exact gap laws need a finite chain")
    spec = chain.minorization
    in_c = np.asarray(spec.small_set, dtype=bool)
    nu = np.asarray(spec.nu, dtype=np.float64)
    pm = np.linalg.matrix_power(chain.kernel.matrix, chain.m)
    b1 = np.where(in_c[:, None], spec.delta * nu[None, :], 0.0)
    b0 = pm - b1
    u = np.where(in_c, spec.delta, 0.0)
    w = nu.copy()
    probs = []
    for _ in range(int(gmax)):
        probs.append(float(w @ u))
        w = w @ b0
        if float(w.sum()) < tol:
            break
    gaps = chain.m * np.arange(1, len(probs) + 1, dtype=np.int64)
    return gaps, np.asarray(probs), float(w.sum())


def exact_gap_psi1(chain: ChainInstance, *, tol: float = 1e-12) -> float:
    """Exact psi_1 norm of the regeneration gap via its closed-form MGF.

    E exp(gap / c) = z nu (I - z B0)^{-1} u with z = exp(m / c) and
    u = delta 1_C, finite exactly when z rho(B0) < 1. Bisection to
    relative tolerance tol on the root of E = 2.
    """
    if not chain.is_finite:
        raise ValueError("exact gap norms need a finite chain")
    spec = chain.minorization
    k = chain.kernel.n_states
    in_c = np.asarray(spec.small_set, dtype=bool)
    nu = np.asarray(spec.nu, dtype=np.float64)
    pm = np.linalg.matrix_power(chain.kernel.matrix, chain.m)
    b0 = pm - np.where(in_c[:, None], spec.delta * nu[None, :], 0.0)
    u = np.where(in_c, spec.delta, 0.0)
    rho = float(np.max(np.abs(np.linalg.eigvals(b0))))
    m = float(chain.m)

    def mgf(c):
        z = math.exp(m / c)
        if z * rho >= 1.0 - 1e-13:
            return math.inf
        sol = np.linalg.solve(np.eye(k) - z * b0, u)
        return z * float(nu @ sol)

    lo = m / math.log(1.0 / rho) if rho > 0.0 else 1e-12
    hi = max(2.0 * lo, m / math.log(2.0), 1.0)
    while mgf(hi) > 2.0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("gap MGF root exceeds 1e12")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mgf(mid) >= 2.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# block structure tests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StructuralTestResult:
    """One named check; untested entries are informational only."""

    name: str
    passed: bool
    tested: bool
    statistic: float
    threshold: float
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class BlockStructureReport:
    results: tuple
    n_gaps: int
    mean_gap: float
    mean_gap_se: float
    level: float
    lags: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results if r.tested)


def _autocorr(values: np.ndarray, lag: int) -> float:
    centered = values - values.mean()
    var = float(np.mean(centered * centered))
    if var == 0.0:
        return 0.0
    return float(np.mean(centered[:-lag] * centered[lag:]) / var)


def block_structure_tests(gaps, excursions_by_name: dict, *, lags: int = 10,
                          level: float = 0.01, expected_mean_gap=None
                          ) -> BlockStructureReport:
    """Tests of i.i.d. gaps and 1-dependent excursions.

    Gap autocorrelations at lags 1..L sit in a Bonferroni-adjusted
    normal band, the two halves of the gap sample pass a two-sample KS
    test, and each excursion series has vanishing autocorrelation from
    lag 2 on (lag 1 is reported but never tested; adjacent excursions
    may share a block boundary). Excursion bands carry the lag-1
    inflation factor sqrt(1 + 2 r1^2).
    """
    gaps = np.asarray(gaps, dtype=np.float64)
    n_gaps = gaps.size
    if n_gaps < 1000:
        raise ValueError("need at least 1000 gaps for the structure tests")
    if not (0.0 < level < 0.5):
        raise ValueError("level must lie in (0, 0.5)")
    lags = int(lags)
    if lags < 1:
        raise ValueError("lags must be at least 1")
    results = []
    z_gap = float(stats.norm.ppf(1.0 - 0.5 * level / lags))
    band = z_gap / math.sqrt(n_gaps)
    for lag in range(1, lags + 1):
        r = _autocorr(gaps, lag)
        results.append(StructuralTestResult(
            name=f"gap_acf_lag{lag}", passed=abs(r) <= band, tested=True,
            statistic=r, threshold=band))
    half = n_gaps // 2
    ks = stats.ks_2samp(gaps[:half], gaps[half:])
    results.append(StructuralTestResult(
        name="gap_ks_split", passed=bool(ks.pvalue >= level), tested=True,
        statistic=float(ks.statistic), threshold=level,
        detail={"pvalue": float(ks.pvalue)}))
    mean_gap = float(gaps.mean())
    mean_se = float(gaps.std(ddof=1) / math.sqrt(n_gaps))
    if expected_mean_gap is not None:
        dev = abs(mean_gap - float(expected_mean_gap))
        results.append(StructuralTestResult(
            name="mean_gap", passed=dev <= 4.0 * mean_se, tested=True,
            statistic=mean_gap, threshold=4.0 * mean_se,
            detail={"expected": float(expected_mean_gap), "se": mean_se}))
    for name, chi in excursions_by_name.items():
        chi = np.asarray(chi, dtype=np.float64)
        if chi.size < 1000:
            raise ValueError(
                f"need at least 1000 excursions for {name}, got {chi.size}")
        r1 = _autocorr(chi, 1)
        inflation = math.sqrt(1.0 + 2.0 * r1 * r1)
        z_exc = float(stats.norm.ppf(1.0 - 0.5 * level / max(lags - 1, 1)))
        band_exc = z_exc * inflation / math.sqrt(chi.size)
        results.append(StructuralTestResult(
            name=f"{name}_acf_lag1", passed=True, tested=False,
            statistic=r1, threshold=band_exc))
        for lag in range(2, lags + 1):
            r = _autocorr(chi, lag)
            results.append(StructuralTestResult(
                name=f"{name}_acf_lag{lag}", passed=abs(r) <= band_exc,
                tested=True, statistic=r, threshold=band_exc))
    return BlockStructureReport(
        results=tuple(results), n_gaps=int(n_gaps), mean_gap=mean_gap,
        mean_gap_se=mean_se, level=float(level), lags=lags)


def _buffered_horizon(chain: ChainInstance, n_regen: int) -> int:
    buffer = n_regen + 5.0 * math.sqrt(n_regen) + 10.0
    return int(math.ceil(buffer * chain.mean_gap())) + chain.m


def collect_excursions(chain: ChainInstance, f, n_regen: int, seed: int, *,
                       init="nu", backend: str | None = None):
    """(chi, gaps) arrays of exactly n_regen excursions from one long run.

    The horizon is buffered five standard deviations above the expected
    block count and the run retries with a doubled buffer if a short
    realization still comes up light.
    """
    n_regen = int(n_regen)
    if n_regen < 1:
        raise ValueError("n_regen must be positive")
    fspec = resolve_functional(chain, f)
    f_eval = fspec.values if fspec.values is not None else fspec.fn
    horizon = _buffered_horizon(chain, n_regen)
    for attempt in range(6):
        rng = substream(seed, TAG_COLLECT, attempt)
        traj = simulate_split(chain, init, horizon, rng,
                              extend_to_regeneration=True, backend=backend)
        chi = excursions(traj, f_eval)
        if chi.size >= n_regen:
            return chi[:n_regen], gap_lengths(traj)[:n_regen]
        horizon *= 2
    raise GuardError(f"could not collect {n_regen} excursions in 6 attempts")


def check_block_structure(chain: ChainInstance, *, n_blocks: int = 20000,
                          lags: int = 10, level: float = 0.01,
                          functionals=None, seed: int = 0,
                          backend: str | None = None) -> BlockStructureReport:
    """Structure tests on a fresh long split run of the given chain."""
    if functionals is None:
        functionals = (("cos2pi", "identity_centered") if chain.mod1 is not None
                       else ("indicator_centered", "identity_centered"))
    rng = substream(seed, TAG_STRUCTURE, 0)
    traj = simulate_split(chain, "nu", _buffered_horizon(chain, n_blocks),
                          rng, extend_to_regeneration=True, backend=backend)
    gaps = gap_lengths(traj)
    by_name = {}
    for name in functionals:
        fspec = resolve_functional(chain, name)
        f_eval = fspec.values if fspec.values is not None else fspec.fn
        by_name[fspec.name] = excursions(traj, f_eval)
    return block_structure_tests(gaps, by_name, lags=lags, level=level,
                                 expected_mean_gap=chain.mean_gap())


# ---------------------------------------------------------------------------
# occupation-measure identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PitmanCheck:
    """Monte Carlo vs closed form for the occupation identity."""

    name: str
    lhs: float
    se: float
    rhs: float
    replicas: int
    passed: bool


def _pitman_g(chain: ChainInstance, g_spec):
    if callable(g_spec):
        return g_spec, "callable"
    if isinstance(g_spec, tuple) and len(g_spec) == 2 and g_spec[0] == "state":
        if not chain.is_finite:
            raise ValueError("state-indicator G needs a finite chain")
        target = int(g_spec[1])
        if not (0 <= target < chain.kernel.n_states):
            raise ValueError(f"state {target} out of range")
        return (lambda s, lev: (np.asarray(s) == target).astype(np.float64),
                f"state:{target}")
    if g_spec == "one":
        return (lambda s, lev: np.ones(np.asarray(lev).shape, dtype=np.float64),
                "one")
    if g_spec == "level":
        return (lambda s, lev: np.asarray(lev, dtype=np.float64), "level")
    raise ValueError(f"unknown G {g_spec!r}")


def _pitman_rhs(chain: ChainInstance, g_fn, g_name: str) -> float:
    delta = chain.delta
    pi_c = chain.pi_small_set()
    if chain.is_finite:
        sm = split_measure(chain.pi_vector(), chain.minorization)
        k = chain.kernel.n_states
        idx = np.arange(k)
        ones = np.ones(k)
        zeros = np.zeros(k)
        mean = float(sm.level1 @ np.asarray(g_fn(idx, ones), dtype=np.float64)
                     + sm.level0 @ np.asarray(g_fn(idx, zeros),
                                              dtype=np.float64))
        return mean / (delta * pi_c)
    if g_name == "one":
        return 1.0 / (delta * pi_c)
    if g_name == "level":
        return 1.0
    raise ValueError(
        "the mod-1 chain supports G values 'one' and 'level' only")


def check_pitman(chain: ChainInstance, g_spec, replicas: int = 20000,
                 seed: int = 0, *, backend: str | None = None) -> PitmanCheck:
    """Tests E_nu sum of G over block starts 0..sigma_0 vs its closed form.

    The closed form is E(G under the split stationary law) divided by
    delta pi(C). Passing means agreement within 4 SE; the level
    indicator sums to exactly 1 on every path, so its SE is zero and
    the comparison is exact.
    """
    replicas = int(replicas)
    if replicas < 100:
        raise ValueError("need at least 100 replicas")
    g_fn, g_name = _pitman_g(chain, g_spec)
    rhs = _pitman_rhs(chain, g_fn, g_name)
    m = chain.m
    totals = np.empty(replicas, dtype=np.float64)
    for r in range(replicas):
        rng = substream(seed, TAG_PITMAN, r)
        traj = simulate_split(chain, "nu", m, rng,
                              extend_to_regeneration=True, backend=backend)
        starts = np.arange(0, int(traj.sigma[0]) + 1, m)
        vals = np.asarray(g_fn(traj.states[starts], traj.levels[starts]),
                          dtype=np.float64)
        totals[r] = vals.sum()
    lhs = float(totals.mean())
    se = float(totals.std(ddof=1) / math.sqrt(replicas))
    passed = abs(lhs - rhs) <= max(4.0 * se, 1e-9)
    return PitmanCheck(name=g_name, lhs=lhs, se=se, rhs=rhs,
                       replicas=replicas, passed=passed)


# ---------------------------------------------------------------------------
# conditional block-Markov identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockMarkovCheck:
    """All-histories conditional excursion means vs the regeneration value."""

    passed: bool
    constant: float
    max_deviation: float
    per_state: dict
    n_contexts: int
    n_histories: int
    routes_agree: bool
    route_gap: float


def check_block_markov(chain: ChainInstance, n: int = 8,
                       f="indicator_centered", *, tol: float = 1e-10,
                       corruption: float = 0.0) -> BlockMarkovCheck:
    """Exact check that every regeneration history gives the same
    conditional excursion mean.

    For a one-step minorization the post-regeneration state has law nu
    regardless of the history, so E(chi | whole past) must equal the
    single number nu . h with h the excursion-sum potential solving
    h = f + B0 h. The routine enumerates every attainable history of
    length <= n ending in a regeneration (counted exactly), evaluates
    the conditional through the next-state law hook, and compares.
    h is computed twice, by direct solve and by Neumann summation, so
    the reference value is not a single-route artifact. corruption > 0
    tilts the next-state law away from nu; the check must then fail.
    """
    if not chain.is_finite:
        raise ValueError("the conditional identity check needs a finite chain")
    if chain.m != 1:
        raise ValueError(
            "the all-histories conditional check is defined for one-step "
            "minorizations; higher m conditions on within-block states")
    n = int(n)
    if n < 2:
        raise ValueError("horizon n must be at least 2")
    k = chain.kernel.n_states
    _enumeration_guard(k, n)
    spec = chain.minorization
    fspec = resolve_functional(chain, f)
    f_vec = fspec.values
    in_c = np.asarray(spec.small_set, dtype=bool)
    nu = np.asarray(spec.nu, dtype=np.float64)
    matrix = chain.kernel.matrix
    b0 = matrix - np.where(in_c[:, None], spec.delta * nu[None, :], 0.0)
    h = np.linalg.solve(np.eye(k) - b0, f_vec)
    # second route: Neumann series sum of B0^j f
    h_series = f_vec.copy()
    term = f_vec.copy()
    for _ in range(100000):
        term = b0 @ term
        h_series = h_series + term
        if float(np.abs(term).max()) < 1e-16 * max(1.0, float(np.abs(h_series).max())):
            break
    else:
        raise GuardError("Neumann series for the potential did not converge")
    route_gap = float(np.abs(h - h_series).max())
    routes_agree = route_gap <= 1e-10

    r_mat = np.asarray(spec.r, dtype=np.float64)
    constant = float(nu @ h)
    next_laws = {}
    for x in range(k):
        if not in_c[x]:
            continue
        law = nu.copy()
        if corruption:
            tilt = np.zeros(k)
            tilt[(x + 1) % k] += corruption
            tilt[x] -= corruption
            law = np.clip(law + tilt, 0.0, None)
            law /= law.sum()
        next_laws[x] = law

    # exact big-integer count of attainable (states, levels) histories
    # ending in a regeneration, and the set of regeneration contexts
    support = matrix > 0.0
    counts = [1] * k
    capable = [bool(in_c[x] and np.any(support[x] & (r_mat[x] > 0.0)))
               for x in range(k)]
    n_contexts = 0
    n_histories = 0
    seen_states = set()
    for s in range(n - 1):
        for x in range(k):
            if counts[x] and capable[x]:
                n_contexts += 1
                n_histories += counts[x]
                seen_states.add(x)
        new_counts = [0] * k
        for x in range(k):
            if not counts[x]:
                continue
            for y in range(k):
                if not support[x, y]:
                    continue
                if in_c[x]:
                    r = r_mat[x, y]
                    branches = (1 if r > 0.0 else 0) + (1 if r < 1.0 else 0)
                else:
                    branches = 1
                new_counts[y] += counts[x] * branches
        counts = new_counts

    per_state = {int(x): float(next_laws[x] @ h) for x in sorted(seen_states)}
    if not per_state:
        raise ValueError("no attainable regeneration context at this horizon")
    max_dev = max(abs(v - constant) for v in per_state.values())
    passed = routes_agree and max_dev <= tol
    return BlockMarkovCheck(
        passed=passed, constant=constant, max_deviation=float(max_dev),
        per_state=per_state, n_contexts=n_contexts, n_histories=n_histories,
        routes_agree=routes_agree, route_gap=route_gap)


# ---------------------------------------------------------------------------
# two-block factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TwoBlockSample:
    """X_i = h(xi_i, xi_{i+1}) stream with its driving noise."""

    x: np.ndarray
    xi: np.ndarray
    h_name: str
    law_name: str


_TWO_BLOCK_H = {
    "product": lambda u, v: u * v,
    "difference": lambda u, v: v - u,
}


def _resolve_two_block_h(h):
    if callable(h):
        return h, "callable"
    if h in _TWO_BLOCK_H:
        return _TWO_BLOCK_H[h], h
    raise ValueError(f"unknown two-block map {h!r}")


def _resolve_xi_law(xi_law):
    if callable(xi_law):
        return xi_law, "callable"
    table = {
        "uniform": lambda rng, size: rng.uniform(-1.0, 1.0, size),
        "normal": lambda rng, size: rng.standard_normal(size),
        "exponential": lambda rng, size: rng.exponential(1.0, size),
        "rademacher": lambda rng, size: (
            rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0),
    }
    if xi_law in table:
        return table[xi_law], xi_law
    raise ValueError(f"unknown noise law {xi_law!r}")


def two_block_factor(h, xi_law, length: int, seed: int) -> TwoBlockSample:
    """One realization of the canonical 1-dependent process.

    h is "product", "difference", or a vectorized callable of (u, v);
    xi_law is "uniform" (on (-1, 1)), "normal", "exponential",
    "rademacher", or a callable (rng, size) -> array.
    """
    length = int(length)
    if length < 1:
        raise ValueError("length must be positive")
    h_fn, h_name = _resolve_two_block_h(h)
    law_fn, law_name = _resolve_xi_law(xi_law)
    rng = substream(seed, TAG_TWO_BLOCK, 0)
    xi = np.asarray(law_fn(rng, length + 1), dtype=np.float64)
    if xi.shape != (length + 1,):
        raise ValueError("noise law must return a 1-d array of the asked size")
    x = np.asarray(h_fn(xi[:-1], xi[1:]), dtype=np.float64)
    return TwoBlockSample(x=x, xi=xi, h_name=h_name, law_name=law_name)


def two_block_sup_tail(h, xi_law, n: int, t_grid, replicas: int, seed: int,
                       *, threads: int = 1) -> TailCurve:
    """Empirical tail of max_k |S_k| for two-block-factor partial sums.

    Replica r draws from substream (seed, TAG_TWO_BLOCK, 1 + r), so the
    single-sample path of two_block_factor (path index 0) never
    collides with the replicated ones.
    """
    n = int(n)
    replicas = int(replicas)
    if n < 1:
        raise ValueError("n must be at least 1")
    if replicas < 1000:
        raise ValueError("need at least 1000 replicas")
    t = _validated_grid(t_grid)
    h_fn, _ = _resolve_two_block_h(h)
    law_fn, _ = _resolve_xi_law(xi_law)
    chunk = _replica_chunk(replicas, n + 1, bytes_per_step=16)

    def worker(bounds_pair):
        lo, hi = bounds_pair
        stats_chunk = np.empty(hi - lo, dtype=np.float64)
        for i in range(hi - lo):
            rng = substream(seed, TAG_TWO_BLOCK, 1 + lo + i)
            xi = np.asarray(law_fn(rng, n + 1), dtype=np.float64)
            x = np.asarray(h_fn(xi[:-1], xi[1:]), dtype=np.float64)
            stats_chunk[i] = np.abs(np.cumsum(x)).max()
        return _tail_counts(stats_chunk, t)

    pairs = [(lo, min(lo + chunk, replicas))
             for lo in range(0, replicas, chunk)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(worker, pairs))
    else:
        parts = [worker(p) for p in pairs]
    counts = np.sum(parts, axis=0, dtype=np.int64)
    estimate = counts / replicas
    se = np.sqrt(estimate * (1.0 - estimate) / replicas)
    return TailCurve(t=t, estimate=estimate, se=se, provenance="monte_carlo",
                     n=n, replicas=replicas)


# ---------------------------------------------------------------------------
# parameter fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FittedParams:
    """Safety-inflated bound parameters plus fitting diagnostics."""

    params: BernsteinParams
    diagnostics: dict


def _f_on_states(fspec, states) -> np.ndarray:
    if fspec.values is not None:
        return fspec.values[np.asarray(states, dtype=np.int64)]
    return np.asarray(fspec.fn(np.asarray(states, dtype=np.float64)),
                      dtype=np.float64)


def fit_bernstein_params(chain: ChainInstance, f, alpha: float = 1.0, *,
                         x_star=None, n_excursions: int = 4000,
                         n_first_blocks: int = 2000, seed: int = 0,
                         safety: float = 1.2, sigma2=None,
                         backend: str | None = None) -> FittedParams:
    """Empirical psi-norm fit of the bound parameters a, b, c, d and D.

    c and d come from one long run's excursions and gaps; a and b from
    replicated first blocks under the point start x_star and the
    stationary start, as the psi_alpha norm of the absolute block-sum
    total up to the first regeneration. D is the largest of the three
    fitted psi_1 gap norms. Every fitted norm is inflated by the
    multiplicative safety factor; sigma2 defaults to the exact value on
    finite chains and to the regenerative estimate otherwise.
    """
    if safety < 1.0:
        raise ValueError("safety must be at least 1")
    if n_excursions < 100 or n_first_blocks < 100:
        raise ValueError("need at least 100 excursions and first blocks")
    fspec = resolve_functional(chain, f)
    m = chain.m
    if x_star is None:
        if chain.is_finite:
            x_star = int(np.flatnonzero(
                np.asarray(chain.minorization.small_set, dtype=bool))[0])
        else:
            x_star = 0.0

    f_eval = fspec.values if fspec.values is not None else fspec.fn
    rng = substream(seed, TAG_FIT_EXCURSION, 0)
    traj = simulate_split(chain, "nu", _buffered_horizon(chain, n_excursions),
                          rng, extend_to_regeneration=True, backend=backend)
    chi = excursions(traj, f_eval)
    gaps = gap_lengths(traj)
    if chi.size < 100:
        raise ValueError(f"long run produced only {chi.size} excursions")
    c_est = psi_norm_empirical(chi, alpha).value
    d_est = psi_norm_empirical(gaps, 1.0).value

    def first_blocks(init, tag_offset):
        totals = np.empty(n_first_blocks, dtype=np.float64)
        sigma0 = np.empty(n_first_blocks, dtype=np.float64)
        for r in range(n_first_blocks):
            run = simulate_split(
                chain, init, m,
                substream(seed, TAG_FIT_FIRST_BLOCK, tag_offset, r),
                extend_to_regeneration=True, backend=backend)
            s0 = int(run.sigma[0])
            vals = _f_on_states(fspec, run.states[:s0 + m])
            totals[r] = float(np.abs(vals.reshape(-1, m).sum(axis=1)).sum())
            sigma0[r] = s0
        return totals, sigma0

    totals_x, sigma0_x = first_blocks(("point", x_star), 0)
    totals_pi, sigma0_pi = first_blocks("pi", 1)
    a_est = psi_norm_empirical(totals_x, alpha).value
    b_est = psi_norm_empirical(totals_pi, alpha).value
    s0x_est = psi_norm_empirical(sigma0_x, 1.0).value
    s0pi_est = psi_norm_empirical(sigma0_pi, 1.0).value
    d_cap_est = max(d_est, s0x_est, s0pi_est)

    if sigma2 is not None:
        sigma2_value = float(sigma2)
        sigma2_source = "given"
    elif chain.is_finite:
        sigma2_value = sigma_mrv_exact(chain, fspec.values)
        sigma2_source = "exact"
    else:
        sigma2_value = sigma_mrv_regenerative(chi, gaps).value
        sigma2_source = "regenerative"

    params = BernsteinParams(
        a=safety * a_est, b=safety * b_est, c=safety * c_est,
        d=safety * d_est, alpha=alpha, sigma2_mrv=sigma2_value,
        delta=chain.delta, pi_C=chain.pi_small_set(), m=m,
        D=safety * d_cap_est, f_sup=fspec.sup_bound)
    diagnostics = {
        "raw": {"a": a_est, "b": b_est, "c": c_est, "d": d_est,
                "sigma0_xstar": s0x_est, "sigma0_pi": s0pi_est,
                "D": d_cap_est},
        "safety": float(safety),
        "n_excursions": int(chi.size),
        "n_first_blocks": int(n_first_blocks),
        "x_star": x_star,
        "sigma2_source": sigma2_source,
        "seed": int(seed),
    }
    return FittedParams(params=params, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# assembled reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundCurve:
    """One bound evaluated along the tail grid."""

    name: str
    values: np.ndarray
    flags: tuple


@dataclass(frozen=True, eq=False)
class VerificationReport:
    chain_label: str
    functional: str
    n: int
    seed: int
    z: float
    tail: TailCurve
    curves: dict
    verdicts: dict
    params: BernsteinParams
    diagnostics: dict
    p: float
    structure: BlockStructureReport | None = None

    @property
    def passed(self) -> bool:
        ok = all(v.passed for v in self.verdicts.values())
        if self.structure is not None:
            ok = ok and self.structure.passed
        return ok


_FORMULA_CHOICES = ("thm_bi", "thm_bi2", "thm_sbi")


def _eval_formula(name: str, params: BernsteinParams, n: int, t: float,
                  p: float):
    if name == "thm_bi":
        return thm_bi(params, n, t)
    if name == "thm_bi2":
        return thm_bi2(params, n, p, t)
    if name == "thm_sbi":
        if params.f_sup is None or params.D is None:
            raise ValueError("thm_sbi needs f_sup and D in the parameters")
        return thm_sbi(n, t, params.sigma2_mrv, params.f_sup, params.D,
                       params.delta, params.pi_C)
    raise ValueError(
        f"unknown formula {name!r}; choose from {_FORMULA_CHOICES}")


def bound_curves(params: BernsteinParams, n: int, t_grid, *,
                 formulas=_FORMULA_CHOICES, p: float = 2.0 / 3.0) -> dict:
    """Evaluate each named bound along the grid, collecting flags."""
    t = _validated_grid(t_grid)
    out = {}
    for name in formulas:
        values = np.empty(t.size, dtype=np.float64)
        flags = set()
        for j, tj in enumerate(t):
            bv = _eval_formula(name, params, n, float(tj), p)
            values[j] = float(bv)
            flags.update(bv.flags)
        out[name] = BoundCurve(name=name, values=values,
                               flags=tuple(sorted(flags)))
    return out


def run_verification(chain: ChainInstance, f, *, n: int, t_grid, seed: int,
                     init="pi", replicas: int = 100000,
                     formulas=_FORMULA_CHOICES, z: float = 3.0,
                     exact: bool = False, x0=None, p: float = 2.0 / 3.0,
                     alpha: float = 1.0, threads: int = 1,
                     backend: str | None = None, fitted=None,
                     fit_options=None, structure: bool = False
                     ) -> VerificationReport:
    """Tail estimation plus bound domination in one report.

    With exact=True the tail comes from enumeration started at x0
    (default: the first small-set state); otherwise from replicas
    Monte Carlo runs started from init. Bound parameters are fitted
    from (seed-derived) simulation unless a FittedParams is supplied.
    """
    fspec = resolve_functional(chain, f)
    if exact:
        if x0 is None:
            if not chain.is_finite:
                raise ValueError("exact verification needs a finite chain")
            x0 = int(np.flatnonzero(
                np.asarray(chain.minorization.small_set, dtype=bool))[0])
        tail = exact_tail(chain, fspec, x0, n, t_grid)
    else:
        tail = mc_tail(chain, fspec, init, n, t_grid, replicas, seed,
                       threads=threads, backend=backend)
    if fitted is None:
        fitted = fit_bernstein_params(chain, fspec, alpha=alpha, seed=seed,
                                      backend=backend, **(fit_options or {}))
    curves = bound_curves(fitted.params, n, tail.t, formulas=formulas, p=p)
    verdicts = {name: check_domination(tail, curve.values, z=z)
                for name, curve in curves.items()}
    structure_report = None
    if structure:
        structure_report = check_block_structure(chain, seed=seed,
                                                 backend=backend)
    return VerificationReport(
        chain_label=chain.label(), functional=fspec.name, n=int(n),
        seed=int(seed), z=float(z), tail=tail, curves=curves,
        verdicts=verdicts, params=fitted.params,
        diagnostics=fitted.diagnostics, p=float(p),
        structure=structure_report)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def tail_curve_to_dict(tail: TailCurve) -> dict:
    return {
        "t": [float(v) for v in tail.t],
        "estimate": [float(v) for v in tail.estimate],
        "se": None if tail.se is None else [float(v) for v in tail.se],
        "provenance": tail.provenance,
        "n": int(tail.n),
        "replicas": None if tail.replicas is None else int(tail.replicas),
    }


def structure_report_to_dict(report: BlockStructureReport) -> dict:
    return {
        "passed": report.passed,
        "n_gaps": report.n_gaps,
        "mean_gap": report.mean_gap,
        "mean_gap_se": report.mean_gap_se,
        "level": report.level,
        "lags": report.lags,
        "results": [
            {"name": r.name, "passed": r.passed, "tested": r.tested,
             "statistic": r.statistic, "threshold": r.threshold,
             "detail": r.detail}
            for r in report.results
        ],
    }


def report_to_dict(report: VerificationReport) -> dict:
    params = report.params
    return {
        "chain": report.chain_label,
        "functional": report.functional,
        "n": report.n,
        "seed": report.seed,
        "z": report.z,
        "p": report.p,
        "rng": stream_description(report.seed),
        "tail": tail_curve_to_dict(report.tail),
        "bounds": {
            name: {"values": [float(v) for v in curve.values],
                   "flags": list(curve.flags)}
            for name, curve in sorted(report.curves.items())
        },
        "verdicts": {
            name: {"passed": v.passed, "worst_margin": v.worst_margin,
                   "worst_t": v.worst_t, "n_points": v.n_points, "z": v.z}
            for name, v in sorted(report.verdicts.items())
        },
        "params": {
            "a": params.a, "b": params.b, "c": params.c, "d": params.d,
            "alpha": params.alpha, "sigma2_mrv": params.sigma2_mrv,
            "delta": params.delta, "pi_C": params.pi_C, "m": params.m,
            "D": params.D, "f_sup": params.f_sup,
            "warnings": list(params.consistency_warnings()),
        },
        "diagnostics": report.diagnostics,
        "structure": (None if report.structure is None
                      else structure_report_to_dict(report.structure)),
        "passed": report.passed,
    }


def write_curves_csv(report: VerificationReport, path: str) -> None:
    """t, estimate, se, bound_... rows for external plotting."""
    names = sorted(report.curves)
    header = "t,estimate,se," + ",".join(f"bound_{name}" for name in names)
    lines = [header]
    tail = report.tail
    for j in range(len(tail)):
        row = [repr(float(tail.t[j])), repr(float(tail.estimate[j])),
               "" if tail.se is None else repr(float(tail.se[j]))]
        row.extend(repr(float(report.curves[name].values[j]))
                   for name in names)
        lines.append(",".join(row))
    _atomic_write_text(path, "\n".join(lines) + "\n")
