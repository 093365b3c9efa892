"""Split-chain simulation, regeneration blocks and the block decomposition.

The split chain runs the base chain in m-step blocks. At the start of
each block the path is drawn first; the block's level is then 1 with
probability 1_C(start) * r(start, endpoint), using one dedicated uniform
per block (always consumed, so draw counts depend only on the horizon).
For the mod-1 chain the level is latent: a two-step block regenerates
exactly when its two driving coins differ.

Regeneration times are the block starts with level 1. Gaps between them
are iid, and the excursion values over consecutive gaps form a
stationary 1-dependent sequence (independent when m = 1).
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .chain_models import ChainInstance, resolve_functional
from .errors import GuardError

# Block counts drawn per request when extending to a regeneration: the
# first chunk covers the horizon, later chunks grow geometrically.
_EXTEND_CHUNK_START = 64
_EXTEND_CHUNK_CAP = 65536


@dataclass(frozen=True, eq=False)
class SplitTrajectory:
    """A realized split-chain path.

    states and levels have equal length n; levels are constant within
    each m-block. sigma lists the regeneration times, i.e. the block
    starts k with level 1 (and m | k by construction). For the mod-1
    chain, bits holds the exact fixed-point states and latent the
    per-step coin sequence.
    """

    states: np.ndarray
    levels: np.ndarray
    m: int
    init_label: str = ""
    chain_name: str = ""
    bits: np.ndarray | None = None
    latent: np.ndarray | None = None
    sigma: np.ndarray = field(init=False)

    def __post_init__(self):
        states = np.asarray(self.states)
        levels = np.asarray(self.levels, dtype=np.uint8)
        if states.shape != levels.shape or states.ndim != 1:
            raise ValueError("states and levels must be 1-d arrays of equal length")
        if np.any((levels != 0) & (levels != 1)):
            raise ValueError("levels must be 0/1")
        m = int(self.m)
        if m < 1:
            raise ValueError("m must be a positive integer")
        n = len(levels)
        full = (n // m) * m
        if full:
            blocks = levels[:full].reshape(-1, m)
            if np.any(blocks != blocks[:, :1]):
                raise ValueError("levels must be constant within each m-block")
        if n > full and np.any(levels[full:] != levels[full]):
            raise ValueError("levels must be constant within the trailing block")
        starts = np.arange(0, n, m)
        sigma = starts[levels[starts] == 1]
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "sigma", sigma.astype(np.int64))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def no_regeneration(self) -> bool:
        return len(self.sigma) == 0


def _draw_initial(chain: ChainInstance, init, rng):
    """Resolve the initial condition; returns (state, label)."""
    if isinstance(init, tuple) and len(init) == 2 and init[0] == "point":
        return init[1], f"point:{init[1]}"
    if isinstance(init, str):
        token = init.lower()
        if token in ("nu", "pi", "pi-approx"):
            if chain.mod1 is not None:
                # nu and pi both equal lebesgue measure here
                word = int(rng.integers(0, np.iinfo(np.uint64).max,
                                        dtype=np.uint64, endpoint=True))
                bits = word & chain.mod1.wrap_mask
                return float(chain.mod1.bits_to_float(np.uint64(bits))), token
            if chain.is_finite:
                weights = (np.asarray(chain.minorization.nu, dtype=np.float64)
                           if token == "nu" else chain.pi_vector())
                cum = np.cumsum(weights)
                u = rng.random()
                idx = int(np.searchsorted(cum, u, side="right"))
                return min(idx, len(cum) - 1), token
            raise ValueError(
                f"init {init!r} needs a finite or mod-1 chain; pass a state instead")
        raise ValueError(f"unknown init {init!r}")
    return init, f"point:{init}"


def _simulate_blocks_finite(chain, x0, blocks, rng, backend):
    """(states with endpoint, block levels) for a run of complete blocks."""
    m = chain.m
    spec = chain.minorization
    state_u = rng.random(blocks * m)
    level_u = rng.random(blocks)
    return _kernels.finite_split_path(
        chain.kernel.cumulative_rows(),
        np.asarray(spec.small_set, dtype=bool),
        np.asarray(spec.r, dtype=np.float64),
        m, int(x0), state_u, level_u, backend=backend)


def _simulate_blocks_mod1(chain, x0_bits, blocks, rng, backend):
    mod1 = chain.mod1
    eps = rng.integers(0, 2, size=2 * blocks, dtype=np.uint8)
    words = rng.integers(0, np.iinfo(np.uint64).max, size=2 * blocks,
                         dtype=np.uint64, endpoint=True)
    bits = _kernels.mod1_chain_path(mod1.odd_mask, mod1.even_mask, mod1.wrap_mask,
                                    x0_bits, eps, words, backend=backend)
    pair = eps.reshape(-1, 2)
    levels = (pair[:, 0] != pair[:, 1]).astype(np.uint8)
    return bits, levels, eps


def _simulate_blocks_generic(chain, x0, blocks, rng):
    spec = chain.minorization
    if spec.r is None or not callable(spec.r):
        raise ValueError(
            "generic chain without an r evaluator or latent scheme cannot be split")
    small = spec.small_set
    in_c = small if callable(small) else (lambda x: bool(small[x]))
    m = chain.m
    states = [x0]
    levels = np.empty(blocks, dtype=np.uint8)
    x = x0
    for k in range(blocks):
        start = x
        for _ in range(m):
            x = chain.kernel.sampler(x, rng)
            states.append(x)
        u = rng.random()
        levels[k] = 1 if (in_c(start) and u < spec.r(start, x)) else 0
    return np.asarray(states), levels


def simulate_split(chain: ChainInstance, init, n: int, rng: np.random.Generator,
                   *, extend_to_regeneration: bool = False,
                   max_blocks: int = 10_000_000,
                   backend: str | None = None) -> SplitTrajectory:
    """Simulate the split chain for at least n states.

    init is a state value, ("point", x), "nu" or "pi". Without
    extension the trajectory has ceil(n / m) complete blocks truncated
    to exactly n states. With extend_to_regeneration=True, simulation
    continues block by block until a regeneration time sigma >= n - m
    exists and stops at the end of that block, which is exactly the
    coverage the block decomposition needs.
    """
    n = int(n)
    m = chain.m
    if n < m:
        raise ValueError(f"n < m: need n >= {m}, got {n}")
    if max_blocks < 1:
        raise ValueError("max_blocks must be positive")
    x0, label = _draw_initial(chain, init, rng)

    mod1 = chain.mod1
    if chain.is_finite:
        runner = lambda start, blocks: _simulate_blocks_finite(
            chain, start, blocks, rng, backend)
    elif mod1 is not None:
        x0 = float(x0)
        runner = None
    else:
        runner = lambda start, blocks: _simulate_blocks_generic(
            chain, start, blocks, rng)

    want_blocks = -(-n // m)
    if mod1 is not None:
        x_bits = mod1.float_to_bits(x0)
        all_bits = [np.array([x_bits], dtype=np.uint64)]
        all_levels = []
        all_eps = []
        done_blocks = 0
        chunk = max(_EXTEND_CHUNK_START, want_blocks)
        while True:
            blocks = want_blocks - done_blocks if done_blocks < want_blocks else chunk
            bits, levels, eps = _simulate_blocks_mod1(chain, x_bits, blocks,
                                                      rng, backend)
            all_bits.append(bits[1:])
            all_levels.append(levels)
            all_eps.append(eps)
            x_bits = int(bits[-1])
            done_blocks += blocks
            if done_blocks > max_blocks:
                raise GuardError(
                    f"no regeneration covering the horizon within {max_blocks} blocks")
            if done_blocks >= want_blocks:
                if not extend_to_regeneration:
                    break
                lev = np.concatenate(all_levels)
                hits = np.flatnonzero(lev == 1) * m
                if hits.size and hits.max() >= n - m:
                    break
            chunk = min(chunk * 2, _EXTEND_CHUNK_CAP)
        bits_full = np.concatenate(all_bits)
        levels_blocks = np.concatenate(all_levels)
        eps_full = np.concatenate(all_eps)
        per_state = np.repeat(levels_blocks, m)
        if extend_to_regeneration:
            hits = np.flatnonzero(levels_blocks == 1) * m
            stop = int(hits[hits >= n - m][0]) + m
        else:
            stop = n
        return SplitTrajectory(
            states=mod1.bits_to_float(bits_full[:stop]), levels=per_state[:stop],
            m=m, init_label=label, chain_name=chain.name,
            bits=bits_full[:stop], latent=eps_full[:stop])

    all_states = [np.array([x0])]
    all_levels = []
    done_blocks = 0
    chunk = max(_EXTEND_CHUNK_START, want_blocks)
    x_cur = x0
    while True:
        blocks = want_blocks - done_blocks if done_blocks < want_blocks else chunk
        states, levels = runner(x_cur, blocks)
        all_states.append(states[1:])
        all_levels.append(levels)
        x_cur = states[-1]
        done_blocks += blocks
        if done_blocks > max_blocks:
            raise GuardError(
                f"no regeneration covering the horizon within {max_blocks} blocks")
        if done_blocks >= want_blocks:
            if not extend_to_regeneration:
                break
            lev = np.concatenate(all_levels)
            hits = np.flatnonzero(lev == 1) * m
            if hits.size and hits.max() >= n - m:
                break
        chunk = min(chunk * 2, _EXTEND_CHUNK_CAP)
    states_full = np.concatenate(all_states)
    levels_blocks = np.concatenate(all_levels)
    per_state = np.repeat(levels_blocks, m)
    if extend_to_regeneration:
        hits = np.flatnonzero(levels_blocks == 1) * m
        stop = int(hits[hits >= n - m][0]) + m
    else:
        stop = n
    return SplitTrajectory(states=states_full[:stop], levels=per_state[:stop],
                           m=m, init_label=label, chain_name=chain.name)


# ---------------------------------------------------------------------------
# split measure
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SplitMeasure:
    """A law mu lifted to the split space, as per-level vectors."""

    level0: np.ndarray
    level1: np.ndarray

    def mass(self, mask, level: int) -> float:
        vec = self.level1 if level == 1 else self.level0
        return float(vec[np.asarray(mask, dtype=bool)].sum())


def split_measure(mu, spec) -> SplitMeasure:
    """Lift a law on the state space to the split space.

    Level 1 carries delta * mu restricted to the small set, level 0 the
    rest: mu(A x {1}) = delta * mu(A on C).
    """
    mu = np.asarray(mu, dtype=np.float64)
    if np.any(mu < 0) or abs(mu.sum() - 1.0) > 1e-12:
        raise ValueError("mu must be a probability vector")
    mask = np.asarray(spec.small_set, dtype=bool)
    if mask.shape != mu.shape:
        raise ValueError("mu and the small-set mask must have equal length")
    level1 = np.where(mask, spec.delta * mu, 0.0)
    level0 = mu - level1
    return SplitMeasure(level0=level0, level1=level1)


# ---------------------------------------------------------------------------
# blocks, excursions, decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Block:
    """One regeneration block of states, as a half-open index range."""

    index: int
    start: int
    stop: int
    states: np.ndarray

    def __len__(self) -> int:
        return self.stop - self.start


def regeneration_times(traj: SplitTrajectory) -> np.ndarray:
    return traj.sigma.copy()


def gap_lengths(traj: SplitTrajectory) -> np.ndarray:
    """Differences of consecutive regeneration times, iid by construction."""
    return np.diff(traj.sigma)


def extract_blocks(traj: SplitTrajectory) -> list:
    """Blocks up to the last regeneration.

    Block 0 runs from time 0 through sigma_0 + m - 1; block i >= 1 from
    sigma_{i-1} + m through sigma_i + m - 1. Together they partition
    the trajectory up to the end of the last regenerating block; any
    trailing states past it are not part of a complete block.
    """
    sigma = traj.sigma
    if sigma.size == 0:
        return []
    m = traj.m
    bounds = np.concatenate([[0], sigma + m])
    out = []
    for i in range(len(sigma)):
        start, stop = int(bounds[i]), int(bounds[i + 1])
        if stop > len(traj):
            break
        out.append(Block(index=i, start=start, stop=stop,
                         states=traj.states[start:stop]))
    return out


def excursions(traj: SplitTrajectory, f) -> np.ndarray:
    """Excursion values chi_i(f) = sum of f over block i + 1.

    chi_i sums f(state) for indices sigma_i + m .. sigma_{i+1} + m - 1,
    for every i whose range the trajectory covers. The sequence is
    stationary and 1-dependent; adjacent entries share nothing when
    m = 1.
    """
    values = _functional_values(traj, f)
    sigma = traj.sigma
    m = traj.m
    if sigma.size < 2:
        return np.empty(0, dtype=np.float64)
    ends = sigma[1:] + m
    keep = ends <= len(traj)
    starts = (sigma[:-1] + m)[keep]
    ends = ends[keep]
    cs = np.concatenate([[0.0], np.cumsum(values)])
    return cs[ends] - cs[starts]


def _functional_values(traj: SplitTrajectory, f) -> np.ndarray:
    if isinstance(f, np.ndarray):
        return f[np.asarray(traj.states, dtype=np.int64)]
    if callable(f):
        return np.asarray(f(traj.states), dtype=np.float64)
    raise ValueError("f must be a per-state value array or a callable")


def functional_values(chain: ChainInstance, traj: SplitTrajectory, fspec) -> np.ndarray:
    """Per-state f values for a named or tabulated functional."""
    func = resolve_functional(chain, fspec)
    if func.values is not None:
        return func.values[np.asarray(traj.states, dtype=np.int64)]
    return np.asarray(func.fn(np.asarray(traj.states, dtype=np.float64)))


def count_regenerations(traj: SplitTrajectory, n: int) -> int:
    """N = first index i with sigma_i >= n - m, as a count.

    Equals the number of regeneration times strictly before n - m,
    which is well defined as soon as the trajectory covers the horizon.
    If the trajectory shows no regeneration at all the count is 0 and
    traj.no_regeneration flags the run.
    """
    n = int(n)
    if n > len(traj):
        raise ValueError("horizon n exceeds the trajectory length")
    if n < traj.m:
        raise ValueError("horizon n must be at least m")
    return int(np.sum(traj.sigma < n - traj.m))


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    """Exact split of a path sum into head, middle and tail pieces.

    For m | n the path sum of f over the first n states equals
    head_signed + middle_signed - tail_signed, where the head covers
    blocks through the first regeneration (or everything when N = 0),
    the middle stacks the N excursions up to sigma_N, and the tail
    removes the overshoot past n. H, M, T are the absolute values.
    """

    n: int
    m: int
    count: int
    head_signed: float
    middle_signed: float
    tail_signed: float
    direct_sum: float

    @property
    def H(self) -> float:
        return abs(self.head_signed)

    @property
    def M(self) -> float:
        return abs(self.middle_signed)

    @property
    def T(self) -> float:
        return abs(self.tail_signed)

    def reconstruct(self) -> float:
        return self.head_signed + self.middle_signed - self.tail_signed

    def max_abs_error(self) -> float:
        return abs(self.reconstruct() - self.direct_sum)


def block_decompose(traj: SplitTrajectory, f, n: int) -> BlockDecomposition:
    """Decompose the sum of f over the first n states, m | n required."""
    n = int(n)
    m = traj.m
    if n % m != 0 or n <= 0:
        raise ValueError(f"m | n required, got n = {n} with m = {m}")
    if n > len(traj):
        raise ValueError("horizon n exceeds the trajectory length")
    values = _functional_values(traj, f)
    sigma = traj.sigma
    count = int(np.sum(sigma < n - m))
    direct = float(math.fsum(values[:n]))
    if count == 0:
        head = float(math.fsum(values[:n]))
        return BlockDecomposition(n=n, m=m, count=0, head_signed=head,
                                  middle_signed=0.0, tail_signed=0.0,
                                  direct_sum=direct)
    after = sigma[sigma >= n - m]
    if after.size == 0:
        raise ValueError(
            "trajectory does not cover the decomposition horizon; simulate with "
            "extend_to_regeneration=True")
    sigma_last = int(after[0])
    if sigma_last + m > len(traj):
        raise ValueError(
            "trajectory does not cover the final block of the decomposition")
    sigma0 = int(sigma[0])
    head = float(math.fsum(values[:sigma0 + m]))
    middle = float(math.fsum(values[sigma0 + m:sigma_last + m]))
    tail = float(math.fsum(values[n:sigma_last + m]))
    return BlockDecomposition(n=n, m=m, count=count, head_signed=head,
                              middle_signed=middle, tail_signed=tail,
                              direct_sum=direct)


# ---------------------------------------------------------------------------
# dumps
# ---------------------------------------------------------------------------


def trajectory_to_csv(traj: SplitTrajectory, path: str) -> None:
    """index,state,level,is_regeneration rows, written atomically."""
    sigma = set(int(s) for s in traj.sigma)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "state", "level", "is_regeneration"])
        for i, (x, y) in enumerate(zip(traj.states, traj.levels)):
            val = repr(float(x)) if isinstance(x, (float, np.floating)) else int(x)
            writer.writerow([i, val, int(y), int(i in sigma)])
    os.replace(tmp, path)


def trajectory_summary(traj: SplitTrajectory, f=None) -> dict:
    """JSON-ready block summary with explicit flags."""
    gaps = gap_lengths(traj)
    out = {
        "n": len(traj),
        "m": traj.m,
        "chain": traj.chain_name,
        "init": traj.init_label,
        "n_regenerations": int(len(traj.sigma)),
        "regeneration_times": [int(s) for s in traj.sigma],
        "gaps": [int(g) for g in gaps],
        "flags": (["no regeneration observed"] if traj.no_regeneration else []),
    }
    if f is not None:
        chi = excursions(traj, f)
        out["excursions"] = [float(c) for c in chi]
    return out


def write_json(payload: dict, path: str) -> None:
    """Deterministic JSON dump (sorted keys, no timestamps), atomic."""
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)
