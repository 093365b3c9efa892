"""Hot simulation loops with a compiled and a pure-numpy implementation.

No kernel draws randomness of its own. Callers pass arrays of uniforms
(or raw 64-bit words) and both implementations consume them in exactly
the same per-replica order, so switching backends changes speed only.
The numba twins loop over replicas, the numpy twins loop over steps and
vectorize across replicas.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import backend_choice

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


# Functional codes understood by the mod-1 kernels.
F_COS2PI = 0
F_IDENTITY_CENTERED = 1
F_INDICATOR_CENTERED = 2

_TWO_PI = 2.0 * math.pi


def _resolve(backend):
    name = backend if backend is not None else backend_choice()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return name


# ---------------------------------------------------------------------------
# finite-state kernels
#
# State update: with u uniform on [0, 1), the next state is the count of
# cumulative-row entries <= u, clamped to the last column. Both backends
# use the same comparison, so paths agree bitwise.
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _finite_path_nb(cum_rows, x0, uniforms, out):
    ns = cum_rows.shape[1]
    x = x0
    out[0] = x
    for i in range(uniforms.shape[0]):
        u = uniforms[i]
        j = 0
        while j < ns - 1 and u >= cum_rows[x, j]:
            j += 1
        x = j
        out[i + 1] = x


def finite_chain_path(cum_rows, x0, uniforms, backend=None):
    """One finite-chain path; returns len(uniforms) + 1 state indices."""
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    out = np.empty(uniforms.shape[0] + 1, dtype=np.int64)
    if _resolve(backend) == "numba":
        _finite_path_nb(cum_rows, np.int64(x0), uniforms, out)
        return out
    ns = cum_rows.shape[1]
    x = int(x0)
    out[0] = x
    for i in range(uniforms.shape[0]):
        u = uniforms[i]
        j = 0
        while j < ns - 1 and u >= cum_rows[x, j]:
            j += 1
        x = j
        out[i + 1] = x
    return out


@njit(cache=True, nogil=True)
def _finite_sums_nb(cum_rows, f_vals, x0, uniforms, out):
    ns = cum_rows.shape[1]
    for r in range(uniforms.shape[0]):
        x = x0[r]
        acc = f_vals[x]
        for i in range(uniforms.shape[1]):
            u = uniforms[r, i]
            j = 0
            while j < ns - 1 and u >= cum_rows[x, j]:
                j += 1
            x = j
            acc += f_vals[x]
        out[r] = acc


def _finite_sums_np(cum_rows, f_vals, x0, uniforms, out):
    nrep, ntrans = uniforms.shape
    ns = cum_rows.shape[1]
    states = x0.copy()
    acc = f_vals[states].astype(np.float64)
    for i in range(ntrans):
        u = uniforms[:, i]
        nxt = (u[:, None] >= cum_rows[states]).sum(axis=1)
        np.minimum(nxt, ns - 1, out=nxt)
        states = nxt
        acc += f_vals[states]
    out[:] = acc


def finite_chain_sums(cum_rows, f_vals, x0, uniforms, backend=None):
    """Per-replica sums of f over the visited states.

    uniforms has shape (replicas, transitions) and x0 holds one initial
    state per replica; each replica visits transitions + 1 states and
    the sum covers all of them, accumulated in visit order on both
    backends.
    """
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    x0 = np.ascontiguousarray(
        np.broadcast_to(np.asarray(x0, dtype=np.int64), (uniforms.shape[0],)))
    out = np.empty(uniforms.shape[0], dtype=np.float64)
    if _resolve(backend) == "numba":
        _finite_sums_nb(cum_rows, f_vals, x0, uniforms, out)
    else:
        _finite_sums_np(cum_rows, f_vals, x0, uniforms, out)
    return out


@njit(cache=True, nogil=True)
def _finite_split_nb(cum_rows, in_c, r_mat, m, x0, state_u, level_u, states, levels):
    ns = cum_rows.shape[1]
    x = x0
    states[0] = x
    for k in range(level_u.shape[0]):
        start = x
        for i in range(m):
            u = state_u[k * m + i]
            j = 0
            while j < ns - 1 and u >= cum_rows[x, j]:
                j += 1
            x = j
            states[k * m + i + 1] = x
        if in_c[start] and level_u[k] < r_mat[start, x]:
            levels[k] = 1
        else:
            levels[k] = 0


def finite_split_path(cum_rows, in_c, r_mat, m, x0, state_u, level_u, backend=None):
    """One split-chain path over complete m-blocks.

    state_u has length blocks * m and level_u length blocks. Returns
    (states, block_levels) where states holds blocks * m + 1 indices;
    the extra final state is the endpoint that the last level draw
    conditions on. Level k is 1 when the block start lies in the small
    set and level_u[k] < r(start, endpoint).
    """
    state_u = np.ascontiguousarray(state_u, dtype=np.float64)
    level_u = np.ascontiguousarray(level_u, dtype=np.float64)
    blocks = level_u.shape[0]
    if state_u.shape[0] != blocks * m:
        raise ValueError("state_u must hold m uniforms per block")
    states = np.empty(blocks * m + 1, dtype=np.int64)
    levels = np.empty(blocks, dtype=np.uint8)
    if _resolve(backend) == "numba":
        _finite_split_nb(
            cum_rows, in_c, r_mat, np.int64(m), np.int64(x0), state_u, level_u,
            states, levels,
        )
        return states, levels
    ns = cum_rows.shape[1]
    x = int(x0)
    states[0] = x
    for k in range(blocks):
        start = x
        for i in range(m):
            u = state_u[k * m + i]
            j = 0
            while j < ns - 1 and u >= cum_rows[x, j]:
                j += 1
            x = j
            states[k * m + i + 1] = x
        levels[k] = 1 if (in_c[start] and level_u[k] < r_mat[start, x]) else 0
    return states, levels


# ---------------------------------------------------------------------------
# mod-1 kernels
#
# The state is a B-bit fixed-point fraction held in a uint64. Each step
# masks a fresh 64-bit word down to the odd or even bit positions
# (picked by eps) and adds it with wraparound. Converting to a float for
# f uses at most 53 of the leading bits, which is exact.
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _mod1_path_nb(odd_mask, even_mask, wrap_mask, x0_bits, eps, words, out):
    x = x0_bits
    out[0] = x
    for i in range(eps.shape[0]):
        if eps[i] == 1:
            inc = words[i] & odd_mask
        else:
            inc = words[i] & even_mask
        x = (x + inc) & wrap_mask
        out[i + 1] = x


def mod1_chain_path(odd_mask, even_mask, wrap_mask, x0_bits, eps, words, backend=None):
    """One mod-1 path in fixed-point bits; returns len(eps) + 1 states."""
    eps = np.ascontiguousarray(eps, dtype=np.uint8)
    words = np.ascontiguousarray(words, dtype=np.uint64)
    out = np.empty(eps.shape[0] + 1, dtype=np.uint64)
    if _resolve(backend) == "numba":
        _mod1_path_nb(
            np.uint64(odd_mask), np.uint64(even_mask), np.uint64(wrap_mask),
            np.uint64(x0_bits), eps, words, out,
        )
        return out
    x = int(x0_bits)
    odd = int(odd_mask)
    even = int(even_mask)
    wrap = int(wrap_mask)
    out[0] = x
    for i in range(eps.shape[0]):
        inc = int(words[i]) & (odd if eps[i] == 1 else even)
        x = (x + inc) & wrap
        out[i + 1] = x
    return out


@njit(cache=True, nogil=True)
def _mod1_f_nb(bits, shift, scale, f_code):
    x = (bits >> shift) * scale
    if f_code == 0:
        return math.cos(_TWO_PI * x)
    if f_code == 1:
        return x - 0.5
    if x < 0.5:
        return 0.5
    return -0.5


@njit(cache=True, nogil=True)
def _mod1_sums_nb(odd_mask, even_mask, wrap_mask, shift, scale, f_code,
                  x0_bits, eps, words, out):
    for r in range(eps.shape[0]):
        x = x0_bits[r]
        acc = _mod1_f_nb(x, shift, scale, f_code)
        for i in range(eps.shape[1]):
            if eps[r, i] == 1:
                inc = words[r, i] & odd_mask
            else:
                inc = words[r, i] & even_mask
            x = (x + inc) & wrap_mask
            acc += _mod1_f_nb(x, shift, scale, f_code)
        out[r] = acc


def _mod1_f_np(bits, shift, scale, f_code):
    x = (bits >> shift) * scale
    if f_code == F_COS2PI:
        return np.cos(_TWO_PI * x)
    if f_code == F_IDENTITY_CENTERED:
        return x - 0.5
    return np.where(x < 0.5, 0.5, -0.5)


def _mod1_sums_np(odd_mask, even_mask, wrap_mask, shift, scale, f_code,
                  x0_bits, eps, words, out):
    nrep, nsteps = eps.shape
    odd = np.uint64(odd_mask)
    even = np.uint64(even_mask)
    wrap = np.uint64(wrap_mask)
    x = x0_bits.copy()
    acc = np.empty(nrep, dtype=np.float64)
    acc[:] = _mod1_f_np(x, shift, scale, f_code)
    for i in range(nsteps):
        sel = np.where(eps[:, i] == 1, odd, even)
        x = (x + (words[:, i] & sel)) & wrap
        acc += _mod1_f_np(x, shift, scale, f_code)
    out[:] = acc


def mod1_chain_sums(odd_mask, even_mask, wrap_mask, shift, scale, f_code,
                    x0_bits, eps, words, backend=None):
    """Per-replica sums of a coded functional over a mod-1 path.

    eps and words have shape (replicas, steps) and x0_bits one initial
    state per replica; each replica visits steps + 1 states. shift and
    scale define the exact bits-to-float conversion
    x = (bits >> shift) * scale.
    """
    eps = np.ascontiguousarray(eps, dtype=np.uint8)
    words = np.ascontiguousarray(words, dtype=np.uint64)
    x0_bits = np.ascontiguousarray(
        np.broadcast_to(np.asarray(x0_bits, dtype=np.uint64), (eps.shape[0],)))
    out = np.empty(eps.shape[0], dtype=np.float64)
    args = (
        np.uint64(odd_mask), np.uint64(even_mask), np.uint64(wrap_mask),
        np.uint64(shift), np.float64(scale), np.int64(f_code),
        x0_bits, eps, words, out,
    )
    if _resolve(backend) == "numba":
        _mod1_sums_nb(*args)
    else:
        _mod1_sums_np(*args)
    return out


def mod1_bits_to_float(bits, precision):
    """Exact conversion of fixed-point states to floats in [0, 1)."""
    shift, scale = mod1_float_params(precision)
    return (np.asarray(bits, dtype=np.uint64) >> np.uint64(shift)) * scale


def mod1_float_params(precision):
    """(shift, scale) so that (bits >> shift) * scale is float-exact."""
    shift = max(0, int(precision) - 53)
    scale = 2.0 ** -(int(precision) - shift)
    return shift, scale


def warm_up(backend=None):
    """Trigger compilation of every kernel on tiny inputs."""
    name = _resolve(backend)
    cum = np.array([[0.5, 1.0], [0.5, 1.0]])
    f_vals = np.array([0.5, -0.5])
    in_c = np.array([True, False])
    r_mat = np.full((2, 2), 1.0)
    u1 = np.array([0.3, 0.7])
    u2 = np.array([[0.3, 0.7], [0.6, 0.1]])
    finite_chain_path(cum, 0, u1, backend=name)
    finite_chain_sums(cum, f_vals, 0, u2, backend=name)
    finite_split_path(cum, in_c, r_mat, 1, 0, u1, u1, backend=name)
    eps1 = np.array([0, 1], dtype=np.uint8)
    w1 = np.array([123456789, 987654321], dtype=np.uint64)
    odd, even, wrap = 0xAAAAAAAAAAAAAAAA, 0x5555555555555555, 0xFFFFFFFFFFFFFFFF
    shift, scale = mod1_float_params(64)
    mod1_chain_path(odd, even, wrap, 0, eps1, w1, backend=name)
    mod1_chain_sums(odd, even, wrap, shift, scale, F_COS2PI, 0,
                    eps1[None, :], w1[None, :], backend=name)
    return name
