"""Nerve chains of the tree posets and the Barycentric Fox-Neuwirth bicomplex.

Chains of a fixed column ``n`` and degree ``d`` are stored as ``int32`` arrays
of shape ``(count, d + 1)`` holding canonical tree indices.  Rows are sorted
lexicographically, which is the canonical generator order; every matrix below
uses it for rows and columns.

Matrices are ``scipy.sparse.csr_matrix`` with small signed integer entries.
``H[(d, n)]`` maps degree ``d`` to ``d - 1`` inside column ``n`` and
``V[(d, n)]`` maps column ``n`` to ``n + 1`` in degree ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .exact_linalg import rref_kernel
from .fn_core import (
    DEFAULT_ENUMERATION_CAP,
    CapExceeded,
    FnTree,
    TreeError,
    codegeneracy,
    coface,
    enumerate_trees,
    tree_count,
    tree_lt,
)

DEFAULT_CHAIN_CAP = 20_000_000
MATRIX_DTYPE = np.int64


class InvariantViolation(AssertionError):
    """A structural identity that must hold exactly did not."""


# ------------------------------------------------------------- tree indexing


def _perm_rank(sigma) -> int:
    n = len(sigma)
    rank = 0
    remaining = list(range(1, n + 1))
    for k, s in enumerate(sigma):
        pos = remaining.index(s)
        rank += pos * math.factorial(n - 1 - k)
        remaining.pop(pos)
    return rank


def tree_index(tree: FnTree) -> int:
    """Position of ``tree`` in the canonical enumeration order."""
    word = 0
    for a in tree.depths:
        word = word * tree.m + a
    return _perm_rank(tree.sigma) * tree.m ** max(tree.n - 1, 0) + word


@dataclass(frozen=True)
class TreePoset:
    """All trees of one column with the strict order as a dense boolean matrix."""

    m: int
    n: int
    trees: tuple[FnTree, ...]
    less: np.ndarray  # less[a, b] iff trees[a] < trees[b]
    dims: np.ndarray

    @property
    def size(self) -> int:
        return len(self.trees)

    def successors(self, a: int) -> np.ndarray:
        return np.flatnonzero(self.less[a])


_BLOCK = 256


@lru_cache(maxsize=None)
def tree_poset(m: int, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> TreePoset:
    trees = tuple(enumerate_trees(m, n, cap))
    size = len(trees)
    if n < 2:
        less = np.zeros((size, size), dtype=bool)
    else:
        sig = np.array([t.pair_signature for t in trees], dtype=np.int8)
        order, depth = sig[:, :, 0], sig[:, :, 1]
        less = np.empty((size, size), dtype=bool)
        for lo in range(0, size, _BLOCK):
            hi = min(lo + _BLOCK, size)
            d_lo, o_lo = depth[lo:hi, None, :], order[lo:hi, None, :]
            deeper = depth[None, :, :] > d_lo
            kept = (depth[None, :, :] == d_lo) & (order[None, :, :] == o_lo)
            less[lo:hi] = np.all(deeper | kept, axis=2)
        np.fill_diagonal(less, False)
    dims = np.array([t.dim for t in trees], dtype=np.int64)
    return TreePoset(m, n, trees, less, dims)


def max_degree(m: int, n: int) -> int:
    return (m - 1) * max(n - 1, 0)


# -------------------------------------------------------------------- chains


@dataclass(frozen=True)
class TreeChain:
    trees: tuple[FnTree, ...]

    def __post_init__(self):
        if not self.trees:
            raise TreeError("a chain needs at least one tree")
        first = self.trees[0]
        for t in self.trees[1:]:
            if (t.n, t.m) != (first.n, first.m):
                raise TreeError("all trees of a chain must share (n, m)")
        for a, b in zip(self.trees, self.trees[1:]):
            if not tree_lt(a, b):
                raise TreeError(f"chain is not strictly ascending at {a} < {b}")

    @property
    def degree(self) -> int:
        return len(self.trees) - 1

    def __str__(self) -> str:
        return " < ".join(f"({t})" for t in self.trees)


@lru_cache(maxsize=None)
def chain_table(m: int, n: int, cap: int = DEFAULT_CHAIN_CAP) -> tuple[np.ndarray, ...]:
    """Chain arrays for every degree ``0..max_degree(m, n)`` of column ``n``."""
    poset = tree_poset(m, n)
    succ = [poset.successors(a).astype(np.int32) for a in range(poset.size)]
    out_deg = np.array([len(s) for s in succ], dtype=np.int64)
    flat = np.concatenate(succ) if succ else np.zeros(0, dtype=np.int32)
    offsets = np.concatenate([[0], np.cumsum(out_deg)])
    current = np.arange(poset.size, dtype=np.int32)[:, None]
    table = [current]
    total = poset.size
    for _ in range(max_degree(m, n)):
        last = current[:, -1]
        reps = out_deg[last]
        count = int(reps.sum())
        if count == 0:
            break
        total += count
        if total > cap:
            raise CapExceeded(f"column n={n} of m={m} exceeds the chain cap {cap}")
        rows = np.repeat(np.arange(len(current)), reps)
        # position of each new element inside its parent's successor block
        starts = np.repeat(offsets[last], reps)
        within = np.arange(count) - np.repeat(np.cumsum(reps) - reps, reps)
        nxt = flat[starts + within]
        current = np.concatenate([current[rows], nxt[:, None]], axis=1)
        table.append(current)
    return tuple(table)


def chains_array(m: int, n: int, d: int, cap: int = DEFAULT_CHAIN_CAP) -> np.ndarray:
    table = chain_table(m, n, cap)
    if d < 0 or d >= len(table):
        return np.zeros((0, d + 1 if d >= 0 else 0), dtype=np.int32)
    return table[d]


def chain_count(m: int, n: int, d: int, cap: int = DEFAULT_CHAIN_CAP) -> int:
    return len(chains_array(m, n, d, cap))


def enumerate_chains(m: int, n: int, d: int, cap: int = DEFAULT_CHAIN_CAP) -> list[TreeChain]:
    rows = chains_array(m, n, d, cap)
    trees = tree_poset(m, n).trees
    return [TreeChain(tuple(trees[i] for i in row)) for row in rows]


def locate_rows(table: np.ndarray, queries: np.ndarray, radix: int) -> np.ndarray:
    """Indices of ``queries`` rows inside the lexicographically sorted ``table``.

    Every query row must occur in the table.
    """
    if len(queries) == 0:
        return np.zeros(0, dtype=np.int64)
    width = table.shape[1]
    if radix ** width < 2**62:
        weights = radix ** np.arange(width - 1, -1, -1, dtype=np.int64)
        keys = table.astype(np.int64) @ weights
        qkeys = queries.astype(np.int64) @ weights
        idx = np.searchsorted(keys, qkeys)
        ok = (idx < len(keys)) & (keys[np.minimum(idx, len(keys) - 1)] == qkeys)
    else:
        both = np.concatenate([table, queries])
        uniq, inverse = np.unique(both, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        ok = np.full(len(queries), len(uniq) == len(table))
        idx = inverse[len(table):]
    if not np.all(ok):
        raise InvariantViolation("a boundary or coface image is not a known chain")
    return idx


def _coo(rows, cols, vals, shape) -> sp.csr_matrix:
    mat = sp.coo_matrix(
        (np.asarray(vals, dtype=MATRIX_DTYPE), (np.asarray(rows), np.asarray(cols))), shape=shape
    ).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def nerve_boundary(m: int, n: int, d: int, cap: int = DEFAULT_CHAIN_CAP) -> sp.csr_matrix:
    """Alternating deletion boundary from degree ``d`` to ``d - 1`` of column ``n``."""
    source = chains_array(m, n, d, cap)
    target = chains_array(m, n, d - 1, cap)
    shape = (len(target), len(source))
    if d < 1 or len(source) == 0:
        return sp.csr_matrix(shape, dtype=MATRIX_DTYPE)
    radix = tree_count(m, n)
    rows, cols, vals = [], [], []
    cols_all = np.arange(len(source))
    for i in range(d + 1):
        face = np.delete(source, i, axis=1)
        rows.append(locate_rows(target, face, radix))
        cols.append(cols_all)
        vals.append(np.full(len(source), -1 if i % 2 else 1))
    return _coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), shape)


@lru_cache(maxsize=None)
def coface_table(m: int, n: int, i: int) -> np.ndarray:
    """Canonical index in column ``n + 1`` of ``d_i`` applied to each tree of column ``n``."""
    trees = tree_poset(m, n).trees
    return np.array([tree_index(coface(i, t)) for t in trees], dtype=np.int32)


@lru_cache(maxsize=None)
def codegeneracy_table(m: int, n: int, j: int) -> np.ndarray:
    trees = tree_poset(m, n).trees
    return np.array([tree_index(codegeneracy(j, t)) for t in trees], dtype=np.int32)


def _strictly_ascending(rows: np.ndarray, poset_less: np.ndarray) -> np.ndarray:
    ok = np.ones(len(rows), dtype=bool)
    for k in range(rows.shape[1] - 1):
        ok &= poset_less[rows[:, k], rows[:, k + 1]]
    return ok


def coface_differential(
    m: int, n: int, d: int, cap: int = DEFAULT_CHAIN_CAP, strict: bool = True
) -> sp.csr_matrix:
    """Alternating sum of elementwise cofaces, column ``n`` to ``n + 1`` in degree ``d``.

    An image that is not a strictly ascending chain raises
    :class:`InvariantViolation` when ``strict``; otherwise it contributes zero.
    Such images do occur: for ``m >= 3`` the extremal cofaces ``d_0`` and
    ``d_{n+1}`` do not preserve the order (see :func:`coface_order_violations`).
    """
    return _coface_differential(m, n, d, cap, strict)[0]


def _coface_differential(m, n, d, cap, strict):
    source = chains_array(m, n, d, cap)
    target = chains_array(m, n + 1, d, cap)
    shape = (len(target), len(source))
    if len(source) == 0:
        return sp.csr_matrix(shape, dtype=MATRIX_DTYPE), 0
    less = tree_poset(m, n + 1).less
    radix = tree_count(m, n + 1)
    rows, cols, vals = [], [], []
    dropped = 0
    for i in range(n + 2):
        image = coface_table(m, n, i)[source]
        ok = _strictly_ascending(image, less)
        bad = len(ok) - int(ok.sum())
        if bad and strict:
            raise InvariantViolation(
                f"coface d_{i} sends {bad} chains of bidegree (d={d}, n={n}) to non-chains (m={m})"
            )
        dropped += bad
        rows.append(locate_rows(target, image[ok], radix))
        cols.append(np.flatnonzero(ok))
        vals.append(np.full(len(rows[-1]), -1 if i % 2 else 1))
    mat = _coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), shape)
    return mat, dropped


def coface_order_violations(m: int, n: int) -> list[tuple[int, FnTree, FnTree]]:
    """All ``(i, a, b)`` with ``a < b`` in column ``n`` but ``d_i a <= d_i b`` false."""
    poset = tree_poset(m, n)
    target = tree_poset(m, n + 1)
    out = []
    pairs = np.argwhere(poset.less)
    for i in range(n + 2):
        img = coface_table(m, n, i)
        ia, ib = img[pairs[:, 0]], img[pairs[:, 1]]
        bad = ~(target.less[ia, ib] | (ia == ib))
        for a, b in pairs[bad]:
            out.append((i, poset.trees[a], poset.trees[b]))
    return out


def codegeneracy_matrix(m: int, n: int, d: int, j: int, cap: int = DEFAULT_CHAIN_CAP) -> sp.csr_matrix:
    """Elementwise ``s_j`` from column ``n`` to ``n - 1``; degenerate images go to zero."""
    if n < 1 or not 0 <= j <= n - 1:
        raise TreeError(f"codegeneracy s_{j} undefined on column n={n}")
    source = chains_array(m, n, d, cap)
    target = chains_array(m, n - 1, d, cap)
    shape = (len(target), len(source))
    if len(source) == 0:
        return sp.csr_matrix(shape, dtype=MATRIX_DTYPE)
    image = codegeneracy_table(m, n, j)[source]
    keep = _strictly_ascending(image, tree_poset(m, n - 1).less)
    cols = np.flatnonzero(keep)
    rows = locate_rows(target, image[keep], max(tree_count(m, n - 1), 1))
    return _coo(rows, cols, np.ones(len(cols)), shape)


# ------------------------------------------------------------------ bicomplex


@dataclass
class Bicomplex:
    """Bounded bicomplex on columns ``0..n_max``.

    ``counts[(d, n)]`` is the rank of the free module at bidegree ``(d, n)``.
    ``basis[n][d]`` is set for conormalized bicomplexes: its columns express the
    new generators in the plain chain basis.
    """

    m: int
    n_max: int
    counts: dict[tuple[int, int], int]
    H: dict[tuple[int, int], sp.csr_matrix]
    V: dict[tuple[int, int], sp.csr_matrix]
    truncated: bool = True
    conormalized: bool = False
    basis: dict[tuple[int, int], sp.csr_matrix] = field(default_factory=dict)
    dropped: dict[tuple[int, int], int] = field(default_factory=dict)

    def degrees(self, n: int) -> range:
        return range(0, max_degree(self.m, n) + 1) if n >= 1 else range(0, 1)

    def bidegrees(self) -> list[tuple[int, int]]:
        return sorted(self.counts, key=lambda dn: (dn[1], dn[0]))

    def rank(self, d: int, n: int) -> int:
        return self.counts.get((d, n), 0)

    def h(self, d: int, n: int) -> sp.csr_matrix:
        if (d, n) in self.H:
            return self.H[(d, n)]
        return sp.csr_matrix((self.rank(d - 1, n), self.rank(d, n)), dtype=MATRIX_DTYPE)

    def v(self, d: int, n: int) -> sp.csr_matrix:
        if (d, n) in self.V:
            return self.V[(d, n)]
        return sp.csr_matrix((self.rank(d, n + 1), self.rank(d, n)), dtype=MATRIX_DTYPE)

    def generators(self, d: int, n: int) -> list[TreeChain]:
        if self.conormalized:
            raise TypeError("conormalized generators are combinations; see .basis")
        return enumerate_chains(self.m, n, d)

    def check_identities(self) -> dict[str, bool]:
        return check_bicomplex(self)

    def manifest(self) -> dict:
        return {
            "m": self.m,
            "n_max": self.n_max,
            "truncated": self.truncated,
            "conormalized": self.conormalized,
            "dropped_coface_images": sum(self.dropped.values()),
            "counts": [{"d": d, "n": n, "rank": r} for (d, n), r in sorted(self.counts.items(), key=lambda x: (x[0][1], x[0][0]))],
        }


def build_bicomplex(
    m: int, n_max: int, cap: int = DEFAULT_CHAIN_CAP, strict: bool = True
) -> Bicomplex:
    """Columns ``0..n_max``; column ``n_max`` receives ``V`` but emits none.

    With ``strict=False`` coface images that are not chains are dropped and
    counted in ``dropped``; the result is then generally not a bicomplex.
    """
    if m < 2 or n_max < 0:
        raise TreeError(f"invalid (m, n_max) = ({m}, {n_max})")
    total = sum(tree_count(m, n) for n in range(n_max + 1))
    if total > cap:
        raise CapExceeded(f"{total} trees exceed the cap {cap}")
    counts, H, V, dropped = {}, {}, {}, {}
    for n in range(n_max + 1):
        for d in range(0, (max_degree(m, n) if n else 0) + 1):
            counts[(d, n)] = chain_count(m, n, d, cap)
    for (d, n) in list(counts):
        if d >= 1:
            H[(d, n)] = nerve_boundary(m, n, d, cap)
        if n < n_max:
            V[(d, n)], lost = _coface_differential(m, n, d, cap, strict)
            if lost:
                dropped[(d, n)] = lost
    return Bicomplex(m, n_max, counts, H, V, truncated=True, dropped=dropped)


def _is_zero(mat) -> bool:
    mat = sp.csr_matrix(mat)
    mat.eliminate_zeros()
    return mat.nnz == 0


def check_bicomplex(b: Bicomplex) -> dict[str, bool]:
    """Exact checks of ``H^2 = 0``, ``V^2 = 0``, ``HV = VH`` and ``D^2 = 0``."""
    hh = vv = hv = True
    for (d, n) in b.counts:
        if d >= 2:
            hh &= _is_zero(b.h(d - 1, n) @ b.h(d, n))
        if n + 2 <= b.n_max:
            vv &= _is_zero(b.v(d, n + 1) @ b.v(d, n))
        if d >= 1 and n + 1 <= b.n_max:
            hv &= _is_zero(b.h(d, n + 1) @ b.v(d, n) - b.v(d - 1, n) @ b.h(d, n))
    total = hh and vv and hv
    if total:
        # D = H + (-1)^d V; the (d, n) -> (d - 1, n + 1) block of D^2 is
        # H V (-1)^d + (-1)^(d-1) V H = (-1)^d (HV - VH)
        from .spectral import total_complex

        tc = total_complex(b)
        for k in tc.degrees:
            if k - 1 in tc.degrees and k - 2 in tc.degrees:
                total &= _is_zero(tc.differential(k - 1) @ tc.differential(k))
    return {"HH": bool(hh), "VV": bool(vv), "HV": bool(hv), "DD": bool(total)}


# ------------------------------------------------------------ conormalization


def conormalize(b: Bicomplex) -> Bicomplex:
    """Restrict every column to the intersection of the codegeneracy kernels.

    Column ``n`` has codegeneracies ``s_0..s_{n-1}`` into column ``n - 1``
    (including ``s_0`` from the single one-leaf tree to the empty tree).  The
    kernel basis is in reduced echelon form: on its free rows it is the
    identity, so the induced map of a differential ``M`` is ``(M K)[free]``.
    """
    counts, H, V, basis, free_rows = {}, {}, {}, {}, {}
    for (d, n), rank in b.counts.items():
        if n == 0:
            K = sp.identity(rank, dtype=MATRIX_DTYPE, format="csr")
            free = np.arange(rank)
        else:
            stack = sp.vstack([codegeneracy_matrix(b.m, n, d, j) for j in range(n)]).tocsr()
            dense, free = rref_kernel(stack)
            if not np.array_equal(dense[free], np.eye(len(free), dtype=dense.dtype)):
                raise InvariantViolation(f"normalized basis at {(d, n)} is not integral")
            K = sp.csr_matrix(dense.astype(MATRIX_DTYPE))
        basis[(d, n)] = K
        free_rows[(d, n)] = free
        counts[(d, n)] = K.shape[1]

    def induced(M, src, dst):
        image = (M @ basis[src]).tocsr()
        out = image[free_rows[dst]]
        # the image must lie in the target kernel: K_dst @ out == image
        if not _is_zero(basis[dst] @ out - image):
            raise InvariantViolation(f"differential leaves the normalized subcomplex at {src}")
        out = sp.csr_matrix(out, dtype=MATRIX_DTYPE)
        out.eliminate_zeros()
        return out

    for (d, n) in b.counts:
        if (d, n) in b.H:
            H[(d, n)] = induced(b.H[(d, n)], (d, n), (d - 1, n))
        if (d, n) in b.V:
            V[(d, n)] = induced(b.V[(d, n)], (d, n), (d, n + 1))
    return Bicomplex(
        b.m, b.n_max, counts, H, V, truncated=b.truncated, conormalized=True, basis=basis, dropped=dict(b.dropped)
    )


def column_euler_characteristic(m: int, n: int) -> int:
    return sum((-1) ** d * chain_count(m, n, d) for d in range(max_degree(m, n) + 1))


def poincare_polynomial(m: int, n: int) -> list[int]:
    """Coefficients of ``prod_{k=1}^{n-1} (1 + k t^{m-1})`` indexed by degree."""
    coeffs = [1]
    for k in range(1, n):
        shifted = [0] * (m - 1) + [k * c for c in coeffs]
        coeffs = [a + b for a, b in zip(coeffs + [0] * (m - 1), shifted)]
    return coeffs
