"""Fox-Neuwirth trees and their cosimplicial action.

A tree of height ``m`` on ``n`` leaves is a permutation ``sigma`` (position ->
label, both 1-based) together with the depth indices ``a_1..a_{n-1}`` between
consecutive positions.  Monotone maps ``[n] -> [l]`` are 0-based, so
``values[k]`` is the image of ``k``.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

DEFAULT_ENUMERATION_CAP = 2_000_000


class TreeError(ValueError):
    """Invalid tree data or out-of-range tree operation."""


class CapExceeded(RuntimeError):
    """An enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class FnTree:
    m: int
    sigma: tuple[int, ...]
    depths: tuple[int, ...]

    def __post_init__(self):
        n = len(self.sigma)
        if self.m < 2:
            raise TreeError(f"height m={self.m} must be >= 2")
        if sorted(self.sigma) != list(range(1, n + 1)):
            raise TreeError(f"sigma={list(self.sigma)} is not a permutation of 1..{n}")
        if len(self.depths) != max(n - 1, 0):
            raise TreeError(f"expected {max(n - 1, 0)} depths, got {len(self.depths)}")
        for a in self.depths:
            if not 0 <= a <= self.m - 1:
                raise TreeError(f"depth {a} outside [0, {self.m - 1}]")

    @property
    def n(self) -> int:
        return len(self.sigma)

    @cached_property
    def positions(self) -> tuple[int, ...]:
        """``positions[label - 1]`` is the 1-based position of ``label``."""
        inv = [0] * self.n
        for pos, label in enumerate(self.sigma, start=1):
            inv[label - 1] = pos
        return tuple(inv)

    def position(self, label: int) -> int:
        return self.positions[label - 1]

    def label_at(self, pos: int) -> int:
        return self.sigma[pos - 1]

    def depth_at(self, pos: int) -> int:
        """Depth index ``a_pos`` between positions ``pos`` and ``pos + 1``."""
        return self.depths[pos - 1]

    @property
    def dim(self) -> int:
        """Dimension of the Blagojevic-Ziegler cell, the sum of the depths."""
        return sum(self.depths)

    @cached_property
    def pair_signature(self) -> tuple[tuple[int, int], ...]:
        """``(order, depth)`` for every label pair ``(i, j)``, ``i < j``, in lex order."""
        out = []
        for i in range(1, self.n + 1):
            for j in range(i + 1, self.n + 1):
                out.append(pair_depth(self, i, j))
        return tuple(out)

    def sort_key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.sigma, self.depths)

    def __str__(self) -> str:
        return format_tree(self)

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "sigma": list(self.sigma), "depths": list(self.depths)}


def tree_new(n: int, m: int, sigma: Sequence[int], depths: Sequence[int]) -> FnTree:
    if n < 0:
        raise TreeError(f"leaf count n={n} must be >= 0")
    if len(sigma) != n:
        raise TreeError(f"sigma has length {len(sigma)}, expected n={n}")
    return FnTree(m, tuple(int(s) for s in sigma), tuple(int(a) for a in depths))


def empty_tree(m: int) -> FnTree:
    """The unique tree on zero leaves (the point ``Conf_0``)."""
    return FnTree(m, (), ())


def trivial_tree(n: int, m: int) -> FnTree:
    return FnTree(m, tuple(range(1, n + 1)), (m - 1,) * max(n - 1, 0))


# ---------------------------------------------------------------- text / json


def format_tree(tree: FnTree) -> str:
    """Canonical text form, e.g. ``3<2 1<1 2<0 5<1 4``."""
    if tree.n == 0:
        return ""
    parts = [str(tree.sigma[0])]
    for a, label in zip(tree.depths, tree.sigma[1:]):
        parts.append(f"<{a} {label}")
    return "".join(parts)


def parse_tree(text: str, m: int) -> FnTree:
    text = text.strip()
    if not text:
        return empty_tree(m)
    chunks = text.split("<")
    try:
        sigma = [int(chunks[0])]
        depths = []
        for chunk in chunks[1:]:
            a, label = chunk.split()
            depths.append(int(a))
            sigma.append(int(label))
    except ValueError as exc:
        raise TreeError(f"cannot parse tree text {text!r}") from exc
    if format_tree(FnTree(m, tuple(sigma), tuple(depths))) != text:
        raise TreeError(f"tree text {text!r} is not in canonical form")
    return FnTree(m, tuple(sigma), tuple(depths))


def tree_to_json(tree: FnTree) -> str:
    return json.dumps(tree.to_dict(), separators=(",", ":"))


def tree_from_json(data: str | dict) -> FnTree:
    if isinstance(data, str):
        data = json.loads(data)
    return tree_new(data["n"], data["m"], data["sigma"], data["depths"])


# ------------------------------------------------------------- order & depth


def pair_depth(tree: FnTree, alpha: int, beta: int) -> tuple[int, int]:
    """Return ``(order, depth)`` for the labels ``alpha != beta``.

    ``order`` is +1 when ``alpha`` precedes ``beta``; ``depth`` is the min-rule
    depth, i.e. the smallest consecutive depth between their positions.
    """
    n = tree.n
    if not (1 <= alpha <= n and 1 <= beta <= n) or alpha == beta:
        raise TreeError(f"invalid label pair ({alpha}, {beta}) for n={n}")
    p, q = tree.position(alpha), tree.position(beta)
    order = 1 if p < q else -1
    lo, hi = min(p, q), max(p, q)
    return order, min(tree.depths[lo - 1 : hi - 1])


def sgn(tree: FnTree, i: int, j: int) -> int:
    return pair_depth(tree, i, j)[0]


def _check_same_shape(a: FnTree, b: FnTree) -> None:
    if a.n != b.n or a.m != b.m:
        raise TreeError(f"trees live in different posets: (n={a.n}, m={a.m}) vs (n={b.n}, m={b.m})")


def tree_leq(gamma: FnTree, other: FnTree) -> bool:
    """Poset order in which relations may only persist or deepen.

    ``gamma <= other`` iff every ``alpha <_r beta`` in ``gamma`` becomes either
    ``alpha <_r beta`` or a relation of depth ``s > r`` (either order) in ``other``.
    The trivial tree is the maximum; all-zero-depth trees are minimal.
    """
    _check_same_shape(gamma, other)
    for (o1, r1), (o2, r2) in zip(gamma.pair_signature, other.pair_signature):
        if r2 > r1:
            continue
        if r2 == r1 and o2 == o1:
            continue
        return False
    return True


def tree_lt(gamma: FnTree, other: FnTree) -> bool:
    return gamma != other and tree_leq(gamma, other)


# ---------------------------------------------------------- cosimplicial maps


def coface(i: int, tree: FnTree) -> FnTree:
    """The coface ``d_i : FN_m(n) -> FN_m(n+1)`` for ``0 <= i <= n+1``."""
    n, m = tree.n, tree.m
    if not 0 <= i <= n + 1:
        raise TreeError(f"coface index {i} outside [0, {n + 1}]")
    if n == 0:
        return FnTree(m, (1,), ())
    sigma, depths = tree.sigma, tree.depths
    if i == 0:
        return FnTree(m, (1,) + tuple(s + 1 for s in sigma), (m - 1,) + depths)
    if i == n + 1:
        return FnTree(m, sigma + (n + 1,), depths + (m - 1,))
    alpha = tree.position(i)
    shifted = tuple(s if s <= i else s + 1 for s in sigma)
    new_sigma = shifted[:alpha] + (i + 1,) + shifted[alpha:]
    new_depths = depths[: alpha - 1] + (m - 1,) + depths[alpha - 1 :]
    return FnTree(m, new_sigma, new_depths)


def codegeneracy(j: int, tree: FnTree) -> FnTree:
    """The codegeneracy ``s_j : FN_m(n) -> FN_m(n-1)``, deleting label ``j+1``."""
    n, m = tree.n, tree.m
    if n < 1:
        raise TreeError("codegeneracy needs at least one leaf")
    if not 0 <= j <= n - 1:
        raise TreeError(f"codegeneracy index {j} outside [0, {n - 1}]")
    beta = tree.position(j + 1)
    sigma = tuple(s if s < j + 1 else s - 1 for s in tree.sigma if s != j + 1)
    a = tree.depths
    if beta == 1:
        depths = a[1:]
    elif beta == n:
        depths = a[:-1]
    else:
        depths = a[: beta - 2] + (min(a[beta - 2], a[beta - 1]),) + a[beta:]
    return FnTree(m, sigma, depths)


# ------------------------------------------------------------- monotone maps


@dataclass(frozen=True)
class MonotoneMap:
    """A strictly increasing map ``[n] -> [codomain]`` given by its values."""

    values: tuple[int, ...]
    codomain: int

    def __post_init__(self):
        v = self.values
        if not v:
            raise TreeError("a monotone map needs at least the value at 0")
        if v[0] < 0 or v[-1] > self.codomain:
            raise TreeError(f"values {list(v)} do not fit in [0, {self.codomain}]")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise TreeError(f"values {list(v)} are not strictly increasing")

    @classmethod
    def of(cls, values: Iterable[int], codomain: int) -> "MonotoneMap":
        return cls(tuple(int(x) for x in values), codomain)

    @classmethod
    def identity(cls, n: int) -> "MonotoneMap":
        return cls(tuple(range(n + 1)), n)

    @classmethod
    def coface_map(cls, i: int, n: int) -> "MonotoneMap":
        """The generator ``d_i : [n] -> [n+1]`` skipping the value ``i``."""
        if not 0 <= i <= n + 1:
            raise TreeError(f"coface index {i} outside [0, {n + 1}]")
        return cls(tuple(delta_coface(i, x) for x in range(n + 1)), n + 1)

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def __call__(self, x: int) -> int:
        return self.values[x]

    def image(self) -> frozenset[int]:
        return frozenset(self.values)

    def compose(self, inner: "MonotoneMap") -> "MonotoneMap":
        """``self o inner``."""
        if inner.codomain != self.n:
            raise TreeError(f"cannot compose [{self.n}]->.. after ..->[{inner.codomain}]")
        return MonotoneMap(tuple(self.values[x] for x in inner.values), self.codomain)

    def jumped(self) -> list[int]:
        im = self.image()
        return [k for k in range(self.codomain + 1) if k not in im]

    def coface_factors(self) -> list[int]:
        """Coface indices in application order (first applied first).

        ``psi(0)`` copies of ``d_0`` followed by ``d_k`` for every jumped value
        ``k > psi(0)`` in increasing order.
        """
        return [0] * self.values[0] + [k for k in self.jumped() if k > self.values[0]]

    def __str__(self) -> str:
        return "".join(map(str, self.values)) if self.codomain < 10 else ",".join(map(str, self.values))


def delta_coface(u: int, x: int) -> int:
    return x if x < u else x + 1


def delta_codegeneracy(u: int, x: int) -> int:
    return x if x <= u else x - 1


def apply_monotone(psi: MonotoneMap, tree: FnTree) -> FnTree:
    if tree.n != psi.n:
        raise TreeError(f"map domain [{psi.n}] does not match tree with {tree.n} leaves")
    for i in psi.coface_factors():
        tree = coface(i, tree)
    return tree


def twisted(psi: MonotoneMap, lam: FnTree) -> MonotoneMap:
    """The position-level map ``psi^Lambda``."""
    image = apply_monotone(psi, lam)
    values = [psi.values[0]]
    for s in range(1, lam.n + 1):
        values.append(image.position(psi(lam.label_at(s))))
    return MonotoneMap(tuple(values), psi.codomain)


# ------------------------------------------------------------ extremal hairs


def extremal(tree: FnTree) -> tuple[int, int, frozenset[int]]:
    """Return ``(a, b, E)`` describing the extremal hair blocks.

    ``a = 0`` and ``b = n`` when the corresponding block is empty.
    """
    n, top = tree.n, tree.m - 1
    a = 0
    for cand in range(1, n):
        if all(tree.sigma[k - 1] == k for k in range(1, cand + 2)) and all(
            tree.depths[k - 1] == top for k in range(1, cand + 1)
        ):
            a = cand
        else:
            break
    b = n
    for cand in range(n - 1, 0, -1):
        if all(tree.sigma[k - 1] == k for k in range(cand, n + 1)) and all(
            tree.depths[k - 1] == top for k in range(cand, n)
        ):
            b = cand
        else:
            break
    block = frozenset(range(1, a + 1)) | frozenset(range(b, n))
    return a, b, block


def hair_blocks(tree: FnTree) -> tuple[int, int, frozenset[int]]:
    """Positional extremal blocks: fixed labels joined by depth ``m - 1`` edges.

    Unlike :func:`extremal` this does not ask the label right after the left
    block (or at the start of the right block) to be fixed.  It is the set
    where a cell of a stratum can carry infinite weights; it contains the
    blocks of :func:`extremal`.
    """
    n, top = tree.n, tree.m - 1
    a = 0
    while a < n - 1 and tree.sigma[a] == a + 1 and tree.depths[a] == top:
        a += 1
    b = n
    while b > 1 and tree.sigma[b - 1] == b and tree.depths[b - 2] == top:
        b -= 1
    return a, b, frozenset(range(1, a + 1)) | frozenset(range(b, n))


# --------------------------------------------------------- pair predicates


class PairClass(enum.Enum):
    LEFT_EXTREME = "left_extreme"
    RIGHT_EXTREME = "right_extreme"
    COLLAPSED = "collapsed"
    NONE = "none"

    @property
    def degenerate(self) -> bool:
        return self is not PairClass.NONE


def classify_pair(phi: MonotoneMap, i: int, j: int) -> PairClass:
    if not 1 <= i < j <= phi.codomain:
        raise TreeError(f"need 1 <= i < j <= {phi.codomain}, got ({i}, {j})")
    if i <= phi.values[0]:
        return PairClass.LEFT_EXTREME
    if j > phi.values[-1]:
        return PairClass.RIGHT_EXTREME
    im = phi.image()
    if all(k not in im for k in range(i, j)):
        return PairClass.COLLAPSED
    return PairClass.NONE


def is_exceptional(u: int, i: int, j: int, ell: int) -> bool:
    if not 0 <= u <= ell + 1:
        raise TreeError(f"u={u} outside [0, {ell + 1}]")
    if not 1 <= i < j <= ell + 1:
        raise TreeError(f"need 1 <= i < j <= {ell + 1}, got ({i}, {j})")
    if u == 0:
        return i == 1
    if u == ell + 1:
        return j == ell + 1
    return (i, j) == (u, u + 1)


# --------------------------------------------------------------- enumeration


def tree_count(m: int, n: int) -> int:
    return math.factorial(n) * m ** max(n - 1, 0)


def enumerate_trees(m: int, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> list[FnTree]:
    """All trees of ``FN_m(n)`` in lexicographic order on ``(sigma, depths)``."""
    if m < 2 or n < 0:
        raise TreeError(f"invalid (m, n) = ({m}, {n})")
    total = tree_count(m, n)
    if total > cap:
        raise CapExceeded(f"FN_{m}({n}) has {total} trees, cap is {cap}")
    if n == 0:
        return [empty_tree(m)]
    depth_words = list(itertools.product(range(m), repeat=n - 1))
    return [
        FnTree(m, sigma, depths)
        for sigma in itertools.permutations(range(1, n + 1))
        for depths in depth_words
    ]


# ------------------------------------------------------ cosimplicial identities


IDENTITY_FAMILIES = ("dd", "ss", "sd_below", "sd_inverse", "sd_above")


@dataclass(frozen=True)
class IdentityInstance:
    """One instance ``lhs == rhs`` of a cosimplicial identity on one tree."""

    family: str
    indices: tuple[int, int]
    tree: FnTree
    lhs: FnTree
    rhs: FnTree
    extremal: bool

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def _d(i: int):
    return lambda t: coface(i, t)


def _s(j: int):
    return lambda t: codegeneracy(j, t)


def identity_instances(tree: FnTree) -> Iterable[IdentityInstance]:
    """Every identity of the five families whose source is ``tree``.

    ``extremal`` marks instances that apply ``d_0`` or a last coface somewhere.
    Families, for a tree on ``n`` leaves:

    * ``dd``: ``d_j d_i = d_i d_{j-1}`` for ``i < j``
    * ``ss``: ``s_j s_i = s_i s_{j+1}`` for ``i <= j``
    * ``sd_below``: ``s_j d_i = d_i s_{j-1}`` for ``i < j``
    * ``sd_inverse``: ``s_j d_j = id = s_j d_{j+1}``
    * ``sd_above``: ``s_j d_i = d_{i-1} s_j`` for ``i > j + 1``
    """
    n = tree.n

    def make(family, idx, lhs_ops, rhs_ops, sizes):
        lhs = rhs = tree
        for op in lhs_ops:
            lhs = op(lhs)
        for op in rhs_ops:
            rhs = op(rhs)
        ext = any(k == 0 or k == size + 1 for k, size in sizes)
        return IdentityInstance(family, idx, tree, lhs, rhs, ext)

    for j in range(1, n + 3):
        for i in range(j):
            # d_i on n leaves, d_j on n + 1; d_{j-1} on n, d_i on n + 1
            yield make("dd", (i, j), [_d(i), _d(j)], [_d(j - 1), _d(i)], [(i, n), (j, n + 1), (j - 1, n), (i, n + 1)])
    for j in range(0, n - 1):
        for i in range(j + 1):
            yield make("ss", (i, j), [_s(i), _s(j)], [_s(j + 1), _s(i)], [])
    for j in range(1, n + 1):
        for i in range(j):
            yield make("sd_below", (i, j), [_d(i), _s(j)], [_s(j - 1), _d(i)], [(i, n), (i, n - 1)])
    for j in range(0, n + 1):
        yield make("sd_inverse", (j, j), [_d(j), _s(j)], [], [(j, n)])
        yield make("sd_inverse", (j + 1, j), [_d(j + 1), _s(j)], [], [(j + 1, n)])
    for j in range(0, n):
        for i in range(j + 2, n + 2):
            yield make("sd_above", (i, j), [_d(i), _s(j)], [_s(j), _d(i - 1)], [(i, n), (i - 1, n - 1)])
