"""Floating-point realization of weighted trees.

Points live in ``R^m`` with basis ``e_1..e_m`` stored 0-based, so a merge of
depth ``a`` moves along coordinate ``a``.  The collapse direction used for
infinitesimal doublings defaults to ``e_m`` (the last coordinate); pass
``collapse="e1"`` to reproduce the alternative convention.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .complex_builder import InvariantViolation
from .fn_core import (
    FnTree,
    MonotoneMap,
    TreeError,
    apply_monotone,
    classify_pair,
    coface,
    delta_codegeneracy,
    hair_blocks,
    is_exceptional,
    tree_from_json,
    tree_lt,
    trivial_tree,
    twisted,
)

EPS_GEO = 1e-9
EPS_ALGEBRA = 1e-12
AMBIGUITY_FACTOR = 100.0
INF = math.inf


class GeometryError(ValueError):
    """Invalid geometric input: bad weights, coincident points, ambiguous strata."""


class NoStratum(GeometryError):
    """Sampling found no monotone map whose image of the source is a chain."""


def collapse_direction(m: int, collapse: str = "em") -> np.ndarray:
    if collapse not in ("em", "e1"):
        raise GeometryError(f"unknown collapse direction {collapse!r}")
    out = np.zeros(m)
    out[m - 1 if collapse == "em" else 0] = 1.0
    return out


def _basis(m: int, a: int) -> np.ndarray:
    out = np.zeros(m)
    out[a] = 1.0
    return out


def _encode_weight(x: float):
    return "inf" if math.isinf(x) else x


def _decode_weight(x) -> float:
    return INF if x == "inf" else float(x)


# -------------------------------------------------------------- configurations


@dataclass(frozen=True, eq=False)
class Configuration:
    """``n`` labelled points of ``R^m``; row ``k`` holds the point with label ``k + 1``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise GeometryError("points must be an (n, m) array")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def point(self, label: int) -> np.ndarray:
        return self.points[label - 1]

    def min_separation(self) -> float:
        if self.n < 2:
            return INF
        diff = self.points[:, None, :] - self.points[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        return float(dist[np.triu_indices(self.n, 1)].min())

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "points": self.points.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, data: str | dict) -> "Configuration":
        obj = json.loads(data) if isinstance(data, str) else data
        pts = np.array(obj["points"], dtype=np.float64).reshape(obj["n"], obj["m"])
        return cls(pts)


def config_from_tree(tree: FnTree, theta: Sequence[float]) -> Configuration:
    theta = tuple(float(t) for t in theta)
    if len(theta) != max(tree.n - 1, 0):
        raise GeometryError(f"expected {max(tree.n - 1, 0)} weights, got {len(theta)}")
    if any(not (0 < t < INF) for t in theta):
        raise GeometryError(f"weights must be positive and finite, got {list(theta)}")
    pts = np.zeros((tree.n, tree.m))
    for p in range(1, tree.n):
        prev, nxt = tree.label_at(p), tree.label_at(p + 1)
        pts[nxt - 1] = pts[prev - 1]
        pts[nxt - 1, tree.depth_at(p)] += theta[p - 1]
    return Configuration(pts)


def bz_vertex(tree: FnTree) -> Configuration:
    """The barycentric vertex of the cell: every edge of unit length."""
    return config_from_tree(tree, (1.0,) * max(tree.n - 1, 0))


def _lex_compare(x: np.ndarray, y: np.ndarray, eps: float) -> tuple[int, int]:
    """Return ``(sign, depth)`` of ``y - x`` in lexicographic order."""
    for a in range(len(x)):
        delta = y[a] - x[a]
        if abs(delta) <= eps:
            continue
        if abs(delta) < AMBIGUITY_FACTOR * eps:
            raise GeometryError(
                f"coordinate {a + 1} differs by {abs(delta):.3g}, inside the ambiguity band"
            )
        return (1 if delta > 0 else -1), a
    return 0, len(x)


def stratum_of(config: Configuration, eps: float = EPS_GEO) -> FnTree:
    """The Fox-Neuwirth tree whose open cell contains ``config``."""
    n, m = config.n, config.m
    if n == 0:
        return FnTree(m, (), ())
    pts = config.points

    def cmp(i: int, j: int) -> int:
        sign, _ = _lex_compare(pts[i], pts[j], eps)
        if sign == 0:
            raise GeometryError(f"points {i + 1} and {j + 1} coincide within {eps}")
        return -sign

    order = sorted(range(n), key=functools.cmp_to_key(cmp))
    depths = []
    for a, b in zip(order, order[1:]):
        sign, depth = _lex_compare(pts[a], pts[b], eps)
        if sign != 1:
            raise GeometryError("lexicographic order is not consistent within tolerance")
        depths.append(depth)
    return FnTree(m, tuple(k + 1 for k in order), tuple(depths))


# ---------------------------------------------------------- weighted chains


@dataclass(frozen=True)
class WeightedChain:
    """A convex combination of weighted trees along an ascending chain.

    ``weights[k][h - 1]`` sits between positions ``h`` and ``h + 1`` of
    ``trees[k]``.  The extended variant admits ``0`` and ``inf`` on hairs.
    """

    trees: tuple[FnTree, ...]
    coefficients: tuple[float, ...]
    weights: tuple[tuple[float, ...], ...]
    extended: bool = False
    tol: float = field(default=EPS_ALGEBRA, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        object.__setattr__(self, "weights", tuple(tuple(float(x) for x in w) for w in self.weights))
        trees, lam, weights = self.trees, self.coefficients, self.weights
        if not trees:
            raise GeometryError("a weighted chain needs at least one tree")
        if len(lam) != len(trees) or len(weights) != len(trees):
            raise GeometryError("coefficients and weight vectors must match the chain length")
        shape = (trees[0].m, trees[0].n)
        for a, b in zip(trees, trees[1:]):
            if (b.m, b.n) != shape or not tree_lt(a, b):
                raise GeometryError(f"chain is not strictly ascending at {a} < {b}")
        if any(c < 0 or math.isinf(c) for c in lam) or abs(sum(lam) - 1.0) > 1e-9:
            raise GeometryError(f"coefficients {list(lam)} are not convex")
        for tree, w in zip(trees, weights):
            self._check_weights(tree, w)

    def _check_weights(self, tree: FnTree, w: tuple[float, ...]) -> None:
        if len(w) != max(tree.n - 1, 0):
            raise GeometryError(f"tree {tree} needs {max(tree.n - 1, 0)} weights, got {len(w)}")
        if not self.extended:
            if any(not (0 < x < INF) for x in w):
                raise GeometryError(f"plain weights must be positive and finite, got {list(w)}")
            return
        _, _, block = hair_blocks(tree)
        for h, x in enumerate(w, start=1):
            if math.isnan(x) or x < 0:
                raise GeometryError(f"weight {x} at position {h} is not in [0, inf]")
            if (x == 0 or math.isinf(x)) and tree.depth_at(h) != tree.m - 1:
                raise GeometryError(f"weight {x} at position {h} of {tree} is not on a hair")
            if math.isinf(x) and h not in block:
                raise GeometryError(f"infinite weight at position {h} outside the extremal blocks of {tree}")

    @property
    def m(self) -> int:
        return self.trees[0].m

    @property
    def n(self) -> int:
        return self.trees[0].n

    @property
    def degree(self) -> int:
        return len(self.trees) - 1

    def active(self) -> list[int]:
        return [k for k, c in enumerate(self.coefficients) if c > 0]

    @classmethod
    def single(cls, tree: FnTree, theta: Sequence[float]) -> "WeightedChain":
        return cls((tree,), (1.0,), (tuple(theta),))

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "coefficients": list(self.coefficients),
            "weights": [[_encode_weight(x) for x in w] for w in self.weights],
            "extended": self.extended,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, data: str | dict) -> "WeightedChain":
        obj = json.loads(data) if isinstance(data, str) else data
        return cls(
            tuple(tree_from_json(t) for t in obj["trees"]),
            tuple(obj["coefficients"]),
            tuple(tuple(_decode_weight(x) for x in w) for w in obj["weights"]),
            bool(obj.get("extended", False)),
        )


def config_from_chain(chain: WeightedChain, eps: float = EPS_GEO) -> Configuration:
    if chain.extended:
        raise GeometryError("config_from_chain needs finite positive weights")
    total = np.zeros((chain.n, chain.m))
    for tree, c, w in zip(chain.trees, chain.coefficients, chain.weights):
        if c > 0:
            total += c * config_from_tree(tree, w).points
    out = Configuration(total)
    if out.min_separation() <= eps:
        raise InvariantViolation("convex combination produced coincident points")
    return out


def _pair_span(tree: FnTree, i: int, j: int) -> tuple[int, int, int]:
    """``(sign, p, q)``: positions of the earlier and later of ``i, j``."""
    pi, pj = tree.position(i), tree.position(j)
    return (1, pi, pj) if pi < pj else (-1, pj, pi)


def pair_difference(chain: WeightedChain, i: int, j: int) -> np.ndarray:
    """``x_j - x_i`` as a signed sum of the weights crossed between the two leaves."""
    if i == j:
        raise GeometryError("pair_difference needs two distinct labels")
    if chain.extended:
        raise GeometryError("pair_difference needs finite positive weights")
    out = np.zeros(chain.m)
    for tree, c, w in zip(chain.trees, chain.coefficients, chain.weights):
        if c == 0:
            continue
        sign, p, q = _pair_span(tree, i, j)
        for h in range(p, q):
            out[tree.depth_at(h)] += c * sign * w[h - 1]
    return out


# ------------------------------------------------------- Kontsevich tensors


@dataclass(frozen=True, eq=False)
class KontsTensor:
    """Unit directions ``entries[i-1, j-1] = n(x_j - x_i)``; antisymmetric, zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.float64)
        if e.ndim != 3 or e.shape[0] != e.shape[1]:
            raise GeometryError("tensor entries must have shape (n, n, m)")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[2]

    def entry(self, i: int, j: int) -> np.ndarray:
        return self.entries[i - 1, j - 1]

    @classmethod
    def from_upper(cls, n: int, m: int, upper: dict[tuple[int, int], np.ndarray]) -> "KontsTensor":
        e = np.zeros((n, n, m))
        for (i, j), v in upper.items():
            e[i - 1, j - 1] = v
            e[j - 1, i - 1] = -v
        return cls(e)

    def check(self, eps: float = EPS_GEO) -> None:
        if not np.array_equal(self.entries, -self.entries.transpose(1, 0, 2)):
            raise InvariantViolation("tensor is not antisymmetric")
        iu = np.triu_indices(self.n, 1)
        norms = np.linalg.norm(self.entries[iu], axis=1)
        if norms.size and np.max(np.abs(norms - 1.0)) > eps:
            raise InvariantViolation("tensor has a non-unit entry")

    def max_deviation(self, other: "KontsTensor") -> float:
        if self.entries.shape != other.entries.shape:
            return INF
        if self.entries.size == 0:
            return 0.0
        return float(np.max(np.abs(self.entries - other.entries)))

    def __eq__(self, other) -> bool:
        return isinstance(other, KontsTensor) and np.array_equal(self.entries, other.entries)

    def to_dict(self) -> dict:
        pairs = [
            {"i": i, "j": j, "direction": self.entry(i, j).tolist()}
            for i in range(1, self.n + 1)
            for j in range(i + 1, self.n + 1)
        ]
        return {"n": self.n, "m": self.m, "pairs": pairs}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, data: str | dict) -> "KontsTensor":
        obj = json.loads(data) if isinstance(data, str) else data
        upper = {(p["i"], p["j"]): np.array(p["direction"], dtype=np.float64) for p in obj["pairs"]}
        return cls.from_upper(obj["n"], obj["m"], upper)


def normalize(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise GeometryError("cannot normalize the zero vector")
    return v / norm


def konts_point(config: Configuration, eps: float = EPS_GEO) -> KontsTensor:
    upper = {}
    for i in range(1, config.n + 1):
        for j in range(i + 1, config.n + 1):
            diff = config.point(j) - config.point(i)
            if np.linalg.norm(diff) <= eps:
                raise GeometryError(f"points {i} and {j} coincide")
            upper[(i, j)] = normalize(diff)
    return KontsTensor.from_upper(config.n, config.m, upper)


def konts_coface(u: int, tensor: KontsTensor, collapse: str = "em") -> KontsTensor:
    """The coface ``d_u : Konts(l) -> Konts(l + 1)``; pure reindexing outside exceptional pairs."""
    ell, m = tensor.n, tensor.m
    if not 0 <= u <= ell + 1:
        raise GeometryError(f"coface index {u} outside [0, {ell + 1}]")
    mu = collapse_direction(m, collapse)
    src = tensor.entries
    out = np.zeros((ell + 1, ell + 1, m))
    for i in range(1, ell + 2):
        for j in range(i + 1, ell + 2):
            if is_exceptional(u, i, j, ell):
                v = mu
            else:
                v = src[delta_codegeneracy(u, i) - 1, delta_codegeneracy(u, j) - 1]
            out[i - 1, j - 1] = v
            out[j - 1, i - 1] = -v
    return KontsTensor(out)


# ----------------------------------------------------------- tau on strata


def _is_trivial(chain: WeightedChain, D: MonotoneMap) -> bool:
    return D.n == 0 and D(0) == chain.degree and chain.trees[-1] == trivial_tree(chain.n, chain.m)


def check_stratum(
    chain: WeightedChain,
    phi: MonotoneMap,
    D: MonotoneMap,
    source: Sequence[FnTree] | None = None,
) -> None:
    """Validate ``(lambda, omega)`` against the cell of ``(source, phi, D)``."""
    ell = chain.n
    if phi.codomain != ell:
        raise GeometryError(f"phi lands in [{phi.codomain}], chain has {ell} leaves")
    if D.codomain != chain.degree:
        raise GeometryError(f"D lands in [{D.codomain}], chain has degree {chain.degree}")
    image = D.image()
    for k, c in enumerate(chain.coefficients):
        if (c > 0) != (k in image):
            raise GeometryError(f"coefficient {k} is {c} but the face of D requires the opposite")
    if source is None or _is_trivial(chain, D):
        return
    if len(source) != D.n + 1:
        raise GeometryError(f"source chain has {len(source)} trees, D needs {D.n + 1}")
    for k, lam in enumerate(source):
        target = chain.trees[D(k)]
        if apply_monotone(phi, lam) != target:
            raise GeometryError(f"phi applied to source tree {k} is not chain tree {D(k)}")
        pos = twisted(phi, lam)
        lo, hi = pos(0), pos(lam.n)
        hit = pos.image()
        w = chain.weights[D(k)]
        for alpha in range(max(lo, 1), min(hi, ell - 1) + 1):
            x = w[alpha - 1]
            if alpha in (lo, hi):
                ok = math.isinf(x)
            elif alpha not in hit:
                ok = x == 0
            else:
                ok = 0 < x < INF
            if not ok:
                raise GeometryError(f"weight {x} at position {alpha} of tree {D(k)} violates the cell constraints")


def walking_direction(chain: WeightedChain, i: int, j: int, members: Iterable[int] | None = None) -> np.ndarray:
    """Normalized walking sum with extended weights.

    Any infinite term dominates: finite terms are dropped and the directions
    carried by the infinite weights are summed.
    """
    m = chain.m
    finite = np.zeros(m)
    infinite = np.zeros(m)
    diverges = False
    ks = range(len(chain.trees)) if members is None else members
    for k in ks:
        tree, c, w = chain.trees[k], chain.coefficients[k], chain.weights[k]
        if c == 0:
            continue
        sign, p, q = _pair_span(tree, i, j)
        for h in range(p, q):
            x = w[h - 1]
            if math.isinf(x):
                diverges = True
                infinite[tree.depth_at(h)] += c * sign
            else:
                finite[tree.depth_at(h)] += c * sign * x
    vec = infinite if diverges else finite
    if not np.any(vec):
        raise GeometryError(f"walking sum for ({i}, {j}) vanishes")
    return normalize(vec)


def tau_tensor(
    chain: WeightedChain,
    phi: MonotoneMap | None = None,
    D: MonotoneMap | None = None,
    source: Sequence[FnTree] | None = None,
    collapse: str = "em",
) -> KontsTensor:
    """Evaluate the map to the Kontsevich space on the stratum ``(source, phi, D)``.

    ``phi`` and ``D`` default to identities, the plain case.
    """
    ell, m = chain.n, chain.m
    phi = MonotoneMap.identity(ell) if phi is None else phi
    D = MonotoneMap.identity(chain.degree) if D is None else D
    check_stratum(chain, phi, D, source)
    mu = collapse_direction(m, collapse)
    trivial = _is_trivial(chain, D)
    members = [D(k) for k in range(D.n + 1)]
    upper = {}
    for i in range(1, ell + 1):
        for j in range(i + 1, ell + 1):
            if trivial or classify_pair(phi, i, j).degenerate:
                upper[(i, j)] = mu
            else:
                upper[(i, j)] = walking_direction(chain, i, j, members)
    return KontsTensor.from_upper(ell, m, upper)


# ----------------------------------------------------------------- sampling


def random_tree(rng: np.random.Generator, m: int, n: int) -> FnTree:
    sigma = tuple(int(x) + 1 for x in rng.permutation(n))
    depths = tuple(int(x) for x in rng.integers(0, m, size=max(n - 1, 0)))
    return FnTree(m, sigma, depths)


def random_weights(rng: np.random.Generator, count: int, low: float = 0.1, high: float = 10.0) -> tuple[float, ...]:
    return tuple(float(x) for x in np.exp(rng.uniform(math.log(low), math.log(high), size=count)))


def _random_successor(rng: np.random.Generator, tree: FnTree, tries: int = 8) -> FnTree | None:
    top = tree.m - 1
    low = [p for p, a in enumerate(tree.depths) if a < top]
    if not low:
        return None
    for _ in range(tries):
        sigma, depths = list(tree.sigma), list(tree.depths)
        if rng.random() < 0.5:
            p = int(rng.integers(0, len(sigma) - 1))
            sigma[p], sigma[p + 1] = sigma[p + 1], sigma[p]
        for p in low:
            if rng.random() < 0.5:
                depths[p] = int(rng.integers(depths[p] + 1, top + 1))
        cand = FnTree(tree.m, tuple(sigma), tuple(depths))
        if tree_lt(tree, cand):
            return cand
    depths = list(tree.depths)
    p = low[int(rng.integers(0, len(low)))]
    depths[p] += 1
    return FnTree(tree.m, tree.sigma, tuple(depths))


def random_tree_chain(rng: np.random.Generator, m: int, n: int, length: int) -> tuple[FnTree, ...]:
    """A strictly ascending chain of at most ``length + 1`` trees."""
    chain = [random_tree(rng, m, n)]
    for _ in range(length):
        nxt = _random_successor(rng, chain[-1])
        if nxt is None:
            break
        chain.append(nxt)
    return tuple(chain)


def random_weighted_chain(rng: np.random.Generator, m: int, n: int, max_degree: int = 3) -> WeightedChain:
    trees = random_tree_chain(rng, m, n, int(rng.integers(0, max_degree + 1)))
    lam = rng.dirichlet(np.ones(len(trees)))
    weights = tuple(random_weights(rng, max(n - 1, 0)) for _ in trees)
    return WeightedChain(trees, tuple(float(c) for c in lam), weights)


def random_monotone(rng: np.random.Generator, n: int, ell: int) -> MonotoneMap:
    values = sorted(int(x) for x in rng.choice(ell + 1, size=n + 1, replace=False))
    return MonotoneMap(tuple(values), ell)


def random_tensor(rng: np.random.Generator, n: int, m: int) -> KontsTensor:
    upper = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            upper[(i, j)] = normalize(rng.normal(size=m))
    return KontsTensor.from_upper(n, m, upper)


@dataclass(frozen=True)
class Stratum:
    """A sampled point of a cell together with the data that names its stratum."""

    chain: WeightedChain
    phi: MonotoneMap
    D: MonotoneMap
    source: tuple[FnTree, ...]


def random_stratum(rng: np.random.Generator, m: int, n: int, ell: int, max_degree: int = 2, tries: int = 50) -> Stratum:
    """Sample ``(source, phi, D)`` with an extended weighted chain in its cell.

    ``D`` is the identity, or the identity followed by a trailing trivial tree
    carrying coefficient zero.
    """
    for _ in range(tries):
        source = random_tree_chain(rng, m, n, int(rng.integers(0, max_degree + 1)))
        phi = random_monotone(rng, n, ell)
        image = [apply_monotone(phi, lam) for lam in source]
        if any(not tree_lt(a, b) for a, b in zip(image, image[1:])):
            continue
        r = len(source) - 1
        top = trivial_tree(ell, m)
        # the trivial tree is maximal, not a maximum: pad only above comparable trees
        pad = tree_lt(image[-1], top) and rng.random() < 0.3
        trees = image + [top] if pad else image
        lam = list(rng.dirichlet(np.ones(r + 1))) + ([0.0] if pad else [])
        D = MonotoneMap(tuple(range(r + 1)), len(trees) - 1)
        weights = []
        for k, tree in enumerate(trees):
            weights.append(_cell_weights(rng, tree, phi, source[k] if k <= r else None))
        chain = WeightedChain(tuple(trees), tuple(float(c) for c in lam), tuple(weights), extended=True)
        return Stratum(chain, phi, D, tuple(source))
    raise NoStratum(f"no compatible stratum found for m={m}, n={n}, l={ell}")


def _free_hair_weight(rng: np.random.Generator, tree: FnTree, h: int, block: frozenset[int]) -> float:
    if tree.depth_at(h) != tree.m - 1:
        return random_weights(rng, 1)[0]
    roll = rng.random()
    if roll < 0.25:
        return 0.0
    if roll < 0.5 and h in block:
        return INF
    return random_weights(rng, 1)[0]


def _cell_weights(rng: np.random.Generator, tree: FnTree, phi: MonotoneMap, lam: FnTree | None) -> tuple[float, ...]:
    ell = tree.n
    _, _, block = hair_blocks(tree)
    if lam is None:
        return tuple(_free_hair_weight(rng, tree, h, block) for h in range(1, ell))
    pos = twisted(phi, lam)
    lo, hi, hit = pos(0), pos(lam.n), pos.image()
    out = []
    for h in range(1, ell):
        if lo <= h <= hi:
            if h in (lo, hi):
                out.append(INF)
            elif h not in hit:
                out.append(0.0)
            else:
                out.append(random_weights(rng, 1)[0])
        else:
            out.append(_free_hair_weight(rng, tree, h, block))
    return tuple(out)


def approximate(chain: WeightedChain, large: float = 1e6, small: float = 1e-6) -> WeightedChain:
    """Replace ``inf`` by ``large`` and ``0`` by ``small``: a nearby plain point."""

    def fix(x: float) -> float:
        return large if math.isinf(x) else (small if x == 0 else x)

    return WeightedChain(
        chain.trees,
        chain.coefficients,
        tuple(tuple(fix(x) for x in w) for w in chain.weights),
        extended=True,
    )


def raw_tensor(chain: WeightedChain, members: Sequence[int] | None = None) -> KontsTensor:
    """Walking-sum directions for every pair, without any degeneracy shortcut."""
    upper = {
        (i, j): walking_direction(chain, i, j, members)
        for i in range(1, chain.n + 1)
        for j in range(i + 1, chain.n + 1)
    }
    return KontsTensor.from_upper(chain.n, chain.m, upper)


# ----------------------------------------------------------- oracle suite


@dataclass(frozen=True)
class SampleRecord:
    seed: int
    check: str
    m: int
    n: int
    samples: int
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def check_round_trip(rng: np.random.Generator, m: int, n: int) -> float:
    tree = random_tree(rng, m, n)
    theta = random_weights(rng, max(n - 1, 0))
    return 0.0 if stratum_of(config_from_tree(tree, theta)) == tree else 1.0


def check_walking_man(rng: np.random.Generator, m: int, n: int) -> float:
    chain = random_weighted_chain(rng, m, n)
    conf = config_from_chain(chain)
    worst = 0.0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                direct = conf.point(j) - conf.point(i)
                worst = max(worst, float(np.max(np.abs(pair_difference(chain, i, j) - direct))))
    return worst


def check_coface_identity(rng: np.random.Generator, m: int, n: int, collapse: str = "em") -> float:
    """``d_j d_i = d_i d_{j-1}`` for a random ``i < j`` on a random tensor; 0 if exact."""
    t = random_tensor(rng, n, m)
    j = int(rng.integers(1, n + 3))
    i = int(rng.integers(0, j))
    lhs = konts_coface(j, konts_coface(i, t, collapse), collapse)
    rhs = konts_coface(i, konts_coface(j - 1, t, collapse), collapse)
    return 0.0 if lhs == rhs else 1.0


def check_tau_coherence(rng: np.random.Generator, m: int, n: int) -> float:
    chain = random_weighted_chain(rng, m, n)
    return tau_tensor(chain).max_deviation(konts_point(config_from_chain(chain)))


SUITE_CHECKS = {
    "round_trip": (check_round_trip, 0.0),
    "walking_man": (check_walking_man, EPS_ALGEBRA),
    "coface_identity": (check_coface_identity, 0.0),
    "tau_coherence": (check_tau_coherence, EPS_GEO),
}


def geometry_suite(
    seed: int = 42,
    samples: int = 1000,
    shapes: Iterable[tuple[int, int]] | None = None,
    checks: Iterable[str] | None = None,
) -> list[SampleRecord]:
    """Seeded oracle comparisons; one record per (check, m, n)."""
    shapes = list(shapes) if shapes is not None else [(m, n) for m in (2, 3) for n in range(1, 6)]
    names = list(checks) if checks is not None else list(SUITE_CHECKS)
    out = []
    for name in names:
        fn, tol = SUITE_CHECKS[name]
        for m, n in shapes:
            rng = np.random.default_rng([seed, m, n, names.index(name)])
            worst = max((fn(rng, m, n) for _ in range(samples)), default=0.0)
            out.append(SampleRecord(seed, name, m, n, samples, worst, tol))
    return out


def records_to_csv(records: Sequence[SampleRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["seed", "check", "m", "n", "samples", "max_deviation", "tolerance", "passed"])
    for r in records:
        writer.writerow([r.seed, r.check, r.m, r.n, r.samples, repr(r.max_deviation), r.tolerance, str(r.passed).lower()])
    return buf.getvalue()


def coface_doubling_direction(tree: FnTree, i: int, collapse: str = "em") -> np.ndarray:
    """Direction from leaf ``i`` to leaf ``i + 1`` after doubling ``i``, at unit weights."""
    if not 1 <= i <= tree.n:
        raise TreeError(f"internal coface index {i} outside [1, {tree.n}]")
    return konts_point(bz_vertex(coface(i, tree))).entry(i, i + 1)
