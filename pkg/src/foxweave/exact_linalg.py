"""Exact linear algebra over the rationals, prime fields and the integers.

Matrices are kept sparse as one ``{column: value}`` dict per row.  Integer and
rational ranks use fraction-free elimination (each row op is
``pivot * row - a * pivot_row`` followed by division by the row content), so
no fractions are ever built.  Prime fields use classical reduction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp


class RingError(ValueError):
    pass


class UnsupportedRing(RingError):
    pass


class CompositionNotZero(ArithmeticError):
    """``d_out @ d_in`` is not the zero matrix."""


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % k for k in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class Ring:
    kind: str  # "q", "z" or "fp"
    p: int = 0

    def __post_init__(self):
        if self.kind not in ("q", "z", "fp"):
            raise RingError(f"unknown ring kind {self.kind!r}")
        if self.kind == "fp" and not is_prime(self.p):
            raise RingError(f"F_p needs a prime, got {self.p}")

    @classmethod
    def parse(cls, spec: str) -> "Ring":
        spec = spec.strip().lower()
        if spec in ("q", "z"):
            return cls(spec)
        if spec.startswith("fp:"):
            try:
                return cls("fp", int(spec[3:]))
            except ValueError as exc:
                raise RingError(f"bad prime in {spec!r}") from exc
        raise RingError(f"unknown coefficient spec {spec!r}; use q, z or fp:<prime>")

    @property
    def is_field(self) -> bool:
        return self.kind != "z"

    def reduce(self, value):
        if self.kind == "fp":
            return int(value) % self.p
        if self.kind == "z":
            if isinstance(value, Fraction):
                if value.denominator != 1:
                    raise RingError(f"{value} is not an integer")
                return value.numerator
            return int(value)
        value = Fraction(value)
        return value.numerator if value.denominator == 1 else value

    def __str__(self) -> str:
        return f"fp:{self.p}" if self.kind == "fp" else self.kind


QQ = Ring("q")
ZZ = Ring("z")


def GF(p: int) -> Ring:
    return Ring("fp", p)


@dataclass(frozen=True)
class ExactMatrix:
    ring: Ring
    shape: tuple[int, int]
    entries: Mapping[tuple[int, int], object] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        rows, cols = self.shape
        for (i, j), v in self.entries.items():
            if not (0 <= i < rows and 0 <= j < cols):
                raise IndexError(f"entry ({i}, {j}) outside shape {self.shape}")
            v = self.ring.reduce(v)
            if v != 0:
                clean[(i, j)] = v
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence], ring: Ring = ZZ) -> "ExactMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        data = {(i, j): v for i, r in enumerate(rows) for j, v in enumerate(r) if v != 0}
        return cls(ring, (len(rows), ncols), data)

    @classmethod
    def from_sparse(cls, mat, ring: Ring = ZZ) -> "ExactMatrix":
        coo = sp.coo_matrix(mat)
        data = {}
        for i, j, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
            data[(i, j)] = data.get((i, j), 0) + v
        return cls(ring, coo.shape, data)

    @classmethod
    def identity(cls, k: int, ring: Ring = ZZ) -> "ExactMatrix":
        return cls(ring, (k, k), {(i, i): 1 for i in range(k)})

    @classmethod
    def zeros(cls, rows: int, cols: int, ring: Ring = ZZ) -> "ExactMatrix":
        return cls(ring, (rows, cols), {})

    @property
    def nrows(self) -> int:
        return self.shape[0]

    @property
    def ncols(self) -> int:
        return self.shape[1]

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def to_dense(self) -> list[list]:
        out = [[0] * self.ncols for _ in range(self.nrows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def to_sparse(self) -> sp.csr_matrix:
        if self.ring.kind == "q" and any(isinstance(v, Fraction) for v in self.entries.values()):
            raise RingError("non-integral rational matrix has no integer sparse form")
        if not self.entries:
            return sp.csr_matrix(self.shape, dtype=np.int64)
        (rows, cols), vals = zip(*self.entries.keys()), list(self.entries.values())
        return sp.csr_matrix((np.array(vals, dtype=np.int64), (rows, cols)), shape=self.shape)

    def row_dicts(self) -> list[dict[int, object]]:
        rows: list[dict[int, object]] = [dict() for _ in range(self.nrows)]
        for (i, j), v in self.entries.items():
            rows[i][j] = v
        return rows

    def transpose(self) -> "ExactMatrix":
        return ExactMatrix(self.ring, (self.ncols, self.nrows), {(j, i): v for (i, j), v in self.entries.items()})

    def change_ring(self, ring: Ring) -> "ExactMatrix":
        return ExactMatrix(ring, self.shape, self.entries)

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        right = other.row_dicts()
        acc: dict[tuple[int, int], object] = {}
        for (i, k), a in self.entries.items():
            for j, b in right[k].items():
                acc[(i, j)] = acc.get((i, j), 0) + a * b
        return ExactMatrix(self.ring, (self.nrows, other.ncols), acc)

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self.ring == other.ring and self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.ring, self.shape, tuple(self.entries.items())))


def as_exact(mat, ring: Ring) -> ExactMatrix:
    if isinstance(mat, ExactMatrix):
        return mat if mat.ring == ring else mat.change_ring(ring)
    if sp.issparse(mat):
        return ExactMatrix.from_sparse(mat, ring)
    return ExactMatrix.from_dense(np.asarray(mat, dtype=object).tolist(), ring)


# --------------------------------------------------------------- elimination


def _content_normalize(row: dict[int, int]) -> dict[int, int]:
    g = 0
    for v in row.values():
        g = math.gcd(g, v)
        if g == 1:
            return row
    if g > 1:
        return {c: v // g for c, v in row.items()}
    return row


def _integer_rows(m: ExactMatrix) -> list[dict[int, int]]:
    rows = m.row_dicts()
    if m.ring.kind != "q":
        return rows
    out = []
    for r in rows:
        den = 1
        for v in r.values():
            if isinstance(v, Fraction):
                den = den * v.denominator // math.gcd(den, v.denominator)
        out.append({c: int(v * den) for c, v in r.items()})
    return out


def echelon_pivots(m: ExactMatrix) -> dict[int, dict[int, object]]:
    """Row echelon form as ``{pivot column: row}``.

    For ``q`` and ``z`` rows are integer vectors with the pivot as leading
    entry; for ``fp`` rows are normalized to a leading 1.
    """
    if m.ring.kind == "fp":
        return _echelon_fp(m.row_dicts(), m.ring.p)
    return _echelon_integral(_integer_rows(m))


def _echelon_integral(rows: Iterable[dict[int, int]]) -> dict[int, dict[int, int]]:
    pivots: dict[int, dict[int, int]] = {}
    for row in rows:
        r = _content_normalize(dict(row))
        while r:
            c = min(r)
            piv = pivots.get(c)
            if piv is None:
                if r[c] < 0:
                    r = {k: -v for k, v in r.items()}
                pivots[c] = r
                break
            p, a = piv[c], r[c]
            g = math.gcd(p, a)
            mp, ma = p // g, a // g
            new = {k: mp * v for k, v in r.items()} if mp != 1 else dict(r)
            for k, v in piv.items():
                w = new.get(k, 0) - ma * v
                if w:
                    new[k] = w
                else:
                    new.pop(k, None)
            r = _content_normalize(new)
    return pivots


def _echelon_fp(rows: Iterable[dict[int, int]], p: int) -> dict[int, dict[int, int]]:
    pivots: dict[int, dict[int, int]] = {}
    for row in rows:
        r = {c: v % p for c, v in row.items() if v % p}
        while r:
            c = min(r)
            piv = pivots.get(c)
            if piv is None:
                inv = pow(r[c], -1, p)
                pivots[c] = {k: v * inv % p for k, v in r.items()}
                break
            a = r[c]
            for k, v in piv.items():
                w = (r.get(k, 0) - a * v) % p
                if w:
                    r[k] = w
                else:
                    r.pop(k, None)
    return pivots


def rank(mat, ring: Ring | None = None) -> int:
    """Exact rank; over the integers this is the rank over the rationals."""
    m = as_exact(mat, ring or (mat.ring if isinstance(mat, ExactMatrix) else QQ))
    if m.nnz == 0:
        return 0
    if m.nrows > m.ncols:
        m = m.transpose()
    return len(echelon_pivots(m))


def _rref_rows(m: ExactMatrix) -> dict[int, dict[int, object]]:
    """Fully reduced echelon rows with leading 1, as exact field elements."""
    if m.ring.kind == "z":
        raise UnsupportedRing("bases over Z are not computed by row reduction; use the Smith form")
    pivots = echelon_pivots(m)
    if m.ring.kind == "q":
        one = {}
        for c, row in pivots.items():
            lead = row[c]
            one[c] = {k: (Fraction(v, lead) if v % lead else v // lead) for k, v in row.items()}
        pivots = one
    p = m.ring.p
    for c in sorted(pivots, reverse=True):
        row = pivots[c]
        for k in [k for k in row if k != c and k in pivots]:
            a = row.get(k)
            if not a:
                continue
            for kk, v in pivots[k].items():
                w = row.get(kk, 0) - a * v
                if p:
                    w %= p
                if w:
                    row[kk] = w
                else:
                    row.pop(kk, None)
    return pivots


def kernel_basis(mat, ring: Ring | None = None) -> list[list]:
    """Basis of the right kernel; one dense vector per basis element."""
    m = as_exact(mat, ring or (mat.ring if isinstance(mat, ExactMatrix) else QQ))
    basis, _ = _kernel_from_rref(m)
    return basis


def _kernel_from_rref(m: ExactMatrix) -> tuple[list[list], list[int]]:
    rows = _rref_rows(m)
    free = [c for c in range(m.ncols) if c not in rows]
    neg = (lambda v: (-v) % m.ring.p) if m.ring.kind == "fp" else (lambda v: -v)
    basis = []
    col_index = {f: [] for f in free}
    for c, row in rows.items():
        for k, v in row.items():
            if k != c:
                col_index[k].append((c, v))
    for f in free:
        vec = [0] * m.ncols
        vec[f] = 1
        for c, v in col_index[f]:
            vec[c] = neg(v)
        basis.append(vec)
    return basis, free


def image_basis(mat, ring: Ring | None = None) -> list[list]:
    """Basis of the column space, from the echelon form of the transpose."""
    m = as_exact(mat, ring or (mat.ring if isinstance(mat, ExactMatrix) else QQ))
    rows = _rref_rows(m.transpose())
    out = []
    for c in sorted(rows):
        vec = [0] * m.nrows
        for k, v in rows[c].items():
            vec[k] = v
        out.append(vec)
    return out


def rref_kernel(mat) -> tuple[np.ndarray, np.ndarray]:
    """Rational kernel of an integer matrix as an integer array.

    Returns ``(K, free)``: the columns of ``K`` span the kernel, and
    ``K[free]`` is a diagonal matrix with positive entries (the identity when
    the reduced echelon form is integral, which is the usual case).
    """
    m = as_exact(mat, QQ)
    basis, free = _kernel_from_rref(m)
    K = np.zeros((m.ncols, len(basis)), dtype=object)
    for idx, vec in enumerate(basis):
        den = 1
        for v in vec:
            if isinstance(v, Fraction):
                den = den * v.denominator // math.gcd(den, v.denominator)
        K[:, idx] = [int(v * den) for v in vec]
    if K.size and max(abs(int(x)) for x in K.flat) >= 2**62:
        raise OverflowError("kernel basis entries do not fit in int64")
    return K.astype(np.int64), np.array(free, dtype=np.int64)


# --------------------------------------------------------------- Smith form


@dataclass(frozen=True)
class SmithResult:
    U: list[list[int]]
    S: list[list[int]]
    V: list[list[int]]

    @property
    def diagonal(self) -> list[int]:
        return [self.S[i][i] for i in range(min(len(self.S), len(self.S[0]) if self.S else 0)) if self.S[i][i]]

    def invariant_factors(self) -> list[int]:
        return self.diagonal

    def to_json(self, transforms: bool = False) -> str:
        data = {"invariant_factors": self.invariant_factors()}
        if transforms:
            data.update({"U": self.U, "S": self.S, "V": self.V})
        return json.dumps(data, sort_keys=True)


def smith_normal_form(mat) -> SmithResult:
    """Dense Smith normal form with transforms: ``U @ M @ V == S``.

    The pivot at each stage is a nonzero entry of least absolute value in the
    remaining block, ties broken by ``(row, col)``.
    """
    m = as_exact(mat, ZZ)
    A = m.to_dense()
    nr, nc = m.shape
    U = [[int(i == j) for j in range(nr)] for i in range(nr)]
    V = [[int(i == j) for j in range(nc)] for i in range(nc)]

    def swap_rows(i, k):
        A[i], A[k] = A[k], A[i]
        U[i], U[k] = U[k], U[i]

    def swap_cols(j, k):
        for row in A:
            row[j], row[k] = row[k], row[j]
        for row in V:
            row[j], row[k] = row[k], row[j]

    def add_row(src, dst, q):  # row_dst += q * row_src
        A[dst] = [a + q * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a + q * b for a, b in zip(U[dst], U[src])]

    def add_col(src, dst, q):
        for row in A:
            row[dst] += q * row[src]
        for row in V:
            row[dst] += q * row[src]

    def smallest(t):
        best = None
        for i in range(t, nr):
            for j in range(t, nc):
                v = A[i][j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
        return best

    for t in range(min(nr, nc)):
        best = smallest(t)
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            dirty = False
            for i in range(t + 1, nr):
                if A[i][t]:
                    add_row(t, i, -(A[i][t] // A[t][t]))
                    dirty |= A[i][t] != 0
            for j in range(t + 1, nc):
                if A[t][j]:
                    add_col(t, j, -(A[t][j] // A[t][t]))
                    dirty |= A[t][j] != 0
            if not dirty:
                bad = next(
                    ((i, j) for i in range(t + 1, nr) for j in range(t + 1, nc) if A[i][j] % A[t][t]),
                    None,
                )
                if bad is None:
                    break
                add_row(bad[0], t, 1)
            # bring the smallest nonzero entry of row/column t to the pivot
            cands = [(abs(A[i][t]), i, t) for i in range(t, nr) if A[i][t]]
            cands += [(abs(A[t][j]), t, j) for j in range(t, nc) if A[t][j]]
            _, i, j = min(cands)
            swap_rows(t, i)
            swap_cols(t, j)
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
    return SmithResult(U, A, V)


def _unit_reduce(m: ExactMatrix) -> tuple[int, list[dict[int, int]], int]:
    """Eliminate unit pivots with unimodular operations.

    Returns ``(units, remaining_rows, ncols)``: the number of invariant factors
    equal to 1 that were split off and the residual block (rows with columns
    renumbered densely).
    """
    rows = {i: r for i, r in enumerate(m.row_dicts()) if r}
    cols: dict[int, set[int]] = {}
    for i, r in rows.items():
        for c in r:
            cols.setdefault(c, set()).add(i)
    units = 0
    progress = True
    while progress:
        progress = False
        for i in sorted(rows, key=lambda k: len(rows[k])):
            r = rows.get(i)
            if r is None:
                continue
            choices = [c for c, v in r.items() if v in (1, -1)]
            if not choices:
                continue
            c = min(choices, key=lambda k: (len(cols[k]), k))
            pv = r[c]
            for k in list(cols[c]):
                if k == i:
                    continue
                rk = rows[k]
                q = rk[c] * pv  # pv is its own inverse
                for cc, v in r.items():
                    w = rk.get(cc, 0) - q * v
                    if w:
                        if cc not in rk:
                            cols[cc].add(k)
                        rk[cc] = w
                    else:
                        if cc in rk:
                            del rk[cc]
                            cols[cc].discard(k)
                if not rk:
                    del rows[k]
            for cc in r:
                cols[cc].discard(i)
            del rows[i]
            units += 1
            progress = True
    live = sorted({c for r in rows.values() for c in r})
    renum = {c: k for k, c in enumerate(live)}
    return units, [{renum[c]: v for c, v in r.items()} for r in rows.values()], len(live)


def invariant_factors(mat) -> list[int]:
    """Nonzero Smith invariants of an integer matrix (sparse unit pass, then dense)."""
    m = as_exact(mat, ZZ)
    units, rest, ncols = _unit_reduce(m)
    if not rest:
        return [1] * units
    block = ExactMatrix(ZZ, (len(rest), ncols), {(i, j): v for i, r in enumerate(rest) for j, v in r.items()})
    return [1] * units + smith_normal_form(block).invariant_factors()


# ----------------------------------------------------------------- homology


@dataclass(frozen=True)
class HomologySummary:
    kernel_rank: int
    image_rank: int
    betti: int
    torsion: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "kernel_rank": self.kernel_rank,
            "image_rank": self.image_rank,
            "betti": self.betti,
            "torsion": list(self.torsion),
        }


def homology(d_in, d_out, ring: Ring | None = None, check: bool = True) -> HomologySummary:
    """Homology ``ker d_out / im d_in`` at the shared middle space."""
    ring = ring or (d_in.ring if isinstance(d_in, ExactMatrix) else QQ)
    a, b = as_exact(d_in, ring), as_exact(d_out, ring)
    if a.nrows != b.ncols:
        raise ValueError(f"d_in has {a.nrows} rows but d_out has {b.ncols} columns")
    if check and not (b @ a).is_zero():
        raise CompositionNotZero("d_out @ d_in != 0")
    field_ring = ring if ring.is_field else QQ
    kernel = b.ncols - rank(b.change_ring(field_ring))
    image = rank(a.change_ring(field_ring))
    torsion: tuple[int, ...] = ()
    if ring.kind == "z":
        torsion = tuple(f for f in invariant_factors(a) if f > 1)
    return HomologySummary(kernel, image, kernel - image, torsion)


def chain_homology(differentials: Sequence, ring: Ring = QQ) -> list[HomologySummary]:
    """Homology of ``C_0 <- C_1 <- ... <- C_top``.

    ``differentials[k]`` maps degree ``k + 1`` to degree ``k``; the outer
    boundaries are zero.
    """
    differentials = [as_exact(d, ring) for d in differentials]
    dims = [differentials[0].shape[0]] + [d.shape[1] for d in differentials] if differentials else []
    out = []
    for k, dim in enumerate(dims):
        d_in = differentials[k] if k < len(differentials) else ExactMatrix.zeros(dim, 0, ring)
        d_out = differentials[k - 1] if k >= 1 else ExactMatrix.zeros(0, dim, ring)
        out.append(homology(d_in, d_out, ring))
    return out


# ------------------------------------------------------------- MatrixMarket


def write_matrix_market(path, mat) -> None:
    """Write an integer sparse matrix in coordinate format (deterministic order)."""
    from scipy.io import mmwrite

    csr = sp.csr_matrix(mat if not isinstance(mat, ExactMatrix) else mat.to_sparse())
    csr.sum_duplicates()
    csr.sort_indices()
    mmwrite(str(path), csr.tocoo(), field="integer")


def read_matrix_market(path) -> sp.csr_matrix:
    from scipy.io import mmread

    return sp.csr_matrix(mmread(str(path)), dtype=np.int64)
