"""Spectral sequences of the bounded bicomplex.

A generator at bidegree ``(d, n)`` sits at ``(p, q) = (-n, d)`` with total
degree ``d - n``.  The default filtration is by ``p``; its page 0 differential
is the nerve boundary, so ``E_1`` is column homology.  With
``orientation="transposed"`` the filtration is by ``d`` instead and page 0 is
the coface differential.

Pages are read off a persistence pairing of the total complex: generators are
ordered so that every prefix is a subcomplex and compatible with the
filtration, the boundary matrix is column-reduced, and a pair whose ends lie
``r`` filtration steps apart is a ``d_r``.  Over the rationals the reduction is
fraction-free (``b * col - a * other`` then divide by the content).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .complex_builder import Bicomplex, MATRIX_DTYPE
from .exact_linalg import QQ, ZZ, ExactMatrix, HomologySummary, Ring, as_exact, chain_homology, kernel_basis, rank


class SpectralError(ValueError):
    pass


# ----------------------------------------------------------- total complex


@dataclass
class FilteredComplex:
    """Total complex with generators ``(n, d, idx)`` per total degree.

    ``gens[k]`` lists the generators of degree ``k`` in block order
    ``n`` descending, then ``d`` ascending, then the canonical chain index.
    """

    bicomplex: Bicomplex
    gens: dict[int, np.ndarray]
    offsets: dict[tuple[int, int], tuple[int, int]]  # (d, n) -> (k, start)
    _diff: dict[int, sp.csr_matrix] = field(default_factory=dict)

    @property
    def degrees(self) -> list[int]:
        return sorted(self.gens)

    def size(self, k: int) -> int:
        return len(self.gens.get(k, ()))

    def differential(self, k: int) -> sp.csr_matrix:
        """``D_k : C_k -> C_{k-1}`` with ``D = H + (-1)^d V``."""
        if k not in self._diff:
            b = self.bicomplex
            rows, cols, vals = [], [], []
            for (d, n), (kk, start) in self.offsets.items():
                if kk != k:
                    continue
                blocks = []
                if (d, n) in b.H and (d - 1, n) in self.offsets:
                    blocks.append((b.H[(d, n)], self.offsets[(d - 1, n)][1], 1))
                if (d, n) in b.V and (d, n + 1) in self.offsets:
                    blocks.append((b.V[(d, n)], self.offsets[(d, n + 1)][1], -1 if d % 2 else 1))
                for mat, row_start, sign in blocks:
                    coo = mat.tocoo()
                    rows.append(coo.row + row_start)
                    cols.append(coo.col + start)
                    vals.append(sign * coo.data)
            shape = (self.size(k - 1), self.size(k))
            if rows:
                mat = sp.csr_matrix(
                    (np.concatenate(vals).astype(MATRIX_DTYPE), (np.concatenate(rows), np.concatenate(cols))), shape=shape
                )
            else:
                mat = sp.csr_matrix(shape, dtype=MATRIX_DTYPE)
            mat.sum_duplicates()
            mat.eliminate_zeros()
            self._diff[k] = mat
        return self._diff[k]

    def check(self) -> bool:
        for k in self.degrees:
            prod = self.differential(k - 1) @ self.differential(k)
            prod.eliminate_zeros()
            if prod.nnz:
                return False
        return True


def total_complex(b: Bicomplex, check: bool = True) -> FilteredComplex:
    by_degree: dict[int, list[tuple[int, int]]] = {}
    for (d, n) in b.counts:
        by_degree.setdefault(d - n, []).append((d, n))
    gens, offsets = {}, {}
    for k, blocks in by_degree.items():
        blocks.sort(key=lambda dn: (-dn[1], dn[0]))
        parts, start = [], 0
        for d, n in blocks:
            r = b.counts[(d, n)]
            offsets[(d, n)] = (k, start)
            part = np.empty((r, 3), dtype=np.int64)
            part[:, 0], part[:, 1], part[:, 2] = n, d, np.arange(r)
            parts.append(part)
            start += r
        gens[k] = np.concatenate(parts) if parts else np.zeros((0, 3), dtype=np.int64)
    tc = FilteredComplex(b, gens, offsets)
    if check and not tc.check():
        from .complex_builder import InvariantViolation

        raise InvariantViolation("D^2 != 0 on the total complex")
    return tc


# ------------------------------------------------------------- persistence


def _field_of(coeff: Ring) -> Ring:
    if not coeff.is_field:
        raise SpectralError("spectral pages need field coefficients (q or fp:<prime>)")
    return coeff


def _levels(tc: FilteredComplex, k: int, variance: str, orientation: str) -> np.ndarray:
    g = tc.gens[k]
    n, d = g[:, 0], g[:, 1]
    base = -n if orientation == "default" else d
    # homology filtrations grow with p (resp. d); cohomology uses the dual order
    return base if variance == "homology" else -base


def _order(tc: FilteredComplex, k: int, variance: str, orientation: str) -> np.ndarray:
    """Permutation listing degree-``k`` generators in a filtration-compatible order."""
    g = tc.gens[k]
    n, d, idx = g[:, 0], g[:, 1], g[:, 2]
    if orientation == "default":
        primary, secondary = -n, d
    else:
        primary, secondary = d, -n
    if variance == "cohomology":
        primary, secondary = -primary, -secondary
    return np.lexsort((idx, secondary, primary))


@dataclass
class Pairing:
    """Persistence pairs per total degree, in homological or cohomological order.

    ``pairs[k]`` holds ``(a, b)`` where ``b`` is a generator of degree ``k``
    (the killer) and ``a`` one of degree ``k - 1`` (homology) or ``k + 1``
    (cohomology).  ``essential[k]`` are unpaired generators.
    """

    variance: str
    orientation: str
    levels: dict[int, np.ndarray]
    pairs: dict[int, list[tuple[int, int]]]
    essential: dict[int, list[int]]


def _reduce_columns(columns: list[dict[int, int]], ring: Ring, skip: set[int]) -> tuple[dict[int, int], list[int]]:
    """Standard left-to-right column reduction; returns ``{low_row: column}`` and zero columns."""
    p = ring.p if ring.kind == "fp" else 0
    pivot_of: dict[int, int] = {}
    reduced: dict[int, dict[int, int]] = {}
    zero = []
    for j, col in enumerate(columns):
        if j in skip:
            zero.append(j)
            continue
        c = dict(col)
        while c:
            low = max(c)
            other = pivot_of.get(low)
            if other is None:
                break
            oc = reduced[other]
            if p:
                f = c[low] * pow(oc[low], -1, p) % p
                for r, v in oc.items():
                    w = (c.get(r, 0) - f * v) % p
                    if w:
                        c[r] = w
                    else:
                        c.pop(r, None)
            else:
                a, b = c[low], oc[low]
                g = math.gcd(a, b)
                ma, mb = a // g, b // g
                new = {r: mb * v for r, v in c.items()} if mb != 1 else c
                for r, v in oc.items():
                    w = new.get(r, 0) - ma * v
                    if w:
                        new[r] = w
                    else:
                        new.pop(r, None)
                cont = 0
                for v in new.values():
                    cont = math.gcd(cont, v)
                    if cont == 1:
                        break
                c = {r: v // cont for r, v in new.items()} if cont > 1 else new
        if c:
            low = max(c)
            pivot_of[low] = j
            reduced[j] = c
        else:
            zero.append(j)
    return pivot_of, zero


def persistence(tc: FilteredComplex, coeff: Ring = QQ, variance: str = "homology", orientation: str = "default") -> Pairing:
    ring = _field_of(coeff)
    if variance not in ("homology", "cohomology"):
        raise SpectralError(f"unknown variance {variance!r}")
    if orientation not in ("default", "transposed"):
        raise SpectralError(f"unknown orientation {orientation!r}")
    degrees = tc.degrees
    orders = {k: _order(tc, k, variance, orientation) for k in degrees}
    ranks = {k: np.empty(len(o), dtype=np.int64) for k, o in orders.items()}
    for k, o in orders.items():
        ranks[k][o] = np.arange(len(o))
    levels = {k: _levels(tc, k, variance, orientation) for k in degrees}
    step = -1 if variance == "homology" else 1
    pairs: dict[int, list[tuple[int, int]]] = {k: [] for k in degrees}
    killed: dict[int, set[int]] = {k: set() for k in degrees}  # generators that are targets
    # process so that the clearing trick applies: targets of degree k + step are
    # reduced first, their pivots are known zero columns in degree k + step.
    for k in sorted(degrees, reverse=(variance == "homology")):
        tgt = k + step
        if tgt not in tc.gens:
            continue
        mat = tc.differential(k) if variance == "homology" else tc.differential(tgt).T
        mat = sp.csc_matrix(mat)
        order_src, rank_tgt = orders[k], ranks[tgt]
        columns = []
        for j in order_src:
            lo, hi = mat.indptr[j], mat.indptr[j + 1]
            col = {}
            for r, v in zip(rank_tgt[mat.indices[lo:hi]].tolist(), mat.data[lo:hi].tolist()):
                v = ring.reduce(v)
                if v:
                    col[r] = v
            columns.append(col)
        skip = {int(ranks[k][g]) for g in killed[k]}
        pivot_of, _ = _reduce_columns(columns, ring, skip)
        for low, j in pivot_of.items():
            a = int(orders[tgt][low])
            bgen = int(order_src[j])
            pairs[k].append((a, bgen))
            killed[tgt].add(a)
    essential = {}
    for k in degrees:
        used = set(killed[k]) | {b for _, b in pairs[k]}
        essential[k] = [g for g in range(tc.size(k)) if g not in used]
    return Pairing(variance, orientation, levels, pairs, essential)


# --------------------------------------------------------------- pages


@dataclass
class SpectralPage:
    """One page: dimensions, reliability flags and ``d_r`` in the surviving basis.

    ``basis[(p, q)]`` lists ``(k, generator)`` ids spanning ``E_r^{p,q}``;
    ``differentials[(p, q)]`` is the matrix of ``d_r`` out of ``(p, q)``.
    """

    r: int
    variance: str
    orientation: str
    dims: dict[tuple[int, int], int]
    reliable: dict[tuple[int, int], bool]
    basis: dict[tuple[int, int], list[tuple[int, int]]]
    differentials: dict[tuple[int, int], sp.csr_matrix]

    def target(self, p: int, q: int) -> tuple[int, int]:
        r = self.r
        if self.orientation == "default":
            return (p - r, q + r - 1) if self.variance == "homology" else (p + r, q - r + 1)
        return (p + r - 1, q - r) if self.variance == "homology" else (p - r + 1, q + r)

    def source(self, p: int, q: int) -> tuple[int, int]:
        r = self.r
        if self.orientation == "default":
            return (p + r, q - r + 1) if self.variance == "homology" else (p - r, q + r - 1)
        return (p + r - 1, q + r) if self.variance == "homology" else (p - r + 1, q - r)

    def nonzero(self) -> dict[tuple[int, int], int]:
        return {pq: v for pq, v in self.dims.items() if v}


def _bidegree(tc: FilteredComplex, k: int, g: int) -> tuple[int, int]:
    n, d, _ = tc.gens[k][g]
    return (-int(n), int(d))


def _reliable(n: int, r: int, n_max: int, orientation: str, variance: str) -> bool:
    if orientation == "default":
        # E_r at column n only sees d_1..d_{r-1}, which reach column n + r - 1
        return n + r - 1 <= n_max
    return n + max(1, r - 1) <= n_max


def pages(
    b: Bicomplex,
    coeff: Ring | str = QQ,
    r_max: int = 4,
    variance: str = "homology",
    orientation: str = "default",
    verify: bool = True,
) -> list[SpectralPage]:
    """Pages ``E_1..E_{r_max}``; each is re-verified against its predecessor when ``verify``."""
    coeff = Ring.parse(coeff) if isinstance(coeff, str) else coeff
    _field_of(coeff)
    if r_max < 1:
        raise SpectralError("r_max must be at least 1")
    tc = total_complex(b)
    pairing = persistence(tc, coeff, variance, orientation)
    bidegrees = sorted((-n, d) for (d, n) in b.counts)
    survivors = []  # (gap or None, bidegree, id)
    killers = []  # (gap, source bidegree, source id, target bidegree, target id)
    for k, plist in pairing.pairs.items():
        other = k - 1 if variance == "homology" else k + 1
        for a, bg in plist:
            gap = int(pairing.levels[k][bg] - pairing.levels[other][a])
            src, tgt = _bidegree(tc, k, bg), _bidegree(tc, other, a)
            survivors.append((gap, tgt, (other, a)))
            survivors.append((gap, src, (k, bg)))
            killers.append((gap, src, (k, bg), tgt, (other, a)))
    for k, gl in pairing.essential.items():
        for g in gl:
            survivors.append((None, _bidegree(tc, k, g), (k, g)))
    out = []
    for r in range(1, r_max + 1):
        basis: dict[tuple[int, int], list[tuple[int, int]]] = {pq: [] for pq in bidegrees}
        for gap, pq, gid in survivors:
            if gap is None or gap >= r:
                basis[pq].append(gid)
        for lst in basis.values():
            lst.sort()
        position = {pq: {gid: i for i, gid in enumerate(lst)} for pq, lst in basis.items()}
        page = SpectralPage(r, variance, orientation, {}, {}, basis, {})
        entries: dict[tuple[int, int], tuple[list[int], list[int]]] = {pq: ([], []) for pq in bidegrees}
        for gap, src, sid, tgt, tid in killers:
            if gap == r:
                rows, cols = entries[src]
                rows.append(position[tgt][tid])
                cols.append(position[src][sid])
        for pq in bidegrees:
            page.dims[pq] = len(basis[pq])
            page.reliable[pq] = _reliable(-pq[0], r, b.n_max, orientation, variance)
            rows, cols = entries[pq]
            shape = (len(basis.get(page.target(*pq), ())), len(basis[pq]))
            page.differentials[pq] = sp.csr_matrix(
                (np.ones(len(rows), dtype=MATRIX_DTYPE), (rows, cols)), shape=shape
            )
        out.append(page)
    if verify:
        verify_pages(out, coeff)
    return out


def verify_pages(page_list: list[SpectralPage], coeff: Ring = QQ) -> None:
    """Check ``d_r^2 = 0`` and ``dim E_{r+1} = dim H(E_r, d_r)`` exactly."""
    for page, nxt in zip(page_list, page_list[1:] + [None]):
        for pq, mat in page.differentials.items():
            t = page.target(*pq)
            if t in page.differentials:
                comp = page.differentials[t] @ mat
                comp.eliminate_zeros()
                if comp.nnz:
                    raise SpectralError(f"d_{page.r}^2 != 0 at {pq}")
        if nxt is None:
            continue
        for pq, dim in page.dims.items():
            out_rank = rank(as_exact(page.differentials[pq], coeff))
            src = page.source(*pq)
            in_rank = rank(as_exact(page.differentials[src], coeff)) if src in page.differentials else 0
            if nxt.dims[pq] != dim - out_rank - in_rank:
                raise SpectralError(f"E_{nxt.r} at {pq} is not the homology of E_{page.r}")


def column_homology(b: Bicomplex, n: int, coeff: Ring | str = QQ) -> list[HomologySummary]:
    """Homology of the nerve column ``n`` (degrees ``0..max``) through exact linear algebra."""
    coeff = Ring.parse(coeff) if isinstance(coeff, str) else coeff
    degrees = sorted(d for (d, nn) in b.counts if nn == n)
    if not degrees:
        raise SpectralError(f"column n={n} is not populated")
    diffs = [as_exact(b.h(d, n), coeff) for d in degrees[1:]]
    if not diffs:
        dim = b.rank(degrees[0], n)
        return [HomologySummary(dim, 0, dim)]
    return chain_homology(diffs, coeff)


def integral_column_homology(b: Bicomplex, n: int) -> list[HomologySummary]:
    return column_homology(b, n, ZZ)


def total_homology(b: Bicomplex, coeff: Ring | str = QQ) -> dict[int, int]:
    coeff = Ring.parse(coeff) if isinstance(coeff, str) else coeff
    tc = total_complex(b)
    out = {}
    for k in tc.degrees:
        kernel = tc.size(k) - rank(as_exact(tc.differential(k), coeff))
        image = rank(as_exact(tc.differential(k + 1), coeff)) if k + 1 in tc.gens else 0
        out[k] = kernel - image
    return out


# ------------------------------------------------- dense subquotient oracle


def subquotient_pages(
    b: Bicomplex, coeff: Ring | str = QQ, r_max: int = 4, orientation: str = "default"
) -> list[dict[tuple[int, int], int]]:
    """Homological page dimensions from ``E_r = Z_r / (Z_{r-1}^{-} + B_{r-1})``.

    Independent dense computation, meant for small complexes only.  With
    levels ``l`` increasing along the filtration:
    ``Z_r^l = {x in F_l : Dx in F_{l-r}}`` and
    ``E_r^l = Z_r^l / (Z_{r-1}^{l-1} + D Z_{r-1}^{l+r-1})``.
    """
    coeff = Ring.parse(coeff) if isinstance(coeff, str) else coeff
    tc = total_complex(b)
    results = [dict() for _ in range(r_max)]
    for k in tc.degrees:
        g = tc.gens[k]
        lev = -g[:, 0] if orientation == "default" else g[:, 1]
        D = as_exact(tc.differential(k), coeff).to_dense()
        D_up = as_exact(tc.differential(k + 1), coeff).to_dense() if k + 1 in tc.gens else []
        lower = tc.gens.get(k - 1, np.zeros((0, 3), dtype=np.int64))
        lev_lo = -lower[:, 0] if orientation == "default" else lower[:, 1]
        upper = tc.gens.get(k + 1, np.zeros((0, 3), dtype=np.int64))
        lev_up = -upper[:, 0] if orientation == "default" else upper[:, 1]

        def Z(level, r, lev_src, D_src, lev_dst):
            """Basis of ``Z_r^level`` as dense vectors on the source generators."""
            cols = [j for j in range(len(lev_src)) if lev_src[j] <= level]
            rows = [i for i in range(len(lev_dst)) if lev_dst[i] > level - r]
            if not cols:
                return []
            if rows:
                sub = ExactMatrix.from_dense([[D_src[i][j] for j in cols] for i in rows], coeff)
                ker = kernel_basis(sub, coeff)
            else:
                ker = [[int(a == b) for a in range(len(cols))] for b in range(len(cols))]
            out = []
            for v in ker:
                full = [0] * len(lev_src)
                for j, x in zip(cols, v):
                    full[j] = x
                out.append(full)
            return out

        levels = sorted({int(x) for x in lev})
        for lvl in levels:
            n_here = [j for j in range(len(lev)) if lev[j] == lvl]
            d_here = int(g[n_here[0], 1])
            pq = (-int(g[n_here[0], 0]), d_here) if orientation == "default" else None
            for r in range(1, r_max + 1):
                zr = Z(lvl, r, lev, D, lev_lo)
                denom = Z(lvl - 1, r - 1, lev, D, lev_lo)
                if len(upper):
                    zup = Z(lvl + r - 1, r - 1, lev_up, D_up, lev)
                    for v in zup:
                        denom.append([sum(D_up[i][j] * v[j] for j in range(len(v))) for i in range(len(lev))])
                dim_z = rank(ExactMatrix.from_dense(zr, coeff)) if zr else 0
                dim_den = rank(ExactMatrix.from_dense(denom, coeff)) if denom else 0
                key = pq if pq is not None else _transposed_key(g, lvl, k)
                results[r - 1][key] = dim_z - dim_den
    return results


def _transposed_key(g: np.ndarray, lvl: int, k: int) -> tuple[int, int]:
    # level is d, total degree k = d - n
    return (-(lvl - k), lvl)


# --------------------------------------------------------------- reports


def page_rows(page_list: Iterable[SpectralPage]) -> list[dict]:
    rows = []
    for page in page_list:
        for (p, q) in sorted(page.dims):
            rows.append({"r": page.r, "p": p, "q": q, "dim": page.dims[(p, q)], "reliable": page.reliable[(p, q)]})
    return rows


def page_report(page_list: Iterable[SpectralPage], fmt: str = "csv", include_matrices: bool = False) -> str:
    page_list = list(page_list)
    rows = page_rows(page_list)
    if fmt == "csv":
        buf = io.StringIO(newline="")
        writer = csv.DictWriter(buf, fieldnames=["r", "p", "q", "dim", "reliable"], lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, "reliable": str(row["reliable"]).lower()})
        return buf.getvalue()
    if fmt == "json":
        data: dict = {"rows": rows}
        if include_matrices:
            data["differentials"] = [
                {
                    "r": page.r,
                    "p": pq[0],
                    "q": pq[1],
                    "shape": list(mat.shape),
                    "entries": [[int(i), int(j), int(v)] for i, j, v in zip(*sp.find(mat))],
                }
                for page in page_list
                for pq, mat in sorted(page.differentials.items())
                if mat.nnz
            ]
        return json.dumps(data, sort_keys=True, indent=1) + "\n"
    raise SpectralError(f"unknown report format {fmt!r}")


def parse_page_report(text: str, fmt: str = "json") -> list[dict]:
    if fmt == "json":
        return json.loads(text)["rows"] if text.strip() else []
    reader = csv.DictReader(io.StringIO(text))
    return [
        {"r": int(r["r"]), "p": int(r["p"]), "q": int(r["q"]), "dim": int(r["dim"]), "reliable": r["reliable"] == "true"}
        for r in reader
    ]
