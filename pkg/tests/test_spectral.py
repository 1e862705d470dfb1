import pytest

from foxweave.complex_builder import build_bicomplex, conormalize, poincare_polynomial
from foxweave.exact_linalg import GF, QQ, ZZ, ExactMatrix, as_exact, kernel_basis, rank
from foxweave.spectral import (
    SpectralError,
    column_homology,
    integral_column_homology,
    page_report,
    pages,
    parse_page_report,
    subquotient_pages,
    total_complex,
    total_homology,
    verify_pages,
)


@pytest.fixture(scope="module")
def b22():
    return build_bicomplex(2, 2)


@pytest.fixture(scope="module")
def b23():
    return build_bicomplex(2, 3)


def test_total_complex_degrees(b22):
    tc = total_complex(b22)
    assert tc.degrees == [-2, -1, 0]
    # total degree d - n
    assert tc.size(0) == b22.rank(0, 0)
    assert tc.size(-1) == b22.rank(0, 1) + b22.rank(1, 2)
    assert tc.size(-2) == b22.rank(0, 2)
    assert tc.check()


def test_total_differential_signs(b22):
    tc = total_complex(b22)
    # degree -1 holds (1, 2) then (0, 1); D is H on the first block and +V on the second
    D = tc.differential(-1).toarray()
    assert D.shape == (b22.rank(0, 2), tc.size(-1))
    assert tc.offsets[(1, 2)] == (-1, 0) and tc.offsets[(0, 1)] == (-1, 4)
    assert (D[:, :4] == b22.h(1, 2).toarray()).all()
    assert (D[:, 4:] == b22.v(0, 1).toarray()).all()


@pytest.mark.parametrize("coeff", [QQ, GF(2), GF(3)])
def test_first_page_is_column_homology(b23, coeff):
    page = pages(b23, coeff, r_max=1)[0]
    for n in range(b23.n_max + 1):
        for d, h in enumerate(column_homology(b23, n, coeff)):
            assert page.dims[(-n, d)] == h.betti


def test_first_page_column_zero(b22):
    page = pages(b22, QQ, r_max=1)[0]
    assert page.dims[(0, 0)] == 1


@pytest.mark.parametrize("n", [1, 2, 3])
def test_integral_columns_are_free(b23, n):
    hs = integral_column_homology(b23, n)
    assert [h.betti for h in hs][: len(poincare_polynomial(2, n))] == poincare_polynomial(2, n)
    assert all(h.torsion == () for h in hs)


def test_column_homology_missing_column(b22):
    with pytest.raises(SpectralError):
        column_homology(b22, 5)


@pytest.mark.parametrize("n_max", [2, 3])
@pytest.mark.parametrize("coeff", [QQ, GF(2)])
@pytest.mark.parametrize("orientation", ["default", "transposed"])
def test_pages_match_subquotient_oracle(n_max, coeff, orientation):
    b = build_bicomplex(2, n_max)
    fast = pages(b, coeff, r_max=4, orientation=orientation)
    slow = subquotient_pages(b, coeff, r_max=4, orientation=orientation)
    for page, oracle in zip(fast, slow):
        for pq, dim in page.dims.items():
            assert dim == oracle.get(pq, 0), (page.r, pq)


def test_pages_match_oracle_for_m3():
    b = build_bicomplex(3, 2)
    for page, oracle in zip(pages(b, QQ), subquotient_pages(b, QQ)):
        assert all(dim == oracle.get(pq, 0) for pq, dim in page.dims.items())


@pytest.mark.parametrize("n_max", [2, 3])
def test_rational_and_mod2_pages_agree(n_max):
    b = build_bicomplex(2, n_max)
    for pq_q, pq_2 in zip(pages(b, QQ), pages(b, GF(2))):
        assert pq_q.dims == pq_2.dims


def _d1_rank(b, d, n, ring):
    """Rank of the map induced by V from H_d(column n) to H_d(column n + 1)."""
    Z = kernel_basis(as_exact(b.h(d, n), ring), ring)
    V = as_exact(b.v(d, n), ring).to_dense()
    VZ = [[sum(row[j] * z[j] for j in range(len(z))) for row in V] for z in Z]
    B = as_exact(b.h(d + 1, n + 1), ring).transpose().to_dense()
    return rank(ExactMatrix.from_dense(VZ + B, ring)) - rank(ExactMatrix.from_dense(B, ring))


def test_mod2_second_page_differs_at_column_four():
    # columns have free homology, so E_1 agrees; the integral d_1 from
    # column 3 to column 4 in row 2 has an even elementary divisor
    b = build_bicomplex(2, 4)
    rational, mod2 = pages(b, QQ, r_max=2), pages(b, GF(2), r_max=2)
    assert rational[0].dims == mod2[0].dims
    assert (_d1_rank(b, 2, 3, QQ), _d1_rank(b, 2, 3, GF(2))) == (2, 1)
    diff = sorted(pq for pq in rational[1].dims if rational[1].dims[pq] != mod2[1].dims[pq])
    assert diff == [(-4, 2), (-3, 2)]
    assert mod2[1].dims[(-3, 2)] - rational[1].dims[(-3, 2)] == 1


@pytest.mark.parametrize("n_max", [2, 3])
def test_limit_page_sums_to_total_homology(n_max):
    b = build_bicomplex(2, n_max)
    limit = pages(b, QQ, r_max=n_max + 2)[-1]
    total = total_homology(b, QQ)
    for k, dim in total.items():
        assert sum(v for (p, q), v in limit.dims.items() if p + q == k) == dim


def test_pages_stabilize(b23):
    ps = pages(b23, QQ, r_max=7)
    assert ps[-1].dims == ps[-2].dims
    assert all(m.nnz == 0 for m in ps[-1].differentials.values())


def test_differential_bidegrees(b23):
    for page in pages(b23, QQ, r_max=3):
        for pq, mat in page.differentials.items():
            t = page.target(*pq)
            assert t == (pq[0] - page.r, pq[1] + page.r - 1)
            if mat.nnz:
                assert mat.shape == (page.dims[t], page.dims[pq])
            assert page.source(*t) == pq


def test_cohomological_variance(b23):
    hom = pages(b23, QQ, r_max=1)[0]
    coh = pages(b23, QQ, r_max=1, variance="cohomology")[0]
    assert hom.dims == coh.dims
    assert coh.target(0, 0) == (1, 0)


def test_reliability_flags(b23):
    for page in pages(b23, QQ, r_max=4):
        for (p, q), ok in page.reliable.items():
            assert ok == (-p + page.r - 1 <= b23.n_max)


def test_verify_pages_detects_corruption(b23):
    ps = pages(b23, QQ, r_max=3)
    ps[1].dims[(-2, 1)] += 1
    with pytest.raises(SpectralError):
        verify_pages(ps, QQ)


def test_pages_reject_bad_arguments(b22):
    with pytest.raises(SpectralError):
        pages(b22, QQ, r_max=0)
    with pytest.raises(SpectralError):
        pages(b22, ZZ)


def test_conormalized_pages_from_second_page(b22):
    # the normalized complex agrees from E_2 on in the default orientation;
    # at E_1 the column n = 1 and n = 2 entries differ (see ledger)
    plain = pages(b22, QQ, r_max=4)
    normal = pages(conormalize(b22), QQ, r_max=4)
    diff1 = sorted(pq for pq in plain[0].dims if plain[0].dims[pq] != normal[0].dims.get(pq, 0))
    assert diff1 == [(-2, 0), (-1, 0)]
    for r in (1, 2, 3):
        assert plain[r].dims == normal[r].dims
    t_plain = pages(b22, QQ, r_max=4, orientation="transposed")
    t_normal = pages(conormalize(b22), QQ, r_max=4, orientation="transposed")
    assert [p.dims for p in t_plain] == [p.dims for p in t_normal]


# ------------------------------------------------------------------ reports


def test_empty_report():
    assert page_report([], "csv") == "r,p,q,dim,reliable\n"
    assert parse_page_report(page_report([], "csv"), "csv") == []
    assert parse_page_report(page_report([], "json"), "json") == []


def test_report_round_trip(b23):
    ps = pages(b23, QQ, r_max=2)
    for fmt in ("csv", "json"):
        text = page_report(ps, fmt)
        rows = parse_page_report(text, fmt)
        assert len(rows) == sum(len(p.dims) for p in ps)
        for row in rows:
            page = ps[row["r"] - 1]
            assert page.dims[(row["p"], row["q"])] == row["dim"]
            assert page.reliable[(row["p"], row["q"])] == row["reliable"]
    assert page_report(ps, "csv") == page_report(pages(b23, QQ, r_max=2), "csv")
    assert '"differentials"' in page_report(ps, "json", include_matrices=True)
    with pytest.raises(SpectralError):
        page_report(ps, "xml")
