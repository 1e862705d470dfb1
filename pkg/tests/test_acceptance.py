"""One PASS/FAIL line per acceptance criterion.

Criteria whose literal statement does not hold are run in full, print FAIL
with the observed counterexample, and are marked as strict expected failures.
The attainable parts of those criteria are asserted by separate tests below.
"""

import time
from pathlib import Path

import pytest

from conftest import record_criterion
from foxweave.complex_builder import (
    InvariantViolation,
    build_bicomplex,
    check_bicomplex,
    conormalize,
    max_degree,
    nerve_boundary,
    poincare_polynomial,
)
from foxweave.exact_linalg import GF, QQ, ZZ, chain_homology
from foxweave.fn_core import (
    FnTree,
    MonotoneMap,
    apply_monotone,
    enumerate_trees,
    identity_instances,
    twisted,
)
from foxweave.geometry import geometry_suite
from foxweave.spectral import column_homology, pages, verify_pages

PSI = MonotoneMap((2, 3, 5, 8), 9)
LAMBDA = FnTree(3, (3, 1, 2), (0, 1))


def _timed(fn):
    start = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - start


# ------------------------------------------------------------ criterion 1


@pytest.mark.xfail(strict=True, reason="the expected 2578 disagrees with the definition, which gives 2568")
def test_criterion_1_twisted_example():
    def compute():
        return apply_monotone(PSI, LAMBDA), twisted(PSI, LAMBDA)

    (image, tw), elapsed = _timed(compute)
    sigma = "".join(map(str, image.sigma))
    values = "".join(map(str, tw.values))
    ok = sigma == "126783459" and values == "2578" and elapsed < 1e-3
    record_criterion(
        1, ok, f"sigma={sigma} (expected 126783459), twisted={values} (expected 2578), {elapsed * 1e3:.3f} ms"
    )
    assert ok


def test_criterion_1_attainable_part():
    (image, tw), elapsed = _timed(lambda: (apply_monotone(PSI, LAMBDA), twisted(PSI, LAMBDA)))
    assert "".join(map(str, image.sigma)) == "126783459"
    # positions of 2, 8, 3, 5 in 126783459
    assert tw.values == (2, 5, 6, 8)
    assert elapsed < 1e-3


# ------------------------------------------------------------ criterion 2


def _identity_tally():
    tally = {}
    for m in (2, 3):
        for n in range(5):
            for tree in enumerate_trees(m, n):
                for inst in identity_instances(tree):
                    slot = tally.setdefault((m, inst.family, inst.extremal), [0, 0])
                    slot[0] += 1
                    slot[1] += not inst.holds
    return tally


@pytest.mark.xfail(strict=True, reason="mixed identities with an extremal coface fail; see ledger")
def test_criterion_2_cosimplicial_identities():
    tally, elapsed = _timed(_identity_tally)
    total = sum(t for t, _ in tally.values())
    failed = {k: b for k, (_, b) in tally.items() if b}
    ok = not failed and elapsed < 10
    detail = ", ".join(f"m={m} {fam} {'extremal' if ext else 'internal'}: {b} fail" for (m, fam, ext), b in sorted(failed.items()))
    record_criterion(2, ok, f"{total} instances in {elapsed:.1f} s; " + (detail or "all hold"))
    assert ok


def test_criterion_2_attainable_part():
    tally, elapsed = _timed(_identity_tally)
    assert elapsed < 10
    for (m, family, extremal), (total, bad) in tally.items():
        if not extremal or family in ("dd", "ss", "sd_inverse"):
            assert bad == 0, (m, family, extremal)


# ------------------------------------------------------------ criterion 3


def test_criterion_3_sphere_columns():
    def compute():
        out = {}
        for m in (2, 3, 4):
            diffs = [nerve_boundary(m, 2, d) for d in range(1, max_degree(m, 2) + 1)]
            out[m] = chain_homology(diffs, ZZ)
        return out

    result, elapsed = _timed(compute)
    expected = {2: (1, 1), 3: (1, 0, 1), 4: (1, 0, 0, 1)}
    ranks = {m: tuple(h.betti for h in hs) for m, hs in result.items()}
    torsion = any(h.torsion for hs in result.values() for h in hs)
    ok = ranks == expected and not torsion and elapsed < 5
    record_criterion(3, ok, f"ranks {ranks}, torsion {'present' if torsion else 'none'}, {elapsed:.2f} s")
    assert ok


# ------------------------------------------------------------ criterion 4


def test_criterion_4_configuration_columns():
    shapes = [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3)]

    def compute():
        out = {}
        for m, n in shapes:
            diffs = [nerve_boundary(m, n, d) for d in range(1, max_degree(m, n) + 1)]
            out[(m, n)] = tuple(h.betti for h in chain_homology(diffs, QQ))
        return out

    result, elapsed = _timed(compute)
    expected = {s: tuple(poincare_polynomial(*s)) for s in shapes}
    ok = all(result[s][: len(expected[s])] == expected[s] and not any(result[s][len(expected[s]):]) for s in shapes)
    ok = ok and elapsed < 120
    record_criterion(4, ok, ", ".join(f"{s}->{result[s]}" for s in shapes) + f", {elapsed:.1f} s")
    assert ok


# ------------------------------------------------------------ criterion 5


@pytest.mark.xfail(strict=True, reason="for m = 3 the extremal cofaces leave the nerve at n >= 3; see ledger")
def test_criterion_5_bicomplex_algebra():
    def compute():
        out = {}
        for m in (2, 3):
            try:
                out[m] = check_bicomplex(build_bicomplex(m, 4))
            except InvariantViolation as exc:
                out[m] = str(exc)
        return out

    result, elapsed = _timed(compute)
    ok = all(isinstance(v, dict) and all(v.values()) for v in result.values()) and elapsed < 60
    record_criterion(5, ok, f"m=2 n<=4: {result[2]}; m=3 n<=4: {result[3]}; {elapsed:.1f} s")
    assert ok


def test_criterion_5_attainable_part():
    for m, n_max in [(2, 4), (3, 2)]:
        assert all(check_bicomplex(build_bicomplex(m, n_max)).values())


# ------------------------------------------------------------ criterion 6


def test_criterion_6_page_recursion():
    def compute():
        checked = 0
        for n_max in (1, 2, 3, 4):
            b = build_bicomplex(2, n_max)
            for coeff in (QQ, GF(2)):
                ps = pages(b, coeff, r_max=4, verify=False)
                verify_pages(ps, coeff)
                for n in range(n_max + 1):
                    for d, h in enumerate(column_homology(b, n, coeff)):
                        assert ps[0].dims[(-n, d)] == h.betti
                checked += len(ps)
        return checked

    checked, elapsed = _timed(compute)
    ok = elapsed < 120
    record_criterion(
        6, ok, f"{checked} pages over Q and F_2 (m=2, n_max<=4): d_r^2=0, E_(r+1)=H(E_r), E_1=column homology; {elapsed:.1f} s"
    )
    assert ok


# ------------------------------------------------------------ criterion 7


def _normalization_report():
    out = {}
    for m, n_max in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)]:
        for orientation in ("default", "transposed"):
            try:
                b = build_bicomplex(m, n_max)
                c = conormalize(b)
            except InvariantViolation as exc:
                out[(m, n_max, orientation)] = f"raises: {exc}"
                continue
            plain = pages(b, QQ, 4, orientation=orientation)
            normal = pages(c, QQ, 4, orientation=orientation)
            out[(m, n_max, orientation)] = [
                (p.r, pq)
                for p, q in zip(plain, normal)
                for pq in p.dims
                if p.reliable[pq] and p.dims[pq] != q.dims.get(pq, 0)
            ]
    return out


@pytest.mark.xfail(strict=True, reason="E_1 differs in the default orientation and n_max = 3 does not normalize; see ledger")
def test_criterion_7_normalization_independence():
    report = _normalization_report()
    bad = {k: v for k, v in report.items() if v}
    ok = not bad
    detail = "; ".join(f"m={m} n_max={n} {o}: {v}" for (m, n, o), v in sorted(bad.items()))
    record_criterion(7, ok, detail or "all reliable dims agree")
    assert ok


def test_criterion_7_attainable_part():
    report = _normalization_report()
    for (m, n_max, orientation), result in report.items():
        if isinstance(result, str):
            assert n_max == 3
        elif orientation == "transposed":
            assert result == []
        else:
            assert all(r == 1 for r, _ in result)


# ------------------------------------------------------------ criterion 8


def test_criterion_8_geometry_suite():
    records, elapsed = _timed(lambda: geometry_suite(seed=42, samples=1000))
    worst = {}
    for r in records:
        worst[r.check] = max(worst.get(r.check, 0.0), r.max_deviation)
    ok = all(r.passed for r in records) and elapsed < 60 and len(records) == 40
    record_criterion(
        8, ok, ", ".join(f"{k} max {v:.3g}" for k, v in worst.items()) + f"; 1000 samples x 10 shapes, {elapsed:.1f} s"
    )
    assert ok


# ------------------------------------------------------------ criterion 9


def test_criterion_9_scope_statement():
    readme = Path(__file__).resolve().parents[1] / "README.md"
    text = readme.read_text(encoding="utf-8") if readme.exists() else ""
    ok = "## Scope" in text and "knot" in text
    record_criterion(
        9,
        ok,
        "convergence to knot-space cohomology (m >= 4) and non-collapse are out of desk scale; "
        "criteria 5-7 are the property-based substitutes (scope stated in README)",
    )
    assert ok
