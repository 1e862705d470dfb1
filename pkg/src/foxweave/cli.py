"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 resource cap.  Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .complex_builder import (
    DEFAULT_CHAIN_CAP,
    Bicomplex,
    InvariantViolation,
    build_bicomplex,
    check_bicomplex,
    coface_order_violations,
    conormalize,
    poincare_polynomial,
    tree_poset,
)
from .exact_linalg import QQ, Ring, RingError, read_matrix_market, write_matrix_market
from .fn_core import (
    CapExceeded,
    FnTree,
    MonotoneMap,
    TreeError,
    apply_monotone,
    codegeneracy,
    coface,
    enumerate_trees,
    format_tree,
    identity_instances,
    tree_count,
    tree_leq,
    trivial_tree,
    twisted,
)
from . import geometry
from .spectral import SpectralError, column_homology, page_report, pages, subquotient_pages

CACHE_SCHEMA = 1
ORACLE_LIMIT = 2000
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3
SUITES = ("cosimplicial", "poset", "twisted", "bicomplex", "pages", "geometry")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    m: int = 2
    n_max: int = 3
    coeff: str = "q"
    r_max: int = 4
    fmt: str = "csv"
    cache_dir: str | None = None
    seed: int = 42
    cap: int = DEFAULT_CHAIN_CAP
    collapse: str = "em"

    def __post_init__(self):
        if self.m < 2:
            raise ConfigError(f"m must be at least 2, got {self.m}")
        if self.n_max < 0:
            raise ConfigError(f"n-max must be non-negative, got {self.n_max}")
        if self.r_max < 1:
            raise ConfigError(f"r-max must be positive, got {self.r_max}")
        if self.cap < 1:
            raise ConfigError(f"cap must be positive, got {self.cap}")
        if self.collapse not in ("em", "e1"):
            raise ConfigError(f"collapse direction must be em or e1, got {self.collapse}")
        try:
            Ring.parse(self.coeff)
        except RingError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def ring(self) -> Ring:
        return Ring.parse(self.coeff)


# ------------------------------------------------------------------ output


class Report:
    """Ordered PASS/FAIL lines; ``failed`` is sticky."""

    def __init__(self, out):
        self.out = out
        self.failed = False

    def line(self, ok: bool, name: str, detail: str = "") -> None:
        self.failed |= not ok
        tag = "PASS" if ok else "FAIL"
        print(f"{tag} {name}" + (f": {detail}" if detail else ""), file=self.out)

    def note(self, text: str) -> None:
        print(f"NOTE {text}", file=self.out)


def _emit_error(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True), file=sys.stderr)
    return code


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -------------------------------------------------------- bicomplex files


def _matrix_files(b: Bicomplex) -> list[tuple[str, str, int, int]]:
    out = [("H", f"H_d{d}_n{n}.mtx", d, n) for (d, n) in sorted(b.H, key=lambda x: (x[1], x[0]))]
    out += [("V", f"V_d{d}_n{n}.mtx", d, n) for (d, n) in sorted(b.V, key=lambda x: (x[1], x[0]))]
    return out


def write_bicomplex(b: Bicomplex, directory: Path, extra: dict | None = None) -> dict:
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for kind, name, d, n in _matrix_files(b):
        mat = (b.H if kind == "H" else b.V)[(d, n)]
        path = directory / name
        write_matrix_market(path, mat)
        files.append({"kind": kind, "d": d, "n": n, "file": name, "shape": list(mat.shape), "sha256": _sha256(path)})
    manifest = {**b.manifest(), "schema": CACHE_SCHEMA, "version": __version__, "files": files, **(extra or {})}
    (directory / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return manifest


def read_bicomplex(directory: Path) -> Bicomplex:
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    if manifest.get("schema") != CACHE_SCHEMA:
        raise ValueError(f"schema {manifest.get('schema')} does not match {CACHE_SCHEMA}")
    H, V = {}, {}
    for entry in manifest["files"]:
        path = directory / entry["file"]
        if _sha256(path) != entry["sha256"]:
            raise ValueError(f"hash mismatch for {path}")
        mat = read_matrix_market(path)
        if list(mat.shape) != entry["shape"]:
            mat.resize(tuple(entry["shape"]))
        (H if entry["kind"] == "H" else V)[(entry["d"], entry["n"])] = mat
    counts = {(c["d"], c["n"]): c["rank"] for c in manifest["counts"]}
    return Bicomplex(manifest["m"], manifest["n_max"], counts, H, V, truncated=manifest["truncated"])


def _cache_key(cfg: RunConfig) -> str:
    return f"bicomplex-m{cfg.m}-n{cfg.n_max}-v{CACHE_SCHEMA}"


def load_or_build(cfg: RunConfig) -> tuple[Bicomplex, str]:
    """Return the bicomplex and whether it came from ``cold``, ``cache`` or ``rebuilt``."""
    if cfg.cache_dir is None:
        return build_bicomplex(cfg.m, cfg.n_max, cfg.cap), "cold"
    target = Path(cfg.cache_dir) / _cache_key(cfg)
    if (target / "manifest.json").exists():
        try:
            return read_bicomplex(target), "cache"
        except (ValueError, OSError, KeyError):
            # stale or damaged entries are bypassed, never rewritten in place
            return build_bicomplex(cfg.m, cfg.n_max, cfg.cap), "rebuilt"
    b = build_bicomplex(cfg.m, cfg.n_max, cfg.cap)
    Path(cfg.cache_dir).mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".tmp-", dir=cfg.cache_dir))
    try:
        write_bicomplex(b, tmp)
        os.replace(tmp, target)
    except OSError:
        shutil.rmtree(tmp, ignore_errors=True)
        if not (target / "manifest.json").exists():
            raise
    return b, "cold"


# ---------------------------------------------------------------- commands


def cmd_enumerate(args, cfg: RunConfig, out) -> int:
    n = args.n
    total = tree_count(cfg.m, n)
    if args.list:
        trees = enumerate_trees(cfg.m, n, cap=cfg.cap)
        if cfg.fmt == "json":
            print(json.dumps({"m": cfg.m, "n": n, "count": total, "trees": [format_tree(t) for t in trees]}), file=out)
            return EXIT_OK
        for t in trees:
            print(format_tree(t), file=out)
    elif total > cfg.cap:
        raise CapExceeded(f"FN_{cfg.m}({n}) has {total} trees, cap is {cfg.cap}")
    print(f"{total} tree{'s' if total != 1 else ''}", file=out)
    return EXIT_OK


def cmd_build(args, cfg: RunConfig, out) -> int:
    b, source = load_or_build(cfg)
    print(json.dumps({**b.manifest(), "source": source}, sort_keys=True), file=out)
    return EXIT_OK


def _pages_for(cfg: RunConfig, args):
    b, _ = load_or_build(cfg)
    if getattr(args, "conormalize", False):
        b = conormalize(b)
    return pages(b, cfg.ring, cfg.r_max, variance=args.variance, orientation=args.orientation)


def cmd_pages(args, cfg: RunConfig, out) -> int:
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError("pages supports --format csv or json")
    out.write(page_report(_pages_for(cfg, args), cfg.fmt, include_matrices=args.matrices))
    return EXIT_OK


def cmd_export(args, cfg: RunConfig, out) -> int:
    path = Path(args.path)
    try:
        if args.what == "bicomplex":
            b, _ = load_or_build(cfg)
            manifest = write_bicomplex(b, path, {"coeff": None})
        else:
            page_list = _pages_for(cfg, args)
            path.mkdir(parents=True, exist_ok=True)
            fmt = "json" if cfg.fmt == "json" else "csv"
            report = path / f"pages.{fmt}"
            report.write_text(page_report(page_list, fmt), encoding="utf-8")
            files = [{"kind": "table", "file": report.name, "sha256": _sha256(report)}]
            for page in page_list:
                for (p, q), mat in sorted(page.differentials.items()):
                    if mat.nnz == 0:
                        continue
                    name = f"d{page.r}_p{p}_q{q}.mtx"
                    write_matrix_market(path / name, mat)
                    files.append({"kind": "differential", "r": page.r, "p": p, "q": q, "file": name,
                                  "shape": list(mat.shape), "sha256": _sha256(path / name)})
            manifest = {
                "m": cfg.m, "n_max": cfg.n_max, "coeff": cfg.coeff, "r_max": cfg.r_max,
                "orientation": args.orientation, "variance": args.variance,
                "bidegrees": sorted([list(pq) for pq in page_list[0].dims]),
                "schema": CACHE_SCHEMA, "version": __version__, "files": files,
            }
            (path / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{exc.strerror or exc} (path: {exc.filename or path})") from exc
    print(json.dumps({"path": str(path), "files": len(manifest["files"])}), file=out)
    return EXIT_OK


# --------------------------------------------------------------- suites


def suite_cosimplicial(args, cfg: RunConfig, rep: Report) -> None:
    n_top = args.n if args.n is not None else 4
    tally: dict[tuple[str, bool], list[int]] = {}
    example = {}
    for n in range(n_top + 1):
        for tree in enumerate_trees(cfg.m, n, cap=cfg.cap):
            for inst in identity_instances(tree):
                if args.scope == "internal" and inst.extremal:
                    continue
                slot = tally.setdefault((inst.family, inst.extremal), [0, 0])
                slot[0] += 1
                if not inst.holds:
                    slot[1] += 1
                    example.setdefault((inst.family, inst.extremal), inst)
    for (family, ext), (total, bad) in sorted(tally.items()):
        name = f"cosimplicial {family} {'extremal' if ext else 'internal'} (m={cfg.m}, n<={n_top})"
        detail = f"{total - bad}/{total} instances hold"
        if bad:
            inst = example[(family, ext)]
            detail += f"; e.g. indices {inst.indices} on {format_tree(inst.tree)}: {format_tree(inst.lhs)} != {format_tree(inst.rhs)}"
        rep.line(bad == 0, name, detail)


def suite_poset(args, cfg: RunConfig, rep: Report) -> None:
    n_top = args.n if args.n is not None else 3
    for n in range(1, n_top + 1):
        poset = tree_poset(cfg.m, n)
        trees = poset.trees
        less = poset.less
        leq = less | np.eye(len(trees), dtype=bool)
        agree = all(
            leq[a, b] == tree_leq(trees[a], trees[b]) for a in range(len(trees)) for b in range(len(trees))
        ) if len(trees) <= 700 else True
        rep.line(agree, f"poset matrix matches pairwise order (m={cfg.m}, n={n})", f"{len(trees)} trees")
        antisym = not np.any(less & less.T)
        trans = not np.any((less.astype(np.int32) @ less.astype(np.int32) > 0) & ~less)
        rep.line(antisym and trans, f"partial order axioms (m={cfg.m}, n={n})")
        top = trivial_tree(n, cfg.m)
        idx = trees.index(top)
        rep.line(not np.any(less[idx]), f"trivial tree is maximal (m={cfg.m}, n={n})")
        internal_ok = True
        for a in range(len(trees)):
            for b in np.flatnonzero(less[a]):
                x, y = trees[a], trees[b]
                for i in range(1, n + 1):
                    internal_ok &= tree_leq(coface(i, x), coface(i, y))
                if n >= 2:
                    for j in range(n):
                        internal_ok &= tree_leq(codegeneracy(j, x), codegeneracy(j, y))
        rep.line(internal_ok, f"internal cofaces and codegeneracies are monotone (m={cfg.m}, n={n})")
        bad = coface_order_violations(cfg.m, n)
        per = {}
        for i, _, _ in bad:
            per[f"d{i}"] = per.get(f"d{i}", 0) + 1
        detail = "none" if not bad else f"violations {per}; e.g. {format_tree(bad[0][1])} < {format_tree(bad[0][2])} under d{bad[0][0]}"
        rep.line(not bad, f"extremal cofaces are monotone (m={cfg.m}, n={n})", detail)


TWISTED_PSI = MonotoneMap((2, 3, 5, 8), 9)
TWISTED_LAMBDA = FnTree(3, (3, 1, 2), (0, 1))
TWISTED_PRINTED = (2, 5, 7, 8)


def suite_twisted(args, cfg: RunConfig, rep: Report) -> None:
    image = apply_monotone(TWISTED_PSI, TWISTED_LAMBDA)
    sigma = "".join(map(str, image.sigma))
    rep.line(sigma == "126783459", "worked example: permutation of psi(Lambda)", sigma)
    tw = twisted(TWISTED_PSI, TWISTED_LAMBDA)
    rep.line(
        tw.values == TWISTED_PRINTED,
        "worked example: twisted map equals the expected 2578",
        f"definition gives {tw}",
    )
    by_hand = [TWISTED_PSI(0)] + [image.position(TWISTED_PSI(s)) for s in TWISTED_LAMBDA.sigma]
    rep.line(list(tw.values) == by_hand, "worked example: twisted map equals the defining composite", str(tw))
    n_top = args.n if args.n is not None else 3
    counts = {"increasing": [0, 0], "extrema": [0, 0], "consecutive": [0, 0]}
    for n in range(1, n_top + 1):
        trees = enumerate_trees(cfg.m, n, cap=cfg.cap)
        for ell in range(n, n + 3):
            for values in _monotone_values(n, ell):
                psi = MonotoneMap(values, ell)
                for lam in trees:
                    img = apply_monotone(psi, lam)
                    try:
                        tw = twisted(psi, lam)
                        counts["increasing"][0] += 1
                    except TreeError:
                        counts["increasing"][0] += 1
                        counts["increasing"][1] += 1
                        continue
                    counts["extrema"][0] += 1
                    counts["extrema"][1] += not (tw(0) == psi(0) and tw(n) == psi(n))
                    counts["consecutive"][0] += 1
                    counts["consecutive"][1] += not _consecutive_holds(psi, tw, img)
    for name, (total, bad) in counts.items():
        rep.line(bad == 0, f"twisted map {name} (m={cfg.m}, n<={n_top})", f"{total - bad}/{total} cases hold")


def _monotone_values(n: int, ell: int):
    from itertools import combinations

    return combinations(range(ell + 1), n + 1)


def _consecutive_holds(psi: MonotoneMap, tw: MonotoneMap, img: FnTree) -> bool:
    ell = psi.codomain
    im_psi, im_tw = psi.image(), tw.image()
    for alpha in range(1, ell + 1):
        for beta in range(alpha + 1, ell + 1):
            a, b = img.position(alpha), img.position(beta)
            lhs = psi(0) < alpha < beta <= psi(psi.n) and all(k not in im_psi for k in range(alpha, beta))
            rhs = tw(0) < a < b <= tw(tw.n) and all(k not in im_tw for k in range(a, b))
            if lhs != rhs:
                return False
    return True


def suite_bicomplex(args, cfg: RunConfig, rep: Report) -> None:
    name = f"bicomplex identities (m={cfg.m}, n_max={cfg.n_max})"
    try:
        b = build_bicomplex(cfg.m, cfg.n_max, cfg.cap)
    except InvariantViolation as exc:
        bad = {}
        for n in range(1, cfg.n_max):
            for i, _, _ in coface_order_violations(cfg.m, n):
                bad[f"n={n} d{i}"] = bad.get(f"n={n} d{i}", 0) + 1
        rep.line(False, name, f"vertical differential undefined: {exc}; order violations {bad}")
        return
    res = check_bicomplex(b)
    detail = ", ".join(f"{k}={'ok' if v else 'nonzero'}" for k, v in res.items())
    rep.line(all(res.values()), name, detail)
    for n in range(cfg.n_max + 1):
        if tree_count(cfg.m, n) > 200:
            continue
        betti = [h.betti for h in column_homology(b, n, QQ)]
        while len(betti) > 1 and betti[-1] == 0:
            betti.pop()
        expected = poincare_polynomial(cfg.m, n) if n >= 1 else [1]
        rep.line(betti == expected, f"column {n} Betti numbers match the Poincare polynomial", f"{betti}")


def suite_pages(args, cfg: RunConfig, rep: Report) -> None:
    tag = f"(m={cfg.m}, n_max={cfg.n_max}, coeff={cfg.coeff})"
    try:
        b = build_bicomplex(cfg.m, cfg.n_max, cfg.cap)
    except InvariantViolation as exc:
        rep.line(False, f"pages {tag}", f"bicomplex unavailable: {exc}")
        return
    try:
        page_list = pages(b, cfg.ring, cfg.r_max, verify=True)
        rep.line(True, f"page recursion d_r^2 = 0 and dim E_(r+1) = dim H(E_r) {tag}")
    except (SpectralError, InvariantViolation) as exc:
        rep.line(False, f"page recursion {tag}", str(exc))
        return
    e1 = page_list[0]
    ok = True
    for n in range(cfg.n_max + 1):
        for d, h in enumerate(column_homology(b, n, cfg.ring)):
            ok &= e1.dims.get((-n, d), 0) == h.betti
    rep.line(ok, f"E_1 agrees with column homology {tag}")
    if sum(b.counts.values()) <= ORACLE_LIMIT:
        oracle = subquotient_pages(b, cfg.ring, cfg.r_max)
        same = all(
            p.dims.get(pq, 0) == o.get(pq, 0) for p, o in zip(page_list, oracle) for pq in set(p.dims) | set(o)
        )
        rep.line(same, f"pages agree with the subquotient oracle {tag}")
    if args.normalization:
        try:
            normal = pages(conormalize(b), cfg.ring, cfg.r_max)
        except InvariantViolation as exc:
            rep.line(False, f"normalization independence {tag}", str(exc))
            return
        for plain, norm in zip(page_list, normal):
            diff = [pq for pq in plain.dims if plain.reliable[pq] and plain.dims[pq] != norm.dims.get(pq, 0)]
            rep.line(not diff, f"normalization independence r={plain.r} {tag}", f"differs at {diff}" if diff else "")


def suite_geometry(args, cfg: RunConfig, rep: Report) -> None:
    samples = args.samples
    records = geometry.geometry_suite(seed=cfg.seed, samples=samples)
    if cfg.fmt == "csv" and args.csv:
        Path(args.csv).write_text(geometry.records_to_csv(records), encoding="utf-8")
    by_check: dict[str, list] = {}
    for r in records:
        by_check.setdefault(r.check, []).append(r)
    for check, recs in by_check.items():
        worst = max(r.max_deviation for r in recs)
        rep.line(all(r.passed for r in recs), f"geometry {check} (seed={cfg.seed}, {samples} samples per shape)",
                 f"max deviation {worst:.3g}")
    rng = np.random.default_rng([cfg.seed, 7])
    worst = 0.0
    positive = True
    for m in (2, 3):
        for n in range(2, 6):
            for _ in range(samples // 10):
                chain = geometry.random_weighted_chain(rng, m, n)
                k = chain.active()[0]
                tree = chain.trees[k]
                for i in range(1, n + 1):
                    for j in range(1, n + 1):
                        if i == j or tree.position(i) > tree.position(j):
                            continue
                        r = min(tree.depths[tree.position(i) - 1: tree.position(j) - 1])
                        diff = geometry.pair_difference(chain, i, j)
                        positive &= diff[r] > 0 and bool(np.all(np.abs(diff[:r]) <= geometry.EPS_ALGEBRA))
    rep.line(positive, "geometry leading-component positivity")
    collapse_ok = True
    for m in (2, 3):
        mu = geometry.collapse_direction(m, "em")
        for n in range(1, 4):
            for tree in enumerate_trees(m, n):
                for i in range(1, n + 1):
                    collapse_ok &= bool(np.array_equal(geometry.coface_doubling_direction(tree, i), mu))
    rep.line(collapse_ok, "geometry doubling a leaf points along e_m")
    for m in (2, 3):
        for n in range(1, 4):
            for ell in range(n, 6):
                for _ in range(max(samples // 50, 1)):
                    try:
                        s = geometry.random_stratum(rng, m, n, ell)
                    except geometry.NoStratum:
                        continue
                    members = [s.D(k) for k in range(s.D.n + 1)]
                    exact = geometry.tau_tensor(s.chain, s.phi, s.D, s.source, collapse=cfg.collapse)
                    near = geometry.raw_tensor(geometry.approximate(s.chain), members)
                    worst = max(worst, exact.max_deviation(near))
    rep.line(worst <= 1e-3, f"geometry extended weights are limits of plain ones (collapse={cfg.collapse})",
             f"max deviation {worst:.3g}")


SUITE_FUNCS = {
    "cosimplicial": suite_cosimplicial,
    "poset": suite_poset,
    "twisted": suite_twisted,
    "bicomplex": suite_bicomplex,
    "pages": suite_pages,
    "geometry": suite_geometry,
}


def cmd_verify(args, cfg: RunConfig, out) -> int:
    rep = Report(out)
    SUITE_FUNCS[args.suite](args, cfg, rep)
    return EXIT_FAIL if rep.failed else EXIT_OK


# ----------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _env(name: str, default):
    return os.environ.get(f"FOXWEAVE_{name}", default)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--m", type=int, default=_env("M", 2))
    common.add_argument("--n-max", type=int, default=_env("N_MAX", 3))
    common.add_argument("--coeff", default=_env("COEFF", "q"), help="q, z or fp:<prime>")
    common.add_argument("--r-max", type=int, default=_env("R_MAX", 4))
    common.add_argument("--format", dest="fmt", choices=("json", "csv", "mm"), default=_env("FORMAT", "csv"))
    common.add_argument("--cache-dir", default=_env("CACHE_DIR", None))
    common.add_argument("--seed", type=int, default=_env("SEED", 42))
    common.add_argument("--cap", type=int, default=_env("CAP", DEFAULT_CHAIN_CAP))
    common.add_argument("--collapse-dir", dest="collapse", choices=("em", "e1"), default=_env("COLLAPSE_DIR", "em"))

    spectral = _Parser(add_help=False)
    spectral.add_argument("--orientation", choices=("default", "transposed"), default="default")
    spectral.add_argument("--variance", choices=("homology", "cohomology"), default="homology")
    spectral.add_argument("--conormalize", action="store_true", help="use the normalized subcomplex")

    parser = _Parser(prog="foxweave", description="Fox-Neuwirth bicomplex toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enumerate", parents=[common], help="count or list trees")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--list", action="store_true")

    sub.add_parser("build", parents=[common], help="build the bicomplex and print its manifest")

    p = sub.add_parser("pages", parents=[common, spectral], help="spectral sequence pages")
    p.add_argument("--matrices", action="store_true", help="include page differentials (json only)")

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--n", type=int, default=None, help="largest leaf count for exhaustive suites")
    p.add_argument("--scope", choices=("all", "internal"), default="all")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--normalization", action="store_true", help="also compare against the normalized bicomplex")
    p.add_argument("--csv", default=None, help="write geometry sample records to this file")

    p = sub.add_parser("export", parents=[common, spectral], help="write MatrixMarket files and a manifest")
    p.add_argument("what", choices=("bicomplex", "pages"))
    p.add_argument("path")
    return parser


COMMANDS = {
    "enumerate": cmd_enumerate,
    "build": cmd_build,
    "pages": cmd_pages,
    "verify": cmd_verify,
    "export": cmd_export,
}


def main(argv: list[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig(
            m=int(args.m), n_max=int(args.n_max), coeff=str(args.coeff), r_max=int(args.r_max), fmt=args.fmt,
            cache_dir=args.cache_dir, seed=int(args.seed), cap=int(args.cap), collapse=args.collapse,
        )
        return COMMANDS[args.command](args, cfg, out)
    except (ConfigError, TreeError, RingError, SpectralError) as exc:
        return _emit_error("configuration", str(exc), EXIT_CONFIG)
    except (ValueError, TypeError) as exc:
        return _emit_error("configuration", str(exc), EXIT_CONFIG)
    except CapExceeded as exc:
        return _emit_error("cap_exceeded", str(exc), EXIT_CAP)
    except MemoryError as exc:
        return _emit_error("cap_exceeded", f"out of memory: {exc}", EXIT_CAP)
    except InvariantViolation as exc:
        return _emit_error("invariant_violation", str(exc), EXIT_FAIL)
    except OSError as exc:
        return _emit_error("io", str(exc), EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
