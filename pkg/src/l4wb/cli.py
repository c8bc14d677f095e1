"""Command-line front end.

Every subcommand writes one report (see ``report.py``) to stdout or ``--output``.
Exit status is 0 on success, 2 for invalid input and 3 when a truncation
budget or a quadrature refinement check fails.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .arith_sums import expsum_scan, kloosterman, kloosterman_complex, tau, weil_check
from .cache import CacheError, FormStore, default_cache_dir, read_space, write_space
from .geometry import QuadratureError, l2_normalize, lp_norm, triple_inner, watson_check
from .hecke import BudgetError, cusp_dimension, hecke_matrix, victor_miller_basis
from .qseries import TruncationError
from .report import Report
from .special_fn import BesselAvgConfig, RegimeError, bessel_avg_pair, pair_bound_checks

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3


class InputError(ValueError):
    pass


# ---------------------------------------------------------------- helpers


def _pool_map(fn, items, threads: int) -> list:
    # results come back in input order, so reductions do not depend on scheduling
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _form(store: FormStore, k: int, index: int):
    if k % 2 or k < 12:
        raise InputError("weight must be even and >= 12")
    forms = store.forms(k)
    if not 0 <= index < len(forms):
        raise InputError(f"weight {k} has {len(forms)} eigenforms, no index {index}")
    return forms[index]


def _edge(f):
    from .lfun import edge_sym2
    return edge_sym2(f, X=min(1000.0, f.prime_limit / 37))


def _lvalue_dict(lv) -> dict:
    return {"kind": lv.kind.value, "value": lv.value, "terms": lv.truncation, "tail_bound": lv.tail_bound}


# ---------------------------------------------------------------- subcommands


def cmd_basis(a, store, threads):
    path = store.cache_dir / f"S{a.weight}_N{a.N}.qcache"
    cached = path.exists()
    if cached:
        space, T2 = read_space(path)
    else:
        space = victor_miller_basis(a.weight, a.N)
        write_space(path, space)
        T2 = hecke_matrix(space, 2) if space.dimension else ()
    terms = min(a.terms, a.N)
    return ({"weight": a.weight, "dimension": space.dimension, "truncation": space.truncation,
             "basis": [[str(g[n]) for n in range(terms + 1)] for g in space.basis],
             "T2": [[str(x) for x in row] for row in T2]},
            {"cache_file": str(path), "cache_hit": cached})


def cmd_eigen(a, store, threads):
    forms = store.forms(a.weight) if cusp_dimension(a.weight) else []
    out = []
    for f in forms:
        out.append({"label": f.label, "name": f.name, "lambda_2": float(f.lam(2)),
                    "a": [float(f.a(n)) for n in range(1, a.terms + 1)],
                    "deligne_ok": all(abs(float(f.a(n))) <= tau(n) for n in range(1, a.terms + 1))})
    cp = list(forms[0].charpoly2) if forms else [1]
    return ({"weight": a.weight, "dimension": len(forms), "charpoly_T2": [str(c) for c in cp], "forms": out},
            {"prime_limit": forms[0].prime_limit if forms else 0})


def cmd_kloosterman(a, store, threads):
    if a.c < 1:
        raise InputError("modulus must be >= 1")
    z = kloosterman_complex(a.n, a.m, a.c)
    bound = tau(a.c) * math.sqrt(a.c) * math.sqrt(math.gcd(math.gcd(a.n, a.m), a.c))
    return ({"n": a.n, "m": a.m, "c": a.c, "value": kloosterman(a.n, a.m, a.c), "imag": z.imag,
             "weil_bound": bound, "weil_ok": weil_check(a.n, a.m, a.c)}, {})


def cmd_expsum_scan(a, store, threads):
    cols = ("c2p", "r1", "b2", "re", "im", "is_square", "passes_bound")
    rows = [dict(zip(cols, r)) for r in expsum_scan(a.c_max, a.r_max)]
    failed = sum(not r["passes_bound"] for r in rows)
    return rows, {"rows": len(rows), "failed": failed}


def cmd_bessel_avg(a, store, threads):
    cfg = BesselAvgConfig(a.K, parity=2)
    pts = [(x, y) for x in a.x for y in a.y]

    def one(pt):
        x, y = pt
        res = bessel_avg_pair(cfg, x, y)
        row = {"K": a.K, "x": x, "y": y, "re": res.value.real, "im": res.value.imag,
               "abs_phase_removed": abs(res.phase_removed), "support_flag": res.support_flag}
        try:
            chk = pair_bound_checks(cfg, x, y, C=a.C)
            row.update(bound_name=chk["bound_name"], bound_value=chk["bound_value"], passed=chk["pass"])
        except RegimeError:
            row.update(bound_name="none", bound_value=None, passed=None)
        return row

    return _pool_map(one, pts, threads), {"points": len(pts)}


def cmd_lvalue(a, store, threads):
    from .lfun import central_value_g, central_value_sym2xg, edge_sym2_inverse

    f = _form(store, a.weight, a.form_index)
    if a.kind == "central-g":
        lv = central_value_g(f, tol=a.tol)
    elif a.kind == "central-sym2xg":
        g = _form(store, 2 * a.weight, a.g_index)
        lv = central_value_sym2xg(f, g, tol=a.tol)
    elif a.kind == "edge-sym2":
        lv = _edge(f)
    else:
        lv = edge_sym2_inverse(f, X=a.X)
    return {"k": a.weight, "label": a.form_index, **_lvalue_dict(lv)}, {"prime_limit": f.prime_limit}


def cmd_l4(a, store, threads):
    f = _form(store, a.weight, a.form_index)
    nf = l2_normalize(f)
    l4 = lp_norm(nf, 4)
    gs = store.forms(2 * a.weight)
    parts = _pool_map(lambda g: abs(triple_inner(nf, l2_normalize(g))) ** 2, gs, threads)
    spectral = math.fsum(parts)
    return ({"k": a.weight, "label": a.form_index, "l4_power": l4["power"], "l4_norm": l4["norm"],
             "three_over_pi_l4": 3 / math.pi * l4["power"], "spectral_sum": spectral,
             "spectral_rel_gap": abs(spectral - l4["power"]) / l4["power"],
             "triple_products": [{"g": g.name, "abs_sq": p} for g, p in zip(gs, parts)],
             "petersson_scale": nf.scale},
            {"l2_check": lp_norm(nf, 2)["power"]})


def cmd_watson(a, store, threads):
    f = _form(store, a.weight, a.form_index)
    g = _form(store, 2 * a.weight, a.g_index)
    r = watson_check(f, g)
    return {"k": a.weight, "f": f.name, "g": g.name, **r}, {}


def cmd_trace_check(a, store, threads):
    from .trace import TraceCheckConfig, petersson_check

    def per_weight(k):
        forms = store.forms(k)
        L1 = [_edge(f).value for f in forms]
        rows = []
        for n in range(1, a.n_max + 1):
            for m in range(1, a.n_max + 1):
                rows.append(petersson_check(TraceCheckConfig(k, n, m, tol=a.tol), forms, L1))
        return rows

    for k in a.weight:
        if k % 2 or k < 12:
            raise InputError("weights must be even and >= 12")
    rows = [r for chunk in _pool_map(per_weight, a.weight, threads) for r in chunk]
    worst = max(r["gap"] for r in rows)
    return rows, {"max_gap": worst, "max_c_tail": max(r["c_tail"] for r in rows)}


def cmd_maindone_check(a, store, threads):
    from .trace import maindone_check

    f = _form(store, a.weight, a.form_index)
    l4 = lp_norm(l2_normalize(f), 4)["power"]
    r = maindone_check(f, l4, tol=min(a.tol, 1e-10))
    budgets = r.pop("budgets")
    return r, budgets


def cmd_theorem_avg(a, store, threads):
    from .trace import AverageExperiment, theorem_average

    if a.K < 1:
        raise InputError("K must be >= 1")
    exp = AverageExperiment(a.K)
    res = theorem_average(exp, lambda k: store.forms(k))
    return res, {"forms": len(res["per_form"])}


def cmd_poisson_check(a, store, threads):
    from .arith_sums import poisson_compare
    from .special_fn import bump

    kl = np.array([kloosterman(int(r * r % 7), 1, 7) for r in range(7)])
    cases = [
        ("constant", lambda n: np.ones(len(n)), 1000, 1),
        ("additive_character", lambda n: np.exp(2j * np.pi * (n % 7) / 7), 1000, 7),
        ("kloosterman_squares", lambda n: kl[n % 7], 2000, 7),
    ]
    rows = []
    for name, S, N, c in cases:
        r = poisson_compare(S, bump, N, c)
        rows.append({"case": name, "N": N, "c": c, "direct_re": r["direct"].real, "direct_im": r["direct"].imag,
                     "main_re": r["main"].real, "main_im": r["main"].imag, "error": r["error"]})
    return rows, {"max_error": max(r["error"] for r in rows)}


COMMANDS = {
    "basis": cmd_basis, "eigen": cmd_eigen, "kloosterman": cmd_kloosterman,
    "expsum-scan": cmd_expsum_scan, "bessel-avg": cmd_bessel_avg, "lvalue": cmd_lvalue,
    "l4": cmd_l4, "watson": cmd_watson, "trace-check": cmd_trace_check,
    "maindone-check": cmd_maindone_check, "theorem-avg": cmd_theorem_avg,
    "poisson-check": cmd_poisson_check,
}


# ---------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--cache-dir", type=Path, default=None, help="defaults to $L4WB_CACHE or ~/.cache/l4wb")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--output", type=Path, default=None, help="file to write; stdout if omitted")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = _Parser(prog="l4wb", description="Numerical workbench for L^4 norms of level-one cusp forms.")
    p.add_argument("--version", action="version", version=f"l4wb {__version__}")
    sub = p.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("basis", "integral echelon basis of S_k and its T_2 matrix")
    s.add_argument("--weight", type=int, required=True)
    s.add_argument("--N", type=int, default=200)
    s.add_argument("--terms", type=int, default=10)

    s = add("eigen", "Hecke eigenforms of S_k")
    s.add_argument("--weight", type=int, required=True)
    s.add_argument("--terms", type=int, default=20)

    s = add("kloosterman", "S(n, m; c)")
    for flag in ("--n", "--m", "--c"):
        s.add_argument(flag, type=int, required=True)

    s = add("expsum-scan", "square-vanishing scan of the quadratic exponential sums")
    s.add_argument("--c-max", type=int, default=300)
    s.add_argument("--r-max", type=int, default=5)

    s = add("bessel-avg", "averages of J_{k-1}(4 pi x) J_{2k-1}(4 pi y) over k")
    s.add_argument("--K", type=float, required=True)
    s.add_argument("--x", type=float, nargs="+", required=True)
    s.add_argument("--y", type=float, nargs="+", required=True)
    s.add_argument("--C", type=float, default=1.0, help="constant in the regime bounds")

    s = add("lvalue", "central and edge L-values")
    s.add_argument("--weight", type=int, required=True)
    s.add_argument("--form-index", type=int, default=0)
    s.add_argument("--kind", choices=("central-g", "central-sym2xg", "edge-sym2", "edge-sym2-inv"), required=True)
    s.add_argument("--g-index", type=int, default=0, help="weight-2k form for central-sym2xg")
    s.add_argument("--X", type=float, default=1000.0, help="smoothing scale for edge-sym2-inv")

    s = add("l4", "L^4 norm by quadrature and by spectral decomposition")
    s.add_argument("--weight", type=int, required=True)
    s.add_argument("--form-index", type=int, default=0)

    s = add("watson", "triple product by quadrature against L-values")
    s.add_argument("--weight", type=int, required=True)
    s.add_argument("--form-index", type=int, default=0)
    s.add_argument("--g-index", type=int, required=True)

    s = add("trace-check", "Petersson formula for 1 <= n, m <= n-max")
    s.add_argument("--weight", type=int, nargs="+", default=[12])
    s.add_argument("--n-max", type=int, default=10)

    s = add("maindone-check", "L^4 norm against diagonal plus off-diagonal")
    s.add_argument("--weight", type=int, default=12)
    s.add_argument("--form-index", type=int, default=0)

    s = add("theorem-avg", "weighted average of L^4 norms over K < k < 2K")
    s.add_argument("--K", type=int, required=True)

    add("poisson-check", "smoothed periodic sums against their zero frequency")
    return p


def _validate(a) -> None:
    if not 1e-12 <= a.tol <= 1e-2:
        raise InputError("--tol must lie in [1e-12, 1e-2]")
    if a.threads < 1:
        raise InputError("--threads must be >= 1")


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        try:
            a = parser.parse_args(argv)
        except SystemExit as exc:  # --help and --version
            return int(exc.code or 0)
        if a.subcommand is None:
            parser.print_usage(sys.stderr)
            return EXIT_INVALID
        _validate(a)
        cache_dir = a.cache_dir or default_cache_dir()
        store = FormStore(cache_dir)
        t0 = time.perf_counter()
        results, diag = COMMANDS[a.subcommand](a, store, a.threads)
        runtime = (time.perf_counter() - t0) * 1000
    except (BudgetError, TruncationError, QuadratureError) as exc:
        print(f"l4wb: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, CacheError, RegimeError, ValueError) as exc:
        print(f"l4wb: {exc}", file=sys.stderr)
        return EXIT_INVALID

    params = {k: v for k, v in vars(a).items()
              if k not in ("subcommand", "tol", "cache_dir", "threads", "output", "format")}
    inputs = {"subcommand": a.subcommand, "tol": a.tol, "cache_dir": str(cache_dir), "threads": a.threads,
              "output": str(a.output) if a.output else None, "format": a.format, "params": params}
    text = Report(inputs, results, {"runtime_ms": runtime, **diag}).render(a.format)
    if a.output:
        a.output.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
