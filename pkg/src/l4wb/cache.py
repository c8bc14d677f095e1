"""On-disk caches for cusp-space bases and eigenform data.

Both formats are line-oriented UTF-8 with a version header and are written
to a temporary file that is renamed into place, so readers never see a
partial file.  Basis coefficients are exact decimal integers; eigenform data
are decimal strings carrying the stored precision.
"""

from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import mpmath
import numpy as np

from .hecke import STORE_DPS, CuspSpace, Eigenform, eigenforms, hecke_matrix, victor_miller_basis
from .qseries import QSeries

QCACHE_HEADER = "L4WB-QCACHE v1"
ECACHE_HEADER = "L4WB-ECACHE v1"
WORKING_BUDGET = 40_000  # covers the smoothed edge series at X = 1000


class CacheError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path, self.line = path, line


def default_cache_dir() -> Path:
    env = os.environ.get("L4WB_CACHE")
    return Path(env) if env else Path.home() / ".cache" / "l4wb"


def _atomic_write(path: Path, lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, path: Path, header: str):
        self.path = path
        self.lines = path.read_text(encoding="utf-8").splitlines()
        self.i = 0
        first = self.next()
        if first != header:
            raise CacheError(path, 1, f"expected header {header!r}, found {first!r}")

    def next(self) -> str:
        if self.i >= len(self.lines):
            raise CacheError(self.path, self.i + 1, "unexpected end of file")
        self.i += 1
        return self.lines[self.i - 1]

    def field(self, name: str) -> list[str]:
        line = self.next()
        parts = line.split()
        if not parts or parts[0] != name:
            raise CacheError(self.path, self.i, f"expected field {name!r}, found {line!r}")
        return parts[1:]

    def ints(self, name: str) -> list[int]:
        try:
            return [int(x) for x in self.field(name)]
        except ValueError as exc:
            raise CacheError(self.path, self.i, f"bad integer in {name!r}") from exc

    def int_line(self) -> int:
        line = self.next()
        if not re.fullmatch(r"-?\d+", line):
            raise CacheError(self.path, self.i, f"not a decimal integer: {line!r}")
        return int(line)

    def mpf_line(self):
        line = self.next()
        try:
            return mpmath.mpf(line)
        except (ValueError, TypeError) as exc:
            raise CacheError(self.path, self.i, f"not a decimal number: {line!r}") from exc


# ---------------------------------------------------------------- bases


def write_space(path: Path, space: CuspSpace) -> None:
    T2 = hecke_matrix(space, 2) if space.dimension else ()

    def lines():
        yield QCACHE_HEADER
        yield f"weight {space.weight}"
        yield f"dimension {space.dimension}"
        yield f"truncation {space.truncation}"
        for row in T2:
            yield "t2 " + " ".join(str(x) for x in row)
        for g in space.basis:
            yield f"form {g.den}"
            for c in g.num:
                yield str(c)

    _atomic_write(path, lines())


def read_space(path: Path) -> tuple[CuspSpace, tuple]:
    r = _Reader(Path(path), QCACHE_HEADER)
    (k,) = r.ints("weight")
    (d,) = r.ints("dimension")
    (N,) = r.ints("truncation")
    T2 = tuple(tuple(r.ints("t2")) for _ in range(d))
    basis = []
    for _ in range(d):
        (den,) = r.ints("form")
        basis.append(QSeries(k, tuple(r.int_line() for _ in range(N + 1)), den))
    return CuspSpace(k, tuple(basis)), T2


def cache_roundtrip(space: CuspSpace, cache_dir: Path | None = None) -> CuspSpace:
    path = Path(cache_dir or default_cache_dir()) / f"S{space.weight}_N{space.truncation}.qcache"
    write_space(path, space)
    return read_space(path)[0]


# ---------------------------------------------------------------- eigenforms


def _dec(x) -> str:
    # three guard digits make the decimal string read back to the same binary value
    with mpmath.workdps(STORE_DPS):
        return mpmath.nstr(x, STORE_DPS + 3, strip_zeros=False, min_fixed=1, max_fixed=0)


def write_eigenforms(path: Path, forms: list[Eigenform], weight: int, N: int) -> None:
    def lines():
        yield ECACHE_HEADER
        yield f"weight {weight}"
        yield f"truncation {N}"
        yield f"dimension {len(forms)}"
        if forms:
            yield "charpoly " + " ".join(str(c) for c in forms[0].charpoly2)
            yield f"direct {forms[0].direct}"
            yield f"primes {len(forms[0].primes)}"
            for p in forms[0].primes:
                yield str(int(p))
        for f in forms:
            yield f"form {f.label}"
            for x in f.lam_direct[1:]:
                yield _dec(x)
            for x in f.ap:
                yield _dec(x)

    _atomic_write(path, lines())


def read_eigenforms(path: Path) -> tuple[int, list[Eigenform]]:
    r = _Reader(Path(path), ECACHE_HEADER)
    (k,) = r.ints("weight")
    (N,) = r.ints("truncation")
    (d,) = r.ints("dimension")
    if d == 0:
        return N, []
    cp = tuple(r.ints("charpoly"))
    (direct,) = r.ints("direct")
    (np_,) = r.ints("primes")
    primes = np.array([r.int_line() for _ in range(np_)], dtype=np.int64)
    forms = []
    with mpmath.workdps(STORE_DPS):
        for _ in range(d):
            (label,) = r.ints("form")
            lam = [mpmath.mpf(0)] + [r.mpf_line() for _ in range(direct)]
            ap = [r.mpf_line() for _ in range(np_)]
            forms.append(Eigenform(k, label, cp, lam, primes, ap, N))
    return N, forms


class FormStore:
    """Eigenforms by weight, memoized in memory and on disk."""

    def __init__(self, cache_dir: Path | None = None, use_disk: bool = True):
        self.cache_dir = Path(cache_dir) if cache_dir else default_cache_dir()
        self.use_disk = use_disk
        self._mem: dict[int, tuple[int, list[Eigenform]]] = {}

    def _disk_candidates(self, k: int):
        if not self.cache_dir.is_dir():
            return []
        found = []
        for p in self.cache_dir.glob(f"E{k}_N*.ecache"):
            m = re.fullmatch(rf"E{k}_N(\d+)\.ecache", p.name)
            if m:
                found.append((int(m.group(1)), p))
        return sorted(found)

    def forms(self, k: int, N: int = WORKING_BUDGET, direct: int = 10000) -> list[Eigenform]:
        have = self._mem.get(k)
        if have and have[0] >= N:
            return have[1]
        if self.use_disk:
            for M, p in self._disk_candidates(k):
                if M >= N:
                    try:
                        _, fs = read_eigenforms(p)
                    except CacheError:
                        continue
                    self._mem[k] = (M, fs)
                    return fs
        space = victor_miller_basis(k, N)
        fs = eigenforms(space, direct=direct)
        if self.use_disk:
            write_eigenforms(self.cache_dir / f"E{k}_N{N}.ecache", fs, k, N)
        self._mem[k] = (N, fs)
        return fs


_default_store: FormStore | None = None


def store() -> FormStore:
    global _default_store
    if _default_store is None or _default_store.cache_dir != default_cache_dir():
        _default_store = FormStore()
    return _default_store
