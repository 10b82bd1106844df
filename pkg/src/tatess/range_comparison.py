"""Onto/isomorphism ranges for maps of spectral sequences, and the horizontal
vanishing lines they imply.

A map of spectral sequences that is onto for s >= M0 and an isomorphism for
s >= M1 on page r is onto for s >= max(M0, M1 - r) and an isomorphism for
s >= max(M1, M0 + r) on page r + 1. Iterating from (M0, M1) = (d, d + 1) on
E_2 gives (d, d + r - 1) on E_r.

``simulate_comparison`` checks the rule empirically on random filtered
cochain complexes and random filtered chain maps between them.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import fp_linalg as la
from .stabilizer_presets import HeightContext, HypothesisError, _normalize_level

NEG_INF = -math.inf


@dataclass(frozen=True)
class RangeBound:
    page: int
    onto_from: float  # an int, or NEG_INF for "everywhere"
    iso_from: float

    def __post_init__(self):
        if self.iso_from < self.onto_from:
            raise ValueError("iso threshold must not be below the onto threshold")


def propagate(b: RangeBound) -> RangeBound:
    r = b.page
    return RangeBound(r + 1, max(b.onto_from, b.iso_from - r), max(b.iso_from, b.onto_from + r))


def iterate_bounds(start: RangeBound, to_page: int) -> list[RangeBound]:
    """Bounds on every page from ``start.page`` through ``to_page``."""
    trace = [start]
    while trace[-1].page < to_page:
        trace.append(propagate(trace[-1]))
    return trace


@dataclass(frozen=True)
class VanishingLine:
    prime: int
    group: str
    page: int
    line: int
    vcd: int
    trace: tuple[RangeBound, ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "prime": self.prime,
            "group": self.group,
            "page": self.page,
            "line": self.line,
            "vcd": self.vcd,
            "trace": [{"page": b.page, "onto_from": int(b.onto_from), "iso_from": int(b.iso_from)} for b in self.trace],
        }


def vanishing_line(p: int, group: str, collapse_page: int | None = None) -> VanishingLine:
    """E_r^{s,t} = 0 for s >= line on page ``page`` and beyond.

    The beta-localization map is onto for s >= vcd and iso for s > vcd on
    E_2; once the localized spectral sequence is zero (page 2n^2 + 2) the
    iso range of the propagated bound is a vanishing region.
    """
    group = _normalize_level(group)
    if group == "cp":
        raise ValueError("vanishing lines are computed for F, N and G")
    ctx = HeightContext(p)
    d = ctx.vcd[group]
    collapse = collapse_page if collapse_page is not None else ctx.collapse_page
    trace = iterate_bounds(RangeBound(2, d, d + 1), collapse)
    return VanishingLine(p, group, collapse, int(trace[-1].iso_from), d, tuple(trace))


# -- random filtered complexes ---------------------------------------------------------------


@dataclass
class FilteredComplex:
    """A cochain complex with a basis adapted to a decreasing filtration.

    Basis vector i sits in filtration ``s[i]`` and stem ``k[i]``; d lowers the
    stem by one and raises filtration by at least 2, so E_2 is the associated
    graded. ``d[i, j]`` is the coefficient of basis i in d(basis j).
    """

    prime: int
    s: np.ndarray
    k: np.ndarray
    d: np.ndarray

    @property
    def size(self) -> int:
        return len(self.s)

    def cells(self) -> set[tuple[int, int]]:
        return set(zip(self.s.tolist(), self.k.tolist()))


def _normal_form(rng: random.Random, p: int, s_max: int, k_max: int, s_cap: int | None = None) -> FilteredComplex:
    """A complex in normal form: d pairs basis vectors x -> y (or kills x)."""
    s_list, k_list = [], []
    for s in range(s_max if s_cap is None else min(s_cap, s_max)):
        for k in range(k_max):
            c = rng.choices((0, 1, 2), weights=(5, 4, 2))[0]
            s_list += [s] * c
            k_list += [k] * c
    n = len(s_list)
    d = np.zeros((n, n), dtype=np.int64)
    free = list(range(n))
    rng.shuffle(free)
    used: set[int] = set()
    for j in free:
        if j in used or rng.random() < 0.3:
            continue
        targets = [
            i for i in range(n)
            if i not in used and i != j and k_list[i] == k_list[j] - 1 and s_list[i] >= s_list[j] + 2
        ]
        if targets:
            i = rng.choice(targets)
            d[i, j] = rng.randrange(1, p)
            used.update((i, j))
    return FilteredComplex(p, np.array(s_list, dtype=np.int64), np.array(k_list, dtype=np.int64), d)


def _filtered_unipotent(rng: random.Random, cx: FilteredComplex) -> np.ndarray:
    n = cx.size
    g = np.eye(n, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if cx.k[i] == cx.k[j] and cx.s[i] > cx.s[j] and rng.random() < 0.5:
                g[i, j] = rng.randrange(cx.prime)
    return g


def _conjugate(cx: FilteredComplex, g: np.ndarray) -> FilteredComplex:
    p = cx.prime
    return FilteredComplex(p, cx.s, cx.k, la.matmul(la.matmul(g, cx.d, p), _inverse(g, p), p))


def _random_complex(rng: random.Random, p: int, s_max: int, k_max: int, s_cap: int | None = None) -> FilteredComplex:
    cx = _normal_form(rng, p, s_max, k_max, s_cap)
    return _conjugate(cx, _filtered_unipotent(rng, cx))


def _restrict(cx: FilteredComplex, keep: list[int]) -> FilteredComplex:
    idx = np.array(keep, dtype=np.int64)
    return FilteredComplex(cx.prime, cx.s[idx], cx.k[idx], cx.d[np.ix_(idx, idx)])


def _sub_or_quotient(rng: random.Random, cx: FilteredComplex, quotient: bool) -> tuple[FilteredComplex, FilteredComplex, np.ndarray]:
    """A random subcomplex inclusion S -> C, or quotient map C -> C/S, for a
    normal-form C; returns (source, target, map)."""
    n = cx.size
    sub = set()
    for j in range(n):
        targets = np.flatnonzero(cx.d[:, j])
        if targets.size:  # x -> y: take both, only y, or neither
            choice = rng.random()
            if choice < 0.35:
                sub.update((j, int(targets[0])))
            elif choice < 0.75:
                sub.add(int(targets[0]))
        elif not cx.d[j].any() and rng.random() < 0.5:
            sub.add(j)
    if not quotient:
        keep = sorted(sub)
        f = np.zeros((n, len(keep)), dtype=np.int64)
        f[keep, range(len(keep))] = 1
        return _restrict(cx, keep), cx, f
    keep = sorted(set(range(n)) - sub)
    f = np.zeros((len(keep), n), dtype=np.int64)
    f[range(len(keep)), keep] = 1
    return cx, _restrict(cx, keep), f


def _inverse(g: np.ndarray, p: int) -> np.ndarray:
    n = g.shape[0]
    if n == 0:
        return g.copy()
    red, piv = la.rref_array(np.hstack([g, np.eye(n, dtype=np.int64)]), p)
    if piv[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return red[:, n:]


def _direct_sum(a: FilteredComplex, b: FilteredComplex) -> FilteredComplex:
    n, m = a.size, b.size
    d = np.zeros((n + m, n + m), dtype=np.int64)
    d[:n, :n] = a.d
    d[n:, n:] = b.d
    return FilteredComplex(a.prime, np.concatenate([a.s, b.s]), np.concatenate([a.k, b.k]), d)


def _random_chain_map(rng: random.Random, src: FilteredComplex, tgt: FilteredComplex) -> np.ndarray:
    """A uniformly random filtered chain map src -> tgt (matrix tgt.size x src.size)."""
    p = src.prime
    unknowns = [
        (i, j) for i in range(tgt.size) for j in range(src.size)
        if tgt.k[i] == src.k[j] and tgt.s[i] >= src.s[j]
    ]
    if not unknowns:
        return np.zeros((tgt.size, src.size), dtype=np.int64)
    col = {u: c for c, u in enumerate(unknowns)}
    rows = []
    # (f d_src - d_tgt f)[i, j] = 0
    for i in range(tgt.size):
        for j in range(src.size):
            if tgt.k[i] != src.k[j] - 1:
                continue
            eq = np.zeros(len(unknowns), dtype=np.int64)
            for kk in np.flatnonzero(src.d[:, j]):
                c = col.get((i, int(kk)))
                if c is not None:
                    eq[c] += src.d[kk, j]
            for kk in np.flatnonzero(tgt.d[i, :]):
                c = col.get((int(kk), j))
                if c is not None:
                    eq[c] -= tgt.d[i, kk]
            if (eq % p).any():
                rows.append(eq % p)
    system = np.array(rows, dtype=np.int64).reshape(len(rows), len(unknowns))
    kernel = la.kernel_array(system, p)
    coeffs = np.array([rng.randrange(p) for _ in range(kernel.shape[0])], dtype=np.int64)
    values = la.matmul(coeffs.reshape(1, -1), kernel, p)[0] if kernel.shape[0] else np.zeros(len(unknowns), dtype=np.int64)
    f = np.zeros((tgt.size, src.size), dtype=np.int64)
    for (i, j), v in zip(unknowns, values):
        f[i, j] = v
    return f


def _rank(rows: list[list[int]], p: int) -> int:
    """Rank of a small matrix given as lists (faster than numpy at this size)."""
    rows = [list(r) for r in rows if any(r)]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        pivot = next((i for i in range(rank, len(rows)) if rows[i][c] % p), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = pow(rows[rank][c], -1, p)
        prow = [(x * inv) % p for x in rows[rank]]
        rows[rank] = prow
        for i in range(rank + 1, len(rows)):
            a = rows[i][c] % p
            if a:
                rows[i] = [(x - a * y) % p for x, y in zip(rows[i], prow)]
        rank += 1
    return rank


class _StemView:
    """Per-stem coordinates of a filtered complex, with cached page spaces.

    Vectors at stem k are written in the local basis ``index[k]``.
    """

    def __init__(self, cx: FilteredComplex):
        self.cx = cx
        self.p = cx.prime
        self.index = {int(k): np.flatnonzero(cx.k == k) for k in np.unique(cx.k)}
        self._cache: dict = {}

    def local(self, stem: int) -> np.ndarray:
        return self.index.get(stem, np.zeros(0, dtype=np.int64))

    def d_block(self, stem: int) -> np.ndarray:
        return self.cx.d[np.ix_(self.local(stem - 1), self.local(stem))]

    def cycles(self, s: int, stem: int, r: int) -> np.ndarray:
        """Rows span Z_r^s at this stem: x in F^s with dx in F^{s+r}."""
        key = ("z", s, stem, r)
        if key not in self._cache:
            cols = self.local(stem)
            filt = self.cx.s[cols]
            chosen = np.flatnonzero(filt >= s)
            out = np.zeros((0, cols.size), dtype=np.int64)
            if chosen.size:
                low = np.flatnonzero(self.cx.s[self.local(stem - 1)] < s + r)
                block = self.d_block(stem)[np.ix_(low, chosen)]
                kern = la.kernel_array(block, self.p) if low.size else np.eye(chosen.size, dtype=np.int64)
                out = np.zeros((kern.shape[0], cols.size), dtype=np.int64)
                out[:, chosen] = kern
            self._cache[key] = out
        return self._cache[key]

    def spaces(self, s: int, stem: int, r: int) -> tuple[list[list[int]], list[list[int]], int, int]:
        """(Z_r^s, Y) with Y = Z_{r-1}^{s+1} + d Z_{r-1}^{s-r+1}, their
        ranks; E_r^s = Z / Y."""
        key = ("e", s, stem, r)
        if key not in self._cache:
            z = self.cycles(s, stem, r)
            incoming = self.cycles(s - r + 1, stem + 1, r - 1)
            width = z.shape[1]
            if incoming.size:
                images = la.matmul(incoming, self.d_block(stem + 1).T, self.p)
            else:
                images = np.zeros((0, width), dtype=np.int64)
            y = np.vstack([self.cycles(s + 1, stem, r - 1), images]).tolist()
            zl = z.tolist()
            y_rank = _rank(y, self.p)
            self._cache[key] = (zl, y, y_rank, _rank(zl + y, self.p) - y_rank)
        return self._cache[key]


def _status(src: _StemView, tgt: _StemView, f: np.ndarray, r: int, s: int, stem: int) -> tuple[bool, bool, int, int]:
    z, _, _, dim_src = src.spaces(s, stem, r)
    _, yt, yt_rank, dim_tgt = tgt.spaces(s, stem, r)
    if not z or not dim_tgt:
        rank = 0
    else:
        block = f[np.ix_(tgt.local(stem), src.local(stem))]
        image = la.matmul(np.array(z, dtype=np.int64), block.T, src.p).tolist()
        rank = _rank(image + yt, src.p) - yt_rank
    return rank == dim_tgt, rank == dim_src, dim_src, dim_tgt


def map_status(src: FilteredComplex, tgt: FilteredComplex, f: np.ndarray, r: int, s: int, stem: int) -> tuple[bool, bool, int, int]:
    """(onto, injective, dim E_r, dim E~_r) for the induced map at (s, stem)."""
    return _status(_StemView(src), _StemView(tgt), f, r, s, stem)


def _thresholds(table: dict[tuple[int, int], tuple[bool, bool]]) -> tuple[float, float]:
    not_onto = [s for (s, _), (onto, _) in table.items() if not onto]
    not_iso = [s for (s, _), (onto, inj) in table.items() if not (onto and inj)]
    return max(not_onto, default=NEG_INF) + 1, max(not_iso, default=NEG_INF) + 1


def thresholds(src, tgt, f, r: int, s_range: range, stems: range) -> tuple[float, float]:
    """Smallest (M0, M1) with onto for s >= M0 and iso for s >= M1."""
    sv, tv = _StemView(src), _StemView(tgt)
    return _thresholds({(s, k): _status(sv, tv, f, r, s, k)[:2] for s in s_range for k in stems})


@dataclass
class ComparisonWitness:
    seed: int
    prime: int
    start: RangeBound
    pages_checked: int
    violations: list[tuple[int, int, int, str]]  # (page, s, stem, what)

    @property
    def ok(self) -> bool:
        return not self.violations


def simulate_comparison(seed: int, sizes: tuple[int, int] = (6, 6)) -> ComparisonWitness:
    """Random filtered complexes C, C~ and chain map f; check that the
    propagated onto/iso ranges hold on every page of the induced map.

    Maps are subcomplex inclusions, quotient maps, or a split identity on a
    shared summand, each perturbed by a random filtered chain map and
    disguised by random filtered changes of basis.
    """
    rng = random.Random(seed)
    p = rng.choice((3, 5, 7))
    s_max = rng.randint(2, sizes[0])
    k_max = rng.randint(2, sizes[1])
    mode = rng.choice(("inclusion", "quotient", "split"))
    if mode == "split":
        shared = _random_complex(rng, p, s_max, k_max)
        cut = rng.randint(0, s_max)
        src = _direct_sum(shared, _random_complex(rng, p, s_max, k_max, s_cap=cut))
        tgt = _direct_sum(shared, _random_complex(rng, p, s_max, k_max, s_cap=cut))
        f = np.zeros((tgt.size, src.size), dtype=np.int64)
        f[: shared.size, : shared.size] = np.eye(shared.size, dtype=np.int64)
    else:
        src, tgt, f = _sub_or_quotient(rng, _normal_form(rng, p, s_max, k_max), mode == "quotient")
        g, h = _filtered_unipotent(rng, tgt), _filtered_unipotent(rng, src)
        f = la.matmul(la.matmul(g, f, p), _inverse(h, p), p)
        src, tgt = _conjugate(src, h), _conjugate(tgt, g)
    if rng.random() < 0.5:
        f = (f + rng.randrange(p) * _random_chain_map(rng, src, tgt)) % p
    return check_map(seed, src, tgt, f, s_max, k_max)


def check_map(seed: int, src: FilteredComplex, tgt: FilteredComplex, f: np.ndarray, s_max: int, k_max: int) -> ComparisonWitness:
    """Measure (M0, M1) on E_2, then test the propagated bounds on every
    page up to the one where all differentials vanish."""
    sv, tv = _StemView(src), _StemView(tgt)
    cells = [(s, k) for s in range(s_max) for k in range(-1, k_max + 1)]
    last = s_max + 2
    start = bound = None
    violations = []
    for r in range(2, last + 1):
        table = {c: _status(sv, tv, f, r, *c)[:2] for c in cells}
        if start is None:
            start = bound = RangeBound(2, *_thresholds(table))
        for (s, stem), (onto, inj) in table.items():
            if s >= bound.onto_from and not onto:
                violations.append((r, s, stem, "onto"))
            if s >= bound.iso_from and not (onto and inj):
                violations.append((r, s, stem, "iso"))
        bound = propagate(bound)
    return ComparisonWitness(seed, src.prime, start, last - 1, violations)


def identity_witness(seed: int = 0, sizes: tuple[int, int] = (4, 4)) -> ComparisonWitness:
    rng = random.Random(seed)
    cx = _random_complex(rng, 5, *sizes)
    return check_map(seed, cx, cx, np.eye(cx.size, dtype=np.int64), *sizes)


def zero_target_witness(seed: int = 0, sizes: tuple[int, int] = (4, 4)) -> ComparisonWitness:
    rng = random.Random(seed)
    cx = _random_complex(rng, 5, *sizes)
    empty = FilteredComplex(5, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, 0), dtype=np.int64))
    return check_map(seed, cx, empty, np.zeros((0, cx.size), dtype=np.int64), *sizes)
