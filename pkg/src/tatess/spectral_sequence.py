"""Multiplicative spectral sequences on a graded algebra.

The E_2 page is the algebra of an ``AlgebraPresentation``. Each rule fixes
d_r on a monomial; rules are compiled into a derivation of the E_2 algebra
(values on generators) and extended to everything by the Leibniz rule with
total-parity signs. Pages are computed exactly on a box of bidegrees: a page
stores, per bidegree, representatives of an E_r basis as vectors over the
E_2 monomial basis together with a projection from cycles to E_r
coordinates. Page r + 1 is ker d_r / im d_r with canonical echelon
representatives.

The algebras are Laurent-periodic, so every page is infinite. Computation
runs on the window widened by the total length of all differentials, which
makes every value inside the window exact; claims are asserted on the
window interior.
"""

from __future__ import annotations

import json
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import fp_linalg as la
from .graded_algebra import (
    AlgebraPresentation,
    Bidegree,
    Domain,
    Element,
    GeneratorSpec,
    Monomial,
    NotHomogeneousError,
    basis_in_region,
    monomial_product,
    multiply,
)


# Rules fix differentials only up to units; the engine uses the stated coefficients.
UNIT_NOTE = "differentials use normalized unit coefficients; only their vanishing and rank are meaningful"


class SpectralSequenceError(RuntimeError):
    """A rule or page computation is internally inconsistent."""


class RuleError(ValueError):
    """A differential rule is malformed or inconsistent."""


class WindowError(ValueError):
    pass


# -- rules ---------------------------------------------------------------------

Terms = tuple[tuple[tuple[tuple[str, int], ...], int], ...]


def _freeze_mono(mono: Mapping[str, int] | str) -> tuple[tuple[str, int], ...]:
    if isinstance(mono, str):
        return ((mono, 1),)
    return tuple(sorted((k, int(v)) for k, v in mono.items() if v))


@dataclass(frozen=True)
class DifferentialRule:
    """d_page(source) = target, stated by generator names.

    ``source`` is a monomial (a bare generator name is allowed). ``via``
    names the generator whose derivative the rule determines; by default it
    is the only generator in the source, or the only non-invertible one.
    """

    page: int
    source: tuple[tuple[str, int], ...]
    target: Terms
    via: str | None = None

    @classmethod
    def make(
        cls,
        page: int,
        source: Mapping[str, int] | str,
        target: Mapping[str, int] | str | Sequence[tuple[Mapping[str, int], int]],
        via: str | None = None,
    ) -> "DifferentialRule":
        if page < 2:
            raise ValueError("differentials start on page 2")
        if isinstance(target, (str, Mapping)):
            terms = ((_freeze_mono(target), 1),)
        else:
            terms = tuple((_freeze_mono(m), int(c)) for m, c in target)
        return cls(int(page), _freeze_mono(source), terms, via)

    def source_monomial(self, pres: AlgebraPresentation) -> Monomial:
        return pres.monomial(dict(self.source))

    def target_element(self, pres: AlgebraPresentation) -> Element:
        return Element(pres.prime, [(pres.monomial(dict(m)), c) for m, c in self.target])

    def to_dict(self) -> dict:
        doc = {
            "page": self.page,
            "source": dict(self.source),
            "target": [{"monomial": dict(m), "coeff": c} for m, c in self.target],
        }
        if self.via:
            doc["via"] = self.via
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DifferentialRule":
        target = [(t["monomial"], t.get("coeff", 1)) for t in doc["target"]]
        return cls.make(doc["page"], doc["source"], target, doc.get("via"))


def _invert_unit(pres: AlgebraPresentation, mono: Monomial) -> Monomial:
    for g, e in zip(pres.generators, mono):
        if e and g.domain is not Domain.INVERTIBLE:
            raise SpectralSequenceError(f"{g.name} is not invertible")
    return tuple(-e for e in mono)


def _mono_element(pres: AlgebraPresentation, mono: Monomial, coeff: int = 1) -> Element:
    return Element.of(pres.prime, mono, coeff)


def _shift_element(pres: AlgebraPresentation, x: Element, mono: Monomial, coeff: int) -> Element:
    """coeff * x * mono for a monomial ``mono`` of invertible generators, allowing
    polynomial exponents to cancel to zero but not below."""
    acc = []
    for m, c in x:
        z = tuple(a + b for a, b in zip(m, mono))
        for g, e in zip(pres.generators, z):
            if g.domain is Domain.POLYNOMIAL and e < 0:
                raise SpectralSequenceError(f"rule target is not divisible by {g.name}^{-e}")
        acc.append((z, c * coeff))
    return Element(pres.prime, acc)


def compile_rules(
    pres: AlgebraPresentation, rules: Sequence[DifferentialRule]
) -> dict[int, dict[int, Element]]:
    """Derivative of each generator on each page, solved from the rules."""
    p = pres.prime
    derivs: dict[int, dict[int, Element]] = {}
    for rule in rules:
        src = rule.source_monomial(pres)
        tgt = rule.target_element(pres)
        s0, t0 = pres.bidegree(src)
        deg = tgt.bidegree(pres)
        if deg is not None and deg != (s0 + rule.page, t0 + rule.page - 1):
            raise RuleError(
                f"rule d_{rule.page}({pres.format_monomial(src)}) lands in {deg}, "
                f"expected {(s0 + rule.page, t0 + rule.page - 1)}"
            )
        present = [i for i, e in enumerate(src) if e]
        if rule.via is not None:
            active = pres.index(rule.via)
            if not src[active]:
                raise RuleError(f"via generator {rule.via} does not occur in the source")
        elif len(present) == 1:
            active = present[0]
        else:
            hard = [i for i in present if pres.generators[i].domain is not Domain.INVERTIBLE]
            if len(hard) != 1:
                raise RuleError("ambiguous rule source; name the generator with 'via'")
            active = hard[0]
        g = pres.generators[active]
        e = src[active]
        rest = tuple(0 if i == active else x for i, x in enumerate(src))
        prefix = tuple(x if i < active else 0 for i, x in enumerate(src))
        sign = -1 if pres.parity(prefix) else 1
        # d(prefix g^e suffix) = sign * prefix * e g^(e-1) d(g) * suffix; the rest is a unit
        y = _shift_element(pres, tgt, _invert_unit(pres, rest), sign)
        if g.domain is Domain.EXTERIOR:
            dg = y
        else:
            if e % p == 0:
                raise RuleError(f"cannot solve for d({g.name}) from a p-th power")
            power = tuple(1 - e if i == active else 0 for i in range(len(src)))
            dg = _shift_element(pres, y, power, la.inverse(e, p))
        page = derivs.setdefault(rule.page, {})
        if active in page and page[active] != dg:
            raise RuleError(f"conflicting rules for d_{rule.page}({g.name})")
        page[active] = dg
    for rule in rules:
        got = derivation(pres, derivs.get(rule.page, {}), _mono_element(pres, rule.source_monomial(pres)))
        if got != rule.target_element(pres):
            raise RuleError(
                f"rules on page {rule.page} are inconsistent at {pres.format_monomial(rule.source_monomial(pres))}"
            )
    return derivs


def derivation(pres: AlgebraPresentation, derivs: Mapping[int, Element], x: Element) -> Element:
    """Leibniz extension of generator derivatives to ``x``."""
    p = pres.prime
    out = Element.zero(p)
    if not derivs:
        return out
    acc: dict[Monomial, int] = {}
    nvars = len(pres.generators)
    for mono, coeff in x:
        for i in sorted(derivs):
            e = mono[i]
            if not e:
                continue
            g = pres.generators[i]
            prefix = tuple(mono[j] if j < i else 0 for j in range(nvars))
            suffix = tuple(mono[j] if j > i else 0 for j in range(nvars))
            sign = -1 if pres.parity(prefix) else 1
            if g.domain is Domain.EXTERIOR:
                piece = derivs[i]
                scale = 1
            else:
                lower = tuple(e - 1 if j == i else 0 for j in range(nvars))
                piece = multiply(pres, _mono_element(pres, lower), derivs[i])
                scale = e
            for m, c in piece:
                left = monomial_product(pres, prefix, m)
                if left is None:
                    continue
                sl, lm = left
                right = monomial_product(pres, lm, suffix)
                if right is None:
                    continue
                sr, z = right
                acc[z] = (acc.get(z, 0) + sign * sl * sr * scale * c * coeff) % p
    return Element(p, acc)


# -- windows and pages -------------------------------------------------------------


@dataclass(frozen=True)
class PageWindow:
    s_min: int
    s_max: int
    t_min: int
    t_max: int
    margin: int

    def interior(self) -> tuple[int, int, int, int]:
        box = (
            self.s_min + self.margin,
            self.s_max - self.margin,
            self.t_min + self.margin - 1,
            self.t_max - self.margin + 1,
        )
        if box[0] > box[1] or box[2] > box[3]:
            raise WindowError(f"window {self} has an empty interior for margin {self.margin}")
        return box

    def contains(self, b: Bidegree) -> bool:
        return self.s_min <= b[0] <= self.s_max and self.t_min <= b[1] <= self.t_max

    def in_interior(self, b: Bidegree) -> bool:
        s0, s1, t0, t1 = self.interior()
        return s0 <= b[0] <= s1 and t0 <= b[1] <= t1

    def to_dict(self) -> dict:
        return {"s_min": self.s_min, "s_max": self.s_max, "t_min": self.t_min, "t_max": self.t_max, "margin": self.margin}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PageWindow":
        return cls(*(int(doc[k]) for k in ("s_min", "s_max", "t_min", "t_max", "margin")))


@dataclass(frozen=True, eq=False)
class PageEntry:
    """One bidegree of one page.

    ``reps`` rows are E_2 vectors representing the E_r basis; ``proj`` maps
    an E_2 vector that is an r-cycle to E_r coordinates; ``cycles`` and
    ``boundaries`` are echelon bases of Z_r and B_r inside E_2.
    """

    monomials: tuple[Monomial, ...]
    reps: np.ndarray
    proj: np.ndarray
    cycles: np.ndarray
    boundaries: np.ndarray

    @property
    def dim(self) -> int:
        return self.reps.shape[0]

    @classmethod
    def initial(cls, monomials: Sequence[Monomial]) -> "PageEntry":
        n = len(monomials)
        eye = np.eye(n, dtype=np.int64)
        return cls(tuple(monomials), eye, eye, eye, np.zeros((0, n), dtype=np.int64))


@dataclass
class Page:
    r: int
    box: tuple[int, int, int, int]
    entries: dict[Bidegree, PageEntry]
    differentials: dict[Bidegree, la.FpMatrix] = field(default_factory=dict)

    def dim(self, b: Bidegree) -> int:
        e = self.entries.get(b)
        return e.dim if e is not None else 0

    def covers(self, b: Bidegree) -> bool:
        s0, s1, t0, t1 = self.box
        return s0 <= b[0] <= s1 and t0 <= b[1] <= t1


# -- parallel map over bidegrees -----------------------------------------------------

_WORKER_STATE: dict = {}


def _worker_call(item):
    return _WORKER_STATE["fn"](item)


def _pmap(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) < 64:
        return [fn(x) for x in items]
    _WORKER_STATE["fn"] = fn
    try:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            return list(pool.map(_worker_call, items, chunksize=max(1, len(items) // (4 * workers))))
    finally:
        _WORKER_STATE.clear()


# -- the spectral sequence --------------------------------------------------------------


class SpectralSequence:
    """A multiplicative spectral sequence computed on a window of bidegrees."""

    def __init__(
        self,
        presentation: AlgebraPresentation,
        rules: Sequence[DifferentialRule],
        window: PageWindow,
        workers: int = 1,
    ):
        self.presentation = presentation
        self.rules = tuple(rules)
        self.window = window
        self.workers = workers
        self.derivatives = compile_rules(presentation, self.rules)
        self.rule_pages = tuple(sorted(self.derivatives))
        longest = max(self.rule_pages, default=0)
        if window.margin < longest:
            raise WindowError(f"margin {window.margin} is shorter than the longest differential d_{longest}")
        window.interior()
        self.localization: SpectralSequence | None = None
        self._pages: dict[int, Page] = {}

    # -- basic facts --
    @property
    def prime(self) -> int:
        return self.presentation.prime

    @property
    def last_page(self) -> int:
        """First page after the last differential, i.e. E_infinity."""
        return max(self.rule_pages, default=1) + 1

    def reach(self) -> tuple[int, int]:
        return sum(self.rule_pages), sum(r - 1 for r in self.rule_pages)

    def apply_differential(self, r: int, x: Element) -> Element:
        """d_r(x) by the Leibniz rule; x should be a page-r representative."""
        x.bidegree(self.presentation)
        return derivation(self.presentation, self.derivatives.get(r, {}), x)

    def is_permanent_generator(self, name: str) -> bool:
        i = self.presentation.index(name)
        return all(i not in d or not d[i] for d in self.derivatives.values())

    # -- page computation --
    def page(self, r: int) -> Page:
        if r < 2:
            raise ValueError("pages start at E_2")
        r = min(r, self.last_page)
        if r not in self._pages:
            self._compute_through(r)
        return self._pages[r]

    def pages(self) -> list[Page]:
        return [self.page(r) for r in range(2, self.last_page + 1)]

    def _initial_page(self) -> Page:
        ds, dt = self.reach()
        w = self.window
        box = (w.s_min - ds, w.s_max + ds, w.t_min - dt, w.t_max + dt)
        bases = basis_in_region(self.presentation, (box[0], box[1]), (box[2], box[3]))
        return Page(2, box, {b: PageEntry.initial(ms) for b, ms in bases.items()})

    def _compute_through(self, r_target: int) -> None:
        if 2 not in self._pages:
            self._pages[2] = self._initial_page()
        r = max(k for k in self._pages if k <= r_target)
        while r < r_target:
            current = self._pages[r]
            if r in self.derivatives:
                current.differentials = self._differentials(current)
                self._pages[r + 1] = self._turn(current)
            else:
                self._pages[r + 1] = Page(r + 1, current.box, current.entries)
            r += 1

    def _differentials(self, page: Page) -> dict[Bidegree, la.FpMatrix]:
        r = page.r
        items = [
            b for b, e in page.entries.items()
            if e.dim and page.dim((b[0] + r, b[1] + r - 1)) and page.covers((b[0] + r, b[1] + r - 1))
        ]
        fn = _DifferentialTask(self, page)
        mats = _pmap(fn, items, self.workers)
        return dict(zip(items, mats))

    def differential_matrix(self, page: Page, b: Bidegree) -> np.ndarray:
        """Matrix of d_r from E_r at b to E_r at b + (r, r-1), in page bases."""
        r = page.r
        src = page.entries.get(b)
        tb = (b[0] + r, b[1] + r - 1)
        tgt = page.entries.get(tb)
        if src is None or tgt is None or not src.dim or not tgt.dim:
            return np.zeros((tgt.dim if tgt else 0, src.dim if src else 0), dtype=np.int64)
        pres = self.presentation
        p = pres.prime
        derivs = self.derivatives.get(r, {})
        index = {m: i for i, m in enumerate(tgt.monomials)}
        cols = []
        for row in src.reps:
            x = Element(p, [(m, int(c)) for m, c in zip(src.monomials, row) if c])
            dx = derivation(pres, derivs, x)
            v = np.zeros(len(tgt.monomials), dtype=np.int64)
            for m, c in dx:
                if m not in index:
                    raise SpectralSequenceError(f"d_{r} left bidegree {tb}")
                v[index[m]] = c
            if v.any() and not la.in_span(tgt.cycles, v, p):
                raise SpectralSequenceError(
                    f"d_{r}({x.format(pres)}) is not a cycle for earlier differentials"
                )
            cols.append(la.matmul(tgt.proj, v.reshape(-1, 1), p)[:, 0])
        return np.array(cols, dtype=np.int64).T.reshape(tgt.dim, src.dim)

    def _turn(self, page: Page) -> Page:
        r = page.r
        s0, s1, t0, t1 = page.box
        box = (s0 + r, s1 - r, t0 + r - 1, t1 - r + 1)
        items = [b for b in page.entries if box[0] <= b[0] <= box[1] and box[2] <= b[1] <= box[3]]
        fn = _TurnTask(self, page)
        entries = _pmap(fn, items, self.workers)
        return Page(r + 1, box, {b: e for b, e in zip(items, entries)})

    def next_entry(self, page: Page, b: Bidegree) -> PageEntry:
        p = self.prime
        r = page.r
        old = page.entries[b]
        n2 = len(old.monomials)
        out = page.differentials.get(b)
        src = (b[0] - r, b[1] - r + 1)
        inc = page.differentials.get(src)
        d_out = out.data if out is not None else np.zeros((0, old.dim), dtype=np.int64)
        kernel = la.row_basis(la.kernel_array(d_out, p), p) if old.dim else np.zeros((0, 0), dtype=np.int64)
        _, kpiv = la.rref_array(kernel, p)
        images = inc.data.T if inc is not None else np.zeros((0, old.dim), dtype=np.int64)
        images_k = images[:, kpiv] if images.size else np.zeros((0, len(kpiv)), dtype=np.int64)
        reps_idx, quot = la.quotient_array(len(kpiv), images_k, p)
        new_reps = la.matmul(kernel[reps_idx], old.reps, p) if reps_idx else np.zeros((0, n2), dtype=np.int64)
        new_proj = la.matmul(quot, old.proj[kpiv, :], p) if reps_idx else np.zeros((0, n2), dtype=np.int64)
        lifted_images = la.matmul(images, old.reps, p) if images.size else np.zeros((0, n2), dtype=np.int64)
        boundaries = la.row_basis(np.vstack([old.boundaries, lifted_images]), p)
        lifted_kernel = la.matmul(kernel, old.reps, p) if kernel.size else np.zeros((0, n2), dtype=np.int64)
        cycles = la.row_basis(np.vstack([boundaries, lifted_kernel]), p)
        return PageEntry(old.monomials, new_reps, new_proj, cycles, boundaries)

    # -- reporting --
    def dimension(self, r: int, s: int, t: int) -> int:
        page = self.page(r)
        if not page.covers((s, t)):
            raise WindowError(f"({s},{t}) is outside the computed box on page {r}")
        return page.dim((s, t))

    def interior_dimensions(self, r: int) -> dict[Bidegree, int]:
        s0, s1, t0, t1 = self.window.interior()
        page = self.page(r)
        return {
            b: e.dim
            for b, e in sorted(page.entries.items())
            if e.dim and s0 <= b[0] <= s1 and t0 <= b[1] <= t1
        }

    def window_dimensions(self, r: int) -> dict[Bidegree, int]:
        w = self.window
        page = self.page(r)
        return {b: e.dim for b, e in sorted(page.entries.items()) if e.dim and w.contains(b)}

    def basis(self, r: int, s: int, t: int) -> list[Element]:
        """Representatives of an E_r basis at (s, t) as E_2 elements."""
        entry = self.page(r).entries.get((s, t))
        if entry is None:
            return []
        p = self.prime
        return [Element(p, [(m, int(c)) for m, c in zip(entry.monomials, row) if c]) for row in entry.reps]

    def localization_matrix(self, r: int, b: Bidegree) -> la.FpMatrix:
        """The map E_r(source) -> E_r(self) at b induced by inverting a class."""
        if self.localization is None:
            raise ValueError("this spectral sequence was not produced by invert_class")
        src = self.localization.page(r).entries.get(b)
        tgt = self.page(r).entries.get(b)
        p = self.prime
        rows = tgt.dim if tgt else 0
        cols = src.dim if src else 0
        if not rows or not cols:
            return la.FpMatrix.zeros(p, rows, cols)
        index = {m: i for i, m in enumerate(tgt.monomials)}
        out = []
        for rep in src.reps:
            v = np.zeros(len(tgt.monomials), dtype=np.int64)
            for m, c in zip(src.monomials, rep):
                if c:
                    v[index[m]] = c
            if not la.in_span(tgt.cycles, v, p):
                raise SpectralSequenceError(f"localization does not carry cycles to cycles at {b}")
            out.append(la.matmul(tgt.proj, v.reshape(-1, 1), p)[:, 0])
        return la.FpMatrix(p, np.array(out, dtype=np.int64).T.reshape(rows, cols))

    # -- serialization --
    def to_dict(self) -> dict:
        doc = self.presentation.to_dict()
        doc["rules"] = [rule.to_dict() for rule in self.rules]
        doc["window"] = self.window.to_dict()
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping, workers: int = 1) -> "SpectralSequence":
        pres = AlgebraPresentation.from_dict(doc)
        rules = [DifferentialRule.from_dict(r) for r in doc.get("rules", [])]
        if "window" not in doc:
            raise ValueError("spectral sequence document needs a window")
        return cls(pres, rules, PageWindow.from_dict(doc["window"]), workers=workers)

    @classmethod
    def from_json(cls, text: str, workers: int = 1) -> "SpectralSequence":
        return cls.from_dict(json.loads(text), workers=workers)


class _DifferentialTask:
    def __init__(self, ss: SpectralSequence, page: Page):
        self.ss, self.page = ss, page

    def __call__(self, b: Bidegree) -> la.FpMatrix:
        return la.FpMatrix(self.ss.prime, self.ss.differential_matrix(self.page, b))


class _TurnTask:
    def __init__(self, ss: SpectralSequence, page: Page):
        self.ss, self.page = ss, page

    def __call__(self, b: Bidegree) -> PageEntry:
        return self.ss.next_entry(self.page, b)


# -- module-level operations -----------------------------------------------------------


def apply_differential(ss: SpectralSequence, r: int, x: Element) -> Element:
    return ss.apply_differential(r, x)


def turn_page(ss: SpectralSequence, r: int) -> Page:
    """Page r + 1, computing earlier pages as needed."""
    ss.page(r)
    return ss.page(r + 1)


def invert_class(ss: SpectralSequence, generator: str) -> SpectralSequence:
    """The same spectral sequence with ``generator`` made invertible.

    The result remembers ``ss`` as its localization source so the induced
    map of spectral sequences can be evaluated page by page.
    """
    pres = ss.presentation
    g = pres[generator]
    if g.domain is Domain.INVERTIBLE:
        out = SpectralSequence(pres, ss.rules, ss.window, ss.workers)
        out.localization = ss
        return out
    if g.domain is not Domain.POLYNOMIAL:
        raise ValueError(f"cannot invert exterior generator {generator}")
    for rule in ss.rules:
        if generator in dict(rule.source) and (rule.via == generator or len(rule.source) == 1):
            raise SpectralSequenceError(f"{generator} is the source of d_{rule.page}")
    if not ss.is_permanent_generator(generator):
        raise SpectralSequenceError(f"{generator} supports a differential")
    out = SpectralSequence(pres.with_domain(generator, Domain.INVERTIBLE), ss.rules, ss.window, ss.workers)
    out.localization = ss
    return out


def tensor_exterior(ss: SpectralSequence, new_generators: Iterable[GeneratorSpec]) -> SpectralSequence:
    """Tensor with an exterior algebra on permanent cycles."""
    new = tuple(new_generators)
    for g in new:
        if g.domain is not Domain.EXTERIOR:
            raise ValueError(f"{g.name} is not exterior")
    if not new:
        return ss
    pres = ss.presentation.extended(new)
    names = {g.name for g in new}
    for rule in ss.rules:
        mentioned = {n for n, _ in rule.source} | {n for m, _ in rule.target for n, _ in m}
        if mentioned & names:
            raise ValueError("new generators may not appear in differential rules")
    return SpectralSequence(pres, ss.rules, ss.window, ss.workers)
