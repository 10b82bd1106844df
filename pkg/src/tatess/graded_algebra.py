"""Bigraded-commutative algebras over F_p with exterior, polynomial and
Laurent (invertible) generators.

A monomial is a tuple of exponents aligned with the generator order of its
presentation. Signs follow total parity s + t: moving a generator of odd
total degree past another odd one costs a factor of -1.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Sequence

from .fp_linalg import check_prime

Monomial = tuple[int, ...]
Bidegree = tuple[int, int]


class Domain(str, enum.Enum):
    EXTERIOR = "exterior"
    POLYNOMIAL = "polynomial"
    INVERTIBLE = "invertible"


class NotHomogeneousError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    s: int
    t: int
    domain: Domain = Domain.POLYNOMIAL

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(self.domain))
        if not self.name or not self.name.replace("_", "").isalnum():
            raise ValueError(f"bad generator name {self.name!r}")

    @property
    def bidegree(self) -> Bidegree:
        return (self.s, self.t)

    @property
    def odd(self) -> bool:
        return (self.s + self.t) % 2 == 1


@dataclass(frozen=True)
class AlgebraPresentation:
    """Generators, their bidegrees and exponent domains, and the prime.

    ``field_note`` records the coefficient field the ring lives over in the
    source computation (e.g. ``"F_p^n"`` for the C_p ring); arithmetic is
    always over F_p. ``localizing`` names the class inverted to pass to
    Tate cohomology, if any.
    """

    prime: int
    generators: tuple[GeneratorSpec, ...]
    field_note: str = "F_p"
    localizing: str | None = None
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        check_prime(self.prime)
        object.__setattr__(self, "generators", tuple(self.generators))
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate generator names in {names}")
        for g in self.generators:
            if g.domain is not Domain.EXTERIOR and g.odd:
                raise ValueError(f"non-exterior generator {g.name} must have even total degree")
        if self.localizing is not None and self.localizing not in names:
            raise ValueError(f"localizing class {self.localizing} is not a generator")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    # -- lookup --------------------------------------------------------------
    @property
    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"no generator named {name!r}") from None

    def __getitem__(self, name: str) -> GeneratorSpec:
        return self.generators[self.index(name)]

    @property
    def exterior_indices(self) -> tuple[int, ...]:
        return tuple(i for i, g in enumerate(self.generators) if g.domain is Domain.EXTERIOR)

    @property
    def free_indices(self) -> tuple[int, ...]:
        return tuple(i for i, g in enumerate(self.generators) if g.domain is not Domain.EXTERIOR)

    @property
    def one(self) -> Monomial:
        return (0,) * len(self.generators)

    # -- monomials -----------------------------------------------------------
    def monomial(self, exponents: Mapping[str, int] | None = None, **kw: int) -> Monomial:
        exps = dict(exponents or {}, **kw)
        out = [0] * len(self.generators)
        for name, e in exps.items():
            out[self.index(name)] = int(e)
        mono = tuple(out)
        self.check_monomial(mono)
        return mono

    def check_monomial(self, mono: Monomial) -> None:
        if len(mono) != len(self.generators):
            raise ValueError(f"monomial {mono} has wrong length")
        for g, e in zip(self.generators, mono):
            if g.domain is Domain.EXTERIOR and e not in (0, 1):
                raise ValueError(f"exterior generator {g.name} has exponent {e}")
            if g.domain is Domain.POLYNOMIAL and e < 0:
                raise ValueError(f"polynomial generator {g.name} has exponent {e}")

    def bidegree(self, mono: Monomial) -> Bidegree:
        s = t = 0
        for g, e in zip(self.generators, mono):
            s += e * g.s
            t += e * g.t
        return (s, t)

    def parity(self, mono: Monomial) -> int:
        s, t = self.bidegree(mono)
        return (s + t) % 2

    def as_dict(self, mono: Monomial) -> dict[str, int]:
        return {g.name: e for g, e in zip(self.generators, mono) if e}

    def format_monomial(self, mono: Monomial) -> str:
        parts = []
        for g, e in zip(self.generators, mono):
            if e == 1:
                parts.append(g.name)
            elif e:
                parts.append(f"{g.name}^{e}")
        return " ".join(parts) if parts else "1"

    def order_key(self, mono: Monomial) -> tuple:
        return (
            tuple(mono[i] for i in self.exterior_indices),
            tuple(mono[i] for i in self.free_indices),
        )

    # -- derived presentations -----------------------------------------------
    def with_domain(self, name: str, domain: Domain) -> "AlgebraPresentation":
        i = self.index(name)
        gens = list(self.generators)
        gens[i] = replace(gens[i], domain=Domain(domain))
        return replace(self, generators=tuple(gens))

    def extended(self, new: Sequence[GeneratorSpec]) -> "AlgebraPresentation":
        clash = set(self.names) & {g.name for g in new}
        if clash:
            raise ValueError(f"generator name collision: {sorted(clash)}")
        return replace(self, generators=self.generators + tuple(new))

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        doc = {
            "prime": self.prime,
            "generators": [
                {"name": g.name, "s": g.s, "t": g.t, "domain": g.domain.value} for g in self.generators
            ],
            "field": self.field_note,
        }
        if self.localizing:
            doc["localizing"] = self.localizing
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "AlgebraPresentation":
        try:
            gens = tuple(
                GeneratorSpec(g["name"], int(g["s"]), int(g["t"]), Domain(g.get("domain", "polynomial")))
                for g in doc["generators"]
            )
            return cls(int(doc["prime"]), gens, doc.get("field", "F_p"), doc.get("localizing"))
        except KeyError as exc:
            raise ValueError(f"presentation document is missing {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "AlgebraPresentation":
        return cls.from_dict(json.loads(text))


class Element:
    """A homogeneous F_p-linear combination of monomials.

    Treated as immutable; zero coefficients are never stored.
    """

    __slots__ = ("prime", "terms")

    def __init__(self, prime: int, terms: Mapping[Monomial, int] | Iterable[tuple[Monomial, int]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, int] = {}
        for mono, c in items:
            acc[tuple(mono)] = (acc.get(tuple(mono), 0) + int(c)) % prime
        self.prime = prime
        self.terms = {m: c for m, c in sorted(acc.items()) if c}

    @classmethod
    def of(cls, prime: int, mono: Monomial, coeff: int = 1) -> "Element":
        return cls(prime, {mono: coeff})

    @classmethod
    def zero(cls, prime: int) -> "Element":
        return cls(prime)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __iter__(self) -> Iterator[tuple[Monomial, int]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Element):
            return NotImplemented
        return self.prime == other.prime and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.prime, tuple(self.terms.items())))

    def __repr__(self) -> str:
        return f"Element({self.terms})"

    def __add__(self, other: "Element") -> "Element":
        return Element(self.prime, itertools.chain(self.terms.items(), other.terms.items()))

    def __neg__(self) -> "Element":
        return self.scale(-1)

    def __sub__(self, other: "Element") -> "Element":
        return self + (-other)

    def scale(self, c: int) -> "Element":
        return Element(self.prime, {m: v * c for m, v in self.terms.items()})

    def coefficient(self, mono: Monomial) -> int:
        return self.terms.get(mono, 0)

    def bidegree(self, pres: AlgebraPresentation) -> Bidegree | None:
        degs = {pres.bidegree(m) for m in self.terms}
        if len(degs) > 1:
            raise NotHomogeneousError(f"element spans bidegrees {sorted(degs)}")
        return degs.pop() if degs else None

    def format(self, pres: AlgebraPresentation) -> str:
        if not self.terms:
            return "0"
        out = []
        for m, c in self.terms.items():
            body = pres.format_monomial(m)
            out.append(body if c == 1 else f"{c}*{body}")
        return " + ".join(out)


# -- multiplication -----------------------------------------------------------

def _odd_flags(pres: AlgebraPresentation) -> tuple[bool, ...]:
    return tuple(g.odd for g in pres.generators)


def monomial_product(pres: AlgebraPresentation, x: Monomial, y: Monomial) -> tuple[int, Monomial] | None:
    """Sign and monomial of x*y, or None if an exterior square kills it."""
    odd = _odd_flags(pres)
    z = []
    for g, a, b in zip(pres.generators, x, y):
        e = a + b
        if g.domain is Domain.EXTERIOR and e > 1:
            return None
        if g.domain is Domain.POLYNOMIAL and e < 0:
            raise ValueError(f"negative exponent for polynomial generator {g.name}")
        z.append(e)
    # y_j moves left past every odd x_i with i > j
    swaps = 0
    later_odd = 0
    for j in range(len(x) - 1, -1, -1):
        if odd[j]:
            swaps += y[j] * later_odd
            later_odd += x[j]
    return (-1 if swaps % 2 else 1), tuple(z)


def multiply(pres: AlgebraPresentation, a: Element, b: Element) -> Element:
    """Graded-commutative product of two elements."""
    p = pres.prime
    acc: dict[Monomial, int] = {}
    for x, cx in a.terms.items():
        for y, cy in b.terms.items():
            prod = monomial_product(pres, x, y)
            if prod is None:
                continue
            sign, z = prod
            acc[z] = (acc.get(z, 0) + sign * cx * cy) % p
    return Element(p, acc)


# -- basis enumeration ----------------------------------------------------------

def _masks(pres: AlgebraPresentation) -> Iterator[tuple[Monomial, Bidegree]]:
    """Exterior parts of monomials with their bidegree offsets, in mask order."""
    ext = pres.exterior_indices
    for bits in itertools.product((0, 1), repeat=len(ext)):
        mono = [0] * len(pres.generators)
        for i, b in zip(ext, bits):
            mono[i] = b
        mono = tuple(mono)
        yield mono, pres.bidegree(mono)


def _admissible(pres: AlgebraPresentation, exps: Sequence[int]) -> bool:
    return all(
        e >= 0 for i, e in zip(pres.free_indices, exps) if pres.generators[i].domain is Domain.POLYNOMIAL
    )


def _assemble(mask: Monomial, free: Sequence[int], exps: Sequence[int]) -> Monomial:
    mono = list(mask)
    for i, e in zip(free, exps):
        mono[i] = e
    return tuple(mono)


def _pivot_determinant(pres: AlgebraPresentation) -> int:
    free = pres.free_indices
    if len(free) != 2:
        return 0
    (s1, t1), (s2, t2) = (pres.generators[i].bidegree for i in free)
    return s1 * t2 - s2 * t1


def _solve_free(pres: AlgebraPresentation, ds: int, dt: int) -> list[tuple[int, ...]]:
    """All admissible exponent vectors of the free generators with bidegree (ds, dt)."""
    free = pres.free_indices
    gens = [pres.generators[i] for i in free]
    if not free:
        return [()] if (ds, dt) == (0, 0) else []
    if len(free) == 1:
        s1, t1 = gens[0].bidegree
        if (s1, t1) == (0, 0):
            raise ValueError(f"generator {gens[0].name} in bidegree (0,0) gives infinite bases")
        # a*(s1, t1) = (ds, dt)
        if s1 * dt != t1 * ds:
            return []
        a, rem = divmod(ds, s1) if s1 else divmod(dt, t1)
        sols = [(a,)] if rem == 0 else []
        return [x for x in sols if _admissible(pres, x)]
    det = _pivot_determinant(pres)
    if len(free) == 2 and det != 0:
        (s1, t1), (s2, t2) = gens[0].bidegree, gens[1].bidegree
        na = ds * t2 - s2 * dt
        nb = s1 * dt - ds * t1
        if na % det or nb % det:
            return []
        sol = (na // det, nb // det)
        return [sol] if _admissible(pres, sol) else []
    return _solve_bounded(pres, ds, dt)


def _solve_bounded(pres: AlgebraPresentation, ds: int, dt: int) -> list[tuple[int, ...]]:
    free = pres.free_indices
    gens = [pres.generators[i] for i in free]
    if not all(g.domain is Domain.POLYNOMIAL and g.s > 0 for g in gens) or any(
        g.s < 0 for g in pres.generators
    ):
        raise ValueError(
            "basis enumeration needs at most two free generators with independent bidegrees, "
            "or only polynomial generators of positive s-degree"
        )
    out = []
    ranges = [range(0, ds // g.s + 1) if ds >= 0 else range(0) for g in gens]
    for exps in itertools.product(*ranges):
        if sum(e * g.s for e, g in zip(exps, gens)) == ds and sum(e * g.t for e, g in zip(exps, gens)) == dt:
            out.append(exps)
    return out


def basis_in_bidegree(pres: AlgebraPresentation, s: int, t: int) -> list[Monomial]:
    """All monomials of bidegree (s, t), ordered by exterior mask then exponents."""
    free = pres.free_indices
    out = []
    for mask, (ms, mt) in _masks(pres):
        for exps in _solve_free(pres, s - ms, t - mt):
            out.append(_assemble(mask, free, exps))
    out.sort(key=pres.order_key)
    return out


def dimension(pres: AlgebraPresentation, s: int, t: int) -> int:
    return len(basis_in_bidegree(pres, s, t))


def basis_in_region(
    pres: AlgebraPresentation, s_range: tuple[int, int], t_range: tuple[int, int]
) -> dict[Bidegree, list[Monomial]]:
    """Nonempty bases for every bidegree in the closed box, keyed by (s, t).

    Bases agree with ``basis_in_bidegree`` bidegree by bidegree.
    """
    s_lo, s_hi = s_range
    t_lo, t_hi = t_range
    out: dict[Bidegree, list[Monomial]] = {}
    free = pres.free_indices
    if len(free) == 2 and _pivot_determinant(pres) != 0:
        (s1, t1), (s2, t2) = (pres.generators[i].bidegree for i in free)
        det = s1 * t2 - s2 * t1
        corners = [(a, b) for a in (s_lo, s_hi) for b in (t_lo, t_hi)]
        for mask, (ms, mt) in _masks(pres):
            # invert the 2x2 degree matrix on the box corners to bound exponents
            xs, ys = [], []
            for cs, ct in corners:
                ds, dt = cs - ms, ct - mt
                xs.append((ds * t2 - s2 * dt) / det)
                ys.append((s1 * dt - ds * t1) / det)
            for a in range(math.floor(min(xs)), math.ceil(max(xs)) + 1):
                for b in range(math.floor(min(ys)), math.ceil(max(ys)) + 1):
                    s = ms + a * s1 + b * s2
                    t = mt + a * t1 + b * t2
                    if s_lo <= s <= s_hi and t_lo <= t <= t_hi and _admissible(pres, (a, b)):
                        out.setdefault((s, t), []).append(_assemble(mask, free, (a, b)))
        for basis in out.values():
            basis.sort(key=pres.order_key)
        return dict(sorted(out.items()))
    for s in range(s_lo, s_hi + 1):
        for t in range(t_lo, t_hi + 1):
            basis = basis_in_bidegree(pres, s, t)
            if basis:
                out[(s, t)] = basis
    return out


# -- the N-ring degree equations, solved directly -------------------------------------

def solve_degree_equations(p: int, s_target: int, t_target: int) -> list[tuple[int, ...]]:
    """Integer solutions (k, eps, eps_0, ..., eps_{n-1}, m) for the N-ring at n = p - 1.

    A monomial alpha^eps beta^m Delta^k a_0^eps_0 ... a_{n-1}^eps_{n-1} has
    s = eps + 2m + sum(eps_i) and t = 2n*eps + 2pn*m + 2pn^2*k + 2p^2n*sum(i*eps_i).
    """
    n = p - 1
    out = []
    for eps in (0, 1):
        for bits in itertools.product((0, 1), repeat=n):
            twice_m = s_target - eps - sum(bits)
            if twice_m % 2:
                continue
            m = twice_m // 2
            rest = t_target - 2 * n * eps - 2 * p * n * m - 2 * p * p * n * sum(i * b for i, b in enumerate(bits))
            if rest % (2 * p * n * n):
                continue
            k = rest // (2 * p * n * n)
            out.append((k, eps, *bits, m))
    return out
