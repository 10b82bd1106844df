"""Independent reference computations used to freeze expected values.

Nothing here calls the solver paths under test: bases are found by brute
force over bounded exponent boxes, necklaces by Burnside's lemma, and
differentials by the closed forms for the F-ring.
"""

from __future__ import annotations

import itertools
import math
import random

from tatess.graded_algebra import AlgebraPresentation, Domain, Element, basis_in_bidegree


def burnside_even_necklaces(n: int) -> int:
    """Binary necklaces of length n with an even number of 1s (n even, so
    also an even number of 0s), counted with Burnside's lemma.

    A rotation by k fixes the strings that are periodic with period
    g = gcd(k, n); such a string has an even number of 1s iff its first g
    symbols do (when n/g is odd) or always (when n/g is even).
    """
    if n == 0:
        return 1
    total = 0
    for k in range(n):
        g = math.gcd(k, n)
        total += 2**g if (n // g) % 2 == 0 else 2 ** (g - 1)
    assert total % n == 0
    return total // n


def brute_basis(pres: AlgebraPresentation, s: int, t: int, bound: int = 40) -> set[tuple[int, ...]]:
    """Every monomial of bidegree (s, t) with free exponents in [-bound, bound]."""
    ranges = []
    for g in pres.generators:
        if g.domain is Domain.EXTERIOR:
            ranges.append((0, 1))
        elif g.domain is Domain.POLYNOMIAL:
            ranges.append(range(0, bound + 1))
        else:
            ranges.append(range(-bound, bound + 1))
    ext = [i for i, g in enumerate(pres.generators) if g.domain is Domain.EXTERIOR]
    free = [i for i in range(len(pres.generators)) if i not in ext]
    out = set()
    # exterior masks by brute force, then a bounded scan over all but the
    # last free generator, solving for the last one directly
    for mask in itertools.product((0, 1), repeat=len(ext)):
        ds = s - sum(pres.generators[i].s * e for i, e in zip(ext, mask))
        dt = t - sum(pres.generators[i].t * e for i, e in zip(ext, mask))
        *scan, last = free
        for exps in itertools.product(*(ranges[i] for i in scan)):
            rs = ds - sum(pres.generators[i].s * e for i, e in zip(scan, exps))
            rt = dt - sum(pres.generators[i].t * e for i, e in zip(scan, exps))
            g = pres.generators[last]
            if g.s:
                if rs % g.s:
                    continue
                e = rs // g.s
                if g.t * e != rt:
                    continue
            elif g.t:
                if rs or rt % g.t:
                    continue
                e = rt // g.t
            else:
                continue
            if e not in ranges[last]:
                continue
            mono = [0] * len(pres.generators)
            for i, v in zip(ext, mask):
                mono[i] = v
            for i, v in zip(scan, exps):
                mono[i] = v
            mono[last] = e
            out.add(tuple(mono))
    return out


def closed_form_short(p: int, m: int, k: int) -> tuple[int, dict[str, int]] | None:
    """d_{2n+1}(beta^m Delta^k) = k alpha beta^{m+n} Delta^{k-1}."""
    n = p - 1
    if k % p == 0:
        return None
    return k % p, {"alpha": 1, "beta": m + n, "Delta": k - 1}


def closed_form_long(p: int, m: int, k: int) -> tuple[int, dict[str, int]]:
    """d_{2n^2+1}(alpha beta^m Delta^{n+pk}) = beta^{m+n^2+1} Delta^{pk}."""
    n = p - 1
    return 1, {"beta": m + n * n + 1, "Delta": p * k}


def random_monomial(pres: AlgebraPresentation, rng: random.Random, spread: int = 4) -> tuple[int, ...]:
    mono = []
    for g in pres.generators:
        if g.domain is Domain.EXTERIOR:
            mono.append(rng.randint(0, 1))
        elif g.domain is Domain.POLYNOMIAL:
            mono.append(rng.randint(0, spread))
        else:
            mono.append(rng.randint(-spread, spread))
    return tuple(mono)


def random_homogeneous(pres: AlgebraPresentation, rng: random.Random, max_terms: int = 4) -> Element:
    """A random nonzero homogeneous element: a random seed monomial fixes
    the bidegree, then random coefficients on a few basis monomials."""
    p = pres.prime
    s, t = pres.bidegree(random_monomial(pres, rng))
    basis = basis_in_bidegree(pres, s, t)
    chosen = rng.sample(basis, min(len(basis), rng.randint(1, max_terms)))
    return Element(p, [(m, rng.randrange(1, p)) for m in chosen])
