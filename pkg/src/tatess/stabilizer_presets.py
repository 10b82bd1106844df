"""Shipped rings and differentials for the Morava stabilizer group and its
subgroups at height n = p - 1.

Levels: ``cp`` (the cyclic subgroup of order p, over F_{p^n}), ``f`` (a
maximal finite subgroup), ``n`` (the normalizer of C_p) and ``g`` (the full
group). The N and G rings coincide in Tate cohomology.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .graded_algebra import AlgebraPresentation, Domain, GeneratorSpec, basis_in_bidegree, basis_in_region, solve_degree_equations
from .fp_linalg import check_prime
from .spectral_sequence import DifferentialRule, PageWindow, SpectralSequence

LEVELS = ("cp", "f", "n", "g")


class HypothesisError(ValueError):
    """Inputs violate a standing hypothesis (odd prime, p >= 5, ...)."""


def _normalize_level(level: str) -> str:
    key = str(level).lower()
    aliases = {"c_p": "cp", "𝔾": "g", "gg": "g"}
    key = aliases.get(key, key)
    if key not in LEVELS:
        raise ValueError(f"unknown level {level!r}; expected one of {', '.join(LEVELS)}")
    return key


def _odd_prime(p: int) -> int:
    p = check_prime(p)
    if p == 2:
        raise HypothesisError("p must be an odd prime")
    return p


@dataclass(frozen=True)
class HeightContext:
    p: int

    def __post_init__(self):
        _odd_prime(self.p)

    @property
    def n(self) -> int:
        return self.p - 1

    @property
    def vcd(self) -> dict[str, int]:
        n = self.n
        return {"cp": 0, "f": 0, "n": n, "g": n * n}

    @property
    def beta_bidegree(self) -> tuple[int, int]:
        return (2, 2 * self.p * self.n)

    @property
    def delta_bidegree(self) -> tuple[int, int]:
        return (0, 2 * self.p * self.n**2)

    @property
    def short_page(self) -> int:
        return 2 * self.n + 1

    @property
    def long_page(self) -> int:
        return 2 * self.n**2 + 1

    @property
    def collapse_page(self) -> int:
        return 2 * self.n**2 + 2

    def default_window(self) -> PageWindow:
        n, p = self.n, self.p
        t = 4 * p * n * n + 4 * p * n
        return PageWindow(0, 4 * n * n + 4 * n, -t, t, self.long_page)


def exterior_generators(p: int) -> list[GeneratorSpec]:
    n = p - 1
    return [GeneratorSpec(f"a_{i}", 1, 2 * p * p * n * i, Domain.EXTERIOR) for i in range(n)]


def build_preset(p: int, level: str, inverted: bool = True) -> tuple[AlgebraPresentation, list[DifferentialRule]]:
    """Presentation and differential rules for one level.

    The rules are d_{2n+1}(Delta) = alpha beta^n and
    d_{2n^2+1}(Delta^n alpha) = beta^{n^2+1}, normalized to unit
    coefficients. On the C_p ring Delta stands for delta^{n^2}.
    """
    p = _odd_prime(p)
    level = _normalize_level(level)
    ctx = HeightContext(p)
    n = ctx.n
    beta_domain = Domain.INVERTIBLE if inverted else Domain.POLYNOMIAL
    alpha = GeneratorSpec("alpha", 1, 2 * n, Domain.EXTERIOR)
    beta = GeneratorSpec("beta", *ctx.beta_bidegree, beta_domain)
    if level == "cp":
        delta = GeneratorSpec("delta", 0, 2 * p, Domain.INVERTIBLE)
        pres = AlgebraPresentation(p, (alpha, beta, delta), field_note="F_p^n", localizing="beta")
        rules = [
            DifferentialRule.make(ctx.short_page, {"delta": n * n}, {"alpha": 1, "beta": n}),
            DifferentialRule.make(ctx.long_page, {"delta": n**3, "alpha": 1}, {"beta": n * n + 1}),
        ]
        return pres, rules
    Delta = GeneratorSpec("Delta", *ctx.delta_bidegree, Domain.INVERTIBLE)
    gens = (alpha, beta, Delta)
    if level in ("n", "g"):
        gens = gens + tuple(exterior_generators(p))
    pres = AlgebraPresentation(p, gens, field_note="F_p", localizing="beta")
    rules = [
        DifferentialRule.make(ctx.short_page, "Delta", {"alpha": 1, "beta": n}),
        DifferentialRule.make(ctx.long_page, {"Delta": n, "alpha": 1}, {"beta": n * n + 1}),
    ]
    return pres, rules


def preset_spectral_sequence(
    p: int, level: str, inverted: bool = True, window: PageWindow | None = None, workers: int = 1
) -> SpectralSequence:
    pres, rules = build_preset(p, level, inverted)
    return SpectralSequence(pres, rules, window or HeightContext(p).default_window(), workers=workers)


# -- checks ---------------------------------------------------------------------------


def _nonzero_bidegrees(pres: AlgebraPresentation, window: PageWindow):
    return basis_in_region(pres, (window.s_min, window.s_max), (window.t_min, window.t_max)).keys()


def sparsity_check(pres: AlgebraPresentation, window: PageWindow) -> bool:
    """Every nonzero bidegree in the window has t divisible by 2(p - 1)."""
    if pres.field_note != "F_p":
        raise HypothesisError("sparsity needs the central roots of unity; the C_p level lacks them")
    step = 2 * (pres.prime - 1)
    return all(t % step == 0 for _, t in _nonzero_bidegrees(pres, window))


def degree_form_check(pres: AlgebraPresentation, window: PageWindow, vcd: int) -> bool:
    """Every nonzero (s, t) with s > vcd has t = 2n*eps + 2pn*l, eps in {0, 1}."""
    p = pres.prime
    n = p - 1
    for s, t in _nonzero_bidegrees(pres, window):
        if s <= vcd:
            continue
        if not any((t - 2 * n * eps) % (2 * p * n) == 0 for eps in (0, 1)):
            return False
    return True


def late_target_candidates(p: int) -> list[tuple[int, ...]]:
    """Solutions of the epsilon = 0 degree equations for classes at (t+1, t),
    n^2 <= t <= 4pn, of the form beta^m Delta^{pk} a-mask.

    Returns (m, k, eps_0, ..., eps_{n-1}) with
    2m + sum(eps_i) = t + 1 and 2pn*m + 2p^2n^2*k + 2p^2n*sum(i eps_i) = t.
    """
    n = p - 1
    out = []
    for t in range(n * n, 4 * p * n + 1):
        for k, eps, *bits, m in solve_degree_equations(p, t + 1, t):
            if eps == 0 and k % p == 0:
                out.append((t, m, k // p, *bits))
    return out


def check_no_late_targets(p: int, workers: int = 1) -> bool:
    """No class at (t+1, t), n^2 <= t <= 4pn, surviving to E_{2n^2+1} of the
    beta-inverted N spectral sequence is hit by d_{2n^2+1}.

    Verified twice: by the page computation and by the degree equations.
    """
    p = _odd_prime(p)
    if p < 5:
        raise HypothesisError("this check needs p >= 5 (so that n^2 > 2n + 1)")
    ctx = HeightContext(p)
    n = ctx.n
    r = ctx.long_page
    t_lo, t_hi = n * n, 4 * p * n
    # the checked bidegrees must sit in the window interior
    window = PageWindow(t_lo + 1 - r, t_hi + 1 + r, t_lo - r + 1, t_hi + r - 1, r)
    ss = preset_spectral_sequence(p, "n", True, window, workers)
    ss.page(r + 1)
    page = ss.page(r)
    hit = False
    for t in range(t_lo, t_hi + 1):
        b = (t + 1, t)
        src = (b[0] - r, b[1] - r + 1)
        mat = page.differentials.get(src)
        if page.dim(b) and mat is not None and not mat.is_zero():
            hit = True
    algebraic = not late_target_candidates(p)
    if hit and algebraic:
        raise RuntimeError("page computation found a late target the degree equations exclude")
    return not hit and algebraic


# -- the necklace count -------------------------------------------------------------------


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x - ((x >> 1) & 0x55555555)
    x = (x & 0x33333333) + ((x >> 2) & 0x33333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F
    return (x * 0x01010101 & 0xFFFFFFFF) >> 24


def necklace_count(n: int) -> int:
    """Binary necklaces of length n with an even number of 0s and of 1s.

    Enumerates all 2^n strings and keeps those that are the least rotation
    of their class.
    """
    if n < 0 or n % 2:
        raise ValueError("n must be a nonnegative even integer")
    if n > 24:
        raise ValueError("n must be at most 24")
    if n == 0:
        return 1
    mask = (1 << n) - 1
    x = np.arange(1 << n, dtype=np.int64)
    least = x.copy()
    for k in range(1, n):
        rot = ((x << k) | (x >> (n - k))) & mask
        np.minimum(least, rot, out=least)
    keep = (least == x) & (_popcount(x) % 2 == 0)
    return int(keep.sum())


def basis_count_by_subsets(n: int) -> int:
    """Count 2l-subsets {i_1 < ... < i_2l} of {0..n-1} with n | (l - sum i_j).

    Each such subset fixes k uniquely, giving one basis element of the N-ring
    at (2n+1, 2n).
    """
    count = 0
    for size in range(0, n + 1, 2):
        l = size // 2
        for subset in itertools.combinations(range(n), size):
            if (l - sum(subset)) % n == 0:
                count += 1
    return count


def top_dimension(p: int) -> int:
    """dim of the N-ring at (2n+1, 2n)."""
    pres, _ = build_preset(p, "n", True)
    n = p - 1
    return len(basis_in_bidegree(pres, 2 * n + 1, 2 * n))
