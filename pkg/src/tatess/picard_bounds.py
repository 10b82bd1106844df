"""Bookkeeping between the additive and Picard spectral sequences, and the
resulting bounds on the descent filtration of exotic Picard groups at
height n = p - 1.

For t >= 2 a class x at additive bidegree (s, t) has a companion x_pic at
(s, t + 1) on the Picard side. A d_r on x can be imported as a d_r on x_pic
when 2 <= r <= t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import fp_linalg as la
from .graded_algebra import basis_in_bidegree
from .stabilizer_presets import (
    HeightContext,
    HypothesisError,
    _normalize_level,
    _odd_prime,
    build_preset,
    check_no_late_targets,
    necklace_count,
    preset_spectral_sequence,
)
from .spectral_sequence import UNIT_NOTE, PageWindow

UNKNOWN_BELOW_VCD = "unknown below vcd"


class _OutOfRange:
    """Marker: the differential lies outside the importable range."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "OUT_OF_RANGE"

    def __bool__(self) -> bool:
        return False


OUT_OF_RANGE = _OutOfRange()


@dataclass(frozen=True)
class PicardPageClass:
    s: int
    t: int  # additive internal degree of the companion
    page: int

    @property
    def additive_bidegree(self) -> tuple[int, int]:
        return (self.s, self.t)

    @property
    def picard_bidegree(self) -> tuple[int, int]:
        return (self.s, self.t + 1)

    @property
    def valid_through(self) -> int:
        """Last page on which differentials can be imported."""
        return self.t


def picard_shift(s: int, t: int, r: int) -> PicardPageClass | _OutOfRange:
    """Companion of the additive class at (s, t) for importing a d_r."""
    if t < 2:
        raise ValueError(f"additive degree t = {t} has no Picard companion (need t >= 2)")
    if r < 2:
        raise ValueError("differentials start on E_2")
    if r > t:
        return OUT_OF_RANGE
    return PicardPageClass(s, t, r)


# -- the diagonal filter ------------------------------------------------------------


@dataclass(frozen=True)
class Loss:
    """A drop in dim E_r at the companion bidegree during the page turn r -> r+1."""

    page: int
    kind: str  # "source" (x supports d_r) or "target" (x is hit by d_r)
    rank: int
    licensed: bool


@dataclass(frozen=True)
class DiagonalCandidate:
    t: int
    verdict: str  # "survives", "unknown below vcd", "excluded"
    reason: str
    e2_dim: int | None = None
    losses: tuple[Loss, ...] = field(default=())

    @property
    def survives(self) -> bool:
        return self.verdict != "excluded"


def _picard_group(group: str) -> str:
    g = _normalize_level(group)
    if g not in ("n", "g"):
        raise ValueError("Picard bounds are stated for the groups N and G")
    return g


def _require_p5(p: int) -> int:
    p = _odd_prime(p)
    if p < 5:
        raise HypothesisError("theorem hypotheses require p >= 5")
    return p


def _engine_verdict(p: int, t: int, workers: int) -> DiagonalCandidate:
    """Follow the companion bidegree (t+1, t) through the beta-inverted
    spectral sequence and decide whether every loss can be imported."""
    ctx = HeightContext(p)
    m = ctx.long_page
    b = (t + 1, t)
    window = PageWindow(b[0] - m, b[0] + m, b[1] - m + 1, b[1] + m - 1, m)
    ss = preset_spectral_sequence(p, "n", True, window, workers)
    ss.page(ss.last_page)
    e2 = ss.page(2).dim(b)
    losses = []
    for r in ss.rule_pages:
        page = ss.page(r)
        outgoing = page.differentials.get(b)
        src = (b[0] - r, b[1] - r + 1)
        incoming = page.differentials.get(src)
        if outgoing is not None and (out_rank := la.rank(outgoing)):
            losses.append(Loss(r, "source", out_rank, bool(picard_shift(*b, r))))
        if incoming is not None and (in_rank := la.rank(incoming)):
            losses.append(Loss(r, "target", in_rank, src[1] >= 2 and bool(picard_shift(*src, r))))
    if ss.dimension(ss.last_page, *b):
        raise RuntimeError(f"beta-inverted spectral sequence did not collapse at {b}")
    if e2 == 0:
        return DiagonalCandidate(t, "excluded", "zero in the Tate ring", 0, ())
    if all(loss.licensed for loss in losses):
        return DiagonalCandidate(t, "excluded", "every class is killed by an importable differential", e2, tuple(losses))
    return DiagonalCandidate(t, "survives", "a differential falls outside the importable range", e2, tuple(losses))


def diagonal_candidates(p: int, group: str, workers: int = 1) -> list[DiagonalCandidate]:
    """Every t in [1, 4pn + 2n] with the verdict for x_pic at (t+1, t+1)."""
    p = _require_p5(p)
    group = _picard_group(group)
    ctx = HeightContext(p)
    n, vcd = ctx.n, ctx.vcd[group]
    if not check_no_late_targets(p, workers):
        raise RuntimeError("late d_{2n^2+1} targets found; the filter's premises fail")
    out = []
    for t in range(1, 4 * p * n + 2 * n + 1):
        if t < 2 * n or t % (2 * n):
            out.append(DiagonalCandidate(t, "excluded", "sparsity"))
        elif t + 1 <= vcd:
            out.append(DiagonalCandidate(t, UNKNOWN_BELOW_VCD, "at or below the vcd"))
        elif not any((t - 2 * n * eps) % (2 * p * n) == 0 for eps in (0, 1)):
            out.append(DiagonalCandidate(t, "excluded", "degree form"))
        else:
            out.append(_engine_verdict(p, t, workers))
    return out


def permanent_cycle_filter(p: int, group: str, workers: int = 1) -> list[int]:
    """t-values whose diagonal Picard class x_pic at (t+1, t+1) may be a
    nonzero permanent cycle."""
    return [c.t for c in diagonal_candidates(p, group, workers) if c.survives]


# -- reports ------------------------------------------------------------------------


@dataclass(frozen=True)
class DegreeBound:
    degree: int
    dimension: int | None
    tag: str

    def order_bound(self, p: int) -> int | None:
        return None if self.dimension is None else p**self.dimension


@dataclass(frozen=True)
class PicardFiltrationReport:
    group: str
    prime: int
    degrees: tuple[int, ...]
    bounds: tuple[DegreeBound, ...]
    notes: tuple[str, ...]

    def __post_init__(self):
        n = self.prime - 1
        if any(d % (2 * n) != 1 for d in self.degrees):
            raise ValueError("filtration degrees must be 1 mod 2n")

    def to_dict(self) -> dict:
        return {
            "group": self.group.upper(),
            "prime": self.prime,
            "degrees": list(self.degrees),
            "bounds": [
                {"degree": b.degree, "dimension": b.dimension, "order_bound": b.order_bound(self.prime), "tag": b.tag}
                for b in self.bounds
            ],
            "notes": list(self.notes),
        }

    def to_text(self) -> str:
        lines = [f"group: {self.group.upper()}", f"prime: {self.prime}", f"degrees: {list(self.degrees)}"]
        for b in self.bounds:
            if b.dimension is None:
                lines.append(f"bound[{b.degree}]: {b.tag}")
            else:
                lines.append(f"bound[{b.degree}]: dim <= {b.dimension}, order <= {self.prime}^{b.dimension} = {b.order_bound(self.prime)} ({b.tag})")
        lines += [f"note: {note}" for note in self.notes]
        return "\n".join(lines) + "\n"


def exotic_bound_report(p: int, group: str, workers: int = 1) -> PicardFiltrationReport:
    p = _require_p5(p)
    group = _picard_group(group)
    ctx = HeightContext(p)
    vcd = ctx.vcd[group]
    degrees = tuple(t + 1 for t in permanent_cycle_filter(p, group, workers))
    pres, _ = build_preset(p, group, True)
    bounds = []
    for s in degrees:
        if s > vcd:
            dim = len(basis_in_bidegree(pres, s, s - 1))
            bounds.append(DegreeBound(s, dim, "exact Tate dimension above the vcd"))
        else:
            bounds.append(DegreeBound(s, None, f"subquotient of H^{s}({group.upper()}, E_{s - 1}), {UNKNOWN_BELOW_VCD}"))
    if group == "g" and any(b.dimension is not None for b in bounds):
        raise RuntimeError("G-report produced a numeric bound above the vcd")
    notes = [
        "surviving degrees are those not excluded by sparsity, degree form, or importable differentials",
        "the order bound counts simple p-torsion of the given F_p-dimension",
        UNIT_NOTE,
    ]
    if group == "n" and ctx.n <= 24:
        top = len(basis_in_bidegree(pres, 2 * ctx.n + 1, 2 * ctx.n))
        notes.append(
            f"dim at (2n+1, 2n) = {top}; even/even binary necklaces of length {ctx.n} = {necklace_count(ctx.n)}"
            " (reading the count as necklaces is an interpretation, checked only for n = 4, 6, 10)"
        )
    return PicardFiltrationReport(group, p, degrees, tuple(bounds), tuple(notes))
