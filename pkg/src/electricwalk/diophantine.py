"""Continued fractions, approximation-quality bounds, and revival certificates.

The expansion of a real number given to D decimal digits is *certified*:
coefficients are emitted only while interval arithmetic over
[value - 10^-D, value + 10^-D] pins them down, so the returned prefix is
shared by every number compatible with the declared precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .walkcore import (
    Coin,
    FieldSpec,
    WalkState,
    revival_parameters,
    step,
    return_probability,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# continued fractions
# ---------------------------------------------------------------------------

def _convergents_from_coefficients(coeffs: list[int]) -> list[tuple[int, int]]:
    """Run r_k = c_k r_{k-1} + r_{k-2} with seeds n_-1=1, q_-1=0, n_0=c_0, q_0=1."""
    out = []
    n_prev, q_prev = 1, 0
    n_cur, q_cur = coeffs[0], 1
    out.append((n_cur, q_cur))
    for c in coeffs[1:]:
        n_cur, n_prev = c * n_cur + n_prev, n_cur
        q_cur, q_prev = c * q_cur + q_prev, q_cur
        out.append((n_cur, q_cur))
    return out


@dataclass(frozen=True)
class ContinuedFraction:
    """Certified continued-fraction prefix with its convergents.

    ``exact`` means the expansion terminated (rational input reproduced
    exactly); ``exhausted`` means the declared precision ran out before
    ``max_depth`` coefficients were certified.
    """

    coefficients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    exact: bool = False
    exhausted: bool = False
    digits: int | None = None
    value: Fraction | None = None

    def __post_init__(self):
        cs = self.coefficients
        if not cs or cs[0] < 0 or any(c < 1 for c in cs[1:]):
            raise ValueError(f"invalid coefficient sequence {cs}")

    @classmethod
    def from_coefficients(cls, coeffs, exact=False, exhausted=False,
                          digits=None, value=None) -> "ContinuedFraction":
        coeffs = tuple(int(c) for c in coeffs)
        convs = tuple(_convergents_from_coefficients(list(coeffs)))
        return cls(coeffs, convs, exact, exhausted, digits, value)

    @property
    def certified_depth(self) -> int:
        return len(self.coefficients)

    def __str__(self) -> str:
        c0, rest = self.coefficients[0], self.coefficients[1:]
        body = ", ".join(str(c) for c in rest)
        tail = "" if self.exact else ", ..."
        return f"({c0}; {body}{tail})" if rest else f"({c0}{tail})"


def _expand_exact(x: Fraction, max_depth: int) -> tuple[list[int], bool]:
    coeffs = []
    for _ in range(max_depth):
        c = x.numerator // x.denominator
        coeffs.append(c)
        rem = x - c
        if rem == 0:
            return coeffs, True
        x = 1 / rem
    return coeffs, False


def expand(value, max_depth: int = 40, digits: int | None = None) -> ContinuedFraction:
    """Continued-fraction expansion of a nonnegative number.

    ``value`` may be a FieldSpec, Fraction, int, float, or decimal string.
    Rational inputs without a declared precision terminate exactly.  With
    ``digits`` (or a real FieldSpec) only interval-certified coefficients
    are returned; therest of the tail is unknowable at that precision.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    label_digits = digits
    if isinstance(value, FieldSpec):
        label_digits = value.digits if digits is None else digits
        x = value.nu
    elif isinstance(value, Fraction):
        x = value
    elif isinstance(value, int):
        x = Fraction(value)
    elif isinstance(value, str):
        x = Fraction(value)
    else:
        x = Fraction(float(value))
    if x < 0:
        raise ValueError("expansion requires a nonnegative value")

    if label_digits is None:
        coeffs, exact = _expand_exact(x, max_depth)
        return ContinuedFraction.from_coefficients(
            coeffs, exact=exact, exhausted=not exact, value=x)

    u = Fraction(1, 10 ** label_digits)
    lo, hi = x - u, x + u
    coeffs: list[int] = []
    for _ in range(max_depth):
        c_lo = lo.numerator // lo.denominator
        c_hi = hi.numerator // hi.denominator
        if c_lo != c_hi:
            return ContinuedFraction.from_coefficients(
                coeffs or [c_hi], exhausted=True, digits=label_digits, value=x)
        coeffs.append(c_lo)
        lo, hi = lo - c_lo, hi - c_lo
        if lo <= 0:
            # interval touches an integer; the next coefficient is not certified
            return ContinuedFraction.from_coefficients(
                coeffs, exhausted=True, digits=label_digits, value=x)
        lo, hi = 1 / hi, 1 / lo
    return ContinuedFraction.from_coefficients(
        coeffs, digits=label_digits, value=x)


def convergents(cf: ContinuedFraction) -> list[tuple[int, int]]:
    """The convergents n_k/q_k of a continued fraction, in lowest terms."""
    return list(cf.convergents)


def approximation_quality(cf: ContinuedFraction, k: int) -> Fraction:
    """Upper bound 1/(c_{k+1} q_k^2) on |value - n_k/q_k| (exact Fraction)."""
    if k < 0 or k + 1 >= len(cf.coefficients):
        raise IndexError(f"level {k} needs coefficient c_{k + 1}")
    _, q = cf.convergents[k]
    return Fraction(1, cf.coefficients[k + 1] * q * q)


def deviation_bound(t: int, L: int, delta_phi):
    """Worst-case state deviation (t/2)(t + 2L - 1)|dPhi| after t steps.

    Valid for initial states vanishing outside |x| < L when two walks
    differ only in the field, by Phi vs Phi'.
    """
    if t < 0 or L < 1:
        raise ValueError("need t >= 0 and L >= 1")
    # t*(t+2L-1) is always even, keep the prefactor exact
    return (t * (t + 2 * L - 1) // 2) * abs(delta_phi)


# ---------------------------------------------------------------------------
# revival certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RevivalCertificate:
    """Rigorous bound on || W^time psi + sign psi || for states in |x| < L."""

    level: int
    numerator: int
    denominator: int
    time: int
    sign: int
    theorem_term: float
    deviation_term: float
    support_radius: int

    @property
    def total(self) -> float:
        return self.theorem_term + self.deviation_term

    @property
    def nontrivial(self) -> bool:
        # || W^t psi + (+-1) psi || <= 2 holds for free
        return self.total < 2.0

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "convergent": [self.numerator, self.denominator],
            "time": self.time,
            "sign": self.sign,
            "theorem_term": self.theorem_term,
            "deviation_term": self.deviation_term,
            "total": self.total,
            "nontrivial": self.nontrivial,
            "support_radius": self.support_radius,
        }


def revival_schedule(cf: ContinuedFraction, coin: Coin, L: int = 1,
                     levels: int | None = None) -> list[RevivalCertificate]:
    """Revival certificates from the convergents of ``cf``.

    Level k predicts a revival at q_k (even) or 2 q_k (odd) steps with
    total bound = theorem term + deviation term, the latter from the
    field uncertainty 2*pi/(c_{k+1} q_k^2).  For the final convergent of
    an exactly terminating expansion the deviation term is zero.
    """
    out = []
    n_levels = len(cf.convergents) if levels is None else min(levels, len(cf.convergents))
    for k in range(n_levels):
        n_k, q_k = cf.convergents[k]
        time, sign, theorem = revival_parameters(coin, q_k)
        if k + 1 < len(cf.coefficients):
            dphi = TWO_PI / (cf.coefficients[k + 1] * q_k * q_k)
            dev = float(deviation_bound(time, L, dphi))
        elif cf.exact:
            dev = 0.0
        else:
            # tail unknown: c_{k+1} >= 1 is the only safe assumption
            dev = float(deviation_bound(time, L, TWO_PI / (q_k * q_k)))
        out.append(RevivalCertificate(k, n_k, q_k, time, sign, theorem, dev, L))
    return out


# ---------------------------------------------------------------------------
# hierarchical field construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HierarchicalSpec:
    """Prescribed revival errors and excursion intervals, plus budgets."""

    epsilons: tuple[float, ...]
    intervals: tuple[tuple[int, int], ...]
    max_steps: int = 5000
    max_support: int = 200_000

    def __post_init__(self):
        eps = self.epsilons
        if not eps or any(e <= 0 for e in eps):
            raise ValueError("epsilons must be positive")
        if any(later >= earlier for earlier, later in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        if len(self.intervals) != len(eps):
            raise ValueError("need one interval per epsilon")
        for (lo, hi) in self.intervals:
            if lo > hi:
                raise ValueError("interval must satisfy lo <= hi")
        for (lo, hi), (lo2, hi2) in zip(self.intervals, self.intervals[1:]):
            if lo2 > lo or hi2 < hi:
                raise ValueError("intervals must be nested increasing")

    @classmethod
    def make(cls, epsilons, intervals, max_steps=5000, max_support=200_000):
        return cls(tuple(float(e) for e in epsilons),
                   tuple((int(a), int(b)) for a, b in intervals),
                   max_steps, max_support)


@dataclass(frozen=True)
class HierarchicalLevel:
    """One certified level of the construction and its verification data."""

    level: int
    cf_index: int
    numerator: int
    denominator: int
    revival_time: int
    sign: int
    theorem_term: float
    deviation_revival: float
    revival_bound: float
    epsilon: float
    interval: tuple[int, int]
    excursion_time: int
    rational_return_max: float
    deviation_excursion: float
    escape_bound: float
    slack_dim: int
    c_next: int
    verified: dict | None = None

    def as_dict(self) -> dict:
        d = {
            "level": self.level,
            "cf_index": self.cf_index,
            "convergent": [self.numerator, self.denominator],
            "revival_time": self.revival_time,
            "sign": self.sign,
            "theorem_term": self.theorem_term,
            "deviation_revival": self.deviation_revival,
            "revival_bound": self.revival_bound,
            "epsilon": self.epsilon,
            "interval": list(self.interval),
            "excursion_time": self.excursion_time,
            "rational_return_max": self.rational_return_max,
            "deviation_excursion": self.deviation_excursion,
            "escape_bound": self.escape_bound,
            "slack_dim": self.slack_dim,
            "c_next": self.c_next,
        }
        if self.verified is not None:
            d["verified"] = self.verified
        return d


@dataclass(frozen=True)
class HierarchicalResult:
    coefficients: tuple[int, ...]
    levels: tuple[HierarchicalLevel, ...]
    stopped: str

    @property
    def prefix(self) -> ContinuedFraction:
        return ContinuedFraction.from_coefficients(self.coefficients)

    def concrete_field(self, tail_ones: int = 20) -> FieldSpec:
        """A rational stand-in whose expansion starts with the prefix."""
        coeffs = list(self.coefficients) + [1] * tail_ones + [2]
        n, q = _convergents_from_coefficients(coeffs)[-1]
        return FieldSpec.rational(n, q)


def _interval_basis_states(interval: tuple[int, int]) -> list[WalkState]:
    lo, hi = interval
    states = []
    for x in range(lo, hi + 1):
        states.append(WalkState.point(x, (1.0, 0.0)))
        states.append(WalkState.point(x, (0.0, 1.0)))
    return states


def _interval_return(state: WalkState, interval: tuple[int, int]) -> float:
    lo, hi = interval
    return sum(return_probability(state, x) for x in range(lo, hi + 1))


def _find_excursion(coin: Coin, field: FieldSpec, interval: tuple[int, int],
                    threshold: float, max_steps: int, max_support: int):
    """Earliest t with every basis-state return probability <= threshold.

    The threshold must hold at two consecutive steps; a single step can
    satisfy it vacuously through the sublattice parity zeros.  The even
    member of the qualifying pair is reported (its value is the honest,
    parity-nontrivial one).
    """
    states = _interval_basis_states(interval)
    prev_worst = None
    for t in range(1, max_steps + 2):
        states = [step(s, coin, field, max_support=max_support) for s in states]
        worst = max(_interval_return(s, interval) for s in states)
        if prev_worst is not None and prev_worst <= threshold and worst <= threshold:
            if (t - 1) % 2 == 0:
                return t - 1, prev_worst
            return t, worst
        prev_worst = worst
    return None, None


def _theorem_term(coin: Coin, q: int) -> float:
    return revival_parameters(coin, q)[2]


def construct_hierarchical_field(spec: HierarchicalSpec, coin: Coin,
                                 verify: bool = True,
                                 n_verify_states: int = 5,
                                 rng=None) -> HierarchicalResult:
    """Fix continued-fraction coefficients level by level.

    For each level j the constructor (i) extends the prefix until the
    revival theorem term at the current convergent is below eps_j / 2,
    (ii) finds an excursion time for the rational walk at which every
    basis state in I_j has left I_j below a threshold with convexity
    headroom, and (iii) picks the next coefficient large enough that the
    field uncertainty keeps both the revival and the excursion claims
    valid for every continuation of the prefix.  Stops when a simulation
    budget runs out, returning the completed levels.
    """
    if abs(coin.a) >= 1.0 - 1e-12:
        raise ValueError("coin with |a| = 1 never turns ballistic")
    if rng is None:
        rng = np.random.default_rng(0)

    coeffs = [0]
    levels: list[HierarchicalLevel] = []
    stopped = "all levels completed"

    for j, (eps, interval) in enumerate(zip(spec.epsilons, spec.intervals)):
        L = max(abs(interval[0]), abs(interval[1])) + 1
        # (i) make the theorem term small enough
        if len(coeffs) == 1:
            c1 = None
            for c in range(1, 10_000):
                if _theorem_term(coin, c) <= eps / 2:
                    c1 = c
                    break
            if c1 is None:
                stopped = f"level {j}: no starting denominator reaches eps/2"
                break
            coeffs.append(c1)
        else:
            while _theorem_term(coin, _convergents_from_coefficients(coeffs)[-1][1]) > eps / 2:
                coeffs.append(1)
        k = len(coeffs) - 1
        n_k, q_k = _convergents_from_coefficients(coeffs)[-1]
        t_rev, rev_sign, theorem = revival_parameters(coin, q_k)
        if t_rev > spec.max_steps:
            stopped = f"level {j}: revival time {t_rev} exceeds step budget"
            break

        # (ii) excursion time for the rational walk, with convexity headroom:
        # any state in I is bounded by dim * (sqrt(p_basis) + dev)^2, so ask
        # for p_basis <= eps/(8 dim) and later dev <= sqrt(eps/(8 dim)).
        dim = 2 * (interval[1] - interval[0] + 1)
        amp_budget = math.sqrt(eps / (8.0 * dim))
        field_k = FieldSpec.rational(n_k, q_k)
        t_exc, p_max = _find_excursion(coin, field_k, interval,
                                       amp_budget ** 2, spec.max_steps,
                                       spec.max_support)
        if t_exc is None:
            stopped = f"level {j}: no excursion time within {spec.max_steps} steps"
            break

        # (iii) next coefficient from the closed-form requirements
        qsq = q_k * q_k
        c_rev = TWO_PI * (t_rev * (t_rev + 2 * L - 1) / 2) / (qsq * max(eps - theorem, 1e-300))
        c_exc = TWO_PI * (t_exc * (t_exc + 2 * L - 1) / 2) / (qsq * amp_budget)
        c_next = max(1, math.ceil(c_rev), math.ceil(c_exc))
        if j + 1 < len(spec.epsilons):
            # leave the next level a convergent already past its theorem bound
            eps_next = spec.epsilons[j + 1]
            q_needed = 2.0 * math.log(4.0 / eps_next) / max(-math.log(abs(coin.a)), 1e-300)
            q_prev = _convergents_from_coefficients(coeffs)[-2][1] if k >= 1 else 0
            c_grow = (q_needed - q_prev) / q_k
            c_next = max(c_next, math.ceil(c_grow))

        dev_rev = float(deviation_bound(t_rev, L, TWO_PI / (c_next * qsq)))
        dev_exc = float(deviation_bound(t_exc, L, TWO_PI / (c_next * qsq)))
        escape = dim * (math.sqrt(p_max) + dev_exc) ** 2
        cert = HierarchicalLevel(
            level=j, cf_index=k, numerator=n_k, denominator=q_k,
            revival_time=t_rev, sign=rev_sign, theorem_term=theorem,
            deviation_revival=dev_rev, revival_bound=theorem + dev_rev,
            epsilon=eps, interval=interval, excursion_time=t_exc,
            rational_return_max=p_max, deviation_excursion=dev_exc,
            escape_bound=escape, slack_dim=dim, c_next=c_next,
        )
        coeffs.append(c_next)

        if verify:
            cert = _verify_level(cert, coeffs, coin, spec, n_verify_states, rng)
        levels.append(cert)

    return HierarchicalResult(tuple(coeffs), tuple(levels), stopped)


def _verify_level(cert: HierarchicalLevel, coeffs: list[int], coin: Coin,
                  spec: HierarchicalSpec, n_states: int, rng) -> HierarchicalLevel:
    """Direct simulation check against a concrete continuation of the prefix."""
    tail = list(coeffs) + [1] * 20 + [2]
    n, q = _convergents_from_coefficients(tail)[-1]
    field = FieldSpec.rational(n, q)
    lo, hi = cert.interval
    width = hi - lo + 1

    worst_rev = 0.0
    for _ in range(n_states):
        raw = rng.normal(size=(width, 2)) + 1j * rng.normal(size=(width, 2))
        raw /= np.linalg.norm(raw)
        st = WalkState(lo, raw.astype(np.complex128))
        ev = st
        for _ in range(cert.revival_time):
            ev = step(ev, coin, field, max_support=spec.max_support)
        off = st.x_min - ev.x_min
        diff = ev.amps.copy()
        diff[off:off + st.n_sites] += cert.sign * st.amps
        worst_rev = max(worst_rev, float(np.linalg.norm(diff)))

    worst_escape = 0.0
    for st in _interval_basis_states(cert.interval):
        ev = st
        for _ in range(cert.excursion_time):
            ev = step(ev, coin, field, max_support=spec.max_support)
        worst_escape = max(worst_escape, _interval_return(ev, cert.interval))
    any_state_escape = cert.slack_dim * worst_escape

    verified = {
        "field": f"{n}/{q}",
        "revival_measured_max": worst_rev,
        "revival_ok": worst_rev <= cert.revival_bound + 1e-9,
        "escape_basis_measured_max": worst_escape,
        "escape_bound_measured": any_state_escape,
        "escape_ok": any_state_escape <= cert.epsilon / 2 + 1e-9,
    }
    return replace(cert, verified=verified)
