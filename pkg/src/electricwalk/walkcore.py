"""Position-space dynamics of the electric quantum walk.

One time step applies, in order, the state-dependent shift
S|x,a> = |x+a,a>, an SU(2) coin acting on basis kets as
C|x,a> = sum_b C_ab |x,b>, and the site-linear phase exp(i*x*Phi).
On amplitude pairs psi(x) = (psi(x,+1), psi(x,-1)) this reads

    psi'(x,+1) = e^{ix Phi} [ a * psi(x-1,+1) - conj(b) * psi(x+1,-1) ]
    psi'(x,-1) = e^{ix Phi} [ b * psi(x-1,+1) + conj(a) * psi(x+1,-1) ]

States are dense two-component arrays over a contiguous window with an
integer offset, either complex128 (machine mode) or mpmath mpc entries
(high-precision mode, ``dps`` decimal digits).  All operations are pure:
they return fresh states and never renormalize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import PrecisionExhaustedError, SupportOverflowError
from .hp import mpc_of, norm_hp, rational_phase_table, unit_phase, workdps

DEFAULT_MAX_SUPPORT = 2_000_000

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# coin
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Coin:
    """SU(2) coin, matrix [[a, b], [-conj(b), conj(a)]].

    ``exact`` optionally names an exactly reconstructible coin
    ("hadamard") so high-precision runs can rebuild a and b at any digit
    count instead of promoting rounded doubles.
    """

    a: complex
    b: complex
    exact: str | None = None
    tol: float = 1e-14

    def __post_init__(self):
        defect = abs(abs(self.a) ** 2 + abs(self.b) ** 2 - 1.0)
        if defect > self.tol:
            raise ValueError(f"coin not unitary: | |a|^2+|b|^2 - 1 | = {defect:.3e}")

    @classmethod
    def hadamard(cls) -> "Coin":
        r = 1.0 / math.sqrt(2.0)
        return cls(complex(r), complex(r), exact="hadamard")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.a, self.b], [-np.conj(self.b), np.conj(self.a)]],
            dtype=np.complex128,
        )

    @property
    def transposed(self) -> "Coin":
        """Coin whose ket action equals this coin's amplitude-matrix action.

        The map (a, b) -> (a, -conj(b)) transposes the coin matrix; it
        bridges the ket-index convention used by ``step`` and the
        amplitude-vector convention used by the momentum-space matrices
        in :mod:`electricwalk.spectral`.
        """
        return Coin(self.a, -np.conj(self.b), exact=None, tol=self.tol)

    def at_precision(self, dps: int) -> tuple[mpmath.mpc, mpmath.mpc]:
        """(a, b) as mpc at ``dps`` digits, renormalized to exact unitarity."""
        with workdps(dps):
            if self.exact == "hadamard":
                r = 1 / mpmath.sqrt(2)
                return mpmath.mpc(r), mpmath.mpc(r)
            a = mpc_of(self.a)
            b = mpc_of(self.b)
            scale = 1 / mpmath.sqrt(abs(a) ** 2 + abs(b) ** 2)
            return a * scale, b * scale


# ---------------------------------------------------------------------------
# field
# ---------------------------------------------------------------------------

GOLDEN_NAME = "golden"


def _golden_fraction(digits: int) -> Fraction:
    """(sqrt(5)-1)/2 rounded to ``digits`` decimal digits, as an exact Fraction."""
    scale = 10 ** (digits + 10)
    root5 = math.isqrt(5 * scale * scale)
    value = Fraction(root5 - scale, 2 * scale)
    # round to the declared number of digits
    q = 10**digits
    return Fraction(round(value * q), q)


@dataclass(frozen=True)
class FieldSpec:
    """Electric field Phi = 2*pi*nu, canonicalized to nu in [0, 1).

    Rational fields carry ``digits is None`` and an exactly reduced
    fraction; real fields carry the declared decimal precision ``digits``
    and store the D-digit value exactly (decimals are rational).
    """

    nu: Fraction
    digits: int | None = None
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "nu", Fraction(self.nu) % 1)
        if self.digits is not None and self.digits < 1:
            raise ValueError("declared precision must be >= 1 digit")

    # -- constructors -------------------------------------------------------

    @classmethod
    def rational(cls, n: int, m: int) -> "FieldSpec":
        if m <= 0:
            raise ValueError("denominator must be positive")
        return cls(Fraction(n, m))

    @classmethod
    def real(cls, value, digits: int | None = None, label: str | None = None) -> "FieldSpec":
        """Real field from a decimal string, Fraction, or float.

        For strings the declared precision defaults to the number of
        digits given; floats default to 17 digits.
        """
        if isinstance(value, str):
            text = value.strip()
            frac = Fraction(text)
            if digits is None:
                digits = len(text.split(".", 1)[1]) if "." in text else 17
        elif isinstance(value, Fraction):
            frac = value
            if digits is None:
                raise ValueError("Fraction-valued real fields need an explicit digit count")
        else:
            frac = Fraction(float(value))
            if digits is None:
                digits = 17
        return cls(frac, digits=digits, label=label)

    @classmethod
    def named(cls, name: str, digits: int = 50) -> "FieldSpec":
        if name == GOLDEN_NAME:
            return cls(_golden_fraction(digits), digits=digits, label=GOLDEN_NAME)
        raise ValueError(f"unknown field constant {name!r}")

    @classmethod
    def parse(cls, text: str, digits: int | None = None) -> "FieldSpec":
        """Parse "n/m", a decimal string, or a named constant."""
        text = text.strip()
        if text == GOLDEN_NAME:
            return cls.named(GOLDEN_NAME, digits or 50)
        if "/" in text:
            n, m = text.split("/", 1)
            return cls.rational(int(n), int(m))
        return cls.real(text, digits=digits)

    # -- accessors -----------------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return self.digits is None

    @property
    def n(self) -> int:
        if not self.is_rational:
            raise ValueError("field is not declared rational")
        return self.nu.numerator

    @property
    def m(self) -> int:
        if not self.is_rational:
            raise ValueError("field is not declared rational")
        return self.nu.denominator

    @property
    def phi(self) -> float:
        return TWO_PI * float(self.nu)

    def nu_mpf(self, dps: int) -> mpmath.mpf:
        with workdps(dps):
            return mpmath.mpf(self.nu.numerator) / self.nu.denominator

    def describe(self) -> str:
        if self.label:
            return f"{self.label}[{self.digits}d]"
        if self.is_rational:
            return f"{self.n}/{self.m}"
        return f"{float(self.nu):.12g}[{self.digits}d]"


def _phases_machine(field: FieldSpec, x_lo: int, count: int) -> np.ndarray:
    xs = np.arange(x_lo, x_lo + count, dtype=np.int64)
    if field.is_rational:
        m = field.m
        # reduce in integer arithmetic; (n mod m)(x mod m) stays below m^2
        r = ((field.n % m) * (xs % m)) % m
        return np.exp(2j * np.pi * (r / float(m)))
    nu = float(field.nu)
    return np.exp(2j * np.pi * ((xs * nu) % 1.0))


def _phases_hp(field: FieldSpec, x_lo: int, count: int, dps: int) -> list:
    if field.is_rational and field.m <= 8192:
        table = rational_phase_table(field.nu, dps)
        m = field.m
        n = field.n
        return [table[(n * x) % m] for x in range(x_lo, x_lo + count)]
    with workdps(dps):
        return [unit_phase(x * field.nu) for x in range(x_lo, x_lo + count)]


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WalkState:
    """Finitely supported two-component amplitude function on the lattice.

    ``amps[i, 0]`` is psi(x_min + i, +1), ``amps[i, 1]`` is psi(x_min + i, -1).
    ``dps`` selects machine precision (None) or mpmath with that many digits.
    """

    x_min: int
    amps: np.ndarray
    dps: int | None = None

    @property
    def n_sites(self) -> int:
        return self.amps.shape[0]

    @property
    def x_max(self) -> int:
        return self.x_min + self.n_sites - 1

    @property
    def support_radius(self) -> int:
        """L such that the state vanishes for |x| >= L (origin-based)."""
        return max(abs(self.x_min), abs(self.x_max)) + 1

    @classmethod
    def point(cls, site: int = 0, spinor=(1.0, 0.0), dps: int | None = None) -> "WalkState":
        up, down = spinor
        if dps is None:
            amps = np.array([[complex(up), complex(down)]], dtype=np.complex128)
            nrm = np.linalg.norm(amps)
            amps = amps / nrm
        else:
            with workdps(dps):
                u, d = mpc_of(complex(up)), mpc_of(complex(down))
                nrm = norm_hp([u, d])
                amps = np.empty((1, 2), dtype=object)
                amps[0, 0] = u / nrm
                amps[0, 1] = d / nrm
        return cls(site, amps, dps)

    @classmethod
    def symmetric(cls, site: int = 0, dps: int | None = None) -> "WalkState":
        """(|+1> + i|-1>)/sqrt(2): left/right symmetric for real coins."""
        return cls.point(site, (1.0, 1.0j), dps)

    def to_precision(self, dps: int) -> "WalkState":
        if self.dps is not None:
            if dps == self.dps:
                return self
        out = np.empty(self.amps.shape, dtype=object)
        with workdps(dps):
            for i in range(self.amps.shape[0]):
                out[i, 0] = mpc_of(self.amps[i, 0])
                out[i, 1] = mpc_of(self.amps[i, 1])
        return WalkState(self.x_min, out, dps)

    def norm(self):
        if self.dps is None:
            return float(np.linalg.norm(self.amps))
        with workdps(self.dps):
            return norm_hp(self.amps.ravel())

    def position_probabilities(self) -> tuple[np.ndarray, np.ndarray]:
        """(positions, P(x)) with P(x) = |psi(x,+)|^2 + |psi(x,-)|^2, as floats."""
        xs = np.arange(self.x_min, self.x_min + self.n_sites)
        if self.dps is None:
            p = np.abs(self.amps[:, 0]) ** 2 + np.abs(self.amps[:, 1]) ** 2
            return xs, p
        p = np.array(
            [float(abs(self.amps[i, 0]) ** 2 + abs(self.amps[i, 1]) ** 2)
             for i in range(self.n_sites)]
        )
        return xs, p

    def amplitude(self, x: int, alpha: int):
        """psi(x, alpha) with alpha = +1 or -1; zero outside the window."""
        i = x - self.x_min
        if i < 0 or i >= self.n_sites:
            return 0.0 if self.dps is None else mpmath.mpc(0)
        return self.amps[i, 0 if alpha > 0 else 1]


# ---------------------------------------------------------------------------
# the step
# ---------------------------------------------------------------------------

def step(state: WalkState, coin: Coin, field: FieldSpec,
         max_support: int = DEFAULT_MAX_SUPPORT) -> WalkState:
    """One application of the electric walk.  Support widens by 1 per side."""
    n = state.n_sites
    if n + 2 > max_support:
        raise SupportOverflowError(
            f"support {n + 2} would exceed max_support={max_support}; raise the cap"
        )
    old = state.amps
    x_lo = state.x_min - 1

    if state.dps is None:
        a, b = coin.a, coin.b
        ac, bc = np.conj(a), np.conj(b)
        new = np.zeros((n + 2, 2), dtype=np.complex128)
        # shifted-up component psi(x-1,+) feeds rows 2..n+1
        new[2:, 0] = a * old[:, 0]
        new[2:, 1] = b * old[:, 0]
        # shifted-down component psi(x+1,-) feeds rows 0..n-1
        new[:n, 0] += -bc * old[:, 1]
        new[:n, 1] += ac * old[:, 1]
        new *= _phases_machine(field, x_lo, n + 2)[:, None]
        return WalkState(x_lo, new, None)

    dps = state.dps
    with workdps(dps):
        a, b = coin.at_precision(dps)
        ac, bc = a.conjugate(), b.conjugate()
        phases = _phases_hp(field, x_lo, n + 2, dps)
        new = np.empty((n + 2, 2), dtype=object)
        zero = mpmath.mpc(0)
        for j in range(n + 2):
            up = old[j - 2, 0] if 2 <= j < n + 2 else zero
            dn = old[j, 1] if j < n else zero
            ph = phases[j]
            new[j, 0] = ph * (a * up - bc * dn)
            new[j, 1] = ph * (b * up + ac * dn)
    return WalkState(x_lo, new, dps)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

def position_moments(state: WalkState):
    """(mean, sigma) with sigma = sqrt(sum x^2 P(x)), uncentered."""
    if state.dps is None:
        xs, p = state.position_probabilities()
        return float(np.dot(xs, p)), float(math.sqrt(max(np.dot(xs * xs, p), 0.0)))
    with workdps(state.dps):
        mean = mpmath.mpf(0)
        second = mpmath.mpf(0)
        for i in range(state.n_sites):
            x = state.x_min + i
            px = abs(state.amps[i, 0]) ** 2 + abs(state.amps[i, 1]) ** 2
            mean += x * px
            second += x * x * px
        return mean, mpmath.sqrt(second)


def return_probability(state: WalkState, site: int = 0):
    """sum_alpha |psi(site, alpha)|^2."""
    i = site - state.x_min
    if i < 0 or i >= state.n_sites:
        return 0.0 if state.dps is None else mpmath.mpf(0)
    if state.dps is None:
        return float(abs(state.amps[i, 0]) ** 2 + abs(state.amps[i, 1]) ** 2)
    with workdps(state.dps):
        return abs(state.amps[i, 0]) ** 2 + abs(state.amps[i, 1]) ** 2


@dataclass
class ObservableSeries:
    """Per-step observables for t = 0..T (lists of floats or mpf)."""

    sigma: list
    p_return: list
    mean: list
    distributions: list | None = None
    final_state: WalkState | None = None

    @property
    def steps(self) -> int:
        return len(self.sigma) - 1


def evolve(initial: WalkState, coin: Coin, field: FieldSpec, steps: int,
           origin: int = 0, keep_final: bool = False,
           keep_distributions: bool = False,
           max_support: int = DEFAULT_MAX_SUPPORT) -> ObservableSeries:
    """Run ``steps`` applications, recording sigma(t), p(t) at each step."""
    if steps < 0:
        raise ValueError("step count must be >= 0")
    state = initial
    sigmas, preturns, means = [], [], []
    dists = [] if keep_distributions else None
    for t in range(steps + 1):
        mean, sig = position_moments(state)
        sigmas.append(sig)
        means.append(mean)
        preturns.append(return_probability(state, origin))
        if dists is not None:
            dists.append(state.position_probabilities())
        if t < steps:
            state = step(state, coin, field, max_support=max_support)
    return ObservableSeries(sigmas, preturns, means, dists,
                            state if keep_final else None)


# ---------------------------------------------------------------------------
# revival deficiency
# ---------------------------------------------------------------------------

def revival_parameters(coin: Coin, m: int) -> tuple[int, int, float]:
    """(revival time, sign, norm bound 2|a|^m or 2|a|^{m/2}) for denominator m."""
    if m % 2:
        return 2 * m, 1, 2.0 * abs(coin.a) ** m
    return m, (-1) ** (m // 2), 2.0 * abs(coin.a) ** (m // 2)


def revival_deficiency(coin: Coin, field: FieldSpec, state: WalkState,
                       digits: int | None = None,
                       max_support: int = DEFAULT_MAX_SUPPORT):
    """|| W^{2m} psi + psi || (odd m) or || W^m psi + (-1)^{m/2} psi || (even m).

    ``digits`` selects high-precision evolution; it is required once the
    theorem bound drops below machine resolution.  Raises
    PrecisionExhaustedError when the computed value is within a factor 10
    of the accumulated rounding estimate.
    """
    m = field.m  # raises for non-rational fields
    n_steps, sign, bound = revival_parameters(coin, m)
    eff_dps = digits if digits is not None else state.dps
    if eff_dps is None and bound < 1e-10:
        raise ValueError(
            f"theorem bound {bound:.3e} below machine resolution; pass digits>=30"
        )

    work = state if eff_dps is None else state.to_precision(eff_dps)
    evolved = work
    for _ in range(n_steps):
        evolved = step(evolved, coin, field, max_support=max_support)

    # || evolved + sign * initial ||, aligned on the wider window
    off = work.x_min - evolved.x_min
    if eff_dps is None:
        diff = evolved.amps.copy()
        diff[off:off + work.n_sites] += sign * work.amps
        value = float(np.linalg.norm(diff))
    else:
        with workdps(eff_dps):
            terms = []
            wn = work.n_sites
            for i in range(evolved.n_sites):
                v0 = evolved.amps[i, 0]
                v1 = evolved.amps[i, 1]
                if off <= i < off + wn:
                    v0 = v0 + sign * work.amps[i - off, 0]
                    v1 = v1 + sign * work.amps[i - off, 1]
                terms.append(v0)
                terms.append(v1)
            value = norm_hp(terms)
        rounding = n_steps * math.sqrt(2 * evolved.n_sites) * mpmath.mpf(10) ** (1 - eff_dps)
        if value < 10 * rounding:
            raise PrecisionExhaustedError(
                f"deficiency {mpmath.nstr(value, 5)} below 10x rounding estimate "
                f"{mpmath.nstr(rounding, 5)}; increase digits"
            )
    return value
