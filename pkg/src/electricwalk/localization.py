"""High-precision eigenfunctions of the electric walk for irrational fields.

The eigenvalue equation W psi = e^{i omega} psi, written out per site,

    e^{ix Phi} [ a psi(x-1,+) - conj(b) psi(x+1,-) ] = e^{i omega} psi(x,+)
    e^{ix Phi} [ b psi(x-1,+) + conj(a) psi(x+1,-) ] = e^{i omega} psi(x,-)

propagates the pair w_x = (psi(x,-), psi(x-1,+)) site to site after
division by conj(a):

    psi(x+1,-) = ( e^{i theta_x} psi(x,-) - b psi(x-1,+) ) / conj(a)
    psi(x,+)   = ( e^{-i theta_x} psi(x-1,+) - conj(b) psi(x,-) ) / conj(a)

with theta_x = omega - x Phi.  Iterating from x = -N rides the expanding
branch; at the symmetry-distinguished quasi-energy it contracts again
past the origin, and zeroing the result outside [-N, N] leaves an
approximate eigenfunction with residual of order |a|^N.

Quasi-energies are exact fractions of a full turn: the contraction past
the origin survives only while the detuning stays below the inverse of
the accumulated expansion factor, far beyond double precision.

For coins of the SU(2) form used here the symmetric choice is
omega = Phi/2 - pi/2.  (The det = -1 Hadamard normalization shifts every
quasi-energy by pi/2, turning the same rule into the familiar
omega = Phi/2; the profiles are identical.)
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction

import mpmath
import numpy as np
import scipy.linalg

from .errors import NoDecayError, PrecisionExhaustedError
from .hp import norm_hp, unit_phase, workdps
from .walkcore import Coin, FieldSpec, WalkState

LN10 = math.log(10.0)


@dataclass(frozen=True)
class PrecisionConfig:
    """Working precision (decimal digits) and truncation radius.

    Keep digits above radius * lambda / ln(10) plus margin so contamination
    of the contracting branch stays below the truncation residual.
    ``slope_convention`` selects the units of the reported inverse
    localization length: "log10" is the slope of log10 P(x) per site
    (the convention under which the golden-field Hadamard value is 0.301),
    "ln" the slope of ln P(x).
    """

    digits: int = 300
    radius: int = 100
    slope_convention: str = "log10"
    fit_lo: float = 0.1
    fit_hi: float = 0.8
    accept_rho: float = 0.04

    def __post_init__(self):
        if self.digits < 50:
            raise ValueError("digits must be >= 50")
        if self.radius < 10:
            raise ValueError("radius must be >= 10")
        if self.slope_convention not in ("log10", "ln"):
            raise ValueError("slope_convention must be 'log10' or 'ln'")
        if not (0.0 <= self.fit_lo < self.fit_hi <= 1.0):
            raise ValueError("need 0 <= fit_lo < fit_hi <= 1")

    @property
    def accept_threshold(self) -> float:
        """Residuals above 10^(-accept_rho * digits) are rejected."""
        return 10.0 ** (-self.accept_rho * self.digits)


@dataclass(frozen=True)
class LocalizationFit:
    """Least-squares slopes of ln P(x) on the two fit windows."""

    lambda_ln: float
    slope_left: float
    slope_right: float
    rms_left: float
    rms_right: float
    window: tuple[int, int]

    @property
    def lambda_log10(self) -> float:
        return self.lambda_ln / LN10

    def value(self, convention: str) -> float:
        return self.lambda_log10 if convention == "log10" else self.lambda_ln

    @property
    def side_agreement(self) -> float:
        """Relative disagreement of the two one-sided slopes."""
        m = 0.5 * (abs(self.slope_left) + abs(self.slope_right))
        return abs(abs(self.slope_left) - abs(self.slope_right)) / m if m else 0.0


@dataclass(frozen=True, eq=False)
class EigenProfile:
    """Approximate eigenfunction with quasi-energy, residual, and decay fit."""

    omega_turns: Fraction
    field: FieldSpec
    state: WalkState               # normalized, window [-N, N], high precision
    residual: mpmath.mpf | None
    fit: LocalizationFit
    config: PrecisionConfig

    @property
    def radius(self) -> int:
        return self.state.x_max

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * float(self.omega_turns)

    @property
    def lambda_(self) -> float:
        return self.fit.value(self.config.slope_convention)

    @property
    def rho(self) -> float:
        """Measured residual digits per working digit."""
        if self.residual is None:
            return 0.0
        return float(-mpmath.log10(self.residual)) / self.config.digits

    def log_probabilities(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, ln P(x)) over the window, safe for exponentially small P."""
        n = self.state.n_sites
        xs = np.arange(self.state.x_min, self.state.x_min + n)
        with workdps(self.config.digits):
            logs = np.array([
                float(mpmath.log(abs(self.state.amps[i, 0]) ** 2
                                 + abs(self.state.amps[i, 1]) ** 2))
                for i in range(n)
            ])
        return xs, logs


def symmetric_omega_turns(field: FieldSpec) -> Fraction:
    """Quasi-energy (as a fraction of a turn) of the mirror-symmetric
    eigenfunction family: omega = Phi/2 - pi/2 for det = +1 coins."""
    return (field.nu / 2 - Fraction(1, 4)) % 1


def _omega_as_turns(omega, field: FieldSpec) -> Fraction:
    if omega is None:
        return symmetric_omega_turns(field)
    if isinstance(omega, Fraction):
        return omega % 1
    # radians; note float detuning spoils the contraction for large radii
    return Fraction(float(omega) / (2.0 * math.pi)).limit_denominator(10 ** 30) % 1


def walk_residual(coin: Coin, field: FieldSpec, omega_turns: Fraction,
                  state: WalkState) -> mpmath.mpf:
    """|| W psi - e^{i omega} psi || over the widened window [-N-1, N+1]."""
    dps = state.dps
    n = state.n_sites
    with workdps(dps):
        a, b = coin.at_precision(dps)
        ac, bc = a.conjugate(), b.conjugate()
        eig = unit_phase(omega_turns)
        zero = mpmath.mpc(0)

        def psi(i, comp):
            return state.amps[i, comp] if 0 <= i < n else zero

        terms = []
        for i in range(-1, n + 1):
            x = state.x_min + i
            ph = unit_phase(x * field.nu)
            wp = ph * (a * psi(i - 1, 0) - bc * psi(i + 1, 1))
            wm = ph * (b * psi(i - 1, 0) + ac * psi(i + 1, 1))
            terms.append(wp - eig * psi(i, 0))
            terms.append(wm - eig * psi(i, 1))
        return norm_hp(terms)


def localization_length(profile_or_logs, fit_lo: float | None = None,
                        fit_hi: float | None = None) -> LocalizationFit:
    """Fit ln P(x) separately on [fit_lo N, fit_hi N] and its mirror.

    Accepts an EigenProfile or a precomputed (x, ln P) pair.  The returned
    lambda_ln is the mean absolute slope; callers pick the reporting
    convention.
    """
    if isinstance(profile_or_logs, EigenProfile):
        cfg = profile_or_logs.config
        fit_lo = cfg.fit_lo if fit_lo is None else fit_lo
        fit_hi = cfg.fit_hi if fit_hi is None else fit_hi
        xs, logs = profile_or_logs.log_probabilities()
    else:
        xs, logs = profile_or_logs
        fit_lo = 0.1 if fit_lo is None else fit_lo
        fit_hi = 0.8 if fit_hi is None else fit_hi
    n = int(xs.max())
    lo, hi = int(fit_lo * n), int(fit_hi * n)
    if hi - lo < 10 or n < 20:
        raise ValueError(f"fit window [{lo}, {hi}] too short (radius {n})")

    def fit(side):
        sel = (side * xs >= lo) & (side * xs <= hi)
        slope, icept = np.polyfit(xs[sel], logs[sel], 1)
        rms = float(np.sqrt(np.mean((logs[sel] - slope * xs[sel] - icept) ** 2)))
        return float(slope), rms

    slope_r, rms_r = fit(+1)
    slope_l, rms_l = fit(-1)
    lam = 0.5 * (abs(slope_l) + abs(slope_r))
    return LocalizationFit(lam, slope_l, slope_r, rms_l, rms_r, (lo, hi))


def transfer_iterate(coin: Coin, field: FieldSpec, omega=None,
                     cfg: PrecisionConfig = PrecisionConfig(),
                     seed: tuple = (1.0, 0.0)) -> EigenProfile:
    """Build an approximate eigenfunction by transfer-matrix iteration.

    ``omega`` is a Fraction (of a full turn), radians, or None for the
    symmetric default.  ``seed`` is the starting pair
    (psi(-N, -1), psi(-N-1, +1)); its direction is forgotten
    exponentially fast along the expanding branch.

    Raises NoDecayError when the edge amplitude is comparable to the
    peak (extended state: rational field or off-resonance quasi-energy),
    and PrecisionExhaustedError when the residual cannot be trusted at
    the working precision.
    """
    if abs(coin.a) < 1e-12:
        raise ValueError("transfer matrix needs a != 0")
    turns = _omega_as_turns(omega, field)
    N, dps = cfg.radius, cfg.digits
    nu = field.nu

    with workdps(dps):
        a, b = coin.at_precision(dps)
        ac, bc = a.conjugate(), b.conjugate()
        w0, w1 = mpmath.mpc(complex(seed[0])), mpmath.mpc(complex(seed[1]))
        amps = np.empty((2 * N + 1, 2), dtype=object)
        for x in range(-N, N + 1):
            e = unit_phase(turns - x * nu)
            amps[x + N, 1] = w0                    # psi(x, -1)
            if x > -N:
                amps[x - 1 + N, 0] = w1            # psi(x-1, +1)
            w0, w1 = (e * w0 - b * w1) / ac, (-bc * w0 + e.conjugate() * w1) / ac
        amps[2 * N, 0] = w1                        # psi(N, +1)

        nrm = norm_hp(amps.ravel())
        for i in range(2 * N + 1):
            amps[i, 0] /= nrm
            amps[i, 1] /= nrm
        state = WalkState(-N, amps, dps)

        xs = np.arange(-N, N + 1)
        logs = np.array([
            float(mpmath.log(abs(amps[i, 0]) ** 2 + abs(amps[i, 1]) ** 2))
            for i in range(2 * N + 1)
        ])

    peak = logs.max()
    edge = max(logs[0], logs[-1])
    if edge - peak > math.log(1e-4):
        raise NoDecayError(
            f"edge/peak probability ratio {math.exp(edge - peak):.2e} shows no "
            "exponential decay (extended state or off-resonance quasi-energy)")

    fit = localization_length((xs, logs), cfg.fit_lo, cfg.fit_hi)

    # contamination of the contracting branch: relative 10^-D noise at the
    # peak grows like exp(lambda N) toward the edge
    noise = 10.0 ** (-dps) * math.exp(fit.lambda_ln * N)
    if noise > 1e-6:
        raise PrecisionExhaustedError(
            f"expanding-branch contamination estimate {noise:.1e}; "
            f"need digits >~ {fit.lambda_ln * N / LN10 + 10:.0f}")

    residual = walk_residual(coin, field, turns, state)
    if float(residual) > cfg.accept_threshold:
        raise PrecisionExhaustedError(
            f"residual {mpmath.nstr(residual, 3)} above acceptance threshold "
            f"{cfg.accept_threshold:.1e} (insufficient precision or detuned "
            "quasi-energy)")
    return EigenProfile(turns, field, state, residual, fit, cfg)


def synthetic_profile(lambda_ln: float, N: int = 60,
                      cfg: PrecisionConfig | None = None) -> EigenProfile:
    """Exact-exponential fixture P(x) = C exp(-lambda |x|), for fit self-tests."""
    cfg = cfg or PrecisionConfig(digits=50, radius=N)
    if cfg.radius != N:
        cfg = replace(cfg, radius=N)
    with workdps(cfg.digits):
        amps = np.empty((2 * N + 1, 2), dtype=object)
        for x in range(-N, N + 1):
            amp = mpmath.exp(mpmath.mpf(-lambda_ln) * abs(x) / 2) / mpmath.sqrt(2)
            amps[x + N, 0] = mpmath.mpc(amp)
            amps[x + N, 1] = mpmath.mpc(amp)
        nrm = norm_hp(amps.ravel())
        for i in range(2 * N + 1):
            amps[i, 0] /= nrm
            amps[i, 1] /= nrm
    state = WalkState(-N, amps, cfg.digits)
    xs = np.arange(-N, N + 1)
    logs = np.array([float(-lambda_ln * abs(x)) for x in xs])
    logs -= np.log(np.exp(logs).sum())
    fit = localization_length((xs, logs), cfg.fit_lo, cfg.fit_hi)
    return EigenProfile(Fraction(0), FieldSpec.rational(0, 1), state, None, fit, cfg)


# ---------------------------------------------------------------------------
# symmetry family
# ---------------------------------------------------------------------------

def symmetry_family(profile: EigenProfile, field: FieldSpec | None = None,
                    coin: Coin = None) -> list[tuple[str, EigenProfile]]:
    """Derived approximate eigenpairs: staggered at omega + pi, shifted at
    omega + Phi.  Residuals are recomputed; they match the original
    exactly up to rounding (the symmetries are unitary conjugations)."""
    field = field or profile.field
    coin = coin or Coin.hadamard()
    st = profile.state
    dps = st.dps
    out = []

    with workdps(dps):
        stag = np.empty_like(st.amps)
        for i in range(st.n_sites):
            s = 1 if (st.x_min + i) % 2 == 0 else -1
            stag[i, 0] = s * st.amps[i, 0]
            stag[i, 1] = s * st.amps[i, 1]
    stag_turns = (profile.omega_turns + Fraction(1, 2)) % 1
    stag_state = WalkState(st.x_min, stag, dps)
    res = walk_residual(coin, field, stag_turns, stag_state)
    out.append(("staggered", replace(profile, omega_turns=stag_turns,
                                     state=stag_state, residual=res)))

    shift_turns = (profile.omega_turns + field.nu) % 1
    shift_state = WalkState(st.x_min + 1, st.amps, dps)
    res = walk_residual(coin, field, shift_turns, shift_state)
    out.append(("shifted", replace(profile, omega_turns=shift_turns,
                                   state=shift_state, residual=res)))
    return out


# ---------------------------------------------------------------------------
# ring diagonalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RingEigenpair:
    """Minimal-<x^2> eigenpair of the M-site periodic electric walk."""

    ring_size: int
    eigenvalue: complex
    positions: np.ndarray
    vector: np.ndarray             # (M, 2) complex amplitudes
    x_second_moment: float
    residual: float

    @property
    def omega(self) -> float:
        return float(np.angle(self.eigenvalue))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.vector[:, 0]) ** 2 + np.abs(self.vector[:, 1]) ** 2

    def recentred(self) -> "RingEigenpair":
        """Roll the peak to position 0 (an exact symmetry on the ring)."""
        shift = int(self.positions[np.argmax(self.probabilities)])
        vec = np.roll(self.vector, -shift, axis=0)
        p = np.abs(vec[:, 0]) ** 2 + np.abs(vec[:, 1]) ** 2
        x2 = float((self.positions.astype(float) ** 2) @ p)
        return RingEigenpair(self.ring_size, self.eigenvalue, self.positions,
                             vec, x2, self.residual)


def ring_walk_matrix(coin: Coin, n: int, q: int, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense 2M x 2M unitary of the electric walk on an M-site ring.

    M must be a multiple of q so the field phase is single-valued.
    Positions are centered, x in [-floor(M/2), M-1-floor(M/2)].
    """
    if M % q != 0:
        raise ValueError(f"ring size {M} is not a multiple of the denominator {q}")
    half = M // 2
    xs = np.arange(M) - half
    phi = 2.0 * np.pi * n / q
    a, b = coin.a, coin.b
    U = np.zeros((2 * M, 2 * M), dtype=np.complex128)

    def idx(i, comp):
        return 2 * (i % M) + comp

    for i in range(M):
        ph = np.exp(1j * phi * xs[i])
        U[idx(i, 0), idx(i - 1, 0)] += ph * a
        U[idx(i, 1), idx(i - 1, 0)] += ph * b
        U[idx(i, 0), idx(i + 1, 1)] += ph * (-np.conj(b))
        U[idx(i, 1), idx(i + 1, 1)] += ph * np.conj(a)
    return U, xs


def ring_diagonalize(coin: Coin, convergent: tuple[int, int], rings,
                     dense_cap: int = 2048) -> list[RingEigenpair]:
    """Diagonalize the periodic walk and pick the minimal-<x^2> eigenvector.

    Uses the complex Schur form (diagonal for normal matrices, orthonormal
    eigenbasis); every returned pair satisfies ||Uv - mu v|| <= 1e-10.
    """
    n, q = convergent
    if math.gcd(n, q) != 1:
        raise ValueError("convergent must be in lowest terms")
    out = []
    for M in rings:
        if M > dense_cap:
            raise ValueError(f"ring size {M} exceeds dense cap {dense_cap}")
        U, xs = ring_walk_matrix(coin, n, q, M)
        T, Z = scipy.linalg.schur(U, output="complex")
        evals = np.diag(T)
        probs = np.abs(Z[0::2, :]) ** 2 + np.abs(Z[1::2, :]) ** 2
        x2 = (xs.astype(float) ** 2) @ probs
        j = int(np.argmin(x2))
        v = Z[:, j]
        residual = float(np.linalg.norm(U @ v - evals[j] * v))
        if residual > 1e-10:
            raise ArithmeticError(f"eigenpair residual {residual:.2e} above 1e-10")
        vec = np.column_stack([v[0::2], v[1::2]])
        out.append(RingEigenpair(M, complex(evals[j]), xs, vec, float(x2[j]), residual))
    return out


# ---------------------------------------------------------------------------
# random-field survey
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurveyResult:
    lambdas: tuple[float, ...]
    fields: tuple[FieldSpec, ...]
    failures: tuple[tuple[int, str], ...]
    convention: str

    @property
    def mean(self) -> float:
        return float(np.mean(self.lambdas)) if self.lambdas else float("nan")

    @property
    def variance(self) -> float:
        if len(self.lambdas) < 2:
            return float("nan")
        return float(np.var(self.lambdas, ddof=1))


def random_field_survey(num_fields: int, cfg: PrecisionConfig,
                        seed: int) -> SurveyResult:
    """Inverse localization lengths for seeded uniform random fields.

    Fields are drawn on [0, 1) at the configured digit count.  Profiles
    rejected by the no-decay or precision checks (rational-like draws)
    are tallied separately and excluded from the statistics.
    """
    rng = random.Random(seed)
    coin = Coin.hadamard()
    lams, fields, failures = [], [], []
    for i in range(num_fields):
        nu = Fraction(rng.randrange(10 ** cfg.digits), 10 ** cfg.digits)
        field = FieldSpec(nu, digits=cfg.digits, label=f"survey-{seed}-{i}")
        fields.append(field)
        try:
            profile = transfer_iterate(coin, field, cfg=cfg)
        except (NoDecayError, PrecisionExhaustedError) as exc:
            failures.append((i, f"{type(exc).__name__}: {exc}"))
            continue
        lams.append(profile.lambda_)
    return SurveyResult(tuple(lams), tuple(fields), tuple(failures),
                        cfg.slope_convention)
