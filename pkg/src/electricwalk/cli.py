"""Batch command-line front end emitting plot-ready CSV/JSON.

Commands: simulate | cfrac | revivals | dispersion | localize |
construct-field | survey.  Every run echoes its full configuration into
the output metadata; with --no-timing the files are byte-reproducible
for a fixed config and seed.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(machine-readable JSON detail on stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, fields as dc_fields
from fractions import Fraction

import mpmath
import numpy as np

from .errors import ElectricWalkError
from . import diophantine, localization, serialize, spectral, walkcore
from .walkcore import Coin, FieldSpec, WalkState


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Flat key-value run configuration; flags override file values."""

    command: str = ""
    coin: str = "hadamard"
    field: str = "1/5"
    steps: int = 100
    digits: int | None = None
    truncation: int | None = None
    seed: int = 0
    out: str | None = None
    initial: str = "symmetric"
    site: int = 0
    omega: str | None = None
    points: int = 1024
    levels: int | None = None
    support_radius: int = 1
    epsilons: str | None = None
    intervals: str | None = None
    max_steps: int = 5000
    num_fields: int = 20
    depth: int = 40
    rings: str | None = None
    convergent: str | None = None
    verify: bool = False
    selftest: bool = False
    timing: bool = True

    def to_file(self, path: str) -> None:
        lines = [f"{k} = {v}" for k, v in asdict(self).items() if v is not None]
        serialize.atomic_write(path, "\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        kinds = {f.name: f for f in dc_fields(cls)}
        out = cls()
        with open(path) as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected 'key = value'")
                key, _, val = line.partition("=")
                key, val = key.strip(), val.strip()
                if key not in kinds:
                    raise ConfigError(f"{path}:{ln}: unknown key {key!r}")
                out._set(key, val)
        return out

    def _set(self, key: str, val: str) -> None:
        current = getattr(self, key)
        if key in ("verify", "selftest", "timing"):
            setattr(self, key, val.lower() in ("1", "true", "yes", "on"))
        elif isinstance(current, int) and not isinstance(current, bool):
            setattr(self, key, int(val))
        elif current is None and key in ("digits", "truncation", "levels"):
            setattr(self, key, int(val))
        else:
            setattr(self, key, val)

    def echo(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _build_coin(cfg: RunConfig) -> Coin:
    text = cfg.coin.strip()
    if text == "hadamard":
        return Coin.hadamard()
    try:
        a_str, b_str = text.split(";")
        return Coin(complex(a_str), complex(b_str))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse coin {text!r}: {exc}") from None


def _build_field(cfg: RunConfig) -> FieldSpec:
    try:
        return FieldSpec.parse(cfg.field, digits=cfg.digits)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse field {cfg.field!r}: {exc}") from None


def _build_initial(cfg: RunConfig) -> WalkState:
    kind = cfg.initial.strip()
    dps = cfg.digits
    if kind == "symmetric":
        return WalkState.symmetric(cfg.site, dps=dps)
    if kind == "plus":
        return WalkState.point(cfg.site, (1.0, 0.0), dps=dps)
    if kind == "minus":
        return WalkState.point(cfg.site, (0.0, 1.0), dps=dps)
    try:
        up, down = kind.split(";")
        return WalkState.point(cfg.site, (complex(up), complex(down)), dps=dps)
    except (ValueError, TypeError):
        raise ConfigError(f"cannot parse initial state {kind!r}") from None


def _precision_label(cfg: RunConfig) -> str:
    return "machine" if cfg.digits is None else f"{cfg.digits} digits"


def _out(cfg: RunConfig, default: str) -> str:
    return cfg.out or default


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> None:
    coin, field = _build_coin(cfg), _build_field(cfg)
    initial = _build_initial(cfg)
    t0 = time.perf_counter()
    series = walkcore.evolve(initial, coin, field, cfg.steps, origin=cfg.site)
    wall = time.perf_counter() - t0 if cfg.timing else None
    rows = serialize.series_rows(series)
    serialize.write_csv(_out(cfg, "simulate.csv"), "simulate", cfg.echo(),
                        ["t", "sigma", "p_return"], rows,
                        precision=_precision_label(cfg), wall_clock=wall,
                        digits=cfg.digits)


def cmd_cfrac(cfg: RunConfig) -> None:
    field = _build_field(cfg)
    t0 = time.perf_counter()
    cf = diophantine.expand(field, max_depth=cfg.depth)
    quality = []
    for k in range(len(cf.convergents) - 1):
        quality.append({"level": k,
                        "bound": float(diophantine.approximation_quality(cf, k))})
    payload = {
        "coefficients": list(cf.coefficients),
        "convergents": [[n, q] for n, q in cf.convergents],
        "certified_depth": cf.certified_depth,
        "exact": cf.exact,
        "exhausted": cf.exhausted,
        "rendered": str(cf),
        "quality_bounds": quality,
    }
    wall = time.perf_counter() - t0 if cfg.timing else None
    serialize.write_json(_out(cfg, "cfrac.json"), "cfrac", cfg.echo(), payload,
                         precision=_precision_label(cfg), wall_clock=wall)


def cmd_revivals(cfg: RunConfig) -> None:
    coin, field = _build_coin(cfg), _build_field(cfg)
    t0 = time.perf_counter()
    cf = diophantine.expand(field, max_depth=cfg.depth)
    certs = diophantine.revival_schedule(cf, coin, L=cfg.support_radius,
                                         levels=cfg.levels)
    nontrivial = [c for c in certs if c.nontrivial]
    payload = {
        "certificates": [c.as_dict() for c in certs],
        "nontrivial": [c.as_dict() for c in nontrivial],
    }
    if not nontrivial:
        payload["reason"] = "bounds vacuous"
    if cfg.verify:
        payload["verification"] = _verify_revivals(coin, field, certs, cfg)
    wall = time.perf_counter() - t0 if cfg.timing else None
    serialize.write_json(_out(cfg, "revivals.json"), "revivals", cfg.echo(),
                         payload, precision=_precision_label(cfg), wall_clock=wall)


def _verify_revivals(coin, field, certs, cfg) -> list[dict]:
    rng = np.random.default_rng(cfg.seed)
    out = []
    for c in certs:
        if not c.nontrivial or c.time > cfg.max_steps:
            continue
        digits = cfg.digits if c.theorem_term < 1e-8 else None
        raw = rng.normal(size=(1, 2)) + 1j * rng.normal(size=(1, 2))
        raw /= np.linalg.norm(raw)
        st = WalkState(0, raw.astype(complex))
        if digits:
            st = st.to_precision(digits)
        rational = FieldSpec.rational(c.numerator, c.denominator)
        measured = walkcore.revival_deficiency(coin, rational, st, digits=digits)
        out.append({"level": c.level, "time": c.time,
                    "measured": float(measured), "bound": c.total,
                    "ok": float(measured) <= c.total + 1e-9})
    return out


def cmd_dispersion(cfg: RunConfig) -> None:
    coin, field = _build_coin(cfg), _build_field(cfg)
    if not field.is_rational:
        raise ConfigError("dispersion needs a rational field n/m")
    t0 = time.perf_counter()
    ks, wp, wm = spectral.dispersion_grid(coin, field, cfg.points)
    wall = time.perf_counter() - t0 if cfg.timing else None
    rows = zip(ks.tolist(), wp.tolist(), wm.tolist())
    serialize.write_csv(_out(cfg, "dispersion.csv"), "dispersion", cfg.echo(),
                        ["k", "omega_plus", "omega_minus"], rows,
                        precision="machine", wall_clock=wall)


def _parse_omega(cfg: RunConfig, field: FieldSpec):
    if cfg.omega is None or cfg.omega == "symmetric":
        return None
    text = cfg.omega.strip()
    if "/" in text:
        return Fraction(text)
    return float(text)


def cmd_localize(cfg: RunConfig) -> None:
    t0 = time.perf_counter()
    if cfg.selftest:
        profile = localization.synthetic_profile(0.5, N=cfg.truncation or 60)
        field_desc = "synthetic"
    else:
        coin, field = _build_coin(cfg), _build_field(cfg)
        pc = localization.PrecisionConfig(digits=cfg.digits or 300,
                                          radius=cfg.truncation or 100)
        profile = localization.transfer_iterate(coin, field,
                                                _parse_omega(cfg, field), pc)
        field_desc = field.describe()
    wall = time.perf_counter() - t0 if cfg.timing else None

    xs, logs = profile.log_probabilities()
    digits = profile.config.digits
    rows = []
    for i, x in enumerate(xs):
        z0 = profile.state.amps[i, 0]
        z1 = profile.state.amps[i, 1]
        p = np.exp(logs[i])
        rows.append((int(x), z0.real, z0.imag, z1.real, z1.imag, p, logs[i]))
    base = _out(cfg, "profile.csv")
    serialize.write_csv(base, "localize", cfg.echo(),
                        ["x", "re_plus", "im_plus", "re_minus", "im_minus",
                         "P", "ln_P"],
                        rows, precision=f"{digits} digits", wall_clock=wall,
                        digits=digits)
    header = {
        "field": field_desc,
        "omega_turns": str(profile.omega_turns),
        "omega": profile.omega,
        "digits": digits,
        "radius": profile.radius,
        "residual": None if profile.residual is None
        else mpmath.nstr(profile.residual, 10),
        "residual_digits": None if profile.residual is None else
        float(-mpmath.log10(profile.residual)),
        "lambda": profile.lambda_,
        "lambda_ln": profile.fit.lambda_ln,
        "lambda_log10": profile.fit.lambda_log10,
        "slope_convention": profile.config.slope_convention,
        "slope_left": profile.fit.slope_left,
        "slope_right": profile.fit.slope_right,
        "fit_window": list(profile.fit.window),
    }
    serialize.write_json(base.rsplit(".", 1)[0] + ".json", "localize",
                         cfg.echo(), {"profile": header},
                         precision=f"{digits} digits", wall_clock=wall)


def cmd_construct_field(cfg: RunConfig) -> None:
    coin = _build_coin(cfg)
    if not cfg.epsilons or not cfg.intervals:
        raise ConfigError("construct-field needs --epsilons and --intervals")
    try:
        eps = [float(e) for e in cfg.epsilons.split(",")]
        ivals = []
        for part in cfg.intervals.split(";"):
            lo, hi = part.split(":")
            ivals.append((int(lo), int(hi)))
        spec = diophantine.HierarchicalSpec.make(eps, ivals,
                                                max_steps=cfg.max_steps)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad hierarchy spec: {exc}") from None
    t0 = time.perf_counter()
    result = diophantine.construct_hierarchical_field(
        spec, coin, verify=cfg.verify, rng=np.random.default_rng(cfg.seed))
    wall = time.perf_counter() - t0 if cfg.timing else None
    payload = {
        "coefficients": list(result.coefficients),
        "levels": [lv.as_dict() for lv in result.levels],
        "stopped": result.stopped,
    }
    serialize.write_json(_out(cfg, "construct_field.json"), "construct-field",
                         cfg.echo(), payload, precision="machine",
                         wall_clock=wall)


def cmd_survey(cfg: RunConfig) -> None:
    pc = localization.PrecisionConfig(digits=cfg.digits or 200,
                                      radius=cfg.truncation or 80)
    t0 = time.perf_counter()
    result = localization.random_field_survey(cfg.num_fields, pc, cfg.seed)
    wall = time.perf_counter() - t0 if cfg.timing else None
    base = _out(cfg, "survey.csv")
    accepted = iter(result.lambdas)
    failed = dict(result.failures)
    rows = []
    k = 0
    for i, f in enumerate(result.fields):
        if i in failed:
            continue
        rows.append((f"{float(f.nu):.12f}", result.lambdas[k]))
        k += 1
    serialize.write_csv(base, "survey", cfg.echo(), ["field", "lambda"], rows,
                        precision=f"{pc.digits} digits", wall_clock=wall)
    summary = {
        "num_fields": cfg.num_fields,
        "accepted": len(result.lambdas),
        "mean": result.mean,
        "variance": result.variance,
        "convention": result.convention,
        "failures": [{"index": i, "error": msg} for i, msg in result.failures],
    }
    serialize.write_json(base.rsplit(".", 1)[0] + ".json", "survey",
                         cfg.echo(), {"summary": summary},
                         precision=f"{pc.digits} digits", wall_clock=wall)


COMMANDS = {
    "simulate": cmd_simulate,
    "cfrac": cmd_cfrac,
    "revivals": cmd_revivals,
    "dispersion": cmd_dispersion,
    "localize": cmd_localize,
    "construct-field": cmd_construct_field,
    "survey": cmd_survey,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="electricwalk",
        description="Electric quantum walk laboratory (batch, non-interactive)")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--coin", help="'hadamard' or 'A;B' complex pair")
    p.add_argument("--field", help="'n/m', decimal, or 'golden'")
    p.add_argument("--steps", type=int)
    p.add_argument("--digits", type=int)
    p.add_argument("--truncation", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--initial", help="'symmetric', 'plus', 'minus', or 'A;B'")
    p.add_argument("--site", type=int)
    p.add_argument("--omega", help="quasi-energy: 'symmetric', turns 'p/q', or radians")
    p.add_argument("--points", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--support-radius", dest="support_radius", type=int)
    p.add_argument("--epsilons", help="comma list, strictly decreasing")
    p.add_argument("--intervals", help="semicolon list of lo:hi")
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--num-fields", dest="num_fields", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--verify", action="store_const", const=True)
    p.add_argument("--selftest", action="store_const", const=True)
    p.add_argument("--no-timing", dest="timing", action="store_const", const=False)
    return p


def build_config(argv) -> RunConfig:
    args = _parser().parse_args(argv)
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for f in dc_fields(RunConfig):
        if f.name == "command":
            continue
        val = getattr(args, f.name, None)
        if val is not None:
            setattr(cfg, f.name, val)
    cfg.command = args.command
    return cfg


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = build_config(argv)
    except ConfigError as exc:
        _err("config", str(exc))
        return 2
    try:
        COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        _err("config", str(exc))
        return 2
    except (ElectricWalkError, ArithmeticError) as exc:
        _err(type(exc).__name__, str(exc))
        return 3
    return 0


def _err(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "detail": message}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
