"""Plot-ready CSV/JSON output with embedded run metadata.

Numbers are rendered with 17 significant digits (machine) or min(D, 50)
digits (high precision) so identical runs produce byte-identical files.
Files are written atomically (temp then rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction

import mpmath

from . import __version__


def render_number(x, digits: int | None = None) -> str:
    """Deterministic decimal rendering for floats, ints, mpf, and Fractions."""
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return mpmath.nstr(x, min(digits or 50, 50), strip_zeros=True)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def metadata_lines(command: str, config_echo: dict, precision,
                   wall_clock: float | None) -> list[str]:
    lines = [f"# electricwalk {command} v{__version__}"]
    echo = " ".join(f"{k}={v}" for k, v in sorted(config_echo.items())
                    if v is not None)
    lines.append(f"# config: {echo}")
    lines.append(f"# precision: {precision}")
    if wall_clock is not None:
        lines.append(f"# wall_clock_s: {wall_clock:.3f}")
    return lines


def write_csv(path: str, command: str, config_echo: dict, header: list[str],
              rows, precision="machine", wall_clock: float | None = None,
              digits: int | None = None) -> None:
    lines = metadata_lines(command, config_echo, precision, wall_clock)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(render_number(v, digits) for v in row))
    atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: str, command: str, config_echo: dict, payload: dict,
               precision="machine", wall_clock: float | None = None) -> None:
    doc = {
        "meta": {
            "tool": f"electricwalk {command}",
            "version": __version__,
            "config": {k: str(v) for k, v in sorted(config_echo.items())
                       if v is not None},
            "precision": str(precision),
        },
        **payload,
    }
    if wall_clock is not None:
        doc["meta"]["wall_clock_s"] = round(wall_clock, 3)
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=True,
                                  default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (mpmath.mpf, mpmath.mpc)):
        return mpmath.nstr(obj, 50)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    raise TypeError(f"not JSON serializable: {type(obj)}")


# -- walkcore encode/decode helpers -----------------------------------------

def state_to_dict(state) -> dict:
    """JSON-ready encoding of a WalkState (machine or high precision)."""
    digits = state.dps
    amps = []
    for i in range(state.n_sites):
        row = []
        for c in range(2):
            z = state.amps[i, c]
            row.append([render_number(z.real, digits), render_number(z.imag, digits)])
        amps.append(row)
    return {"x_min": state.x_min, "digits": digits, "amps": amps}


def state_from_dict(doc: dict):
    """Inverse of :func:`state_to_dict` (machine precision restores exactly;
    high precision restores at the recorded digit count)."""
    import numpy as np
    from .hp import workdps
    from .walkcore import WalkState

    digits = doc.get("digits")
    n = len(doc["amps"])
    if digits is None:
        amps = np.empty((n, 2), dtype=complex)
        for i, row in enumerate(doc["amps"]):
            for c in range(2):
                amps[i, c] = complex(float(row[c][0]), float(row[c][1]))
    else:
        import numpy as np
        amps = np.empty((n, 2), dtype=object)
        with workdps(digits):
            for i, row in enumerate(doc["amps"]):
                for c in range(2):
                    amps[i, c] = mpmath.mpc(mpmath.mpf(row[c][0]),
                                            mpmath.mpf(row[c][1]))
    return WalkState(doc["x_min"], amps, digits)


def series_rows(series, digits: int | None = None):
    """(t, sigma, p_return) rows of an ObservableSeries."""
    for t in range(len(series.sigma)):
        yield (t, series.sigma[t], series.p_return[t])
