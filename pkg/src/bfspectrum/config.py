"""Line-oriented `key = value` sweep configuration."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metric import ADMISSIBILITY_MARGIN

FORMS = ("h_eps", "closed_irrational", "constant")
SPEC_KEYS = ("grid_n", "quad_q", "eigen_k", "tol", "form", "rho", "eps", "t_list", "output")
EXTRA_KEYS = ("amplitude", "length_window")
KEYS = SPEC_KEYS + EXTRA_KEYS


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class SweepPoint:
    t: float
    eps: float | None
    grid_n: int


@dataclass(frozen=True)
class SweepConfig:
    points: tuple
    quad_q: int = 256
    eigen_k: int = 5
    tol: float = 1e-8
    form: str = "h_eps"
    rho: float = 1.0
    amplitude: float = 0.5
    length_window: int = 3
    output: str | None = None

    @property
    def exact_form(self) -> bool:
        return self.form == "h_eps" or (self.form == "constant" and self.amplitude == 0.0)


def form_b_max(form: str, amplitude: float) -> float:
    return abs(amplitude) if form == "constant" else 1.0


def _floats(text: str) -> list[float]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range {text!r} must read start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("range count must be >= 1")
        return [float(v) for v in np.linspace(start, stop, count)]
    return [float(p) for p in text.split(",") if p.strip()]


def _ints(text: str) -> list[int]:
    out = []
    for p in text.split(","):
        p = p.strip()
        if not p:
            continue
        v = float(p)
        if v != int(v):
            raise ValueError(f"{p!r} is not an integer")
        out.append(int(v))
    return out


def parse_config(text: str) -> SweepConfig:
    """Parse and validate; every violation is reported, each with its line number."""
    errors: list[str] = []
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            errors.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in raw:
            errors.append(f"duplicate key {key!r} on lines {raw[key][1]} and {lineno}")
            continue
        raw[key] = (value, lineno)

    values: dict = {}

    def convert(key, fn, default):
        if key not in raw:
            values[key] = default
            return
        text, lineno = raw[key]
        try:
            values[key] = fn(text)
        except (ValueError, OverflowError) as exc:
            errors.append(f"line {lineno}: malformed value for {key}: {exc}")
            values[key] = None

    def line_of(key):
        return raw[key][1] if key in raw else "-"

    convert("grid_n", _ints, [64])
    convert("quad_q", _one_int, 256)
    convert("eigen_k", _one_int, 5)
    convert("tol", float, 1e-8)
    convert("form", str, "h_eps")
    convert("rho", float, 1.0)
    convert("eps", _floats, [0.05])
    convert("t_list", _floats, [0.0])
    convert("output", str, None)
    convert("amplitude", float, 0.5)
    convert("length_window", _one_int, 3)

    form = values["form"]
    if form is not None and form not in FORMS:
        errors.append(f"line {line_of('form')}: form must be one of {', '.join(FORMS)}, got {form!r}")
        form = None
    q = values["quad_q"]
    if q is not None and (q < 4 or q % 2):
        errors.append(f"line {line_of('quad_q')}: quad_q must be an even integer >= 4, got {q}")
    k = values["eigen_k"]
    if k is not None and k < 1:
        errors.append(f"line {line_of('eigen_k')}: eigen_k must be positive, got {k}")
    tol = values["tol"]
    if tol is not None and not tol > 0:
        errors.append(f"line {line_of('tol')}: tol must be positive, got {tol}")
    win = values["length_window"]
    if win is not None and win < 1:
        errors.append(f"line {line_of('length_window')}: length_window must be >= 1")

    ts = values["t_list"] or []
    if values["t_list"] is not None and not ts:
        errors.append(f"line {line_of('t_list')}: t_list is empty")

    def spread(key, seq):
        if seq is None:
            return None
        if len(seq) == 1:
            return seq * max(len(ts), 1)
        if len(seq) != len(ts):
            errors.append(f"line {line_of(key)}: {key} has {len(seq)} entries but t_list has {len(ts)}")
            return None
        return seq

    grids = spread("grid_n", values["grid_n"])
    epss = spread("eps", values["eps"])
    if grids is not None:
        for n in grids:
            if n < 8:
                errors.append(f"line {line_of('grid_n')}: grid_n must be >= 8, got {n}")
    if epss is not None and form == "h_eps":
        for e in epss:
            if not 0 < e < 0.25:
                errors.append(f"line {line_of('eps')}: eps must lie in (0, 1/4), got {e}")

    amp = values["amplitude"]
    if form is not None and amp is not None:
        bmax = form_b_max(form, amp)
        for t in ts:
            if t < 0:
                errors.append(f"line {line_of('t_list')}: t={t:g} must be >= 0")
            elif t * bmax >= 1.0 - ADMISSIBILITY_MARGIN:
                errors.append(
                    f"line {line_of('t_list')}: t={t:g} is inadmissible for form {form}: "
                    f"t*b_max = {t * bmax:.12g} >= 1 - {ADMISSIBILITY_MARGIN:g}"
                )

    if errors:
        raise ConfigError(errors)

    uses_eps = form == "h_eps"
    points = tuple(
        SweepPoint(float(t), float(e) if uses_eps else None, int(n))
        for t, e, n in zip(ts, epss, grids)
    )
    return SweepConfig(
        points=points,
        quad_q=q,
        eigen_k=k,
        tol=tol,
        form=form,
        rho=values["rho"],
        amplitude=amp,
        length_window=win,
        output=values["output"],
    )


def _one_int(text: str) -> int:
    vals = _ints(text)
    if len(vals) != 1:
        raise ValueError(f"expected one integer, got {text!r}")
    return vals[0]


def load_config(path) -> SweepConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
