"""Model specification files.

INI-style sections parsed with :mod:`configparser`:

    [shape]            m, n
    [diffusion]        a (d*d entries, row-major), alpha (m entries)
    [drift]            b (d entries), beta_1 .. beta_m (d entries each),
                       beta_JJ (n*n entries, row-major)
    [killing]          c, gamma (m entries)
    [jumps.constant]   family = zero|exp|point|gamma|stable, axis (1-based)
                       and the family parameters
    [jumps.linear.i]   same grammar, for i = 1..m

Numbers may be separated by whitespace or commas.  Omitted sections and keys
default to zero.  ``write_model`` emits every float with 17 significant
digits so a written file re-parses to an identical model.
"""

from __future__ import annotations

import configparser
import io

import numpy as np

from .errors import ConfigError
from .model import (
    AffineModel,
    CompoundPoissonExp,
    CompoundPoissonPoint,
    GammaLevy,
    LevyMeasure,
    StateShape,
    TemperedStableHalf,
    ZeroJumps,
)

__all__ = ["parse_model", "write_model", "load_model_file"]


def _floats(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.replace(",", " ").split()])


def _measure_from_section(sec) -> LevyMeasure:
    family = sec.get("family", "zero").strip().lower()
    if family == "zero":
        return ZeroJumps()
    axis = int(sec.get("axis", "1")) - 1
    if family == "exp":
        return CompoundPoissonExp(rate=float(sec["rate"]),
                                  jump_rate=float(sec["jump_rate"]), axis=axis)
    if family == "point":
        return CompoundPoissonPoint(rate=float(sec["rate"]),
                                    size=float(sec["size"]), axis=axis)
    if family == "gamma":
        return GammaLevy(c=float(sec["c"]), rho=float(sec["rho"]), axis=axis)
    if family == "stable":
        return TemperedStableHalf(scale=float(sec["scale"]),
                                  tempering=float(sec["tempering"]), axis=axis)
    raise ConfigError(f"unknown jump family {family!r}")


def _measure_to_lines(tag: str, mu: LevyMeasure):
    lines = [f"[{tag}]"]
    if mu.is_zero:
        lines.append("family = zero")
        return lines
    axis = mu.axis + 1
    if isinstance(mu, CompoundPoissonExp):
        lines += ["family = exp", f"axis = {axis}",
                  f"rate = {mu.rate:.17g}", f"jump_rate = {mu.jump_rate:.17g}"]
    elif isinstance(mu, CompoundPoissonPoint):
        lines += ["family = point", f"axis = {axis}",
                  f"rate = {mu.rate:.17g}", f"size = {mu.size:.17g}"]
    elif isinstance(mu, GammaLevy):
        lines += ["family = gamma", f"axis = {axis}",
                  f"c = {mu.c:.17g}", f"rho = {mu.rho:.17g}"]
    elif isinstance(mu, TemperedStableHalf):
        lines += ["family = stable", f"axis = {axis}",
                  f"scale = {mu.scale:.17g}", f"tempering = {mu.tempering:.17g}"]
    else:
        raise ConfigError(f"measure {type(mu).__name__} has no file representation")
    return lines


def parse_model(text: str) -> AffineModel:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed model file: {exc}") from exc
    if "shape" not in cp:
        raise ConfigError("model file must contain a [shape] section")
    m = cp["shape"].getint("m")
    n = cp["shape"].getint("n")
    shape = StateShape(m, n)
    d = shape.d

    def grab(section, key, size, default=0.0):
        if section in cp and key in cp[section]:
            arr = _floats(cp[section][key])
            if arr.size != size:
                raise ConfigError(f"[{section}] {key} expects {size} entries, got {arr.size}")
            return arr
        return np.full(size, default)

    a = grab("diffusion", "a", d * d).reshape(d, d)
    alpha = grab("diffusion", "alpha", m)
    b = grab("drift", "b", d)
    beta_I = np.zeros((m, d))
    for i in range(m):
        beta_I[i] = grab("drift", f"beta_{i + 1}", d)
    beta_JJ = grab("drift", "beta_JJ", n * n).reshape(n, n)
    c = float(cp["killing"].get("c", "0")) if "killing" in cp else 0.0
    gamma = grab("killing", "gamma", m)

    mu0 = _measure_from_section(cp["jumps.constant"]) if "jumps.constant" in cp else ZeroJumps()
    mus = []
    for i in range(m):
        tag = f"jumps.linear.{i + 1}"
        mus.append(_measure_from_section(cp[tag]) if tag in cp else ZeroJumps())

    return AffineModel(shape=shape, a=a, b=b, c=c, mu0=mu0, alpha=alpha,
                       beta_I=beta_I, gamma=gamma, mus=tuple(mus), beta_JJ=beta_JJ)


def write_model(model: AffineModel) -> str:
    shape = model.shape
    m, n, d = shape.m, shape.n, shape.d
    out = io.StringIO()

    def vec(x):
        return " ".join(f"{v:.17g}" for v in np.asarray(x).ravel())

    out.write(f"[shape]\nm = {m}\nn = {n}\n\n")
    out.write(f"[diffusion]\na = {vec(model.a)}\n")
    if m:
        out.write(f"alpha = {vec(model.alpha)}\n")
    out.write(f"\n[drift]\nb = {vec(model.b)}\n")
    for i in range(m):
        out.write(f"beta_{i + 1} = {vec(model.beta_I[i])}\n")
    if n:
        out.write(f"beta_JJ = {vec(model.beta_JJ)}\n")
    out.write(f"\n[killing]\nc = {model.c:.17g}\n")
    if m:
        out.write(f"gamma = {vec(model.gamma)}\n")
    out.write("\n" + "\n".join(_measure_to_lines("jumps.constant", model.mu0)) + "\n")
    for i in range(m):
        out.write("\n" + "\n".join(_measure_to_lines(f"jumps.linear.{i + 1}", model.mus[i])) + "\n")
    return out.getvalue()


def load_model_file(path: str) -> AffineModel:
    with open(path) as fh:
        return parse_model(fh.read())
