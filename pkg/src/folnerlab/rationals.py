"""Exact-rational helpers used by every report and certificate.

All measures, ratios and bounds in the discrete core are ``fractions.Fraction``
values; reports serialize them as ``"p/q"`` strings with an advisory float
duplicate.  Parsing rejects non-rational input loudly (a malformed string like
``"2/0"`` is a config error, not a silent NaN).
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ConfigError


def rat(value) -> Fraction:
    """Coerce ints, "p/q" strings and Fractions to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad rational string {value!r}: {exc}") from exc
    raise ConfigError(f"not a rational: {value!r} (floats are rejected; pass 'p/q')")


def rat_str(value: Fraction) -> str:
    """Canonical "p/q" form, always with an explicit denominator."""
    f = Fraction(value)
    return f"{f.numerator}/{f.denominator}"


def rat_json(value: Fraction) -> dict:
    """Serialize a rational with its advisory decimal duplicate."""
    f = Fraction(value)
    return {"rational": rat_str(f), "decimal": float(f)}
