"""Exact tools for bilevel linear programs with a single upper-level variable."""

from .exact_arith import Rational, backend, cf_round, format_rational, parse_rational, size
from .model_io import BlpGeneral, BlpSingle, Cnf, LexLp, ZeroOneIlp

__version__ = "0.1.0"

__all__ = [
    "BlpGeneral",
    "BlpSingle",
    "Cnf",
    "LexLp",
    "Rational",
    "ZeroOneIlp",
    "backend",
    "cf_round",
    "format_rational",
    "parse_rational",
    "size",
]
