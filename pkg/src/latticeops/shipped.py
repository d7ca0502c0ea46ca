"""Accessors for the symbol files shipped with the package.

These are the standing examples used by the verification suites and the
command line: an invertible constant, the two shift-jump symbols with
index +1 / -1, the order-2 Bessel multiplier, and the perturbed Bessel
symbol that exercises the parametrix machinery.
"""

from __future__ import annotations

from importlib import resources

from .symbols import read_symbol_json

SHIPPED = ("constant", "jump_plus", "jump_minus", "bessel2", "perturbed_bessel")


def shipped_path(name: str):
    """Filesystem path of a shipped symbol JSON (context-manager free:
    the package is installed as a regular directory)."""
    if name not in SHIPPED:
        raise KeyError(f"no shipped symbol {name!r}; have {', '.join(SHIPPED)}")
    return resources.files("latticeops") / "assets" / f"{name}.json"


def shipped_symbol(name: str):
    return read_symbol_json(shipped_path(name))
