"""Hyperparameter references used inside kernel expressions.

A parameter slot holds either a float (baked-in constant) or a string naming
an entry of the hyperparameter mapping passed at evaluation time.
"""

from __future__ import annotations

from typing import Mapping, Union

import numpy as np

from ..errors import MissingHyperparameter

Param = Union[str, float]


def resolve(p: Param, h: Mapping[str, float]) -> float:
    if isinstance(p, str):
        try:
            return float(h[p])
        except KeyError:
            raise MissingHyperparameter(p) from None
    return float(p)


def names(*ps: Param) -> frozenset[str]:
    return frozenset(p for p in ps if isinstance(p, str))


def accumulate(grads: dict, name: Param, value) -> None:
    """Add ``value`` to ``grads[name]`` when ``name`` is a reference."""
    if not isinstance(name, str):
        return
    if name in grads:
        grads[name] = grads[name] + value
    else:
        grads[name] = np.asarray(value, dtype=np.float64)


class Override:
    """Read-through mapping with one entry replaced (finite-difference probes)."""

    __slots__ = ("_base", "_name", "_value")

    def __init__(self, base: Mapping[str, float], name: str, value: float):
        self._base = base
        self._name = name
        self._value = value

    def __getitem__(self, key):
        if key == self._name:
            return self._value
        return self._base[key]

    def __contains__(self, key):
        return key == self._name or key in self._base
