"""Codings of the irrational rotation x -> x + alpha (mod 1).

s_n = gamma_k when frac(n * alpha + omega_0) lies in [a_{k-1}, a_k). Points
are located in double precision first; any point closer than ``_GUARD`` to
a breakpoint is re-evaluated with mpmath so interval tests stay exact for
the float value of alpha.
"""

import logging
from fractions import Fraction
from typing import List

import mpmath
import numpy as np

from ..core.generator import BaseWordGenerator, SubshiftSpec
from ..core.registry import register_generator

logger = logging.getLogger(__name__)

_GUARD = 1e-9
_DPS = 50


@register_generator("sturmian")
class SturmianGenerator(BaseWordGenerator):
    def __init__(self, spec: SubshiftSpec):
        super().__init__(spec)
        assert spec.alpha is not None and spec.breakpoints is not None
        assert spec.values is not None
        self.alpha = spec.alpha
        self.phase = spec.phase
        self.breakpoints = [Fraction(p) for p in spec.breakpoints]
        self.values = list(spec.values)

    def symbols(self, origin: int, length: int) -> List[int]:
        n = np.arange(origin, origin + length, dtype=np.float64)
        x = np.mod(n * self.alpha + self.phase, 1.0)
        inner = np.array([float(b) for b in self.breakpoints[1:-1]])
        slots = np.searchsorted(inner, x, side="right")

        near = np.zeros(length, dtype=bool)
        for b in list(inner) + [0.0, 1.0]:
            near |= np.abs(x - b) < _GUARD
        ambiguous = np.flatnonzero(near)
        if ambiguous.size:
            logger.debug("re-evaluating %d rotation points near breakpoints", ambiguous.size)
            for i in ambiguous:
                slots[i] = self._exact_slot(origin + int(i))
        return [self.values[int(k)] for k in slots]

    def _exact_slot(self, n: int) -> int:
        with mpmath.workdps(_DPS):
            x = mpmath.frac(n * mpmath.mpf(self.alpha) + mpmath.mpf(self.phase))
            for k, b in enumerate(self.breakpoints[1:-1]):
                if x < mpmath.mpf(b.numerator) / b.denominator:
                    return k
            return len(self.breakpoints) - 2
