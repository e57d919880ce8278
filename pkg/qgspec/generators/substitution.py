"""Fixed points of primitive substitutions.

The right half of the sequence is the one-sided fixed point grown from the
seed. The left half is built from centered supertiles: a left letter ``b``
and a power ``p`` are chosen so that ``S^p(b)`` ends in ``b`` and ``b a`` is
a factor of the fixed point. The words ``S^{pk}(b) . S^{pk}(a)`` then
stabilize on both sides and every factor of the two-sided limit is legal.
"""

import logging
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from ..core.errors import WordGenerationError
from ..core.generator import BaseWordGenerator, SubshiftSpec
from ..core.registry import register_generator

logger = logging.getLogger(__name__)

RulesKey = Tuple[Tuple[int, Tuple[int, ...]], ...]

# Factors are checked for legality on a fixed-point prefix of this length.
_LEGALITY_PREFIX = 4096


def apply_rules(word: Sequence[int], rules: Dict[int, Sequence[int]]) -> List[int]:
    out: List[int] = []
    for symbol in word:
        out.extend(rules[symbol])
    return out


def _rules_key(rules: Dict[int, List[int]]) -> RulesKey:
    return tuple(sorted((k, tuple(v)) for k, v in rules.items()))


def _grow(seed_word: List[int], rules: Dict[int, Sequence[int]], length: int, power: int = 1) -> List[int]:
    word = list(seed_word)
    while len(word) < length:
        grown = word
        for _ in range(power):
            grown = apply_rules(grown, rules)
        if len(grown) <= len(word):
            raise WordGenerationError("substitution is not expanding on its seed")
        word = grown
    return word


@lru_cache(maxsize=32)
def _one_sided(key: RulesKey, seed: int, length: int) -> Tuple[int, ...]:
    rules = {k: list(v) for k, v in key}
    if rules[seed][0] != seed:
        raise WordGenerationError(
            f"image of seed {seed} is {rules[seed]}, which does not start with the seed"
        )
    return tuple(_grow([seed], rules, length))


@lru_cache(maxsize=32)
def _left_seed(key: RulesKey, seed: int) -> Tuple[int, int]:
    """Return (left letter, power) of the centered supertile construction."""
    rules = {k: list(v) for k, v in key}
    prefix = _one_sided(key, seed, _LEGALITY_PREFIX)
    legal_pairs = set(zip(prefix, prefix[1:]))
    letters = sorted(rules, key=lambda b: (b == seed, b))
    for power in range(1, 2 * len(rules) + 2):
        for b in letters:
            if (b, seed) not in legal_pairs:
                continue
            image = [b]
            for _ in range(power):
                image = apply_rules(image, rules)
            if image[-1] == b and len(image) > 1:
                return b, power
    raise WordGenerationError("no centered supertile found; two-sided extension undefined")


@lru_cache(maxsize=32)
def _left_half(key: RulesKey, seed: int, length: int) -> Tuple[int, ...]:
    """Symbols s_{-length}, ..., s_{-1} of the two-sided extension."""
    rules = {k: list(v) for k, v in key}
    b, power = _left_seed(key, seed)
    word = _grow([b], rules, length, power)
    logger.debug("two-sided extension uses left letter %d at power %d", b, power)
    return tuple(word[-length:])


@register_generator("substitution")
class SubstitutionGenerator(BaseWordGenerator):
    """Fixed point of a substitution, optionally extended to negative indices."""

    def __init__(self, spec: SubshiftSpec):
        super().__init__(spec)
        assert spec.rules is not None and spec.seed is not None
        self.rules = {k: list(v) for k, v in spec.rules.items()}
        self.seed = spec.seed
        self._key = _rules_key(self.rules)
        if self.rules[self.seed][0] != self.seed:
            raise WordGenerationError(
                f"image of seed {self.seed} is {self.rules[self.seed]}, "
                "which does not start with the seed"
            )

    def symbols(self, origin: int, length: int) -> List[int]:
        stop = origin + length
        right: Tuple[int, ...] = ()
        left: Tuple[int, ...] = ()
        if stop > 0:
            right = _one_sided(self._key, self.seed, _bucket(stop))[max(origin, 0) : stop]
        if origin < 0:
            if not self.spec.two_sided:
                raise WordGenerationError(
                    f"origin {origin} < 0 requires a two-sided substitution spec"
                )
            depth = _bucket(-origin)
            half = _left_half(self._key, self.seed, depth)
            left = half[depth + origin : depth + min(stop, 0)]
        return list(left) + list(right)

    def substitute(self, word: Sequence[int]) -> List[int]:
        return apply_rules(word, self.rules)


def _bucket(n: int) -> int:
    """Round cache keys up to a power of two so nearby requests share work."""
    size = 64
    while size < n:
        size *= 2
    return size
