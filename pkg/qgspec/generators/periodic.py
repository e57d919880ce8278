from typing import List

from ..core.errors import WordGenerationError
from ..core.generator import BaseWordGenerator, SubshiftSpec
from ..core.registry import register_generator


@register_generator("periodic")
class PeriodicGenerator(BaseWordGenerator):
    """Two-sided periodic extension of a finite word, s_n = word[n mod p]."""

    def __init__(self, spec: SubshiftSpec):
        super().__init__(spec)
        assert spec.word is not None
        self.period = list(spec.word)

    def symbols(self, origin: int, length: int) -> List[int]:
        p = len(self.period)
        return [self.period[n % p] for n in range(origin, origin + length)]


@register_generator("explicit")
class ExplicitGenerator(BaseWordGenerator):
    """A finite window given verbatim; requests outside it are errors."""

    def __init__(self, spec: SubshiftSpec):
        super().__init__(spec)
        assert spec.word is not None
        self.word = list(spec.word)
        self.origin = spec.origin

    def symbols(self, origin: int, length: int) -> List[int]:
        start = origin - self.origin
        if start < 0 or start + length > len(self.word):
            raise WordGenerationError(
                f"explicit window covers [{self.origin}, {self.origin + len(self.word)}), "
                f"requested [{origin}, {origin + length})"
            )
        return self.word[start : start + length]
