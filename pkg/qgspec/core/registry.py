from typing import Callable, Dict, List, Optional, Type
import importlib
import logging
import pkgutil
from pathlib import Path

from .errors import WordGenerationError
from .generator import BaseWordGenerator, SpecLike, coerce_spec

logger = logging.getLogger(__name__)


class GeneratorRegistry:
    _instance: Optional["GeneratorRegistry"] = None
    _generators: Dict[str, Type[BaseWordGenerator]] = {}

    def __new__(cls) -> "GeneratorRegistry":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    @classmethod
    def register(cls, kind: str, generator_class: Type[BaseWordGenerator]) -> None:
        if not (isinstance(generator_class, type) and issubclass(generator_class, BaseWordGenerator)):
            raise ValueError(f"Generator {generator_class} must inherit from BaseWordGenerator")
        cls._generators[kind] = generator_class

    @classmethod
    def get_generator(cls, kind: str) -> Optional[Type[BaseWordGenerator]]:
        return cls._generators.get(kind)

    @classmethod
    def list_generators(cls) -> List[str]:
        return sorted(cls._generators.keys())

    @classmethod
    def create_generator(cls, spec: SpecLike) -> BaseWordGenerator:
        spec = coerce_spec(spec)
        if not cls._generators:
            cls.discover_generators()
        generator_class = cls.get_generator(spec.kind.value)
        if generator_class is None:
            raise WordGenerationError(f"Unknown generator: {spec.kind.value}")
        return generator_class(spec)

    @classmethod
    def discover_generators(cls, package_path: str = "qgspec.generators") -> None:
        try:
            package = importlib.import_module(package_path)
        except ImportError:
            logger.warning("generator package %s not importable", package_path)
            return
        package_dir = Path(package.__file__).parent  # type: ignore[arg-type]

        for _, module_name, _ in pkgutil.iter_modules([str(package_dir)]):
            module_path = f"{package_path}.{module_name}"
            try:
                importlib.import_module(module_path)
            except ImportError as exc:
                logger.warning("skipping generator module %s: %s", module_path, exc)


def register_generator(
    kind: str,
) -> Callable[[Type[BaseWordGenerator]], Type[BaseWordGenerator]]:
    def decorator(cls: Type[BaseWordGenerator]) -> Type[BaseWordGenerator]:
        GeneratorRegistry.register(kind, cls)
        return cls

    return decorator
