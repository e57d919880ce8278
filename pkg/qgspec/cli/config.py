"""Presets and the INI config format.

A config file has an optional ``[subshift]`` section with the SubshiftSpec
fields and an optional ``[run]`` section with RunConfig fields::

    [subshift]
    kind = substitution
    rules = 1: 1 2; 2: 1
    seed = 1

    [run]
    mode = graph
    e_hi = 40
    tol = 1e-4

Unknown sections and keys are errors.
"""

import configparser
import math
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

from pydantic import ValidationError

from ..core.errors import ConfigError
from ..core.generator import SubshiftSpec
from ..sequences import fibonacci_spec, free_spec, periodic_spec, sturmian_spec
from .models import RunConfig

SPEC_SECTION = "subshift"
RUN_SECTION = "run"
LIST_KEYS = {"breakpoints", "values", "word"}

PRESETS: Dict[str, Callable[[], Dict[str, Any]]] = {
    "fibonacci": lambda: {"spec": fibonacci_spec()},
    "free": lambda: {"spec": free_spec()},
    "period2": lambda: {"spec": periodic_spec([1, 2]), "mode": "simplified"},
    "sturmian": lambda: {"spec": sturmian_spec((math.sqrt(5.0) - 1.0) / 2.0)},
}
PRESETS.update(
    {
        f"bm-k{k}": partial(dict, spec=fibonacci_spec(), mode="simplified", bm_k=k)
        for k in range(4)
    }
)


def list_presets() -> List[str]:
    return sorted(PRESETS)


def preset_values(name: str) -> Dict[str, Any]:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(list_presets())}") from None


def _parse_rules(text: str) -> Dict[str, List[str]]:
    rules: Dict[str, List[str]] = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        symbol, sep, image = part.partition(":")
        if not sep:
            raise ConfigError(f"substitution rule {part.strip()!r} must look like '1: 1 2'")
        rules[symbol.strip()] = image.replace(",", " ").split()
    return rules


def _spec_section(section: configparser.SectionProxy) -> Dict[str, Any]:
    allowed = set(SubshiftSpec.model_fields)
    values: Dict[str, Any] = {}
    for key, raw in section.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{SPEC_SECTION}]")
        if key == "rules":
            values[key] = _parse_rules(raw)
        elif key in LIST_KEYS:
            values[key] = raw.replace(",", " ").split()
        else:
            values[key] = raw
    return values


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Raw field values from an INI file, validated for shape but not for ranges."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    unknown = set(parser.sections()) - {SPEC_SECTION, RUN_SECTION}
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)} in {path}")

    values: Dict[str, Any] = {}
    if parser.has_section(RUN_SECTION):
        allowed = set(RunConfig.model_fields) - {"spec"} | {"preset"}
        for key, raw in parser[RUN_SECTION].items():
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{RUN_SECTION}]")
            values[key] = raw
    if parser.has_section(SPEC_SECTION):
        try:
            values["spec"] = SubshiftSpec(**_spec_section(parser[SPEC_SECTION]))
        except ValidationError as exc:
            raise ConfigError(f"invalid [{SPEC_SECTION}] in {path}: {exc}") from exc
    return values


def build_config(
    preset: Optional[str] = None,
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """Merge preset, file and flag values (later wins) into a validated RunConfig."""
    file_values = load_config_file(config_path) if config_path else {}
    preset = preset or file_values.pop("preset", None)
    file_values.pop("preset", None)

    merged: Dict[str, Any] = preset_values(preset) if preset else {}
    merged.update(file_values)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**merged)
