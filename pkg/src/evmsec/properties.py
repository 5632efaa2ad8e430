"""The built-in property catalog, loaded from ``patterns/builtin``."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path

from .dsl import PropertyConfigError, PropertySpec, load_properties

BUILTIN_ORDER = ("LQ", "NW", "RW", "RT", "HE", "TT", "TA", "TR", "VA")


def builtin_dir() -> Path:
    return Path(str(resources.files("evmsec").joinpath("patterns", "builtin")))


def custom_dir() -> Path:
    return Path(str(resources.files("evmsec").joinpath("patterns", "custom")))


class PropertyCatalog(dict):
    """Property name to :class:`PropertySpec`, in catalog order."""

    def select(self, names) -> list[PropertySpec]:
        missing = [n for n in names if n not in self]
        if missing:
            raise PropertyConfigError(f"unknown properties: {', '.join(missing)}")
        return [self[n] for n in names]


@lru_cache(maxsize=1)
def _builtin() -> tuple[PropertySpec, ...]:
    found = load_properties(builtin_dir())
    if set(found) != set(BUILTIN_ORDER):
        raise PropertyConfigError(f"built-in catalog mismatch: found {sorted(found)}")
    return tuple(found[n] for n in BUILTIN_ORDER)


def catalog(extra_dirs=()) -> PropertyCatalog:
    """Built-in properties, plus any from ``extra_dirs`` (later names override)."""
    cat = PropertyCatalog((p.name, p) for p in _builtin())
    for d in extra_dirs:
        cat.update(load_properties(d))
    return cat
