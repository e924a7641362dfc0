"""Key-value configuration loading.

The packaged ``data/defaults.cfg`` defines every tunable constant.  A
user file (the ``--config`` flag or the ``VAPORCELL_CONFIG`` environment
variable) overlays it; keys not present in the defaults are rejected so
typos fail loudly instead of being silently ignored.
"""

from __future__ import annotations

import os
from importlib import resources

from .errors import ConfigError

ENV_VAR = "VAPORCELL_CONFIG"


def parse_config_text(text: str, source: str = "<string>") -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value in {raw!r}")
        out[key] = value
    return out


def default_config() -> dict:
    """The packaged defaults as a flat string->string mapping."""
    text = resources.files("vaporcell").joinpath("data/defaults.cfg").read_text("utf-8")
    return parse_config_text(text, source="defaults.cfg")


def load_config(path: str | None = None) -> dict:
    """Defaults overlaid with a user file, if one is given.

    Lookup order for the user file: explicit ``path`` argument, then the
    VAPORCELL_CONFIG environment variable.  Unknown keys in the user file
    raise ConfigError.
    """
    cfg = default_config()
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        overrides = parse_config_text(text, source=str(path))
        unknown = sorted(set(overrides) - set(cfg))
        if unknown:
            raise ConfigError(f"{path}: unknown config keys: {', '.join(unknown)}")
        cfg.update(overrides)
    return cfg


def get_float(cfg: dict, key: str) -> float:
    try:
        return float(cfg[key])
    except KeyError:
        raise ConfigError(f"missing config key: {key}") from None
    except ValueError:
        raise ConfigError(f"config key {key} is not a number: {cfg[key]!r}") from None


def get_int(cfg: dict, key: str) -> int:
    value = get_float(cfg, key)
    if value != int(value):
        raise ConfigError(f"config key {key} must be an integer, got {value}")
    return int(value)


def get_str(cfg: dict, key: str) -> str:
    try:
        return cfg[key]
    except KeyError:
        raise ConfigError(f"missing config key: {key}") from None
