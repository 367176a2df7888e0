"""User settings: defaults, then ~/.cohn-localization/settings.json, then environment."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


logger = logging.getLogger(__name__)

ENV_WITT_BOUND = "COHN_LOCALIZATION_WITT_BOUND"
ENV_SERIES_DEGREE = "COHN_LOCALIZATION_SERIES_DEGREE"


def _default_settings_path() -> Path:
    return Path.home() / ".cohn-localization" / "settings.json"


def _default_moduli() -> list[int]:
    return list(range(2, 51))


@dataclass
class Settings:
    """
    Tunable limits for the workbench.

    witt_bound caps the module order searched by the Witt test,
    series_degree is the truncation shown next to free-algebra results,
    max_tor_degree is the highest Tor index reported, and flatness_moduli
    are the n used for the Tor(Z/n, sigma^-1 Z) instances.
    """

    witt_bound: int = 10_000
    series_degree: int = 4
    max_tor_degree: int = 2
    flatness_moduli: list[int] = field(default_factory=_default_moduli)

    @classmethod
    def load(cls, path: Optional[Path] = None, environ: Optional[dict[str, str]] = None) -> Settings:
        settings = cls()
        settings._apply_file(path or _default_settings_path())
        settings._apply_env(os.environ if environ is None else environ)
        return settings

    def _apply_file(self, path: Path) -> None:
        if not path.exists():
            return
        try:
            data = json.loads(path.read_text())
            if not isinstance(data, dict):
                raise ValueError("settings file must hold a JSON object")
            if "witt_bound" in data:
                self.witt_bound = int(data["witt_bound"])
            if "series_degree" in data:
                self.series_degree = int(data["series_degree"])
            if "max_tor_degree" in data:
                self.max_tor_degree = int(data["max_tor_degree"])
            if "flatness_moduli" in data:
                self.flatness_moduli = [int(n) for n in data["flatness_moduli"]]
            logger.debug("Loaded settings from %s", path)
        except (json.JSONDecodeError, OSError, TypeError, ValueError) as e:
            logger.warning("Failed to load settings from %s: %s", path, e)

    def _apply_env(self, environ) -> None:
        for name, attr in ((ENV_WITT_BOUND, "witt_bound"), (ENV_SERIES_DEGREE, "series_degree")):
            raw = environ.get(name)
            if raw is None:
                continue
            try:
                setattr(self, attr, int(raw))
            except ValueError:
                logger.warning("Ignoring %s=%r: not an integer", name, raw)

    def to_dict(self) -> dict:
        return {
            "witt_bound": self.witt_bound,
            "series_degree": self.series_degree,
            "max_tor_degree": self.max_tor_degree,
            "flatness_moduli": list(self.flatness_moduli),
        }
