"""
Configuration management for two-price computations.
"""

import copy
import json
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict

logger = logging.getLogger(__name__)

ENV_MAX_GENERAL_M = "TWOPRICE_MAX_GENERAL_M"


@dataclass(frozen=True)
class Limits:
    """
    Enumeration caps shared by the library.

    Attributes:
        max_general_m: Largest item count for 2^m bundle enumeration
        max_compositions: Largest number of splits min_discrepancy scans for n > 2
        gain_order_max_m: Largest item count for gain-order checks
        max_search_m: Largest item count for exhaustive CE and WE search
    """

    max_general_m: int = 20
    max_compositions: int = 250_000
    gain_order_max_m: int = 16
    max_search_m: int = 8


_active_limits = Limits()


def active_limits() -> Limits:
    """
    Return the limits currently in force.

    The environment variable ``TWOPRICE_MAX_GENERAL_M`` overrides the general
    enumeration cap.
    """
    override = os.environ.get(ENV_MAX_GENERAL_M)
    if override is None:
        return _active_limits
    try:
        return replace(_active_limits, max_general_m=int(override))
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", ENV_MAX_GENERAL_M, override)
        return _active_limits


def use_limits(limits: Limits) -> None:
    """Install new process-wide limits."""
    global _active_limits
    _active_limits = limits


class Config:
    """
    Settings for limits, output formatting and logging.

    Loads settings from JSON files and provides typed access
    to configuration parameters.
    """

    # Default configuration values
    DEFAULTS = {
        "limits": {
            "max_general_m": 20,
            "max_compositions": 250_000,
            "gain_order_max_m": 16,
            "max_search_m": 8,
        },
        "output": {"indent": 2, "approx": False},
        "logging": {"level": "WARNING"},
    }

    def __init__(self, config_path: str = "config/settings.json"):
        """
        Initialize configuration.

        Args:
            config_path (str): Path to configuration JSON file
        """
        self.config_path = Path(config_path)
        self.settings = copy.deepcopy(self.DEFAULTS)
        self.load()

    def load(self) -> None:
        """
        Load configuration from file.

        If the file doesn't exist, defaults are used.
        """
        if not self.config_path.exists():
            logger.debug("No config at %s, using defaults", self.config_path)
            return
        try:
            with open(self.config_path, "r") as f:
                user_settings = json.load(f)
            if not isinstance(user_settings, dict):
                raise ValueError("top-level JSON value must be an object")
            self._merge_settings(user_settings)
        except (json.JSONDecodeError, OSError, ValueError) as e:
            logger.warning("Could not load config from %s: %s", self.config_path, e)
            logger.warning("Using default settings")

    def _merge_settings(self, user_settings: Dict[str, Any]) -> None:
        """
        Merge user settings with defaults.

        Args:
            user_settings (dict): User-provided configuration values
        """
        for section, values in user_settings.items():
            if section in self.settings and isinstance(values, dict):
                self.settings[section].update(values)
            else:
                logger.warning("Ignoring unknown config section %r", section)

    def save(self) -> None:
        """Save current settings to file."""
        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.config_path, "w") as f:
            json.dump(self.settings, f, indent=2)

    def get(self, section: str, key: str, default: Any = None) -> Any:
        """
        Get a configuration value.

        Args:
            section (str): Configuration section (e.g., 'limits', 'output')
            key (str): Setting key within the section
            default (Any): Default value if key not found

        Returns:
            Any: Configuration value
        """
        return self.settings.get(section, {}).get(key, default)

    def set(self, section: str, key: str, value: Any) -> None:
        """
        Set a configuration value.

        Args:
            section (str): Configuration section
            key (str): Setting key
            value (Any): Value to set
        """
        if section not in self.settings:
            self.settings[section] = {}
        self.settings[section][key] = value

    def limits(self) -> Limits:
        """Build a ``Limits`` from the ``limits`` section."""
        return Limits(
            max_general_m=int(self.get("limits", "max_general_m", 20)),
            max_compositions=int(self.get("limits", "max_compositions", 250_000)),
            gain_order_max_m=int(self.get("limits", "gain_order_max_m", 16)),
            max_search_m=int(self.get("limits", "max_search_m", 8)),
        )
