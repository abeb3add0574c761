"""Configuration, world files, bundled scenes, output writers and the CLI."""

from .config import ConfigError, apply_overrides, config_from_dict, config_to_dict, default_config_dict
from .bundled import BUNDLED_WORLDS, build_paper_worlds
from .svg import render_svg
from .world_io import (InputError, Scenario, load_scenario, load_world, save_world, scenario_from_dict,
                       world_from_dict, world_to_dict)

__all__ = [
    "ConfigError", "apply_overrides", "config_from_dict", "config_to_dict", "default_config_dict",
    "BUNDLED_WORLDS", "build_paper_worlds", "render_svg", "InputError", "Scenario", "load_scenario",
    "load_world", "save_world", "scenario_from_dict", "world_from_dict", "world_to_dict",
]
