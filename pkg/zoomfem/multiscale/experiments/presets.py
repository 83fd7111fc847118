"""
   Bundled scenario and sweep files. The pore coordinates are hand-placed layouts, not measured samples.
"""
import json
from pathlib import Path
from typing import List

from zoomfem.multiscale.protocol import ConfigError

PRESET_DIR: Path = Path(__file__).parent / "presets"
SWEEP_KEY: str = "meshes"


def preset_names() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


def scenario_names() -> List[str]:
    """
    :return: the presets that describe a single run; sweeps list their meshes and are left out
    """
    return [name for name in preset_names() if SWEEP_KEY not in json.loads(preset_path(name).read_text())]


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}, known presets: {', '.join(preset_names())}")
    return path


def resolve(config: str) -> Path:
    """
    :param config: a file path or the name of a bundled preset
    """
    path = Path(config)
    if path.is_file():
        return path
    if path.suffix or path.parent != Path("."):
        raise ConfigError(f"no scenario file at {path}")
    return preset_path(config)
