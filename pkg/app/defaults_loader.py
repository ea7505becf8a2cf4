"""Numerical defaults loader for YAML-based configuration."""
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from loguru import logger


BUILTIN_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "geometry": {"cantor_depth": 40, "box_scales_log2": [4, 12]},
    "sampling": {"chunk_size": 1024},
    "grid": {"policy": "geometric-near-target", "n_base": 200, "ratio": 0.5, "spacing_floor": 1e-9},
    "energy": {"s": 0.5, "tolerance": 1e-8, "max_iter": 100000},
    "experiment": {"threshold": 0.05, "pin_margin": 0.01, "n_paths": 10000, "levels": [2, 4, 6, 8]},
}


class DefaultsLoader:
    """Loads numerical defaults from a YAML file, falling back to built-in values."""
    
    def __init__(self, defaults_file: Optional[str] = None):
        """Initialize defaults loader.
        
        Args:
            defaults_file: Path to defaults YAML file.
                           If None, uses config/defaults.yaml
        """
        if defaults_file is None:
            project_root = Path(__file__).parent.parent
            defaults_file = project_root / "config" / "defaults.yaml"
        
        self.defaults_file = Path(defaults_file)
        self._config: Optional[Dict[str, Any]] = None
        self._load_config()
    
    def _load_config(self) -> None:
        """Load defaults from YAML file."""
        try:
            if not self.defaults_file.exists():
                logger.info(
                    f"Defaults file not found: {self.defaults_file}. "
                    "Using built-in defaults."
                )
                self._config = None
                return
            
            with open(self.defaults_file, "r", encoding="utf-8") as f:
                self._config = yaml.safe_load(f) or {}
            
            logger.info(f"Loaded numerical defaults from: {self.defaults_file}")
        except (OSError, yaml.YAMLError) as e:
            logger.error(f"Error loading defaults from {self.defaults_file}: {e}")
            self._config = None
    
    def is_available(self) -> bool:
        """Check if the YAML file was loaded."""
        return self._config is not None
    
    def section(self, name: str) -> Dict[str, Any]:
        """Get a section merged over its built-in values.
        
        Args:
            name: Section name (geometry, sampling, grid, energy, experiment)
        
        Returns:
            Dictionary of settings for the section
        """
        merged = dict(BUILTIN_DEFAULTS.get(name, {}))
        if self._config is not None:
            merged.update(self._config.get(name) or {})
        return merged
    
    def get(self, name: str, key: str) -> Any:
        """Get a single default value."""
        return self.section(name)[key]
    
    def box_scales(self) -> List[float]:
        """Box sizes 2^-lo .. 2^-hi from the geometry section."""
        lo, hi = self.get("geometry", "box_scales_log2")
        return [2.0 ** -k for k in range(int(lo), int(hi) + 1)]
    
    def reload(self) -> None:
        """Reload defaults from file."""
        self._load_config()


# Singleton instance
_loader: Optional[DefaultsLoader] = None


def get_defaults_loader(defaults_file: Optional[str] = None) -> DefaultsLoader:
    """Get or create the defaults loader instance.
    
    Args:
        defaults_file: Path to defaults YAML file (optional)
        
    Returns:
        DefaultsLoader instance
    """
    global _loader
    if _loader is None:
        _loader = DefaultsLoader(defaults_file)
    return _loader


def reset_defaults_loader() -> None:
    """Forget the singleton (tests, or a changed LAB_DEFAULTS_FILE)."""
    global _loader
    _loader = None
