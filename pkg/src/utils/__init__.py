"""
Utility modules for the laboratory.
"""

from .config import SystemConfig, get_config, set_config, load_config_file, worker_count

__all__ = [
    "SystemConfig",
    "get_config",
    "set_config",
    "load_config_file",
    "worker_count"
]
