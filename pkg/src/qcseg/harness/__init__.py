from .config import AppConfig, load_config, save_config
from .runstore import load_run, save_run

__all__ = ["AppConfig", "load_config", "save_config", "save_run", "load_run"]
