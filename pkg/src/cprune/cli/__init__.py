from .config import ConfigError, OracleConfig, RunConfig, load_config
from .main import build_parser, cmd_export_plot, cmd_run, main

__all__ = ["ConfigError", "OracleConfig", "RunConfig", "load_config", "build_parser", "cmd_export_plot", "cmd_run", "main"]
