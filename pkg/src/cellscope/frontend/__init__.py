from .lower import build_cfg, lower
from .parser import FrontendError, Program, parse_program

__all__ = ["FrontendError", "Program", "build_cfg", "lower", "parse_program"]
