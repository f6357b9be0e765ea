from .ast import *  # noqa: F401,F403
from .parser import parse, parse_expr
from .printer import print_expr, print_module, print_stmt
from .regions import Region, VarInfo, find_regions

__all__ = ["parse", "parse_expr", "print_module", "print_expr", "print_stmt", "find_regions",
           "Region", "VarInfo"]
