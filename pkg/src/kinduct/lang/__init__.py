"""LoopC frontend: lexer, parser, types, interpreter, pretty printer."""

from kinduct.lang.parser import parse
from kinduct.lang.typecheck import typecheck
from kinduct.lang.pretty import pretty_print
from kinduct.lang.interp import interpret

__all__ = ["parse", "typecheck", "pretty_print", "interpret"]
