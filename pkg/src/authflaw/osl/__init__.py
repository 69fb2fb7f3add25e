"""OSL frontend: parser, IR lowering and control-flow graphs."""

from .ast import Program
from .cfg import CFG, Block, build_cfg
from .ir import Instruction, IRProgram, lower_to_ir
from .parser import OSLSemanticError, OSLSyntaxError, parse_files, parse_program, tokenize

__all__ = [
    "Block",
    "CFG",
    "Instruction",
    "IRProgram",
    "OSLSemanticError",
    "OSLSyntaxError",
    "Program",
    "build_cfg",
    "lower_to_ir",
    "parse_files",
    "parse_program",
    "tokenize",
]
