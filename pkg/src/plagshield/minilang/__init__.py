"""MiniLang frontend: parser, tokenizer, interpreter, renderer, generator."""

from .generator import GeneratorConfig, generate_program, generate_unit
from .interpreter import DEFAULT_STEP_BUDGET, interpret, run_trace
from .parser import parse_minilang
from .render import render_expr, render_unit
from .tokenizer import parse_program, tokenize, tokenize_units

__all__ = [
    "DEFAULT_STEP_BUDGET",
    "GeneratorConfig",
    "generate_program",
    "generate_unit",
    "interpret",
    "parse_minilang",
    "parse_program",
    "render_expr",
    "render_unit",
    "run_trace",
    "tokenize",
    "tokenize_units",
]
