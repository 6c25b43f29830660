# Frontend package initialization
# Problem/structure parsing, printing, decision scripts and the command line

from .parser import Problem, load, parse, parse_problem, parse_structure
from .printer import emit_model, format_definition, format_problem
from .script import Script, load_script, parse_script

__all__ = ['Problem', 'load', 'parse', 'parse_problem', 'parse_structure', 'emit_model', 'format_definition',
           'format_problem', 'Script', 'load_script', 'parse_script']
