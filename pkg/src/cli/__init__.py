"""Command-line front end: problem files, traces and subcommands."""

from .commands import build_parser, configure_logging, main
from .problem_file import (
    load_certificate,
    load_gains,
    load_problem,
    load_solution_matrix,
    problem_from_dict,
    problem_to_dict,
    write_json,
    write_problem,
)
from .trace import read_trace, trace_frame, trajectory_frame, write_csv

__all__ = [
    'build_parser',
    'configure_logging',
    'load_certificate',
    'load_gains',
    'load_problem',
    'load_solution_matrix',
    'main',
    'problem_from_dict',
    'problem_to_dict',
    'read_trace',
    'trace_frame',
    'trajectory_frame',
    'write_csv',
    'write_json',
    'write_problem',
]
