"""CLI routes package.

Each module registers its subcommands on the shared subparser set.
"""
from . import evaluate, fields, fixture, mesh, render, wrap
from .common import common_parser

ROUTES = [fixture, render, fields, wrap, mesh, evaluate]

__all__ = ["ROUTES", "common_parser"]
