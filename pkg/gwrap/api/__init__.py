"""API package initialization.

This module builds the command-line parser and includes all route modules.
"""
import argparse


def build_parser() -> argparse.ArgumentParser:
    """Top-level parser with one subcommand per route."""
    # routes import the services, which import gwrap.api.models
    from .routes import ROUTES, common_parser

    parser = argparse.ArgumentParser(
        prog="gwrap",
        description="Oriented Gaussian fields, normal wrapping, surface extraction and mesh evaluation",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    parents = [common_parser()]
    for route in ROUTES:
        route.register(subparsers, parents)
    return parser
