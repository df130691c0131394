"""Services package.

Each subpackage owns one concern of the oriented-Gaussian pipeline:
core types, geometric fields, per-ray rendering, orientation wrapping,
surface extraction, evaluation protocols, and file formats.
"""
