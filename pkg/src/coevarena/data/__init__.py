"""Shipped grammars, scenarios, and example configs."""

from importlib import resources
from pathlib import Path


def data_path(*parts: str) -> Path:
    """Absolute path to a shipped data file, e.g. data_path("grammars", "ddos_attack.bnf")."""
    return Path(str(resources.files(__package__).joinpath(*parts)))
