"""Code-as-plan prompting for household task planning in a symbolic simulator."""

__version__ = "0.1.0"
