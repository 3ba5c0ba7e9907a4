"""Dynamic fracture of a double cantilever beam on a breakable cohesive foundation."""

__version__ = "0.1.0"
