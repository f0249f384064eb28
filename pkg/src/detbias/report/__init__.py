from . import svg

__all__ = ["svg"]
