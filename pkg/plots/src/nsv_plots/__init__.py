"""Static diagnostic figures for nsv simulation artifacts."""

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, plot

__version__ = "0.1.0"
