"""dflplots: renders the comparison figures from dflsim metrics CSVs.

Strictly a consumer of the simulator's CSV surfaces; nothing here feeds
back into experiments.
"""

__version__ = "0.1.0"

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render
