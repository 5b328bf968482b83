"""Figure scripts for qbath simulation outputs.

These scripts only rearrange numbers that already exist in the input CSV/JSON
files; no physical quantity is ever recomputed here.
"""

__version__ = "0.1.0"

from .io import FigureInputError, read_eth_csv, read_overlap_csv, read_populations_csv
from .spec import FigureSpec
from .relaxation import plot_relaxation
from .eth_panels import plot_eth
