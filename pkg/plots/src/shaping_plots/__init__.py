"""Static figures from polarshaping sweep CSVs."""

from .figures import PlotJob, SchemaError, plot_fer, plot_lambda, read_csv_rows

__version__ = "0.1.0"
