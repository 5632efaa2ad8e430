"""Static security analysis of EVM bytecode.

Bytecode is lifted to a stackless SSA form, summarized as Datalog facts, and
checked against compliance/violation pattern pairs. :func:`analyze` runs the
whole pipeline on one contract.
"""

from .report import AnalysisError, AnalysisReport, AnalyzeOptions, analyze, render

__version__ = "0.1.0"

__all__ = ["AnalysisError", "AnalysisReport", "AnalyzeOptions", "analyze", "render", "__version__"]
