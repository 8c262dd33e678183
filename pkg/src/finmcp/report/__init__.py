"""Aggregation of evaluation results into tables, charts and a summary."""

from finmcp.report.aggregate import AggregateRow, Joined, aggregate, join, summarize
from finmcp.report.emit import Table, build_summary, build_tables, emit_report

__all__ = ["AggregateRow", "Joined", "Table", "aggregate", "build_summary", "build_tables",
           "emit_report", "join", "summarize"]
