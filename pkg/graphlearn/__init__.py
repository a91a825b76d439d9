"""
Discriminative graph learning from smooth graph signals.

This package holds the library code reused by:
- the experiment driver in `scripts/`
- the test suites in `tests/`

Entry points (CLI scripts) live outside this package and import from `graphlearn`
rather than the other way around.
"""

__version__ = "0.1.0"
