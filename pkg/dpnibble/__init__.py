"""
dpnibble: DP-coloring (correspondence coloring) by the wasteful nibble.

The package colors graphs from DP-covers with an iterated randomized coloring round, a
deterministic parameter schedule and a resampling finisher, and ships the tooling to check
each step: cover validation, K_{1,s,t}-freeness detection, per-round condition checks and a
Monte-Carlo harness for the expectations the round is designed around.

Modules:
- graph: simple graphs, instance generators, K_{1,s,t} subgraph detection.
- cover: DP-covers, partial colorings, properness and restriction.
- nibble: one coloring round, its retry loop and its statistics.
- schedule: the parameter recursion and the multi-round pipeline.
- finisher: greedy, resampling and brute-force completion.
- formats: text file formats and CSV reports.
- cli: the command-line front end.
"""

import logging
from typing import Optional

from .settings import Settings

__version__ = '0.1.0'


def configure_logging(settings: Optional[Settings] = None) -> logging.Logger:
    """
    Sets up logging for a dpnibble process from the given settings (defaults when omitted).
    Records go to the configured log file, or to stderr when none is configured, so that
    CSV and coloring outputs stay byte-reproducible.
    :param settings: Settings carrying log level, format and file.
    :return: The package logger.
    """
    settings = settings or Settings()
    level = getattr(logging, str(settings.log_level).upper(), logging.INFO)
    handler = logging.FileHandler(settings.log_file) if settings.log_file else logging.StreamHandler()
    handler.setFormatter(logging.Formatter(settings.log_format))
    logger = logging.getLogger(__name__)
    # Replace handlers so repeated calls (tests, several CLI invocations) do not duplicate output.
    for old in list(logger.handlers):
        logger.removeHandler(old)
        old.close()
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger
