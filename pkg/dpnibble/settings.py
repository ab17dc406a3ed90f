"""
Runtime configuration. Defaults come from ``instance/config.py``; a Python config file can
override any upper-case name. Override files are read by Flask's ``Config``, the loader the
web tooling uses for instance-folder ``config.py`` files.
"""

import os
from dataclasses import dataclass, fields, replace
from typing import Mapping, Optional

# Config is Flask's dict subclass that executes a Python file and keeps its upper-case names.
from flask import Config

from instance import config as defaults

from .error import MalformedInputError


@dataclass(frozen=True)
class Settings:
    """
    Immutable bundle of tunables. Field names are the lower-case form of the upper-case names
    in the config module.
    """
    max_attempts: int = defaults.MAX_ATTEMPTS
    regular_max_restarts: int = defaults.REGULAR_MAX_RESTARTS
    resample_factor: int = defaults.RESAMPLE_FACTOR
    schedule_max_iter: int = defaults.SCHEDULE_MAX_ITER
    brute_force_guard: int = defaults.BRUTE_FORCE_GUARD
    float_tolerance: float = defaults.FLOAT_TOLERANCE
    csv_significant_digits: int = defaults.CSV_SIGNIFICANT_DIGITS
    stats_chunk_trials: int = defaults.STATS_CHUNK_TRIALS
    log_level: str = defaults.LOG_LEVEL
    log_file: Optional[str] = defaults.LOG_FILE
    log_format: str = defaults.LOG_FORMAT

    @classmethod
    def from_pyfile(cls, filename: str, silent: bool = False) -> 'Settings':
        """
        Loads overrides from a Python file. Only upper-case names matching a field are used.
        :param filename: Path to the config file, relative to the working directory.
        :param silent: When True a missing file yields the defaults instead of an error.
        :return: Settings with the overrides applied.
        """
        # Relative names resolve against the working directory, absolute ones are kept as given.
        config = Config(os.getcwd())
        try:
            config.from_pyfile(filename, silent=silent)
        except OSError as e:
            raise MalformedInputError(f"config file {filename}: {e.strerror or e}")
        except SyntaxError as e:
            raise MalformedInputError(f"config file {filename} is not valid Python: {e.msg}", line=e.lineno)
        return cls().overlay(config)

    def overlay(self, values: Mapping[str, object]) -> 'Settings':
        """
        Returns a copy with the given upper-case overrides applied; unknown names are ignored.
        """
        known = {f.name for f in fields(self)}
        changes = {k.lower(): v for k, v in values.items() if k.lower() in known}
        return replace(self, **changes)
