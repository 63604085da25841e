"""Flat key = value experiment configuration and run artifacts.

The config format is deliberately plain: UTF-8 lines of `key = value`,
`#` comments, no nesting, so files diff cleanly and hash stably.  Every
run emits a manifest recording the config hash, tool version, timings,
and produced files; identical config hashes imply byte-identical CSV
outputs since all computation is deterministic given the config.
"""

import csv
import hashlib
import json
import os
import time

import numpy as np

from .errors import ConfigError

TOOL_VERSION = "1.0.0"

_INT_KEYS = {"n", "m", "seed", "samples", "order", "sweep_theta",
             "points_per_axis"}
_FLOAT_KEYS = {"t", "t_imag", "eps", "horizon", "xi", "x_norm", "z_norm",
               "cutoff", "refine", "tolerance", "rel_tol", "min_margin",
               "base_time"}
_LIST_FLOAT_KEYS = {"x", "z", "spacings", "eps_list", "s_list", "eta",
                    "origins"}
_LIST_INT_KEYS = {"counts"}
_STR_KEYS = {"output_dir", "input", "suite", "model"}

KNOWN_KEYS = (_INT_KEYS | _FLOAT_KEYS | _LIST_FLOAT_KEYS | _LIST_INT_KEYS
              | _STR_KEYS)

_TOLERANCE_KEYS = {"tolerance", "rel_tol", "min_margin", "refine"}


def _parse_value(key, raw):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _LIST_FLOAT_KEYS:
            return tuple(float(p) for p in raw.split(",") if p.strip())
        if key in _LIST_INT_KEYS:
            return tuple(int(p) for p in raw.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError("bad value for %s: %r" % (key, raw)) from exc
    return raw


class ExperimentConfig:
    """Parsed configuration with a stable content hash."""

    def __init__(self, values, text=""):
        self.values = dict(values)
        canonical = "\n".join(
            "%s = %s" % (k, self.values[k]) for k in sorted(self.values))
        self.hash = hashlib.sha256(canonical.encode()).hexdigest()
        self.text = text

    @classmethod
    def from_text(cls, text):
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError("line %d: expected key = value" % lineno)
            key, raw = stripped.split("=", 1)
            key = key.strip()
            if key not in KNOWN_KEYS:
                raise ConfigError("line %d: unknown key %r" % (lineno, key))
            value = _parse_value(key, raw)
            if key in _TOLERANCE_KEYS and value <= 0:
                raise ConfigError("line %d: %s must be positive" %
                                  (lineno, key))
            values[key] = value
        return cls(values, text)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require_seed(self):
        seed = self.values.get("seed")
        if seed is None:
            raise ConfigError("seed is mandatory for sampled experiments")
        return int(seed)


class RunManifest:
    """Record of one run: config hash, version, timings, files."""

    def __init__(self, config_hash):
        self.config_hash = config_hash
        self.version = TOOL_VERSION
        self.timings = {}
        self.files = []
        self._marks = {}

    def start(self, name):
        self._marks[name] = time.perf_counter()

    def stop(self, name):
        self.timings[name] = time.perf_counter() - self._marks.pop(name)

    def add_file(self, path):
        self.files.append(str(path))

    def write(self, path):
        payload = {
            "config_hash": self.config_hash,
            "version": self.version,
            "timings": self.timings,
            "files": self.files,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def resolve_output_dir(flag_value=None, default="carnot-heat-runs"):
    """Output directory: the environment override wins, then the flag."""
    env = os.environ.get("CARNOT_HEAT_OUT")
    if env:
        return env
    if flag_value:
        return flag_value
    return default


def format_sig(value):
    """Scientific notation with 17 significant digits, `.` decimal."""
    return "%.16e" % float(value)


def write_csv(path, header, rows):
    """RFC-4180 CSV: CRLF line endings, header row, 17-digit floats."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            out = []
            for v in row:
                if isinstance(v, bool) or isinstance(v, str):
                    out.append(str(v))
                elif isinstance(v, (int, np.integer)):
                    out.append(str(int(v)))
                elif isinstance(v, (float, np.floating)):
                    out.append(format_sig(v))
                else:
                    out.append(str(v))
            writer.writerow(out)
    return path
