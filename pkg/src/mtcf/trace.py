"""Correlation traces and their CSV representation.

A trace file has ``#``-prefixed ``key=value`` metadata lines followed by a
header and one row per grid point::

    # mtcf_version=0.1.0
    # method=mc
    t,t_prime,re,im,stderr_re,stderr_im
    1,1,0.5,0,0.001,0.001

Floats are written with ``%.17g`` so values survive a round trip bit for bit.
Missing standard errors (deterministic methods) are written as ``0``.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

COLUMNS = ("t", "t_prime", "re", "im", "stderr_re", "stderr_im")


@dataclass
class CorrelationTrace:
    t: np.ndarray
    t_prime: np.ndarray
    values: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t_prime = np.asarray(self.t_prime, dtype=float)
        n = len(self.t_prime)
        self.t = np.broadcast_to(np.asarray(self.t, dtype=float), (n,)).copy()
        self.values = np.asarray(self.values, dtype=complex)
        self.stderr_re = np.broadcast_to(np.asarray(self.stderr_re, dtype=float), (n,)).copy()
        self.stderr_im = np.broadcast_to(np.asarray(self.stderr_im, dtype=float), (n,)).copy()
        if self.values.shape != (n,):
            raise ValueError("values must match the t_prime grid")

    @property
    def stderr(self) -> np.ndarray:
        return np.hypot(self.stderr_re, self.stderr_im)


def _fmt(x: float) -> str:
    return "%.17g" % x


def format_csv(trace: CorrelationTrace) -> str:
    lines = [f"# {k}={v}" for k, v in trace.metadata.items()]
    lines.append(",".join(COLUMNS))
    for row in zip(trace.t, trace.t_prime, trace.values.real, trace.values.imag,
                   trace.stderr_re, trace.stderr_im):
        lines.append(",".join(_fmt(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def write_csv(trace: CorrelationTrace, path) -> None:
    """Write atomically: a temp file in the target directory is renamed over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".mtcf-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(trace))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path) -> CorrelationTrace:
    meta = {}
    rows = []
    header = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif header is None:
                header = tuple(c.strip() for c in line.split(","))
                if header != COLUMNS:
                    raise ValueError(f"{path}:{lineno}: unexpected header {line!r}")
            else:
                parts = line.split(",")
                if len(parts) != len(COLUMNS):
                    raise ValueError(f"{path}:{lineno}: expected {len(COLUMNS)} columns")
                rows.append([float(p) for p in parts])
    if header is None:
        raise ValueError(f"{path}: no header row")
    a = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
    return CorrelationTrace(a[:, 0], a[:, 1], a[:, 2] + 1j * a[:, 3], a[:, 4], a[:, 5], meta)
