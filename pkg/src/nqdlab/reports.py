"""CSV reports with an embedded, re-parseable configuration header.

Every report starts with ``# `` comment lines: the package version, then the
fully resolved configuration in the config-file grammar.  Floats are written
with 17 significant digits so reruns compare byte for byte.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__

FLOAT_FORMAT = ".17g"


def fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, FLOAT_FORMAT)
    if hasattr(v, "dtype"):  # numpy scalar
        return fmt_value(v.item())
    return str(v)


def render_csv(header: Sequence[str], rows: Iterable[Sequence], config_ini: str | None = None,
               comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(f"# artifact {__version__}\n")
    for line in comments:
        buf.write(f"# {line}\n")
    if config_ini is not None:
        buf.write("# config\n")
        for line in config_ini.splitlines():
            buf.write(f"# {line}\n" if line else "#\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_value(v) for v in row])
    return buf.getvalue()


def atomic_write(path: str | os.PathLike, text: str) -> Path:
    """Write via a temporary file in the target directory and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def write_csv(path, header, rows, config_ini=None, comments=()) -> Path:
    return atomic_write(path, render_csv(header, rows, config_ini, comments))


def read_report(path_or_text) -> tuple[str, list[str], list[list[str]]]:
    """Split a report into ``(config_ini, header, rows)``."""
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text()
    cfg_lines, body, in_cfg = [], [], False
    for line in text.splitlines():
        if line.startswith("#"):
            content = line[2:] if line.startswith("# ") else line[1:]
            if content == "config":
                in_cfg = True
            elif in_cfg:
                cfg_lines.append(content)
            continue
        body.append(line)
    rows = list(csv.reader(body))
    header, data = (rows[0], rows[1:]) if rows else ([], [])
    return "\n".join(cfg_lines) + ("\n" if cfg_lines else ""), header, data


__all__ = ["FLOAT_FORMAT", "atomic_write", "fmt_value", "read_report", "render_csv", "write_csv"]
