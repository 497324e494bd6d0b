"""CSV output with a provenance header, written atomically."""
import csv
import io
import os
from typing import Iterable, Mapping, Optional, Sequence

from . import __version__


def header_lines(command: str, config: Mapping, extra: Optional[Sequence[str]] = None):
    lines = [f"robust-amp {__version__}", f"command: {command}"]
    for key in sorted(config):
        lines.append(f"config: {key} = {config[key]}")
    if "seed" in config:
        lines.append(f"seed: {config['seed']}")
    lines.extend(extra or ())
    return lines


def render_csv(rows: Iterable[Sequence], comments: Sequence[str] = (),
               trailer: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    tmp = os.path.join(directory, f".{os.path.basename(path)}.tmp{os.getpid()}")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path, rows, comments=(), trailer=()) -> None:
    atomic_write(path, render_csv(rows, comments, trailer))


def read_csv(path):
    """Return ``(comments, header, rows)`` of a file written by :func:`write_csv`."""
    comments, data = [], []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            else:
                data.append(line)
    rows = list(csv.reader(data))
    return comments, (rows[0] if rows else []), rows[1:]
