"""
Report output

Reports are written to a temporary file in the target directory and moved
into place only once complete, so a failing command never leaves a partial
file behind. Without a path, reports go to stdout.

Usage:
    write_json(report.to_dict(), "report.json")
    write_csv(rows, None)   # stdout
"""

import csv
import io
import json
import os
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, TextIO

from kfbd.utils.exceptions import InputError
from kfbd.utils.logger import get_logger

logger = get_logger(__name__)


@contextmanager
def atomic_output(path: Optional[str | Path]) -> Iterator[TextIO]:
    """
    Text stream that becomes `path` on success (stdout when path is None)

    Usage:
        with atomic_output("out.json") as stream:
            stream.write(text)
    """
    if path is None:
        yield sys.stdout
        sys.stdout.flush()
        return

    target = Path(path)
    if not target.parent.exists():
        raise InputError(f"Output directory does not exist: {target.parent}")
    fd, temp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as stream:
            yield stream
        os.replace(temp_name, target)
        logger.debug(f"Wrote {target}")
    except BaseException as e:
        os.unlink(temp_name)
        logger.error(f"Discarded partial output for {target}: {e}")
        raise


def dumps_json(payload) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline"""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def dumps_csv(rows: Sequence[dict], columns: Optional[List[str]] = None) -> str:
    """CSV with a header; columns default to the keys of the first row"""
    if not rows:
        return ""
    columns = columns or list(rows[0].keys())
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _cell(row.get(key)) for key in columns})
    return buffer.getvalue()


def write_json(payload, path: Optional[str | Path] = None) -> None:
    text = dumps_json(payload)
    with atomic_output(path) as stream:
        stream.write(text)


def write_csv(rows: Sequence[dict], path: Optional[str | Path] = None, columns: Optional[List[str]] = None) -> None:
    text = dumps_csv(rows, columns)
    with atomic_output(path) as stream:
        stream.write(text)


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return value
