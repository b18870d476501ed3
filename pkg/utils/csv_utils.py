"""
CSV writing helpers used by the harness, the attacker log and the receiver.

Floats are formatted with a fixed repr so reruns produce byte-identical files.
"""
import csv
import logging
from pathlib import Path

logger = logging.getLogger(__name__)


def format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return f'{value:.6f}'
    if value is None:
        return ''
    return str(value)


def write_rows(path, header, rows):
    """
    Write a CSV file with a header row.

    Args:
        path: Destination file; parent directories are created
        header: Column names
        rows: Iterable of sequences or dicts keyed by column name

    Returns:
        int: Number of data rows written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(column) for column in header]
            writer.writerow([format_value(value) for value in row])
            count += 1
    logger.debug(f"Wrote {count} rows to {path}")
    return count


def read_rows(path):
    """Read a CSV file written by write_rows into a list of dicts."""
    with Path(path).open(newline='') as handle:
        return list(csv.DictReader(handle))
