"""
Counting-process CSV and report files, written atomically
"""
from pathlib import Path
from typing import Iterable, List, Optional, Sequence
import contextlib
import csv
import logging
import os
import tempfile

from ..domain.entities import CountingProcessRecord


logger = logging.getLogger(__name__)

BASE_COLUMNS = ["subject_id", "event_number", "start", "stop", "status"]


def write_atomically(path: Path, text: str):
    """Write to a temp file next to `path`, then rename over it."""
    path = Path(path)
    fd, temp_name = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temp_name, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(temp_name)
        raise


def _number(value: float) -> str:
    # shortest round-trip decimal
    return repr(float(value))


def _subject_columns(record: CountingProcessRecord, emit_frailty: bool) -> str:
    """Covariate and frailty cells, constant across a subject's rows."""
    cells = [_number(x) for x in record.covariates]
    if emit_frailty:
        cells.append(_number(record.frailty) if record.frailty is not None else "")
    return "".join(f",{cell}" for cell in cells)


def render_dataset(
    records: Sequence[CountingProcessRecord],
    n_covariates: int,
    emit_frailty: bool = False
) -> str:
    header = BASE_COLUMNS + [f"x{k}" for k in range(1, n_covariates + 1)]
    if emit_frailty:
        header.append("frailty")

    # numeric cells only; nothing to quote
    lines = [",".join(header)]
    subject_id, tail = None, ""
    for record in records:
        if record.subject_id != subject_id:
            subject_id = record.subject_id
            tail = _subject_columns(record, emit_frailty)
        lines.append(
            f"{record.subject_id},{record.event_number},{_number(record.start)},"
            f"{_number(record.stop)},{record.status}{tail}"
        )
    lines.append("")
    return "\n".join(lines)


def write_dataset(
    path: Path,
    records: Sequence[CountingProcessRecord],
    n_covariates: int,
    emit_frailty: bool = False
):
    write_atomically(path, render_dataset(records, n_covariates, emit_frailty))
    logger.info(f"Wrote {len(records)} rows to {path}")


def read_dataset(path: Path) -> List[CountingProcessRecord]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        columns = reader.fieldnames or []
        covariate_columns = [c for c in columns if c.startswith("x")]
        has_frailty = "frailty" in columns
        records = []
        for row in reader:
            frailty: Optional[float] = None
            if has_frailty and row["frailty"]:
                frailty = float(row["frailty"])
            records.append(CountingProcessRecord(
                subject_id=int(row["subject_id"]),
                event_number=int(row["event_number"]),
                start=float(row["start"]),
                stop=float(row["stop"]),
                status=int(row["status"]),
                covariates=tuple(float(row[c]) for c in covariate_columns),
                frailty=frailty,
            ))
    return records


def write_summary(path: Path, lines: Iterable[str]):
    write_atomically(path, "".join(f"{line}\n" for line in lines))
    logger.info(f"Wrote report summary to {path}")
