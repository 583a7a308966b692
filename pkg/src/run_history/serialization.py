"""JSONL persistence of run histories.

The first line is a header ``{"version": 1, "space_digest": ..., "budgets": [...]}``;
every following line is one TrialRecord in completion order.
"""

import json
import logging
from pathlib import Path
from typing import IO, Literal

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from src.design_space import Configuration, DesignSpace
from src.run_history.history import RunHistory
from src.run_history.models import TrialRecord, TrialStatus

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class SchemaViolationError(ValueError):
    """A history line does not match the JSONL schema."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SpaceDigestMismatchError(ValueError):
    pass


# ---------- Line schemas ----------


class HeaderLine(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: Literal[1]
    space_digest: str
    budgets: list[float]


class RecordLine(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config_id: int
    bracket: int
    budget: float
    config: dict[str, str | int | float | None]
    active: dict[str, bool]
    loss: float | None
    status: Literal["ok", "failed"]
    duration: float
    submitted: float
    finished: float
    seed: int

    @model_validator(mode="after")
    def _loss_matches_status(self):
        if self.status == "ok" and self.loss is None:
            raise ValueError("status 'ok' requires a loss")
        return self


# ---------- Encoding ----------


def header_to_json(history: RunHistory) -> str:
    header = {
        "version": FORMAT_VERSION,
        "space_digest": history.space_digest,
        "budgets": history.budget_set,
    }
    return json.dumps(header)


def record_to_json(record: TrialRecord) -> str:
    line = {
        "config_id": record.config_id,
        "bracket": record.bracket_id,
        "budget": record.budget,
        "config": dict(record.config.values),
        "active": dict(record.config.active),
        "loss": record.loss if record.ok else None,
        "status": record.status.value,
        "duration": record.duration,
        "submitted": record.submitted_at,
        "finished": record.finished_at,
        "seed": record.seed,
    }
    return json.dumps(line)


def serialize(history: RunHistory, stream: IO[str]) -> None:
    """Write ``history`` as JSONL to an open text stream."""
    stream.write(header_to_json(history) + "\n")
    for record in history.records:
        stream.write(record_to_json(record) + "\n")


def save_history(history: RunHistory, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        serialize(history, f)


class HistoryWriter:
    """Stream records to a JSONL file as they are appended to a history.

    The header is written on construction; each record is flushed on its own
    so an interrupted run leaves a valid, truncated file.
    """

    def __init__(self, history: RunHistory, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", encoding="utf-8")
        self._file.write(header_to_json(history) + "\n")
        for record in history.records:
            self._file.write(record_to_json(record) + "\n")
        self._file.flush()
        history.add_listener(self)

    def __call__(self, record: TrialRecord) -> None:
        self._file.write(record_to_json(record) + "\n")
        self._file.flush()

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# ---------- Decoding ----------


def _format_errors(e: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
    )


def deserialize(stream: IO[str], space: DesignSpace) -> RunHistory:
    """
    Read a JSONL history written by :func:`serialize`.

    Parameters
    ----------
    stream : text stream
        One JSON object per line; blank lines are ignored.
    space : DesignSpace
        The space the history was recorded in; its digest must match the header.

    Raises
    ------
    SchemaViolationError
        With the 1-based line number of the first malformed line.
    SpaceDigestMismatchError
        If the header digest differs from ``space.digest``.
    """
    history: RunHistory | None = None

    for line_no, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as e:
            raise SchemaViolationError(line_no, f"invalid JSON ({e.msg})") from e

        if history is None:
            try:
                header = HeaderLine.model_validate(data)
            except ValidationError as e:
                raise SchemaViolationError(line_no, _format_errors(e)) from e
            if header.space_digest != space.digest:
                raise SpaceDigestMismatchError(
                    f"history was recorded for space {header.space_digest[:12]}..., "
                    f"not {space.digest[:12]}..."
                )
            history = RunHistory(space, header.budgets)
            continue

        try:
            line = RecordLine.model_validate(data)
        except ValidationError as e:
            raise SchemaViolationError(line_no, _format_errors(e)) from e

        record = TrialRecord(
            config_id=line.config_id,
            bracket_id=line.bracket,
            budget=line.budget,
            config=Configuration(values=dict(line.config), active=dict(line.active)),
            loss=line.loss if line.status == "ok" else None,
            status=TrialStatus(line.status),
            duration=line.duration,
            submitted_at=line.submitted,
            finished_at=line.finished,
            seed=line.seed,
        )
        try:
            history.append(record)
        except ValueError as e:
            raise SchemaViolationError(line_no, str(e)) from e

    if history is None:
        raise SchemaViolationError(1, "missing header line")
    logger.debug(f"Loaded {len(history)} record(s)")
    return history


def load_history(path: str | Path, space: DesignSpace) -> RunHistory:
    with open(path, encoding="utf-8") as f:
        return deserialize(f, space)
