"""State-file persistence.

The state document is replaced atomically (write temp file, fsync, rename).
The transaction log is an append-only JSON-lines file next to it.  Log lines
are appended before the state is replaced; on load, log lines beyond the
state's sequence number belong to a write that never committed and are
dropped.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from pathlib import Path

from filelock import FileLock, Timeout

from .errors import StateConflict, StorageError
from .ledger import Ledger, LedgerState


class StateLocked(StateConflict):
    code = "STATE_LOCKED"


def log_path(state_path) -> Path:
    return Path(str(state_path) + ".log")


@contextmanager
def locked(state_path, timeout: float = 10.0):
    lock = FileLock(str(state_path) + ".lock")
    try:
        with lock.acquire(timeout=timeout):
            yield
    except Timeout:
        raise StateLocked(f"state file {state_path} is locked by another process") from None


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def read_log(state_path) -> list[dict]:
    path = log_path(state_path)
    try:
        with open(path) as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except FileNotFoundError:
        raise StorageError(f"transaction log {path} not found") from None
    except (OSError, ValueError) as exc:
        raise StorageError(f"cannot read transaction log {path}: {exc}") from exc


def load_ledger(state_path) -> Ledger:
    path = Path(state_path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise StorageError(f"state file {path} not found (run init-ledger first)") from None
    except (OSError, ValueError) as exc:
        raise StorageError(f"cannot read state file {path}: {exc}") from exc
    state = LedgerState.from_dict(doc)
    log = read_log(path)
    committed = log[: state.seq + 1]
    if len(committed) != state.seq + 1:
        raise StorageError(f"transaction log shorter than state sequence {state.seq}")
    return Ledger(state, log=committed)


def create_ledger_files(state_path, ledger: Ledger) -> None:
    path = Path(state_path)
    if path.exists():
        raise StateConflict(f"state file {path} already exists")
    with open(log_path(path), "w") as fh:
        for rec in ledger.log:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    _atomic_write(path, json.dumps(ledger.state.to_dict(), indent=1, sort_keys=True) + "\n")


def commit(state_path, ledger: Ledger, records: list[dict]) -> None:
    """Persist newly applied transactions: append log lines, then swap the state."""
    path = Path(state_path)
    lines = log_path(path)
    existing = read_log(path)
    committed = ledger.state.seq - len(records) + 1
    if len(existing) > committed:
        # drop uncommitted tail left by an interrupted earlier write
        _atomic_write(lines, "".join(json.dumps(r, sort_keys=True) + "\n" for r in existing[:committed]))
    with open(lines, "a") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        fh.flush()
        os.fsync(fh.fileno())
    _atomic_write(path, json.dumps(ledger.state.to_dict(), indent=1, sort_keys=True) + "\n")


def state_digest_on_disk(state_path) -> str:
    return load_ledger(state_path).state.digest()
