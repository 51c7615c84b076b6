"""Client side of the external-process line protocol.

External generators and synthesizers run as child processes speaking
one JSON object per line over stdin/stdout. The client stays deliberately
dumb: it ships dicts out and lines back in; protocol semantics live with
the callers.
"""

from __future__ import annotations

import json
import subprocess
from collections.abc import Sequence


class AdapterSpawnError(Exception):
    """The adapter command could not be started."""


class ProtocolError(Exception):
    """The adapter sent something the protocol does not allow."""


class ExternalProcessClient:
    def __init__(self, command: Sequence[str]):
        if not command:
            raise AdapterSpawnError("empty adapter command")
        self.command = list(command)
        self._proc: subprocess.Popen | None = None

    def spawn(self) -> "ExternalProcessClient":
        if self._proc is not None:
            return self
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise AdapterSpawnError(f"cannot start {self.command[0]!r}: {exc}") from exc
        return self

    def send(self, obj: dict) -> None:
        if self._proc is None or self._proc.stdin is None:
            raise ProtocolError("adapter not running")
        try:
            self._proc.stdin.write(json.dumps(obj, ensure_ascii=False) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProtocolError(f"adapter closed its input: {exc}") from exc

    def recv_line(self) -> str | None:
        """Next stdout line without the newline, or None on EOF."""
        if self._proc is None or self._proc.stdout is None:
            raise ProtocolError("adapter not running")
        line = self._proc.stdout.readline()
        if line == "":
            return None
        return line.rstrip("\n")

    def close(self) -> None:
        if self._proc is None:
            return
        proc, self._proc = self._proc, None
        if proc.stdin is not None:
            try:
                proc.stdin.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "ExternalProcessClient":
        return self.spawn()

    def __exit__(self, *exc_info) -> None:
        self.close()
