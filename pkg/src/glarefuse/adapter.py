"""Run an external detector program on one image and parse its JSON output.

The program is called as ``<command...> <image_path>`` and must print a single
detection document (see :mod:`glarefuse.formats`) on standard output.
"""

from __future__ import annotations

import json
import os
import shlex
import subprocess
from pathlib import Path
from typing import Sequence, Union

from .formats import FormatError, detection_from_json
from .wbf import DetectionSet

DETECTOR_ENV = "GLAREFUSE_DETECTOR_CMD"
DEFAULT_TIMEOUT = 120.0


class AdapterError(RuntimeError):
    pass


class AdapterExitError(AdapterError):
    def __init__(self, returncode: int, stderr: str = ""):
        self.returncode = returncode
        self.stderr = stderr
        tail = stderr.strip().splitlines()[-1:] if stderr else []
        super().__init__(f"detector exited with code {returncode}" + (f": {tail[0]}" if tail else ""))


class AdapterTimeout(AdapterError):
    pass


class AdapterOutputError(AdapterError):
    pass


Command = Union[str, Sequence[str]]


def resolve_command(command: Command | None) -> list[str]:
    """Split ``command``; falls back to the GLAREFUSE_DETECTOR_CMD environment variable."""
    if command is None or command == "":
        command = os.environ.get(DETECTOR_ENV)
        if not command:
            raise AdapterError(f"no detector command given and {DETECTOR_ENV} is unset")
    if isinstance(command, str):
        return shlex.split(command)
    return list(command)


def detector_adapter(
    command: Command | None,
    image_path: Union[str, Path],
    timeout: float = DEFAULT_TIMEOUT,
) -> DetectionSet:
    argv = resolve_command(command) + [str(image_path)]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise AdapterTimeout(f"detector timed out after {timeout:g}s on {image_path}") from exc
    except OSError as exc:
        raise AdapterError(f"could not start detector {argv[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        raise AdapterExitError(proc.returncode, proc.stderr)
    try:
        doc = json.loads(proc.stdout)
        return detection_from_json(doc)
    except (json.JSONDecodeError, FormatError) as exc:
        raise AdapterOutputError(f"malformed detector output for {image_path}: {exc}") from exc
