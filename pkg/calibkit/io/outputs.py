"""
Output directory handling for the Calibration Toolkit
Writes result files together with their metadata sidecars
"""

import logging
from pathlib import Path

from calibkit import TOOL_NAME, __version__
from calibkit.errors import DataError
from calibkit.io.jsonio import write_json
from calibkit.io.tables import write_table

logger = logging.getLogger(__name__)


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


class OutputWriter:
    """Writes CSV, JSON and text results into one directory, each with a <name>.meta.json sidecar

    Args:
        directory: Output directory (created if missing)
        manifest_sha256: Hash of the manifest that produced the run, if any
    """

    def __init__(self, directory, manifest_sha256=None):
        self.directory = Path(directory)
        self.manifest_sha256 = manifest_sha256
        self.written = []
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise DataError(f"cannot create output directory {self.directory}: {exc}") from exc

    def _sidecar(self, path, columns):
        meta = {
            "tool": TOOL_NAME,
            "version": __version__,
            "manifest_sha256": self.manifest_sha256,
            "file": path.name,
            "columns": list(columns),
        }
        write_json(meta, sidecar_path(path))

    def csv(self, name, frame):
        path = self.directory / name
        try:
            write_table(frame, path)
            self._sidecar(path, [str(column) for column in frame.columns])
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc}") from exc
        self.written.append(path)
        return path

    def json(self, name, data):
        path = self.directory / name
        try:
            write_json(data, path)
            self._sidecar(path, sorted(data) if isinstance(data, dict) else [])
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc}") from exc
        self.written.append(path)
        return path

    def text(self, name, content, columns=()):
        """Plain-text report (for example a formatted table)"""
        path = self.directory / name
        try:
            path.write_text(content.rstrip("\n") + "\n", encoding="utf-8")
            self._sidecar(path, [str(column) for column in columns])
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc}") from exc
        self.written.append(path)
        return path
