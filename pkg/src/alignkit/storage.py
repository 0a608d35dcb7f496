"""Report storage for ``--out`` paths."""

from __future__ import annotations

from pathlib import Path


class ArtifactStorage:
    """Writes rendered reports below ``root``; absolute paths bypass the root."""

    def __init__(self, root: Path | None = None) -> None:
        self.root = root or Path.cwd()

    def _path(self, target: str | Path) -> Path:
        path = self.root / Path(target)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def save_text(self, target: str | Path, content: str) -> str:
        path = self._path(target)
        # newline="" keeps the rendered bytes identical across platforms
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(content)
        return str(path)
