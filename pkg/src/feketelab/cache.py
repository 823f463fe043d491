"""On-disk cache of solved configurations keyed by model and level.

Layout: one JSON file per configuration named ``{model}-k{k}.json`` under a
root taken from (in order) an explicit path, the ``FEKETE_LAB_CACHE``
environment variable, or ``~/.cache/fekete-lab``.  Writes are atomic so a
killed run never leaves a torn file behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import SchemaError
from .fekete import Configuration

ENV_VAR = "FEKETE_LAB_CACHE"


def default_cache_dir():
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "fekete-lab"


class CacheStore:
    """Load/store solved configurations under a cache directory."""

    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_cache_dir()

    def path_for(self, model, k):
        return self.root / f"{model}-k{int(k)}.json"

    def has(self, model, k):
        return self.path_for(model, k).is_file()

    def load(self, model, k):
        """Return the cached configuration, or None when absent.

        Malformed or inconsistent payloads raise
        :class:`~feketelab.errors.SchemaError` rather than being silently
        reused.
        """
        path = self.path_for(model, k)
        if not path.is_file():
            return None
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"unreadable cache file {path}: {exc}") from None
        config = Configuration.from_json(data)
        geom_name = config.space.geometry.name
        if geom_name != model or config.space.k != int(k):
            raise SchemaError(
                f"cache file {path} holds {geom_name} k={config.space.k}, "
                f"expected {model} k={k}"
            )
        return config

    def store(self, config):
        """Atomically write a configuration; returns the path."""
        geom = config.space.geometry
        path = self.path_for(geom.name, config.space.k)
        self.root.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(config.to_json(), indent=2, sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=str(self.root), suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload + "\n")
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
        return path

    def entries(self):
        """Sorted (model, k, path) triples for every cache file present."""
        if not self.root.is_dir():
            return []
        out = []
        for path in sorted(self.root.glob("*-k*.json")):
            stem = path.stem
            model, _, tail = stem.rpartition("-k")
            if not model or not tail.isdigit():
                continue
            out.append((model, int(tail), path))
        return out
