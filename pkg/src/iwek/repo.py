"""Durable storage for tuning experiences and transferred models.

Layout under the repository root:

    manifest.json            ids, fingerprints, and checksums
    experiences/<id>.iwek    one canonical document per experience
    models/<id>.iwek         blended models saved by the transfer flow

Writes go to a temp file first and are renamed into place, so a crash
mid-write leaves the previous state readable.  A repository-level file
lock serializes writers; readers never take the lock.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock

from iwek import serialize
from iwek.core import DataError, Experience, Fingerprint, FORMAT_VERSION
from iwek.transfer import TransferredEstimator

MANIFEST_NAME = "manifest.json"
EXPERIENCE_DIR = "experiences"
MODEL_DIR = "models"
LOCK_NAME = ".iwek.lock"


@dataclass(frozen=True)
class ExperienceRepository:
    """Handle to one repository directory."""

    root: Path

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def _lock(self) -> FileLock:
        return FileLock(str(self.root / LOCK_NAME))


def open_repository(root: str | Path) -> ExperienceRepository:
    """Open a repository, creating the directory layout if absent."""
    root = Path(root)
    repo = ExperienceRepository(root)
    if not repo.manifest_path.exists():
        root.mkdir(parents=True, exist_ok=True)
        (root / EXPERIENCE_DIR).mkdir(exist_ok=True)
        (root / MODEL_DIR).mkdir(exist_ok=True)
        _write_atomic(
            repo.manifest_path,
            serialize.canonical_json(
                {"format": FORMAT_VERSION, "experiences": {}, "models": {}}
            ),
        )
    return repo


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _read_manifest(repo: ExperienceRepository) -> dict:
    try:
        raw = repo.manifest_path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"not a repository: {repo.root}") from None
    try:
        manifest = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt manifest: {exc}") from exc
    if manifest.get("format") != FORMAT_VERSION:
        raise DataError(
            f"unsupported repository format {manifest.get('format')!r}"
        )
    return manifest


def _validate_experience(e: Experience) -> None:
    universe = {s.name for s in e.knob_universe}
    for rule in e.estimator.rules:
        for iv in rule.intervals:
            if iv.knob not in universe:
                raise DataError(
                    f"estimator rule mentions knob {iv.knob!r} outside the universe"
                )


def put(repo: ExperienceRepository, e: Experience, overwrite: bool = False) -> str:
    """Store an experience under its scenario id; returns the id."""
    _validate_experience(e)
    text = serialize.dumps(e)
    entry_id = e.scenario_id
    with repo._lock():
        manifest = _read_manifest(repo)
        entries = manifest.setdefault("experiences", {})
        if entry_id in entries and not overwrite:
            raise DataError(f"experience {entry_id!r} already stored")
        rel = f"{EXPERIENCE_DIR}/{entry_id}.iwek"
        _write_atomic(repo.root / rel, text)
        entries[entry_id] = {
            "file": rel,
            "checksum": serialize.checksum(text),
            "fingerprint": serialize.body_of(e.fingerprint),
        }
        _write_atomic(repo.manifest_path, serialize.canonical_json(manifest))
    return entry_id


def get(repo: ExperienceRepository, entry_id: str) -> Experience:
    """Load one experience, verifying its checksum and fingerprint."""
    manifest = _read_manifest(repo)
    entry = manifest.get("experiences", {}).get(entry_id)
    if entry is None:
        raise DataError(f"no experience {entry_id!r} in repository")
    text = (repo.root / entry["file"]).read_text(encoding="utf-8")
    if serialize.checksum(text) != entry["checksum"]:
        raise DataError(f"checksum mismatch for experience {entry_id!r}")
    e = serialize.loads(text)
    recorded = serialize.decode_body("fingerprint", entry["fingerprint"])
    if e.fingerprint != recorded:
        raise DataError(f"manifest fingerprint differs for experience {entry_id!r}")
    return e


def ids(repo: ExperienceRepository) -> tuple[str, ...]:
    """All stored experience ids, sorted."""
    manifest = _read_manifest(repo)
    return tuple(sorted(manifest.get("experiences", {})))


def scan_fingerprints(repo: ExperienceRepository) -> tuple[tuple[str, Fingerprint], ...]:
    """(id, fingerprint) pairs from the manifest alone, sorted by id."""
    manifest = _read_manifest(repo)
    out = []
    for entry_id in sorted(manifest.get("experiences", {})):
        body = manifest["experiences"][entry_id]["fingerprint"]
        out.append((entry_id, serialize.decode_body("fingerprint", body)))
    return tuple(out)


def load_all(repo: ExperienceRepository) -> tuple[Experience, ...]:
    """Every stored experience, in id order."""
    return tuple(get(repo, entry_id) for entry_id in ids(repo))


def put_model(repo: ExperienceRepository, model: TransferredEstimator) -> str:
    """Store a transferred model; its id derives from the content hash, so
    storing the same model twice is a no-op returning the same id."""
    text = serialize.dumps(model)
    digest = serialize.checksum(text)
    model_id = f"t-{digest[:12]}"
    with repo._lock():
        manifest = _read_manifest(repo)
        entries = manifest.setdefault("models", {})
        if model_id not in entries:
            rel = f"{MODEL_DIR}/{model_id}.iwek"
            _write_atomic(repo.root / rel, text)
            entries[model_id] = {"file": rel, "checksum": digest}
            _write_atomic(repo.manifest_path, serialize.canonical_json(manifest))
    return model_id


def get_model(repo: ExperienceRepository, model_id: str) -> TransferredEstimator:
    """Load one transferred model, verifying its checksum."""
    manifest = _read_manifest(repo)
    entry = manifest.get("models", {}).get(model_id)
    if entry is None:
        raise DataError(f"no model {model_id!r} in repository")
    text = (repo.root / entry["file"]).read_text(encoding="utf-8")
    if serialize.checksum(text) != entry["checksum"]:
        raise DataError(f"checksum mismatch for model {model_id!r}")
    return serialize.loads(text)


def model_ids(repo: ExperienceRepository) -> tuple[str, ...]:
    """All stored transferred-model ids, sorted."""
    manifest = _read_manifest(repo)
    return tuple(sorted(manifest.get("models", {})))
