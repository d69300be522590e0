"""Canonical JSON serialization for every persisted type.

Documents carry a ``format`` tag at the root and a ``type`` tag naming
the payload.  Serialization is byte-stable: keys are sorted, floats use
the shortest round-tripping representation, and no whitespace varies, so
checksums and bit-identical round trips are meaningful.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Callable

from iwek.core import (
    FORMAT_VERSION,
    DataError,
    Experience,
    Fingerprint,
    KnobConfig,
    KnobRanking,
    KnobSpec,
    KPDataset,
    QueryLog,
    Scenario,
)

_TO_BODY: dict[type, tuple[str, Callable[[Any], dict]]] = {}
_FROM_BODY: dict[str, Callable[[dict], Any]] = {}


def register(type_tag: str, cls: type, to_body, from_body) -> None:
    """Register one type's body encoder and decoder under a document tag."""
    _TO_BODY[cls] = (type_tag, to_body)
    _FROM_BODY[type_tag] = from_body


def body_of(obj: Any) -> dict:
    """Encode an object to its tagless body, as used for nested values."""
    entry = _TO_BODY.get(type(obj))
    if entry is None:
        raise DataError(f"no serializer registered for {type(obj).__name__}")
    _, to_body = entry
    return to_body(obj)


def to_doc(obj: Any) -> dict:
    """Encode an object as a complete document with format and type tags."""
    entry = _TO_BODY.get(type(obj))
    if entry is None:
        raise DataError(f"no serializer registered for {type(obj).__name__}")
    type_tag, to_body = entry
    doc = {"format": FORMAT_VERSION, "type": type_tag}
    doc.update(to_body(obj))
    return doc


def from_doc(doc: Any) -> Any:
    """Decode a complete document back to its object."""
    if not isinstance(doc, dict):
        raise DataError("document must be a JSON object")
    if doc.get("format") != FORMAT_VERSION:
        raise DataError(
            f"unsupported format {doc.get('format')!r}, expected {FORMAT_VERSION!r}"
        )
    type_tag = doc.get("type")
    decoder = _FROM_BODY.get(type_tag)
    if decoder is None:
        _import_serializer_modules()
        decoder = _FROM_BODY.get(type_tag)
    if decoder is None:
        raise DataError(f"unknown document type {type_tag!r}")
    return decoder(doc)


def decode_body(type_tag: str, body: dict) -> Any:
    """Decode a tagless nested body of a known type."""
    decoder = _FROM_BODY.get(type_tag)
    if decoder is None:
        _import_serializer_modules()
        decoder = _FROM_BODY.get(type_tag)
    if decoder is None:
        raise DataError(f"unknown document type {type_tag!r}")
    return decoder(body)


def dumps(obj: Any) -> str:
    """Serialize an object to its canonical JSON text."""
    return canonical_json(to_doc(obj))


def loads(text: str | bytes) -> Any:
    """Parse canonical JSON text back to an object."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON document: {exc}") from exc
    return from_doc(doc)


def canonical_json(doc: Any) -> str:
    """Render a JSON value with sorted keys and no cosmetic whitespace."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def checksum(text: str | bytes) -> str:
    """SHA-256 hex digest of serialized content."""
    data = text.encode("utf-8") if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


def _import_serializer_modules() -> None:
    # Modules register their serializers at import time; pull them in
    # lazily so decoding works regardless of what the caller imported.
    import iwek.estimator  # noqa: F401
    import iwek.sim  # noqa: F401
    import iwek.transfer  # noqa: F401


def _field(body: dict, name: str):
    if name not in body:
        raise DataError(f"document missing field {name!r}")
    return body[name]


# ---------------------------------------------------------------------------
# Core type bodies.

register(
    "knob_spec",
    KnobSpec,
    lambda s: {
        "name": s.name,
        "kind": s.kind,
        "range": list(s.range),
        "default": s.default,
        "levels": list(s.levels),
    },
    lambda b: KnobSpec(
        name=_field(b, "name"),
        kind=_field(b, "kind"),
        range=tuple(_field(b, "range")),
        default=_field(b, "default"),
        levels=tuple(b.get("levels", ())),
    ),
)

register(
    "knob_config",
    KnobConfig,
    lambda c: {"assignments": c.as_dict()},
    lambda b: KnobConfig.from_mapping(_field(b, "assignments")),
)

register(
    "kp_dataset",
    KPDataset,
    lambda d: {
        "X": [x.as_dict() for x in d.X],
        "y": list(d.y),
        "scenario_id": d.scenario_id,
        "knobs": [body_of(s) for s in d.knobs],
    },
    lambda b: KPDataset(
        X=tuple(KnobConfig.from_mapping(x) for x in _field(b, "X")),
        y=tuple(_field(b, "y")),
        scenario_id=_field(b, "scenario_id"),
        knobs=tuple(decode_body("knob_spec", s) for s in b.get("knobs", ())),
    ),
)

register(
    "scenario",
    Scenario,
    lambda s: {
        "id": s.id,
        "data_scale": s.data_scale,
        "txn_mix": [[name, ratio] for name, ratio in s.txn_mix],
        "env_tag": s.env_tag,
    },
    lambda b: Scenario(
        id=_field(b, "id"),
        data_scale=_field(b, "data_scale"),
        txn_mix=tuple((name, ratio) for name, ratio in _field(b, "txn_mix")),
        env_tag=b.get("env_tag", ""),
    ),
)

register(
    "fingerprint",
    Fingerprint,
    lambda f: {"suid": list(f.suid), "ops": list(f.ops)},
    lambda b: Fingerprint(
        suid=tuple(_field(b, "suid")), ops=tuple(_field(b, "ops"))
    ),
)

register(
    "query_log",
    QueryLog,
    lambda q: {"suid_counts": list(q.suid_counts), "op_counts": list(q.op_counts)},
    lambda b: QueryLog(
        suid_counts=tuple(_field(b, "suid_counts")),
        op_counts=tuple(_field(b, "op_counts")),
    ),
)

register(
    "knob_ranking",
    KnobRanking,
    lambda r: {"weights": [[name, score] for name, score in r.weights]},
    lambda b: KnobRanking(
        weights=tuple((name, score) for name, score in _field(b, "weights"))
    ),
)


def _experience_body(e: Experience) -> dict:
    return {
        "scenario_id": e.scenario_id,
        "fingerprint": body_of(e.fingerprint),
        "ranking": body_of(e.ranking),
        "estimator": body_of(e.estimator),
        "knob_universe": [body_of(s) for s in e.knob_universe],
    }


def _experience_from_body(b: dict) -> Experience:
    return Experience(
        fingerprint=decode_body("fingerprint", _field(b, "fingerprint")),
        ranking=decode_body("knob_ranking", _field(b, "ranking")),
        estimator=decode_body("interpretable_estimator", _field(b, "estimator")),
        knob_universe=tuple(
            decode_body("knob_spec", s) for s in _field(b, "knob_universe")
        ),
        scenario_id=_field(b, "scenario_id"),
    )


register("experience", Experience, _experience_body, _experience_from_body)
