"""HTTP facade over estimation, transfer, and the experience repository.

Every endpoint delegates to the library and returns exactly what the
corresponding call produced; the only state-changing route is POST
/v1/transfer, which stores the new model in the repository.  Request and
response bodies use the same canonical field layout as the on-disk
documents.  Errors are reported as ``{code, message}``.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from iwek import repo as store
from iwek import serialize
from iwek.core import (
    DataError,
    KnobConfig,
    complete_config,
    validate_config,
)
from iwek.estimator import explain_payload, rule_thresholds
from iwek.transfer import (
    TransferredEstimator,
    blend_experiences,
    fingerprint_from_log,
    match_experiences,
    reshape_config,
    transfer_estimator,
)

MAX_REQUEST_BYTES = 1_048_576  # 1 MB cap on request bodies


class ApiError(Exception):
    """An error with a fixed HTTP status, rendered as {code, message}."""

    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


class EstimateRequest(BaseModel):
    model: str
    config: dict


class CompareRequest(BaseModel):
    model: str
    config_a: dict
    config_b: dict


class TransferRequest(BaseModel):
    K: int = 3
    N: int = 10
    seed: int = 0
    log: dict | None = None
    fingerprint: dict | None = None
    labels: dict | None = None
    sim_scenario: str | None = None
    sim_seed: int = 0


class _ModelStore:
    """Repository-backed model lookup with an immutable-entry cache."""

    def __init__(self, root: str | Path):
        self.repo = store.open_repository(root)
        self._cache: dict[str, tuple[str, object]] = {}
        self._lock = threading.Lock()

    def resolve(self, model_id: str) -> tuple[str, object]:
        with self._lock:
            hit = self._cache.get(model_id)
        if hit is not None:
            return hit
        if model_id in store.ids(self.repo):
            entry = ("ike", store.get(self.repo, model_id).estimator)
        elif model_id in store.model_ids(self.repo):
            entry = ("transferred", store.get_model(self.repo, model_id))
        else:
            raise ApiError(404, f"unknown model {model_id!r}")
        with self._lock:
            self._cache[model_id] = entry
        return entry

    def remember(self, model_id: str, model: TransferredEstimator) -> None:
        with self._lock:
            self._cache[model_id] = ("transferred", model)


def _decode_config(body: dict) -> KnobConfig:
    try:
        return serialize.decode_body("knob_config", body)
    except (DataError, TypeError, ValueError) as exc:
        raise ApiError(422, f"malformed configuration: {exc}")


def _checked_config(body: dict, specs) -> KnobConfig:
    x = _decode_config(body)
    known = {s.name for s in specs}
    unknown = sorted(set(x.names) - known)
    if unknown:
        raise ApiError(422, f"unknown knobs: {', '.join(unknown)}")
    violations = validate_config(x, specs)
    if violations:
        raise ApiError(
            422, "; ".join(f"{v.knob}: {v.reason}" for v in violations)
        )
    return x


def _specs_of(kind: str, model) -> tuple:
    return model.knobs if kind == "ike" else model.target_knobs


def _explanations(kind: str, model, x: KnobConfig) -> list[dict]:
    if kind == "ike":
        return explain_payload(model, x)
    entries = []
    for member, weight in zip(model.members, model.weights):
        if weight == 0.0:
            continue
        reshaped = reshape_config(x, member.knob_universe)
        if reshaped is None:
            continue
        for record in explain_payload(member.estimator, reshaped):
            entries.append(
                {**record, "weight": weight * record["weight"], "member": member.scenario_id}
            )
    entries.sort(
        key=lambda r: (-abs(r["weight"]), r["member"], r["tree"], r["leaf"])
    )
    return entries


def create_app(repo_root: str | Path) -> FastAPI:
    """Build the service bound to one experience repository."""
    models = _ModelStore(repo_root)
    app = FastAPI(title="iwek", docs_url=None, redoc_url=None)

    def _error(status: int, message: str) -> JSONResponse:
        return JSONResponse(
            status_code=status, content={"code": status, "message": message}
        )

    @app.exception_handler(ApiError)
    async def _on_api_error(request: Request, exc: ApiError):
        return _error(exc.status, str(exc))

    @app.exception_handler(DataError)
    async def _on_data_error(request: Request, exc: DataError):
        return _error(422, str(exc))

    @app.exception_handler(StarletteHTTPException)
    async def _on_http_error(request: Request, exc: StarletteHTTPException):
        return _error(exc.status_code, str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def _on_validation_error(request: Request, exc: RequestValidationError):
        return _error(422, "invalid request body")

    @app.middleware("http")
    async def _cap_request_size(request: Request, call_next):
        declared = request.headers.get("content-length")
        if declared and declared.isdigit() and int(declared) > MAX_REQUEST_BYTES:
            return _error(413, "request body exceeds 1 MB")
        return await call_next(request)

    @app.post("/v1/estimate")
    def estimate(req: EstimateRequest):
        kind, model = models.resolve(req.model)
        x = _checked_config(req.config, _specs_of(kind, model))
        return {
            "prediction": model.predict(x),
            "explanations": _explanations(kind, model, x),
        }

    @app.post("/v1/compare")
    def compare(req: CompareRequest):
        kind, model = models.resolve(req.model)
        specs = _specs_of(kind, model)
        pa = model.predict(_checked_config(req.config_a, specs))
        pb = model.predict(_checked_config(req.config_b, specs))
        better = "tie" if pa == pb else ("a" if pa > pb else "b")
        return {"better": better, "predictions": {"a": pa, "b": pb}}

    @app.get("/v1/experiences")
    def experiences():
        listing = []
        for entry_id in store.ids(models.repo):
            e = store.get(models.repo, entry_id)
            listing.append(
                {
                    "id": entry_id,
                    "fingerprint": serialize.body_of(e.fingerprint),
                    "knobs": [serialize.body_of(s) for s in e.knob_universe],
                    "rule_count": len(e.estimator.rules),
                }
            )
        return {"experiences": listing, "models": list(store.model_ids(models.repo))}

    @app.get("/v1/knob-profile")
    def knob_profile(model: str, knob: str):
        kind, m = models.resolve(model)
        specs = _specs_of(kind, m)
        spec = next((s for s in specs if s.name == knob), None)
        if spec is None:
            raise ApiError(422, f"unknown knob {knob!r}")
        lo, hi = (float(spec.range[0]), float(spec.range[1]))
        if kind == "ike":
            thresholds = rule_thresholds(m, knob)
        else:
            pooled: set[float] = set()
            for member, weight in zip(m.members, m.weights):
                if weight > 0.0 and knob in {s.name for s in member.knob_universe}:
                    pooled.update(rule_thresholds(member.estimator, knob))
            thresholds = tuple(sorted(pooled))
        breakpoints = [t for t in thresholds if lo < t < hi]
        edges = [lo, *breakpoints, hi]
        base = complete_config(KnobConfig(()), specs)
        values = [
            m.predict(base.with_value(knob, (a + b) / 2.0))
            for a, b in zip(edges, edges[1:])
        ]
        return {
            "model": model,
            "knob": knob,
            "lo": lo,
            "hi": hi,
            "breakpoints": breakpoints,
            "values": values,
        }

    @app.post("/v1/transfer")
    def transfer(req: TransferRequest):
        experiences = store.load_all(models.repo)
        if (req.log is None) == (req.fingerprint is None):
            raise ApiError(422, "pass exactly one of log or fingerprint")
        if req.log is not None:
            f = fingerprint_from_log(serialize.decode_body("query_log", req.log))
        else:
            f = serialize.decode_body("fingerprint", req.fingerprint)

        if (req.labels is None) == (req.sim_scenario is None):
            raise ApiError(422, "pass exactly one of labels or sim_scenario")
        if req.sim_scenario is not None:
            from iwek.sim import make_scenario_suite, oracle_perf

            s = make_scenario_suite(seed=req.sim_seed).get(req.sim_scenario)
            model = transfer_estimator(
                experiences,
                f,
                lambda configs: [oracle_perf(s, x, noisy=True) for x in configs],
                target_specs=s.knobs,
                K=req.K,
                N=req.N,
                seed=req.seed,
            )
        else:
            D = serialize.decode_body("kp_dataset", req.labels)
            if not D.knobs:
                raise ApiError(422, "labels dataset must embed its knob universe")
            match = match_experiences(experiences, f, K=req.K)
            model = blend_experiences(match, D, D.knobs)

        model_id = store.put_model(models.repo, model)
        models.remember(model_id, model)
        return {"model_id": model_id}

    return app
