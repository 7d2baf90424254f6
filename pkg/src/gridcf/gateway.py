"""HTTP gateway for the operator console.

Read-only artifacts (one case, one or more trained models) are loaded at
startup; every computation endpoint is a pure function of its request
plus an echoed seed, so any response can be reproduced offline through
the CLI.  Requests append to an in-memory ring buffer, optionally
mirrored to a JSONL file.
"""

from __future__ import annotations

import hashlib
import json
import secrets
import threading
from collections import deque
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .caseio import NetworkCase
from .cfx import CfConfig, CfConstraints, InputAlreadyFeasibleError
from .dcopf import (FeasibilityLabel, check_feasibility, restore_baseline,
                    solve_dispatch)
from .learn import load_model, logit, predict_proba
from .pipeline import RecoveryFailedError, restore_with_validation

__all__ = ["build_app", "load_models"]

LOG_CAPACITY = 1000


def load_models(models_dir) -> dict:
    """Scan a directory for model JSON files; tree models get id "dt"."""
    models = {}
    for path in sorted(Path(models_dir).glob("*.json")):
        try:
            model = load_model(path)
        except (ValueError, KeyError):
            continue
        model_id = {"tree": "dt", "ffnn": "ffnn"}[model.kind]
        if model_id in models:
            model_id = path.stem
        models[model_id] = model
    return models


class _RequestLog:
    """Append-only ring buffer with optional JSONL mirroring."""

    def __init__(self, path=None):
        self.entries = deque(maxlen=LOG_CAPACITY)
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def append(self, route: str, payload: dict, seed, outcome: str) -> None:
        digest = hashlib.sha256(
            json.dumps(payload, sort_keys=True, default=str).encode()
        ).hexdigest()[:16]
        entry = {"route": route, "seed": seed, "outcome": outcome, "digest": digest}
        with self._lock:
            self.entries.append(entry)
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")


def _demand_vector(payload: dict, case: NetworkCase) -> np.ndarray:
    demand = payload.get("demand")
    if not isinstance(demand, list):
        raise HTTPException(400, "body must include a demand array")
    if len(demand) != case.n_buses:
        raise HTTPException(400, f"demand has {len(demand)} entries, case has {case.n_buses} buses")
    try:
        vec = np.array([float(v) for v in demand])
    except (TypeError, ValueError):
        raise HTTPException(400, "demand entries must be numbers")
    if not np.all(np.isfinite(vec)):
        raise HTTPException(400, "demand entries must be finite")
    return vec


def build_app(case: NetworkCase, models_dir=None, models: dict | None = None,
              static_dir=None, log_path=None) -> FastAPI:
    if models is None:
        models = load_models(models_dir) if models_dir else {}
    if not models:
        raise ValueError("gateway needs at least one model")
    log = _RequestLog(log_path)
    ids = [b.id for b in case.buses]
    app = FastAPI(title="gridcf gateway")

    def pick_model(payload: dict):
        model_id = payload.get("model")
        if model_id not in models:
            raise HTTPException(404, f"unknown model {model_id!r}; have {sorted(models)}")
        return models[model_id]

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"detail": f"internal error in {request.url.path}: {exc}"},
        )

    @app.get("/case")
    def case_summary():
        return {
            "name": case.name,
            "baseMVA": case.base_mva,
            "slack": ids[case.slack_bus],
            "buses": [{"id": b.id, "load": b.nominal_load} for b in case.buses],
            "generators": [
                {"bus": ids[g.bus], "pmin": g.p_min, "pmax": g.p_max,
                 "cost_linear": g.cost_linear}
                for g in case.generators
            ],
            "branches": [
                {"from": ids[br.from_bus], "to": ids[br.to_bus],
                 "limit": br.flow_limit, "susceptance": br.susceptance}
                for br in case.branches
            ],
        }

    @app.get("/models")
    def model_index():
        return {
            "models": [
                {"id": mid, "kind": m.kind, "metrics": m.metrics}
                for mid, m in sorted(models.items())
            ]
        }

    @app.post("/classify")
    async def classify(request: Request):
        payload = await _json_body(request)
        model = pick_model(payload)
        x = _demand_vector(payload, case)
        proba = predict_proba(model, x)
        out = {
            "label": "feasible" if proba > 0.5 else "infeasible",
            "proba": proba,
            "logit": logit(model, x),
        }
        log.append("/classify", payload, None, out["label"])
        return out

    @app.post("/baseline")
    async def baseline(request: Request):
        payload = await _json_body(request)
        x = _demand_vector(payload, case)
        bounds = payload.get("bounds")
        if bounds is not None:
            bounds = np.asarray(bounds, dtype=float)
            if bounds.shape != (case.n_buses, 2):
                raise HTTPException(400, f"bounds must be {case.n_buses} [lower, upper] pairs")
        result = restore_baseline(case, x, bounds=bounds)
        out = {
            "served": result.served_demand.tolist(),
            "delta": result.delta.tolist(),
            "total": result.total_adjustment,
        }
        log.append("/baseline", payload, None, f"total={result.total_adjustment:.3f}")
        return out

    @app.post("/counterfactuals")
    async def counterfactuals(request: Request):
        payload = await _json_body(request)
        model = pick_model(payload)
        x = _demand_vector(payload, case)
        seed = payload.get("seed")
        if seed is None:
            seed = secrets.randbelow(2**31 - 1)
        freeze = payload.get("freeze", [])
        if not isinstance(freeze, list):
            raise HTTPException(400, "freeze must be a list of bus ids")
        known = set(ids)
        for bus in freeze:
            if bus not in known:
                raise HTTPException(400, f"freeze lists unknown bus {bus}")
        config = CfConfig(
            k=int(payload.get("k", 3)),
            lambda1=float(payload.get("lambda1", 0.5)),
            lambda2=float(payload.get("lambda2", 1.0)),
            seed=int(seed),
        )
        constraints = CfConstraints.defaults(
            case, x, freeze=freeze, allow_negative=bool(payload.get("allowNegative", False))
        )
        try:
            vo = restore_with_validation(case, model, x, constraints, config)
        except InputAlreadyFeasibleError as exc:
            log.append("/counterfactuals", payload, seed, "already-feasible")
            raise HTTPException(409, str(exc))
        except RecoveryFailedError as exc:
            log.append("/counterfactuals", payload, seed, "recovery-failed")
            raise HTTPException(422, str(exc))
        doc = vo.options.to_dict(bus_ids=ids)
        out = {
            "options": doc["options"],
            "objective": doc["objective"],
            "seed": int(seed),
            "retries_used": vo.retries_used,
        }
        log.append("/counterfactuals", payload, seed, f"options={len(doc['options'])}")
        return out

    @app.post("/validate")
    async def validate(request: Request):
        payload = await _json_body(request)
        x = _demand_vector(payload, case)
        feasible = check_feasibility(case, x) is FeasibilityLabel.FEASIBLE
        out: dict = {"feasible": feasible}
        if feasible:
            ds = solve_dispatch(case, x)
            out["dispatch"] = {
                "generation": ds.generation.tolist(),
                "flows": ds.flows.tolist(),
                "cost": ds.cost,
            }
        log.append("/validate", payload, None, str(feasible))
        return out

    @app.get("/log")
    def request_log():
        return {"entries": list(log.entries)}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app


async def _json_body(request: Request) -> dict:
    try:
        payload = await request.json()
    except Exception:
        raise HTTPException(400, "request body must be JSON")
    if not isinstance(payload, dict):
        raise HTTPException(400, "request body must be a JSON object")
    return payload
