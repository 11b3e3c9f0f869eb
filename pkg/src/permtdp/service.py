"""HTTP session service for interactive cluster exploration.

A session runs the calibration pipeline once over a referenced dataset;
every later query (clusters at a threshold, drill-downs, slices, subset
bounds) is a pure read against that one calibration, so all reported
bounds are simultaneously valid at the session's alpha.  Nothing ever
recalibrates.

Cluster ids are unique within a session across all reports, which lets a
drill request name its parent by id alone.  Drill thresholds must strictly
increase along a drill path.  Repeating a query (same threshold and
connectivity, or the same drill) returns the cached report, ids included,
so concurrent identical reads see identical bodies.

Sessions live in memory; with a data directory configured, each session's
inputs and query history are mirrored to a JSON snapshot and replayed on
restart, which reproduces the same reports and ids because everything
downstream of the seed is deterministic.
"""

from __future__ import annotations

import json
import math
import os
import secrets
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from pydantic import BaseModel

from . import cli as _cli
from .bounds import calibrated_critical_vector
from .clusters import CONNECTIVITIES, build_report, drill_down, tdp_map, threshold_clusters
from .matrixio import SCHEMA_VERSION
from .model import VoxelSubset
from .nifti import NiftiError

__all__ = ["create_app"]

_AXES = {"x": 0, "y": 1, "z": 2, "0": 0, "1": 1, "2": 2}


class SessionRequest(BaseModel):
    data: str
    geometry: "str | None" = None
    alpha: float = 0.05
    family: str = "simes"
    delta: float = 0.0
    w: int = 1000
    seed: int = 0
    labels: "list[int] | None" = None


class DrillRequest(BaseModel):
    threshold: float
    cluster_id: "str | None" = None
    voxels: "list[int] | None" = None
    connectivity: "int | None" = None


@dataclass
class _Session:
    id: str
    params: dict
    created: float
    ready: threading.Event = field(default_factory=threading.Event)
    lock: threading.Lock = field(default_factory=threading.Lock)
    progress: float = 0.0
    error: "str | None" = None
    # derived once, never recomputed
    data: object = None
    geometry: object = None
    stats: object = None
    pvals: object = None
    cal: object = None
    critical: object = None
    # query state
    next_cluster_id: int = 1
    reports: "dict[tuple, object]" = field(default_factory=dict)   # cache key -> report
    parents: "dict[str, dict]" = field(default_factory=dict)       # cluster id -> facts
    roots: "list[dict]" = field(default_factory=list)              # history forest
    nodes: "dict[tuple, dict]" = field(default_factory=dict)       # cache key -> history node
    last_report: object = None
    ops: "list[dict]" = field(default_factory=list)                # replayable query log

    def status(self) -> str:
        if self.error is not None:
            return "failed"
        return "ready" if self.ready.is_set() else "computing"


def _compute(session: _Session) -> None:
    """Worker-thread body: load, transform, calibrate, mark ready."""
    p = session.params
    try:
        data, geometry = _cli.load_inputs(p["data"], p.get("geometry"))
        session.progress = 0.3
        stats, pvals, cal = _cli.run_pipeline(
            data, family=p.get("family", "simes"), alpha=p.get("alpha", 0.05),
            delta=p.get("delta", 0.0), w=p.get("w", 1000), seed=p.get("seed", 0),
            labels=p.get("labels"),
        )
        session.progress = 0.9
        session.data, session.geometry = data, geometry
        session.stats, session.pvals, session.cal = stats, pvals, cal
        session.critical = calibrated_critical_vector(cal)
    except (ValueError, OSError) as err:
        session.error = str(err)
    finally:
        session.progress = 1.0
        session.ready.set()


def create_app(data_dir=None, max_sessions: int = 64, ready_wait: float = 5.0) -> FastAPI:
    """Build the service; snapshots in ``data_dir`` are replayed eagerly."""
    app = FastAPI(title="permtdp session service")
    store: "dict[str, _Session]" = {}
    store_lock = threading.Lock()

    def snapshot_path(sid: str) -> "str | None":
        return os.path.join(data_dir, f"{sid}.json") if data_dir else None

    def save_snapshot(session: _Session) -> None:
        path = snapshot_path(session.id)
        if path is None:
            return
        record = {
            "schema_version": SCHEMA_VERSION,
            "id": session.id,
            "created": session.created,
            "params": session.params,
            "ops": session.ops,
        }
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
        os.replace(tmp, path)

    def get_session(sid: str) -> _Session:
        with store_lock:
            session = store.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {sid!r}")
        return session

    def ready_session(sid: str) -> _Session:
        session = get_session(sid)
        if not session.ready.is_set():
            raise HTTPException(status_code=409, detail={
                "message": "session still computing", "progress": session.progress,
            })
        if session.error is not None:
            raise HTTPException(status_code=422, detail=session.error)
        return session

    def check_threshold(value: float) -> float:
        if not math.isfinite(value):
            raise HTTPException(status_code=422, detail=f"threshold must be finite, got {value}")
        return float(value)

    def check_connectivity(value: int) -> int:
        if value not in CONNECTIVITIES:
            raise HTTPException(
                status_code=422,
                detail=f"connectivity must be one of {CONNECTIVITIES}, got {value}",
            )
        return int(value)

    def need_geometry(session: _Session):
        if session.geometry is None:
            raise HTTPException(
                status_code=422,
                detail="session has no voxel geometry; create it with a mask or NIfTI data",
            )
        return session.geometry

    def record_clusters(session: _Session, threshold: float, connectivity: int):
        """Report for a root-level clusters query, cached by its key."""
        key = ("clusters", threshold, connectivity)
        with session.lock:
            if key in session.reports:
                return session.reports[key]
            subsets = threshold_clusters(
                session.stats.observed, session.geometry, threshold, connectivity
            )
            report = build_report(
                subsets, session.pvals.observed, session.critical,
                session.stats.observed, session.geometry,
                threshold=threshold, connectivity=connectivity,
                id_start=session.next_cluster_id,
            )
            session.next_cluster_id += len(report.clusters)
            node = {"kind": "clusters", "source": None, "threshold": threshold,
                    "connectivity": connectivity,
                    "cluster_ids": [c.id for c in report.clusters], "children": []}
            session.reports[key] = report
            session.nodes[key] = node
            session.roots.append(node)
            for entry in report.clusters:
                session.parents[entry.id] = {
                    "subset": entry.subset, "threshold": threshold,
                    "connectivity": connectivity, "node": node,
                }
            session.last_report = report
            session.ops.append({"op": "clusters", "threshold": threshold,
                                "connectivity": connectivity})
            save_snapshot(session)
            return report

    def record_drill(session: _Session, req: DrillRequest):
        threshold = check_threshold(req.threshold)
        if (req.cluster_id is None) == (req.voxels is None):
            raise HTTPException(
                status_code=422, detail="pass exactly one of cluster_id or voxels",
            )
        geometry = need_geometry(session)
        if req.cluster_id is not None:
            facts = session.parents.get(req.cluster_id)
            if facts is None:
                raise HTTPException(status_code=404, detail=f"no cluster {req.cluster_id!r}")
            if threshold <= facts["threshold"]:
                raise HTTPException(status_code=422, detail=(
                    f"drill threshold {threshold} must exceed the parent's "
                    f"forming threshold {facts['threshold']}"
                ))
            connectivity = check_connectivity(
                req.connectivity if req.connectivity is not None else facts["connectivity"]
            )
            parent_subset = facts["subset"]
            parent_node = facts["node"]
            key = ("drill", req.cluster_id, threshold, connectivity)
            source = {"cluster_id": req.cluster_id}
        else:
            if not req.voxels:
                raise HTTPException(status_code=422, detail="voxels must be nonempty")
            connectivity = check_connectivity(
                req.connectivity if req.connectivity is not None else 26
            )
            try:
                parent_subset = VoxelSubset(np.asarray(req.voxels), m=geometry.m)
            except ValueError as err:
                raise HTTPException(status_code=422, detail=str(err))
            parent_node = None
            key = ("drill", tuple(int(v) for v in parent_subset.indices), threshold, connectivity)
            source = {"voxels": parent_subset.size}
        with session.lock:
            if key in session.reports:
                return session.reports[key]
            subsets = drill_down(
                parent_subset, session.stats.observed, geometry, threshold, connectivity
            )
            report = build_report(
                subsets, session.pvals.observed, session.critical,
                session.stats.observed, geometry,
                threshold=threshold, connectivity=connectivity,
                id_start=session.next_cluster_id,
            )
            session.next_cluster_id += len(report.clusters)
            node = {"kind": "drill", "source": source, "threshold": threshold,
                    "connectivity": connectivity,
                    "cluster_ids": [c.id for c in report.clusters], "children": []}
            session.reports[key] = report
            session.nodes[key] = node
            if parent_node is not None:
                parent_node["children"].append(node)
            else:
                session.roots.append(node)
            for entry in report.clusters:
                session.parents[entry.id] = {
                    "subset": entry.subset, "threshold": threshold,
                    "connectivity": connectivity, "node": node,
                }
            session.last_report = report
            op = {"op": "drill", "threshold": threshold, "connectivity": connectivity}
            if req.cluster_id is not None:
                op["cluster_id"] = req.cluster_id
            else:
                op["voxels"] = [int(v) for v in parent_subset.indices]
            session.ops.append(op)
            save_snapshot(session)
            return report

    def launch(session: _Session, replay_ops: "list[dict] | None" = None) -> None:
        def body():
            _compute(session)
            if replay_ops and session.error is None and session.geometry is not None:
                for op in list(replay_ops):
                    try:
                        if op["op"] == "clusters":
                            record_clusters(session, op["threshold"], op["connectivity"])
                        else:
                            record_drill(session, DrillRequest(
                                threshold=op["threshold"],
                                connectivity=op.get("connectivity"),
                                cluster_id=op.get("cluster_id"),
                                voxels=op.get("voxels"),
                            ))
                    except (HTTPException, ValueError):
                        # a snapshot op that no longer applies is dropped
                        continue
        threading.Thread(target=body, daemon=True).start()

    def restore_snapshots() -> None:
        if not data_dir:
            return
        os.makedirs(data_dir, exist_ok=True)
        for name in sorted(os.listdir(data_dir)):
            if not name.endswith(".json"):
                continue
            try:
                with open(os.path.join(data_dir, name), encoding="utf-8") as fh:
                    record = json.load(fh)
                session = _Session(
                    id=record["id"], params=record["params"],
                    created=record.get("created", time.time()),
                )
                session.ops = []
            except (OSError, ValueError, KeyError):
                continue
            with store_lock:
                store[session.id] = session
            launch(session, replay_ops=record.get("ops") or [])

    @app.post("/sessions", status_code=201)
    def create_session(req: SessionRequest):
        with store_lock:
            if len(store) >= max_sessions:
                raise HTTPException(
                    status_code=429, detail=f"session capacity {max_sessions} reached",
                )
        try:
            _cli._resolve_family(req.family)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err))
        session = _Session(
            id=secrets.token_hex(8), params=req.model_dump(), created=time.time(),
        )
        with store_lock:
            store[session.id] = session
        save_snapshot(session)
        launch(session)
        session.ready.wait(timeout=ready_wait)
        if session.error is not None:
            with store_lock:
                store.pop(session.id, None)
            path = snapshot_path(session.id)
            if path and os.path.exists(path):
                os.remove(path)
            raise HTTPException(status_code=422, detail=session.error)
        body = {
            "schema_version": SCHEMA_VERSION,
            "id": session.id,
            "status": session.status(),
            "progress": session.progress,
            "lambda_alpha": None,
        }
        if session.ready.is_set():
            body["lambda_alpha"] = session.cal.lambda_alpha
        return body

    @app.get("/sessions/{sid}")
    def session_status(sid: str):
        session = get_session(sid)
        body = {
            "schema_version": SCHEMA_VERSION,
            "id": session.id,
            "status": session.status(),
            "progress": session.progress,
            "alpha": session.params.get("alpha", 0.05),
            "lambda_alpha": None,
        }
        if session.error is not None:
            body["error"] = session.error
        elif session.ready.is_set():
            body["lambda_alpha"] = session.cal.lambda_alpha
            body["m"] = session.data.m
            body["w"] = session.cal.w
        return body

    @app.get("/sessions/{sid}/clusters")
    def get_clusters(sid: str, threshold: float = Query(...),
                     connectivity: int = Query(26), voxels: int = Query(0)):
        session = ready_session(sid)
        need_geometry(session)
        report = record_clusters(
            session, check_threshold(threshold), check_connectivity(connectivity)
        )
        return report.to_dict(voxels=bool(voxels))

    @app.post("/sessions/{sid}/drill")
    def post_drill(sid: str, req: DrillRequest, voxels: int = Query(0)):
        session = ready_session(sid)
        report = record_drill(session, req)
        return report.to_dict(voxels=bool(voxels))

    @app.get("/sessions/{sid}/slice")
    def get_slice(sid: str, axis: str = Query(...), index: int = Query(...),
                  layer: str = Query("stat")):
        session = ready_session(sid)
        geometry = need_geometry(session)
        if axis not in _AXES:
            raise HTTPException(status_code=422, detail=f"axis must be x, y or z, got {axis!r}")
        if layer not in ("stat", "tdp"):
            raise HTTPException(status_code=422, detail=f"layer must be stat or tdp, got {layer!r}")
        ax = _AXES[axis]
        dims = geometry.dims
        clamped = not 0 <= index < dims[ax]
        idx = min(max(index, 0), dims[ax] - 1)
        if layer == "stat":
            values = session.stats.observed
        else:
            with session.lock:
                report = session.last_report
            values = (
                tdp_map(report, geometry) if report is not None
                else np.zeros(geometry.m)
            )
        grid = np.zeros(dims[0] * dims[1] * dims[2])
        grid[np.flatnonzero(geometry.mask)] = values
        grid = grid.reshape(dims, order="F")
        mask = geometry.mask.reshape(dims, order="F")
        plane = np.take(grid, idx, axis=ax)
        mask_plane = np.take(mask, idx, axis=ax)
        return {
            "schema_version": SCHEMA_VERSION,
            "axis": "xyz"[ax],
            "index": idx,
            "clamped": clamped,
            "layer": layer,
            "dims": list(dims),
            "shape": list(plane.shape),
            "values": [[float(v) for v in row] for row in plane],
            "in_mask": [[bool(v) for v in row] for row in mask_plane],
        }

    @app.get("/sessions/{sid}/history")
    def get_history(sid: str):
        session = get_session(sid)
        with session.lock:
            roots = json.loads(json.dumps(session.roots))
        return {"schema_version": SCHEMA_VERSION, "roots": roots}

    @app.delete("/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        with store_lock:
            session = store.pop(sid, None)
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {sid!r}")
        path = snapshot_path(sid)
        if path and os.path.exists(path):
            os.remove(path)
        return Response(status_code=204)

    restore_snapshots()
    return app
