"""Record live service responses into tests/fixtures/recorded.json.

Run from the repository root with the permtdp package installed:

    python3 frontend/scripts/record_fixture.py

The script builds a small deterministic volumetric session, walks the
endpoints the explorer uses (status, clusters, drill, empty drill, slices,
history, one validation error), and saves every request/response pair.
The frontend contract tests replay these bodies through a mocked fetch, so
the UI is tested against exactly what the server said, never against
numbers invented on the TypeScript side.
"""

import json
import pathlib
import tempfile

import numpy as np
from fastapi.testclient import TestClient

from permtdp.nifti import write_nifti_volume
from permtdp.service import create_app

FIXTURE = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "recorded.json"

DIMS = (12, 10, 8)
N_SUBJECTS = 16
ALPHA = 0.1
W = 250
SEED = 17
ROOT_THRESHOLD = 2.5
DRILL_THRESHOLD = 9.0
EMPTY_THRESHOLD = 50.0


def build_volumes(tmp: pathlib.Path) -> dict:
    rng = np.random.default_rng(SEED)
    mask = np.ones(DIMS, dtype=np.uint8)
    mask[11, 9, 7] = 0
    mask[11, 9, 6] = 0
    write_nifti_volume(tmp / "mask.nii", mask, datatype=2)

    data = rng.normal(size=DIMS + (N_SUBJECTS,))
    # two strong lobes joined by a weak bridge: one cluster at the root
    # threshold that splits in two when drilled, plus a compact second blob
    data[1:3, 1:5, 1:5, :] += 3.5
    data[3:4, 1:5, 1:5, :] += 1.5
    data[4:6, 1:5, 1:5, :] += 3.2
    data[7:10, 5:9, 3:7, :] += 3.0
    write_nifti_volume(tmp / "data.nii", data, datatype=64)
    return {"data": str(tmp / "data.nii"), "geometry": str(tmp / "mask.nii")}


def main() -> None:
    records = {}

    def record(name, response, method, path, *, params=None, body=None):
        records[name] = {
            "method": method,
            "path": path,
            "params": params or {},
            "body": body,
            "status": response.status_code,
            "response": response.json(),
        }
        return response.json()

    client = TestClient(create_app())
    with tempfile.TemporaryDirectory() as tmp:
        paths = build_volumes(pathlib.Path(tmp))
        payload = {**paths, "alpha": ALPHA, "w": W, "seed": SEED, "family": "simes"}
        created = client.post("/sessions", json=payload)
        assert created.status_code == 201, created.text
        sid = created.json()["id"]
        record("create", created, "POST", "/sessions", body={
            "data": "data.nii", "geometry": "mask.nii",
            "alpha": ALPHA, "w": W, "seed": SEED, "family": "simes",
        })

        status = client.get(f"/sessions/{sid}")
        record("status", status, "GET", f"/sessions/{sid}")

        clusters = client.get(
            f"/sessions/{sid}/clusters",
            params={"threshold": ROOT_THRESHOLD, "connectivity": 26, "voxels": 1},
        )
        root = record("clusters_root", clusters, "GET", f"/sessions/{sid}/clusters",
                      params={"threshold": ROOT_THRESHOLD, "connectivity": 26, "voxels": 1})
        assert len(root["clusters"]) >= 2, "fixture needs a multi-cluster table"
        split_id = root["clusters"][0]["id"]

        drill = client.post(
            f"/sessions/{sid}/drill", params={"voxels": 1},
            json={"threshold": DRILL_THRESHOLD, "cluster_id": split_id},
        )
        sub = record("drill_split", drill, "POST", f"/sessions/{sid}/drill",
                     params={"voxels": 1},
                     body={"threshold": DRILL_THRESHOLD, "cluster_id": split_id})
        assert len(sub["clusters"]) >= 2, "drill fixture must split the parent"

        empty = client.post(
            f"/sessions/{sid}/drill", params={"voxels": 1},
            json={"threshold": EMPTY_THRESHOLD, "cluster_id": split_id},
        )
        emptied = record("drill_empty", empty, "POST", f"/sessions/{sid}/drill",
                         params={"voxels": 1},
                         body={"threshold": EMPTY_THRESHOLD, "cluster_id": split_id})
        assert emptied["clusters"] == [], "fixture needs an empty drill result"

        rejected = client.post(
            f"/sessions/{sid}/drill",
            json={"threshold": DRILL_THRESHOLD + 1, "cluster_id": split_id,
                  "connectivity": 5},
        )
        assert rejected.status_code == 422
        record("drill_rejected", rejected, "POST", f"/sessions/{sid}/drill",
               body={"threshold": DRILL_THRESHOLD + 1, "cluster_id": split_id,
                     "connectivity": 5})

        # every z plane, so the explorer's mask accumulation can be replayed
        slice_queries = [
            (f"slice_z{k}", {"axis": "z", "index": k, "layer": "stat"})
            for k in range(DIMS[2])
        ]
        slice_queries += [
            ("slice_tdp", {"axis": "z", "index": 3, "layer": "tdp"}),
            ("slice_clamped", {"axis": "x", "index": 99, "layer": "stat"}),
        ]
        for name, params in slice_queries:
            response = client.get(f"/sessions/{sid}/slice", params=params)
            body = record(name, response, "GET", f"/sessions/{sid}/slice", params=params)
            assert body["layer"] == params["layer"]
        assert records["slice_clamped"]["response"]["clamped"] is True

        history = client.get(f"/sessions/{sid}/history")
        record("history", history, "GET", f"/sessions/{sid}/history")

    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    with open(FIXTURE, "w", encoding="utf-8") as fh:
        json.dump(records, fh, indent=2, sort_keys=True)
        fh.write("\n")
    table = [(c["id"], c["size"], c["tdp_lower_bound"]) for c in root["clusters"]]
    print(f"recorded {len(records)} exchanges to {FIXTURE}")
    print(f"root clusters (id, size, bound): {table}")
    print(f"drill sub-clusters: {[(c['id'], c['size']) for c in sub['clusters']]}")


if __name__ == "__main__":
    main()
