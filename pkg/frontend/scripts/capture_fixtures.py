#!/usr/bin/env python3
"""Record real service responses for the frontend test suite.

Trains the seeded heart model exactly like the service tests do, runs
the live app in-process, replays the scripted explorer sessions, and
stores every request/response pair verbatim in fixtures/sessions.json.
The vitest suite then asserts the UI's card numbers against these bytes.
"""

import json
import pathlib
import sys

from fastapi.testclient import TestClient

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[2] / "src"))

import madpath as mp  # noqa: E402
from madpath.harness import HEART_ACCESSIBLE, fit_espa_pipeline  # noqa: E402
from madpath.service import ServiceConfig, create_app  # noqa: E402

ROOT = pathlib.Path(__file__).resolve().parents[2]
OUT = pathlib.Path(__file__).resolve().parents[1] / "fixtures"
OUT.mkdir(exist_ok=True)

SEED = 0

schema = mp.heart_schema()
data = mp.load_csv(ROOT / "data" / "heart.csv", schema)
parts = mp.split(data.n_rows, seed=SEED)
# one fixed combo chosen for a rich intervention landscape on the demo
grid = mp.HyperGrid(n_cells=(60,), entropy_reg=(6e-3,), class_reg=(1e-2,))
model, _, _ = fit_espa_pipeline(data, parts, grid=grid, seed=SEED,
                                select_restarts=1, final_restarts=4,
                                transform="rank")
model_path = OUT / "heart-model.json"
mp.save_model(model, model_path)

config = ServiceConfig(
    model_path=str(model_path), data_path=str(ROOT / "data" / "heart.csv"),
    schema=schema, allowed_accessible=tuple(HEART_ACCESSIBLE),
    default_delta=0.5, split_seed=SEED)
client = TestClient(create_app(config))

meta = client.get("/meta").json()
records = client.get("/records", params={"split": "test"}).json()
by_risk = sorted(records["records"], key=lambda r: -r["risk"])


def pick(delta, rank=0):
    ok = [r["id"] for r in by_risk if r["risk"] >= delta + 0.05]
    pool = ok if ok else [r["id"] for r in by_risk]
    return pool[min(rank, len(pool) - 1)]


risky = [pick(0.5, i) for i in range(8)]
mild = [r["id"] for r in by_risk[len(by_risk) // 2:]]

ALL = list(HEART_ACCESSIBLE)
sessions = []
scripted = [
    # ten sessions over seeded test records: full and partial control
    # sets, escalating deltas, and the infeasible 0.99 probe
    {"record_id": risky[0], "accessible": ALL, "delta": 0.5},
    {"record_id": risky[1], "accessible": ALL, "delta": 0.3},
    {"record_id": risky[2], "accessible": ALL, "delta": 0.5},
    {"record_id": risky[3], "accessible": ALL, "delta": 0.2},
    {"record_id": risky[0], "accessible": ALL, "delta": 0.99},
    {"record_id": risky[4], "accessible": ALL[:3], "delta": 0.3},
    {"record_id": risky[5], "accessible": ALL, "delta": 0.4},
    {"record_id": risky[6], "accessible": ["serum_creatinine",
                                           "ejection_fraction"], "delta": 0.3},
    {"record_id": mild[0], "accessible": ALL, "delta": 0.99},
    {"record_id": risky[7], "accessible": ALL[3:], "delta": 0.25},
    # validation probes the UI must surface inline
    {"record_id": risky[0], "accessible": ALL, "delta": 0.0},
    {"record_id": risky[0], "accessible": ["age"], "delta": 0.5},
]
for body in scripted:
    resp = client.post("/map", json=body)
    sessions.append({"request": body, "status": resp.status_code,
                     "response": resp.json()})

found = sum(1 for s in sessions if s["status"] == 200
            and s["response"]["status"] == "found")
infeasible = sum(1 for s in sessions if s["status"] == 200
                 and s["response"]["status"] == "infeasible")
doc = {"seed": SEED, "meta": meta, "records": records, "sessions": sessions}
(OUT / "sessions.json").write_text(json.dumps(doc, indent=1) + "\n")
print(f"captured {len(sessions)} sessions ({found} found, {infeasible} "
      f"infeasible, {len(sessions) - found - infeasible} rejected) "
      f"-> {OUT / 'sessions.json'}")
