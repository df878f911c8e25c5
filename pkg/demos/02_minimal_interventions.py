#!/usr/bin/env python3
"""Patient8-level minimal interventions on the heart-failure data.

Trains the cell classifier on the bundled CSV, then asks, for one
deceased patient from the test split: what is the smallest change of the
six controllable clinical variables that reduces the predicted death
risk by at least 50%?
"""

import pathlib

import numpy as np

import madpath as mp
from madpath.harness import (
    HEART_ACCESSIBLE,
    HEART_DELTA,
    fit_espa_pipeline,
    round_binary_deltas,
)

DATA = pathlib.Path(__file__).parent.parent / "data" / "heart.csv"

data = mp.load_csv(DATA, mp.heart_schema())
parts = mp.split(data.n_rows, seed=0)
print("training (smoothed-rank features, intervention-rich grid point)...")
grid = mp.HyperGrid(n_cells=(60,), entropy_reg=(6e-3,), class_reg=(1e-2,))
model, transform, info = fit_espa_pipeline(
    data, parts, grid=grid, seed=0, transform="rank")
X = transform.transform(data.features)
scores = mp.predict_proba(model, X[parts.test_idx])[:, 1]
print(f"test AUC: {mp.auc(scores, data.labels[parts.test_idx]):.3f} "
      f"(cells: {model.n_cells})")

accessible = tuple(data.column_index(n) for n in HEART_ACCESSIBLE)
died = [i for i in parts.test_idx if data.labels[i] == 1]
predict = mp.espa_predict_fn(model, 1)
# restrict endpoints to the observed feature box: interventions must be
# states real patients actually occupy
box = (X.min(axis=0), X.max(axis=0))

for i in died:
    q = mp.MapQuery(x=X[i], label=1, delta=HEART_DELTA, accessible=accessible,
                    bounds=box)
    r = mp.map_espa(model, q)
    if not r.found:
        continue
    before = data.features[i]
    after = np.atleast_2d(transform.inverse_transform(r.x_star))[0]
    risk0 = float(predict(X[i][None, :])[0])
    risk1 = risk0 - r.achieved_drop
    print(f"\npatient {i}: predicted death risk {risk0:.2f} -> {risk1:.2f} "
          f"(distance {r.mad:.3f} in transformed units)")
    print(f"  {'variable':28s} {'now':>12s} {'target':>12s}")
    for j in accessible:
        if abs(after[j] - before[j]) < 1e-9:
            continue
        print(f"  {data.column_names[j]:28s} {before[j]:12.2f} {after[j]:12.2f}")
    rounding = round_binary_deltas(model, q, r, data.column_kinds,
                                   transform=transform)
    if rounding is not None:
        ok = "still reaches" if rounding["meets_delta"] else "no longer reaches"
        print(f"  (with binary variables snapped to 0/1 the plan {ok} "
              f"the required risk drop)")
    break
else:
    print("no deceased test patient has a feasible intervention at this delta")
