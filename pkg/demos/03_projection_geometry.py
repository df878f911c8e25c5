#!/usr/bin/env python3
"""The geometry underneath a single intervention query.

Builds a tiny 3-cell model by hand, prints the half-space system of one
target cell, certifies feasibility with the phase-1 LP, solves the
projection QP, and checks every KKT certificate the solver reports.
"""

import numpy as np

import madpath as mp

model = mp.EspaModel(
    feature_weights=np.array([0.6, 0.4]),
    centers=np.array([[0.0, 2.0, 0.5],
                      [0.0, 0.0, 1.8]]),
    cell_class_probs=np.array([[0.95, 0.30, 0.10],
                               [0.05, 0.70, 0.90]]),
    hyper=mp.EspaHyperparams(n_cells=3, entropy_reg=0.1, class_reg=1.0),
)
x = np.array([-0.4, -0.2])
print(f"source point {x}, its cell: {mp.assign_cell(model, x)}, "
      f"P(class 0) = {mp.predict_proba(model, x)[0]:.2f}")

target = 2
poly = mp.build_cell_polytope(model, x, target, accessible=(0, 1))
print(f"\ncell {target} as `A u <= b` over the accessible coordinates:")
for row, off, rival in zip(poly.A, poly.b, poly.row_cells):
    print(f"  [{row[0]:+.3f} {row[1]:+.3f}] u <= {off:+.3f}   (vs cell {rival})")

feas = mp.certify_feasibility(poly.A, poly.b)
print(f"\nphase-1: feasible={feas.feasible}, margin={feas.margin:.4f}, "
      f"deepest point {np.round(feas.point, 3)}")

res = mp.solve_qp(poly.A, poly.b, x, feasibility=feas)
print(f"\nprojection: u* = {np.round(res.x_opt, 4)}  "
      f"distance = {np.sqrt(res.objective):.4f}")
print(f"active rows: {res.active_set}, duals: {np.round(res.duals, 4)}")
print(f"certificates: stationarity+dual {res.kkt_residual:.2e}, "
      f"primal {res.primal_violation:.2e}, "
      f"slackness {res.complementary_slackness:.2e}")

q = mp.MapQuery(x=x, label=0, delta=0.5, accessible=(0, 1))
r = mp.map_espa(model, q)
print(f"\nfull query (delta=0.5): status={r.status}, winner={r.winner_cells}, "
      f"mad={r.mad:.4f}, endpoint {np.round(r.x_star, 4)}")
print(f"achieved drop {r.achieved_drop:.2f} "
      f"(endpoint nudged {r.nudge:g} into the winning cell)")
for out in r.per_cell:
    print(f"  cell {out.cell}: {out.reason}, available drop {out.drop:+.2f}")
