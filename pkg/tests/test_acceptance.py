"""Acceptance gates.

One test per criterion; each prints a single PASS/FAIL line (run with
``pytest -s tests/test_acceptance.py`` to see them). Tolerances are
pinned here and nowhere else. The biomedical gates carry their full
protocol inline; the heart gate documents its outcome either way.
"""

import pathlib
import time

import numpy as np
import pytest

import madpath as mp
from madpath import espa as espa_mod
from madpath.harness import (
    HEART_ACCESSIBLE,
    HEART_DELTA,
    INSURANCE_ACCESSIBLE,
    INSURANCE_DELTA,
    run_biomedical,
)
from conftest import random_espa_model

DATA_PRESENT = pathlib.Path("data/heart.csv").exists() and \
    pathlib.Path("data/insurance.csv").exists()


def report(name: str, ok: bool, detail: str = "") -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}")


def check_qp_certificates(qp: mp.QpResult) -> None:
    assert qp.kkt_residual <= 1e-7
    assert qp.primal_violation <= 1e-8
    assert qp.complementary_slackness <= 1e-8


def check_result_certificates(result) -> int:
    n = 0
    for outcome in result.per_cell:
        if outcome.qp is not None and outcome.qp.status == "optimal":
            check_qp_certificates(outcome.qp)
            n += 1
    return n


class TestOracleEquivalenceEspa:
    def test_swiss_roll_queries_match_grid_oracle(self, swiss_pipeline):
        model = swiss_pipeline["model"]
        data = swiss_pipeline["data"]
        parts = swiss_pipeline["split"]
        rng = np.random.default_rng(2024)
        idx = rng.choice(parts.test_idx, size=50, replace=False)
        tol = 1e-3 * np.sqrt(2) + 1e-6
        t0 = time.perf_counter()
        worst = 0.0
        n_found = 0
        n_certified = 0
        for i in idx:
            x = data.features[i]
            label = int(data.labels[i])
            q = mp.MapQuery(x=x, label=label, delta=0.4, accessible=(0, 1))
            r = mp.map_espa(model, q)
            n_certified += check_result_certificates(r)
            oracle = mp.map_oracle_grid(mp.espa_predict_fn(model, label), q,
                                        radius=3.0, resolution=1e-3)
            assert r.found == oracle.found, f"status mismatch on record {i}"
            if r.found:
                n_found += 1
                worst = max(worst, abs(r.mad - oracle.mad))
                assert abs(r.mad - oracle.mad) <= tol
        elapsed = time.perf_counter() - t0
        ok = elapsed < 120.0 and worst <= tol
        report("oracle-equivalence-espa", ok,
               f"(50 queries, {n_found} found, worst |mad diff| "
               f"{worst:.2e} <= {tol:.2e}, {n_certified} QPs certified, "
               f"{elapsed:.1f}s < 120s)")
        assert elapsed < 120.0


class TestOracleEquivalenceGlm:
    def test_hundred_random_models(self):
        rng = np.random.default_rng(7)
        done = 0
        worst_oracle = 0.0
        worst_penalty = 0.0
        while done < 100:
            D = int(rng.integers(2, 6))
            theta = rng.normal(size=D)
            model = mp.GlmModel(coef=theta, intercept=float(0.3 * rng.normal()))
            x = rng.normal(size=D)
            k = int(rng.integers(1, min(3, D) + 1))
            acc = tuple(np.sort(rng.choice(D, size=k, replace=False)).tolist())
            # near-zero accessible coefficients make the 1e-6 penalty-limit
            # comparison vacuous (no-control regime); resample those
            if np.linalg.norm(theta[list(acc)]) < 0.3:
                continue
            p0 = mp.glm_predict_proba(model, x)
            delta = float(p0 * rng.uniform(0.2, 0.7))
            if not 0.0 < p0 - delta < 1.0:
                continue
            q = mp.MapQuery(x=x, label=1, delta=delta, accessible=acc)
            analytic = mp.glm_mad(model, q)
            if analytic > 2.5:
                continue
            h = 1e-2 if k <= 2 else 2e-2
            oracle = mp.map_oracle_grid(mp.glm_predict_fn(model, 1), q,
                                        radius=3.0, resolution=h)
            assert oracle.found
            assert abs(analytic - oracle.mad) <= h * np.sqrt(k) + 1e-6
            worst_oracle = max(worst_oracle, abs(analytic - oracle.mad)
                               / (h * np.sqrt(k) + 1e-6))
            limit = mp.map_glm(model, q)
            pen = mp.map_glm(model, q, eps2=1e8)
            assert abs(limit.mad - analytic) <= 1e-9
            assert np.max(np.abs(pen.x_star - limit.x_star)) <= 1e-6
            worst_penalty = max(worst_penalty,
                                float(np.max(np.abs(pen.x_star - limit.x_star))))
            done += 1
        report("oracle-equivalence-glm", True,
               f"(100 models, worst oracle-gap ratio {worst_oracle:.2f}, "
               f"worst penalty-limit gap {worst_penalty:.1e} <= 1e-6)")


class TestIdentitySuite:
    def test_zero_delta_returns_source_point(self, rng):
        n_invertible = n_glm = n_espa = 0
        # invertible path: strictly monotone 1-D link
        clf = mp.InvertibleClassifier(
            forward=lambda v: mp.sigmoid(2.0 * v[0] - 1.0),
            inverse=lambda p: np.array([(mp.logit(p) + 1.0) / 2.0]),
            in_neighborhood=lambda v: True,
        )
        for _ in range(20):
            x = rng.normal(size=1)
            q = mp.MapQuery(x=x, label=0, delta=0.0, accessible=(0,))
            r = mp.map_invertible_penalty(clf, q)
            assert r.found and abs(r.x_star[0] - x[0]) <= 1e-12
            assert r.mad <= 1e-12
            n_invertible += 1
        for _ in range(20):
            D = int(rng.integers(2, 5))
            model = mp.GlmModel(coef=rng.normal(size=D),
                                intercept=float(rng.normal()))
            x = rng.normal(size=D)
            acc = (0, D - 1) if D > 1 else (0,)
            q = mp.MapQuery(x=x, label=1, delta=0.0, accessible=acc)
            r = mp.map_glm(model, q)
            frozen = [j for j in range(D) if j not in acc]
            assert np.array_equal(r.x_star[frozen], x[frozen])  # bitwise
            assert np.max(np.abs(r.x_star[list(acc)] - x[list(acc)])) <= 1e-12
            assert r.mad <= 1e-12
            n_glm += 1
        for _ in range(20):
            model = random_espa_model(rng, n_features=3, n_cells=4)
            x = rng.normal(size=3)
            q = mp.MapQuery(x=x, label=0, delta=0.0, accessible=(0, 2),
                            mode=mp.EQUALITY)
            r = mp.map_espa(model, q)
            assert r.found and np.array_equal(r.x_star, x)  # bitwise
            assert r.mad == 0.0
            n_espa += 1
        report("theorem1-identity", True,
               f"({n_invertible} invertible + {n_glm} glm + {n_espa} espa "
               f"zero-delta queries return the source point)")


class TestQpCertificates:
    def test_battery_and_polytopes(self, rng):
        n_opt = 0
        for _ in range(300):
            m = int(rng.integers(1, 8))
            n = int(rng.integers(1, 5))
            A = rng.normal(size=(m, n))
            if rng.random() < 0.7:
                interior = rng.normal(size=n)
                b = A @ interior + rng.uniform(0.01, 1.0, size=m)
            else:
                b = rng.normal(size=m)  # possibly infeasible
            res = mp.solve_qp(A, b, rng.normal(scale=2.0, size=n))
            assert res.status in ("optimal", "infeasible")
            if res.status == "optimal":
                check_qp_certificates(res)
                n_opt += 1
        # cell polytope solves through the full MAP path
        n_cells_qp = 0
        for _ in range(40):
            model = random_espa_model(rng, n_features=3, n_cells=6)
            x = rng.normal(size=3)
            q = mp.MapQuery(x=x, label=0, delta=0.1,
                            accessible=(0, 1))
            r = mp.map_espa(model, q)
            n_cells_qp += check_result_certificates(r)
        report("qp-certificates", True,
               f"({n_opt} battery solves + {n_cells_qp} cell-polytope solves "
               f"all within KKT 1e-7 / primal 1e-8 / slackness 1e-8)")


class TestTrainingMonotonicity:
    def test_loss_traces_and_block_optimality(self, rng, swiss_pipeline):
        # traces: benchmark fixture plus fresh small runs
        traces = [np.array(swiss_pipeline["state"].loss_history)]
        for seed in range(4):
            X = rng.normal(size=(50, 3))
            y = (X[:, 0] + 0.3 * rng.normal(size=50) > 0).astype(int)
            ds = mp.Dataset(features=X, labels=y, column_names=("a", "b", "c"),
                            column_kinds=(mp.CONTINUOUS,) * 3, n_classes=2)
            _, st = mp.train(ds, mp.EspaHyperparams(
                n_cells=6, entropy_reg=0.05, class_reg=1.0, n_restarts=3,
                seed=seed))
            traces.append(np.array(st.loss_history))
        worst_rise = max(float(np.max(np.diff(t))) if len(t) > 1 else 0.0
                         for t in traces)
        assert worst_rise <= 1e-10

        # block optimality: converge a small instance, then walk one more
        # cycle and attack each block right after its own exact update
        X = rng.normal(size=(25, 3))
        y = (X[:, 1] > 0).astype(int)
        Pi = np.zeros((2, 25))
        Pi[y, np.arange(25)] = 1.0
        ds = mp.Dataset(features=X, labels=y, column_names=("a", "b", "c"),
                        column_kinds=(mp.CONTINUOUS,) * 3, n_classes=2)
        e_reg, c_reg, K = 0.1, 1.0, 3
        model, st = mp.train(ds, mp.EspaHyperparams(
            n_cells=K, entropy_reg=e_reg, class_reg=c_reg, n_restarts=2,
            seed=1, tol=1e-14, max_iters=500))
        K = model.n_cells
        w, S, lam = (model.feature_weights.copy(), model.centers.copy(),
                     model.cell_class_probs.copy())
        violations = 0

        def loss_of(w_, S_, lam_, g_):
            return espa_mod.espa_loss(w_, S_, lam_, g_, X, Pi, e_reg, c_reg)

        gamma = espa_mod.update_assignments(w, S, lam, X, Pi, c_reg)
        base = loss_of(w, S, lam, gamma)
        for _ in range(100):  # assignments: move one point to another cell
            g2 = gamma.copy()
            t = int(rng.integers(25))
            g2[t] = (g2[t] + 1 + int(rng.integers(K - 1))) % K
            if loss_of(w, S, lam, g2) < base - 1e-10:
                violations += 1
        S = espa_mod.update_centers(gamma, X, K, S, w)
        base = loss_of(w, S, lam, gamma)
        for _ in range(100):  # centers: gaussian jiggle
            S2 = S + rng.normal(scale=0.05, size=S.shape)
            if loss_of(w, S2, lam, gamma) < base - 1e-10:
                violations += 1
        lam = espa_mod.update_class_probs(gamma, Pi, K)
        base = loss_of(w, S, lam, gamma)
        for _ in range(100):  # class columns: simplex perturbation
            lam2 = lam.copy()
            k = int(rng.integers(K))
            d = rng.normal(scale=0.05, size=2)
            col = np.clip(lam2[:, k] + (d - d.mean()), espa_mod.PROB_FLOOR, 1)
            lam2[:, k] = col / col.sum()
            if loss_of(w, S, lam2, gamma) < base - 1e-10:
                violations += 1
        w = espa_mod.update_weights(S, gamma, X, e_reg)
        base = loss_of(w, S, lam, gamma)
        for _ in range(100):  # weights: simplex perturbation
            d = rng.normal(scale=0.02, size=3)
            w2 = np.clip(w + (d - d.mean()), 1e-12, 1)
            w2 = w2 / w2.sum()
            if loss_of(w2, S, lam, gamma) < base - 1e-10:
                violations += 1
        assert violations == 0
        report("training-monotonicity", True,
               f"({len(traces)} traces non-increasing within 1e-10, worst rise "
               f"{worst_rise:.1e}; 400 block perturbations, 0 improvements)")


class TestMonotonicityProperties:
    def test_delta_monotonicity(self, rng):
        checked = 0
        attempts = 0
        while checked < 200 and attempts < 4000:
            attempts += 1
            model = random_espa_model(rng, n_features=int(rng.integers(2, 5)),
                                      n_cells=int(rng.integers(4, 9)))
            x = rng.normal(size=model.n_features)
            d1, d2 = np.sort(rng.uniform(0.05, 0.7, size=2))
            acc = tuple(range(model.n_features))
            r1 = mp.map_espa(model, mp.MapQuery(x=x, label=0, delta=float(d1),
                                                accessible=acc))
            r2 = mp.map_espa(model, mp.MapQuery(x=x, label=0, delta=float(d2),
                                                accessible=acc))
            if r1.found and r2.found:
                checked += 1
                assert r1.mad_boundary <= r2.mad_boundary + 1e-9
        assert checked == 200
        report("monotonicity-delta", True,
               f"(200 found pairs, zero violations, {attempts} draws)")

    def test_access_monotonicity(self, rng):
        checked = 0
        attempts = 0
        while checked < 200 and attempts < 4000:
            attempts += 1
            D = int(rng.integers(3, 5))
            model = random_espa_model(rng, n_features=D,
                                      n_cells=int(rng.integers(4, 9)))
            x = rng.normal(size=D)
            big = tuple(np.sort(rng.choice(D, size=D - 1, replace=False)).tolist())
            small = tuple(np.sort(rng.choice(list(big),
                                             size=len(big) - 1,
                                             replace=False)).tolist())
            if not small:
                continue
            delta = float(rng.uniform(0.05, 0.4))
            r_small = mp.map_espa(model, mp.MapQuery(x=x, label=0, delta=delta,
                                                     accessible=small))
            r_big = mp.map_espa(model, mp.MapQuery(x=x, label=0, delta=delta,
                                                   accessible=big))
            if r_small.found and r_big.found:
                checked += 1
                assert r_small.mad_boundary >= r_big.mad_boundary - 1e-9
        assert checked == 200
        report("monotonicity-access", True,
               f"(200 found nested-access pairs, zero violations, "
               f"{attempts} draws)")


class TestSwissRollGate:
    def test_accuracy_gate(self, swiss_pipeline):
        model = swiss_pipeline["model"]
        data = swiss_pipeline["data"]
        parts = swiss_pipeline["split"]
        test = data.subset(parts.test_idx)
        pred = np.argmax(mp.predict_proba(model, test.features), axis=1)
        acc = mp.accuracy(pred, test.labels)
        report("swiss-roll-accuracy", acc >= 0.95,
               f"(2-turn benchmark test accuracy {acc:.4f} >= 0.95, "
               f"K={model.n_cells})")
        assert acc >= 0.95


class TestFormulaCrossCheck:
    def test_unit_rendering_agreement_and_divergence(self, rng):
        n_checked = 0
        worst_gap = 0.0
        for _ in range(100):
            D = int(rng.integers(2, 4))
            model = random_espa_model(rng, n_features=D,
                                      n_cells=int(rng.integers(3, 7)))
            x = rng.normal(size=D)
            k = int(rng.integers(model.n_cells))
            acc = tuple(range(D))
            exp = mp.build_cell_polytope(model, x, k, acc)
            unit = mp.build_cell_polytope_unit(model, x, k, acc, "between")
            fe = mp.certify_feasibility(exp.A, exp.b)
            fu = mp.certify_feasibility(unit.A, unit.b)
            assert fe.feasible == fu.feasible
            if fe.feasible:
                re_ = mp.solve_qp(exp.A, exp.b, x, feasibility=fe)
                ru = mp.solve_qp(unit.A, unit.b, x, feasibility=fu)
                assert re_.status == ru.status == "optimal"
                gap = float(np.max(np.abs(re_.x_opt - ru.x_opt)))
                worst_gap = max(worst_gap, gap)
                assert gap <= 1e-8
            # documented divergence of the reflected-midpoint variant:
            # offsets differ by exactly the scaled center distance per row
            beyond = mp.build_cell_polytope_unit(model, x, k, acc, "beyond")
            w = model.feature_weights
            for r_i, j in enumerate(unit.row_cells):
                dist = np.linalg.norm(
                    np.sqrt(w) * (model.centers[:, k] - model.centers[:, j]))
                assert unit.b[r_i] - beyond.b[r_i] == pytest.approx(dist, abs=1e-10)
            n_checked += 1
        report("formula-cross-check", True,
               f"({n_checked} full-access queries: verdicts agree, worst QP "
               f"optimum gap {worst_gap:.1e} <= 1e-8; reflected-midpoint "
               f"variant offset by the scaled center distance, documented)")


@pytest.mark.skipif(not DATA_PRESENT, reason="bundled data not present")
class TestBiomedicalNumbers:
    def test_insurance_auc_and_fraction(self):
        t0 = time.perf_counter()
        data = mp.load_csv("data/insurance.csv", mp.insurance_schema(
            one_hot_region=False))
        aucs, fracs = [], []
        for seed in range(5):
            rep = run_biomedical(data, "insurance", delta=INSURANCE_DELTA,
                                 accessible_names=INSURANCE_ACCESSIBLE,
                                 seed=seed, select_restarts=2,
                                 final_restarts=4)
            aucs.append(rep.test_auc)
            fracs.append(rep.fraction_found)
        mean_auc = float(np.mean(aucs))
        mean_frac = float(np.mean(fracs))
        elapsed = time.perf_counter() - t0
        auc_ok = 0.93 <= mean_auc <= 1.0
        frac_ok = abs(mean_frac - 0.48) <= 0.10
        report("biomed-insurance-auc", auc_ok,
               f"(mean test AUC {mean_auc:.4f} in 0.98 +- 0.05, per-seed "
               f"{[round(a, 3) for a in aucs]}, {elapsed:.0f}s)")
        report("biomed-insurance-fraction", frac_ok,
               f"(soft gate: found-fraction {mean_frac:.3f} vs 0.48 +- 0.10 "
               f"at delta=0.9, per-seed {[round(f, 3) for f in fracs]}; "
               "fraction tracks how many near-pure cell pairs the trained "
               "probabilities expose, which the protocol does not pin)")
        assert auc_ok  # hard gate
        assert elapsed < 720.0

    def test_heart_auc_and_fraction(self):
        t0 = time.perf_counter()
        # the 0.90 band is unattainable without the follow-up-time column
        # (random forest reference: 0.81 without it, 0.90 with it), so the
        # criterion is run with the documented include_time flag
        data = mp.load_csv("data/heart.csv", mp.heart_schema(include_time=True))
        grid = mp.HyperGrid(n_cells=(8, 16, 30), entropy_reg=(3e-3, 6e-3, 1e-2),
                            class_reg=(1e-4, 1e-2))
        aucs, fracs = [], []
        for seed in range(5):
            rep = run_biomedical(data, "heart", delta=HEART_DELTA,
                                 accessible_names=HEART_ACCESSIBLE,
                                 seed=seed, grid=grid, select_restarts=4,
                                 final_restarts=16)
            aucs.append(rep.test_auc)
            fracs.append(rep.fraction_found)
        mean_auc = float(np.mean(aucs))
        mean_frac = float(np.mean(fracs))
        elapsed = time.perf_counter() - t0
        auc_ok = 0.85 <= mean_auc <= 0.95
        frac_ok = abs(mean_frac - 0.23) <= 0.10
        report("biomed-heart-auc", auc_ok,
               f"(mean test AUC {mean_auc:.4f} vs hard gate 0.90 +- 0.05, "
               f"per-seed {[round(a, 3) for a in aucs]}, {elapsed:.0f}s; "
               "seeds 0-1 reproduce the quoted 0.90-0.91, the 5-seed mean "
               "does not: grid-oracle selection caps near 0.84 for this "
               "implementation, and no classifier reaches 0.85 without the "
               "time column -- see the decisions ledger for the analysis)")
        report("biomed-heart-fraction", frac_ok,
               f"(soft gate: found-fraction {mean_frac:.3f} vs 0.23 +- 0.10 "
               f"at delta=0.5, per-seed {[round(f, 3) for f in fracs]})")
        assert elapsed < 180.0
        assert auc_ok  # hard gate, honestly red when unattained

    def test_unreachable_delta_gives_zero_fraction(self):
        data = mp.load_csv("data/heart.csv", mp.heart_schema())
        grid = mp.HyperGrid(n_cells=(8,), entropy_reg=(6e-3,), class_reg=(1e-4,))
        rep = run_biomedical(data, "heart", delta=1.0,
                             accessible_names=HEART_ACCESSIBLE, seed=0,
                             grid=grid, select_restarts=1, final_restarts=2)
        report("biomed-delta-ceiling", rep.n_found == 0,
               f"(delta=1.0 found-fraction {rep.fraction_found:.3f}; a full "
               "probability drop cannot survive the clamped columns)")
        assert rep.n_found == 0
