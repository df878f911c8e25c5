import dataclasses

import numpy as np
import pytest

import madpath as mp


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_cell_model():
    """Unit-bisector toy: centers at the origin and (1,0), pure cells."""
    return mp.EspaModel(
        feature_weights=np.array([0.5, 0.5]),
        centers=np.array([[0.0, 1.0], [0.0, 0.0]]),
        cell_class_probs=np.array([[1.0, 0.0], [0.0, 1.0]]),
        hyper=mp.EspaHyperparams(n_cells=2, entropy_reg=0.1, class_reg=1.0),
    )


def random_espa_model(rng, n_features=2, n_cells=4, n_classes=2, spread=2.0):
    """A structurally valid cell model with random geometry and columns."""
    w = rng.dirichlet(np.ones(n_features))
    centers = rng.uniform(-spread, spread, size=(n_features, n_cells))
    lam = rng.dirichlet(np.ones(n_classes), size=n_cells).T
    return mp.EspaModel(
        feature_weights=w, centers=centers, cell_class_probs=lam,
        hyper=mp.EspaHyperparams(n_cells=n_cells, entropy_reg=0.1, class_reg=1.0),
    )


@pytest.fixture(scope="session")
def swiss_pipeline():
    """Standardized 2-turn benchmark, selected hyperparameters, final fit.

    Shared by the solver tests and the acceptance gates; training is
    deterministic in the fixed seed.
    """
    seed = 7
    data = mp.gen_swiss_roll(mp.SwissRollSpec(n_points=1024, turns=2, seed=seed))
    parts = mp.split(data.n_rows, seed=seed)
    std_data, standardizer = mp.standardize(data, parts.train_idx)
    grid = mp.HyperGrid()  # default grids
    hyper, table = mp.select_hyperparams(std_data, parts, grid, seed=seed,
                                         n_restarts=2)
    hyper = dataclasses.replace(hyper, n_restarts=10)
    model, state = mp.train(std_data.subset(parts.train_idx), hyper)
    model = mp.with_standardizer(model, standardizer)
    return {
        "data": std_data,
        "split": parts,
        "model": model,
        "state": state,
        "standardizer": standardizer,
        "selection_table": table,
    }
