"""Minimal adversarial paths/distances for Voronoi-cell entropic
classifiers and generalized linear models, plus the training, benchmark
and serving machinery around them."""

from .data import (
    BINARY,
    CONTINUOUS,
    Dataset,
    DatasetSchema,
    RankSmoother,
    SplitSpec,
    Standardizer,
    heart_schema,
    insurance_schema,
    load_csv,
    rank_smooth,
    split,
    standardize,
)
from .espa import (
    EspaHyperparams,
    EspaModel,
    HyperGrid,
    TrainState,
    assign_cell,
    assign_cells,
    espa_loss,
    predict_proba,
    select_hyperparams,
    train,
    train_annealed,
)
from .glm import GlmModel, fit_logistic, glm_predict_proba, logit, sigmoid
from .mapsolve import (
    EQUALITY,
    FOUND,
    INEQUALITY,
    NOT_FOUND,
    CellOutcome,
    InvertibleClassifier,
    MapQuery,
    MapResult,
    PenaltySchedule,
    espa_predict_fn,
    glm_mad,
    glm_predict_fn,
    map_espa,
    map_glm,
    map_invertible_penalty,
    map_oracle_grid,
)
from .metrics import WeightedMetric, accuracy, auc, weighted_sqdist
from .modelio import load_model, model_from_doc, model_to_doc, save_model, with_standardizer
from .polytope import CellPolytope, build_cell_polytope, build_cell_polytope_unit
from .qp import Feasibility, QpResult, certify_feasibility, solve_qp
from .swissroll import SwissRollSpec, gen_swiss_roll

__version__ = "0.1.0"
