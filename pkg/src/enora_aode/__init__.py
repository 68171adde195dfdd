"""AODE classification with multi-objective evolutionary feature selection."""
from .aode import (AodeModel, FrequencyCube, NbModel, build_cube, fit, fit_aode, fit_nb,
                   load_model, predict_aode, predict_nb, predict_proba, save_model,
                   smoothed_class_joint, smoothed_conditional)
from .dataset import (MISSING, AttributeSpec, Dataset, DatasetError, EmptyDatasetError,
                      FeatureMask, FoldPlan, ParseError, SchemaError, apply_discretization,
                      apply_mask, discretize, load_arff, load_csv, load_dataset, stratified_folds)
from .evaluation import (EvalReport, PipelineConfig, PredictionRecord, WtlSummary, accuracy,
                         benchmark_suite, cross_validate_pipeline, rmse, win_tie_loss,
                         zero_one_loss)
from .moea import (EvaluatorConfig, Individual, MoeaConfig, Objectives, ParetoResult,
                   crowding_distance, dominates, enora_rank, fast_nondominated_sort, run_moea,
                   select_final, slot_of)

__version__ = "0.1.0"
