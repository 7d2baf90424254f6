"""gridcf: DC-OPF infeasibility detection and counterfactual restoration."""

from .caseio import (Branch, Bus, Generator, NetworkCase, builtin_case_names,
                     builtin_case_text, case_from_json, case_to_json,
                     incident_line_capacity, parse_case, parse_case_file)
from .cfx import (CfConfig, CfConstraints, CfOption, CounterfactualSet,
                  ObjectiveBreakdown, cf_objective, distance, dpp_diversity,
                  generate_counterfactuals, hinge_yloss, sparsify)
from .datagen import (Dataset, DatasetSplit, admissible, generate_dataset,
                      load_dataset, sample_profile, save_dataset, split_dataset)
from .dcopf import (DispatchSolution, FeasibilityLabel, RestorationResult,
                    build_dcopf, check_feasibility, restore_baseline,
                    solve_dispatch)
from .learn import (FfnnModel, Metrics, TreeModel, evaluate, load_model, logit,
                    predict_proba, save_model, train_ffnn, train_tree)
from .lpcore import LinearProgram, LpOutcome, LpStatus, lp_is_feasible, solve_lp
from .pipeline import (ExperimentReport, ValidatedOptions, perturbation_stats,
                       restore_with_validation, run_experiment)

__version__ = "0.1.0"
