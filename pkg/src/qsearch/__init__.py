"""Simulation and numerical-analysis toolkit for noisy active search over
the unit cube, where the response channel's noise level scales with the
queried region's measure.

Layers, bottom up: channels (parametric families and sampling),
infodensity (score tables), capacity (optimal input fractions and
dispersion), asymptotics (second-order closed forms), nonadaptive and
adaptive (the two search procedures), bounds (exact non-asymptotic
brackets), harness (Monte Carlo experiments and figure data), cli.
"""

from .adaptive import (AdaptiveConfig, AdaptiveOutcome, adaptive_design_bounds,
                       dropout_session, mismatched_capacity, run_adaptive_session,
                       uniform_info_bound)
from .asymptotics import (LogWindow, MiFlavor, ResolutionMode, SecondOrderQuery,
                          adaptive_resolution_lb, adaptivity_gain_lb, gaussian_cdf,
                          gaussian_quantile, invert_queries, joint_resolution,
                          mi_resolution, phase_transition_rate, separate_resolution)
from .bounds import (BoundMode, SumDistribution, achievability_bound, converse_bound,
                     default_eta, distribution_quantile, exact_sum_cdf,
                     sum_distribution)
from .capacity import (CapacityReport, capacity, dispersion, mean_info_density,
                       third_abs_moment, variance_info_density)
from .channels import (ERASURE, ChannelKind, ChannelSpec, bec, bsc,
                       continuity_constant, fixed, sample_output,
                       sample_output_indices, transition_matrices,
                       transition_matrix, transition_prob, z_channel)
from .errors import ResourceLimitError
from .harness import (ExperimentMode, ExperimentSpec, ExperimentSummary, FigureTable,
                      MarginRule, ResolutionChoice, choose_resolution_m,
                      figure_series, run_adaptive_batch, run_experiment,
                      summaries_to_csv, wilson_interval)
from .infodensity import (InfoDensityTable, info_density, info_density_table,
                          output_marginal, sequence_info_density)
from .nonadaptive import (Codebook, TrialOutcome, bin_center, bin_index, decode,
                          flatten_index, generate_codebook, run_trial,
                          unflatten_index)
from .rng import SEED_MIX_CONSTANTS, mix_seed, splitmix64, stream, trial_stream

__version__ = "0.1.0"
