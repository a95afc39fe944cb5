"""Grade-trajectory HMM toolkit.

Compresses per-semester course-grade records into discrete
performance-level trajectories with a trained hidden Markov model, and
analyzes how trajectory shapes relate to halting outcomes.  A synthetic
cohort generator with known ground truth backs every statistical claim.
"""

from .analysis import (
    HaltRateTable,
    LevelTrajectory,
    Outcome,
    StudentRecord,
    TrajectoryClass,
    Verdict,
    chi_squared,
    classify,
    decode_cohort,
    halt_label,
    halt_rate_table,
    level_mix_table,
    pattern_halt_rates,
    pattern_key,
    state_level_order,
    switch_type_distribution,
)
from .errors import (
    AcadtrajError,
    ConfigError,
    DegenerateEmissionError,
    DomainError,
    DuplicateError,
    EmptyBucketError,
    EmptyCorpusError,
    ImpossibleObservationError,
    InsufficientDataError,
    NonErgodicError,
    ParseError,
    UndefinedGpaError,
    UnsupportedError,
)
from .estimator import TrajectoryLevelHMM
from .grades import (
    GradeTuple,
    ObservationVocabulary,
    RawSemesterGrades,
    VocabularyMode,
    build_vocabulary,
    clip,
    decode,
    encode,
    full_vocabulary,
    lift,
    parse_tuple_string,
)
from .hmm import (
    ForwardBackward,
    HmmModel,
    forward_backward,
    log_likelihood,
    parameter_count,
    sample,
    stationary_distribution,
    viterbi,
)
from .initialization import (
    PoissonRates,
    assemble_initial_model,
    estimate_rates,
    ev_grades,
    initial_pi0,
    initial_transition,
    poisson_emission,
)
from .levels import (
    BUCKET_EDGES,
    CgpaBucketing,
    GradeDistribution,
    LevelScheme,
    bhattacharyya_angle,
    bucket_cohort,
    bucket_of,
    cumulative_gpa,
    direct_level_trajectory,
    grade_distribution,
    merge_levels,
)
from .model_io import ModelBundle, ingest, load_model, save_model
from .synth import (
    GroupModel,
    LengthModel,
    RecoveryReport,
    SynthCohort,
    SynthConfig,
    SynthStudent,
    generate,
    perturb_model,
    recovery_experiment,
)
from .training import TrainingConfig, TrainingReport, align_states, apply_permutation, baum_welch

__version__ = "0.1.0"
