"""fairaudit: group-fairness auditing for scored binary-outcome populations.

Computes calibration and error-rate metrics per group, derives decision
thresholds from a four-outcome value profile, and demonstrates on exact
fixtures that calibration plus unequal base rates forces unequal false
positive rates, and that equalizing them costs expected value.
"""

__version__ = "0.1.0"

from .domain import (  # noqa: F401
    AuditError,
    BinScheme,
    ConfusionMatrix,
    Decision,
    OutcomeLabel,
    OutcomeValues,
    Population,
    Record,
    SYMMETRIC_VALUES,
    ThresholdPolicy,
    ValidationError,
    bin_of,
    validate_population,
)
from .metrics import (  # noqa: F401
    CalibrationCurve,
    GroupMetrics,
    base_rate,
    calibration_curve,
    calibration_gap,
    chance_miscalibration_bound,
    confusion_for_group,
    false_negative_rate,
    false_positive_rate,
    group_metrics,
    positive_predictive_value,
)
from .decision import (  # noqa: F401
    DecisionEV,
    PolicyAssessment,
    apply_policy,
    expected_values,
    optimal_threshold,
    policy_expected_disvalue,
)
from .parity import (  # noqa: F401
    EqualizationResult,
    ImpossibilityVerdict,
    LOWER_OTHERS,
    RAISE_OTHERS,
    equalize_fpr,
    fair_lottery,
    impossibility_check,
    individual_error_risk,
)
from .scenarios import (  # noqa: F401
    SCENARIO_NAMES,
    ScenarioSpec,
    build_scenario,
    check_scenario,
    random_calibrated_population,
)
from .ingest import DatasetConfig, IngestError, export_csv, ingest_csv  # noqa: F401
