"""Three-phase experiment lifecycle, configuration, auditing and reporting."""

from fairpipe.experiment.audit import AuditReport, Trace, Violation, isolation_audit
from fairpipe.experiment.config import ExperimentConfig, check_config, expand, validate_config
from fairpipe.experiment.report import format_csv, outcome_rows, provenance
from fairpipe.experiment.runner import (
    CandidateOutcome,
    Experiment,
    RunFailure,
    RunOutcome,
    run,
    run_matrix,
)
from fairpipe.experiment.selectors import ModelSelector, make_selector

__all__ = [
    "AuditReport",
    "CandidateOutcome",
    "Experiment",
    "ExperimentConfig",
    "ModelSelector",
    "RunFailure",
    "RunOutcome",
    "Trace",
    "Violation",
    "check_config",
    "expand",
    "format_csv",
    "isolation_audit",
    "make_selector",
    "outcome_rows",
    "provenance",
    "run",
    "run_matrix",
    "validate_config",
]
