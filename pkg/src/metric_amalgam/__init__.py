"""
Metric Amalgam - exact finite metric spaces

Main exports:
- FinMetric, validate: exact metric spaces with structured validation errors
- gluing and interpolation: amalgamations, bridged doubles and metric interpolation
- transmissible parameters: defects, anti-property witnesses and verdicts
- genericity: singular witnesses, block spaces, perturbation and richness search
"""
from .amalgam_logic.core import (
    EmbeddingMode,
    FinMetric,
    PseudoFinMetric,
    check_metric,
    diam,
    kuratowski,
    min_cap,
    min_sep,
    restrict,
    scale,
    sup_dist,
    validate,
)

from .amalgam_logic.gluing import (
    SubsetFamily,
    amalgam_disjoint,
    amalgam_shared,
    bridge_double,
    disjoint_sum,
    support_gluing,
)

from .amalgam_logic.interpolation import (
    InterpolationBuilder,
    interpolate,
    interpolate_single,
)

from .amalgam_logic.transmissible import (
    DefectReport,
    Verdict,
    Witness,
    anti_witness,
    doubling_check,
    satisfies_property,
    ud_modulus,
)

from .amalgam_logic.inequalities import (
    check_inequality,
    hyperbolicity_delta,
    ptolemy_defect,
    subhomogeneity_probe,
    ultrametric_defect,
)

from .amalgam_logic.cycle_condition import cycl0_check

from .amalgam_logic.genericity import (
    RichnessQuery,
    best_scale,
    block_space,
    min_distortion,
    perturb_to_anti,
    richness_search,
    singular_witness,
)

from .amalgam_logic.config import Cycl0Config, RunConfig, ScanConfig
from .amalgam_logic.errors import ErrorCode, MetricError
from .amalgam_logic.registry import ParameterFactory

from .utils.logging.amalgam_logger import setup_logger

__version__ = "0.1.0"
__license__ = "MIT"

__all__ = [
    "EmbeddingMode",
    "FinMetric",
    "PseudoFinMetric",
    "check_metric",
    "diam",
    "kuratowski",
    "min_cap",
    "min_sep",
    "restrict",
    "scale",
    "sup_dist",
    "validate",
    "SubsetFamily",
    "amalgam_disjoint",
    "amalgam_shared",
    "bridge_double",
    "disjoint_sum",
    "support_gluing",
    "InterpolationBuilder",
    "interpolate",
    "interpolate_single",
    "DefectReport",
    "Verdict",
    "Witness",
    "anti_witness",
    "doubling_check",
    "satisfies_property",
    "ud_modulus",
    "check_inequality",
    "hyperbolicity_delta",
    "ptolemy_defect",
    "subhomogeneity_probe",
    "ultrametric_defect",
    "cycl0_check",
    "RichnessQuery",
    "best_scale",
    "block_space",
    "min_distortion",
    "perturb_to_anti",
    "richness_search",
    "singular_witness",
    "Cycl0Config",
    "RunConfig",
    "ScanConfig",
    "ErrorCode",
    "MetricError",
    "ParameterFactory",
    "setup_logger",
    "__version__",
]
