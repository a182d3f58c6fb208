"""
Factory for transmissible parameters.

Maps the names used on the command line to configured parameter instances.
"""

from typing import Any, Callable

from loguru import logger

from metric_amalgam.amalgam_logic.config import Cycl0Config, ScanConfig
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.amalgam_logic.genericity import RichnessParameter
from metric_amalgam.amalgam_logic.inequalities import (
    HyperbolicityParameter,
    MetricInequalityParameter,
    make_descriptor,
)
from metric_amalgam.amalgam_logic.transmissible import (
    DoublingParameter,
    TransmissibleParameter,
    UniformDisconnectednessParameter,
)


class ParameterFactory:
    """
    Factory for TransmissibleParameter instances.

    Centralizes parameter creation so the scan and solver settings reach every
    instance the same way.
    """

    NAMES = ("doubling", "ud", "ultrametric", "ptolemy", "hyperbolicity", "cycl0", "inequality", "richness")

    def __init__(self, scan_config: ScanConfig | None = None, cycl0_config: Cycl0Config | None = None):
        """
        Initialize the factory.

        :param scan_config: Tuple scan limits passed to every parameter.
        :param cycl0_config: Solver settings for the cycle condition.
        """
        self._scan_config = scan_config or ScanConfig()
        self._cycl0_config = cycl0_config or Cycl0Config()
        self._builders: dict[str, Callable[..., TransmissibleParameter]] = {
            "doubling": lambda **_: DoublingParameter(self._scan_config),
            "ud": lambda **_: UniformDisconnectednessParameter(self._scan_config),
            "hyperbolicity": lambda **_: HyperbolicityParameter(self._scan_config),
            "richness": lambda **_: RichnessParameter(scan_config=self._scan_config),
        }

    def create(self, name: str, **options: Any) -> TransmissibleParameter:
        """
        Create a parameter by name.

        :param name: One of ParameterFactory.NAMES.
        :param options: Descriptor options: m for cycl0; expr, arity, degree for inequality.
        :return: Configured parameter.
        :raises MetricError: UnknownParameter.
        """
        if name in self._builders:
            parameter = self._builders[name](**options)
        elif name in ("ultrametric", "ptolemy", "cycl0", "inequality"):
            descriptor = make_descriptor(name, self._cycl0_config, **options)
            parameter = MetricInequalityParameter(descriptor, self._scan_config)
        else:
            raise MetricError(ErrorCode.UNKNOWN_PARAMETER, f"Unknown parameter: {name!r}",
                              name=name, known=list(self.NAMES))
        logger.debug(f"Created parameter {parameter.describe()}")
        return parameter

    def parse_q(self, parameter: TransmissibleParameter, text: str | None) -> Any:
        """
        Parse an index for a parameter; None selects the first enumerated index.
        """
        if text is None:
            return next(iter(parameter.q_enum()))
        return parameter.parse_q(text)
