# src/hodse/builder.py
import logging
from typing import Optional, Union

from .errors import InputError
from .functional import FunctionalModel, TableBase, make_custom, make_polynomial, make_separable
from .parser import FunctionalSpec, parse_functional, polynomial_coefficients, read_table
from .smoothing import FrequencyProfile, SmoothedFunctional, flat_profile, tuning

logger = logging.getLogger(__name__)


class ModelBuilder:
    """
    Turns a functional spec string into a FunctionalModel over R^d.

    Smoothed separable bases take their bandwidth from, in order: the
    ``:h=`` suffix, ``bandwidth``, or the tuning rule at ``sigma_n``.
    Without any of these the base stays unsmoothed.
    The smoothing profile defaults to ``flat_profile``.
    """

    def __init__(self, spec: Union[str, FunctionalSpec], d: int, *,
                 bandwidth: Optional[float] = None, sigma_n: Optional[float] = None,
                 profile: Optional[FrequencyProfile] = None):
        self.spec = parse_functional(spec) if isinstance(spec, str) else spec
        self.d = d
        self.bandwidth = bandwidth
        self.sigma_n = sigma_n
        self.profile = profile or flat_profile()
        self.model: Optional[FunctionalModel] = None

    def _resolve_bandwidth(self) -> Optional[float]:
        if self.spec.bandwidth is not None:
            return self.spec.bandwidth
        if self.bandwidth is not None:
            return self.bandwidth
        if self.sigma_n is not None:
            rule = tuning(self.d, self.sigma_n)
            logger.info("bandwidth from tuning rule: h=%.6g (d=%d, sigma_n=%.4g)",
                        rule.h_theory, self.d, self.sigma_n)
            return rule.h_theory
        return None

    def build(self) -> FunctionalModel:
        spec = self.spec
        if spec.family == "poly":
            self.model = make_polynomial(polynomial_coefficients(spec.expression, self.d), self.d)
        elif spec.family == "fn":
            if self.d != 1:
                raise InputError(f"fn:{spec.name} is one-dimensional but data has d={self.d}")
            self.model = make_custom(spec.name)
        else:
            table = None
            if spec.table_path is not None:
                table = TableBase(*read_table(spec.table_path))
            smoothing = None
            if spec.base.needs_smoothing:
                h = self._resolve_bandwidth()
                if h is not None:
                    smoothing = SmoothedFunctional(spec.base, h, p=spec.p or 1.0, profile=self.profile)
            self.model = make_separable(spec.base, self.d, smoothing, p=spec.p, table=table)
        logger.debug("built %s", self.model.describe())
        return self.model
