# src/hodse/quadrature.py
"""
Gauss-Legendre meshes on panels, with optional geometric grading toward an
endpoint, and a doubling driver that stops when two successive refinements
agree.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import NumericError

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 16


@lru_cache(maxsize=32)
def _reference(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return leggauss(order)


def panel_mesh(a: float, b: float, panels: int, order: int = DEFAULT_ORDER):
    """
    Nodes and weights of ``panels`` equal Gauss-Legendre panels on [a, b].

    Returns
    -------
    nodes, weights : 1-D ndarray
    """
    y, w = _reference(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * y[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def graded_mesh(a: float, b: float, levels: int, order: int = DEFAULT_ORDER, *, toward: str = "left"):
    """
    Panels on [a, b] whose widths halve toward one endpoint.

    The innermost panel has width (b - a) 2^-levels; an integrable power
    singularity at that endpoint then loses only its innermost contribution.
    """
    y, w = _reference(order)
    fractions = np.concatenate([[0.0], 2.0 ** -np.arange(levels, -1, -1)])
    lo, hi = fractions[:-1], fractions[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = (mid[:, None] + half[:, None] * y[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    width = b - a
    if toward == "left":
        return a + width * t, width * wt
    if toward == "right":
        return b - width * t, width * wt
    raise ValueError(f"unknown grading side {toward}")


def integrate(
    integrand: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    tol: float = 1e-10,
    panels: int = 4,
    graded_levels: int = 0,
    order: int = DEFAULT_ORDER,
    max_doublings: int = 10,
) -> np.ndarray:
    """
    Integrate ``integrand`` over [a, b], doubling the panel count until two
    successive results agree to ``tol`` (absolute at unit scale).

    ``integrand`` maps the 1-D node array to an array whose last axis runs
    over nodes, so a batch of integrals is computed at once. With
    ``graded_levels`` > 0 the first panel is graded toward ``a``.
    """
    def once(p: int, levels: int) -> np.ndarray:
        if levels > 0:
            cut = a + (b - a) / p
            gn, gw = graded_mesh(a, cut, levels, order)
            un, uw = panel_mesh(cut, b, max(p - 1, 1), order)
            nodes, weights = np.concatenate([gn, un]), np.concatenate([gw, uw])
        else:
            nodes, weights = panel_mesh(a, b, p, order)
        return integrand(nodes) @ weights

    previous = once(panels, graded_levels)
    err = np.inf
    for _ in range(max_doublings):
        panels *= 2
        if graded_levels:
            graded_levels += 2
        current = once(panels, graded_levels)
        err = float(np.max(np.abs(current - previous) / np.maximum(1.0, np.abs(current))))
        if err <= tol:
            return current
        previous = current
    logger.debug("quadrature on [%g, %g] stalled at %d panels", a, b, panels)
    raise NumericError(f"quadrature on [{a:g}, {b:g}] did not converge to {tol:.1e}", achieved=err)
