"""Foliated structure on a local leaf space: leaf volume and mean curvature.

A foliated manifold enters the computations only through its local quotient
chart together with the leaf dimension p and the leaf-volume profile
vol_L > 0.  The basic mean-curvature form is tied to the profile by
kappa_B = -d log vol_L, so that d vol_L + vol_L kappa_B = 0 holds exactly
whenever the closed-form logarithmic derivative is supplied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError
from .geometry import TransverseGeometry

__all__ = ["FoliatedStructure", "build_foliated_structure", "named_profile"]


@dataclass(frozen=True)
class FoliatedStructure:
    """Leaf dimension plus leaf-volume profile over the chart.

    ``vol`` maps chart points (..., q) to positive scalars (...,).
    ``dlog_vol``, when supplied, is the closed-form gradient of log(vol)
    as a covector field (..., q); the mean-curvature form is its negative.
    """

    leaf_dimension: int
    vol: Callable[[np.ndarray], np.ndarray]
    dlog_vol: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.leaf_dimension < 0:
            raise ConfigurationError(
                f"leaf_dimension: must be >= 0, got {self.leaf_dimension}"
            )

    @property
    def has_closed_form_kappa(self) -> bool:
        return self.dlog_vol is not None

    def vol_at(self, points: np.ndarray) -> np.ndarray:
        v = np.asarray(self.vol(np.asarray(points, dtype=float)), dtype=float)
        if np.any(v <= 0):
            raise ConfigurationError("vol profile: nonpositive sample encountered")
        return v

    def kappa_closed_form(self, points: np.ndarray) -> np.ndarray:
        """Mean-curvature covector -d log vol at chart points (closed form)."""
        if self.dlog_vol is None:
            raise ConfigurationError("no closed-form derivative for this profile")
        return -np.asarray(self.dlog_vol(np.asarray(points, dtype=float)), dtype=float)

    @staticmethod
    def trivial(leaf_dimension: int = 0) -> "FoliatedStructure":
        """Minimal foliation: vol_L = 1, kappa_B = 0."""
        return FoliatedStructure(
            leaf_dimension=leaf_dimension,
            vol=lambda b: np.ones(np.asarray(b).shape[:-1]),
            dlog_vol=lambda b: np.zeros(np.asarray(b).shape),
        )


def build_foliated_structure(
    geom: TransverseGeometry,
    leaf_dimension: int,
    vol: Callable[[np.ndarray], np.ndarray],
    dlog_vol: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    check_resolution: int = 16,
) -> FoliatedStructure:
    """Validate a profile against the chart and wrap it in a structure.

    Positivity is checked on a coarse lattice over the chart box; evaluation
    re-checks each sample, so a profile dipping below zero between lattice
    nodes still fails at use time.
    """
    struct = FoliatedStructure(leaf_dimension, vol, dlog_vol)
    axes = [
        np.linspace(lo, hi, check_resolution) for lo, hi in geom.chart_bounds
    ]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    struct.vol_at(mesh)   # raises ConfigurationError on a nonpositive sample
    return struct


def named_profile(name: str, leaf_dimension: int, params: dict | None = None
                  ) -> FoliatedStructure:
    """Named leaf-volume profiles available from experiment configs.

    * ``constant``      vol = 1
    * ``cosine_offset`` vol = c + cos(b_axis), params: offset c (default 2),
                        axis (default 0)
    * ``warped_sine``   vol = exp(p * amp * sin(b_axis)), params: amplitude
                        (default 0.1), axis (default 0)
    """
    params = dict(params or {})
    axis = int(params.pop("axis", 0))
    if name == "constant":
        if params:
            raise ConfigurationError(f"profile constant: unknown params {params}")
        return FoliatedStructure.trivial(leaf_dimension)
    if name == "cosine_offset":
        c = float(params.pop("offset", 2.0))
        if params:
            raise ConfigurationError(f"profile cosine_offset: unknown params {params}")
        if c <= 1.0:
            raise ConfigurationError(f"offset: must exceed 1 for positivity, got {c}")

        def vol(b, c=c, axis=axis):
            return c + np.cos(np.asarray(b)[..., axis])

        def dlog(b, c=c, axis=axis):
            b = np.asarray(b, dtype=float)
            out = np.zeros(b.shape)
            out[..., axis] = -np.sin(b[..., axis]) / (c + np.cos(b[..., axis]))
            return out

        return FoliatedStructure(leaf_dimension, vol, dlog)
    if name == "warped_sine":
        amp = float(params.pop("amplitude", 0.1))
        if params:
            raise ConfigurationError(f"profile warped_sine: unknown params {params}")
        p = leaf_dimension

        def vol(b, amp=amp, p=p, axis=axis):
            return np.exp(p * amp * np.sin(np.asarray(b)[..., axis]))

        def dlog(b, amp=amp, p=p, axis=axis):
            b = np.asarray(b, dtype=float)
            out = np.zeros(b.shape)
            out[..., axis] = p * amp * np.cos(b[..., axis])
            return out

        return FoliatedStructure(leaf_dimension, vol, dlog)
    raise ConfigurationError(f"profile: unknown name {name!r}")
