from hopfstraight.straighten._hinge import FiberSample, Hinge, certify_hinge, find_hinge, sample_fibers  # noqa: I100
from hopfstraight.straighten._map import (
    CertificationReport,
    SphereMap,
    build_map,
    pointwise_map,
    slice_point,
    straight_map_matrix,
    verify_map,
)
from hopfstraight.straighten._homotopy import BaseHomotopy, HomotopySample, base_homotopy
from hopfstraight.straighten._locus import LocusPoint, hyperplane_locus


__all__ = (
    "BaseHomotopy",
    "CertificationReport",
    "FiberSample",
    "Hinge",
    "HomotopySample",
    "LocusPoint",
    "SphereMap",
    "base_homotopy",
    "build_map",
    "certify_hinge",
    "find_hinge",
    "hyperplane_locus",
    "pointwise_map",
    "sample_fibers",
    "slice_point",
    "straight_map_matrix",
    "verify_map",
)
