from hopfstraight.fibration._structures import LinearJ, OrientedPlane, TwistedJ  # noqa: I100
from hopfstraight.fibration._sections import PerturbationSection, SectionTerm, section_terms
from hopfstraight.fibration._kinds import (
    BaseChart,
    Fibration,
    conjugated,
    direct_sum,
    fiber_circle,
    fiber_through,
    hopf,
    perturbed_hopf,
    plane_at,
    plane_of_chart,
    pseudocomplex_structure,
)
from hopfstraight.fibration._validation import (
    ValidationReport,
    admissible_amplitude,
    validate_fibration,
    validate_twisted,
)
from hopfstraight.fibration._specfile import FibrationSpec, build_fibration, dump_spec, load_spec, parse_spec


__all__ = (
    "BaseChart",
    "Fibration",
    "FibrationSpec",
    "LinearJ",
    "OrientedPlane",
    "PerturbationSection",
    "SectionTerm",
    "TwistedJ",
    "ValidationReport",
    "admissible_amplitude",
    "build_fibration",
    "conjugated",
    "direct_sum",
    "dump_spec",
    "fiber_circle",
    "fiber_through",
    "hopf",
    "load_spec",
    "parse_spec",
    "perturbed_hopf",
    "plane_at",
    "plane_of_chart",
    "pseudocomplex_structure",
    "section_terms",
    "validate_fibration",
    "validate_twisted",
)
