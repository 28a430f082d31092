"""Conformal-radius laws of loop-ensemble loops and the checks built on them.

Submodules
----------
exact_formulas
    Closed-form moments of the conformal radius and the touching probability.
exponents
    Nested-path and nested-loop exponents as roots, plus the large-deviation dual.
radii_laws
    Residue-series densities of the four radius laws and samplers for them.
cascade
    Monte Carlo and renewal-convolution estimates of the cascade functional.
levy_verify
    Stable-subordinator moments, forested-length law and integral identities.
radial_loewner
    Radial Loewner flow, the angular driving diffusion and its first passage.
cli, acceptance
    Command-line entry point and the acceptance suite.
"""

__version__ = "0.1.0"

from .exact_formulas import (  # noqa: E402
    DomainError,
    KappaContext,
    as_context,
    cr_moment_nontouching,
    cr_moment_touching,
    cr_ratio,
    kappa0_argmax,
    ssw_moment,
    touching_probability,
    wtd_moment,
)
from .exponents import closed_form_np, root_nl, root_np  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = [
    "BACKEND",
    "DomainError",
    "KappaContext",
    "as_context",
    "closed_form_np",
    "cr_moment_nontouching",
    "cr_moment_touching",
    "cr_ratio",
    "kappa0_argmax",
    "root_nl",
    "root_np",
    "ssw_moment",
    "touching_probability",
    "wtd_moment",
]
