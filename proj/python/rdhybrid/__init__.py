from ._rdhybrid import (
    ModelError,
    NonPositiveDenominator,
    UnresolvableReaction,
    __version__,
    collins_kimball,
    contact_survival,
    g3,
    h_star,
    meso_rate,
    partition,
    pde_survival,
    resolution_w,
    simulate,
)

__all__ = [
    "ModelError",
    "NonPositiveDenominator",
    "UnresolvableReaction",
    "__version__",
    "collins_kimball",
    "contact_survival",
    "g3",
    "h_star",
    "meso_rate",
    "partition",
    "pde_survival",
    "resolution_w",
    "simulate",
]
