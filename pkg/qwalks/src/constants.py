class Method:
    """How double contour integrals are evaluated."""

    QUADRATURE = "quadrature"
    RESIDUES = "residues"


class Sampler:
    """How one step of the walks is sampled."""

    AUTO = "auto"
    ENUMERATION = "enumeration"
    DETERMINANT = "determinant"


class Suite:
    """Names of the validation suites."""

    STOCHASTICITY = "stochasticity"
    EIGENFUNCTION = "eigenfunction"
    GIBBS = "gibbs"
    KARLIN_MCGREGOR = "karlin_mcgregor"
    CORRELATIONS = "correlations"
    LOZENGE = "lozenge"
    KERNEL_CONVERGENCE = "kernel_convergence"
    RESIDUE = "residue"
    PARTICLE_COUNT = "particle_count"
    BULK = "bulk"
    FROZEN_BOUNDARY = "frozen_boundary"
    BETA = "beta"
    TILINGS = "tilings"


# significant digits for every float written to CSV, JSON or SVG
SIGNIFICANT_DIGITS = 12
