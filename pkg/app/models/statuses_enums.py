from enum import Enum

class CommandEnum(str, Enum):
    """
    Enum representing the CLI commands.
    Values:
        - identify: population bounds B_I and T_{B_I} for a simulated design
        - test: single point test (beta, or beta with a t-vector)
        - confset: confidence set for beta on a data file
        - joint: joint confidence set for beta and T(y)
        - montecarlo: rejection frequencies over seeded replications
        - empirical: confidence sets for an empirical data file, optionally with T(y) bands
        - fetch_data: download the bundled dataset
    """
    identify = "identify"
    test = "test"
    confset = "confset"
    joint = "joint"
    montecarlo = "montecarlo"
    empirical = "empirical"
    fetch_data = "fetch-data"

class InstrumentModeEnum(str, Enum):
    """
    Enum representing how the instrumental functions are enumerated.
    Values:
        - mixed: hypercube cells on the continuous block times exact discrete matches
        - finite_support: exact matches on the full covariate support (all covariates discrete)
        - all_cube: hypercube cells on every coordinate
    """
    mixed = "mixed"
    finite_support = "finite_support"
    all_cube = "all_cube"

class ModelIdEnum(str, Enum):
    """
    Enum representing the simulated designs.
    """
    model1 = "model1"
    model2 = "model2"
    model3 = "model3"
    dgp1 = "dgp1"
    dgp2 = "dgp2"

class SupportEnum(str, Enum):
    """
    Enum representing the law of X1 in the simulated designs.
    Values:
        - i: {-2.5, -2.0, ..., 2.5}
        - ii: {-5, -2.5, ..., 5}
        - iii: {-5, -4.8, ..., 5}
        - normal: continuous N(0, variance)
    """
    i = "i"
    ii = "ii"
    iii = "iii"
    normal = "normal"

class BnRuleEnum(str, Enum):
    baseline = "baseline"
    andrews_shi = "andrews_shi"

class KappanRuleEnum(str, Enum):
    censoring = "censoring"
    plain = "plain"
    andrews_shi = "andrews_shi"

class DrawModeEnum(str, Enum):
    """
    Enum representing how Gaussian draws are shared across grid points.
    Values:
        - common: the same draws at every grid point
        - fresh: an independent counter-based stream per grid point
    """
    common = "common"
    fresh = "fresh"

class EnvelopeStatusEnum(str, Enum):
    """
    Enum representing the state of the lower envelope of T_{B_I}(y) at one y.
    """
    finite = "finite"
    unbounded_below = "unbounded_below"
    above_grid = "above_grid"
    empty = "empty"
