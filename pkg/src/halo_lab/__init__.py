"""halo-lab: exact p-adic distribution modules, compact operators on them,
Fredholm determinants over boundary-annulus weight rings, Newton polygons,
slope factorizations, and reproducible slope experiments."""

__version__ = "0.1.0"

from .errors import HaloError  # noqa: F401
from .rings import (  # noqa: F401
    FP_LAURENT,
    LAMBDA_ETA,
    QP,
    R_ETA,
    BoundarySeriesElem,
    PadicScalar,
    PrimeConfig,
    ValuationResult,
    gauss_valuation,
    plog,
    specialize,
    teichmuller,
)
from .weights import (  # noqa: F401
    RadiusParam,
    WeightCharacter,
    WeightPoint,
    classical_point,
    mod_p_point,
)
from .distributions import (  # noqa: F401
    DenseOperatorMatrix,
    DistributionVec,
    MahlerFunction,
    inclusion_matrix,
    mult_by_p_pushforward,
)
from .iwahori import (  # noqa: F401
    MonoidElem,
    UpOperatorSpec,
    build_U,
    contraction_certificate,
    toy_up_spec,
)
from .fredholm import (  # noqa: F401
    EntireSeriesTrunc,
    NewtonPolygon,
    PolygonTail,
    RieszData,
    fredholm_det,
    lambda_sequence,
    newton_polygon,
    riesz_kernel,
    slope_factorize,
    slopes_at_point,
)
from .experiment import (  # noqa: F401
    ExperimentConfig,
    ExperimentReport,
    run_experiment,
)
