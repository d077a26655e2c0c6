"""Geometric Lorenz semiflow toolkit: certified non-convergent time averages.

A library and CLI that instantiate a concrete geometric Lorenz model and
mechanically execute the construction of section neighborhoods whose orbits
provably exhibit large oscillations of the running time average of a bump
observable, with machine-verifiable certificates.
"""

from .bigreal import BigInterval, BigReal
from .geometry import (
    BoxRegion,
    BoxSpec,
    SigmaPoint,
    box_membership,
    cusp_disjointness_margin,
    eval_beta,
    observable_g,
    return_map,
)
from .map1d import (
    HistoricPrefix,
    Itinerary,
    MapParams,
    alpha_derivative,
    birkhoff_average,
    branch_inverse,
    empirical_square_average,
    eval_alpha,
    find_period2,
    find_preimage_in,
    historic_prefix_1d,
    iterate_with_itinerary,
    pullback_interval,
    refine_J1,
    smallest_n0,
)
from .semiflow import (
    FlowParams,
    HybridOrbit,
    State3,
    advance_one_return,
    build_orbit,
    elapsed_time,
    exit_and_descent_times,
    linear_flow,
    time_in_region,
)
from .averaging import (
    TimeAverageSeries,
    average_series,
    detect_historic,
    integrate_g,
    time_average,
)
from .witness import (
    DeepeningChain,
    WitnessCertificate,
    WitnessResult,
    WitnessSettings,
    certificate_from_json,
    certificate_to_json,
    choose_sigma,
    construct_witness,
    deepen,
    dense_cover,
    verify_certificate,
)

__version__ = "0.1.0"
