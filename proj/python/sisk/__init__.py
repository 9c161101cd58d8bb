"""SIS^K pair approximation, thresholds and Gillespie simulation on networks.

Node sub-states follow one convention everywhere: index x in 0..K-1 is the
susceptible sub-state S^(x+1) and index K is the infectious state.
"""

from ._sisk import (
    Graph,
    InputError,
    NumericalError,
    auto_gamma,
    generate_gnp,
    generate_random_regular,
    inter_infection_times,
    load_edge_list,
    mean_excess_degree,
    mean_inter_infection_time,
    pair_generator,
    pair_stationary,
    psi,
    quasistationary,
    save_edge_list,
    simulate,
    solve_mean_field,
    solve_pair_k,
    solve_regular_scalar,
    spectral_radius,
    survival_function,
    threshold_bisect,
    threshold_mf,
    threshold_pair,
    threshold_pair_regular_k2,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
