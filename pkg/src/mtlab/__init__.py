"""mtlab: mass-transport, local-limit, and thin/thick geometry audits.

Subpackages cover rooted-graph combinatorics (graphs_core, mass_transport,
schreier_irs, bs_limits), point processes (poisson_rooting), metric-space
machinery (chabauty_metric), constant-curvature geometry (model_geometry,
flows_unimodularity, sasaki_metric), and a CLI front end (cli).
"""

__version__ = "0.1.0"

__all__ = [
    "graphs_core",
    "mass_transport",
    "schreier_irs",
    "bs_limits",
    "poisson_rooting",
    "chabauty_metric",
    "model_geometry",
    "flows_unimodularity",
    "sasaki_metric",
    "cli",
]
