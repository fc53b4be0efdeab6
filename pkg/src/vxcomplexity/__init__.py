"""Economic complexity from value-added exports.

Input-output ingestion, value-added export decomposition, RCA and weighted
adjacency matrices, fitness/complexity and ECI, and fixed-effects growth
regressions.
"""

__version__ = "0.1.0"

from .adjacency import (
    BinaryAdjacency,
    ExportMatrix,
    WeightedAdjacency,
    binarize,
    rca,
    weighted_adjacency,
)
from .iot import (
    AuxiliarySeries,
    CountryRegistry,
    IOTable,
    SectorRegistry,
    load_auxiliary,
    load_iot,
    load_iot_years,
    write_iot,
)
from .metrics import (
    EciResult,
    FitnessResult,
    RankEntry,
    eci_eigenvector,
    eci_reflections,
    fitness,
    rank,
    reflection_sequence,
)
from .panel import (
    PanelDataset,
    RegressionResult,
    build_panel,
    fit_fd_dynamic,
    fit_within_fe,
    unconditional_correlation,
)
from .vax import LeontiefSystem, VaxMatrix, build_leontief, compute_vax, vax_accounting_report
