"""Stabilization-free virtual element method on polygonal meshes.

First-order advection-diffusion-reaction solver whose local bilinear form
uses only polynomial projections (gradients of harmonic polynomials), with
no stabilization term, plus the classical stabilized scheme as comparator,
a spectral stability audit, and convergence-study tooling.
"""

from .analysis import (
    ConvergenceRecord,
    SpectralAudit,
    audit_catalog,
    convergence_study,
    error_norms,
    fit_rates,
    jacobi_singular_values,
    spectral_audit,
    write_audit_csv,
    write_convergence_csv,
)
from .element import (
    LocalElementMatrices,
    ell_rule,
    sfvem_local,
    standard_vem_local,
)
from .errors import (
    DegenerateElementError,
    MeshFormatError,
    MeshGenerationError,
    MeshIndexError,
    MeshTopologyError,
    QuadratureError,
    SfvemError,
    SingularGramError,
    SingularSystemError,
)
from .mesh import (
    CatalogPolygon,
    MeshQualityReport,
    PolyMesh,
    catalog_polygons,
    generate_distorted_grid,
    generate_voronoi,
    quality_report,
    read_mesh,
    write_mesh,
)
from .poly import (
    HarmonicBasis,
    Poly2,
    ScaledFrame,
    build_benchmark_coefficients,
    bubble_problem,
    harmonic_basis,
    harmonic_gradients,
    manufactured_problem,
    poisson_problem,
)
from .problem import ProblemSpec
from .projectors import (
    ElementDofs,
    HGradProjection,
    NablaProjection,
    hgrad_gram,
    hgrad_projection,
    nabla_projection,
    pi0_projection,
)
from .quadrature import EdgeRule, PolygonRule, edge_integral, gauss_legendre, polygon_rule
from .system import (
    DiscreteSolution,
    GlobalSystem,
    assemble,
    solve,
    write_solution_csv,
)

__version__ = "0.1.0"

__all__ = [
    "CatalogPolygon",
    "ConvergenceRecord",
    "DegenerateElementError",
    "DiscreteSolution",
    "EdgeRule",
    "ElementDofs",
    "GlobalSystem",
    "HGradProjection",
    "HarmonicBasis",
    "LocalElementMatrices",
    "MeshFormatError",
    "MeshGenerationError",
    "MeshIndexError",
    "MeshQualityReport",
    "MeshTopologyError",
    "NablaProjection",
    "Poly2",
    "PolyMesh",
    "PolygonRule",
    "ProblemSpec",
    "QuadratureError",
    "ScaledFrame",
    "SfvemError",
    "SingularGramError",
    "SingularSystemError",
    "SpectralAudit",
    "assemble",
    "audit_catalog",
    "build_benchmark_coefficients",
    "bubble_problem",
    "catalog_polygons",
    "convergence_study",
    "edge_integral",
    "ell_rule",
    "error_norms",
    "fit_rates",
    "gauss_legendre",
    "generate_distorted_grid",
    "generate_voronoi",
    "harmonic_basis",
    "harmonic_gradients",
    "hgrad_gram",
    "hgrad_projection",
    "jacobi_singular_values",
    "manufactured_problem",
    "nabla_projection",
    "pi0_projection",
    "poisson_problem",
    "polygon_rule",
    "quality_report",
    "read_mesh",
    "sfvem_local",
    "solve",
    "spectral_audit",
    "standard_vem_local",
    "write_audit_csv",
    "write_convergence_csv",
    "write_mesh",
    "write_solution_csv",
]
