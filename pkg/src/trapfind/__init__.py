"""trapfind: inscribed-trapezoid search for embeddings of R^d.

The package constructs explicit anticommuting orthogonal matrix families,
evaluates chord-based degeneracy test maps for user-supplied embeddings,
hunts for their zeros with a multistart damped least-squares solver,
extracts and independently validates trapezoid / collinear-triple
certificates, and computes exact lower bounds for k-regular maps.
"""

from .bounds import (
    ALL_RULES,
    BoundEntry,
    BoundReport,
    compare_table,
    compute_bound,
    render_csv,
    render_text,
)
from .chords import (
    ConfigTriple,
    ProbePoint,
    chord_difference,
    chord_difference_extended,
    chord_difference_jacobian,
    load_point,
    sample_probe_point,
    save_point,
    weighted_chord,
)
from .embeddings import (
    AffineEmbedding,
    CentralProjection,
    ComposedEmbedding,
    Embedding,
    EmbeddingSpecError,
    GraphEmbedding,
    LiftEmbedding,
    MomentCurve,
    PolynomialEmbedding,
    ProjectionDomainError,
    RegularityReport,
    check_affine_regular,
    check_k_regular,
    embedding_digest,
    inverse_stereographic,
    lift_to_linear,
    load_embedding,
    parse_embedding,
    project_to_affine,
    save_embedding,
    vandermonde_det,
)
from .hurwitz_radon import (
    FamilyConstructionError,
    HRFamily,
    HurwitzRadonDecomposition,
    VARIANT_BILINEAR,
    VARIANT_TRILINEAR,
    bilinear_map,
    binary_ones,
    binomial_parity,
    build_family,
    decompose,
    load_family,
    save_family,
    shares_binary_one,
    sphere_exponents,
    trilinear_map,
    verify_family,
)
from .search import (
    COLLINEAR_TRIPLE,
    TRAPEZOID,
    Certificate,
    FailureReport,
    InvalidCertificateError,
    RefineResult,
    SearchOptions,
    ValidationReport,
    classify_quad,
    extract_certificate,
    load_certificate,
    refine,
    save_certificate,
    search,
    validate_certificate,
)

__version__ = "0.1.0"
