"""Demographic bias audits for vision-language embedding spaces."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402,F401
    AlignmentError,
    ComparabilityError,
    DataError,
    DegenerateDistributionError,
    DegenerateVectorError,
    DimError,
    DomainError,
    EmptyRetrievalError,
    FormatError,
    IoError,
    SchemaError,
    StateError,
    VlbiasError,
)
from .store import (  # noqa: E402,F401
    DemographicRecord,
    EmbeddingSet,
    Gender,
    LabeledEmbeddings,
    Race,
    l2_normalize,
    load_labeled,
    load_metadata,
    read_embeddings,
    write_embeddings,
    write_labeled,
    write_metadata,
)
from .taxonomy import (  # noqa: E402,F401
    Caption,
    Category,
    TaxonomyCategory,
    TaxonomyWord,
    WordKind,
    load_default_taxonomy,
    load_taxonomy,
    render_all,
    render_caption,
)
from .metrics import (  # noqa: E402,F401
    GroupDistribution,
    GroupMask,
    casc,
    group_distribution,
    group_mask,
    normalized_entropy,
    relevance_score,
    similarity_vector,
    topk,
)
from .audit import (  # noqa: E402,F401
    CategoryAudit,
    ComparisonTable,
    IntersectionalGrid,
    ModelAuditReport,
    WordAudit,
    compare_models,
    intersectional_grid,
    load_report,
    run_audit,
    run_category_audit,
    run_word_audit,
    top_word_per_group,
    write_report_csv,
    write_report_json,
)
from .corpus import (  # noqa: E402,F401
    DEFAULT_LEXICON,
    CorpusStats,
    GenderSignal,
    PronounLexicon,
    assign_gender,
    proportions,
    scan_captions,
    scan_paths,
    tokenize,
)
