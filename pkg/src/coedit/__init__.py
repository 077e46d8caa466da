"""Line-diff edit encoding, commit mining, editing-cost metrics, and a
multi-round auto-editing simulation harness."""

from .analysis import (
    CodeUnit,
    ImportGraph,
    ProjectIndex,
    SignatureDoc,
    UnitId,
    UsageSite,
    build_signature_doc,
    extract_units,
    find_usages,
    import_graph,
    normalize_code,
)
from .assembly import AssembledContext, Block, QueryOverflow, assemble, segment_references
from .encoding import (
    EditEntry,
    EditRegion,
    InputStream,
    InvalidDelete,
    MalformedOutput,
    OutputStream,
    RegionOutOfBounds,
    TargetEdit,
    apply_edit,
    enc_input,
    enc_output,
    parse_input,
    parse_output,
)
from .instances import (
    CompletionInstance,
    PriorChange,
    ProblemInstance,
    Provenance,
    read_instances,
    write_instances,
)
from .linediff import LineDiff, LineStatus, StatusedLine, line_diff
from .metrics import (
    EditCostReport,
    GainReport,
    KeystrokeParams,
    exact_match,
    keystroke_cost,
    levenshtein,
    lines_cost,
    total_gain,
)
from .mining import (
    DatasetStats,
    NotEligible,
    UnitChange,
    dataset_stats,
    diff_commit,
    make_completion_instances,
    make_instances,
    mine_repo,
    mine_repos,
    order_changes,
    synthesize_multiround,
)
from .oracles import (
    EchoRetrievalOracle,
    GroundTruthOracle,
    NullOracle,
    Oracle,
    OracleFailure,
    WireOracle,
    resolve_oracle,
)
from .simulation import (
    SimulationResult,
    Summary,
    aggregate,
    run_episode,
    run_simulation,
)
from .tokenizers import BpeTokenizer, SimpleTokenizer, load_tokenizer

__version__ = "0.1.0"
