"""Toolkit for mining, filtering and evaluating figurative-expression
translation pairs in parallel subtitle corpora."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    ContextWindow,
    Corpus,
    MinedCandidate,
    ProverbEntry,
    ScoredCandidate,
    SentencePair,
    load_bitext,
    load_proverbs,
    retrieve_context,
    save_bitext,
)
from .errors import (  # noqa: F401
    DataError,
    ModelError,
    ProtocolError,
    ProverbkitError,
    ValidationError,
)
from .metrics import (  # noqa: F401
    BleuConfig,
    ChrfConfig,
    MetricScore,
    chrf_pp,
    lcs_len,
    sentence_bleu,
    similarity_ratio,
)
from .miner import MiningConfig, containment_score, mine  # noqa: F401
from .filterpipe import (  # noqa: F401
    FilterConfig,
    filter_direction,
    fuse_scores,
    llm_qe_score,
    quantile_threshold,
    usage_filter,
)
from .modelclient import ModelClient, ModelClientConfig, cache_key  # noqa: F401
from .prompts import ChatTurn, PromptRequest, PromptTemplate, build_prompt  # noqa: F401
from .contamination import (  # noqa: F401
    ProbeSample,
    build_probe_inputs,
    contamination_report,
    gamma,
    split_prefix,
)
from .sensitivity import (  # noqa: F401
    HypothesisRecord,
    SensitivityConfig,
    cosine,
    count_by_system,
    find_unstable_pairs,
)
from .judge import (  # noqa: F401
    JudgeItem,
    Verdict,
    assign_positions,
    judge_pair,
    tally_winrates,
)
from .textnorm import (  # noqa: F401
    IdentityLemmatizer,
    Lemmatizer,
    RuleTableLemmatizer,
    TokenSequence,
    lemmatize,
    tokenize,
)
