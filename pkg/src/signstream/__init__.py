"""signstream: fingerspelling recognition and text-to-pose production.

Two pipelines behind one gateway. Recognition turns streams of 21-point
hand-landmark frames into corrected English text; production turns
English text into ASL gloss and a stitched skeletal pose sequence,
retrieved by cosine similarity with a fingerspelling fallback. Both are
usable as a library, over the CLI, or through the WebSocket gateway.
"""

from .landmarks import (
    DegenerateFrame,
    FeatureLayout,
    FeatureVector,
    Handedness,
    NormalizedHandFrame,
    RawHandFrame,
    canonicalize_handedness,
    extract_features,
    normalize,
    parse_raw_frame,
    serialize_frame,
)
from .neuralnet import (
    LETTERS,
    AdamState,
    Network,
    NetworkKind,
    TrainConfig,
    adam_step,
    backward,
    build_dense_baseline,
    build_pointnet_lite,
    evaluate,
    forward,
    load_model,
    loss,
    save_model,
    softmax,
    train,
)
from .recognizer import (
    HttpSentenceCorrector,
    RecognitionEvent,
    RecognizerConfig,
    SpellCorrector,
    TranscriptState,
    disambiguate,
    finalize,
    load_dictionary,
    spell_correct,
    step,
)
from .gloss import GlossSequence, translate_rule_based, translate_via_llm
from .retrieval import (
    PoseEntry,
    PoseSequence,
    PoseStore,
    ProduceResult,
    RetrievalResult,
    build_store,
    cosine_similarity,
    fingerspell,
    load_store,
    produce,
    query,
    save_store,
    stitch,
)
from .server import Gateway, GatewayConfig, create_app, load_config, serve

__version__ = "0.1.0"
