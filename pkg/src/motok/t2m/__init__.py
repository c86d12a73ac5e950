from .schedule import corrupt_for_training, flat_layout, mask_schedule
from .text import TextEmbeddingSequence, ToyVocabEmbedder, load_text_features, write_text_store
from .model import MaskedMotionTransformer, T2mConfig
from .sampler import cfg_logits, generate_motion, generate_tokens
from .train import T2mTrainConfig, load_t2m_checkpoint, save_t2m_checkpoint, train_t2m

__all__ = [
    "corrupt_for_training",
    "flat_layout",
    "mask_schedule",
    "TextEmbeddingSequence",
    "ToyVocabEmbedder",
    "load_text_features",
    "write_text_store",
    "MaskedMotionTransformer",
    "T2mConfig",
    "cfg_logits",
    "generate_motion",
    "generate_tokens",
    "T2mTrainConfig",
    "load_t2m_checkpoint",
    "save_t2m_checkpoint",
    "train_t2m",
]
