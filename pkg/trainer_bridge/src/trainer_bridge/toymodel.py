"""Build a miniature randomly initialized Whisper checkpoint offline.

The architecture is the stock transformers Whisper; only the dimensions
are shrunk so training runs on a laptop CPU in seconds. The tokenizer is a
byte-level BPE with no merges (every byte is a token), so any UTF-8 text
round-trips without vocabulary files from the hub.
"""

from __future__ import annotations

from pathlib import Path

SPECIALS = (
    "<|endoftext|>",
    "<|startoftranscript|>",
    "<|en|>",
    "<|ko|>",
    "<|transcribe|>",
    "<|notimestamps|>",
)


def build_tokenizer():
    from tokenizers import Tokenizer, decoders, models, pre_tokenizers
    from transformers import WhisperTokenizer

    alphabet = pre_tokenizers.ByteLevel.alphabet()
    vocab = {ch: i for i, ch in enumerate(sorted(alphabet))}
    backing = Tokenizer(models.BPE(vocab=vocab, merges=[], unk_token="<|endoftext|>"))
    backing.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    backing.decoder = decoders.ByteLevel()
    backing.add_special_tokens(list(SPECIALS))
    return WhisperTokenizer(
        tokenizer_object=backing,
        unk_token="<|endoftext|>",
        bos_token="<|endoftext|>",
        eos_token="<|endoftext|>",
        pad_token="<|endoftext|>",
    )


def build_toy_checkpoint(out_dir: Path | str, seed: int = 0, chunk_length_s: int = 8) -> Path:
    """Write a loadable tiny Whisper checkpoint (model + processor)."""
    import torch
    from transformers import (
        WhisperConfig,
        WhisperFeatureExtractor,
        WhisperForConditionalGeneration,
        WhisperProcessor,
    )

    torch.manual_seed(seed)
    out_dir = Path(out_dir)
    tokenizer = build_tokenizer()
    vocab_size = len(tokenizer.get_vocab())
    eot = tokenizer.convert_tokens_to_ids("<|endoftext|>")
    sot = tokenizer.convert_tokens_to_ids("<|startoftranscript|>")
    feature_extractor = WhisperFeatureExtractor(feature_size=80, chunk_length=chunk_length_s)
    config = WhisperConfig(
        vocab_size=vocab_size,
        num_mel_bins=80,
        d_model=64,
        encoder_layers=2,
        decoder_layers=2,
        encoder_attention_heads=2,
        decoder_attention_heads=2,
        encoder_ffn_dim=128,
        decoder_ffn_dim=128,
        max_source_positions=chunk_length_s * 100 // 2,
        max_target_positions=128,
        pad_token_id=eot,
        bos_token_id=eot,
        eos_token_id=eot,
        decoder_start_token_id=sot,
    )
    model = WhisperForConditionalGeneration(config)
    model.save_pretrained(out_dir)
    WhisperProcessor(feature_extractor=feature_extractor, tokenizer=tokenizer).save_pretrained(
        out_dir
    )
    return out_dir
