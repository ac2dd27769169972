"""elderaug: batch workbench for elderly-speech data augmentation.

Stages: manifest handling (corpus), LLM paraphrasing (paraphrase),
speaker-balanced TTS synthesis (synth), signal-level transforms (dsp),
pipeline composition (pipeline), and WER/CER evaluation with paired
significance testing (metrics). The `elderaug` executable exposes each
stage as a subcommand.
"""

__version__ = "0.1.0"
