"""trainer-bridge: fine-tune Whisper on a workbench manifest and emit
hypothesis records the workbench scorer consumes unchanged.

The bridge talks to the workbench only through its documented file
formats: JSONL manifests in, JSONL (id, hyp_text) records out.
"""

__version__ = "0.1.0"
