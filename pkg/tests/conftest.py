"""Shared fixtures. The whole suite runs with INET connections blocked so
any accidental network use fails loudly."""

from __future__ import annotations

import socket

import pytest

from elderaug.corpus import Manifest, Utterance
from elderaug.toydata import build_toy_corpus

_REAL_CONNECT = socket.socket.connect


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    def guarded(self, address, *args, **kwargs):
        if self.family in (socket.AF_INET, socket.AF_INET6):
            raise AssertionError(f"network access attempted: {address!r}")
        return _REAL_CONNECT(self, address, *args, **kwargs)

    monkeypatch.setattr(socket.socket, "connect", guarded)


def make_utterance(
    utt_id: str = "u1",
    text: str = "hello there friend",
    origin: str = "original",
    **kwargs,
) -> Utterance:
    defaults = dict(audio_path=f"wav/{utt_id}.wav", lang="en")
    defaults.update(kwargs)
    return Utterance(id=utt_id, text=text, origin=origin, **defaults)


def make_manifest(n: int = 5, split: str = "train", **kwargs) -> Manifest:
    entries = [
        make_utterance(utt_id=f"u{i}", text=f"sample sentence number {i}", age=70 + i, **kwargs)
        for i in range(n)
    ]
    return Manifest(entries=entries, split=split)


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    paths = build_toy_corpus(root, n_utterances=24, n_speakers=8, seed=11)
    paths["root"] = root
    return paths
