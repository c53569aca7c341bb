"""Parser backends producing sentence-level frame annotations.

The default backend wraps the pretrained seq2seq frame-semantic parser
(installed via the ``transformer`` extra). Any object with the same
``parse`` signature can stand in, which keeps the export path testable
without model assets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence


class AdapterError(RuntimeError):
    """Fatal adapter problem (model load failure, bad configuration)."""


@dataclass(frozen=True)
class RoleAnnotation:
    name: str
    text: str


@dataclass(frozen=True)
class FrameAnnotation:
    """One identified frame in a sentence.

    ``trigger_start`` is a character offset into the sentence;
    ``trigger_text`` is the surface form at that offset.
    """

    frame_name: str
    trigger_text: str
    trigger_start: int
    roles: tuple[RoleAnnotation, ...] = field(default_factory=tuple)


class FrameParser(Protocol):
    version: str

    def parse(self, sentence: str) -> Sequence[FrameAnnotation]:
        ...


def _trigger_extent(sentence: str, start: int) -> str:
    end = start
    while end < len(sentence) and (sentence[end].isalnum() or sentence[end] in "'-"):
        end += 1
    return sentence[start:end]


class TransformerParser:
    """Wrapper around the pretrained frame-semantic transformer model.

    The model package and weights are loaded lazily on first use; a missing
    installation or failed load is fatal with an actionable message. The
    model's own confidence defaults are passed through unchanged.
    """

    def __init__(self, model_size: str = "base"):
        self.model_size = model_size
        self.version = f"frame-semantic-transformer/{model_size}"
        self._model = None

    def load(self) -> None:
        if self._model is not None:
            return
        try:
            from frame_semantic_transformer import FrameSemanticTransformer
        except ImportError as exc:
            raise AdapterError(
                "frame-semantic-transformer is not installed; install the "
                "'transformer' extra or supply a custom parser backend"
            ) from exc
        try:
            self._model = FrameSemanticTransformer(self.model_size)
        except Exception as exc:  # model assets missing or incompatible
            raise AdapterError(f"failed to load parser model: {exc}") from exc

    def parse(self, sentence: str) -> list[FrameAnnotation]:
        self.load()
        result = self._model.detect_frames(sentence)
        annotations = []
        for frame in result.frames:
            start = int(frame.trigger_location)
            annotations.append(
                FrameAnnotation(
                    frame_name=frame.name,
                    trigger_text=_trigger_extent(sentence, start),
                    trigger_start=start,
                    roles=tuple(
                        RoleAnnotation(name=element.name, text=element.text)
                        for element in frame.frame_elements
                    ),
                )
            )
        return annotations
