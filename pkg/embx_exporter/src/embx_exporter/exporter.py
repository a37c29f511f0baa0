"""Run a pretrained encoder over segment files and emit an EMBX store.

The encoder is injectable: anything with a ``dim`` attribute and an
``encode(texts) -> list[EncodedText]`` method works, which keeps the
export logic testable without model weights. The bundled adapter wraps
a Hugging Face transformer and extracts one hidden layer.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ModelLoadError, SegmentFileError, TokenizationEmpty
from .formats import SegmentText, read_segment_file, write_embx

DEFAULT_MODEL = "microsoft/deberta-xlarge-mnli"

# Published recommended scoring layers, recorded per model so a resolved
# choice always lands in the output header.
RECOMMENDED_LAYERS = {
    "microsoft/deberta-xlarge-mnli": 40,
}


@dataclass
class EncodedText:
    """One text's content subword tokens and their layer hidden states.

    ``tokens`` exclude sequence special tokens; ``matrix`` is
    len(tokens) x dim, not yet normalized. ``truncated`` marks texts the
    encoder clipped to its token bound.
    """

    tokens: list[str]
    matrix: np.ndarray
    truncated: bool = False


@dataclass
class ExportConfig:
    """Everything one export run needs; validated on construction."""

    segment_files: list[Path]
    output_path: Path
    model_id: str = DEFAULT_MODEL
    layer: int = -1  # -1 resolves via RECOMMENDED_LAYERS
    device: str = "cpu"
    max_tokens: int = 510
    batch_size: int = 8
    log_path: Path | None = None

    def __post_init__(self) -> None:
        if not self.segment_files:
            raise ValueError("at least one segment file required")
        if not self.model_id.strip():
            raise ValueError("model_id must be nonempty")
        if self.max_tokens < 8:
            raise ValueError("max_tokens must be >= 8")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.log_path is None:
            self.log_path = Path(self.output_path).parent / "export.log"


@dataclass
class ExportReport:
    """What an export run produced."""

    output_path: Path
    log_path: Path
    segment_count: int
    warning_count: int
    dim: int
    layer: int


def resolve_layer(model_id: str, layer: int) -> int:
    """Map layer -1 to the model's recommended scoring layer."""
    if layer >= 0:
        return layer
    if model_id in RECOMMENDED_LAYERS:
        return RECOMMENDED_LAYERS[model_id]
    raise ValueError(
        f"no recommended layer recorded for {model_id!r}; pass --layer")


def de_subword(tokens: list[str]) -> str:
    """Rejoin subword tokens into the surface string they tokenize.

    Handles the two common marking schemes: continuation prefixes
    ("##next") and word-start prefixes ("Ġword" / "▁word").
    """
    out: list[str] = []
    for tok in tokens:
        if tok.startswith("##"):
            out.append(tok[2:])
        elif tok[:1] in ("Ġ", "▁"):
            out.append(" " + tok[1:])
        elif out:
            out.append(" " + tok)
        else:
            out.append(tok)
    return "".join(out).strip()


class TransformersEncoder:
    """Hugging Face adapter: one hidden layer, special tokens removed."""

    def __init__(self, model_id: str, layer: int, device: str,
                 max_tokens: int):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(f"transformers backend unavailable: {exc}") from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_id)
            self._model = AutoModel.from_pretrained(
                model_id, output_hidden_states=True)
        except Exception as exc:
            raise ModelLoadError(f"cannot load {model_id!r}: {exc}") from exc
        self._model.to(device).eval()
        self._torch = torch
        self._device = device
        self._layer = layer
        self._max_tokens = max_tokens
        self.dim = int(self._model.config.hidden_size)
        depth = int(self._model.config.num_hidden_layers)
        if not 0 <= layer <= depth:
            raise ModelLoadError(
                f"layer {layer} out of range for {model_id!r} "
                f"(0..{depth})")

    def encode(self, texts: list[str]) -> list[EncodedText]:
        enc = self._tokenizer(
            texts, return_tensors="pt", padding=True, truncation=True,
            max_length=self._max_tokens, return_special_tokens_mask=True)
        with self._torch.no_grad():
            hidden = self._model(
                input_ids=enc["input_ids"].to(self._device),
                attention_mask=enc["attention_mask"].to(self._device),
            ).hidden_states[self._layer]
        out = []
        for row in range(len(texts)):
            keep = ((enc["attention_mask"][row] == 1)
                    & (enc["special_tokens_mask"][row] == 0))
            ids = enc["input_ids"][row][keep]
            full = self._tokenizer(texts[row], truncation=False)["input_ids"]
            out.append(EncodedText(
                tokens=self._tokenizer.convert_ids_to_tokens(ids),
                matrix=hidden[row][keep].cpu().numpy().astype(np.float32),
                truncated=len(full) > self._max_tokens,
            ))
        return out


def load_transformers_encoder(config: ExportConfig) -> TransformersEncoder:
    return TransformersEncoder(config.model_id,
                               resolve_layer(config.model_id, config.layer),
                               config.device, config.max_tokens)


def _read_inputs(config: ExportConfig) -> list[SegmentText]:
    segments: list[SegmentText] = []
    seen = set()
    for path in config.segment_files:
        for seg in read_segment_file(path):
            if seg.key in seen:
                raise SegmentFileError(f"{seg.key} appears more than once")
            seen.add(seg.key)
            segments.append(seg)
    return segments


def _normalize_rows(key, matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1, keepdims=True)
    if not np.all(norms > 0):
        raise SegmentFileError(f"{key}: zero-norm embedding row")
    return (matrix / norms).astype(np.float32)


def export_embeddings(config: ExportConfig,
                      load_encoder=load_transformers_encoder,
                      log=print) -> ExportReport:
    """Encode every input segment and write one EMBX store.

    Segment files are parsed before the model loads, so malformed input
    fails fast. Records are written in input order by a single writer;
    a sidecar log collects one line per truncation warning.
    """
    segments = _read_inputs(config)
    layer = resolve_layer(config.model_id, config.layer)
    encoder = load_encoder(config)

    records = []
    warnings = []
    for start in range(0, len(segments), config.batch_size):
        batch = segments[start:start + config.batch_size]
        encoded = encoder.encode([seg.text for seg in batch])
        for seg, enc in zip(batch, encoded):
            if not enc.tokens:
                raise TokenizationEmpty(
                    f"{seg.key}: no content tokens after special-token removal")
            if enc.truncated:
                warnings.append(
                    f"TruncationWarning: {seg.key}: clipped to "
                    f"{len(enc.tokens)} tokens (bound {config.max_tokens})")
            records.append((seg.key, list(enc.tokens),
                            _normalize_rows(seg.key, enc.matrix)))

    write_embx(config.output_path, config.model_id, layer, encoder.dim,
               records)
    Path(config.log_path).write_text(
        "".join(line + "\n" for line in warnings), encoding="utf-8")
    log(f"wrote {len(records)} segments to {config.output_path} "
        f"(dim {encoder.dim}, layer {layer}, {len(warnings)} warnings)")
    return ExportReport(
        output_path=Path(config.output_path),
        log_path=Path(config.log_path),
        segment_count=len(records),
        warning_count=len(warnings),
        dim=encoder.dim,
        layer=layer,
    )
