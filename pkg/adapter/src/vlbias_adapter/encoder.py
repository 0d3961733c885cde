"""Checkpoint loading and batched CLIP-style encoding.

The encoder is a thin, deterministic wrapper: eval mode, no gradients,
L2-normalized float32 rows out.  It never computes any audit statistic;
numbers stay attributable to the engine.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np
import torch
from transformers import CLIPModel, CLIPProcessor

from .errors import EncodeError, InputError

log = logging.getLogger("vlbias_adapter")

# Short names for checkpoints with stable public identifiers.  Variants
# without one (FaceCLIP- or DebiasCLIP-style weights) are passed as an
# explicit path or hub id instead.
MODEL_ALIASES = {
    "OAICLIP": "openai/clip-vit-base-patch32",
    "OpenCLIP": "laion/CLIP-ViT-H-14-laion2B-s32B-b79K",
}


def resolve_model(identifier: str) -> str:
    return MODEL_ALIASES.get(identifier, identifier)


def _feature_tensor(output) -> torch.Tensor:
    """get_*_features returns a bare tensor on older transformers and a
    pooling output object (projected features in pooler_output) on newer."""
    if isinstance(output, torch.Tensor):
        return output
    return output.pooler_output


@dataclass(frozen=True)
class EncoderSpec:
    """What to load and how to drive it."""

    model: str
    device: str = "cpu"
    batch_size: int = 32

    def __post_init__(self):
        if not self.model:
            raise InputError("model identifier must be non-empty")
        if self.batch_size < 1:
            raise InputError(f"batch size must be at least 1, got {self.batch_size}")


class CheckpointEncoder:
    """A loaded checkpoint plus its processor, ready to encode batches."""

    def __init__(self, spec: EncoderSpec):
        self.spec = spec
        resolved = resolve_model(spec.model)
        self.resolved_model = resolved
        try:
            self.model = CLIPModel.from_pretrained(resolved)
            self.processor = CLIPProcessor.from_pretrained(resolved)
        except Exception as exc:
            raise InputError(f"cannot load checkpoint {resolved!r}: {exc}") from exc
        self.model.eval()
        self.model.to(spec.device)
        self.max_text_tokens = int(
            self.model.config.text_config.max_position_embeddings
        )
        log.info("loaded %s (projection dim %d)", resolved,
                 int(self.model.config.projection_dim))

    @property
    def dim(self) -> int:
        return int(self.model.config.projection_dim)

    def weight_hash(self) -> str:
        """sha256 over parameter names and bytes, for the output sidecar."""
        digest = hashlib.sha256()
        state = self.model.state_dict()
        for name in sorted(state):
            digest.update(name.encode("utf-8"))
            tensor = state[name].detach().cpu().contiguous()
            digest.update(tensor.numpy().tobytes())
        return digest.hexdigest()

    def _normalize(self, features: torch.Tensor, what: str) -> np.ndarray:
        matrix = features.detach().cpu().numpy().astype(np.float64)
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        if not np.all(norms > 1e-12):
            raise EncodeError(f"{what}: checkpoint produced a zero embedding")
        return (matrix / norms).astype(np.float32)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        """Normalized embedding rows, one per text, order preserved."""
        if not texts:
            raise InputError("no texts to encode")
        tokenizer = self.processor.tokenizer
        for text in texts:
            n_tokens = len(tokenizer(text, truncation=False)["input_ids"])
            if n_tokens > self.max_text_tokens:
                raise EncodeError(
                    f"caption {text!r} tokenizes to {n_tokens} tokens, over "
                    f"the checkpoint limit of {self.max_text_tokens}"
                )
        blocks = []
        with torch.no_grad():
            for start in range(0, len(texts), self.spec.batch_size):
                batch = texts[start:start + self.spec.batch_size]
                inputs = tokenizer(batch, padding=True, return_tensors="pt")
                inputs = {k: v.to(self.spec.device) for k, v in inputs.items()}
                features = _feature_tensor(self.model.get_text_features(**inputs))
                blocks.append(self._normalize(features, "text batch"))
        return np.concatenate(blocks, axis=0)

    def encode_images(self, images: list) -> np.ndarray:
        """Normalized embedding rows for a list of PIL images."""
        if not images:
            raise InputError("no images to encode")
        image_processor = self.processor.image_processor
        blocks = []
        with torch.no_grad():
            for start in range(0, len(images), self.spec.batch_size):
                batch = images[start:start + self.spec.batch_size]
                inputs = image_processor(batch, return_tensors="pt")
                pixel_values = inputs["pixel_values"].to(self.spec.device)
                features = _feature_tensor(
                    self.model.get_image_features(pixel_values=pixel_values)
                )
                blocks.append(self._normalize(features, "image batch"))
        return np.concatenate(blocks, axis=0)
