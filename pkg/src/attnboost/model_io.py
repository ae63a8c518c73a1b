"""Single-file model container with per-section integrity checksums.

The file is JSON with four sections (meta, preprocessor, attention, ensemble).
Float arrays are base64-encoded little-endian float64 bytes, so a save/load
round trip reproduces bit-identical predictions on any platform. Each
section's checksum is validated before anything is constructed; a bad file
never yields a partially loaded model.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import tempfile

import numpy as np

from .attention import AttentionParams
from .errors import ModelFormatError
from .fusion import AttnBoostModel
from .gbdt import Ensemble, TreeNode
from .tabular import ColumnSchema, PreprocessorState

FORMAT_NAME = "attnboost-model"
FORMAT_VERSION = 1
_SECTIONS = ("meta", "preprocessor", "attention", "ensemble")


def write_text_atomic(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".attnboost-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _encode_f64(arr) -> dict:
    arr = np.asarray(arr, dtype=np.float64)
    return {"shape": list(arr.shape),
            "data": base64.b64encode(arr.astype("<f8").tobytes()).decode("ascii")}


def _decode_f64(obj) -> np.ndarray:
    raw = base64.b64decode(obj["data"].encode("ascii"))
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return arr.reshape(obj["shape"])


def _canonical(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _checksum(payload) -> str:
    return hashlib.sha256(_canonical(payload)).hexdigest()


def _tree_payload(root: TreeNode) -> dict:
    features, thresholds, lefts, rights, weights, gains = [], [], [], [], [], []

    def visit(node: TreeNode) -> int:
        idx = len(features)
        features.append(node.feature)
        thresholds.append(node.threshold)
        lefts.append(-1)
        rights.append(-1)
        weights.append(node.weight)
        gains.append(node.gain)
        if not node.is_leaf:
            lefts[idx] = visit(node.left)
            rights[idx] = visit(node.right)
        return idx

    visit(root)
    return {
        "feature": features,
        "left": lefts,
        "right": rights,
        "threshold": _encode_f64(thresholds),
        "weight": _encode_f64(weights),
        "gain": _encode_f64(gains),
    }


def _tree_from_payload(payload: dict) -> TreeNode:
    thresholds = _decode_f64(payload["threshold"])
    weights = _decode_f64(payload["weight"])
    gains = _decode_f64(payload["gain"])

    def build(idx: int) -> TreeNode:
        feature = payload["feature"][idx]
        if feature < 0:
            return TreeNode(weight=float(weights[idx]))
        return TreeNode(
            feature=feature,
            threshold=float(thresholds[idx]),
            gain=float(gains[idx]),
            left=build(payload["left"][idx]),
            right=build(payload["right"][idx]),
        )

    return build(0)


def _preprocessor_payload(state: PreprocessorState | None):
    if state is None:
        return None
    return {
        "schema": [[c.name, c.kind, c.nullable] for c in state.schema],
        "category_maps": state.category_maps,
        "unseen_codes": state.unseen_codes,
        "numeric_stats": {k: list(v) for k, v in state.numeric_stats.items()},
        "date_plan": state.date_plan,
        "dropped_columns": state.dropped_columns,
        "feature_names": state.feature_names,
        "target_name": state.target_name,
        "target_positive": state.target_positive,
    }


def _preprocessor_from_payload(payload) -> PreprocessorState | None:
    if payload is None:
        return None
    return PreprocessorState(
        schema=[ColumnSchema(n, k, bool(nl)) for n, k, nl in payload["schema"]],
        category_maps={c: dict(m) for c, m in payload["category_maps"].items()},
        unseen_codes=dict(payload["unseen_codes"]),
        numeric_stats={k: (v[0], v[1]) for k, v in payload["numeric_stats"].items()},
        date_plan={k: list(v) for k, v in payload["date_plan"].items()},
        dropped_columns=list(payload["dropped_columns"]),
        feature_names=list(payload["feature_names"]),
        target_name=payload["target_name"],
        target_positive=payload["target_positive"],
    )


def _attention_payload(params: AttentionParams | None):
    if params is None:
        return None
    return {
        "d": params.d,
        "k": params.k,
        "W1": _encode_f64(params.W1),
        "b1": _encode_f64(params.b1),
        "W_attn": _encode_f64(params.W_attn),
        "b_attn": _encode_f64(params.b_attn),
        "w2": _encode_f64(params.w2),
        "b2": params.b2,
    }


def _attention_from_payload(payload) -> AttentionParams | None:
    if payload is None:
        return None
    return AttentionParams(
        W1=_decode_f64(payload["W1"]),
        b1=_decode_f64(payload["b1"]),
        W_attn=_decode_f64(payload["W_attn"]),
        b_attn=_decode_f64(payload["b_attn"]),
        w2=_decode_f64(payload["w2"]),
        b2=float(payload["b2"]),
        d=int(payload["d"]),
        k=int(payload["k"]),
    )


def save_model(model: AttnBoostModel, path: str, fingerprint: str = "") -> None:
    """Write the model atomically; output bytes are deterministic."""
    sections = {
        "meta": {
            "variant": model.variant,
            "augment_mode": model.augment_mode,
            "attention_seed": model.attention_seed,
            "boost_seed": model.boost_seed,
            "manual_weights": model.manual_weights,
            "random_k": model.random_k,
            "random_seed": model.random_seed,
            "fingerprint": fingerprint,
        },
        "preprocessor": _preprocessor_payload(model.preprocessor),
        "attention": _attention_payload(model.attention),
        "ensemble": {
            "base_raw": model.ensemble.base_raw,
            "learning_rate": model.ensemble.learning_rate,
            "feature_names": model.ensemble.feature_names,
            "trees": [_tree_payload(t) for t in model.ensemble.trees],
        },
    }
    document = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "sections": {
            name: {"payload": payload, "checksum": _checksum(payload)}
            for name, payload in sections.items()
        },
    }
    write_text_atomic(path, json.dumps(document, sort_keys=True, separators=(",", ":")))


def load_model(path: str) -> AttnBoostModel:
    """Read and fully validate a model file; raises ModelFormatError on damage."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path} is truncated or not a model file: {exc}") from exc

    if not isinstance(document, dict) or document.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"{path} is not an attnboost model file")
    version = document.get("version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model format version {version!r}, expected {FORMAT_VERSION}"
        )
    stored = document.get("sections", {})
    payloads = {}
    for name in _SECTIONS:
        if name not in stored:
            raise ModelFormatError(f"{path}: missing section {name!r}")
        payload = stored[name].get("payload")
        if _checksum(payload) != stored[name].get("checksum"):
            raise ModelFormatError(f"{path}: checksum mismatch in section {name!r}")
        payloads[name] = payload

    meta = payloads["meta"]
    ensemble_payload = payloads["ensemble"]
    ensemble = Ensemble(
        trees=[_tree_from_payload(t) for t in ensemble_payload["trees"]],
        base_raw=float(ensemble_payload["base_raw"]),
        learning_rate=float(ensemble_payload["learning_rate"]),
        feature_names=list(ensemble_payload["feature_names"]),
    )
    return AttnBoostModel(
        preprocessor=_preprocessor_from_payload(payloads["preprocessor"]),
        attention=_attention_from_payload(payloads["attention"]),
        augment_mode=meta["augment_mode"],
        ensemble=ensemble,
        variant=meta["variant"],
        attention_seed=int(meta["attention_seed"]),
        boost_seed=int(meta["boost_seed"]),
        manual_weights=dict(meta["manual_weights"] or {}),
        random_k=int(meta["random_k"]),
        random_seed=int(meta["random_seed"]),
    )


def model_fingerprint(path: str) -> str:
    """The creation fingerprint stored in a model file's meta section."""
    with open(path, "r", encoding="utf-8") as handle:
        document = json.load(handle)
    return document["sections"]["meta"]["payload"].get("fingerprint", "")
