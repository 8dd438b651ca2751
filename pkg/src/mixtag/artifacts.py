"""Model persistence: versioned npz artifacts that round-trip predictions.

An artifact is a single ``.npz`` holding little-endian float32 parameter
tensors plus a JSON metadata record (architecture specs, threshold, training
metadata, and the siamese support set where applicable).  Ensembles embed
their members whole, so a saved ensemble is self-contained.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from mixtag.data import N_SYMBOLS, WORD_LEN
from mixtag.ensemble import EnsembleModel
from mixtag.nn import LayerSpec, ParamStore, build_network
from mixtag.taggers import TrainedTagger

FORMAT_VERSION = 1


class ArtifactError(ValueError):
    """Unreadable, malformed, or version-mismatched model artifact."""


def _tagger_record(tagger: TrainedTagger) -> tuple[dict, dict[str, np.ndarray]]:
    meta = {
        "kind": "tagger",
        "method": tagger.method,
        "specs": [asdict(spec) for spec in tagger.specs],
        "theta": tagger.theta,
        "dev_accuracy": tagger.dev_accuracy,
        "train_meta": tagger.train_meta,
        "margin": tagger.margin,
        "distance_eps": tagger.distance_eps,
        "score_scale": tagger.score_scale,
    }
    arrays = {
        f"param/{name}": value.astype("<f4")
        for name, value in tagger.store.items()
    }
    if tagger.support is not None:
        arrays["support"] = tagger.support.astype("<i2")
    return meta, arrays


def _tagger_from_record(meta: dict, arrays: dict[str, np.ndarray]) -> TrainedTagger:
    specs = [LayerSpec(**spec) for spec in meta["specs"]]
    store = ParamStore()
    net = build_network(store, specs, (WORD_LEN, N_SYMBOLS), np.random.default_rng(0))
    for name in store.names():
        key = f"param/{name}"
        if key not in arrays:
            raise ArtifactError(f"artifact is missing tensor {name!r}")
        store.set_value(name, arrays[key])
    support = arrays.get("support")
    return TrainedTagger(
        method=meta["method"], specs=specs, store=store, net=net,
        theta=meta["theta"], dev_accuracy=meta["dev_accuracy"],
        train_meta=meta.get("train_meta", {}),
        support=None if support is None else support.astype(np.int64),
        margin=meta["margin"], distance_eps=meta["distance_eps"],
        score_scale=meta["score_scale"],
    )


def save_model(path, model, config_hash: str = "") -> None:
    """Write a tagger or ensemble artifact."""
    if isinstance(model, TrainedTagger):
        meta, arrays = _tagger_record(model)
    elif isinstance(model, EnsembleModel):
        arrays = {}
        members = []
        for i, member in enumerate(model.members):
            m_meta, m_arrays = _tagger_record(member)
            members.append(m_meta)
            arrays.update({f"member{i}/{k}": v for k, v in m_arrays.items()})
        meta = {"kind": "ensemble", "members": members,
                "accuracies": list(map(float, model.accuracies))}
    else:
        raise ArtifactError(f"cannot save a {type(model).__name__}")
    meta["format_version"] = FORMAT_VERSION
    meta["config_hash"] = config_hash
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)


def load_model(path):
    """Read an artifact back into a TrainedTagger or EnsembleModel."""
    try:
        with np.load(path, allow_pickle=False) as data:
            arrays = {k: data[k] for k in data.files}
    except (OSError, ValueError) as exc:
        raise ArtifactError(f"cannot read artifact {path}: {exc}") from exc
    if "meta" not in arrays:
        raise ArtifactError(f"{path} has no metadata record")
    meta = json.loads(str(arrays.pop("meta")))
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise ArtifactError(
            f"{path} has format version {version}, expected {FORMAT_VERSION}"
        )
    if meta["kind"] == "tagger":
        return _tagger_from_record(meta, arrays)
    if meta["kind"] == "ensemble":
        members = []
        for i, m_meta in enumerate(meta["members"]):
            prefix = f"member{i}/"
            m_arrays = {k[len(prefix):]: v for k, v in arrays.items()
                        if k.startswith(prefix)}
            members.append(_tagger_from_record(m_meta, m_arrays))
        return EnsembleModel(members=members, accuracies=meta["accuracies"])
    raise ArtifactError(f"unknown artifact kind {meta['kind']!r}")
