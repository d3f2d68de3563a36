"""Bundle files.

A bundle file is UTF-8 text. The first line is a compact JSON header::

    {"format":"rpsgmm-bundle","format_version":1,"sha256":"<hex>"}

and the rest of the file is the JSON payload whose exact bytes the SHA-256
digest covers. Floats are written with ``repr`` and so round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .classifier import ClassifierBundle
from .data import atomic_write_text
from .embedding import EmbeddingParams
from .errors import IncompatibleFormatError, IntegrityError
from .gmm import FitMeta, GmmModel

FORMAT_NAME = "rpsgmm-bundle"
FORMAT_VERSION = 1


def _meta_to_dict(meta: FitMeta | None):
    if meta is None:
        return None
    return {
        "log_likelihood": meta.log_likelihood,
        "n_iter": meta.n_iter,
        "seed": meta.seed,
        "reg": meta.reg,
        "converged": meta.converged,
        "n_resets": meta.n_resets,
        "history": list(meta.history),
        "reset_iters": list(meta.reset_iters),
    }


def _meta_from_dict(d):
    if d is None:
        return None
    return FitMeta(
        log_likelihood=float(d["log_likelihood"]),
        n_iter=int(d["n_iter"]),
        seed=int(d["seed"]),
        reg=float(d["reg"]),
        converged=bool(d["converged"]),
        n_resets=int(d["n_resets"]),
        history=tuple(float(x) for x in d["history"]),
        reset_iters=tuple(int(x) for x in d["reset_iters"]),
    )


def bundle_to_dict(bundle: ClassifierBundle):
    p = bundle.params
    classes = []
    for label in bundle.class_order:
        m = bundle.models[label]
        classes.append({
            "label": label,
            "tau": p.tau,
            "d": p.d,
            "n_components": m.n_components,
            "representative": bundle.representatives.get(label),
            "weights": m.weights.tolist(),
            "means": m.means.tolist(),
            "covariances": m.covariances.tolist(),
            "meta": _meta_to_dict(m.meta),
        })
    return {
        "tau": p.tau,
        "d": p.d,
        "channels": list(bundle.channels),
        "class_order": list(bundle.class_order),
        "classes": classes,
    }


def bundle_from_dict(d) -> ClassifierBundle:
    params = EmbeddingParams(int(d["tau"]), int(d["d"]))
    models, reps = {}, {}
    for c in d["classes"]:
        if (c["tau"], c["d"]) != (params.tau, params.d):
            raise IntegrityError(f"class {c['label']!r} embedding differs from bundle embedding")
        w = np.asarray(c["weights"], dtype=float)
        if w.size != c["n_components"]:
            raise IntegrityError(f"class {c['label']!r}: component count mismatch")
        models[c["label"]] = GmmModel(w, np.asarray(c["means"], dtype=float),
                                      np.asarray(c["covariances"], dtype=float),
                                      _meta_from_dict(c.get("meta")))
        if c.get("representative") is not None:
            reps[c["label"]] = c["representative"]
    return ClassifierBundle(params, models, tuple(d["channels"]), tuple(d["class_order"]), reps)


def dumps_bundle(bundle: ClassifierBundle) -> str:
    body = json.dumps(bundle_to_dict(bundle), indent=1, allow_nan=False) + "\n"
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    header = json.dumps(
        {"format": FORMAT_NAME, "format_version": FORMAT_VERSION, "sha256": digest},
        separators=(",", ":"),
    )
    return header + "\n" + body


def loads_bundle(text: str) -> ClassifierBundle:
    head, sep, body = text.partition("\n")
    if not sep:
        raise IntegrityError("bundle file has no payload")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"unreadable bundle header: {exc}") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
        raise IntegrityError("not a bundle file")
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise IncompatibleFormatError(
            f"bundle format version {version!r} is not supported (expected {FORMAT_VERSION})"
        )
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if digest != header.get("sha256"):
        raise IntegrityError("bundle checksum mismatch: file is corrupt or was edited")
    try:
        return bundle_from_dict(json.loads(body))
    except (KeyError, TypeError, ValueError) as exc:
        raise IntegrityError(f"malformed bundle payload: {exc}") from None


def save_bundle(bundle: ClassifierBundle, path):
    atomic_write_text(path, dumps_bundle(bundle))


def load_bundle(path) -> ClassifierBundle:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise IntegrityError(f"{path}: bundle is not valid UTF-8") from None
    return loads_bundle(text)
