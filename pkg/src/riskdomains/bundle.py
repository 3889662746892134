"""Model bundle persistence: a directory of raw arrays plus manifest.json.

Every array lives in its own file of raw little-endian 64-bit values with
its shape and dtype recorded in the manifest, so bundles are portable and
the manifest stays humanly diffable. Nothing in a bundle depends on wall
time; retraining with the same inputs reproduces byte-identical files.
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import numpy as np

from .classify import Pipeline, ThresholdSet
from .corpus import KeywordLexicon
from .domains import CLASSIFIED_DOMAINS, Domain
from .errors import DataError
from .networks import MlpModel, RbfModel
from .textnorm import MwePhrase
from .vectorspace import SvdProjection, TfidfModel, Vocabulary

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
VOCAB_NAME = "vocabulary.txt"

_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def _write_array(directory: Path, name: str, array: np.ndarray, dtype: str) -> dict:
    data = np.ascontiguousarray(array).astype(_DTYPES[dtype])
    path = directory / f"{name}.bin"
    path.write_bytes(data.tobytes())
    return {"file": path.name, "shape": list(array.shape), "dtype": dtype}


def _read_array(directory: Path, spec: dict, name: str) -> np.ndarray:
    try:
        path = directory / spec["file"]
        shape = tuple(spec["shape"])
        dtype = _DTYPES[spec["dtype"]]
    except (KeyError, TypeError):
        raise DataError(f"bundle manifest entry for array {name!r} is malformed")
    if not path.is_file():
        raise DataError(f"bundle array file missing: {path}")
    raw = path.read_bytes()
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(raw) != expected:
        raise DataError(
            f"bundle array {name!r} has {len(raw)} bytes, "
            f"expected {expected} for shape {list(shape)}"
        )
    # frombuffer views are read-only; copy into an owned native-order array.
    native = np.float64 if spec["dtype"] == "<f8" else np.int64
    return np.frombuffer(raw, dtype=dtype).reshape(shape).astype(native)


def _lexicon_to_json(lexicon: KeywordLexicon) -> dict:
    return {
        d.value: {
            "keywords": lexicon.keywords[d],
            "keyphrases": [" ".join(p.words) for p in lexicon.keyphrases[d]],
        }
        for d in CLASSIFIED_DOMAINS
    }


def _lexicon_from_json(obj: dict) -> KeywordLexicon:
    entries = {}
    for name, spec in obj.items():
        domain = Domain(name)
        phrases = [
            MwePhrase(words=tuple(s.split()), domain=name)
            for s in spec.get("keyphrases", [])
        ]
        entries[domain] = (list(spec.get("keywords", [])), phrases)
    return KeywordLexicon(entries)


def save_bundle(
    directory: str | Path,
    pipeline: Pipeline,
    lexicon: KeywordLexicon,
    training_info: dict | None = None,
) -> Path:
    """Write a pipeline to a bundle directory, replacing an existing bundle."""
    directory = Path(directory)
    if directory.exists():
        if not (directory / MANIFEST_NAME).exists() and any(directory.iterdir()):
            raise DataError(
                f"refusing to overwrite non-bundle directory: {directory}"
            )
        shutil.rmtree(directory)
    directory.mkdir(parents=True)
    try:
        return _save_into(directory, pipeline, lexicon, training_info or {})
    except BaseException:
        shutil.rmtree(directory, ignore_errors=True)
        raise


def _save_into(
    directory: Path,
    pipeline: Pipeline,
    lexicon: KeywordLexicon,
    training_info: dict,
) -> Path:
    tfidf = pipeline.tfidf
    svd = pipeline.svd
    if tfidf is None or svd is None:
        raise DataError("cannot save a pipeline without fitted TF-IDF and SVD")

    arrays = {
        "idf": _write_array(directory, "idf", tfidf.idf, "<f8"),
        "df": _write_array(directory, "df", tfidf.vocabulary.df, "<i8"),
        "svd_components": _write_array(
            directory, "svd_components", svd.components, "<f8"
        ),
        "svd_singular_values": _write_array(
            directory, "svd_singular_values", svd.singular_values, "<f8"
        ),
    }
    (directory / VOCAB_NAME).write_text(
        "\n".join(tfidf.vocabulary.terms) + "\n", encoding="utf-8"
    )

    manifest: dict = {
        "format_version": FORMAT_VERSION,
        "kind": pipeline.kind,
        "use_mwes": pipeline.use_mwes,
        "domain_order": [d.value for d in CLASSIFIED_DOMAINS],
        "corpus_size": tfidf.corpus_size,
        "vocabulary_file": VOCAB_NAME,
        "lexicon": _lexicon_to_json(lexicon),
        "training": training_info,
    }

    if pipeline.kind == "cosine":
        if pipeline.megadoc_vectors is None:
            raise DataError("cosine pipeline has no megadocument vectors")
        arrays["megadoc_vectors"] = _write_array(
            directory, "megadoc_vectors", pipeline.megadoc_vectors, "<f8"
        )
    elif pipeline.kind == "mlp":
        if pipeline.mlp is None:
            raise DataError("mlp pipeline has no trained network")
        for name, value in pipeline.mlp.params().items():
            arrays[f"mlp_{name}"] = _write_array(
                directory, f"mlp_{name}", value, "<f8"
            )
        manifest["mlp_dropout"] = [pipeline.mlp.dropout1, pipeline.mlp.dropout2]
    elif pipeline.kind == "rbf":
        if pipeline.rbf is None:
            raise DataError("rbf pipeline has no trained network")
        arrays["rbf_prototypes"] = _write_array(
            directory, "rbf_prototypes", pipeline.rbf.prototypes, "<f8"
        )
        arrays["rbf_w"] = _write_array(directory, "rbf_w", pipeline.rbf.w, "<f8")
        arrays["rbf_b"] = _write_array(directory, "rbf_b", pipeline.rbf.b, "<f8")
        manifest["rbf_width"] = pipeline.rbf.width
        manifest["rbf_dropout"] = pipeline.rbf.dropout
    else:
        raise DataError(f"unknown model kind {pipeline.kind!r}")

    if pipeline.thresholds is not None:
        t = pipeline.thresholds
        manifest["thresholds"] = {
            "alpha": t.alpha,
            "min": {d.value: t.thresholds[i] for i, d in enumerate(CLASSIFIED_DOMAINS)},
            "mean": {d.value: t.means[i] for i, d in enumerate(CLASSIFIED_DOMAINS)},
            "sigma": {d.value: t.sigmas[i] for i, d in enumerate(CLASSIFIED_DOMAINS)},
        }
    manifest["arrays"] = arrays
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return directory


def load_bundle(directory: str | Path) -> tuple[Pipeline, KeywordLexicon, dict]:
    """Load a bundle; validates format version and array shapes."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DataError(f"not a model bundle (no {MANIFEST_NAME}): {directory}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{manifest_path}: invalid JSON: {e}")
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"bundle format version {version!r} not supported "
            f"(reader expects {FORMAT_VERSION})"
        )
    order = manifest.get("domain_order")
    if order != [d.value for d in CLASSIFIED_DOMAINS]:
        raise DataError(
            "bundle domain order does not match this reader; refusing to "
            "misinterpret model outputs"
        )
    arrays = manifest.get("arrays", {})

    def arr(name: str) -> np.ndarray:
        if name not in arrays:
            raise DataError(f"bundle manifest lacks array {name!r}")
        return _read_array(directory, arrays[name], name)

    vocab_file = directory / manifest.get("vocabulary_file", VOCAB_NAME)
    if not vocab_file.is_file():
        raise DataError(f"bundle vocabulary file missing: {vocab_file}")
    terms = tuple(vocab_file.read_text(encoding="utf-8").splitlines())
    idf = arr("idf")
    df = arr("df")
    if len(terms) != idf.shape[0] or len(terms) != df.shape[0]:
        raise DataError(
            f"vocabulary size {len(terms)} does not match idf/df arrays "
            f"({idf.shape[0]}/{df.shape[0]})"
        )
    vocabulary = Vocabulary(
        terms=terms, index={t: i for i, t in enumerate(terms)}, df=df
    )
    tfidf = TfidfModel(
        vocabulary=vocabulary, idf=idf, corpus_size=int(manifest["corpus_size"])
    )
    components = arr("svd_components")
    if components.shape[1] != len(terms):
        raise DataError(
            f"svd components width {components.shape[1]} does not match "
            f"vocabulary size {len(terms)}"
        )
    svd = SvdProjection(
        components=components, singular_values=arr("svd_singular_values")
    )
    lexicon = _lexicon_from_json(manifest.get("lexicon", {}))

    pipeline = Pipeline(
        kind=manifest["kind"],
        use_mwes=bool(manifest.get("use_mwes", True)),
        phrases=lexicon.all_phrases(),
        tfidf=tfidf,
        svd=svd,
    )
    k = components.shape[0]
    if pipeline.kind == "cosine":
        mv = arr("megadoc_vectors")
        if mv.shape != (len(CLASSIFIED_DOMAINS), k):
            raise DataError(f"megadoc vector shape {mv.shape} does not match k={k}")
        pipeline.megadoc_vectors = mv
    elif pipeline.kind == "mlp":
        dropout = manifest.get("mlp_dropout", [0.2, 0.5])
        pipeline.mlp = MlpModel(
            w1=arr("mlp_w1"), b1=arr("mlp_b1"),
            w2=arr("mlp_w2"), b2=arr("mlp_b2"),
            w3=arr("mlp_w3"), b3=arr("mlp_b3"),
            dropout1=float(dropout[0]), dropout2=float(dropout[1]),
        )
        if pipeline.mlp.w1.shape[0] != k:
            raise DataError(
                f"mlp input width {pipeline.mlp.w1.shape[0]} does not match k={k}"
            )
    elif pipeline.kind == "rbf":
        prototypes = arr("rbf_prototypes")
        if prototypes.shape[1] != k:
            raise DataError(
                f"prototype width {prototypes.shape[1]} does not match k={k}"
            )
        pipeline.rbf = RbfModel(
            prototypes=prototypes,
            width=float(manifest["rbf_width"]),
            w=arr("rbf_w"),
            b=arr("rbf_b"),
            dropout=float(manifest.get("rbf_dropout", 0.2)),
        )
    else:
        raise DataError(f"bundle has unknown model kind {manifest['kind']!r}")

    if "thresholds" in manifest:
        t = manifest["thresholds"]
        try:
            pipeline.thresholds = ThresholdSet(
                alpha=float(t["alpha"]),
                thresholds=np.array(
                    [t["min"][d.value] for d in CLASSIFIED_DOMAINS]
                ),
                means=np.array([t["mean"][d.value] for d in CLASSIFIED_DOMAINS]),
                sigmas=np.array([t["sigma"][d.value] for d in CLASSIFIED_DOMAINS]),
            )
        except KeyError as e:
            raise DataError(f"bundle thresholds are missing a domain: {e}")
    return pipeline, lexicon, manifest
