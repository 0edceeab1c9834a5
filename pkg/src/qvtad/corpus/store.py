"""Embedding store: TSV manifest + raw little-endian float32 blob.

Manifest layout (UTF-8, tab separated):

    #blob=<blob filename, relative to the manifest>
    #dim=<embedding dimension>
    utterance_id<TAB>speaker_id<TAB>gender<TAB>offset<TAB>dim
    u001<TAB>spk003<TAB>M<TAB>0<TAB>256
    ...

`offset` is the byte offset of the row's vector inside the blob. Vectors are
stored as 32-bit floats and widened to float64 in memory, so a load/write
round trip is bit-exact.
"""

import os

import numpy as np

from ..errors import StoreError
from .types import GENDERS, EmbeddingVector

_HEADER = "utterance_id\tspeaker_id\tgender\toffset\tdim"


def write_embedding_store(manifest_path, store, blob_name=None):
    """Write `store` (mapping utterance_id -> EmbeddingVector) in iteration order."""
    if not store:
        raise StoreError("refusing to write an empty embedding store")
    dims = {vec.dim for vec in store.values()}
    if len(dims) != 1:
        raise StoreError(f"inconsistent embedding dims in store: {sorted(dims)}")
    dim = dims.pop()
    if blob_name is None:
        base = os.path.basename(manifest_path)
        blob_name = (base.rsplit(".", 1)[0] if "." in base else base) + ".blob"
    blob_path = os.path.join(os.path.dirname(manifest_path) or ".", blob_name)

    lines = [f"#blob={blob_name}", f"#dim={dim}", _HEADER]
    offset = 0
    with open(blob_path, "wb") as blob:
        for utt_id, vec in store.items():
            if vec.utterance_id != utt_id:
                raise StoreError(f"store key {utt_id!r} != utterance_id {vec.utterance_id!r}")
            raw = np.ascontiguousarray(vec.values, dtype="<f4").tobytes()
            blob.write(raw)
            lines.append(f"{utt_id}\t{vec.speaker_id}\t{vec.gender}\t{offset}\t{dim}")
            offset += len(raw)
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_embedding_store(manifest_path):
    """Load every manifest row; returns mapping utterance_id -> EmbeddingVector."""
    blob_name = None
    dim = None
    rows = []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#blob="):
                blob_name = line[len("#blob="):]
                continue
            if line.startswith("#dim="):
                dim = int(line[len("#dim="):])
                continue
            if line.startswith("#") or line == _HEADER:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise StoreError(f"{manifest_path}:{lineno}: expected 5 columns, got {len(parts)}")
            rows.append((lineno, parts))
    if blob_name is None or dim is None:
        raise StoreError(f"{manifest_path}: missing #blob=/#dim= declarations")
    if not rows:
        raise StoreError(f"{manifest_path}: no embedding rows")

    blob_path = os.path.join(os.path.dirname(manifest_path) or ".", blob_name)
    with open(blob_path, "rb") as fh:
        blob = fh.read()

    store = {}
    row_bytes = dim * 4
    for lineno, (utt_id, speaker_id, gender, offset_s, dim_s) in rows:
        if int(dim_s) != dim:
            raise StoreError(f"{manifest_path}:{lineno}: row dim {dim_s} != declared {dim}")
        if gender not in GENDERS:
            raise StoreError(f"{manifest_path}:{lineno}: bad gender {gender!r}")
        if utt_id in store:
            raise StoreError(f"{manifest_path}:{lineno}: duplicate utterance_id {utt_id!r}")
        offset = int(offset_s)
        if offset < 0 or offset + row_bytes > len(blob):
            raise StoreError(
                f"{manifest_path}:{lineno}: vector for {utt_id!r} reaches past the blob end")
        values = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        if not np.isfinite(values).all():
            raise StoreError(f"{manifest_path}:{lineno}: non-finite value in {utt_id!r}")
        store[utt_id] = EmbeddingVector(values, utt_id, speaker_id, gender)
    return store


def store_dim(store):
    return next(iter(store.values())).dim


def speakers_index(store):
    """speaker_id -> sorted list of its utterance ids."""
    index = {}
    for utt_id, vec in store.items():
        index.setdefault(vec.speaker_id, []).append(utt_id)
    for utts in index.values():
        utts.sort()
    return index
