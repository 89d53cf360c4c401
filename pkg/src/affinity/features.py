"""Feature assembly and serialization.

One embedding (exact or sketched) drives every requested feature family:
per-edge effective resistances, directed hitting-time pairs, node embedding
rows, and edge difference vectors. A manifest records everything needed to
regenerate the numbers bit for bit: graph hash, solver settings, sketch
parameters, and rotation seeds.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass, replace as dc_replace
from pathlib import Path

import numpy as np

from .embeddings import (ResistiveEmbedding, exact_embedding, random_rotation,
                         sketched_embedding)
from .graph import Graph, GraphInputError
from .solvers import SolverConfig

FAMILIES = ("edge_er", "edge_ht", "node_embedding", "edge_embedding")

FORMAT_VERSION = 1

_BINARY_MAGIC = b"RESE"
_FLAG_SKETCHED = 1
_FLAG_ROTATED = 2
_FLAG_INTEGER = 4


@dataclass(frozen=True)
class FeatureSet:
    """Assembled feature arrays plus their provenance manifest.

    Families not requested are None. ``edge_index`` always tags the edge
    order the per-edge arrays follow.
    """

    num_nodes: int
    edge_index: np.ndarray
    manifest: dict
    edge_er: np.ndarray | None = None
    edge_ht: np.ndarray | None = None
    node_embedding: np.ndarray | None = None
    edge_embedding: np.ndarray | None = None

    def family_arrays(self) -> dict:
        out = {}
        for name in FAMILIES:
            arr = getattr(self, name)
            if arr is not None:
                out[name] = arr
        return out


def graph_digest(graph: Graph) -> str:
    """SHA-256 over the canonical edge arrays, for manifest provenance."""
    h = hashlib.sha256()
    h.update(np.int64(graph.num_nodes).tobytes())
    h.update(np.ascontiguousarray(graph.edge_u, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(graph.edge_v, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(graph.edge_w, dtype="<f8").tobytes())
    return h.hexdigest()


def _edge_hitting_times(graph: Graph, embedding: ResistiveEmbedding,
                        diffs: np.ndarray) -> np.ndarray:
    """(m, 2) array of (H(u, v), H(v, u)) per edge, from the inner-product
    identity, with component-local mean and edge mass."""
    n_comp = max(graph.num_components, 1)
    if graph.num_components <= 1:
        comp_mass = np.array([graph.total_weight])
        comp_mean = embedding.mean[None, :]
    else:
        comp_mass = np.zeros(n_comp)
        np.add.at(comp_mass, graph.component_of[graph.edge_u], graph.edge_w)
        sums = np.zeros((n_comp, embedding.dim))
        for j in range(embedding.dim):
            sums[:, j] = np.bincount(graph.component_of,
                                     weights=graph.degrees
                                     * embedding.vectors[:, j],
                                     minlength=n_comp)
        comp_mean = sums / (2.0 * comp_mass[:, None])
    edge_comp = graph.component_of[graph.edge_u]
    mass = comp_mass[edge_comp]
    mean = comp_mean[edge_comp]
    vec_u = embedding.vectors[graph.edge_u]
    vec_v = embedding.vectors[graph.edge_v]
    # diffs = r_u - r_v; H(u, v) = 2M <r_v - r_u, r_v - p>
    h_uv = 2.0 * mass * np.einsum("ij,ij->i", -diffs, vec_v - mean)
    h_vu = 2.0 * mass * np.einsum("ij,ij->i", diffs, vec_u - mean)
    return np.column_stack([h_uv, h_vu])


def assemble_features(graph: Graph, families, epsilon: float | None = None,
                      seed: int = 0, config: SolverConfig | None = None,
                      jl_constant: float = 4.0,
                      cap: int = 2048) -> FeatureSet:
    """Compute the requested feature families from a single embedding.

    With ``epsilon`` None the exact embedding is used (graph must be at most
    ``cap`` nodes); otherwise a sketched embedding with the given seed.

    Args:
        families: iterable drawn from ``FAMILIES``.
        epsilon: sketch distortion, or None for the exact path.
        seed: sketch seed (ignored on the exact path).
        config: solver settings.
        jl_constant: oversampling constant for the sketch dimension.
        cap: node-count cap for the exact path.
    """
    requested = list(dict.fromkeys(families))
    if not requested:
        raise ValueError("no feature families requested")
    unknown = [f for f in requested if f not in FAMILIES]
    if unknown:
        raise ValueError(f"unknown families {unknown}; valid: {list(FAMILIES)}")
    config = config or SolverConfig()

    if epsilon is None:
        if graph.num_nodes > cap:
            raise ValueError(
                f"exact features capped at {cap} nodes (graph has "
                f"{graph.num_nodes}); pass epsilon to sketch instead")
        embedding = exact_embedding(graph, cap=cap)
    else:
        embedding = sketched_embedding(graph, epsilon, seed, config,
                                       jl_constant)

    diffs = (embedding.vectors[graph.edge_u]
             - embedding.vectors[graph.edge_v])
    arrays: dict[str, np.ndarray] = {}
    if "edge_er" in requested:
        arrays["edge_er"] = np.einsum("ij,ij->i", diffs, diffs)
    if "edge_ht" in requested:
        arrays["edge_ht"] = _edge_hitting_times(graph, embedding, diffs)
    if "node_embedding" in requested:
        arrays["node_embedding"] = embedding.vectors
    if "edge_embedding" in requested:
        arrays["edge_embedding"] = diffs

    manifest = {
        "format_version": FORMAT_VERSION,
        "num_nodes": graph.num_nodes,
        "num_edges": graph.num_edges,
        "graph_sha256": graph_digest(graph),
        "families": requested,
        "kind": embedding.kind,
        "embedding_dim": embedding.dim,
        "epsilon": embedding.epsilon,
        "seed": embedding.seed,
        "jl_constant": embedding.jl_constant,
        "edge_embedding_convention": "row = embedding[u] - embedding[v]",
        "solver": {
            "dense_threshold": config.dense_threshold,
            "rel_tolerance": config.rel_tolerance,
            "max_iterations": config.max_iterations,
        },
        "rotation_seeds": [],
    }
    return FeatureSet(
        num_nodes=graph.num_nodes,
        edge_index=np.column_stack([graph.edge_u, graph.edge_v]),
        manifest=manifest,
        **arrays,
    )


def augment_with_rotation(features: FeatureSet, rotation_seed: int) -> FeatureSet:
    """Rotate the embedding-valued families by a seeded random rotation.

    Distance-derived families (edge_er, edge_ht) are untouched; the seed is
    appended to the manifest so the exact arrays can be replayed.
    """
    target = features.node_embedding if features.node_embedding is not None \
        else features.edge_embedding
    if target is None:
        raise ValueError("feature set has no embedding-valued family to rotate")
    rotation = random_rotation(target.shape[1], rotation_seed)
    updates: dict = {}
    if features.node_embedding is not None:
        updates["node_embedding"] = features.node_embedding @ rotation.matrix.T
    if features.edge_embedding is not None:
        updates["edge_embedding"] = features.edge_embedding @ rotation.matrix.T
    manifest = dict(features.manifest)
    manifest["rotation_seeds"] = list(manifest.get("rotation_seeds", [])) \
        + [int(rotation_seed)]
    return dc_replace(features, manifest=manifest, **updates)


def _require_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _array_rows(arr: np.ndarray) -> np.ndarray:
    return arr[:, None] if arr.ndim == 1 else arr


def export_features(features: FeatureSet, fmt: str, path: str | Path) -> list[Path]:
    """Write a feature set to disk; returns the files written.

    Formats:
        json: one file holding manifest plus nested-list arrays.
        csv: a directory with manifest.json and one CSV per family.
        binary: a directory with manifest.json and one packed array file per
            family (16-byte header: magic, rows, cols, flags; then row-major
            little-endian float64).
    """
    path = Path(path)
    if fmt == "json":
        if path.is_dir():
            path = path / "features.json"
        doc = {
            "manifest": features.manifest,
            "edge_index": features.edge_index.tolist(),
            "arrays": {name: arr.tolist()
                       for name, arr in features.family_arrays().items()},
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return [path]
    if fmt == "csv":
        out_dir = _require_dir(path)
        written = [out_dir / "manifest.json"]
        written[0].write_text(json.dumps(features.manifest, indent=2,
                                         sort_keys=True) + "\n")
        for name, arr in features.family_arrays().items():
            file = out_dir / f"{name}.csv"
            rows = _array_rows(arr)
            with file.open("w", newline="") as fh:
                writer = csv.writer(fh)
                if name.startswith("edge_"):
                    header = ["u", "v"] + [f"c{j}" for j in range(rows.shape[1])]
                    writer.writerow(header)
                    for (u, v), row in zip(features.edge_index, rows):
                        writer.writerow([int(u), int(v)]
                                        + [repr(float(x)) for x in row])
                else:
                    writer.writerow(["node"]
                                    + [f"c{j}" for j in range(rows.shape[1])])
                    for node, row in enumerate(rows):
                        writer.writerow([node] + [repr(float(x)) for x in row])
            written.append(file)
        return written
    if fmt == "binary":
        out_dir = _require_dir(path)
        written = [out_dir / "manifest.json"]
        written[0].write_text(json.dumps(features.manifest, indent=2,
                                         sort_keys=True) + "\n")
        base_flags = 0
        if features.manifest.get("kind") == "sketched":
            base_flags |= _FLAG_SKETCHED
        if features.manifest.get("rotation_seeds"):
            base_flags |= _FLAG_ROTATED
        edge_file = out_dir / "edge_index.bin"
        _write_binary_array(edge_file, features.edge_index.astype(np.float64),
                            base_flags | _FLAG_INTEGER)
        written.append(edge_file)
        for name, arr in features.family_arrays().items():
            file = out_dir / f"{name}.bin"
            _write_binary_array(file, arr, base_flags)
            written.append(file)
        return written
    raise ValueError(f"unknown format {fmt!r}; expected json, csv, or binary")


def _write_binary_array(path: Path, arr: np.ndarray, flags: int) -> None:
    rows = _array_rows(np.asarray(arr, dtype=np.float64))
    header = struct.pack("<4sIII", _BINARY_MAGIC, rows.shape[0],
                         rows.shape[1], flags)
    payload = np.ascontiguousarray(rows, dtype="<f8").tobytes()
    path.write_bytes(header + payload)


def _read_binary_array(path: Path) -> tuple[np.ndarray, int]:
    blob = path.read_bytes()
    if len(blob) < 16:
        raise GraphInputError(f"{path}: truncated binary array")
    magic, rows, cols, flags = struct.unpack("<4sIII", blob[:16])
    if magic != _BINARY_MAGIC:
        raise GraphInputError(f"{path}: bad magic {magic!r}, "
                              f"expected {_BINARY_MAGIC!r}")
    expected = 16 + rows * cols * 8
    if len(blob) != expected:
        raise GraphInputError(f"{path}: expected {expected} bytes for "
                              f"{rows}x{cols} float64, got {len(blob)}")
    data = np.frombuffer(blob, dtype="<f8", offset=16).reshape(rows, cols)
    return data.copy(), flags


def load_features(path: str | Path, fmt: str) -> FeatureSet:
    """Read back a feature set written by :func:`export_features`."""
    path = Path(path)
    if fmt == "json":
        if path.is_dir():
            path = path / "features.json"
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise GraphInputError(f"{path}: invalid JSON: {exc}") from exc
        manifest = doc["manifest"]
        arrays = {name: np.asarray(vals, dtype=np.float64)
                  for name, vals in doc["arrays"].items()}
        return FeatureSet(
            num_nodes=manifest["num_nodes"],
            edge_index=np.asarray(doc["edge_index"], dtype=np.int64),
            manifest=manifest,
            **arrays,
        )
    if fmt == "csv":
        manifest = json.loads((path / "manifest.json").read_text())
        arrays: dict[str, np.ndarray] = {}
        edge_index = None
        for name in manifest["families"]:
            rows = []
            with (path / f"{name}.csv").open() as fh:
                reader = csv.reader(fh)
                header = next(reader)
                skip = 2 if name.startswith("edge_") else 1
                index_rows = []
                for row in reader:
                    index_rows.append([int(x) for x in row[:skip]])
                    rows.append([float(x) for x in row[skip:]])
            arr = np.asarray(rows, dtype=np.float64)
            if name == "edge_er":
                arr = arr[:, 0]
            arrays[name] = arr
            if name.startswith("edge_") and edge_index is None:
                edge_index = np.asarray(index_rows, dtype=np.int64)
        if edge_index is None:
            edge_index = np.zeros((manifest["num_edges"], 2), dtype=np.int64)
        return FeatureSet(num_nodes=manifest["num_nodes"],
                          edge_index=edge_index, manifest=manifest, **arrays)
    if fmt == "binary":
        manifest = json.loads((path / "manifest.json").read_text())
        edge_index, _ = _read_binary_array(path / "edge_index.bin")
        arrays = {}
        for name in manifest["families"]:
            arr, _ = _read_binary_array(path / f"{name}.bin")
            if name == "edge_er":
                arr = arr[:, 0]
            arrays[name] = arr
        return FeatureSet(num_nodes=manifest["num_nodes"],
                          edge_index=edge_index.astype(np.int64),
                          manifest=manifest, **arrays)
    raise ValueError(f"unknown format {fmt!r}; expected json, csv, or binary")
