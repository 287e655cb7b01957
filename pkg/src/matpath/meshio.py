"""Minimal OFF / OBJ mesh and feature-CSV reading and writing."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .builder import ShapeRecord
from .errors import InputError

MESH_SUFFIXES = (".off", ".obj")


def _triangulate(face):
    return [(face[0], face[i], face[i + 1]) for i in range(1, len(face) - 1)]


def read_off(path):
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line)
    if not tokens:
        raise InputError(f"{path}: empty OFF file")
    head = tokens[0]
    rest = tokens[1:]
    if head.upper().startswith("OFF"):
        tail = head[3:].split()
        if tail:
            rest = [" ".join(tail)] + rest
    else:
        raise InputError(f"{path}: missing OFF header")
    try:
        nv, nf = (int(x) for x in rest[0].split()[:2])
        verts = np.array([[float(x) for x in rest[1 + i].split()[:3]] for i in range(nv)])
        faces = []
        for i in range(nf):
            vals = [int(x) for x in rest[1 + nv + i].split()]
            faces.extend(_triangulate(vals[1:1 + vals[0]]))
    except (IndexError, ValueError) as exc:
        raise InputError(f"{path}: malformed OFF file ({exc})") from None
    return verts.reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def read_obj(path):
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        try:
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for p in parts[1:]:
                    i = int(p.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                faces.extend(_triangulate(idx))
        except ValueError as exc:
            raise InputError(f"{path}: malformed OBJ record {line!r} ({exc})") from None
    return np.array(verts, dtype=np.float64).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def read_mesh(path):
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".off":
        return read_off(path)
    if suffix == ".obj":
        return read_obj(path)
    raise InputError(f"{path}: unsupported mesh format {suffix!r} (expected .off or .obj)")


def _fmt(x):
    return repr(float(x))


def write_obj(path, vertices, faces=None):
    buf = io.StringIO()
    for v in vertices:
        buf.write(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
    if faces is not None:
        for f in faces:
            buf.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
    Path(path).write_text(buf.getvalue())


def write_off(path, vertices, faces=None):
    faces = np.zeros((0, 3), dtype=np.int64) if faces is None else faces
    buf = io.StringIO()
    buf.write(f"OFF\n{len(vertices)} {len(faces)} 0\n")
    for v in vertices:
        buf.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
    for f in faces:
        buf.write(f"3 {f[0]} {f[1]} {f[2]}\n")
    Path(path).write_text(buf.getvalue())


def read_features(path):
    """Per-vertex features from CSV, one row per vertex; a non-numeric first row is a header."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise InputError(f"{path}: empty feature file")
    try:
        [float(x) for x in lines[0].split(",")]
    except ValueError:
        lines = lines[1:]
    try:
        rows = [[float(x) for x in ln.split(",")] for ln in lines]
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric feature value ({exc})") from None
    if len({len(r) for r in rows}) > 1:
        raise InputError(f"{path}: rows have differing column counts")
    return np.array(rows, dtype=np.float64)


def write_features(path, features):
    np.savetxt(path, np.asarray(features), delimiter=",", fmt="%.17g")


def load_shape(mesh_path, feature_path=None):
    mesh_path = Path(mesh_path)
    verts, faces = read_mesh(mesh_path)
    feats = read_features(feature_path) if feature_path is not None else None
    return ShapeRecord(mesh_path.stem, verts, faces, feats)


def mesh_files(directory):
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in MESH_SUFFIXES)
