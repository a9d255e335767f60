"""JSON current files.

Layout::

    {
      "version": "1",
      "mesh": {"ambient_dim": d, "vertices": [[x, y], ...],
               "simplices": {"1": [[i, j], ...], "2": [[i, j, k], ...]}},
      "chains": {"T": {"dim": 2, "entries": [[simplex_id, multiplicity], ...]}},
      "maps": {"psi": {"target_dim": 2, "vertex_images": [[u, v], ...]}},
      "target": {"mesh": {...}, "chains": {"ball": {...}}}
    }

``target`` is optional and holds the complex that chains are pushed onto.
Floats are written in Python's shortest round-trip form, so reading a file
back reproduces every coordinate bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .currents import SimplicialCurrent
from .errors import InputError
from .mesh import EmbeddedComplex
from .pa_maps import PiecewiseAffineMap

FORMAT_VERSION = "1"


@dataclass
class CurrentFile:
    mesh: EmbeddedComplex
    chains: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    target: EmbeddedComplex | None = None
    target_chains: dict = field(default_factory=dict)
    version: str = FORMAT_VERSION

    def chain(self, name):
        if name in self.chains:
            return self.chains[name]
        raise InputError(f"chains.{name}: no such chain (available: {', '.join(self.chains) or 'none'})")

    def map(self, name):
        if name in self.maps:
            return self.maps[name]
        raise InputError(f"maps.{name}: no such map (available: {', '.join(self.maps) or 'none'})")

    def target_chain(self, name):
        if name in self.target_chains:
            return self.target_chains[name]
        raise InputError(f"target.chains.{name}: no such chain")


# ------------------------------------------------------------------ encode
def _mesh_obj(c):
    return {
        "ambient_dim": c.ambient_dim,
        "vertices": c.vertices.tolist(),
        "simplices": {str(k): c.simplices(k).tolist() for k in range(1, c.top_dim + 1)},
    }


def _chain_obj(T):
    return {"dim": T.dim, "entries": [[int(i), int(m)] for i, m in zip(T.ids, T.mults)]}


def to_obj(cf: CurrentFile) -> dict:
    obj = {
        "version": cf.version,
        "mesh": _mesh_obj(cf.mesh),
        "chains": {k: _chain_obj(v) for k, v in cf.chains.items()},
        "maps": {k: {"target_dim": m.target_dim, "vertex_images": m.vertex_images.tolist()} for k, m in cf.maps.items()},
    }
    if cf.target is not None:
        obj["target"] = {"mesh": _mesh_obj(cf.target), "chains": {k: _chain_obj(v) for k, v in cf.target_chains.items()}}
    return obj


def dumps(cf: CurrentFile) -> str:
    return json.dumps(to_obj(cf), separators=(",", ":")) + "\n"


def write_current_file(path, cf: CurrentFile):
    with open(path, "w") as fh:
        fh.write(dumps(cf))


# ------------------------------------------------------------------ decode
def _need(obj, key, where, kind):
    if not isinstance(obj, dict) or key not in obj:
        raise InputError(f"{where}: missing field '{key}'")
    val = obj[key]
    if not isinstance(val, kind):
        raise InputError(f"{where}.{key}: expected {kind.__name__ if isinstance(kind, type) else kind[0].__name__}")
    return val


def _parse_mesh(obj, where):
    d = _need(obj, "ambient_dim", where, int)
    verts = _need(obj, "vertices", where, list)
    for i, v in enumerate(verts):
        if not isinstance(v, list) or len(v) != d or not all(isinstance(x, (int, float)) for x in v):
            raise InputError(f"{where}.vertices[{i}]: expected {d} numbers")
    simp = _need(obj, "simplices", where, dict)
    levels = {}
    for k, rows in simp.items():
        if not k.isdigit() or int(k) < 1:
            raise InputError(f"{where}.simplices: bad dimension key '{k}'")
        if not isinstance(rows, list):
            raise InputError(f"{where}.simplices.{k}: expected a list")
        for i, r in enumerate(rows):
            if not isinstance(r, list) or len(r) != int(k) + 1 or not all(isinstance(x, int) for x in r):
                raise InputError(f"{where}.simplices.{k}[{i}]: expected {int(k) + 1} vertex ids")
        levels[int(k)] = rows
    V = np.array(verts, dtype=float).reshape(len(verts), d)
    try:
        return EmbeddedComplex(V, levels)
    except InputError as e:
        raise InputError(f"{where}: {e}") from None


def _parse_chains(obj, c, where):
    out = {}
    for name, ch in obj.items():
        w = f"{where}.{name}"
        dim = _need(ch, "dim", w, int)
        ents = _need(ch, "entries", w, list)
        for i, e in enumerate(ents):
            if not isinstance(e, list) or len(e) != 2 or not all(isinstance(x, int) for x in e):
                raise InputError(f"{w}.entries[{i}]: expected [simplex_id, multiplicity]")
        ids = [e[0] for e in ents]
        mults = [e[1] for e in ents]
        try:
            out[name] = SimplicialCurrent.from_arrays(c, dim, ids, mults)
        except InputError as e:
            raise InputError(f"{w}: {e}") from None
    return out


def loads(text, source="<string>") -> CurrentFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(obj, dict):
        raise InputError(f"{source}: top level must be an object")
    version = _need(obj, "version", source, str)
    if version != FORMAT_VERSION:
        raise InputError(f"{source}: unsupported version {version!r}")
    mesh = _parse_mesh(_need(obj, "mesh", source, dict), "mesh")
    chains = _parse_chains(obj.get("chains", {}), mesh, "chains")
    maps = {}
    for name, m in obj.get("maps", {}).items():
        w = f"maps.{name}"
        tdim = _need(m, "target_dim", w, int)
        imgs = _need(m, "vertex_images", w, list)
        for i, v in enumerate(imgs):
            if not isinstance(v, list) or len(v) != tdim:
                raise InputError(f"{w}.vertex_images[{i}]: expected {tdim} numbers")
        try:
            maps[name] = PiecewiseAffineMap(mesh, np.array(imgs, dtype=float).reshape(len(imgs), tdim))
        except InputError as e:
            raise InputError(f"{w}: {e}") from None
    target = None
    tchains = {}
    if "target" in obj:
        t = obj["target"]
        target = _parse_mesh(_need(t, "mesh", "target", dict), "target.mesh")
        tchains = _parse_chains(t.get("chains", {}), target, "target.chains")
    return CurrentFile(mesh, chains, maps, target, tchains, version)


def read_current_file(path) -> CurrentFile:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    return loads(text, str(path))
