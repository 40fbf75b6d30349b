"""Plain-text ray-set files.

One record per line::

    # comment
    ray <id> <c1> ... <cd>        components: reals or re+imi complex literals
    basis <id1> ... <idd>         a context of pairwise orthogonal rays

Rays are normalised on load; basis rays must be orthogonal within 1e-8.
"""

from __future__ import annotations

import itertools
from importlib import resources
from pathlib import Path

import numpy as np

from ..linalg import DEFAULT_TOL, ContractError, Tolerances, ket_projector
from .connectives import OneTimeHistory
from .pba import ContextSet, make_context_set

ORTHOGONALITY_TOL = 1e-8
BUNDLED = ("cabello18", "peres33", "spin1-chain")


class RayFileError(ContractError):
    """Malformed or inconsistent ray-set file."""


def parse_component(tok: str) -> complex:
    tok = tok.strip()
    try:
        if tok.endswith("i"):
            return complex(tok[:-1] + "j")
        return complex(float(tok))
    except ValueError as exc:
        raise RayFileError(f"bad component {tok!r}") from exc


def format_component(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    sign = "+" if z.imag >= 0 or np.isnan(z.imag) else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def parse_rays(text: str, tol: Tolerances = DEFAULT_TOL, source: str = "<text>"):
    """Return ``(ids, vectors, bases)`` from ray-file text."""
    ids: list = []
    vectors: list = []
    bases: list = []
    dim = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "ray":
            if len(rest) < 2:
                raise RayFileError(f"{source}:{lineno}: ray needs an id and components")
            rid, comps = rest[0], rest[1:]
            if rid in ids:
                raise RayFileError(f"{source}:{lineno}: duplicate ray id {rid!r}")
            if dim is None:
                dim = len(comps)
            elif len(comps) != dim:
                raise RayFileError(f"{source}:{lineno}: ray {rid!r} has {len(comps)} components, expected {dim}")
            v = np.array([parse_component(t) for t in comps], dtype=np.complex128)
            norm = np.linalg.norm(v)
            if norm == 0:
                raise RayFileError(f"{source}:{lineno}: ray {rid!r} is the zero vector")
            ids.append(rid)
            vectors.append(v / norm)
        elif head == "basis":
            bases.append((lineno, rest))
        else:
            raise RayFileError(f"{source}:{lineno}: unknown record {head!r}")
    out_bases = []
    for n, (lineno, members) in enumerate(bases):
        tag = f"basis #{n + 1} (line {lineno}: {' '.join(members)})"
        if dim is None or len(members) != dim:
            raise RayFileError(f"{source}: {tag} must list exactly {dim} rays")
        try:
            idx = [ids.index(m) for m in members]
        except ValueError as exc:
            raise RayFileError(f"{source}: {tag} references an unknown ray") from exc
        for a, b in itertools.combinations(idx, 2):
            overlap = abs(np.vdot(vectors[a], vectors[b]))
            if overlap > ORTHOGONALITY_TOL:
                raise RayFileError(
                    f"{source}: {tag} is not orthogonal: |<{ids[a]}|{ids[b]}>| = {overlap:.3g}"
                )
        out_bases.append(idx)
    return ids, vectors, out_bases


def context_set_from_rays(ids, vectors, bases, tol: Tolerances = DEFAULT_TOL, time: float = 0.0) -> ContextSet:
    elements = [OneTimeHistory(ket_projector(v), time, rid) for rid, v in zip(ids, vectors)]
    return make_context_set(elements, bases, tol, dim=len(vectors[0]) if vectors else None)


def load_rays(source, tol: Tolerances = DEFAULT_TOL) -> ContextSet:
    """Load a ray file (path, bundled dataset name, or text with ``ray`` records)."""
    text, name = read_ray_source(source)
    ids, vectors, bases = parse_rays(text, tol, name)
    if not vectors:
        raise RayFileError(f"{name}: no rays")
    return context_set_from_rays(ids, vectors, bases, tol)


def read_ray_source(source) -> tuple[str, str]:
    if isinstance(source, Path) or "\n" not in str(source):
        path = Path(source)
        if path.exists():
            return path.read_text(), str(path)
        stem = path.name[:-5] if path.name.endswith(".rays") else path.name
        if stem in BUNDLED:
            return bundled_text(stem), f"{stem}.rays"
        raise RayFileError(f"ray file {str(source)!r} not found")
    return str(source), "<text>"


def bundled_text(name: str) -> str:
    return resources.files("histkit").joinpath("data", f"{name}.rays").read_text()


def dump_rays(ids, vectors, bases, header: str = "") -> str:
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    for rid, v in zip(ids, vectors):
        lines.append("ray " + rid + " " + " ".join(format_component(z) for z in v))
    for b in bases:
        lines.append("basis " + " ".join(ids[i] for i in b))
    return "\n".join(lines) + "\n"
