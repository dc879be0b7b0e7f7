"""On-disk subdomain bundles.

A bundle is a directory holding ``manifest.txt`` plus the files it names::

    # bddc subdomain bundle
    format 1
    n_subdomains 4
    global_dofs 49
    classes classes.txt
    rhs rhs.txt
    subdomain 0 sub0000.mtx sub0000.map
    ...

Subdomain matrices are Matrix Market files in the order of their map file,
which holds one 0-based global dof per line. The class file has one line
per global dof: ``interior``, ``edge <id>`` or ``corner <id>``. The
right-hand side has one value per line.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..decomposition import DofKind, assemble_global, make_decomposition
from ..errors import BundleError, DecompositionError
from ..problem import Problem
from ..sparse import read_matrix_market, write_matrix_market

MANIFEST = "manifest.txt"
_KIND_NAMES = {DofKind.INTERIOR: "interior", DofKind.EDGE: "edge", DofKind.CORNER: "corner"}
_KIND_BY_NAME = {v: k for k, v in _KIND_NAMES.items()}


def export_bundle(problem: Problem, path) -> Path:
    """Write ``problem`` under directory ``path``; returns the manifest path."""
    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
        dec = problem.decomposition
        lines = ["# bddc subdomain bundle", "format 1",
                 f"n_subdomains {dec.n_subdomains}", f"global_dofs {dec.n_global}",
                 "classes classes.txt", "rhs rhs.txt"]
        for i, (Ai, dofs) in enumerate(zip(problem.local_matrices, dec.subdomain_dofs)):
            mtx, mp = f"sub{i:04d}.mtx", f"sub{i:04d}.map"
            write_matrix_market(root / mtx, Ai)
            (root / mp).write_text("".join(f"{g}\n" for g in dofs.tolist()))
            lines.append(f"subdomain {i} {mtx} {mp}")
        cls = []
        for kind, ent in zip(dec.kinds.tolist(), dec.entities.tolist()):
            name = _KIND_NAMES[DofKind(kind)]
            cls.append(name if kind == DofKind.INTERIOR else f"{name} {ent}")
        (root / "classes.txt").write_text("\n".join(cls) + "\n")
        (root / "rhs.txt").write_text("".join(f"{v:.17g}\n" for v in problem.rhs.tolist()))
        manifest = root / MANIFEST
        manifest.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise BundleError(f"cannot write bundle: {exc}", path=getattr(exc, "filename", root)) from exc
    return manifest


def _need(path: Path) -> Path:
    if not path.is_file():
        raise BundleError(f"bundle file not found: {path}", path=path)
    return path


def _read_manifest(manifest: Path):
    fields, subs = {}, {}
    for lineno, raw in enumerate(_need(manifest).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if tok[0] == "subdomain":
            if len(tok) != 4:
                raise BundleError(f"{manifest}:{lineno}: expected 'subdomain <i> <mtx> <map>'",
                                  path=manifest)
            subs[int(tok[1])] = (tok[2], tok[3])
        elif len(tok) == 2:
            fields[tok[0]] = tok[1]
        else:
            raise BundleError(f"{manifest}:{lineno}: cannot parse '{line}'", path=manifest)
    for key in ("n_subdomains", "global_dofs", "classes", "rhs"):
        if key not in fields:
            raise BundleError(f"{manifest}: missing '{key}' entry", path=manifest)
    n_sub = int(fields["n_subdomains"])
    if sorted(subs) != list(range(n_sub)):
        raise BundleError(f"{manifest}: expected subdomain entries 0..{n_sub - 1}", path=manifest)
    return fields, [subs[i] for i in range(n_sub)]


def _read_classes(path: Path, n_global):
    kinds = np.zeros(n_global, dtype=np.int8)
    ents = np.full(n_global, -1, dtype=np.int64)
    lines = [ln.split() for ln in _need(path).read_text().splitlines() if ln.strip()]
    if len(lines) != n_global:
        raise BundleError(f"{path}: {len(lines)} class lines for {n_global} dofs", path=path)
    for g, tok in enumerate(lines):
        if tok[0] not in _KIND_BY_NAME:
            raise BundleError(f"{path}: dof {g} has unknown class '{tok[0]}'", path=path, dof=g)
        kinds[g] = _KIND_BY_NAME[tok[0]]
        if kinds[g] != DofKind.INTERIOR:
            if len(tok) != 2:
                raise BundleError(f"{path}: dof {g} needs an edge/corner id", path=path, dof=g)
            ents[g] = int(tok[1])
    return kinds, ents


def ingest_bundle(path) -> Problem:
    """Read a bundle (manifest path or its directory) back into a :class:`Problem`.

    Local dofs are reordered interior-first, matrices permuted to match, and
    weights rebuilt from the multiplicities implied by the maps.
    """
    manifest = Path(path)
    if manifest.is_dir():
        manifest = manifest / MANIFEST
    root = manifest.parent
    fields, subs = _read_manifest(manifest)
    n_global = int(fields["global_dofs"])
    kinds, ents = _read_classes(root / fields["classes"], n_global)
    rhs = np.loadtxt(_need(root / fields["rhs"]), ndmin=1)
    if rhs.shape != (n_global,):
        raise BundleError(f"{root / fields['rhs']}: expected {n_global} values", path=root / fields["rhs"])

    maps, mats = [], []
    for mtx, mp in subs:
        try:
            A = read_matrix_market(_need(root / mtx))
        except ValueError as exc:
            raise BundleError(str(exc), path=root / mtx) from exc
        dofs = np.loadtxt(_need(root / mp), dtype=np.int64, ndmin=1)
        if A.nrows != A.ncols or A.nrows != dofs.size:
            raise BundleError(f"{root / mtx}: size {A.shape} does not match map length {dofs.size}",
                              path=root / mtx)
        if dofs.size and (dofs.min() < 0 or dofs.max() >= n_global):
            raise BundleError(f"{root / mp}: global index out of range", path=root / mp)
        maps.append(dofs)
        mats.append(A)

    try:
        dec = make_decomposition(n_global, maps, kinds=kinds, entities=ents)
    except DecompositionError as exc:
        dof = _dof_in(str(exc))
        raise BundleError(f"{manifest}: {exc}", path=manifest, dof=dof) from exc

    local = []
    for A, raw, ordered in zip(mats, maps, dec.subdomain_dofs):
        if np.array_equal(raw, ordered):
            local.append(A)
            continue
        pos = {g: i for i, g in enumerate(raw.tolist())}
        perm = np.array([pos[g] for g in ordered.tolist()], dtype=np.int64)
        local.append(A.submatrix(perm, perm))
    return Problem(assemble_global(local, dec), local, dec, rhs, None, label=str(manifest))


def _dof_in(message):
    tok = message.split()
    for a, b in zip(tok, tok[1:]):
        if a == "dof" and b.isdigit():
            return int(b)
    return None
