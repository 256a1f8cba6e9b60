"""nOFF mesh interchange.

Layout: header line ``nOFF``, then the ambient dimension, then
``<num_vertices> <num_facets>``, one vertex per line (n reals), one facet
per line (n 0-based vertex indices, orientation-significant).  ``#`` starts
a comment; blank lines are ignored.
"""

import numpy as np

from .errors import MeshFormatError
from .mesh import SimplicialMesh


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def loads_noff(text):
    """Parse nOFF text into a SimplicialMesh."""
    lines = _content_lines(text)

    def take(what):
        try:
            return next(lines)
        except StopIteration:
            raise MeshFormatError(f"unexpected end of file while reading {what}") from None

    lineno, header = take("header")
    if header != "nOFF":
        raise MeshFormatError(f"line {lineno}: expected 'nOFF' header, got {header!r}")
    lineno, dim_line = take("dimension")
    try:
        dim = int(dim_line)
    except ValueError:
        raise MeshFormatError(f"line {lineno}: bad dimension {dim_line!r}") from None
    lineno, counts = take("counts")
    parts = counts.split()
    if len(parts) != 2:
        raise MeshFormatError(f"line {lineno}: expected '<num_vertices> <num_facets>'")
    try:
        n_verts, n_facets = int(parts[0]), int(parts[1])
    except ValueError:
        raise MeshFormatError(f"line {lineno}: bad counts {counts!r}") from None

    verts = np.empty((n_verts, dim), dtype=np.float64)
    for i in range(n_verts):
        lineno, line = take(f"vertex {i}")
        fields = line.split()
        if len(fields) != dim:
            raise MeshFormatError(f"line {lineno}: expected {dim} coordinates")
        try:
            verts[i] = [float(x) for x in fields]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad coordinate in {line!r}") from None

    facets = np.empty((n_facets, dim), dtype=np.int64)
    for i in range(n_facets):
        lineno, line = take(f"facet {i}")
        fields = line.split()
        if len(fields) != dim:
            raise MeshFormatError(f"line {lineno}: expected {dim} vertex indices")
        try:
            facets[i] = [int(x) for x in fields]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad index in {line!r}") from None

    try:
        return SimplicialMesh(dim, verts, facets)
    except ValueError as exc:
        raise MeshFormatError(str(exc)) from exc


def dumps_noff(mesh, comment=None):
    """Serialize a mesh as nOFF text (full float round-trip precision)."""
    out = []
    if comment:
        for line in comment.splitlines():
            out.append(f"# {line}")
    out.append("nOFF")
    out.append(str(mesh.dim))
    out.append(f"{mesh.n_vertices} {mesh.n_facets}")
    for row in mesh.vertices:
        out.append(" ".join(repr(float(x)) for x in row))
    for row in mesh.facets:
        out.append(" ".join(str(int(i)) for i in row))
    return "\n".join(out) + "\n"


def read_noff(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise MeshFormatError(f"cannot read {path}: {exc}") from exc
    return loads_noff(text)


def write_noff(mesh, path, comment=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_noff(mesh, comment=comment))
