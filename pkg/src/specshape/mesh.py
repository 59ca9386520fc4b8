"""Triangle meshes and per-vertex principal curvature estimation.

The curvature estimator fits a second fundamental form per face from the
change of vertex normals along its edges, then averages the face tensors at
each vertex (re-expressed in the vertex tangent frame) with corner-area weights.
"""
import io
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMeshError, InvalidParamsError, ObjParseError


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float
    faces: np.ndarray     # (F, 3) int, counter-clockwise seen from outside
    dropped_faces: int = 0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise InvalidParamsError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    def transformed(self, rotation=np.eye(3), translation=np.zeros(3), scale=1.0):
        v = scale * self.vertices @ np.asarray(rotation).T + np.asarray(translation)
        return TriangleMesh(v, self.faces, self.dropped_faces)


@dataclass(frozen=True)
class PerVertexShape:
    normal: np.ndarray
    kappa_min: float
    kappa_max: float
    dir_min: np.ndarray
    dir_max: np.ndarray
    umbilic: bool


@dataclass(frozen=True)
class VertexShapes:
    """Per-vertex arrays; rows of isolated vertices are NaN."""

    normal: np.ndarray
    kappa_min: np.ndarray
    kappa_max: np.ndarray
    dir_min: np.ndarray
    dir_max: np.ndarray
    umbilic: np.ndarray
    isolated: np.ndarray

    def __len__(self):
        return len(self.kappa_min)

    def vertex(self, i):
        return PerVertexShape(self.normal[i], float(self.kappa_min[i]), float(self.kappa_max[i]),
                              self.dir_min[i], self.dir_max[i], bool(self.umbilic[i]))


# ---------------------------------------------------------------- OBJ input

def _obj_index(token, nverts, lineno):
    head = token.split("/")[0]
    try:
        idx = int(head)
    except ValueError:
        raise ObjParseError(f"bad face index {token!r}", lineno) from None
    if idx == 0:
        raise ObjParseError("face index 0 is invalid", lineno)
    idx = idx - 1 if idx > 0 else nverts + idx
    if not 0 <= idx < nverts:
        raise ObjParseError(f"face index {token!r} out of range", lineno)
    return idx


def load_obj(data):
    """Parse the v/f subset of ASCII OBJ; polygons are fan-triangulated."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8", errors="replace")
    verts, tris = [], []
    for lineno, line in enumerate(io.StringIO(data), start=1):
        fields = line.split("#", 1)[0].split()
        if not fields:
            continue
        tag = fields[0]
        if tag == "v":
            if len(fields) < 4:
                raise ObjParseError("vertex needs 3 coordinates", lineno)
            try:
                verts.append([float(x) for x in fields[1:4]])
            except ValueError:
                raise ObjParseError("bad vertex coordinate", lineno) from None
        elif tag == "f":
            if len(fields) < 4:
                raise ObjParseError("face needs at least 3 vertices", lineno)
            idx = [_obj_index(t, len(verts), lineno) for t in fields[1:]]
            tris.extend([idx[0], idx[i], idx[i + 1]] for i in range(1, len(idx) - 1))
    if not verts or not tris:
        raise EmptyMeshError("mesh has no vertices or no faces")
    v = np.array(verts)
    f = np.array(tris, dtype=np.int64)
    keep = ~_degenerate(v, f)
    return TriangleMesh(v, f[keep], int(np.sum(~keep)))


def _degenerate(v, f):
    e1 = v[f[:, 1]] - v[f[:, 0]]
    e2 = v[f[:, 2]] - v[f[:, 0]]
    area2 = np.linalg.norm(np.cross(e1, e2), axis=1)
    scale = np.maximum(np.einsum("ij,ij->i", e1, e1), np.einsum("ij,ij->i", e2, e2))
    same = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
    return same | (area2 <= 1e-12 * scale)


def write_obj(mesh):
    out = io.StringIO()
    for x, y, z in mesh.vertices:
        out.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
    for a, b, c in mesh.faces + 1:
        out.write(f"f {a} {b} {c}\n")
    return out.getvalue().encode()


# ---------------------------------------------------------------- normals

def _unit_rows(x):
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return x / n


def _accumulate(index, values, n):
    """Deterministic scatter-add of row vectors (bincount sums in index order)."""
    values = np.asarray(values)
    if values.ndim == 1:
        return np.bincount(index, weights=values, minlength=n)
    return np.stack([np.bincount(index, weights=values[:, j], minlength=n)
                     for j in range(values.shape[1])], axis=1)


def vertex_normals(mesh, weighting="angle"):
    """Vertex normals and a mask of isolated vertices (whose normal is NaN).

    ``weighting="angle"`` averages face normals by incident corner angle;
    ``"max"`` weights each corner's edge cross product by the inverse squared
    edge lengths, which is exact for vertices lying on a sphere.
    """
    v, f = mesh.vertices, mesh.faces
    nv = len(v)
    if weighting not in ("angle", "max"):
        raise InvalidParamsError(f"unknown normal weighting {weighting!r}")
    fn = _unit_rows(np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]]))
    idx, vals = [], []
    for j in range(3):
        a = v[f[:, (j + 1) % 3]] - v[f[:, j]]
        b = v[f[:, (j + 2) % 3]] - v[f[:, j]]
        if weighting == "angle":
            cosang = np.einsum("ij,ij->i", _unit_rows(a), _unit_rows(b))
            contrib = fn * np.arccos(np.clip(cosang, -1.0, 1.0))[:, None]
        else:
            la = np.einsum("ij,ij->i", a, a)
            lb = np.einsum("ij,ij->i", b, b)
            contrib = np.cross(a, b) / (la * lb)[:, None]
        idx.append(f[:, j])
        vals.append(contrib)
    acc = _accumulate(np.concatenate(idx), np.concatenate(vals), nv)
    isolated = np.bincount(f.ravel(), minlength=nv) == 0
    normals = _unit_rows(acc)
    normals[isolated] = np.nan
    return normals, isolated


# ---------------------------------------------------------------- curvature

def _corner_areas(v, f):
    e = np.stack([v[f[:, 2]] - v[f[:, 1]], v[f[:, 0]] - v[f[:, 2]], v[f[:, 1]] - v[f[:, 0]]],
                 axis=1)  # e[:, j] is the edge opposite corner j
    area = 0.5 * np.linalg.norm(np.cross(e[:, 0], e[:, 1]), axis=1)
    l2 = np.einsum("fjk,fjk->fj", e, e)
    ew = np.stack([l2[:, 0] * (l2[:, 1] + l2[:, 2] - l2[:, 0]),
                   l2[:, 1] * (l2[:, 2] + l2[:, 0] - l2[:, 1]),
                   l2[:, 2] * (l2[:, 0] + l2[:, 1] - l2[:, 2])], axis=1)
    obtuse = np.any(ew <= 0, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = 0.5 * area / ew.sum(axis=1)
    voronoi = scale[:, None] * np.stack([ew[:, 1] + ew[:, 2], ew[:, 2] + ew[:, 0],
                                         ew[:, 0] + ew[:, 1]], axis=1)
    return np.where(obtuse[:, None], area[:, None] / 3.0, voronoi)


def _rotate_frame(u, v, new_normal):
    """Rotate tangent frames (u, v) rigidly so their normal becomes ``new_normal``."""
    old_normal = np.cross(u, v)
    ndot = np.einsum("ij,ij->i", old_normal, new_normal)
    flip = ndot <= -1.0
    perp_old = new_normal - ndot[:, None] * old_normal
    with np.errstate(divide="ignore", invalid="ignore"):
        dperp = (old_normal + new_normal) / (1.0 + ndot)[:, None]
    ru = u - dperp * np.einsum("ij,ij->i", u, perp_old)[:, None]
    rv = v - dperp * np.einsum("ij,ij->i", v, perp_old)[:, None]
    ru[flip], rv[flip] = -u[flip], -v[flip]
    return ru, rv


def _initial_frames(v, f, normals):
    nv = len(v)
    # first incident edge per vertex, in face order
    corner_v = f.ravel()
    nxt = np.roll(f, -1, axis=1).ravel()
    first = np.full(nv, -1)
    order = np.arange(len(corner_v))[::-1]
    first[corner_v[order]] = order
    have = first >= 0
    edge = np.zeros((nv, 3))
    edge[have] = v[nxt[first[have]]] - v[corner_v[first[have]]]
    d1 = edge - np.einsum("ij,ij->i", edge, normals)[:, None] * normals
    d1 = _unit_rows(d1)
    d2 = np.cross(normals, d1)
    return d1, d2


def principal_curvatures(mesh):
    """Per-vertex principal curvatures and directions.

    Curvature is positive where the surface curves away from the side the
    normals point to (a sphere with outward normals has kappa = +1/r).
    """
    v, f = mesh.vertices, mesh.faces
    nv, nf = len(v), len(f)
    normals, isolated = vertex_normals(mesh, weighting="max")
    pdir1, pdir2 = _initial_frames(v, f, np.nan_to_num(normals))

    e = np.stack([v[f[:, 2]] - v[f[:, 1]], v[f[:, 0]] - v[f[:, 2]], v[f[:, 1]] - v[f[:, 0]]],
                 axis=1)
    t = _unit_rows(e[:, 0])
    fn = _unit_rows(np.cross(e[:, 0], e[:, 1]))
    b = _unit_rows(np.cross(fn, t))

    # least squares for II = [[ku, kuv], [kuv, kv]] from dn_j = II e_j on the three edges
    u = np.einsum("fjk,fk->fj", e, t)
    w = np.einsum("fjk,fk->fj", e, b)
    n = normals
    dn = np.stack([n[f[:, 2]] - n[f[:, 1]], n[f[:, 0]] - n[f[:, 2]], n[f[:, 1]] - n[f[:, 0]]],
                  axis=1)
    dnu = np.einsum("fjk,fk->fj", dn, t)
    dnv = np.einsum("fjk,fk->fj", dn, b)
    zeros = np.zeros_like(u)
    rows = np.concatenate([np.stack([u, w, zeros], axis=2), np.stack([zeros, u, w], axis=2)],
                          axis=1)  # (F, 6, 3)
    rhs = np.concatenate([dnu, dnv], axis=1)  # (F, 6)
    normal_mat = np.einsum("fij,fik->fjk", rows, rows)
    normal_rhs = np.einsum("fij,fi->fj", rows, rhs)
    face_ii = np.linalg.solve(normal_mat, normal_rhs[..., None])[..., 0]  # (F, 3)

    corner = _corner_areas(v, f)
    point_area = _accumulate(f.ravel(), corner.ravel(), nv)

    cv = f.ravel()
    rep = np.repeat(np.arange(nf), 3)
    ft, fb, fnn = t[rep], b[rep], fn[rep]
    ru, rv = _rotate_frame(pdir1[cv], pdir2[cv], fnn)
    u1 = np.einsum("ij,ij->i", ru, ft)
    v1 = np.einsum("ij,ij->i", ru, fb)
    u2 = np.einsum("ij,ij->i", rv, ft)
    v2 = np.einsum("ij,ij->i", rv, fb)
    ku, kuv, kv = face_ii[rep, 0], face_ii[rep, 1], face_ii[rep, 2]
    proj = np.stack([ku * u1 * u1 + 2 * kuv * u1 * v1 + kv * v1 * v1,
                     ku * u1 * u2 + kuv * (u1 * v2 + u2 * v1) + kv * v1 * v2,
                     ku * u2 * u2 + 2 * kuv * u2 * v2 + kv * v2 * v2], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        wt = corner.ravel() / point_area[cv]
    tensor = _accumulate(cv, proj * wt[:, None], nv)

    a, c, d = tensor[:, 0], tensor[:, 1], tensor[:, 2]
    mean = 0.5 * (a + d)
    half = np.hypot(0.5 * (a - d), c)
    kmin, kmax = mean - half, mean + half
    ang = 0.5 * np.arctan2(-2.0 * c, d - a)  # direction of the smaller eigenvalue
    ca, sa = np.cos(ang)[:, None], np.sin(ang)[:, None]
    dmin = ca * pdir1 + sa * pdir2
    dmax = np.cross(normals, dmin)
    scale = np.maximum(np.abs(kmin), np.abs(kmax))
    umbilic = np.abs(kmax - kmin) <= 1e-9 * scale
    for arr in (kmin, kmax):
        arr[isolated] = np.nan
    dmin[isolated] = np.nan
    dmax[isolated] = np.nan
    return VertexShapes(normals, kmin, kmax, dmin, dmax, umbilic, isolated)


def shapes_to_csv(shapes):
    """CSV bytes: vertex_index,nx,ny,nz,kmin,kmax,dminx..dminz,dmaxx..dmaxz (9 sig. digits)."""
    out = io.StringIO()
    out.write("vertex_index,nx,ny,nz,kmin,kmax,dminx,dminy,dminz,dmaxx,dmaxy,dmaxz\n")
    for i in np.flatnonzero(~shapes.isolated):
        vals = [*shapes.normal[i], shapes.kappa_min[i], shapes.kappa_max[i],
                *shapes.dir_min[i], *shapes.dir_max[i]]
        out.write(f"{i}," + ",".join(f"{x:.9g}" for x in vals) + "\n")
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------- test meshes

def _icosphere(subdiv):
    g = (1.0 + 5 ** 0.5) / 2.0
    verts = [(-1, g, 0), (1, g, 0), (-1, -g, 0), (1, -g, 0), (0, -1, g), (0, 1, g),
             (0, -1, -g), (0, 1, -g), (g, 0, -1), (g, 0, 1), (-g, 0, -1), (-g, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in verts]
    for _ in range(subdiv):
        cache = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.array(verts), np.array(faces)


def make_test_mesh(kind, **params):
    """Analytic tessellations.

    plane:     nx=10, ny=10, size=1.0   -> (nx+1)(ny+1) vertices, 2 nx ny faces in z = 0
    sphere:    radius=1.0, subdiv=3     -> icosphere, 10*4^subdiv + 2 vertices
    cylinder:  radius=1.0, n_around=64, n_along=32, length=None
               -> open tube along z, n_around*(n_along+1) vertices
    ellipsoid: axes=(a, b, c), subdiv=3 -> icosphere scaled per axis; see
               :func:`ellipsoid_curvatures` for the closed form
    """
    try:
        if kind == "plane":
            nx, ny = int(params.get("nx", 10)), int(params.get("ny", 10))
            size = float(params.get("size", 1.0))
            if nx < 1 or ny < 1 or size <= 0:
                raise InvalidParamsError("plane needs nx, ny >= 1 and size > 0")
            xs = np.linspace(0, size * nx / max(nx, ny), nx + 1)
            ys = np.linspace(0, size * ny / max(nx, ny), ny + 1)
            gx, gy = np.meshgrid(xs, ys)
            verts = np.stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)], axis=1)
            idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
            a, b = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
            c, d = idx[1:, 1:].ravel(), idx[1:, :-1].ravel()
            faces = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
            return TriangleMesh(verts, faces)
        if kind == "sphere":
            r, sub = float(params.get("radius", 1.0)), int(params.get("subdiv", 3))
            if r <= 0 or sub < 0:
                raise InvalidParamsError("sphere needs radius > 0 and subdiv >= 0")
            verts, faces = _icosphere(sub)
            return TriangleMesh(r * verts, faces)
        if kind == "ellipsoid":
            axes = np.asarray(params.get("axes", (1.0, 1.0, 1.0)), dtype=float)
            sub = int(params.get("subdiv", 3))
            if axes.shape != (3,) or np.any(axes <= 0) or sub < 0:
                raise InvalidParamsError("ellipsoid needs three positive axes")
            verts, faces = _icosphere(sub)
            return TriangleMesh(verts * axes, faces)
        if kind == "cylinder":
            r = float(params.get("radius", 1.0))
            na, nl = int(params.get("n_around", 64)), int(params.get("n_along", 32))
            length = params.get("length")
            if r <= 0 or na < 3 or nl < 1:
                raise InvalidParamsError("cylinder needs radius > 0, n_around >= 3, n_along >= 1")
            length = 2 * np.pi * r * nl / na if length is None else float(length)
            th = 2 * np.pi * np.arange(na) / na
            zs = np.linspace(0, length, nl + 1)
            verts = np.array([(r * np.cos(a), r * np.sin(a), z) for z in zs for a in th])
            faces = []
            for j in range(nl):
                for i in range(na):
                    a, b = j * na + i, j * na + (i + 1) % na
                    c, d = b + na, a + na
                    faces += [(a, b, c), (a, c, d)]
            return TriangleMesh(verts, np.array(faces))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParamsError):
            raise
        raise InvalidParamsError(str(exc)) from exc
    raise InvalidParamsError(f"unknown test mesh kind {kind!r}")


def ellipsoid_curvatures(axes, points):
    """Closed-form (kappa_min, kappa_max) on the ellipsoid surface, outward normal."""
    a, b, c = axes
    x, y, z = np.asarray(points, dtype=float).T
    s = x * x / a ** 4 + y * y / b ** 4 + z * z / c ** 4
    gauss = 1.0 / ((a * b * c) ** 2 * s * s)
    mean = np.abs(x * x + y * y + z * z - a * a - b * b - c * c) / (2 * (a * b * c) ** 2 * s ** 1.5)
    disc = np.sqrt(np.maximum(mean * mean - gauss, 0.0))
    return mean - disc, mean + disc
