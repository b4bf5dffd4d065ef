"""Artifact file formats and synthetic dataset generation.

All binary formats are little-endian and self-describing: an 8-byte magic,
a 4-byte JSON header length, the UTF-8 JSON header, then a fixed-size
payload whose length the header implies. Readers reject wrong magics,
unknown versions, and length mismatches with the failing byte offset, and
never return objects violating their type invariants.
"""

import json
import os
import struct

import numpy as np

from .basis import BasisSpec
from .errors import CompatibilityError, DataError, DomainError, FormatError
from .harmonics import WignerAngles
from .invariant_pca import BlockCovariance, PrincipalBasis
from .synthesis import SynthesisModel
from .transform import CoefficientVector, VoxelGrid, rotate_coeffs

COEFF_MAGIC = b"BALLCOEF"
BASIS_MAGIC = b"SO3PCABA"
COV_MAGIC = b"SO3BLKCV"
ALPHA_MAGIC = b"SO3ALPHA"

_C16 = np.dtype("<c16")
_F4 = np.dtype("<f4")


def _read_exact(f, nbytes, what):
    offset = f.tell()
    buf = f.read(nbytes)
    if len(buf) != nbytes:
        raise FormatError(
            f"truncated {what} at byte {offset}: expected {nbytes} bytes, got {len(buf)}"
        )
    return buf


def _read_magic(f, magic):
    buf = _read_exact(f, len(magic), "magic")
    if buf != magic:
        raise FormatError(f"bad magic at byte 0: expected {magic!r}, got {buf!r}")


def _read_header(f, magic):
    _read_magic(f, magic)
    (hlen,) = struct.unpack("<I", _read_exact(f, 4, "header length"))
    raw = _read_exact(f, hlen, "JSON header")
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable JSON header at byte {len(magic) + 4}: {exc}") from exc


def _write_header(f, magic, doc):
    raw = json.dumps(doc).encode("utf-8")
    f.write(magic)
    f.write(struct.pack("<I", len(raw)))
    f.write(raw)


def _check_version(doc, expected, what):
    if doc.get("version") != expected:
        raise FormatError(f"unsupported {what} version {doc.get('version')!r}")


def _complex_to_pairs(arr):
    return [[float(z.real), float(z.imag)] for z in np.asarray(arr)]


def _pairs_to_complex(pairs, what):
    try:
        out = np.array([complex(p[0], p[1]) for p in pairs], dtype=np.complex128)
    except (TypeError, IndexError) as exc:
        raise FormatError(f"field '{what}' must be a list of [re, im] pairs") from exc
    return out


# ---------------------------------------------------------------------------
# voxel volumes: raw <f4 payload + JSON sidecar
# ---------------------------------------------------------------------------


def voxel_sidecar_path(path):
    return str(path) + ".json"


def write_voxels(path, vox):
    with open(path, "wb") as f:
        f.write(np.ascontiguousarray(vox.data, dtype=_F4).tobytes())
    with open(voxel_sidecar_path(path), "w", encoding="utf-8") as f:
        json.dump({"N": vox.N, "dtype": "f32", "order": "x-fastest"}, f)


def read_voxels(path):
    try:
        with open(voxel_sidecar_path(path), "r", encoding="utf-8") as f:
            side = json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable voxel sidecar: {exc}") from exc
    for key, want in (("N", None), ("dtype", "f32"), ("order", "x-fastest")):
        if key not in side:
            raise FormatError(f"voxel sidecar missing field '{key}'")
        if want is not None and side[key] != want:
            raise FormatError(f"voxel sidecar field '{key}' must be {want!r}, got {side[key]!r}")
    N = int(side["N"])
    if N < 2:
        raise FormatError(f"voxel sidecar N must be >= 2, got {N}")
    expected = N**3 * 4
    actual = os.path.getsize(path)
    if actual != expected:
        raise FormatError(
            f"voxel payload length mismatch at byte {min(actual, expected)}: "
            f"expected {expected} bytes for N={N}, got {actual}"
        )
    data = np.fromfile(path, dtype=_F4).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise DataError("voxel payload contains non-finite values")
    return VoxelGrid(N=N, data=data)


# ---------------------------------------------------------------------------
# coefficient vectors
# ---------------------------------------------------------------------------


def write_coeffs(path, coeffs):
    with open(path, "wb") as f:
        _write_header(f, COEFF_MAGIC, coeffs.spec.to_json_doc())
        f.write(np.ascontiguousarray(coeffs.data, dtype=_C16).tobytes())


def read_coeffs(path, expected_spec=None):
    with open(path, "rb") as f:
        doc = _read_header(f, COEFF_MAGIC)
        spec = BasisSpec.from_json_doc(doc)
        if expected_spec is not None and not spec.same_layout(expected_spec):
            raise CompatibilityError(
                f"coefficient file {path} uses basis (L={spec.L}, band={spec.band_limit:.6g}), "
                f"expected (L={expected_spec.L}, band={expected_spec.band_limit:.6g})"
            )
        payload = _read_exact(f, spec.D * 16, "coefficient payload")
        trailing = f.read(1)
    if trailing:
        raise FormatError(f"trailing bytes after {spec.D} coefficients")
    data = np.frombuffer(payload, dtype=_C16).astype(np.complex128)
    return CoefficientVector(spec, data)


# ---------------------------------------------------------------------------
# principal basis
# ---------------------------------------------------------------------------


def write_basis(path, basis, selected_d=None):
    doc = {
        "version": 1,
        "spec": basis.spec.to_json_doc(),
        "entries": [
            {"ell": int(ell), "s": int(s), "lambda": float(lam)}
            for ell, s, lam in zip(basis.ells, basis.ss, basis.lambdas)
        ],
        "mean_radial": _complex_to_pairs(basis.mean_radial),
    }
    if selected_d is not None:
        doc["selected_d"] = int(selected_d)
    with open(path, "wb") as f:
        _write_header(f, BASIS_MAGIC, doc)
        for v in basis.vectors:
            f.write(np.ascontiguousarray(v, dtype=_C16).tobytes())


def read_basis(path, expected_spec=None):
    with open(path, "rb") as f:
        doc = _read_header(f, BASIS_MAGIC)
        _check_version(doc, 1, "principal basis")
        spec = BasisSpec.from_json_doc(doc.get("spec", {}))
        if expected_spec is not None and not spec.same_layout(expected_spec):
            raise CompatibilityError(
                f"basis file {path} was built for a different basis spec"
            )
        entries = doc.get("entries")
        if entries is None:
            raise FormatError("basis header missing field 'entries'")
        ells = np.array([int(e["ell"]) for e in entries], dtype=np.int64)
        ss = np.array([int(e["s"]) for e in entries], dtype=np.int64)
        lambdas = np.array([float(e["lambda"]) for e in entries], dtype=np.float64)
        mean_radial = _pairs_to_complex(doc.get("mean_radial", []), "mean_radial")
        vectors = []
        for ell in ells:
            S = spec.S[int(ell)]
            buf = _read_exact(f, S * 16, "eigenvector payload")
            vectors.append(np.frombuffer(buf, dtype=_C16).astype(np.complex128))
        trailing = f.read(1)
    if trailing:
        raise FormatError("trailing bytes after eigenvector payload")
    if mean_radial.shape != (spec.S[0],):
        raise FormatError("basis mean_radial length must equal S(0)")
    basis = PrincipalBasis(
        spec=spec, ells=ells, ss=ss, lambdas=lambdas, vectors=vectors,
        mean_radial=mean_radial,
    )
    if np.any(np.diff(basis.lambdas) > 0.0):
        raise FormatError("basis eigenvalues are not non-increasing")
    return basis


# ---------------------------------------------------------------------------
# block covariance
# ---------------------------------------------------------------------------


def write_covariance(path, cov):
    doc = {"version": 1, "spec": cov.spec.to_json_doc(), "n": int(cov.n)}
    with open(path, "wb") as f:
        _write_header(f, COV_MAGIC, doc)
        f.write(np.ascontiguousarray(cov.mean_radial, dtype=_C16).tobytes())
        for block in cov.blocks:
            f.write(np.ascontiguousarray(block, dtype=_C16).tobytes())


def read_covariance(path, expected_spec=None):
    with open(path, "rb") as f:
        doc = _read_header(f, COV_MAGIC)
        _check_version(doc, 1, "block covariance")
        spec = BasisSpec.from_json_doc(doc.get("spec", {}))
        if expected_spec is not None and not spec.same_layout(expected_spec):
            raise CompatibilityError(f"covariance file {path} uses a different basis spec")
        n = int(doc.get("n", 0))
        mean_buf = _read_exact(f, spec.S[0] * 16, "mean payload")
        mean_radial = np.frombuffer(mean_buf, dtype=_C16).astype(np.complex128)
        blocks = []
        for ell in range(spec.L + 1):
            S = spec.S[ell]
            buf = _read_exact(f, S * S * 16, f"covariance block l={ell}")
            blocks.append(np.frombuffer(buf, dtype=_C16).astype(np.complex128).reshape(S, S))
        trailing = f.read(1)
    if trailing:
        raise FormatError("trailing bytes after covariance payload")
    cov = BlockCovariance(spec=spec, n=n, mean_radial=mean_radial, blocks=blocks)
    return cov.validate()


# ---------------------------------------------------------------------------
# synthesis model (JSON)
# ---------------------------------------------------------------------------


def write_model(path, model, basis_file):
    doc = {
        "d": int(model.d),
        "mu": _complex_to_pairs(model.mu),
        "sigma": [float(s) for s in model.sigma],
        "basis_file": str(basis_file),
        "version": 1,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)


def read_model(path, basis=None):
    """Load a model; the referenced basis file resolves relative to the model."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable model JSON: {exc}") from exc
    for key in ("d", "mu", "sigma", "basis_file", "version"):
        if key not in doc:
            raise FormatError(f"model file missing field '{key}'")
    _check_version(doc, 1, "synthesis model")
    if basis is None:
        ref = doc["basis_file"]
        if not os.path.isabs(ref):
            ref = os.path.join(os.path.dirname(os.path.abspath(path)), ref)
        basis = read_basis(ref)
    mu = _pairs_to_complex(doc["mu"], "mu")
    sigma = np.asarray(doc["sigma"], dtype=np.float64)
    if np.any(sigma < 0.0):
        raise FormatError("model sigma entries must be non-negative")
    return SynthesisModel(
        basis=basis,
        d=int(doc["d"]),
        mu=mu,
        sigma=sigma,
        mean_radial=basis.mean_radial.copy(),
    )


# ---------------------------------------------------------------------------
# projections and energy curves
# ---------------------------------------------------------------------------


def write_alphas(path, alpha):
    alpha = np.asarray(alpha, dtype=np.complex128)
    with open(path, "wb") as f:
        _write_header(f, ALPHA_MAGIC, {"version": 1, "d": int(alpha.size)})
        f.write(np.ascontiguousarray(alpha, dtype=_C16).tobytes())


def read_alphas(path):
    with open(path, "rb") as f:
        doc = _read_header(f, ALPHA_MAGIC)
        _check_version(doc, 1, "projection")
        d = int(doc.get("d", -1))
        if d < 1:
            raise FormatError("projection header needs d >= 1")
        buf = _read_exact(f, d * 16, "projection payload")
        trailing = f.read(1)
    if trailing:
        raise FormatError("trailing bytes after projection payload")
    return np.frombuffer(buf, dtype=_C16).astype(np.complex128)


def write_energy_csv(path, curve):
    with open(path, "w", encoding="utf-8") as f:
        f.write("d,w\n")
        for i, w in enumerate(curve.values, start=1):
            f.write(f"{i},{float(w)!r}\n")


def read_energy_csv(path):
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != "d,w":
            raise FormatError(f"energy CSV must start with 'd,w', got {header!r}")
        values = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FormatError(f"energy CSV line {lineno} is not 'd,w'")
            d, w = int(parts[0]), float(parts[1])
            if d != len(values) + 1:
                raise FormatError(f"energy CSV line {lineno}: d column must count 1..D")
            values.append(w)
    return np.asarray(values, dtype=np.float64)


# ---------------------------------------------------------------------------
# synthetic datasets
# ---------------------------------------------------------------------------


def generate_synthetic_dataset(spec, n, rank, noise, seed, rotate=False):
    """Deterministic dataset drawn from ``rank`` random compact components.

    Each component pairs one degree l with a random radial profile,
    orthonormal among components sharing that degree; sample i fills every m
    of a component with an independent complex Gaussian amplitude. With
    noise = 0 the rotation-invariant covariance then has exactly ``rank``
    nonzero eigenvalue groups. Optional white noise of scale `noise` and a
    random per-sample rotation (Haar angles) sit on top. Same seed, same
    bytes.
    """
    if n < 1:
        raise DomainError("dataset needs n >= 1")
    if rank < 1 or rank > spec.D_prime:
        raise DomainError(
            f"rank must lie in [1, D'={spec.D_prime}] (one radial profile per component)"
        )
    if noise < 0.0:
        raise DomainError("noise scale must be non-negative")
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))

    slots = np.repeat(np.arange(spec.L + 1), [spec.S[ell] for ell in range(spec.L + 1)])
    chosen = rng.permutation(slots)[:rank]
    per_ell = {ell: int(np.sum(chosen == ell)) for ell in sorted(set(int(e) for e in chosen))}
    components = []  # (ell, radial profile) in deterministic order
    for ell, count in per_ell.items():
        S = spec.S[ell]
        raw = rng.standard_normal((S, count)) + 1j * rng.standard_normal((S, count))
        q, _ = np.linalg.qr(raw)
        for c in range(count):
            components.append((ell, q[:, c].copy()))

    out = []
    for i in range(n):
        data = np.zeros(spec.D, dtype=np.complex128)
        for k, (ell, profile) in enumerate(components):
            scale = 2.0 ** (-0.5 * k)  # distinct variances: deterministic ordering
            amps = scale * (
                rng.standard_normal(2 * ell + 1) + 1j * rng.standard_normal(2 * ell + 1)
            ) / np.sqrt(2.0)
            block = data[spec.block_slice(ell)].reshape(2 * ell + 1, spec.S[ell])
            block += np.outer(amps, profile)
        if noise > 0.0:
            data += noise * (
                rng.standard_normal(spec.D) + 1j * rng.standard_normal(spec.D)
            ) / np.sqrt(2.0)
        vec = CoefficientVector(spec, data)
        if rotate:
            angles = WignerAngles(
                rng.uniform(0.0, 2.0 * np.pi),
                float(np.arccos(rng.uniform(-1.0, 1.0))),
                rng.uniform(0.0, 2.0 * np.pi),
            )
            vec = rotate_coeffs(spec, vec, angles)
        out.append(vec)
    return out
