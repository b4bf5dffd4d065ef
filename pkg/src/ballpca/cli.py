"""Command-line pipeline: expand, pca, project, reconstruct, energy, rotate,
synth, gen-dataset.

Exit codes: 0 ok, 2 I/O or file-format problems, 3 domain errors, 4
numerical failures. Machine-readable results go to files; stdout carries
key=value summaries.
"""

import argparse
import glob
import os
import sys

import numpy as np

from . import io_formats as iof
from .basis import build_basis, build_grid, nyquist_band_limit
from .errors import DomainError, FormatError, NumericalError
from .harmonics import WignerAngles
from .invariant_pca import (
    build_covariance,
    center,
    eigendecompose,
    energy_curve,
    project,
    reconstruct,
    select_rank,
)
from .synthesis import fit_model, sample_volume
from .transform import expand_voxels, resample_voxels, rotate_coeffs, synthesize_on_grid

_ENERGY_TAGS = {"pca": "pca", "bh-abs": "bh_sorted_abs", "bh-uls": "bh_sorted_uls"}


def _parse_spec_flags(args, sidecar_n=None):
    opts = {}
    if args.spec:
        for part in args.spec.split(","):
            part = part.strip()
            if not part:
                continue
            key, _, value = part.partition("=")
            if key.strip() not in ("L", "band"):
                raise DomainError(f"unknown --spec key {key.strip()!r} (use L=, band=)")
            opts[key.strip()] = value.strip()
    if "L" not in opts:
        raise DomainError("--spec must set L=<int>")
    L = int(opts["L"])
    if args.nyquist:
        if "band" in opts:
            raise DomainError("give either band= or --nyquist, not both")
        if sidecar_n is None:
            raise DomainError("--nyquist needs a voxel input with a sidecar N")
        band = nyquist_band_limit(sidecar_n)
    elif "band" in opts:
        band = float(opts["band"])
    else:
        raise DomainError("--spec must set band=<float> (or pass --nyquist)")
    return build_basis(L, band)


def cmd_expand(args):
    vox = iof.read_voxels(args.infile)
    spec = _parse_spec_flags(args, sidecar_n=vox.N)
    coeffs = expand_voxels(spec, vox)
    iof.write_coeffs(args.out, coeffs)

    grid = build_grid(spec)
    samples = resample_voxels(vox, grid)
    resynth = synthesize_on_grid(spec, grid, coeffs).reshape(-1)
    w = grid.weights()
    num = float(np.sqrt(np.sum(w * np.abs(resynth - samples) ** 2)))
    den = float(np.sqrt(np.sum(w * np.abs(samples) ** 2)))
    residual = num / den if den > 0.0 else 0.0

    total = coeffs.norm2()
    radial = float(np.sum(np.abs(coeffs.data[spec.block_slice(0)]) ** 2))
    frac = (total - radial) / total if total > 0.0 else 0.0
    print(f"D={spec.D}")
    print(f"D_prime={spec.D_prime}")
    print(f"band_limit={spec.band_limit!r}")
    print(f"grid_residual={residual:.6e}")
    print(f"nonradial_energy_fraction={frac:.6e}")
    return 0


def _load_dataset(directory):
    paths = sorted(glob.glob(os.path.join(directory, "*.bhc")))
    if not paths:
        raise FormatError(f"no .bhc coefficient files found in {directory}")
    first = iof.read_coeffs(paths[0])
    vectors = [first] + [iof.read_coeffs(p, expected_spec=first.spec) for p in paths[1:]]
    return paths, vectors


def cmd_pca(args):
    _, vectors = _load_dataset(args.indir)
    cov = build_covariance(vectors, n_threads=args.threads, o3=args.o3)
    basis = eigendecompose(cov)
    d = select_rank(
        basis,
        d=args.d,
        energy=args.energy,
        gap=args.gap if args.gap else None,
    )
    iof.write_basis(args.out, basis, selected_d=d)
    print(f"n={len(vectors)}")
    print(f"D={basis.spec.D}")
    print(f"D_prime={basis.spec.D_prime}")
    print(f"selected_d={d}")
    head = ", ".join(f"{v:.6e}" for v in basis.lambdas[:8])
    print(f"lambda_head=[{head}]")
    print(f"lambda_total={float(np.sum((2 * basis.ells + 1) * basis.lambdas)):.6e}")
    return 0


def cmd_project(args):
    basis = iof.read_basis(args.basis)
    coeffs = iof.read_coeffs(args.infile, expected_spec=basis.spec)
    if args.center:
        coeffs = center(coeffs, basis.mean_radial)
    d = args.d if args.d is not None else basis.D
    alpha = project(coeffs, basis, d)
    iof.write_alphas(args.out, alpha)
    print(f"d={d}")
    print(f"alpha_norm2={float(np.sum(np.abs(alpha) ** 2)):.6e}")
    return 0


def cmd_reconstruct(args):
    basis = iof.read_basis(args.basis)
    alpha = iof.read_alphas(args.alpha)
    coeffs = reconstruct(alpha, basis)
    if args.add_mean:
        coeffs.data[basis.spec.block_slice(0)] += basis.mean_radial
    iof.write_coeffs(args.out, coeffs)
    print(f"d={alpha.size}")
    if args.compare:
        ref = iof.read_coeffs(args.compare, expected_spec=basis.spec)
        num = float(np.linalg.norm(coeffs.data - ref.data))
        den = float(np.linalg.norm(ref.data))
        rel = num / den if den > 0.0 else 0.0
        print(f"relative_error={rel:.6e}")
    return 0


def cmd_energy(args):
    tag = _ENERGY_TAGS[args.basis]
    basis = None
    if tag == "pca":
        if not args.basis_file:
            raise DomainError("--basis pca needs --basis-file")
        basis = iof.read_basis(args.basis_file)
        coeffs = iof.read_coeffs(args.infile, expected_spec=basis.spec)
        if args.center:
            coeffs = center(coeffs, basis.mean_radial)
    else:
        coeffs = iof.read_coeffs(args.infile)
    curve = energy_curve(coeffs, tag, basis=basis)
    iof.write_energy_csv(args.out, curve)
    print(f"D={curve.values.size}")
    print(f"w_final={float(curve.values[-1])!r}")
    return 0


def cmd_rotate(args):
    coeffs = iof.read_coeffs(args.infile)
    angles = WignerAngles(args.alpha, args.beta, args.gamma)
    out = rotate_coeffs(coeffs.spec, coeffs, angles)
    iof.write_coeffs(args.out, out)
    print(f"alpha={angles.alpha!r} beta={angles.beta!r} gamma={angles.gamma!r}")
    return 0


def cmd_synth(args):
    if args.model:
        model = iof.read_model(args.model)
    else:
        if not (args.indir and args.basis):
            raise DomainError("synth needs either --model or both --in and --basis")
        basis = iof.read_basis(args.basis)
        _, vectors = _load_dataset(args.indir)
        d = args.d if args.d is not None else basis.D
        alphas = np.vstack(
            [project(center(v, basis.mean_radial), basis, d)[None, :] for v in vectors]
        )
        model = fit_model(alphas, basis)
        if args.model_out:
            iof.write_model(args.model_out, model, basis_file=args.basis)
    os.makedirs(args.out_dir, exist_ok=True)
    for i in range(args.count):
        vol = sample_volume(model, args.seed + i)
        path = os.path.join(args.out_dir, f"synth_{i:04d}.bhc")
        iof.write_coeffs(path, vol)
        print(f"wrote={path}")
    print(f"seed={args.seed}")
    print(f"count={args.count}")
    return 0


def cmd_gen_dataset(args):
    spec = build_basis(args.L, args.band)
    vectors = iof.generate_synthetic_dataset(
        spec, args.n, args.rank, args.noise, args.seed, rotate=args.rotate
    )
    os.makedirs(args.out_dir, exist_ok=True)
    for i, vec in enumerate(vectors):
        iof.write_coeffs(os.path.join(args.out_dir, f"coeffs_{i:04d}.bhc"), vec)
    print(f"n={args.n}")
    print(f"D={spec.D}")
    print(f"out_dir={args.out_dir}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="ballpca",
        description="SO(3)-invariant PCA of 3D volumes in the ball-harmonics basis",
    )
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("expand", help="expand a voxel volume into coefficients")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--spec", help="basis flags, e.g. 'L=8,band=25.13' or 'L=8' with --nyquist")
    q.add_argument("--nyquist", action="store_true", help="band limit pi*N/2 from the sidecar")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_expand)

    q = sub.add_parser("pca", help="mean, block covariance, eigenbasis from a coefficient dir")
    q.add_argument("--in", dest="indir", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--o3", action="store_true", help="augment with xy-plane reflections")
    q.add_argument("--d", type=int, help="explicit rank")
    q.add_argument("--energy", type=float, help="energy threshold in (0, 1]")
    q.add_argument("--gap", action="store_true", help="largest-relative-gap rank")
    q.add_argument("--threads", type=int, default=1)
    q.set_defaults(func=cmd_pca)

    q = sub.add_parser("project", help="principal coefficients of one volume")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--basis", required=True)
    q.add_argument("--d", type=int)
    q.add_argument("--center", action="store_true", help="subtract the stored radial mean")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_project)

    q = sub.add_parser("reconstruct", help="volume from principal coefficients")
    q.add_argument("--alpha", required=True)
    q.add_argument("--basis", required=True)
    q.add_argument("--add-mean", action="store_true", help="re-add the stored radial mean")
    q.add_argument("--compare", help="print the relative error against this coefficient file")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_reconstruct)

    q = sub.add_parser("energy", help="cumulative energy curve CSV")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--basis", choices=sorted(_ENERGY_TAGS), required=True)
    q.add_argument("--basis-file", help="principal basis file (needed for --basis pca)")
    q.add_argument("--center", action="store_true")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_energy)

    q = sub.add_parser("rotate", help="apply a rotation in coefficient space")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--gamma", type=float, required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_rotate)

    q = sub.add_parser("synth", help="fit the Gaussian model and sample volumes")
    q.add_argument("--model", help="existing model JSON (skips fitting)")
    q.add_argument("--in", dest="indir", help="coefficient dir to fit from")
    q.add_argument("--basis", help="principal basis file to fit against")
    q.add_argument("--d", type=int)
    q.add_argument("--model-out", help="write the fitted model JSON here")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--count", type=int, default=1)
    q.add_argument("--out-dir", required=True)
    q.set_defaults(func=cmd_synth)

    q = sub.add_parser("gen-dataset", help="write a synthetic low-rank dataset")
    q.add_argument("--L", type=int, required=True)
    q.add_argument("--band", type=float, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--rank", type=int, required=True)
    q.add_argument("--noise", type=float, default=0.0)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--rotate", action="store_true")
    q.add_argument("--out-dir", required=True)
    q.set_defaults(func=cmd_gen_dataset)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:  # includes Data/Compatibility errors
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
