"""Command-line interface: co-array reports, PSF maps, imaging, missed-detection sweeps.

Each command reads an optional JSON config (flags override file values), writes
plot-ready CSV data plus a JSON manifest into the output directory, and by
default renders matplotlib figures next to the data.  Exit codes: 0 success,
2 usage or configuration error, 3 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .angular import NafPoint, make_grid, oversampled_bins
from .beamsynth import ConvergenceError, effective_weights, factorize, joint_psf, single_psf
from .geometry import ConstraintError, coarray_dims, make_ura, sum_coarray, validate_pair
from .imaging import NafImage, NoiseModel, Scenario, reconstruct
from .montecarlo import ExperimentConfig, place_targets, sweep
from .windowing import TaperSpec, WeightGrid, chebyshev_2d

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3

_SWEEP_HEADER = ["variant_n", "variant_d", "delta", "pmd", "ci_lo", "ci_hi", "trials"]
_MAP_HEADER = ["l", "eta", "power_db"]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _verify_csv(path: Path, header: list[str]) -> None:
    """Re-read a CSV and check its schema: header row, parseable numeric records."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got != header:
            raise ValueError(f"{path.name}: header {got} does not match {header}")
        count = 0
        for row in reader:
            if len(row) != len(header):
                raise ValueError(f"{path.name}: row {count + 2} has {len(row)} fields")
            for field in row:
                float(field)
            count += 1
        if count == 0:
            raise ValueError(f"{path.name}: no data records")


def _write_manifest(out_dir: Path, command: str, seed: int, params: dict, extras: dict, outputs: list[str]) -> None:
    canonical = json.dumps(params, sort_keys=True).encode()
    manifest = {
        "tool": "monosense",
        "version": __version__,
        "command": command,
        "seed": seed,
        "parameters": params,
        "config_sha256": hashlib.sha256(canonical).hexdigest(),
        "outputs": outputs,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    manifest.update(extras)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config root must be a JSON object")
    return cfg


def _geometry_params(cfg: dict, args) -> dict:
    params = {
        "comms": {"n_1d": 11, "spacing": 0.5},
        "sensing": {"n_1d": 3, "spacing": 2.0},
    }
    for key in ("comms", "sensing"):
        params[key].update(cfg.get(key, {}))
    if args.comms_n is not None:
        params["comms"]["n_1d"] = args.comms_n
    if args.comms_d is not None:
        params["comms"]["spacing"] = args.comms_d
    if args.sensing_n is not None:
        params["sensing"]["n_1d"] = args.sensing_n
    if args.sensing_d is not None:
        params["sensing"]["spacing"] = args.sensing_d
    return params


def _build_pair(params: dict):
    comms = make_ura(params["comms"]["n_1d"], params["comms"]["spacing"])
    sensing = make_ura(params["sensing"]["n_1d"], params["sensing"]["spacing"])
    return validate_pair(comms, sensing)


def _map_rows(grid, power_db: np.ndarray):
    ax = grid.axis
    for i in range(len(ax)):
        for j in range(len(ax)):
            yield ax[i], ax[j], power_db[i, j]


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_coarray(args) -> int:
    cfg = _load_config(args.config)
    params = _geometry_params(cfg, args)
    pair = _build_pair(params)
    coarray = sum_coarray(pair)
    spacing, n_1d = coarray_dims(pair)
    out = _out_dir(args)

    print(f"co-array: {n_1d} x {n_1d} elements, spacing {spacing:g} wavelengths")
    print(f"multiplicity: min {coarray.multiplicity.min()}, max {coarray.multiplicity.max()}")

    rows = []
    for ix in range(coarray.n_1d):
        for iz in range(coarray.n_1d):
            rows.append(
                (ix, iz, ix * coarray.spacing, iz * coarray.spacing, int(coarray.multiplicity[ix, iz]))
            )
    header = ["ix", "iz", "x", "z", "multiplicity"]
    _write_csv(out / "coarray.csv", header, rows)
    outputs = ["coarray.csv"]
    if args.plot:
        from .plotting import save_multiplicity_map

        save_multiplicity_map(coarray.multiplicity, coarray.spacing, out / "coarray.png")
        outputs.append("coarray.png")
    _write_manifest(
        out,
        "coarray",
        args.seed,
        params,
        {"coarray_n_1d": n_1d, "coarray_spacing": spacing},
        outputs,
    )
    if args.verify:
        _verify_csv(out / "coarray.csv", header)
    return EXIT_OK


def _psf_params(cfg: dict, args) -> dict:
    params = _geometry_params(cfg, args)
    params["taper_db"] = cfg.get("taper_db", 45.0)
    params["tol"] = cfg.get("tol", 1e-6)
    params["q_max"] = cfg.get("q_max")
    params["oversampling"] = cfg.get("oversampling", 8)
    params["scan"] = cfg.get("scan", {"l": 0.0, "eta": 0.0})
    return params


def _cmd_psf(args) -> int:
    cfg = _load_config(args.config)
    params = _psf_params(cfg, args)
    pair = _build_pair(params)
    spacing, n_plus = coarray_dims(pair)
    taper = TaperSpec(params["taper_db"])
    desired = chebyshev_2d(n_plus, taper, spacing=spacing)
    acq = factorize(pair, desired, q_max=params["q_max"], tol=params["tol"], seed=args.seed)
    grid = make_grid(oversampled_bins(n_plus, params["oversampling"]))
    scan = NafPoint(params["scan"]["l"], params["scan"]["eta"])

    joint = joint_psf(pair, acq, scan, grid)
    co_weights = effective_weights(pair, acq)
    coarray_map = single_psf(sum_coarray(pair).geometry, co_weights, scan, grid, spacing)
    n_s = pair.sensing.n_1d
    uniform_rx = WeightGrid(np.full((n_s, n_s), 1.0 / n_s**2), pair.sensing.spacing)
    sparse_map = single_psf(pair.sensing, uniform_rx, scan, grid, spacing)

    out = _out_dir(args)
    joint_db = joint.power_db()
    _write_csv(out / "psf_map.csv", _MAP_HEADER, _map_rows(grid, joint_db))

    j_eta0 = grid.bins_per_axis // 2
    cuts_header = ["l", "joint_db", "coarray_db", "sparse_rx_db"]
    cut_rows = zip(
        grid.axis,
        joint_db[:, j_eta0],
        coarray_map.power_db()[:, j_eta0],
        sparse_map.power_db()[:, j_eta0],
    )
    _write_csv(out / "psf_cuts.csv", cuts_header, cut_rows)
    outputs = ["psf_map.csv", "psf_cuts.csv"]

    print(
        f"factorized taper: Q={acq.q_count} acquisitions, residual {acq.residual:.3g}, "
        f"noise enhancement {acq.noise_enhancement:.3g}"
    )
    if args.plot:
        from .plotting import save_naf_map, save_psf_cuts

        save_naf_map(joint_db, out / "psf_map.png", "Joint PSF power", vmin=-80.0)
        save_psf_cuts(
            grid.axis,
            {
                "joint": joint_db[:, j_eta0],
                "co-array": coarray_map.power_db()[:, j_eta0],
                "sparse Rx only": sparse_map.power_db()[:, j_eta0],
            },
            out / "psf_cuts.png",
        )
        outputs += ["psf_map.png", "psf_cuts.png"]
    _write_manifest(
        out,
        "psf",
        args.seed,
        params,
        {
            "coarray_n_1d": n_plus,
            "coarray_spacing": spacing,
            "acquisition_count": acq.q_count,
            "factorization_residual": acq.residual,
            "noise_enhancement": acq.noise_enhancement,
        },
        outputs,
    )
    if args.verify:
        _verify_csv(out / "psf_map.csv", _MAP_HEADER)
        _verify_csv(out / "psf_cuts.csv", cuts_header)
    return EXIT_OK


def _image_params(cfg: dict, args) -> dict:
    params = _psf_params(cfg, args)
    del params["scan"]
    params["noise_db"] = cfg.get("noise_db", -10.0)
    if "targets" in cfg:
        params["targets"] = cfg["targets"]
    elif "random_delta" in cfg:
        params["random_delta"] = cfg["random_delta"]
    else:
        params["targets"] = [
            {"l": -0.15, "eta": -0.1, "phase": 0.0},
            {"l": 0.2, "eta": 0.25, "phase": 0.0},
        ]
    return params


def _cmd_image(args) -> int:
    cfg = _load_config(args.config)
    params = _image_params(cfg, args)
    pair = _build_pair(params)
    spacing, n_plus = coarray_dims(pair)
    taper = TaperSpec(params["taper_db"])
    desired = chebyshev_2d(n_plus, taper, spacing=spacing)
    acq = factorize(pair, desired, q_max=params["q_max"], tol=params["tol"], seed=args.seed)
    grid = make_grid(oversampled_bins(n_plus, params["oversampling"]))

    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 3]))
    if "random_delta" in params:
        scenario = place_targets(params["random_delta"], rng)
    else:
        targets = []
        for t in params["targets"]:
            coeff = t.get("magnitude", 1.0) * np.exp(1j * t.get("phase", 0.0))
            targets.append((NafPoint(t["l"], t["eta"]), complex(coeff)))
        scenario = Scenario(targets=tuple(targets))

    noise = NoiseModel.from_db(params["noise_db"]) if params["noise_db"] is not None else NoiseModel(0.0)
    image = reconstruct(pair, acq, scenario, noise, grid, rng=rng)
    power_db = image.power_db()

    out = _out_dir(args)
    _write_csv(out / "image.csv", _MAP_HEADER, _map_rows(grid, power_db))
    outputs = ["image.csv"]
    truth = [
        {"l": p.l, "eta": p.eta, "coeff_re": c.real, "coeff_im": c.imag}
        for p, c in scenario.targets
    ]
    print(f"imaged {scenario.k} scatterers on a {grid.bins_per_axis}^2 grid")
    if args.plot:
        from .plotting import save_naf_map

        save_naf_map(power_db, out / "image.png", "Reconstructed intensity", vmin=-60.0)
        outputs.append("image.png")
    _write_manifest(
        out,
        "image",
        args.seed,
        params,
        {
            "coarray_n_1d": n_plus,
            "acquisition_count": acq.q_count,
            "factorization_residual": acq.residual,
            "noise_enhancement": acq.noise_enhancement,
            "truth": truth,
        },
        outputs,
    )
    if args.verify:
        _verify_csv(out / "image.csv", _MAP_HEADER)
    return EXIT_OK


def _sweep_config(cfg: dict, args) -> ExperimentConfig:
    comms = {"n_1d": 11, "spacing": 0.5}
    comms.update(cfg.get("comms", {}))
    kwargs = dict(
        comms_n_1d=comms["n_1d"],
        comms_spacing=comms["spacing"],
        seed=args.seed,
    )
    for key in ("sensing_variants", "delta_grid", "noise_db", "trials", "taper_db", "pfa", "oversampling", "max_targets"):
        if key in cfg:
            kwargs[key] = cfg[key]
    if args.trials is not None:
        kwargs["trials"] = args.trials
    return ExperimentConfig(**kwargs)


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    config = _sweep_config(cfg, args)
    curves = sweep(config, threads=args.threads)

    out = _out_dir(args)
    rows = []
    for curve in curves:
        for p in curve.points:
            rows.append(
                (curve.variant_n, curve.variant_spacing, p.delta, p.pmd, p.ci_lo, p.ci_hi, p.trials)
            )
    _write_csv(out / "sweep.csv", _SWEEP_HEADER, rows)
    outputs = ["sweep.csv"]
    if args.plot:
        from .plotting import save_pmd_curves

        save_pmd_curves(curves, out / "sweep.png")
        outputs.append("sweep.png")

    detail = [
        {
            "variant_n": c.variant_n,
            "variant_d": c.variant_spacing,
            "coarray_n_1d": c.coarray_n_1d,
            "match_radius": c.match_radius,
            "acquisition_count": c.acquisition_count,
            "factorization_residual": c.factorization_residual,
            "points": [
                {
                    "delta": p.delta,
                    "misses": p.misses,
                    "any_miss_trials": p.any_miss_trials,
                    "false_alarms": p.false_alarms,
                    "pmd_per_trial": p.any_miss_trials / p.trials,
                }
                for p in c.points
            ],
        }
        for c in curves
    ]
    params = {
        "comms": {"n_1d": config.comms_n_1d, "spacing": config.comms_spacing},
        "sensing_variants": list(map(list, config.sensing_variants)),
        "delta_grid": list(config.delta_grid),
        "noise_db": config.noise_db,
        "trials": config.trials,
        "taper_db": config.taper_db,
        "pfa": config.pfa,
        "oversampling": config.oversampling,
        "max_targets": config.max_targets,
    }
    _write_manifest(out, "sweep", config.seed, params, {"curves": detail}, outputs)
    for curve in curves:
        print(
            f"variant n={curve.variant_n} d={curve.variant_spacing:g}: "
            f"co-array {curve.coarray_n_1d}, Q={curve.acquisition_count}, "
            f"match radius {curve.match_radius:.4f}"
        )
    if args.verify:
        _verify_csv(out / "sweep.csv", _SWEEP_HEADER)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--seed", type=int, default=0, help="root RNG seed")
    parser.add_argument("--out", default="monosense_out", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker process cap")
    parser.add_argument("--verify", action="store_true", help="re-read and validate outputs")
    parser.add_argument(
        "--no-plot", dest="plot", action="store_false", help="skip figure rendering"
    )


def _add_geometry_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--comms-n", type=int, help="comms elements per side")
    parser.add_argument("--comms-d", type=float, help="comms spacing [wavelengths]")
    parser.add_argument("--sensing-n", type=int, help="sensing elements per side")
    parser.add_argument("--sensing-d", type=float, help="sensing spacing [wavelengths]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monosense",
        description="Mono-static array sensing simulator: co-arrays, PSFs, imaging, sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"monosense {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coarray", help="report the sum co-array of a Tx/Rx pair")
    _add_common(p)
    _add_geometry_flags(p)
    p.set_defaults(func=_cmd_coarray)

    p = sub.add_parser("psf", help="factorize a taper and export PSF maps/cuts")
    _add_common(p)
    _add_geometry_flags(p)
    p.set_defaults(func=_cmd_psf)

    p = sub.add_parser("image", help="reconstruct one noisy scene")
    _add_common(p)
    _add_geometry_flags(p)
    p.set_defaults(func=_cmd_image)

    p = sub.add_parser("sweep", help="Monte Carlo missed-detection sweep")
    _add_common(p)
    p.add_argument("--trials", type=int, help="trials per curve point")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: factorization did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConstraintError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
