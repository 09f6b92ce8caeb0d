"""Command-line driver: spectra, Schmidt scans, shaper design, tomography runs.

Each run is configured by a single JSON document; a few top-level scalar
fields can be overridden by flags so that one artifact fully describes a
run.  All output files are deterministic for a fixed config and seed:
floats are written with repr (shortest round-trip), JSON keys are sorted,
CSV uses '.' decimals and LF endings, and no timestamps enter data files
(wall time goes to stderr).

Exit codes: 0 success, 1 runtime or numeric failure, 2 config validation
failure.  Validation failures print one machine-parsable line to stderr:
``error: field=<dotted.path> message=<text>``.
"""

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import shaping, tomography
from .errors import DivergenceError, MappingSingularityError, WindowError
from .pumps import AiryPump, GaussianPump, TabulatedPump, TruncatedExponentialPump
from .spectrum import (
    SetupParams,
    exponential_spectrum,
    gaussian_spectrum,
    numerical_spectrum,
    scan_schmidt,
    schmidt_number,
)

SCHEMA_VERSION = 1


class ConfigError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"field={field} message={message}")
        self.field = field


def _fail_config(field: str, message: str) -> "ConfigError":
    return ConfigError(field, message)


def _require(config: dict, field: str, types, path: str):
    if field not in config:
        raise _fail_config(f"{path}{field}", "missing required field")
    value = config[field]
    if not isinstance(value, types) or isinstance(value, bool) and bool not in (
        types if isinstance(types, tuple) else (types,)
    ):
        raise _fail_config(f"{path}{field}", f"expected {types}, got {type(value).__name__}")
    return value


def _number(config: dict, field: str, path: str, positive: bool = False):
    value = _require(config, field, (int, float), path)
    if positive and not value > 0:
        raise _fail_config(f"{path}{field}", f"must be positive, got {value}")
    return float(value)


def _window(config: dict, path: str) -> tuple[int, int]:
    win = _require(config, "window", list, path)
    if len(win) != 2 or not all(isinstance(v, int) for v in win):
        raise _fail_config(f"{path}window", "must be a pair of integers")
    lo, hi = win
    if lo > 0 or hi < 0 or lo > hi:
        raise _fail_config(f"{path}window", f"[{lo}, {hi}] must satisfy lo <= 0 <= hi")
    return lo, hi


def _setup_params(config: dict, path: str) -> SetupParams:
    setup = _require(config, "setup", dict, path)
    sub = f"{path}setup."
    if "gamma" in setup or "eta" in setup:
        gamma = _number(setup, "gamma", sub, positive=True)
        eta = _number(setup, "eta", sub, positive=True)
        return SetupParams.from_ratios(gamma, eta, w_p=float(setup.get("w_p", 1.0)))
    w_p = _number(setup, "w_p", sub, positive=True)
    w_si = _number(setup, "w_si", sub, positive=True)
    w_f = _number(setup, "w_f", sub, positive=True)
    return SetupParams(w_p=w_p, w_si=w_si, w_f=w_f)


def _pump(config: dict, path: str):
    pump = _require(config, "pump", dict, path)
    sub = f"{path}pump."
    kind = _require(pump, "kind", str, sub)
    if kind == "gaussian":
        return GaussianPump(), None
    if kind == "exponential":
        return TruncatedExponentialPump(_number(pump, "a", sub)), float(pump["a"])
    if kind == "airy":
        order = pump.get("besselOrder", 1)
        if order not in (0, 1):
            raise _fail_config(f"{sub}besselOrder", f"must be 0 or 1, got {order}")
        return AiryPump(bessel_order=order), None
    if kind == "tabulated":
        samples = _require(pump, "samples", list, sub)
        try:
            arr = np.asarray(samples, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValueError("samples must be (radius, amplitude) pairs")
            return TabulatedPump(arr[:, 0], arr[:, 1]), None
        except ValueError as exc:
            raise _fail_config(f"{sub}samples", str(exc)) from exc
    raise _fail_config(f"{sub}kind", f"unknown pump kind {kind!r}")


def _output_settings(config: dict, args) -> tuple[str, str]:
    out = args.out or config.get("outputPath")
    if not out:
        raise _fail_config("outputPath", "missing required field")
    fmt = args.format or config.get("outputFormat", "csv")
    if fmt not in ("csv", "json"):
        raise _fail_config("outputFormat", f"must be 'csv' or 'json', got {fmt!r}")
    return out, fmt


def _write_table(path: str, fmt: str, metadata: dict, columns: list[str], rows: list[tuple]):
    if fmt == "csv":
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# schemaVersion,{SCHEMA_VERSION}\n")
            for key in sorted(metadata):
                fh.write(f"# {key},{_scalar_repr(metadata[key])}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_scalar_repr(v) for v in row) + "\n")
    else:
        doc = {
            "schemaVersion": SCHEMA_VERSION,
            "metadata": metadata,
            "columns": columns,
            "rows": [list(row) for row in rows],
        }
        _write_json(path, doc)


def _scalar_repr(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    text = str(value)
    if "," in text or '"' in text or "\n" in text:
        text = '"' + text.replace('"', '""') + '"'
    return text


def _write_json(path: str, doc: dict):
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def cmd_spectrum(config: dict, args) -> int:
    params = _setup_params(config, "")
    pump, a_value = _pump(config, "")
    lo, hi = _window(config, "")
    out, fmt = _output_settings(config, args)
    method = config.get("method", "closed")
    if method not in ("closed", "quadrature"):
        raise _fail_config("method", f"must be 'closed' or 'quadrature', got {method!r}")

    kind = config["pump"]["kind"]
    if method == "closed" and kind == "gaussian":
        spec = gaussian_spectrum(params, lo, hi)
    elif method == "closed" and kind == "exponential":
        spec = exponential_spectrum(a_value, params, lo, hi)
    else:
        spec = numerical_spectrum(pump, params, lo, hi)

    metadata = {
        "gamma": params.gamma,
        "eta": params.eta,
        "a": a_value,
        "pump": kind,
        "method": method,
        "schmidtNumber": schmidt_number(spec),
        "windowMin": lo,
        "windowMax": hi,
    }
    rows = [
        (int(ell), float(amp), float(amp**2))
        for ell, amp in zip(spec.ells, spec.amplitudes)
    ]
    _write_table(out, fmt, metadata, ["ell", "amplitude", "probability"], rows)
    return 0


def _a_grid(config: dict) -> list[float]:
    grid = _require(config, "aGrid", (list, dict), "")
    if isinstance(grid, list):
        if not grid or not all(isinstance(v, (int, float)) for v in grid):
            raise _fail_config("aGrid", "must be a non-empty list of numbers")
        return [float(v) for v in grid]
    sub = "aGrid."
    start = _number(grid, "start", sub)
    stop = _number(grid, "stop", sub)
    step = _number(grid, "step", sub, positive=True)
    if stop < start:
        raise _fail_config("aGrid", f"stop {stop} below start {start}")
    count = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(count)]


def cmd_scan(config: dict, args) -> int:
    eta = _number(config, "eta", "", positive=True)
    gammas = _require(config, "gammaSet", list, "")
    if not gammas or not all(isinstance(g, (int, float)) and g > 0 for g in gammas):
        raise _fail_config("gammaSet", "must be a non-empty list of positive numbers")
    gammas = [float(g) for g in gammas]
    a_values = _a_grid(config)
    lo, hi = _window(config, "")
    out, fmt = _output_settings(config, args)

    threads = max(1, args.threads or int(config.get("threads", 1)))
    if threads == 1:
        cells = scan_schmidt(a_values, gammas, eta, (lo, hi))
    else:
        # parallel over a-chunks; rows are re-assembled a-major so output
        # ordering never depends on completion order
        chunks = [a_values[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(
                lambda chunk: scan_schmidt(chunk, gammas, eta, (lo, hi)), chunks
            ))
        by_a = {}
        for part in partials:
            for cell in part:
                by_a.setdefault(cell.a, []).append(cell)
        cells = [cell for a in a_values for cell in by_a[float(a)]]

    metadata = {"eta": eta, "windowMin": lo, "windowMax": hi}
    rows = [
        (cell.a, cell.gamma, cell.schmidt, cell.error or "")
        for cell in cells
    ]
    _write_table(out, fmt, metadata, ["a", "gamma", "schmidtNumber", "error"], rows)
    return 0


def cmd_shape(config: dict, args) -> int:
    beta = _number(config, "beta", "", positive=True)
    target_cfg = _require(config, "target", dict, "")
    kind = _require(target_cfg, "kind", str, "target.")
    if kind not in ("flattop", "exponential", "gaussian"):
        raise _fail_config(
            "target.kind", f"must be 'flattop', 'exponential', or 'gaussian', got {kind!r}"
        )
    a_value = _number(target_cfg, "a", "target.") if kind == "exponential" else None
    measure = config.get("measure", "radial")
    if measure not in ("radial", "line"):
        raise _fail_config("measure", f"must be 'radial' or 'line', got {measure!r}")
    design = config.get("designGrid", {})
    xi_max = float(design.get("xiMax", 6.0))
    n_design = int(design.get("points", 4001))
    n_target = int(config.get("targetGrid", {}).get("points", 1001))
    prop = config.get("propagation", {})
    n_prop = int(prop.get("points", 2000))
    rho_max = float(prop.get("rhoMax", 2.5))
    if xi_max <= 0 or n_design < 16 or n_target < 16 or n_prop < 16 or rho_max <= 0:
        raise _fail_config("designGrid", "grid sizes must be sensible and positive")
    out, fmt = _output_settings(config, args)

    xi = np.linspace(0.0, xi_max, n_design)
    input_profile = shaping.RadialIntensity(xi, np.exp(-2.0 * xi**2))
    if kind == "gaussian":
        # identity target: same shape and span as the input
        target = shaping.RadialIntensity(xi, np.exp(-2.0 * xi**2))
    else:
        alpha_grid = np.linspace(0.0, 1.0, n_target)
        if kind == "flattop":
            target_vals = np.ones_like(alpha_grid)
        else:
            target_vals = np.exp(2.0 * a_value * alpha_grid**2)
        target = shaping.RadialIntensity(alpha_grid, target_vals)

    profile = shaping.solve_phase_ode(input_profile, target, grid=xi, measure=measure)
    profile = shaping.PhaseProfile(
        grid=profile.grid, phase=profile.phase, beta=beta, alpha=profile.alpha,
        measure=profile.measure, a_constant=profile.a_constant,
    )
    residual = shaping.mapping_residual(profile, input_profile, target)

    phase_path = config.get("phaseCsvPath") or (out + ".phase.csv")
    shaping.phase_to_csv(profile, phase_path)
    if "pgm" in config:
        pgm = config["pgm"]
        shaping.phase_to_pgm(
            profile,
            _require(pgm, "path", str, "pgm."),
            int(_number(pgm, "size", "pgm.", positive=True)),
            _number(pgm, "pitch", "pgm.", positive=True),
        )

    # dimensionless Fourier validation: unit waists, lambda f = 2 pi / beta
    system = shaping.ShaperSystem(
        focal_length=1.0, wavelength=2.0 * math.pi / beta, input_waist=1.0, output_waist=1.0
    )
    field = np.exp(-(xi**2)) * np.exp(1j * beta * profile.phase)
    rho_grid = np.linspace(0.0, rho_max, n_prop)
    rho_grid, out_field = shaping.propagate_fourier(field, xi, system, rho_grid)
    intensity = np.abs(out_field) ** 2
    energy_out = float(np.trapezoid(intensity * rho_grid, rho_grid))
    if kind == "flattop":
        level = 2.0 * energy_out  # flat disc of radius 1 holding all the energy
        target_curve = np.where(rho_grid <= 1.0, level, 0.0)
    elif kind == "exponential":
        shape_curve = np.where(rho_grid <= 1.0, np.exp(2.0 * a_value * rho_grid**2), 0.0)
        shape_energy = float(np.trapezoid(shape_curve * rho_grid, rho_grid))
        target_curve = shape_curve * (energy_out / shape_energy)
    else:
        shape_curve = np.exp(-2.0 * rho_grid**2)
        shape_energy = float(np.trapezoid(shape_curve * rho_grid, rho_grid))
        target_curve = shape_curve * (energy_out / shape_energy)
    l2_flat = shaping.relative_l2_error(rho_grid, intensity, target_curve, "radial",
                                        region_max=0.9)
    l2_full = shaping.relative_l2_error(rho_grid, intensity, target_curve, "radial")

    metadata = {
        "beta": beta,
        "measure": measure,
        "targetKind": kind,
        "targetA": a_value,
        "energyConstant": profile.a_constant,
        "mappingResidual": residual,
        "l2ErrorFlatRegion": l2_flat,
        "l2ErrorFull": l2_full,
        "flatRegionMax": 0.9,
        "phaseCsvPath": phase_path,
    }
    if kind == "gaussian":
        # identity design: report the ray-map deviation from alpha = xi over
        # the region where the input cumulative still resolves in floats
        cum = np.cumsum(np.concatenate([[0.0], 0.5 * (
            input_profile.values[1:] + input_profile.values[:-1]) * np.diff(xi)]))
        live = cum < (1.0 - 1e-12) * cum[-1]
        metadata["identityDeviation"] = float(np.max(np.abs(profile.alpha[live] - xi[live])))
    if kind == "exponential":
        mask = rho_grid <= 0.9
        fitted = shaping.fit_exponential_a(
            shaping.RadialIntensity(rho_grid[mask], intensity[mask]), w_p=1.0
        )
        metadata["fittedA"] = fitted
        metadata["fitRegionMax"] = 0.9
    rows = [
        (float(r), float(i), float(t))
        for r, i, t in zip(rho_grid, intensity, target_curve)
    ]
    _write_table(out, fmt, metadata, ["rho", "intensity", "target"], rows)
    return 0


def cmd_tomography(config: dict, args) -> int:
    d = _require(config, "d", int, "")
    if d < 3 or d % 2 == 0 or not all(d % k for k in range(2, int(math.isqrt(d)) + 1)):
        raise _fail_config("d", f"must be an odd prime >= 3, got {d}")
    spec_cfg = _require(config, "spectrum", dict, "")
    sub = "spectrum."
    kind = _require(spec_cfg, "kind", str, sub)
    if kind not in ("gaussian", "exponential", "uniform"):
        raise _fail_config(f"{sub}kind", f"must be gaussian, exponential, or uniform, got {kind!r}")
    n_flux = _number(config, "N", "", positive=True)
    noise = config.get("noise", "none")
    if noise not in ("none", "poisson"):
        raise _fail_config("noise", f"must be 'none' or 'poisson', got {noise!r}")
    seed = args.seed if args.seed is not None else config.get("seed")
    if noise == "poisson" and seed is None:
        raise _fail_config("seed", "an explicit seed is required when noise is enabled")
    out, fmt = _output_settings(config, args)
    if fmt != "json":
        raise _fail_config("outputFormat", "tomography results are JSON only")

    half = (d - 1) // 2
    if kind == "uniform":
        from .spectrum import SpiralSpectrum

        amps = np.ones(2 * half + 1) / math.sqrt(2 * half + 1)
        spectrum = SpiralSpectrum(-half, half, amps)
    else:
        gamma = _number(spec_cfg, "gamma", sub, positive=True)
        eta = _number(spec_cfg, "eta", sub, positive=True)
        window = spec_cfg.get("window", [-12, 12])
        params = SetupParams.from_ratios(gamma, eta)
        if kind == "gaussian":
            spectrum = gaussian_spectrum(params, window[0], window[1])
        else:
            spectrum = exponential_spectrum(
                _number(spec_cfg, "a", sub), params, window[0], window[1]
            )

    t_start = time.perf_counter()
    truth = tomography.theoretical_state(spectrum, d)
    mubs = tomography.mub_bases(d)
    counts = tomography.simulate_counts(truth, mubs, n_flux, seed=seed, noise=noise)
    estimate = tomography.mle_reconstruct(counts)
    mes = tomography.mes_state(d)
    fid_mes = tomography.fidelity(estimate, mes)
    metrics = {
        "fidelityToTruth": tomography.fidelity(estimate, truth),
        "fidelityToMES": fid_mes,
        "linearEntropy": tomography.linear_entropy(estimate),
        "cglmp": tomography.cglmp_value(estimate),
        "witnessThreshold": (d - 1) / d,
        "witness": tomography.dimensional_witness(fid_mes, d),
    }
    wall = time.perf_counter() - t_start
    doc = {
        "schemaVersion": SCHEMA_VERSION,
        "d": d,
        "N": n_flux,
        "noise": noise,
        "seed": seed,
        "densityMatrix": estimate.to_json_dict(),
        "metrics": metrics,
    }
    _write_json(out, doc)
    print(f"tomography d={d} done in {wall:.2f}s", file=sys.stderr)
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "scan": cmd_scan,
    "shape": cmd_shape,
    "tomography": cmd_tomography,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oamspdc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON config for the run")
        cmd.add_argument("--out", help="override config outputPath")
        cmd.add_argument("--format", choices=["csv", "json"], help="override outputFormat")
        cmd.add_argument("--seed", type=int, help="override config seed")
        cmd.add_argument("--threads", type=int, help="worker threads for scans")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except OSError as exc:
        print(f"error: field=config message={exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: field=config message=malformed JSON: {exc}", file=sys.stderr)
        return 2
    if not isinstance(config, dict):
        print("error: field=config message=config root must be a JSON object", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MappingSingularityError, ArithmeticError, RuntimeError) as exc:
        print(f"error: runtime message={exc}", file=sys.stderr)
        return 1
    except (WindowError, DivergenceError, ValueError) as exc:
        print(f"error: field=config message={exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
