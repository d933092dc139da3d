"""Configuration-driven experiment runner.

``spinorchaos run config.json`` executes one analysis (spectrum, classical,
scarring, stacking, sff, rigidity or dynamics) described by a JSON config
and writes CSV tables, JSON metadata and portable-pixmap heatmaps into the
output directory.  ``spinorchaos verify config.json`` executes the module
invariant suites at small N and exits nonzero on any failure.

Outputs are deterministic: identical config and seed give byte-identical
files, and every numeric file carries the config hash in its header.
"""

import argparse
import hashlib
import json
import os
import sys
import time

ANALYSES = ("spectrum", "classical", "scarring", "stacking", "sff",
            "rigidity", "dynamics")

_COMMON_KEYS = {"analysis", "N", "c1", "p", "seed", "output_dir", "threads"}
_ANALYSIS_KEYS = {
    "spectrum": {"sector", "window"},
    "classical": {"E0", "n0_seeds", "theta_seeds", "t_max", "lyapunov_T"},
    "scarring": {"E0", "filter_width", "shell_epsilon", "threshold",
                 "orbit_samples"},
    "stacking": {"E0", "filter_width", "shell_epsilon"},
    "sff": {"E0", "n_realizations", "times_max", "n_times", "filter_a",
            "filter_eps0", "filtered"},
    "rigidity": {"smoothing_s", "window_lengths"},
    "dynamics": {"initial", "t_max", "n_times", "period_hint",
                 "micro_width"},
}
_STOCHASTIC = {"classical", "sff"}


def config_hash(config: dict) -> str:
    """Short hash of the canonical (sorted-keys) JSON encoding."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def validate_config(config: dict) -> list:
    """Schema check; returns a list of error strings (empty when valid)."""
    errors = []
    analysis = config.get("analysis")
    if analysis not in ANALYSES:
        errors.append(f"analysis must be one of {ANALYSES}, got {analysis!r}")
        return errors
    allowed = _COMMON_KEYS | _ANALYSIS_KEYS[analysis]
    unknown = sorted(set(config) - allowed)
    if unknown:
        errors.append(f"unknown keys for analysis {analysis!r}: {unknown}")
    if not isinstance(config.get("N"), int) or config.get("N", 0) < 1:
        errors.append("N must be a positive integer")
    if analysis in _STOCHASTIC and "seed" not in config:
        errors.append(f"analysis {analysis!r} is stochastic: seed is mandatory")
    return errors


# ------------------------------------------------------------------ writers

def _fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path: str, columns: dict, meta_hash: str):
    """CSV with 17-significant-digit floats and the config hash header."""
    names = list(columns)
    rows = len(next(iter(columns.values())))
    with open(path, "w") as fh:
        fh.write(f"# config_hash={meta_hash}\n")
        fh.write(",".join(names) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(columns[c][i]) for c in names) + "\n")


def write_ppm(path: str, values, vmin=None, vmax=None):
    """Binary portable pixmap of a 2D field, linear dark-blue-to-yellow map.

    NaN cells (empty phase-space bins) render gray.
    """
    import numpy as np
    v = np.asarray(values, dtype=float)
    finite = np.isfinite(v)
    lo = np.min(v[finite]) if vmin is None else vmin
    hi = np.max(v[finite]) if vmax is None else vmax
    span = hi - lo if hi > lo else 1.0
    s = np.where(finite, np.clip((v - lo) / span, 0.0, 1.0), 0.0)
    rgb = np.empty(v.shape + (3,), dtype=np.uint8)
    rgb[..., 0] = np.where(finite, (255 * s).astype(np.uint8), 128)
    rgb[..., 1] = np.where(finite, (255 * s).astype(np.uint8), 128)
    rgb[..., 2] = np.where(finite, (96 + 159 * (1 - s)).astype(np.uint8), 128)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{v.shape[1]} {v.shape[0]}\n255\n".encode())
        fh.write(rgb.tobytes())


def write_metadata(path: str, config: dict, timings: dict, checks: dict):
    import numpy
    import scipy
    meta = {
        "config": config,
        "config_hash": config_hash(config),
        "versions": {"python": sys.version.split()[0],
                     "numpy": numpy.__version__, "scipy": scipy.__version__},
        "timings_s": timings,
        "invariant_checks": checks,
    }
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------------- runners

def _model(config):
    from .basis import ModelParams, build_basis, build_hamiltonian
    params = ModelParams(N=config["N"], c1=config.get("c1", 1.0),
                         p=config.get("p", 0.5))
    basis = build_basis(params.N)
    return params, basis, build_hamiltonian(params, basis)


def _run_spectrum(config, outdir, h):
    from .basis import split_parity_sectors
    from .spectrum import diagonalize, eigenstate_n0, one_body_entropies
    params, basis, H = _model(config)
    sector = config.get("sector", "merged")
    if sector != "merged":
        H_sym, H_anti = split_parity_sectors(H, basis)
        spec = diagonalize(H_sym if sector == "sym" else H_anti, sector)
        write_csv(os.path.join(outdir, "energies.csv"),
                  {"energy": spec.energies}, h)
        return {"dimension": spec.dimension, "sector": sector}
    spec = diagonalize(H)
    n0 = eigenstate_n0(spec, basis)
    ent = one_body_entropies(spec, basis)
    write_csv(os.path.join(outdir, "eigenstates.csv"),
              {"energy": spec.energies, "n0": n0, "entropy": ent}, h)
    return {"dimension": spec.dimension,
            "n0_in_bounds": bool((n0 >= 0).all() and (n0 <= 1).all())}


def _run_classical(config, outdir, h):
    import numpy as np
    from .basis import ModelParams
    from .classical import poincare_section
    params = ModelParams(N=config["N"], c1=config.get("c1", 1.0),
                         p=config.get("p", 0.5))
    E0 = config["E0"]
    results = poincare_section(
        E0, params, np.asarray(config["n0_seeds"], dtype=float),
        np.asarray(config["theta_seeds"], dtype=float),
        t_max=config.get("t_max", 400.0),
        lyapunov_T=config.get("lyapunov_T", 500.0))
    n0_all, th_all, tag = [], [], []
    lam = []
    for i, res in enumerate(results):
        pts = res["points"]
        n0_all.append(pts[:, 0])
        th_all.append(pts[:, 1])
        tag.append(np.full(pts.shape[0], i, dtype=float))
        lam.append(res["lyapunov"].exponent)
    write_csv(os.path.join(outdir, "section.csv"),
              {"trajectory": np.concatenate(tag),
               "n0": np.concatenate(n0_all),
               "theta": np.concatenate(th_all)}, h)
    write_csv(os.path.join(outdir, "lyapunov.csv"),
              {"trajectory": np.arange(len(lam), dtype=float),
               "exponent": np.asarray(lam)}, h)
    return {"n_trajectories": len(results)}


def _stack_common(config, outdir, h, with_partition):
    from .scarring import (EnergyFilter, GridSpec, partition_scar_antiscar,
                           sample_energy_shell, scarmometer, stack,
                           upo_line_average, uniformity_sigma)
    from .spectrum import diagonalize
    params, basis, H = _model(config)
    spec = diagonalize(H)
    grid_spec = GridSpec()
    filt = EnergyFilter(E0=config["E0"] * params.N,
                        width=config["filter_width"] * params.N)
    eps = config.get("shell_epsilon", 0.03)
    shell = sample_energy_shell(grid_spec, config["E0"], eps, params)
    checks = {}
    if not with_partition:
        result = stack(spec, filt, grid_spec, eps, basis, params, shell=shell)
        grid = result.grid
        write_ppm(os.path.join(outdir, "stack.ppm"), grid.normalized_values())
        write_csv(os.path.join(outdir, "stack.csv"),
                  {"value": grid.normalized_values().ravel()}, h)
        checks["sigma"] = result.sigma
        checks["contributing_states"] = result.contributing_states
        return checks
    scores = scarmometer(spec, config["E0"], basis, params,
                         n_samples=config.get("orbit_samples", 128))
    threshold = config.get("threshold", 0.03)
    g_scar, g_anti, g_full = partition_scar_antiscar(
        spec, scores, threshold, filt, grid_spec, eps, basis, params,
        shell=shell)
    for name, grid in (("scar", g_scar), ("antiscar", g_anti),
                       ("full", g_full)):
        write_ppm(os.path.join(outdir, f"{name}.ppm"),
                  grid.normalized_values())
    checks["scar_line_average"] = upo_line_average(
        g_scar, config["E0"], params.p, params.c1)
    checks["antiscar_line_average"] = upo_line_average(
        g_anti, config["E0"], params.p, params.c1)
    checks["full_sigma"] = uniformity_sigma(g_full)
    return checks


def _run_stacking(config, outdir, h):
    return _stack_common(config, outdir, h, with_partition=False)


def _run_scarring(config, outdir, h):
    return _stack_common(config, outdir, h, with_partition=True)


def _run_sff(config, outdir, h):
    import numpy as np
    from .spectral_stats import csff, disorder_ensemble_spectra, filtered_csff
    N = config["N"]
    spectra = list(disorder_ensemble_spectra(
        N, n_realizations=config.get("n_realizations", 100),
        p_center=config.get("p", 0.5), seed=config["seed"],
        c1=config.get("c1", 1.0)))
    times = np.linspace(0.0, config.get("times_max", 30.0),
                        config.get("n_times", 600))[1:]
    if config.get("filtered", False):
        curve = filtered_csff(spectra, times, a=config["filter_a"],
                              eps0=config["filter_eps0"], N=N)
    else:
        curve = csff(spectra, times)
    write_csv(os.path.join(outdir, "sff.csv"),
              {"time": curve.times, "csff": curve.values}, h)
    return {"ensemble_size": curve.ensemble_size}


def _run_rigidity(config, outdir, h):
    import numpy as np
    from .spectral_stats import spectral_rigidity, unfold
    from .spectrum import diagonalize
    from .basis import split_parity_sectors
    params, basis, H = _model(config)
    H_sym, _ = split_parity_sectors(H, basis)
    spec = diagonalize(H_sym, "sym", compute_vectors=False)
    uf = unfold(spec.energies, smoothing_s=config.get("smoothing_s", 0.6))
    ells = np.asarray(config.get(
        "window_lengths", np.geomspace(4, 400, 16).tolist()), dtype=float)
    curve = spectral_rigidity(uf, ells)
    write_csv(os.path.join(outdir, "rigidity.csv"),
              {"window_width": curve.window_widths,
               "delta3": curve.delta3}, h)
    return {"mean_spacing": uf.mean_spacing}


def _run_dynamics(config, outdir, h):
    import numpy as np
    from .coherent import PhaseSpacePoint
    from .dynamics import evolve_overlaps
    from .spectrum import diagonalize
    params, basis, H = _model(config)
    spec = diagonalize(H)
    pt = PhaseSpacePoint(*config["initial"])
    times = np.linspace(0.0, config["t_max"], config.get("n_times", 2000))
    run = evolve_overlaps(pt, spec, basis, times)
    write_csv(os.path.join(outdir, "quench.csv"),
              {"time": run.times, "fidelity": run.fidelity,
               "n0": run.n0_series}, h)
    return {"fidelity_t0": float(run.fidelity[0])}


_RUNNERS = {"spectrum": _run_spectrum, "classical": _run_classical,
            "scarring": _run_scarring, "stacking": _run_stacking,
            "sff": _run_sff, "rigidity": _run_rigidity,
            "dynamics": _run_dynamics}


def run(config: dict, output_dir: str) -> dict:
    """Execute one configured analysis; returns the metadata dict."""
    from .basis import DEFAULT_DIMENSION_CAP, hilbert_dimension
    errors = validate_config(config)
    if errors:
        raise ValueError("invalid config: " + "; ".join(errors))
    dim = hilbert_dimension(config["N"])
    if dim > DEFAULT_DIMENSION_CAP:
        raise ValueError(
            f"N={config['N']} gives dimension {dim} > cap "
            f"{DEFAULT_DIMENSION_CAP}; dense eigensolve would need roughly "
            f"{8 * dim * dim / 1e9:.1f} GB per matrix")
    os.makedirs(output_dir, exist_ok=True)
    h = config_hash(config)
    t0 = time.perf_counter()
    checks = _RUNNERS[config["analysis"]](config, output_dir, h)
    timings = {"total": round(time.perf_counter() - t0, 3)}
    write_metadata(os.path.join(output_dir, "metadata.json"),
                   config, timings, checks)
    return checks


# -------------------------------------------------------------------- verify

def _verify_checks(N: int):
    """Small-scale invariant suite; yields (name, passed, detail)."""
    import numpy as np
    from .basis import (ModelParams, build_basis, build_hamiltonian,
                        exchange_permutation, hilbert_dimension)
    from .classical import upo_period_analytic, upo_period_numeric
    from .coherent import PhaseSpacePoint, build_coherent_state
    from .spectrum import diagonalize

    params = ModelParams(N=N)
    basis = build_basis(N)
    H = build_hamiltonian(params, basis)

    yield ("dimension_law", basis.dimension == hilbert_dimension(N),
           f"D={basis.dimension}")
    asym = abs(H - H.T).max()
    yield ("hamiltonian_symmetric", asym < 1e-12, f"max |H - H^T| = {asym}")
    from scipy import sparse
    perm = exchange_permutation(basis)
    P = sparse.csr_matrix((np.ones(perm.size), (perm, np.arange(perm.size))))
    comm = abs(P @ H - H @ P).max()
    yield ("exchange_parity_commutes", comm < 1e-12, f"max |[P,H]| = {comm}")
    pt = PhaseSpacePoint(0.4, 0.1, 1.0, 0.5)
    norm = np.linalg.norm(build_coherent_state(pt, basis))
    yield ("coherent_norm", abs(norm - 1.0) < 1e-10, f"|zeta| = {norm}")
    spec = diagonalize(H)
    resid = np.max(np.abs(H @ spec.vectors - spec.vectors * spec.energies))
    yield ("eigen_residual", resid < 1e-10 * N, f"max residual = {resid}")
    Ta = upo_period_analytic(0.24, 0.5)
    Tn = upo_period_numeric(0.24, 0.5)
    rel = abs(Ta - Tn) / Ta
    yield ("upo_period_match", rel < 1e-6, f"rel diff = {rel}")


def verify(config: dict, output_dir: str) -> bool:
    """Run the invariant suite and write a pass/fail report; True if clean."""
    os.makedirs(output_dir, exist_ok=True)
    N = config.get("N", 20)
    report = {}
    ok = True
    for name, passed, detail in _verify_checks(N):
        report[name] = {"passed": bool(passed), "detail": detail}
        ok &= bool(passed)
    report["all_passed"] = ok
    with open(os.path.join(output_dir, "verify.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ok


# ---------------------------------------------------------------------- main

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinorchaos",
        description="Chaotic spinor-condensate numerical laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in ("run", "verify"):
        sp = sub.add_parser(cmd)
        sp.add_argument("config", help="JSON config file")
        sp.add_argument("--output-dir", default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    threads = args.threads or os.environ.get("SPINORCHAOS_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)

    with open(args.config) as fh:
        config = json.load(fh)
    if args.seed is not None:
        config["seed"] = args.seed
    outdir = args.output_dir or config.get("output_dir", "out")

    if args.command == "run":
        try:
            checks = run(config, outdir)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(json.dumps(checks, sort_keys=True, default=str))
        return 0
    ok = verify(config, outdir)
    print("all invariants passed" if ok else "invariant FAILURES; see verify.json")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
