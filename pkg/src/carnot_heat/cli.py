"""Command line front end: reproducible experiments over every module.

Subcommands: distance, kernel, evolve, schoenberg (fit, reconstruct,
counterexample), sharpness, verify.  Artifact-producing commands write
CSV tables, grid files, and a run manifest into a per-run directory
named by the effective configuration hash, so identical configurations
land in the same place with byte-identical CSV outputs.  Exit codes:
0 success, 1 invariant or computation failure, 2 usage error.
"""

import argparse
import os
import sys

import numpy as np

from . import algebra, geometry, kernel, schoenberg, schrodinger
from .config import (ExperimentConfig, RunManifest, format_sig,
                     resolve_output_dir, write_csv)
from .errors import CarnotHeatError, UsageError
from .grid import load_grid


def _parse_floats(text, what):
    try:
        vals = [float(p) for p in str(text).split(",") if p.strip() != ""]
    except ValueError as exc:
        raise UsageError("malformed %s: %r" % (what, text)) from exc
    if not vals:
        raise UsageError("empty %s" % what)
    return vals


def _parse_ints(text, what):
    try:
        vals = [int(p) for p in str(text).split(",") if p.strip() != ""]
    except ValueError as exc:
        raise UsageError("malformed %s: %r" % (what, text)) from exc
    if not vals:
        raise UsageError("empty %s" % what)
    return vals


def _load_config(args):
    if getattr(args, "config", None):
        return ExperimentConfig.from_file(args.config)
    return ExperimentConfig({})


def _pick(args, cfg, name, default=None, cast=None):
    """Flag value if given, else config value, else default."""
    v = getattr(args, name.replace("-", "_"), None)
    if v is None:
        v = cfg.get(name, default)
    if v is None:
        return None
    return cast(v) if cast else v


def _run_dir(args, command, effective):
    cfg = ExperimentConfig(effective)
    base = resolve_output_dir(getattr(args, "out_dir", None))
    path = os.path.join(base, "%s-%s" % (command, cfg.hash[:10]))
    os.makedirs(path, exist_ok=True)
    return path, cfg


def _emit(path):
    print("wrote %s" % path)


def cmd_distance(args):
    cfg = _load_config(args)
    rows = []
    if args.x is not None or args.z is not None:
        if args.x is None or args.z is None:
            raise UsageError("--x and --z must be given together")
        x = np.array(_parse_floats(args.x, "--x vector"))
        z = np.array(_parse_floats(args.z, "--z vector"))
        if x.size % 2 != 0:
            raise UsageError("--x must have an even number of components")
        s = algebra.build_structure(x.size // 2, z.size)
        res = geometry.cc_distance(s, algebra.GroupPoint(x, z))
        xn = float(np.linalg.norm(x))
        zn = float(np.linalg.norm(z))
        quad = xn * xn + 4.0 * zn
        ratio = res.d ** 2 / quad if quad > 0 else np.pi / 4.0
        rows.append((xn, zn, res.theta, res.d, ratio))
    sweep_n = _pick(args, cfg, "sweep_theta", cast=int)
    if sweep_n:
        theta = np.linspace(0.0, np.pi - 1e-6, sweep_n)
        zn = geometry.angle_to_ratio(theta) / 4.0
        for th, z in zip(theta, zn):
            res = geometry._norm_distance(1.0, float(z))
            ratio = res.d ** 2 / (1.0 + 4.0 * z)
            rows.append((1.0, float(z), res.theta, res.d, float(ratio)))
    samples = _pick(args, cfg, "samples", cast=int)
    if samples:
        seed = _pick(args, cfg, "seed", cast=int)
        if seed is None:
            raise UsageError("--seed is mandatory for sampled sweeps")
        rng = np.random.default_rng(seed)
        for xn, zn in zip(rng.uniform(0.05, 3.0, samples),
                          rng.uniform(0.0, 3.0, samples)):
            res = geometry._norm_distance(float(xn), float(zn))
            ratio = res.d ** 2 / (xn * xn + 4.0 * zn)
            rows.append((float(xn), float(zn), res.theta, res.d,
                         float(ratio)))
    if not rows:
        raise UsageError(
            "nothing to do: give --x/--z, --sweep-theta, or --samples")
    header = ["x_norm", "z_norm", "theta", "d", "ratio"]
    if args.out_dir or os.environ.get("CARNOT_HEAT_OUT"):
        effective = {"samples": samples or 0, "sweep_theta": sweep_n or 0,
                     "seed": _pick(args, cfg, "seed", default=0, cast=int)}
        if args.x is not None:
            effective["x"] = tuple(_parse_floats(args.x, "--x vector"))
            effective["z"] = tuple(_parse_floats(args.z, "--z vector"))
        run_dir, eff_cfg = _run_dir(args, "distance", effective)
        manifest = RunManifest(eff_cfg.hash)
        manifest.start("distance")
        path = write_csv(os.path.join(run_dir, "distance.csv"), header, rows)
        manifest.stop("distance")
        manifest.add_file(path)
        _emit(path)
        _emit(manifest.write(os.path.join(run_dir, "manifest.json")))
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(format_sig(v) for v in row))
    return 0


def _complex_time(args, cfg):
    t_re = _pick(args, cfg, "t", cast=float)
    if t_re is None:
        raise UsageError("--t is required")
    t_im = _pick(args, cfg, "t_imag", default=0.0, cast=float)
    return t_re if t_im == 0.0 else complex(t_re, t_im)


def cmd_kernel(args):
    cfg = _load_config(args)
    n = _pick(args, cfg, "n", default=1, cast=int)
    m = _pick(args, cfg, "m", default=1, cast=int)
    s = algebra.build_structure(n, m)
    t = _complex_time(args, cfg)
    if args.at is not None:
        norms = _parse_floats(args.at, "--at norms")
        if len(norms) != 2:
            raise UsageError("--at expects x_norm,z_norm")
        x = np.zeros(2 * n)
        z = np.zeros(m)
        x[0], z[0] = norms
        value = kernel.eval_kernel(s, t, algebra.GroupPoint(x, z))
        if value.imag == 0.0:
            print(format_sig(value.real))
        else:
            print("%s,%s" % (format_sig(value.real), format_sig(value.imag)))
        return 0
    counts = _pick(args, cfg, "counts")
    spacings = _pick(args, cfg, "spacings")
    if counts is None or spacings is None:
        raise UsageError("give --at for a point or --counts/--spacings")
    counts = _parse_ints(counts, "--counts") if isinstance(counts, str) \
        else list(counts)
    spacings = _parse_floats(spacings, "--spacings") \
        if isinstance(spacings, str) else list(spacings)
    if len(counts) != 2 * n + m or len(spacings) != 2 * n + m:
        raise UsageError("counts and spacings must list all %d axes"
                         % (2 * n + m))
    effective = {"n": n, "m": m, "t": float(np.real(t)),
                 "t_imag": float(np.imag(t)),
                 "counts": tuple(counts), "spacings": tuple(spacings)}
    run_dir, eff_cfg = _run_dir(args, "kernel", effective)
    manifest = RunManifest(eff_cfg.hash)
    manifest.start("sample")
    grid = kernel.sample_kernel(s, t, tuple(counts), tuple(spacings))
    manifest.stop("sample")
    path = os.path.join(run_dir, "kernel.htgf")
    grid.save(path)
    manifest.add_file(path)
    _emit(path)
    _emit(manifest.write(os.path.join(run_dir, "manifest.json")))
    return 0


def cmd_evolve(args):
    cfg = _load_config(args)
    t = _pick(args, cfg, "t", cast=float)
    if t is None:
        raise UsageError("--t is required")
    eps = _pick(args, cfg, "eps", cast=float)
    if args.input:
        u0 = load_grid(args.input)
    else:
        n = _pick(args, cfg, "n", default=1, cast=int)
        m = _pick(args, cfg, "m", default=1, cast=int)
        s0 = _pick(args, cfg, "base_time", cast=float)
        counts = _pick(args, cfg, "counts")
        spacings = _pick(args, cfg, "spacings")
        if s0 is None or counts is None or spacings is None:
            raise UsageError("give --input, or base_time with counts and "
                             "spacings (flags or config) to start from a "
                             "kernel state")
        counts = _parse_ints(counts, "--counts") if isinstance(counts, str) \
            else list(counts)
        spacings = _parse_floats(spacings, "--spacings") \
            if isinstance(spacings, str) else list(spacings)
        struct = algebra.build_structure(n, m)
        u0 = kernel.sample_kernel(struct, s0, tuple(counts), tuple(spacings))
    effective = {"t": float(t), "eps": -1.0 if eps is None else float(eps),
                 "counts": tuple(u0.counts),
                 "spacings": tuple(float(h) for h in u0.spacings)}
    run_dir, eff_cfg = _run_dir(args, "evolve", effective)
    manifest = RunManifest(eff_cfg.hash)
    manifest.start("evolve")
    u1 = schrodinger.free_evolve(u0, t, eps=eps)
    manifest.stop("evolve")
    path = os.path.join(run_dir, "evolved.htgf")
    u1.save(path)
    manifest.add_file(path)
    _emit(path)
    _emit(manifest.write(os.path.join(run_dir, "manifest.json")))
    return 0


def _measure_rows(mu, m):
    return [(float(tau), float(w), mu.x_norm, mu.n, m, mu.fit_residual)
            for tau, w in zip(mu.tau, mu.weights)]


def cmd_schoenberg(args):
    cfg = _load_config(args)
    x_norm = _pick(args, cfg, "x_norm", default=0.0, cast=float)
    n = _pick(args, cfg, "n", default=1, cast=int)
    m = _pick(args, cfg, "m", default=1, cast=int)
    effective = {"x_norm": x_norm, "n": n, "m": m}
    header = ["tau", "weight", "x_norm", "n", "m", "residual"]
    if args.action == "fit":
        run_dir, eff_cfg = _run_dir(args, "schoenberg", effective)
        cache = os.path.join(run_dir, "measure-%s.csv" % eff_cfg.hash[:16])
        manifest = RunManifest(eff_cfg.hash)
        manifest.start("fit")
        mu = schoenberg.fit_measure(x_norm, n)
        manifest.stop("fit")
        write_csv(cache, header, _measure_rows(mu, m))
        manifest.add_file(cache)
        print("fit x_norm=%g n=%d: residual=%s kkt=%s atoms=%d"
              % (x_norm, n, format_sig(mu.fit_residual),
                 format_sig(mu.diagnostics["kkt"]),
                 mu.diagnostics["active_atoms"]))
        _emit(cache)
        _emit(manifest.write(os.path.join(run_dir, "manifest.json")))
        return 0
    z_list = _parse_floats(args.z if args.z is not None else "0,1,2,4",
                           "--z list")
    mu = schoenberg.fit_measure(x_norm, n)
    if args.action == "reconstruct":
        print("z,value")
        for z in z_list:
            print("%s,%s" % (format_sig(z), format_sig(
                schoenberg.reconstruct_kernel_slice(mu, m, z))))
        return 0
    cutoff = _pick(args, cfg, "cutoff", default=1.0, cast=float)
    ce = schoenberg.build_counterexample(mu, cutoff, m)
    if ce.warning:
        print("warning: %s" % ce.warning, file=sys.stderr)
    print("z,slice,kernel,ratio")
    prev = None
    monotone = True
    for z in z_list:
        f = float(ce(z))
        if n == 1 and m == 1 and x_norm == 0.0:
            ker = float(kernel.heisenberg_center_slice(1.0, z))
        else:
            ker = float(schoenberg.reconstruct_kernel_slice(mu, m, z))
        ratio = f / ker if ker > 0 else np.inf
        if prev is not None and ratio >= prev:
            monotone = False
        prev = ratio
        print("%s,%s,%s,%s" % (format_sig(z), format_sig(f),
                               format_sig(ker), format_sig(ratio)))
    if not monotone and not ce.warning:
        raise CarnotHeatError("counterexample ratio failed to decrease")
    return 0


def cmd_sharpness(args):
    cfg = _load_config(args)
    horizon = _pick(args, cfg, "horizon", default=None, cast=float)
    if horizon is None:
        horizon = float(args.T) if args.T is not None else 1.0
    eps_raw = args.eps if args.eps is not None else cfg.get("eps_list")
    if eps_raw is None:
        raise UsageError("--eps list is required")
    eps_list = _parse_floats(eps_raw, "--eps list") \
        if isinstance(eps_raw, str) else list(eps_raw)
    effective = {"horizon": horizon, "eps_list": tuple(eps_list)}
    run_dir, eff_cfg = _run_dir(args, "sharpness", effective)
    manifest = RunManifest(eff_cfg.hash)
    manifest.start("sharpness")
    rows = schrodinger.sharpness_experiment(eps_list, horizon)
    manifest.stop("sharpness")
    header = ["eps", "T", "a2", "b2", "product", "ratio", "fit_rms"]
    path = write_csv(os.path.join(run_dir, "sharpness.csv"), header,
                     [(r["eps"], r["T"], r["a2"], r["b2"], r["product"],
                       r["ratio"], r["fit_rms"]) for r in rows])
    manifest.add_file(path)
    _emit(path)
    _emit(manifest.write(os.path.join(run_dir, "manifest.json")))
    bad = [r for r in rows if r["ratio"] <= 1.0]
    if bad:
        raise CarnotHeatError(
            "threshold ratio not above 1 at eps=%s" % bad[0]["eps"])
    return 0


def _suite_algebra():
    checks = []
    worst = 0.0
    for n, m in [(1, 1), (2, 3), (4, 7), (8, 8)]:
        s = algebra.build_structure(n, m)
        s.verify(1e-14)
    checks.append(("algebra_identities", True, "tol=1e-14 cases=4"))
    rho = [algebra.radon_hurwitz(k) for k in (2, 4, 8, 16)]
    checks.append(("radon_hurwitz_values", rho == [2, 4, 8, 9],
                   "rho=%s" % (rho,)))
    rng = np.random.default_rng(3)
    s = algebra.build_structure(2, 3)
    for _ in range(16):
        x = rng.normal(size=4)
        z = rng.normal(size=3)
        lhs = np.linalg.norm(s.jz(z) @ x)
        rhs = np.linalg.norm(z) * np.linalg.norm(x)
        worst = max(worst, abs(lhs - rhs))
    checks.append(("jz_isometry", worst <= 1e-12, "max_err=%.3e" % worst))
    return checks


def _suite_geometry():
    checks = []
    rep = geometry.verify_distance_bounds(2000, seed=0)
    checks.append(("distance_bounds", True,
                   "min=%.10f max=%.10f" % (rep["min_ratio"],
                                            rep["max_ratio"])))
    f0 = geometry.distance_quad_ratio(0.0)
    f1 = geometry.distance_quad_ratio(np.pi / 4.0)
    f2 = geometry.distance_quad_ratio(np.pi)
    ok = (abs(f0 - 1.0) <= 1e-12 and abs(f1 - np.pi / 4.0) <= 1e-12
          and abs(f2 - np.pi) <= 1e-12)
    checks.append(("functional_values", ok,
                   "F(0)=%.12f F(pi/4)=%.12f F(pi)=%.12f" % (f0, f1, f2)))
    rng = np.random.default_rng(1)
    worst = 0.0
    for r in 10.0 ** rng.uniform(-3, 3, 32):
        th = geometry.ratio_to_angle(r)
        worst = max(worst, abs(geometry.angle_to_ratio(th) - r) / r)
    checks.append(("angle_ratio_roundtrip", worst <= 1e-9,
                   "max_rel=%.3e" % worst))
    return checks


def _suite_kernel():
    checks = []
    s = algebra.build_structure(1, 1)
    got = kernel.eval_kernel(s, 1.0, algebra.GroupPoint(
        np.zeros(2), np.zeros(1))).real
    want = 1.0 / (32.0 * np.pi)
    rel = abs(got - want) / want
    checks.append(("center_value", rel <= 1e-10, "rel=%.3e" % rel))
    got = kernel.eval_kernel(s, 0.7, algebra.GroupPoint(
        np.zeros(2), np.array([0.9]))).real
    want = kernel.heisenberg_center_slice(0.7, 0.9)
    rel = abs(got - want) / want
    checks.append(("center_slice", rel <= 1e-9, "rel=%.3e" % rel))
    rng = np.random.default_rng(5)
    ev = kernel.default_evaluator(s)
    worst = 0.0
    for _ in range(10):
        t = rng.uniform(0.5, 2.0)
        lam = rng.uniform(0.5, 1.5)
        xsq = rng.uniform(0.0, 2.0)
        zn = rng.uniform(0.0, 1.0)
        a = ev.evaluate(t, xsq, zn).real
        b = (lam ** -4) * ev.evaluate(
            t / lam ** 2, xsq / lam ** 2, zn / lam ** 2).real
        worst = max(worst, abs(a - b) / abs(a))
    checks.append(("dilation_scaling", worst <= 1e-8, "max_rel=%.3e" % worst))
    rep = kernel.check_semigroup(s, 0.5, 0.5, (33, 33, 33),
                                 (0.5, 0.5, 9.0 / 32.0))
    checks.append(("semigroup_coarse", rep["relative"] <= 5e-3,
                   "rel=%.3e" % rep["relative"]))
    return checks


def _suite_schoenberg():
    checks = []
    mu = schoenberg.fit_measure(0.0, 1)
    peak = kernel.KernelProfile(0.0, 1).at_zero()
    checks.append(("fit_residual", mu.fit_residual <= 1e-6 * peak,
                   "residual=%.3e peak=%.3e" % (mu.fit_residual, peak)))
    checks.append(("fit_kkt", mu.diagnostics["kkt"] <= 1e-10,
                   "kkt=%.3e" % mu.diagnostics["kkt"]))
    rec = schoenberg.reconstruct_kernel_slice(mu, 1, 0.0)
    want = 1.0 / (32.0 * np.pi)
    rel = abs(rec - want) / want
    checks.append(("center_reconstruction", rel <= 1e-10, "rel=%.3e" % rel))
    ce = schoenberg.build_counterexample(mu, 1.0, 1)
    ratios = [float(ce(z)) / kernel.heisenberg_center_slice(1.0, z)
              for z in (0.0, 2.0, 4.0)]
    ok = ratios[0] > ratios[1] > ratios[2] > 0
    checks.append(("counterexample_decay", ok,
                   "ratios=%.3e,%.3e,%.3e" % tuple(ratios)))
    return checks


def _suite_schrodinger():
    checks = []
    mat = schrodinger.magnetic_matrix(1.0, 1)
    ok = np.array_equal(mat, np.array([[0.0, -1.0], [1.0, 0.0]]))
    checks.append(("magnetic_matrix", ok, "xi=1 n=1"))
    from .grid import sample_function
    s = algebra.build_structure(1, 1)

    def synth(x1, x2, z):
        return np.exp(-(x1 ** 2 + x2 ** 2) / 2.5 ** 2 - 1.7 * np.abs(z))

    u = sample_function(s, (15, 15, 15), (0.5, 0.5, 0.4), synth)
    prof = schrodinger.fit_decay(u)
    err = max(abs(prof.gauss_rate - 2.5), abs(prof.center_rate - 1.7))
    checks.append(("decay_fit_exact", err <= 1e-8, "max_err=%.3e" % err))
    pot = schrodinger.PotentialSpec(
        decaying_part=lambda x, t: np.exp(
            -2.0 * np.sum(np.asarray(x) ** 2, axis=-1)
            / (1.0 * t + 2.0 * (1.0 - t)) ** 2),
        final_rate=1.0, initial_rate=2.0, horizon=1.0)
    rep = schrodinger.check_hypothesis(pot, 3.0)
    ok = rep["weighted_sup"] <= 1.0 + 1e-9 and rep["passed"]
    checks.append(("potential_weight", ok,
                   "weighted_sup=%.6f" % rep["weighted_sup"]))
    return checks


_SUITES = {
    "algebra": _suite_algebra,
    "geometry": _suite_geometry,
    "kernel": _suite_kernel,
    "schoenberg": _suite_schoenberg,
    "schrodinger": _suite_schrodinger,
}


def cmd_verify(args):
    names = list(_SUITES) if args.suite == "all" else [args.suite]
    all_ok = True
    for name in names:
        for check, ok, detail in _SUITES[name]():
            print("%s %s %s" % (check, "PASS" if ok else "FAIL", detail))
            all_ok = all_ok and ok
    return 0 if all_ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="carnot-heat",
        description="Numerical toolkit for heat and Schrodinger flows on "
                    "Heisenberg-type groups")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", help="Carnot-Caratheodory distances")
    p.add_argument("--x", help="horizontal vector, comma separated")
    p.add_argument("--z", help="center vector, comma separated")
    p.add_argument("--sweep-theta", type=int, dest="sweep_theta",
                   help="emit a sweep across the angle range")
    p.add_argument("--samples", type=int, help="random sample rows")
    p.add_argument("--seed", type=int, help="seed for sampled rows")
    p.add_argument("--config")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("kernel", help="heat kernel values and grids")
    p.add_argument("--t", type=float)
    p.add_argument("--t-imag", type=float, dest="t_imag")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--at", help="x_norm,z_norm point")
    p.add_argument("--counts")
    p.add_argument("--spacings")
    p.add_argument("--config")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("evolve", help="complex-time free evolution")
    p.add_argument("--input", help="initial state grid file")
    p.add_argument("--t", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--config")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("schoenberg", help="mixture fits and counterexample")
    p.add_argument("action", choices=["fit", "reconstruct", "counterexample"])
    p.add_argument("--x-norm", type=float, dest="x_norm")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--z", help="center checkpoints, comma separated")
    p.add_argument("--cutoff", type=float)
    p.add_argument("--config")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_schoenberg)

    p = sub.add_parser("sharpness", help="decay threshold experiment")
    p.add_argument("--T", dest="T")
    p.add_argument("--eps", help="comma separated eps list")
    p.add_argument("--config")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_sharpness)

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("--suite", default="all",
                   choices=["all"] + sorted(_SUITES))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 2
    except CarnotHeatError as exc:
        print("error type=%s msg=%s" % (type(exc).__name__, exc),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
