"""Command-line entry point: ``chaotrng <command> ...``.

Every command writes its outputs plus a ``*.manifest.json`` beside them
recording the argv, the resolved parameters, the tool version and output
hashes. ``chaotrng replay MANIFEST`` reruns a recorded command and checks the
outputs are byte-identical.

Exit codes: 0 success, 2 bad input or precondition, 3 orbit escape,
4 battery failures (``test --strict`` only).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    autocorrelation,
    bifurcation_diagram,
    empirical_density,
    four_step_model,
    fp_fixed_point,
    transition_probs_analytic,
    transition_probs_numeric,
)
from .bitstream import CorruptStream, _jsonable, read_bits
from .dynamics import ChaoticBitGenerator, iterate_orbit
from .maps import OutOfDomain, make_nonideal
from .postprocess import DEFAULT_EPSILON, DEFAULT_MIN_SPAN, VonNeumannExtractor, XorDebiaser
from .stats import run_battery


OUT_DIR_ENV = "CHAOTRNG_OUT_DIR"
EXIT_OK, EXIT_PRECONDITION, EXIT_ESCAPE, EXIT_TEST_FAILURES = 0, 2, 3, 4


class _Run:
    """Collects outputs and results for the manifest of one invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.outputs: list[Path] = []
        self.inputs: list[Path] = []
        self.results: dict = {}

    def output(self, path: Path) -> Path:
        self.outputs.append(Path(path))
        return Path(path)

    def write_manifest(self, anchor: Path) -> Path:
        params = {k: v for k, v in vars(self.args).items() if k not in ("func",)}
        files = []
        for p in self.outputs:
            files.append({"path": str(p.resolve()), "sha256": _sha256(p)})
        manifest = {
            "command": self.args.command if not getattr(self.args, "what", None)
            else f"{self.args.command} {self.args.what}",
            "argv": self.argv,
            "cwd": os.getcwd(),
            "env": {OUT_DIR_ENV: os.environ.get(OUT_DIR_ENV)},
            "params": _jsonable(params),
            "version": __version__,
            "inputs": [str(p.resolve()) for p in self.inputs],
            "outputs": files,
            "results": _jsonable(self.results),
        }
        path = manifest_path(anchor)
        path.write_text(json.dumps(manifest, indent=2) + "\n")
        return path


def manifest_path(output: Path) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _out_path(args, default_name: str) -> Path:
    if args.out:
        path = Path(args.out)
    else:
        path = Path(os.environ.get(OUT_DIR_ENV, ".")) / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _int_or_auto(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None


def _float_or_auto(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


# commands ------------------------------------------------------------------

def cmd_bifurcate(args, run: _Run) -> int:
    res = bifurcation_diagram(args.m_lo, args.m_hi, args.n_m, n_transient=args.n_transient,
                              n_keep=args.n_keep, x0=args.x0)
    out = run.output(_out_path(args, "bifurcation.csv"))
    res.to_csv(out)
    run.results = {"n_m": int(res.m.size), "unstable": int(res.unstable.sum())}
    run.write_manifest(out)
    print(f"wrote {out} ({res.m.size} parameter values, {int(res.unstable.sum())} unstable)")
    return EXIT_OK


def _generator(args) -> ChaoticBitGenerator:
    if args.sigma_device is not None and args.map != "nonideal":
        raise ValueError("--sigma-device only applies to --map nonideal")
    return ChaoticBitGenerator(
        map=args.map, m=args.m, dg1=args.dg1, dg2=args.dg2, sigma_device=args.sigma_device,
        stages=args.stages, noise_std=args.noise_std, seed=args.seed, discard=args.discard,
        x0=args.x0,
    )


def cmd_generate(args, run: _Run) -> int:
    gen = _generator(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        stream = gen.generate(args.n_bits)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = _out_path(args, "stream.bin")
    if args.ascii:
        stream.save_ascii(out)
        run.output(out)
    else:
        stream.save(out)
        run.output(out)
        run.output(Path(str(out) + ".json"))
    scen = gen.scenario()
    run.results = {
        "n_bits": len(stream),
        "fraction_ones": stream.fraction_ones(),
        "discard": gen.resolved_discard(),
        "scenario": scen.to_dict() if scen is not None else None,
        "warnings": [str(w.message) for w in caught],
    }
    run.write_manifest(out)
    print(f"wrote {out} ({len(stream)} bits, fraction of ones {stream.fraction_ones():.6f})")
    return EXIT_OK


def _density_deltas(args) -> tuple[float, float]:
    if args.dg1 is not None and args.dg2 is not None:
        return args.dg1, args.dg2
    if args.delta_o is None:
        raise ValueError("give --delta-o or both --dg1 and --dg2")
    if args.dg1 is not None:
        return args.dg1, -args.delta_o - args.dg1
    # split the endpoint deviation evenly between the two slopes
    return -args.delta_o / 2, -args.delta_o / 2


def cmd_analyze_density(args, run: _Run) -> int:
    dg1, dg2 = _density_deltas(args)
    fmap, params = make_nonideal(dg1, dg2)
    model = four_step_model(params.delta_o)
    fp = fp_fixed_point(fmap, n_bins=args.n_bins)
    orbit = iterate_orbit(fmap, args.x0, args.n_samples, noise_std=args.noise_std, seed=args.seed)
    emp = empirical_density(orbit, args.n_bins, domain=fmap.domain)
    out = run.output(_out_path(args, "density.csv"))
    rows = np.column_stack([fp.centers, model.pdf(fp.centers), fp.density, emp.density])
    np.savetxt(out, rows, delimiter=",", header="x,model,fp,empirical", comments="", fmt="%.10g")
    edges = model.region_edges
    regions = []
    for i, level in enumerate(model.levels):
        a, b = edges[i], edges[i + 1]
        regions.append({"lo": a, "hi": b, "model": level,
                        "fp": fp.mass(a, b) / (b - a), "empirical": emp.mass(a, b) / (b - a)})
    run.results = {"dg1": dg1, "dg2": dg2, "delta_o": params.delta_o, "regions": regions}
    run.write_manifest(out)
    print(f"{'region':<22}{'model':>10}{'fp':>10}{'empirical':>11}")
    for r in regions:
        print(f"({r['lo']:.4f}, {r['hi']:.4f}){'':<5}{r['model']:>10.4f}{r['fp']:>10.4f}{r['empirical']:>11.4f}")
    return EXIT_OK


def cmd_analyze_markov(args, run: _Run) -> int:
    fmap, params = make_nonideal(args.dg1, args.dg2)
    analytic = transition_probs_analytic(args.dg1, args.dg2)
    numeric = transition_probs_numeric(fmap, params, fp_fixed_point(fmap, n_bins=args.n_bins))
    run.results = {"dg1": args.dg1, "dg2": args.dg2, "analytic": analytic.to_dict(),
                   "numeric": numeric.to_dict()}
    out = run.output(_out_path(args, "markov.json"))
    out.write_text(json.dumps(_jsonable(run.results), indent=2) + "\n")
    run.write_manifest(out)
    for name, mdl in (("analytic", analytic), ("numeric", numeric)):
        print(f"{name:<9} p={mdl.p:.6f} q={mdl.q:.6f} bias={mdl.b:.6f} "
              f"bias(|p-q|/(2-p-q))={mdl.b_doubled:.6f} lambda1={mdl.lambda1:.6f} c={mdl.c:.4f}")
    return EXIT_OK


def cmd_analyze_autocorr(args, run: _Run) -> int:
    stream = read_bits(args.input)
    run.inputs.append(Path(args.input))
    ac = autocorrelation(stream, args.max_lag)
    out = run.output(_out_path(args, "autocorr.csv"))
    lags = np.arange(1, args.max_lag + 1)
    np.savetxt(out, np.column_stack([lags, ac]), delimiter=",", header="lag,autocorrelation",
               comments="", fmt=["%d", "%.10g"])
    bound = 4 / np.sqrt(len(stream))
    run.results = {"max_abs": float(np.max(np.abs(ac))), "bound_4_over_sqrt_n": float(bound)}
    run.write_manifest(out)
    print(f"wrote {out}; max |r_k| = {np.max(np.abs(ac)):.3e} (4/sqrt(n) = {bound:.3e})")
    return EXIT_OK


def cmd_postprocess(args, run: _Run) -> int:
    stream = read_bits(args.input)
    run.inputs.append(Path(args.input))
    if args.method == "von-neumann":
        out_stream = VonNeumannExtractor().fit_transform(stream)
        run.results = {"method": "von-neumann"}
    else:
        xd = XorDebiaser(l=args.l, stages=args.stages, epsilon=args.epsilon, passes=args.passes,
                         l2=args.l2, min_span=args.min_span).fit(stream)
        out_stream = xd.transform(stream)
        run.results = {"method": "xor", "l": xd.l_, "l2": xd.l2_}
        if xd.markov_ is not None:
            run.results["estimated_chain"] = xd.markov_.model_.to_dict()
        out_stream = out_stream.with_meta(postprocess=run.results)
    out = _out_path(args, "post.bin")
    if args.ascii:
        out_stream.save_ascii(out)
        run.output(out)
    else:
        out_stream.save(out)
        run.output(out)
        run.output(Path(str(out) + ".json"))
    run.results["n_in"] = len(stream)
    run.results["n_out"] = len(out_stream)
    run.write_manifest(out)
    desc = ", ".join(f"{k}={v}" for k, v in run.results.items() if k != "estimated_chain")
    print(f"wrote {out} ({desc})")
    return EXIT_OK


def cmd_test(args, run: _Run) -> int:
    stream = read_bits(args.input)
    run.inputs.append(Path(args.input))
    report = run_battery(stream, alpha=args.alpha)
    out = run.output(_out_path(args, Path(args.input).name + ".report.json"))
    report.to_json(out)
    text_out = run.output(out.with_suffix(".txt"))
    text_out.write_text(report.to_text() + "\n")
    run.results = {"pass_count": report.pass_count, "executed": len(report.executed),
                   "failed": list(report.failed), "bias_percent": report.bias.percent}
    run.write_manifest(out)
    print(report.to_text())
    if args.strict and report.failed:
        return EXIT_TEST_FAILURES
    return EXIT_OK


def cmd_replay(args, run: _Run) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    argv = list(manifest["argv"])
    saved = os.environ.get(OUT_DIR_ENV)
    recorded = manifest.get("env", {}).get(OUT_DIR_ENV)
    _set_env(OUT_DIR_ENV, recorded)
    try:
        code = main(argv, _cwd=manifest.get("cwd"))
    finally:
        _set_env(OUT_DIR_ENV, saved)
    mismatched = []
    for entry in manifest["outputs"]:
        p = Path(entry["path"])
        if not p.exists() or _sha256(p) != entry["sha256"]:
            mismatched.append(str(p))
    if mismatched:
        print("replay outputs differ: " + ", ".join(mismatched), file=sys.stderr)
        return EXIT_PRECONDITION
    print(f"replayed {' '.join(argv)}: {len(manifest['outputs'])} outputs byte-identical")
    return code


def _set_env(name: str, value: str | None) -> None:
    if value is None:
        os.environ.pop(name, None)
    else:
        os.environ[name] = value


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaotrng", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bifurcate", help="sweep the generalized zigzag parameter m")
    p.add_argument("--m-lo", type=float, default=-3.0)
    p.add_argument("--m-hi", type=float, default=3.0)
    p.add_argument("--n-m", type=int, default=1200)
    p.add_argument("--n-transient", type=int, default=500)
    p.add_argument("--n-keep", type=int, default=200)
    p.add_argument("--x0", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("generate", help="simulate the pipelined generator")
    p.add_argument("--map", choices=["zigzag", "tent", "bernoulli", "nonideal"], default="zigzag")
    p.add_argument("--m", type=float, default=-2.0)
    p.add_argument("--dg1", type=float, default=0.0)
    p.add_argument("--dg2", type=float, default=0.0)
    p.add_argument("--sigma-device", type=float)
    p.add_argument("--stages", type=int, default=4)
    p.add_argument("--n-bits", type=int, default=1_000_000)
    p.add_argument("--discard", type=_int_or_auto, default=0)
    p.add_argument("--noise-std", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", type=_float_or_auto, default="auto")
    p.add_argument("--ascii", action="store_true", help="write '0'/'1' text instead of packed bytes")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="density, Markov and autocorrelation analyses")
    asub = p.add_subparsers(dest="what", required=True)
    a = asub.add_parser("density", help="four-step model vs Ulam fixed point vs histogram")
    a.add_argument("--delta-o", type=float)
    a.add_argument("--dg1", type=float)
    a.add_argument("--dg2", type=float)
    a.add_argument("--n-bins", type=int, default=512)
    a.add_argument("--n-samples", type=int, default=10_000_000)
    a.add_argument("--noise-std", type=float, default=1e-9)
    a.add_argument("--x0", type=float, default=0.3)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze_density)
    a = asub.add_parser("markov", help="transition probabilities, bias and decorrelation")
    a.add_argument("--dg1", type=float, required=True)
    a.add_argument("--dg2", type=float, required=True)
    a.add_argument("--n-bins", type=int, default=4096)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze_markov)
    a = asub.add_parser("autocorr", help="lag autocorrelation of a stream")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--max-lag", type=int, default=20)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze_autocorr)

    p = sub.add_parser("postprocess", help="XOR debias/decorrelate or Von Neumann extraction")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", choices=["xor", "von-neumann"], default="xor")
    p.add_argument("--l", type=_int_or_auto, default="auto")
    p.add_argument("--l2", type=_int_or_auto, default="auto")
    p.add_argument("--passes", type=int, choices=[1, 2], default=2)
    p.add_argument("--stages", type=int, default=4)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--min-span", type=int, default=DEFAULT_MIN_SPAN)
    p.add_argument("--ascii", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("test", help="run the statistical battery")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--strict", action="store_true", help="exit 4 when any test fails")
    p.add_argument("--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("replay", help="rerun a command from its manifest and compare outputs")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None, *, _cwd=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    prev = os.getcwd()
    try:
        if _cwd:
            os.chdir(_cwd)
        return args.func(args, _Run(args, argv))
    except OutOfDomain as exc:
        print(f"error: orbit escape: {exc}", file=sys.stderr)
        return EXIT_ESCAPE
    except (ValueError, TypeError, CorruptStream, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    finally:
        os.chdir(prev)


if __name__ == "__main__":
    sys.exit(main())
