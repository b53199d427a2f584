"""
Command line interface.

    freeness kernel  --mode slater|thermal|evolve|restrict|psi ... --out K.json
    freeness sample  --in STATE.json --n N --seed S --out samples.jsonl
    freeness moments --in K.json [--regions SPEC] --out moments.csv
    freeness oracle  --in STATE.json --out distribution.csv
    freeness test    --in samples.jsonl [--statistics ...] --alpha A --out verdict.json
    freeness scan    --statistics fermi|bose --n COUNT --seed S --out scan.csv

Exit codes: 0 success / ConsistentWithFree, 1 runtime error, 2 usage error,
3 NonfreeDetected (``test`` only).  Summaries go to stderr, artifacts to files.
"""

from __future__ import annotations

import argparse
import csv
import logging
import re
import sys
from typing import Optional, Sequence

import numpy as np

from . import exact_moments, fileio, fock_oracle, inference, kernels, sampler
from .errors import FreenessError, RegionParseError
from .kernels import FreeState, KernelMatrix, Region, Statistics

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NONFREE = 3

log = logging.getLogger("freeness")

_BRACES = re.compile(r"\{([^{}]*)\}")


def parse_regions(text: str, dim: Optional[int] = None) -> list[Region]:
    """Parse ``"{i,j,...};{k,...};..."`` into regions, checking disjointness."""
    parts = [p.strip() for p in text.strip().split(";")]
    if not text.strip() or any(not p for p in parts):
        raise RegionParseError(f"empty region in {text!r}")
    regions = []
    for part in parts:
        m = _BRACES.fullmatch(part)
        if m is None:
            raise RegionParseError(f"expected '{{i,j,...}}', got {part!r}")
        body = m.group(1).strip()
        items = [s.strip() for s in body.split(",")] if body else []
        if any(not s.lstrip("-").isdigit() for s in items):
            raise RegionParseError(f"non-integer site index in {part!r}")
        values = [int(s) for s in items]
        if len(set(values)) != len(values):
            raise RegionParseError(f"repeated site index in {part!r}")
        regions.append(kernels.as_region(values, dim))
    kernels.check_disjoint(regions)
    return regions


def parse_region_spec(text: str, dim: Optional[int] = None) -> inference.RegionFamily:
    return inference.RegionFamily(parse_regions(text, dim))


def _statistics(args, default=None) -> Optional[Statistics]:
    value = getattr(args, "statistics", None) or default
    return Statistics.parse(value) if value is not None else None


# ---------------------------------------------------------------------
# Sub-commands
# ---------------------------------------------------------------------


def _cmd_kernel(args) -> int:
    mode = args.mode
    if mode == "psi":
        fileio.write_pure_state(args.out, fock_oracle.two_pair_state(args.dim or 5))
        log.info("wrote the two-pair superposition to %s", args.out)
        return EXIT_OK
    if args.input is None and mode != "validate":
        raise FreenessError(f"--in is required for mode {mode}")
    if mode == "slater":
        k = kernels.slater_kernel(fileio.read_matrix(args.input), label=args.label)
    elif mode == "thermal":
        if args.beta is None or args.mu is None:
            raise FreenessError("thermal mode needs --beta and --mu")
        stats = _statistics(args, "fermi")
        k = kernels.thermal_kernel(fileio.read_matrix(args.input), args.beta, args.mu, stats, label=args.label)
    elif mode == "validate":
        stats = _statistics(args, "fermi")
        k = kernels.validate_kernel(fileio.read_matrix(args.input), stats, args.label)
    else:
        base = fileio.read_kernel(args.input)
        if mode == "evolve":
            if args.unitary is None:
                raise FreenessError("evolve mode needs --unitary")
            k = kernels.evolve_kernel(base, fileio.read_matrix(args.unitary))
        else:  # restrict
            if args.regions is None:
                raise FreenessError("restrict mode needs --regions '{i,j,...}'")
            regs = parse_regions(args.regions, base.dim)
            window = sorted(s for r in regs for s in r)
            k = kernels.restrict_kernel(base, window)
        if args.label is not None:
            k = KernelMatrix(k.entries, k.statistics, args.label)
    fileio.write_kernel(args.out, k)
    w = k.eigenvalues()
    log.info("%s kernel dim=%d spectrum=[%.6e, %.6e] -> %s", k.statistics.value, k.dim, w[0], w[-1], args.out)
    return EXIT_OK


def _cmd_sample(args) -> int:
    state = fileio.read_state(args.input)
    if isinstance(state, KernelMatrix):
        batch = sampler.sample_free(FreeState.of(state), args.n, args.seed, args.workers)
    else:
        batch = sampler.sample_pure_state(state, args.n, args.seed, args.workers)
    fileio.write_sample_log(args.out, batch)
    log.info("wrote %d %s draws (seed %d) to %s", batch.n, batch.statistics.value, batch.seed, args.out)
    return EXIT_OK


def _cmd_moments(args) -> int:
    k = fileio.read_kernel(args.input)
    state = FreeState.of(k)
    regs = parse_regions(args.regions, k.dim) if args.regions else exact_moments.singletons(k.dim)
    rows = exact_moments.moment_report_rows(state, regs)
    report = exact_moments.sign_scan(state, regs)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_ids", "moment_kind", "exact_value"])
        w.writerows(rows)
        w.writerow(["*", "all_conforming", "1" if report.all_conforming else "0"])
    log.info("%d pairs, all_conforming=%s -> %s", len(report.pairs), report.all_conforming, args.out)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    state = fileio.read_state(args.input)
    if isinstance(state, KernelMatrix):
        if state.statistics is Statistics.FERMI:
            dist = fock_oracle.free_fermion_distribution(state)
        else:
            dist = fock_oracle.free_boson_distribution(state, args.cutoff)
    else:
        dist = fock_oracle.pure_state_distribution(state)
    fock_oracle.write_distribution(args.out, dist)
    log.info("%d configurations, total=%.17g, tail=%.3e -> %s", len(dist.probabilities), dist.total(), dist.tail_mass, args.out)
    return EXIT_OK


def _cmd_test(args) -> int:
    batch = fileio.read_sample_log(args.input, args.statistics)
    family = parse_region_spec(args.regions, batch.dim) if args.regions else None
    verdict = inference.freeness_test(
        batch,
        batch.statistics,
        family,
        alpha=args.alpha,
        correction=args.correction,
        method=args.method,
        resamples=args.resamples,
    )
    inference.write_verdict(args.out, verdict)
    for r in verdict.violating_pairs():
        log.info("violating pair (%s, %s): cov=%.6e stderr=%.3e p_corr=%.3e", r.region_i, r.region_j,
                 r.covariance.value, r.covariance.stderr, r.p_corrected)
    log.info("verdict: %s -> %s", verdict.verdict.value, args.out)
    return EXIT_NONFREE if verdict.detected else EXIT_OK


def _cmd_scan(args) -> int:
    stats = _statistics(args, "fermi")
    rng = np.random.default_rng(args.seed)
    lo, hi = args.min_dim, args.max_dim
    violations = 0
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "dim", "worst_signed_covariance", "all_conforming"])
        for i in range(args.n):
            m = int(rng.integers(lo, hi + 1))
            state = FreeState.of(kernels.random_kernel(m, stats, rng))
            report = exact_moments.sign_scan(state, exact_moments.singletons(m))
            worst = min(stats.sign * c for _, _, c in report.pairs)
            violations += not report.all_conforming
            w.writerow([i, m, f"{worst:.17e}", int(report.all_conforming)])
    log.info("%d random %s kernels, %d sign violations -> %s", args.n, stats.value, violations, args.out)
    if violations:
        log.error("sign theorem violated %d times", violations)
        return EXIT_ERROR
    return EXIT_OK


# ---------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output path")
    common.add_argument("--in", dest="input", help="input path")
    common.add_argument("--statistics", choices=["fermi", "bose"])
    common.add_argument("--seed", type=int, default=sampler.DEFAULT_SEED)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="freeness", description=__doc__.split("\n\n")[0].strip())
    sub = p.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", parents=[common], help="build or transform a kernel file")
    k.add_argument("--mode", required=True, choices=["slater", "thermal", "evolve", "restrict", "validate", "psi"])
    k.add_argument("--unitary", help="unitary matrix file (evolve)")
    k.add_argument("--beta", type=float)
    k.add_argument("--mu", type=float)
    k.add_argument("--regions", help="window for restrict mode")
    k.add_argument("--label")
    k.add_argument("--dim", type=int, help="number of modes for --mode psi (>= 5)")

    s = sub.add_parser("sample", parents=[common], help="draw configurations from a state file")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--workers", type=int, default=1)

    m = sub.add_parser("moments", parents=[common], help="exact moments and sign report")
    m.add_argument("--regions")

    o = sub.add_parser("oracle", parents=[common], help="exact configuration distribution")
    o.add_argument("--cutoff", type=int, help="total boson number cutoff (default: automatic)")

    t = sub.add_parser("test", parents=[common], help="opposite-sign freeness test on a sample log")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--correction", choices=["bonferroni", "none"], default="bonferroni")
    t.add_argument("--regions")
    t.add_argument("--method", choices=["delta", "bootstrap"], default="delta")
    t.add_argument("--resamples", type=int, default=inference.DEFAULT_BOOTSTRAP)

    c = sub.add_parser("scan", parents=[common], help="randomized exact sign-conformance sweep")
    c.add_argument("--n", type=int, default=1000, help="number of random kernels")
    c.add_argument("--min-dim", type=int, default=2)
    c.add_argument("--max-dim", type=int, default=8)
    return p


_COMMANDS = {
    "kernel": _cmd_kernel,
    "sample": _cmd_sample,
    "moments": _cmd_moments,
    "oracle": _cmd_oracle,
    "test": _cmd_test,
    "scan": _cmd_scan,
}


def run(args: argparse.Namespace) -> int:
    """Execute a parsed command line and return the exit code."""
    try:
        return _COMMANDS[args.command](args)
    except (FreenessError, ValueError, OSError, KeyError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
