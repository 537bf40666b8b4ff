"""Batch verifier: seeded sampling, named check suites, JSON-lines reports.

Exit status: 0 all pass, 1 some residual fails, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from . import constructors, gallery
from .errors import ConfigError, SamplingError
from .foliation import Verdict, classify_type, torsion_S, vertical_field
from .kernel import fd
from .kernel.fields import Point
from .kernel.tensors import constant_curvature_deviation
from .morphisms import harmonic_morphism_residual, pullback_metric

SUITES = ("morphism", "classify", "curvature", "torsion", "theorem1", "killing")
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
MAX_REJECTION = 0.99
MASK64 = (1 << 64) - 1
# FD-based checks cost ~10 ms per point; cap their sample count
CLASSIFY_CAP = 50


@dataclass
class CheckConfig:
    suites: list = field(default_factory=lambda: ["all"])
    tolerance: float = 1e-7
    fd_tolerance: float = 1e-6
    samples: int = 200
    seed: int = 0
    jet_order: int = 2
    output_path: str = "report.jsonl"
    margin: float = 0.05

    def validate(self):
        if not self.tolerance >= 0:
            raise ConfigError(f"tolerance must be >= 0, got {self.tolerance}")
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.jet_order not in (1, 2, 3):
            raise ConfigError(f"jet_order must be 1, 2 or 3, got {self.jet_order}")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        bad = [s for s in self.suites if s not in SUITES + ("all",)]
        if bad or not self.suites:
            raise ConfigError(f"unknown suite(s) {bad}; valid names: {', '.join(SUITES + ('all',))}")

    def expanded_suites(self):
        if "all" in self.suites:
            return list(SUITES)
        return [s for s in SUITES if s in self.suites]


@dataclass
class ResidualReport:
    check: str
    bundle: str
    n_points: int
    max_residual: float
    mean_residual: float
    worst_point: list
    passed: bool
    seed: int
    wall_time_ms: float

    def to_json(self):
        d = {("pass" if k == "passed" else k): v for k, v in asdict(self).items()}
        return json.dumps(d)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK64

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def stream_seed(seed, name):
    digest = hashlib.sha256(name.encode()).digest()
    return (seed ^ int.from_bytes(digest[:8], "little")) & MASK64


def sample_points(region, count, seed, name="", margin=0.0):
    """Rejection sampling inside ``region`` with a splitmix64 stream keyed by ``(seed, name)``."""
    rng = SplitMix64(stream_seed(seed, name))
    lo = np.asarray(region.lo, dtype=float)
    hi = np.asarray(region.hi, dtype=float)
    span = hi - lo
    out = []
    budget = int(np.ceil(count / (1.0 - MAX_REJECTION)))
    tries = 0
    while len(out) < count:
        if tries >= budget:
            raise SamplingError(f"{name}: rejection rate above {MAX_REJECTION:.0%} ({len(out)}/{tries} accepted)")
        tries += 1
        x = lo + span * np.array([rng.uniform() for _ in range(lo.shape[0])])
        if region.contains(x, margin):
            out.append(Point(name or "chart", x))
    return out


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def _report(check, bundle, points, fn: Callable, tol, seed):
    t0 = time.perf_counter()
    res = np.array([fn(p.coords) for p in points], dtype=float)
    k = int(np.argmax(res))
    mx = float(res[k])
    return ResidualReport(
        check=check,
        bundle=bundle,
        n_points=len(points),
        max_residual=mx,
        mean_residual=float(res.mean()),
        worst_point=[float(v) for v in points[k].coords],
        passed=bool(mx < tol),
        seed=seed,
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
    )


def _bundle_points(b, cfg):
    return sample_points(b.region, cfg.samples, cfg.seed, b.name, cfg.margin)


def suite_morphism(cfg):
    for b in gallery.all_bundles():
        pts = _bundle_points(b, cfg)
        yield _report(
            "morphism", b.name, pts,
            lambda x: harmonic_morphism_residual(b.map, b.g, b.h, x).max_residual(),
            cfg.tolerance, cfg.seed,
        )
        yield _report("jet_fd", b.name, pts[: min(len(pts), 20)], lambda x: jet_fd_error(b.map, x, cfg.jet_order),
                      cfg.fd_tolerance, cfg.seed)


def jet_fd_error(phi, x, order):
    """Max relative gap between jet derivative ``k`` and central differences of jet part ``k-1``."""
    J = phi.jet(x, order)
    worst = 0.0
    for k in range(1, order + 1):
        num = fd.gradient(lambda y: phi.jet(y, k - 1).parts[k - 1], x)
        err = np.max(np.abs(J.parts[k] - num)) / max(1.0, float(np.max(np.abs(J.parts[k]))))
        worst = max(worst, float(err))
    return worst


def classify_residual(b, x, tol):
    """Residual of the bundle's expected type (the larger of both for Both)."""
    rep = classify_type(vertical_field(b.map, b.g), b.g, b.curvature_K, x, tol=tol)
    if b.expected_type == Verdict.TYPE1:
        return rep.type1_residual
    if b.expected_type == Verdict.TYPE2:
        return rep.type2_residual
    return max(rep.type1_residual, rep.type2_residual)


def _classifiable(b):
    return b.curvature_K is not None and b.n >= 3 and b.expected_type != Verdict.NA


def suite_classify(cfg):
    for b in gallery.all_bundles():
        if not _classifiable(b):
            continue
        pts = _bundle_points(b, cfg)[:CLASSIFY_CAP]
        yield _report("classify", b.name, pts, lambda x: classify_residual(b, x, cfg.fd_tolerance),
                      cfg.fd_tolerance, cfg.seed)


def suite_curvature(cfg):
    for b in gallery.all_bundles():
        pts = _bundle_points(b, cfg)[: min(cfg.samples, 50)]
        if b.g.constant_curvature is not None:
            yield _report("curvature.domain", b.name, pts,
                          lambda x: constant_curvature_deviation(b.g, x, b.g.constant_curvature),
                          cfg.tolerance, cfg.seed)
        if b.h.constant_curvature is not None:
            yield _report("curvature.target", b.name, pts,
                          lambda x: constant_curvature_deviation(b.h, b.map(x), b.h.constant_curvature),
                          cfg.tolerance, cfg.seed)


def torsion_identity_error(p, a):
    S = torsion_S(p, a)
    anti = np.max(np.abs(S + S.transpose(0, 2, 1)))
    trace = np.max(np.abs(np.einsum("iij->j", S)))
    return float(max(anti, trace))


def exact_torsion_error(p, a):
    """Same identities in exact rational arithmetic on the rounded inputs."""
    n = len(p)
    pf = np.array([Fraction(v) for v in p], dtype=object)
    af = np.array([[Fraction(v) for v in row] for row in a], dtype=object)
    S = torsion_S(pf, af)
    bad = any(S[i, j, k] != -S[i, k, j] for i in range(n) for j in range(n) for k in range(n))
    bad = bad or any(sum(S[i, i, j] for i in range(n)) != 0 for j in range(n))
    return 1.0 if bad else 0.0


def suite_torsion(cfg):
    for n in (3, 4, 5):
        name = f"torsion_n{n}"
        region = gallery.box(n + n * (n - 1) // 2, -1, 1)
        pts = sample_points(region, cfg.samples, cfg.seed, name)
        iu = np.triu_indices(n, 1)

        def unpack(z):
            a = np.zeros((n, n))
            a[iu] = z[n:]
            return z[:n], a - a.T

        yield _report("torsion.identities", name, pts, lambda z: torsion_identity_error(*unpack(z)),
                      cfg.tolerance, cfg.seed)
        yield _report("torsion.exact", name, pts[: min(len(pts), 50)], lambda z: exact_torsion_error(*unpack(z)),
                      0.5, cfg.seed)


def suite_normal_forms(cfg):
    for seed in range(20):
        d = constructors.random_normal_form(seed)
        b = constructors.normal_form_bundle(d)
        pts = sample_points(b.region, min(cfg.samples, 100), cfg.seed, b.name, 0.0)
        yield _report("theorem1", b.name, pts,
                      lambda x: harmonic_morphism_residual(b.map, b.g, b.h, x).max_residual(),
                      cfg.tolerance, cfg.seed)


def _killing_region(X, dim):
    def near_zero(x, margin=0.0):
        return float(np.linalg.norm(X(x))) <= 0.1 + margin

    return gallery.box(dim, -1, 1, near_zero)


def suite_killing(cfg):
    for X, g in constructors_killing_cases():
        name = f"{X.name}"
        pts = sample_points(_killing_region(X, g.dim), min(cfg.samples, 100), cfg.seed, name, cfg.margin)
        yield _report("killing.exponent", name, pts,
                      lambda x: constructors.killing_exponent_residual(X, g, x, 1), cfg.tolerance, cfg.seed)
    q = gallery.quadratic_r4_r3()
    pts = _bundle_points(q, cfg)

    def pullback_gap(x):
        _, cand = constructors.killing_quotient_scale(q.killing, q.g, x, check=False)
        return float(np.max(np.abs(cand - pullback_metric(q.map, q.h, x))))

    yield _report("killing.pullback", q.name, pts, pullback_gap, cfg.tolerance, cfg.seed)


def constructors_killing_cases():
    return [(X, g) for X, g in gallery.killing_fields_catalog() if g.dim >= 4]


SUITE_FNS = {
    "morphism": suite_morphism,
    "classify": suite_classify,
    "curvature": suite_curvature,
    "torsion": suite_torsion,
    "theorem1": suite_normal_forms,
    "killing": suite_killing,
}


def run_suite(cfg: CheckConfig) -> list:
    cfg.validate()
    out = []
    for s in cfg.expanded_suites():
        out.extend(sorted(SUITE_FNS[s](cfg), key=lambda r: (r.bundle, r.check)))
    return out


def write_reports(reports: Iterable[ResidualReport], path):
    with open(path, "w") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def summary_table(reports):
    lines = [f"{'check':<20} {'bundle':<28} {'n':>4} {'max':>11} {'mean':>11}  ok"]
    for r in reports:
        lines.append(
            f"{r.check:<20} {r.bundle:<28} {r.n_points:>4} {r.max_residual:>11.3e} {r.mean_residual:>11.3e}  "
            f"{'PASS' if r.passed else 'FAIL'}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog="harmorph-verify", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON file with CheckConfig fields; flags override it")
    ap.add_argument("--suite", help="comma-separated: " + ",".join(SUITES + ("all",)))
    ap.add_argument("--tolerance", type=float)
    ap.add_argument("--fd-tolerance", type=float)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--jet-order", type=int)
    ap.add_argument("--margin", type=float)
    ap.add_argument("--output")
    ap.add_argument("--summary", action="store_true", help="print a table to stdout")
    return ap


def build_config(args) -> CheckConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
        known = {f.name for f in fields(CheckConfig)}
        extra = set(base) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
    cfg = CheckConfig(**base)
    overrides = {
        "suites": args.suite.split(",") if args.suite else None,
        "tolerance": args.tolerance,
        "fd_tolerance": args.fd_tolerance,
        "samples": args.samples,
        "seed": args.seed,
        "jet_order": args.jet_order,
        "margin": args.margin,
        "output_path": args.output,
    }
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    cfg.validate()
    return cfg


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, json.JSONDecodeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    reports = run_suite(cfg)
    try:
        write_reports(reports, cfg.output_path)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.summary:
        print(summary_table(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
