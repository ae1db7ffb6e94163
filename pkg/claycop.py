#!/usr/bin/env python3
"""
Claycop — Clayton copula parameter inference
Bootstrap (fixed-point) and maximum-likelihood estimation of the Clayton
parameter α, confidence intervals, and the reproducible experiment harness.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

import os
import sys
import argparse
import warnings
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

BANNER = r"""
╔══════════════════════════════════════════════╗
║  📈 Claycop                                  ║
║  Clayton copula parameter inference          ║
║                                              ║
║  Estimators:                                 ║
║    MLE         — Kendall likelihood          ║
║    AI          — bootstrap fixed point       ║
╚══════════════════════════════════════════════╝
"""

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    """Invalid flags or flag combinations (exit code 1)."""


class ClaycopParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; usage errors here exit with 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"❌ {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser():
    parser = ClaycopParser(
        prog="claycop",
        description="Claycop — Clayton copula parameter inference",
    )
    parser.add_argument("--quiet", action="store_true", help="Only print results")
    parser.add_argument(
        "--check-deps",
        help="Check if the required Python packages are installed and exit",
        action="store_true",
    )
    sub = parser.add_subparsers(dest="command", parser_class=ClaycopParser)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=None,
                       help="Master seed (default: $CLAYCOP_SEED, else 42)")

    # ── sample ──────────────────────────────────────────────
    p = sub.add_parser("sample", help="Draw a Clayton sample as u1,u2 CSV")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("-m", type=int, required=True, help="Number of pairs")
    p.add_argument("-o", "--output", required=True, help="Output CSV path")
    add_seed(p)

    # ── pseudo ──────────────────────────────────────────────
    p = sub.add_parser("pseudo", help="Compute the Kendall pseudo-sample (i,t CSV)")
    p.add_argument("input", help="CSV with columns u1,u2 or x1,x2")
    p.add_argument("-o", "--output", required=True, help="Output CSV path")

    # ── estimate ────────────────────────────────────────────
    p = sub.add_parser("estimate", help="Estimate α from a sample")
    p.add_argument("method", choices=["mle", "ai", "dummy"])
    p.add_argument("input", help="CSV with columns u1,u2 or x1,x2")
    p.add_argument("--true-alpha", type=float, help="Known α (required by dummy)")
    p.add_argument("--replicas", type=int, default=300, help="Dummy-mode replicas (default 300)")
    p.add_argument("--trace", help="Write the mean-field trace CSV (ai)")
    p.add_argument("--population", help="Write the population CSV (ai tail / dummy)")
    add_ai_flags(p)
    add_seed(p)

    # ── ci ──────────────────────────────────────────────────
    p = sub.add_parser("ci", help="Confidence interval for α from a sample")
    p.add_argument("input", help="CSV with columns u1,u2 or x1,x2")
    p.add_argument("--level", type=float, default=0.9)
    p.add_argument("--replicas", type=int, default=300)
    p.add_argument("--pools", type=int, default=3, help="Independent populations merged (default 3)")
    p.add_argument("--true-alpha", type=float, help="Fill the contains_truth column")
    p.add_argument("-o", "--output", help="Write sample_id,lower,upper,level,contains_truth")
    add_ai_flags(p)
    add_seed(p)

    # ── experiment ──────────────────────────────────────────
    p = sub.add_parser("experiment", help="Run the experimental plan")
    p.add_argument("--plan", help="Plan manifest (YAML or JSON); default: the built-in plan")
    p.add_argument("--mode", choices=["dummy", "fixed-point", "both"], default="both")
    p.add_argument("--jobs", type=int, default=1, help="Worker processes (never changes numbers)")
    p.add_argument("-o", "--output", default="./output", help="Output directory (default: ./output)")
    p.add_argument("--wizard", action="store_true", help="Build the plan interactively")
    p.add_argument("--save-plan", action="store_true", help="Save the plan to the output dir as YAML")
    p.add_argument("--dry-run", action="store_true", help="Show the plan without running it")
    add_seed(p)

    # ── demo-sklar ──────────────────────────────────────────
    p = sub.add_parser("demo-sklar", help="Compose margins through a Clayton copula")
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("-m", type=int, default=1000)
    p.add_argument("--margin1", default="negexp:44", help="negexp:λ or gauss:μ,σ")
    p.add_argument("--margin2", default="gauss:0.5,0.15", help="negexp:λ or gauss:μ,σ")
    p.add_argument("--subsample", type=int, default=100, help="Size of the ECDF subsample")
    p.add_argument("-o", "--output", default="./output", help="Output directory")
    add_seed(p)

    return parser


def add_ai_flags(p):
    p.add_argument("--burn-in", type=int, default=300)
    p.add_argument("--tail", type=int, default=300)
    p.add_argument("--eta", type=float, default=0.1, help="Smoothing coefficient")
    p.add_argument("--seed-draw", choices=["ecdf", "uniform"], default="ecdf")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    # ── Dependency check ────────────────────────────────────
    if args.check_deps:
        return check_dependencies()

    if not args.command:
        print(BANNER)
        parser.print_help()
        return EXIT_USAGE

    commands = {
        "sample": cmd_sample,
        "pseudo": cmd_pseudo,
        "estimate": cmd_estimate,
        "ci": cmd_ci,
        "experiment": cmd_experiment,
        "demo-sklar": cmd_demo_sklar,
    }
    try:
        return commands[args.command](args) or 0
    except UsageError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as e:
        print(f"❌ {args.command} failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def resolve_seed(seed):
    """--seed, else $CLAYCOP_SEED, else the default master seed."""
    from engine.experiments import DEFAULT_SEED

    if seed is not None:
        return seed
    env = os.environ.get("CLAYCOP_SEED")
    if env is None or not env.strip():
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"CLAYCOP_SEED must be an integer, got {env!r}")


def ai_config_from_args(args):
    from engine.estimators import AiConfig

    try:
        return AiConfig(
            burn_in_steps=args.burn_in,
            tail_steps=args.tail,
            smoothing_eta=args.eta,
            seed_draw=args.seed_draw,
        )
    except ValueError as e:
        raise UsageError(str(e))


def require_positive(name, value):
    if value is None or value < 1:
        raise UsageError(f"{name} must be a positive integer, got {value}")


def require_alpha(name, value):
    if value is None or not value > 0 or value == float("inf"):
        raise UsageError(f"{name} must be a positive number, got {value}")


def load_pseudo(path):
    from engine.csvio import read_sample
    from engine.pseudo import pseudo_sample

    points = read_sample(path)
    if len(points) < 2:
        raise ValueError(f"{path}: a pseudo-sample needs at least 2 rows, got {len(points)}")
    return pseudo_sample(points)


def say(args, message):
    if not args.quiet:
        print(message)


# ── Subcommands ─────────────────────────────────────────────

def cmd_sample(args):
    from scipy.stats import kendalltau

    from engine.copula import kendall_tau, sample_pairs
    from engine.csvio import write_sample
    from engine.streams import RandomStream

    require_alpha("--alpha", args.alpha)
    require_positive("-m", args.m)
    seed = resolve_seed(args.seed)

    pairs = sample_pairs(args.alpha, args.m, RandomStream(seed))
    path = write_sample(pairs, args.output)
    say(args, f"✅ {args.m} pairs at α={args.alpha:g} (seed {seed}) → {path}")
    if args.m >= 2:
        tau = kendalltau(pairs[:, 0], pairs[:, 1]).statistic
        say(args, f"  → Kendall tau: empirical {tau:.4f}, theoretical {kendall_tau(args.alpha):.4f}")


def cmd_pseudo(args):
    from engine.csvio import write_pseudo

    pseudo = load_pseudo(args.input)
    path = write_pseudo(pseudo, args.output)
    say(args, f"✅ Pseudo-sample of {pseudo.m} points → {path}")


def cmd_estimate(args):
    from engine.csvio import write_frame
    from engine.estimators import ai_estimate, dummy_ai_estimate, mle
    from engine.streams import RandomStream

    if args.method == "dummy":
        if args.true_alpha is None:
            raise UsageError("dummy estimation requires --true-alpha")
        require_alpha("--true-alpha", args.true_alpha)
        require_positive("--replicas", args.replicas)
    config = ai_config_from_args(args)
    seed = resolve_seed(args.seed)
    pseudo = load_pseudo(args.input)
    stream = RandomStream(seed)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.method == "mle":
            estimate = mle(pseudo, config.alpha_bracket)
            print(f"mle\t{estimate!r}")
        elif args.method == "dummy":
            estimate, population = dummy_ai_estimate(pseudo, args.true_alpha, args.replicas, stream, config)
            print(f"dummy\t{estimate!r}")
            if args.population:
                say(args, f"  → Population: {write_frame(population.to_frame(), args.population)}")
        else:
            estimate, trace, population = ai_estimate(pseudo, config, stream)
            print(f"ai\t{estimate!r}")
            say(args, f"  → MLE start: {trace.start!r}, tail of {len(population)} steps")
            if args.trace:
                say(args, f"  → Trace: {write_frame(trace.to_frame(), args.trace)}")
            if args.population:
                say(args, f"  → Population: {write_frame(population.to_frame(), args.population)}")
    for w in caught:
        say(args, f"  ⚠️  {w.message}")


def cmd_ci(args):
    from engine.csvio import interval_frame, write_frame
    from engine.estimators import ai_estimate
    from engine.experiments import CI_STREAM, ESTIMATOR_STREAM
    from engine.intervals import ci_resample_population, confidence_interval
    from engine.streams import RandomStream

    if not 0 < args.level < 1:
        raise UsageError(f"--level must lie in (0, 1), got {args.level}")
    require_positive("--replicas", args.replicas)
    require_positive("--pools", args.pools)
    if args.true_alpha is not None:
        require_alpha("--true-alpha", args.true_alpha)
    config = ai_config_from_args(args)
    stream = RandomStream(resolve_seed(args.seed))
    pseudo = load_pseudo(args.input)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        alpha_tilde, _, _ = ai_estimate(pseudo, config, stream.substream(ESTIMATOR_STREAM))
    ci_stream = stream.substream(CI_STREAM)
    populations = [
        ci_resample_population(pseudo, alpha_tilde, args.replicas, ci_stream.substream(j), config)
        for j in range(args.pools)
    ]
    interval = confidence_interval(populations, args.level)

    print(f"alpha_tilde\t{alpha_tilde!r}")
    print(f"interval\t{interval.lower!r}\t{interval.upper!r}\t(level {interval.level:g})")
    if args.true_alpha is not None:
        say(args, f"  → Contains α={args.true_alpha:g}: {interval.contains(args.true_alpha)}")
    if args.output:
        frame = interval_frame([interval], args.true_alpha, sample_ids=[0])
        say(args, f"  → {write_frame(frame, args.output)}")


def cmd_experiment(args):
    import yaml

    from engine.experiments import ExperimentPlan
    from engine.runner import ExperimentRunner

    require_positive("--jobs", args.jobs)

    # ── Collect plan ────────────────────────────────────────
    if args.plan:
        plan_path = Path(args.plan)
        if not plan_path.exists():
            raise UsageError(f"Plan file not found: {args.plan}")
        with open(plan_path) as f:
            try:
                manifest = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise UsageError(f"Cannot parse plan {args.plan}: {e}")
        say(args, f"📄 Loaded plan: {args.plan}")
    elif args.wizard:
        from engine.wizard import run_plan_wizard
        manifest = run_plan_wizard()
    else:
        manifest = {}

    if not isinstance(manifest, dict):
        raise UsageError("The plan document must be a mapping of plan fields")
    if args.seed is not None or "master_seed" not in manifest:
        manifest["master_seed"] = resolve_seed(args.seed)
    try:
        plan = ExperimentPlan.from_manifest(manifest)
    except (AttributeError, TypeError, ValueError) as e:
        raise UsageError(f"Invalid plan: {e}")

    if not args.quiet:
        print(BANNER)
    print_plan_summary(args, plan)

    output_dir = Path(args.output)
    if args.save_plan:
        output_dir.mkdir(parents=True, exist_ok=True)
        save_path = output_dir / "plan.yaml"
        with open(save_path, "w") as f:
            yaml.dump(plan.to_manifest(), f, default_flow_style=False, sort_keys=False)
        say(args, f"💾 Plan saved: {save_path}")

    if args.dry_run:
        say(args, "\n🏜️  Dry run — nothing was computed.")
        return 0

    modes = ["dummy", "fixed-point"] if args.mode == "both" else [args.mode]
    for mode in modes:
        runner = ExperimentRunner(plan, mode, output_dir, jobs=args.jobs, quiet=args.quiet)
        paths = runner.run()
        say(args, f"\n✅ {mode} done → {paths['aggregate']}")
    return 0


def print_plan_summary(args, plan):
    """Print a human-readable summary of the plan."""
    config = plan.ai_config
    say(args, "\n" + "─" * 50)
    say(args, "📋 Plan Summary")
    say(args, "─" * 50)
    say(args, f"  α values:  {', '.join(f'{a:g}' for a in plan.alphas)}")
    say(args, f"  Sizes m:   {', '.join(str(m) for m in plan.sizes)}")
    say(args, f"  Samples:   {plan.samples_per_cell} per cell, {plan.replicas} replicas")
    say(args, f"  Loop:      {config.burn_in_steps} burn-in + {config.tail_steps} tail, η={config.smoothing_eta:g}")
    say(args, f"  Seeds:     {config.seed_draw} draws, master seed {plan.master_seed}")
    say(args, f"  Intervals: level {plan.ci_level:g}, {plan.ci_pooling} pooling of {plan.ci_pool_size}")
    say(args, "─" * 50)


def cmd_demo_sklar(args):
    from engine.csvio import write_frame, write_sample
    from engine.experiments import MarginSpec, kendall_distance, kendall_ecdf_table, sklar_compose
    from engine.pseudo import pseudo_sample
    from engine.streams import RandomStream

    require_alpha("--alpha", args.alpha)
    require_positive("-m", args.m)
    require_positive("--subsample", args.subsample)
    if args.m < 2:
        raise UsageError("-m must be at least 2 for the Kendall statistics")
    try:
        margins = (MarginSpec.parse(args.margin1), MarginSpec.parse(args.margin2))
    except ValueError as e:
        raise UsageError(str(e))

    if not args.quiet:
        print(BANNER)
    stream = RandomStream(resolve_seed(args.seed))
    points = sklar_compose(margins, args.alpha, args.m, stream)
    out = Path(args.output)
    sample_path = write_sample(points, out / "sklar_sample.csv", columns=("x1", "x2"))

    subsample = points[:min(args.subsample, args.m)]
    if len(subsample) < 2:
        subsample = points
    pseudo_sub = pseudo_sample(subsample)
    table_path = write_frame(kendall_ecdf_table(pseudo_sub, args.alpha), out / "kendall_ecdf.csv")

    distance = kendall_distance(pseudo_sample(points), args.alpha)
    print(f"kendall_distance\t{distance!r}")
    say(args, f"  → Sample: {sample_path}")
    say(args, f"  → Kendall ECDF (subsample of {len(subsample)}): {table_path}")


def check_dependencies():
    """Check and report on the required Python packages."""
    import importlib

    print("🔍 Checking dependencies...\n")
    packages = {
        "numpy": "Arrays, Philox substreams, quantiles",
        "scipy": "Root finding, optimisation, distributions",
        "pandas": "CSV input and output",
        "yaml": "Plan manifests (PyYAML)",
    }
    all_ok = True
    print("  Python packages:")
    for module, desc in packages.items():
        try:
            importlib.import_module(module)
            print(f"    ✅ {module:20s} — {desc}")
        except ImportError:
            all_ok = False
            print(f"    ❌ {module:20s} — pip install -r requirements.txt")

    print()
    if all_ok:
        print("  ✅ All required dependencies satisfied!")
        return 0
    print("  ❌ Some required dependencies are missing.")
    return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
