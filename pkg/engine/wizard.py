"""
Interactive wizard — walks the user through the experiment plan options.
Returns a plan manifest dict ready for ExperimentPlan.from_manifest.
"""

from engine.estimators import AiConfig
from engine.experiments import DEFAULT_SEED, ExperimentPlan

SEED_DRAW_OPTIONS = {
    "ecdf": "resample positions of the sample's own pseudo-observations",
    "uniform": "draw fresh uniform positions",
}
POOLING_OPTIONS = {
    "consecutive": "merge the populations of consecutive samples",
    "independent": "merge resamples of the same sample",
}


def ask(prompt, default=None, required=True, validator=None):
    """Ask for one plan field; an empty answer keeps the default."""
    shown = f" [{default}]" if default is not None else ""
    while True:
        answer = input(f"  {prompt}{shown}: ").strip() or ("" if default is None else str(default))
        if not answer and required:
            print("    ⚠️  This field is required.")
            continue
        err = validator(answer) if validator and answer else None
        if err:
            print(f"    ⚠️  {err}")
            continue
        return answer


YES = ("y", "yes")
NO = ("n", "no")


def ask_flag(prompt, default=False):
    """Ask whether to open an optional plan section."""
    hint = "(Y/n)" if default else "(y/N)"
    while True:
        answer = input(f"  {prompt} {hint}: ").strip().lower()
        if not answer:
            return default
        if answer in YES or answer in NO:
            return answer in YES
        print("    ⚠️  Answer y or n")


def ask_option(prompt, options, default):
    """Pick one plan option key.

    ``options`` maps each key (the value stored in the plan) to a short
    description. The user may answer with the menu number or the key.
    """
    keys = list(options)
    print(f"  {prompt}")
    for number, key in enumerate(keys, 1):
        marker = "→" if key == default else " "
        print(f"    {marker} ({number}) {key:<12} {options[key]}")
    while True:
        answer = input(f"  Option [{default}]: ").strip().lower()
        if not answer:
            return default
        if answer in options:
            return answer
        if answer.isdigit() and 1 <= int(answer) <= len(keys):
            return keys[int(answer) - 1]
        print(f"    ⚠️  Pick 1-{len(keys)} or one of: {', '.join(keys)}")


def ask_list(prompt, default, parse=float, validator=None):
    """Collect a comma-separated list of numbers."""
    shown = ", ".join(f"{v:g}" for v in default)
    while True:
        raw = input(f"  {prompt} [{shown}]: ").strip()
        if not raw:
            return list(default)
        try:
            values = [parse(item) for item in raw.split(",") if item.strip()]
        except ValueError:
            print("    ⚠️  Enter numbers separated by commas")
            continue
        err = validator(values) if validator else None
        if not values or err:
            print(f"    ⚠️  {err or 'At least one value is required'}")
            continue
        return values


def validate_positive_int(text):
    try:
        if int(text) >= 1:
            return None
    except ValueError:
        pass
    return f"Expected a positive integer, got {text!r}"


def validate_level(text):
    try:
        if 0 < float(text) < 1:
            return None
    except ValueError:
        pass
    return f"Expected a level strictly between 0 and 1, got {text!r}"


def validate_alphas(values):
    if any(v <= 0 for v in values):
        return "Clayton parameters must be positive"
    return None


def validate_sizes(values):
    if any(v < 2 for v in values):
        return "Sample sizes must be at least 2"
    return None


def run_plan_wizard():
    """Run the interactive wizard and return a plan manifest dict."""
    defaults = ExperimentPlan()
    ai_defaults = AiConfig()
    print("Let's set up the experiment. Press Enter to keep the defaults.\n")
    print("─" * 44)

    # ── Step 1: Grid ────────────────────────────────────────
    print("\n📐 [1/4] Experimental grid\n")
    manifest = {
        "alphas": ask_list("Clayton parameters α", defaults.alphas, validator=validate_alphas),
        "sizes": ask_list("Sample sizes m", defaults.sizes, parse=int, validator=validate_sizes),
    }

    # ── Step 2: Protocol ────────────────────────────────────
    print("\n🎲 [2/4] Sampling protocol\n")
    manifest["samples_per_cell"] = int(ask(
        "Samples per cell", default=defaults.samples_per_cell, validator=validate_positive_int
    ))
    manifest["replicas"] = int(ask(
        "Bootstrap replicas per population", default=defaults.replicas, validator=validate_positive_int
    ))
    manifest["master_seed"] = int(ask("Master seed", default=DEFAULT_SEED, validator=_validate_int))

    # ── Step 3: Fixed-point estimator ───────────────────────
    print("\n🔁 [3/4] Fixed-point estimator\n")
    ai = ai_defaults.to_manifest()
    if ask_flag("Customize the mean-field loop?"):
        ai["burn_in_steps"] = int(ask("Burn-in steps", default=ai_defaults.burn_in_steps,
                                      validator=validate_positive_int))
        ai["tail_steps"] = int(ask("Tail steps", default=ai_defaults.tail_steps,
                                   validator=validate_positive_int))
        ai["smoothing_eta"] = float(ask("Smoothing coefficient η", default=ai_defaults.smoothing_eta,
                                        validator=_validate_eta))
        ai["seed_draw"] = ask_option("Seed draws", SEED_DRAW_OPTIONS, default=ai_defaults.seed_draw)
    manifest["ai_config"] = ai

    # ── Step 4: Intervals ───────────────────────────────────
    print("\n📏 [4/4] Confidence intervals\n")
    pooling = ask_option("How are populations pooled?", POOLING_OPTIONS, default=defaults.ci_pooling)
    manifest["intervals"] = {
        "level": float(ask("Confidence level", default=defaults.ci_level, validator=validate_level)),
        "pooling": pooling,
        "pool_size": int(ask("Populations per interval", default=defaults.ci_pool_size,
                             validator=validate_positive_int)),
    }
    manifest["keep_traces"] = defaults.keep_traces

    print("\n" + "─" * 44)
    print("✅ Plan ready.")
    return manifest


def _validate_int(text):
    try:
        int(text)
        return None
    except ValueError:
        return f"Expected an integer, got {text!r}"


def _validate_eta(text):
    try:
        if 0 < float(text) <= 1:
            return None
    except ValueError:
        pass
    return f"Expected a coefficient in (0, 1], got {text!r}"
