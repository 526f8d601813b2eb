"""Experiment configuration: a line-oriented ``key = value`` file format.

Two sections.  ``[instance]`` describes the coins: ``n``, a default
``prior`` (two integers), per-coin overrides ``prior.<i>``, a default
``cost`` with overrides ``cost.<i>`` (1-based coin indices), and
``budget``.  ``[experiment]`` describes the run: ``policies`` (comma
separated identifiers), ``trials``, ``seed``, ``record_every_step``,
``report_reward``.  ``#`` starts a comment.  Example::

    [instance]
    n = 10
    prior = 1 1
    budget = 40

    [experiment]
    policies = round-robin, biased-robin, scla
    trials = 1000
    seed = 42
"""

from __future__ import annotations

from dataclasses import dataclass

from .beliefs import BetaParams, ProblemInstance
from .errors import ConfigError
from .policies import parse_policy

_INSTANCE_KEYS = {"n", "prior", "cost", "budget"}
_EXPERIMENT_KEYS = {
    "policies",
    "trials",
    "seed",
    "record_every_step",
    "report_reward",
}


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    priors: tuple[BetaParams, ...]
    costs: tuple[int, ...]
    budget: int
    policies: tuple[str, ...] = ()
    trials: int = 1000
    seed: int = 0
    record_every_step: bool = True
    report_reward: bool = False

    def instance(self) -> ProblemInstance:
        return ProblemInstance(self.priors, self.costs, self.budget)


def _parse_int(field: str, raw: str, minimum: int | None = None) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(field, f"expected an integer, got {raw!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(field, f"must be >= {minimum}, got {value}")
    return value


def _parse_bool(field: str, raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ConfigError(field, f"expected true/false, got {raw!r}")


def _parse_prior(field: str, raw: str) -> BetaParams:
    parts = raw.split()
    if len(parts) != 2:
        raise ConfigError(field, f"expected two integers 'a1 a2', got {raw!r}")
    a1 = _parse_int(field, parts[0], minimum=1)
    a2 = _parse_int(field, parts[1], minimum=1)
    return BetaParams(a1, a2)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse and validate a config; raises :class:`ConfigError` on problems."""
    section = None
    entries: list[tuple[str, str, str]] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("instance", "experiment"):
                raise ConfigError(section, f"unknown section at line {lineno}")
            continue
        if "=" not in line:
            raise ConfigError(
                f"line {lineno}", f"expected 'key = value', got {line!r}"
            )
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if section is None:
            raise ConfigError(key, f"key before any section at line {lineno}")
        entries.append((section, key, value))

    values: dict[tuple[str, str], str] = {}
    for section, key, value in entries:
        base = key.split(".", 1)[0]
        allowed = _INSTANCE_KEYS if section == "instance" else _EXPERIMENT_KEYS
        if base not in allowed:
            raise ConfigError(key, f"unknown key in [{section}]")
        if "." in key and base not in ("prior", "cost"):
            raise ConfigError(key, "only prior and cost take per-coin overrides")
        if (section, key) in values:
            raise ConfigError(key, "duplicate key")
        values[(section, key)] = value

    def get(section: str, key: str, default: str | None = None) -> str | None:
        return values.pop((section, key), default)

    if ("instance", "n") not in values:
        raise ConfigError("n", "missing required key in [instance]")
    n = _parse_int("n", get("instance", "n"), minimum=1)
    if ("instance", "budget") not in values:
        raise ConfigError("budget", "missing required key in [instance]")
    budget = _parse_int("budget", get("instance", "budget"), minimum=0)

    default_prior_raw = get("instance", "prior", "1 1")
    default_prior = _parse_prior("prior", default_prior_raw)
    default_cost = _parse_int("cost", get("instance", "cost", "1"), minimum=1)

    policies_raw = get("experiment", "policies", "")
    policy_ids = tuple(
        p.strip() for p in policies_raw.split(",") if p.strip()
    )
    if len(set(policy_ids)) != len(policy_ids):
        raise ConfigError("policies", "duplicate policy identifier")
    for pid in policy_ids:
        try:
            parse_policy(pid)
        except ValueError as exc:
            raise ConfigError("policies", str(exc))

    trials = _parse_int("trials", get("experiment", "trials", "1000"), minimum=1)
    seed = _parse_int("seed", get("experiment", "seed", "0"), minimum=0)
    if seed >= 2**64:
        raise ConfigError("seed", "must fit in 64 bits")
    record_every_step = _parse_bool(
        "record_every_step", get("experiment", "record_every_step", "true")
    )
    report_reward = _parse_bool(
        "report_reward", get("experiment", "report_reward", "false")
    )

    priors = [default_prior] * n
    costs = [default_cost] * n
    # all base keys were popped above; only prior.<i> / cost.<i> remain
    for (section, key), value in sorted(values.items()):
        base, _, index_raw = key.partition(".")
        coin = _parse_int(key, index_raw, minimum=1)
        if coin > n:
            raise ConfigError(key, f"coin index {coin} exceeds n = {n}")
        if base == "prior":
            priors[coin - 1] = _parse_prior(key, value)
        else:
            costs[coin - 1] = _parse_int(key, value, minimum=1)

    return ExperimentConfig(
        n=n,
        priors=tuple(priors),
        costs=tuple(costs),
        budget=budget,
        policies=policy_ids,
        trials=trials,
        seed=seed,
        record_every_step=record_every_step,
        report_reward=report_reward,
    )


def parse_config_file(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}")
    return parse_config_text(text)
