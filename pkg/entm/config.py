import json
import logging
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

from .exceptions import MissingSeed

logger = logging.getLogger(__name__)

SEED_ENV = "ENTM_SEED"
CONFIG_ENV = "ENTM_CONFIG"


@dataclass(frozen=True)
class NumericPolicy:
    """Every tolerance the package compares against, in one place."""

    structural_tol: float = 1e-10
    spectral_tol: float = 1e-8
    measure_clamp: float = 1e-9
    support_tol: float = 1e-12
    overlap_tol: float = 1e-8
    barrier_floor: float = 1e-14
    purity_tol: float = 1e-10
    pure_norm_tol: float = 1e-12
    eigensolver: str = "lapack"
    max_iterations: int = 500


_policy = NumericPolicy()


def get_policy() -> NumericPolicy:
    return _policy


def set_policy(policy: NumericPolicy):
    global _policy
    if policy.eigensolver not in ("lapack", "jacobi"):
        raise ValueError(f"Unknown eigensolver: {policy.eigensolver}")
    logger.debug(f"Numeric policy set to {policy}")
    _policy = policy


@contextmanager
def policy_override(**changes) -> Iterator[NumericPolicy]:
    """Temporarily replace some policy fields, e.g. ``policy_override(eigensolver="jacobi")``."""
    previous = get_policy()
    set_policy(replace(previous, **changes))
    try:
        yield get_policy()
    finally:
        set_policy(previous)


def resolve_seed(seed: Optional[int] = None) -> int:
    """Explicit seed first, then ENTM_SEED; stochastic work never seeds from the clock."""
    if seed is not None:
        return int(seed)
    env_seed = os.getenv(SEED_ENV)
    if env_seed is not None and env_seed.strip():
        try:
            return int(env_seed.strip())
        except ValueError:
            raise MissingSeed(f"{SEED_ENV} is not an integer: {env_seed!r}")
    raise MissingSeed(f"A seed is required: pass --seed or set {SEED_ENV}")


def _default_ree() -> Dict[str, Any]:
    return {
        "restarts": 8,
        "max_evaluations": 40000,
        "simplex_tolerance": 1e-9,
        "agreement_tolerance": 1e-6,
    }


def _default_sampler() -> Dict[str, Any]:
    return {"method": "ginibre", "ancilla": 4}


@dataclass
class SettingsState:
    policy: Dict[str, Any] = field(default_factory=dict)
    ree: Dict[str, Any] = field(default_factory=_default_ree)
    sampler: Dict[str, Any] = field(default_factory=_default_sampler)


class Settings:
    """Persisted user defaults, stored as JSON next to the user's home directory."""

    _instance = None
    _state = SettingsState()
    _state_file = Path(os.path.expanduser(os.getenv(CONFIG_ENV, "~/.entm/config.json")))

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._load_state()
        return cls._instance

    @classmethod
    def _load_state(cls):
        """Load settings from file"""
        try:
            if cls._state_file.exists():
                with open(cls._state_file) as f:
                    data = json.load(f)
                cls._state = SettingsState(
                    policy=dict(data.get("policy", {})),
                    ree={**_default_ree(), **data.get("ree", {})},
                    sampler={**_default_sampler(), **data.get("sampler", {})},
                )
                logger.debug(f"Loaded settings: {cls._state}")
        except Exception as e:
            logger.warning(f"Failed to load settings from {cls._state_file}: {e}")

    @classmethod
    def _save_state(cls):
        """Save settings to file"""
        try:
            cls._state_file.parent.mkdir(parents=True, exist_ok=True)
            with open(cls._state_file, "w") as f:
                json.dump(asdict(cls._state), f, indent=2, sort_keys=True)
            logger.debug(f"Saved settings to {cls._state_file}")
        except Exception as e:
            logger.warning(f"Failed to save settings: {e}")

    @classmethod
    def reset(cls):
        cls._instance = None
        cls._state = SettingsState()

    @classmethod
    def get_state(cls) -> SettingsState:
        return cls._state

    @classmethod
    def numeric_policy(cls) -> NumericPolicy:
        known = {f.name for f in fields(NumericPolicy)}
        overrides = {k: v for k, v in cls._state.policy.items() if k in known}
        return replace(NumericPolicy(), **overrides)

    @classmethod
    def apply(cls):
        """Make the persisted numeric policy the active one."""
        set_policy(cls.numeric_policy())

    @classmethod
    def set_value(cls, key: str, raw: str):
        """Set ``section.name`` (e.g. ``ree.restarts`` or ``policy.eigensolver``) and persist."""
        section, _, name = key.partition(".")
        if section == "policy":
            defaults = {f.name: f.default for f in fields(NumericPolicy)}
        elif section == "ree":
            defaults = _default_ree()
        elif section == "sampler":
            defaults = _default_sampler()
        else:
            raise KeyError(f"Unknown settings section: {section!r}")
        if name not in defaults:
            raise KeyError(f"Unknown setting: {key!r}")

        value = _coerce(raw, defaults[name])
        if section == "policy":
            # Validate before persisting
            replace(NumericPolicy(), **{**cls._state.policy, name: value})
        getattr(cls._state, section)[name] = value
        cls._save_state()
        logger.debug(f"Setting {key} = {value!r}")
        return value

    def __str__(self):
        return json.dumps(asdict(self._state), sort_keys=True)

    def __repr__(self):
        return f"Settings({self.__str__()})"


def _coerce(raw: str, default: Any) -> Any:
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw
