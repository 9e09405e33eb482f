"""TOML grid files for ``simulate`` and case files for ``power``.

A grid file holds an optional ``[defaults]`` table and one or more
``[[block]]`` tables. Inside a block, list-valued keys are expanded as a
Cartesian product in the order they are written (first key outermost). The
key ``np`` takes ``[n, p]`` pairs so that sample size and dimension move
together::

    [defaults]
    master_seed = 2013
    replications = 1000

    [[block]]
    scenario = ["I", "II"]
    T = [10, 20]
    np = [[30, 100], [40, 200]]
    alternative = "Nonsparse"
    beta_norm_sq = [0.03, 0.06, 0.09]
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .model import ValidationError
from .power import PowerInputs
from .simulation import GeneratorConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_GEN_FIELDS = {f.name for f in fields(GeneratorConfig)}
BUNDLED_GRIDS = {"paper-tables": "paper_tables.toml", "smoke": "smoke.toml"}
BUNDLED_POWER = {"comparison-cases": "comparison_cases.toml"}


def _load_toml(path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _resolve(name_or_path, bundled: dict, what: str) -> Path:
    path = Path(name_or_path)
    if path.exists():
        return path
    if str(name_or_path) in bundled:
        ref = resources.files("hdregtest") / "data" / bundled[str(name_or_path)]
        return Path(str(ref))
    raise FileNotFoundError(f"{what} {name_or_path!r} not found")


def resolve_grid_path(name_or_path) -> Path:
    return _resolve(name_or_path, BUNDLED_GRIDS, "grid file")


def _expand_block(block: dict, defaults: dict, where: str) -> list[GeneratorConfig]:
    unknown = set(block) - _GEN_FIELDS - {"np"}
    if unknown:
        raise ValidationError(f"{where}: unknown key(s) {sorted(unknown)}")
    axes = []
    for key, value in block.items():
        if key == "np":
            pairs = value if value and isinstance(value[0], list) else [value]
            if any(len(pair) != 2 for pair in pairs):
                raise ValidationError(f"{where}: 'np' entries must be [n, p] pairs")
            axes.append([(("n", pair[0]), ("p", pair[1])) for pair in pairs])
        elif isinstance(value, list):
            axes.append([((key, v),) for v in value])
        else:
            axes.append([((key, value),)])
    cells = []
    for combo in itertools.product(*axes):
        params = dict(defaults)
        for group in combo:
            params.update(group)
        if params.get("alternative", "Null") == "Null":
            params.setdefault("beta_norm_sq", 0.0)
        try:
            cells.append(GeneratorConfig(**params))
        except (TypeError, ValidationError) as exc:
            label = ", ".join(f"{k}={v}" for k, v in params.items())
            raise ValidationError(f"{where}: invalid cell ({label}): {exc}") from None
    return cells


def load_grid(name_or_path) -> list[GeneratorConfig]:
    path = resolve_grid_path(name_or_path)
    doc = _load_toml(path)
    defaults = doc.get("defaults", {})
    bad = set(defaults) - _GEN_FIELDS
    if bad:
        raise ValidationError(f"{path}: unknown default key(s) {sorted(bad)}")
    blocks = doc.get("block", [])
    if not blocks:
        raise ValidationError(f"{path}: no [[block]] tables")
    grid = []
    for k, block in enumerate(blocks, start=1):
        grid.extend(_expand_block(block, defaults, f"{path.name} block {k}"))
    return grid


# ---------------------------------------------------------------------------
# power case files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerCase:
    name: str
    inputs: PowerInputs
    alpha: float
    fixed: tuple[str, ...] = ()
    are: tuple[float, float] | None = None


def _sigma_from(entry: dict, where: str) -> np.ndarray:
    given = [k for k in ("sigma", "sigma_diag", "sigma_halves") if k in entry]
    if len(given) != 1:
        raise ValidationError(f"{where}: give exactly one of sigma, sigma_diag, sigma_halves")
    key = given[0]
    if key == "sigma":
        return np.array(entry["sigma"], dtype=float)
    if key == "sigma_diag":
        return np.diag(np.array(entry["sigma_diag"], dtype=float))
    if "p" not in entry:
        raise ValidationError(f"{where}: sigma_halves needs p")
    s1, s2 = entry["sigma_halves"]
    p = int(entry["p"])
    v = np.full(p, float(s2))
    v[: p // 2] = float(s1)
    return np.diag(v)


def _delta_from(entry: dict, p: int, where: str) -> np.ndarray:
    if "delta_beta" in entry:
        return np.array(entry["delta_beta"], dtype=float)
    if "delta_first_half" in entry:
        d = np.zeros(p)
        d[: p // 2] = float(entry["delta_first_half"])
        return d
    raise ValidationError(f"{where}: give delta_beta or delta_first_half")


def load_power_cases(path) -> list[PowerCase]:
    """Parse a power case file: top-level ``alpha`` plus ``[[case]]`` tables.

    Each case sets ``n``, ``sigma2``, one of ``sigma`` (dense), ``sigma_diag``
    or ``sigma_halves = [s1, s2]`` with ``p``, and ``delta_beta`` or
    ``delta_first_half``. Optional: ``kurtosis_excess``, ``gamma``,
    ``fixed = ["A1", "A2"]``, ``are = [s1, s2]``. With ``sigma_halves`` the
    efficiency ratio is reported automatically.
    """
    path = _resolve(path, BUNDLED_POWER, "power case file")
    doc = _load_toml(path)
    alpha = float(doc.get("alpha", 0.05))
    cases = []
    for k, entry in enumerate(doc.get("case", []), start=1):
        name = str(entry.get("name", f"case{k}"))
        where = f"{path.name} case {name!r}"
        for req in ("n", "sigma2"):
            if req not in entry:
                raise ValidationError(f"{where}: missing {req}")
        sigma = _sigma_from(entry, where)
        delta = _delta_from(entry, sigma.shape[0], where)
        gamma = np.array(entry["gamma"], dtype=float) if "gamma" in entry else None
        try:
            inputs = PowerInputs(
                sigma=sigma,
                delta_beta=delta,
                sigma2=float(entry["sigma2"]),
                n=int(entry["n"]),
                kurtosis_excess=float(entry.get("kurtosis_excess", 0.0)),
                gamma=gamma,
            )
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None
        if np.linalg.eigvalsh(inputs.sigma).min() <= 0:
            raise ValidationError(f"{where}: sigma is not positive definite")
        are = entry.get("are", entry.get("sigma_halves"))
        fixed = tuple(entry.get("fixed", ()))
        bad = set(fixed) - {"A1", "A2"}
        if bad:
            raise ValidationError(f"{where}: unknown fixed alternative(s) {sorted(bad)}")
        cases.append(PowerCase(name, inputs, float(entry.get("alpha", alpha)), fixed,
                               tuple(float(x) for x in are) if are is not None else None))
    if not cases:
        raise ValidationError(f"{path}: no [[case]] tables")
    return cases
