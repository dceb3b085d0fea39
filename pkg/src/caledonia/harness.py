"""Desk-scale experiment campaigns over the symmetric few-body problem.

A sweep integrates one orbit per (r1, r2) grid cell and records a category
code; a change census aggregates hierarchy transitions over an orbit sample
into the 12-bin table. Campaigns journal per-orbit results so an interrupted
run resumes where it stopped, skipping completed work; serial runs are
deterministic, and parallel runs produce identical artifacts because cells
are independent and aggregation is order-free.
"""

from __future__ import annotations

import csv
import io
import json
import multiprocessing
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__, szebehely
from .core import DomainError, ForbiddenError, MassRatios
from .dynamics import (
    COLLISION,
    SYMMETRY_BROKEN,
    IntegratorConfig,
    initial_state,
    integrate,
)

CODE_FORBIDDEN = "FORBIDDEN"
CODE_SYMBREAK = "SYMBREAK"
CODE_STABLE = "STABLE"
COLLISION_CODES = {
    "12": "C12",
    "13": "C13",
    "14": "C14",
    "23": "C23",
    "24": "C24",
    "34": "C34",
}
ALL_CODES = (CODE_FORBIDDEN, *COLLISION_CODES.values(), CODE_SYMBREAK, CODE_STABLE)

# canonical ordering of the hierarchy-change table rows
TRANSITIONS = (
    ("12", "13"),
    ("12", "14"),
    ("12", "24"),
    ("13", "12"),
    ("13", "14"),
    ("13", "24"),
    ("14", "12"),
    ("14", "13"),
    ("14", "24"),
    ("24", "12"),
    ("24", "13"),
    ("24", "14"),
)

MODES = ("cs5bp", "general4")


class CampaignError(Exception):
    """A campaign directory cannot be started or resumed."""


@dataclass(frozen=True)
class SweepSpec:
    """Definition of one phase-space sweep.

    r1_range and r2_range are inclusive (lo, hi) bounds sampled every step;
    perturbation is an x-offset applied to P1 only and requires the
    general4 mode, since the reduced mode is symmetric by construction.
    """

    ratios: MassRatios
    c0: float
    e0: float
    r1_range: tuple
    r2_range: tuple
    step: float
    perturbation: float = 0.0
    max_steps: int = 1000
    mode: str = "cs5bp"

    def __post_init__(self):
        for name, (lo, hi) in (("r1_range", self.r1_range), ("r2_range", self.r2_range)):
            if not (0.0 < lo <= hi):
                raise DomainError(f"{name} must satisfy 0 < lo <= hi")
        if self.step <= 0:
            raise DomainError("step must be positive")
        if self.perturbation < 0:
            raise DomainError("perturbation must be nonnegative")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        if self.perturbation > 0 and self.mode != "general4":
            raise DomainError("a perturbation requires the general4 mode")
        if self.c0 < 0 or self.e0 <= 0 or self.max_steps < 1:
            raise DomainError("need C0 >= 0, E0 > 0, max_steps >= 1")

    @property
    def r1_values(self):
        lo, hi = self.r1_range
        return np.arange(lo, hi + self.step / 2, self.step)

    @property
    def r2_values(self):
        lo, hi = self.r2_range
        return np.arange(lo, hi + self.step / 2, self.step)

    def to_dict(self):
        return {
            "mu0": self.ratios.mu0,
            "mu1": self.ratios.mu1,
            "mu2": self.ratios.mu2,
            "c0": self.c0,
            "e0": self.e0,
            "r1_range": list(self.r1_range),
            "r2_range": list(self.r2_range),
            "step": self.step,
            "perturbation": self.perturbation,
            "max_steps": self.max_steps,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            ratios=MassRatios(data["mu0"], data["mu1"], data["mu2"]),
            c0=data["c0"],
            e0=data["e0"],
            r1_range=tuple(data["r1_range"]),
            r2_range=tuple(data["r2_range"]),
            step=data["step"],
            perturbation=data.get("perturbation", 0.0),
            max_steps=data.get("max_steps", 1000),
            mode=data.get("mode", "cs5bp"),
        )


@dataclass(frozen=True)
class CategoryGrid:
    """Per-cell outcome codes of a sweep, row-major over (r1, r2)."""

    spec: SweepSpec
    codes: tuple

    def cell(self, i, j):
        return self.codes[i][j]

    def counts(self):
        return Counter(code for row in self.codes for code in row)

    def write_csv(self, target):
        _write_delimited(target, self._rows())

    def _rows(self):
        yield ("r1", "r2", "code")
        r1s, r2s = self.spec.r1_values, self.spec.r2_values
        for i, r1x in enumerate(r1s):
            for j, r2x in enumerate(r2s):
                yield (f"{r1x:.9g}", f"{r2x:.9g}", self.codes[i][j])


@dataclass(frozen=True)
class ChangeTable:
    """Counts of the 12 ordered hierarchy transitions."""

    counts: tuple

    def __post_init__(self):
        if len(self.counts) != len(TRANSITIONS):
            raise DomainError("need one count per ordered transition")

    @property
    def total(self):
        return sum(self.counts)

    @property
    def percentages(self):
        total = self.total
        if total == 0:
            return tuple(0.0 for _ in self.counts)
        return tuple(100.0 * c / total for c in self.counts)

    @classmethod
    def from_changes(cls, changes):
        index = {pair: k for k, pair in enumerate(TRANSITIONS)}
        counts = [0] * len(TRANSITIONS)
        for _, src, dst in changes:
            counts[index[(src, dst)]] += 1
        return cls(counts=tuple(counts))

    def write_csv(self, target):
        _write_delimited(target, self._rows())

    def _rows(self):
        yield ("from", "to", "count", "percent")
        for (src, dst), count, pct in zip(TRANSITIONS, self.counts, self.percentages):
            yield (src, dst, str(count), f"{pct:.1f}")


def _write_delimited(target, rows):
    if hasattr(target, "write"):
        csv.writer(target).writerows(rows)
        return
    with open(target, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def _outcome_code(outcome):
    if outcome.terminal == COLLISION:
        return COLLISION_CODES[outcome.pair]
    if outcome.terminal == SYMMETRY_BROKEN:
        return CODE_SYMBREAK
    return CODE_STABLE


def _sweep_cell(spec, r1x, r2x):
    """Category code of one grid cell; coincident starts are unreachable."""
    if abs(r1x - r2x) < 1e-12:
        return CODE_FORBIDDEN
    try:
        state = initial_state(
            r1x, r2x, spec.c0, spec.e0, spec.ratios,
            mode=spec.mode, perturbation=spec.perturbation,
        )
    except ForbiddenError:
        return CODE_FORBIDDEN
    outcome = integrate(state, spec.ratios, IntegratorConfig(max_steps=spec.max_steps))
    return _outcome_code(outcome)


def _census_orbit(ratios, c0, e0, max_steps, partition, r1x, r2x):
    """Serialized hierarchy changes of one sample orbit ('' if none/forbidden)."""
    if abs(r1x - r2x) < 1e-12:
        return ""
    try:
        state = initial_state(r1x, r2x, c0, e0, ratios)
    except ForbiddenError:
        return ""
    outcome = integrate(
        state, ratios, IntegratorConfig(max_steps=max_steps), partition=partition
    )
    return "|".join(f"{src}>{dst}" for _, src, dst in outcome.hierarchy_changes)


def _parse_changes(payload):
    if not payload:
        return []
    out = []
    for item in payload.split("|"):
        src, _, dst = item.partition(">")
        if (src, dst) not in set(TRANSITIONS):
            raise CampaignError(f"resume refused: bad change entry {item!r}")
        out.append((0.0, src, dst))
    return out


class Campaign:
    """Journaled progress of one sweep or census in a directory.

    The manifest freezes the run definition; the journal appends one line
    per completed orbit. Resuming checks the manifest matches and replays
    the journal; a malformed journal or manifest refuses to resume rather
    than risk mixing incompatible results.
    """

    def __init__(self, path, kind, definition):
        self.path = Path(path)
        self.kind = kind
        self.definition = definition
        self.path.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.path / "manifest.json"
        self.journal_path = self.path / "journal.csv"
        if self.manifest_path.exists():
            self._check_manifest()
        else:
            self._write_manifest()

    def _manifest(self):
        return {
            "kind": self.kind,
            "definition": self.definition,
            "versions": {
                "caledonia": __version__,
                "python": sys.version.split()[0],
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        }

    def _write_manifest(self):
        with open(self.manifest_path, "w") as fh:
            json.dump(self._manifest(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def _check_manifest(self):
        try:
            with open(self.manifest_path) as fh:
                stored = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CampaignError(f"resume refused: unreadable manifest ({exc})")
        if stored.get("kind") != self.kind or stored.get("definition") != self.definition:
            raise CampaignError("resume refused: manifest does not match this run")

    def completed(self):
        """Map of journaled key -> payload; refuses a corrupt journal."""
        done = {}
        if not self.journal_path.exists():
            return done
        with open(self.journal_path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if len(row) != 2:
                    raise CampaignError(
                        f"resume refused: journal line {lineno} is malformed"
                    )
                done[row[0]] = row[1]
        return done

    def append(self, key, payload):
        with open(self.journal_path, "a", newline="") as fh:
            csv.writer(fh).writerow([key, payload])


def _pool_map(jobs, fn, tasks):
    if jobs <= 1:
        return [fn(*task) for task in tasks]
    with multiprocessing.Pool(jobs) as pool:
        return pool.starmap(fn, tasks)


def run_sweep(spec, jobs=1, campaign_path=None):
    """Integrate one orbit per grid cell and return the category grid.

    With campaign_path, per-cell codes journal to disk as they complete and
    a resumed run skips finished cells; grid.csv and manifest.json land in
    the directory. Deterministic for a given spec, serial or parallel.
    """
    campaign = None
    done = {}
    if campaign_path is not None:
        campaign = Campaign(campaign_path, "sweep", spec.to_dict())
        done = campaign.completed()
        for code in done.values():
            if code not in ALL_CODES:
                raise CampaignError(f"resume refused: unknown cell code {code!r}")

    r1s, r2s = spec.r1_values, spec.r2_values
    keys = [(i, j) for i in range(len(r1s)) for j in range(len(r2s))]
    pending = [(i, j) for (i, j) in keys if f"{i},{j}" not in done]
    results = {key: done[f"{key[0]},{key[1]}"] for key in keys if f"{key[0]},{key[1]}" in done}

    tasks = [(spec, float(r1s[i]), float(r2s[j])) for (i, j) in pending]
    for (i, j), code in zip(pending, _pool_map(jobs, _sweep_cell, tasks)):
        results[(i, j)] = code
        if campaign is not None:
            campaign.append(f"{i},{j}", code)

    codes = tuple(
        tuple(results[(i, j)] for j in range(len(r2s))) for i in range(len(r1s))
    )
    grid = CategoryGrid(spec=spec, codes=codes)
    if campaign is not None:
        grid.write_csv(campaign.path / "grid.csv")
    return grid


def run_change_census(ratios, c0, e0, pairs, max_steps=1000, jobs=1, campaign_path=None):
    """Aggregate hierarchy changes over sample orbits into a ChangeTable.

    pairs is the fixed orbit sample as (r1, r2) tuples; forbidden samples
    contribute nothing. The per-(C0, masses) region partition is computed
    once and shared.
    """
    definition = {
        "mu0": ratios.mu0,
        "mu1": ratios.mu1,
        "mu2": ratios.mu2,
        "c0": c0,
        "e0": e0,
        "pairs": [[float(a), float(b)] for a, b in pairs],
        "max_steps": max_steps,
    }
    campaign = None
    done = {}
    if campaign_path is not None:
        campaign = Campaign(campaign_path, "census", definition)
        done = campaign.completed()

    partition = szebehely.region_partition(c0, ratios)
    changes = []
    pending = []
    for k, (r1x, r2x) in enumerate(pairs):
        key = str(k)
        if key in done:
            changes.extend(_parse_changes(done[key]))
        else:
            pending.append((k, float(r1x), float(r2x)))

    tasks = [(ratios, c0, e0, max_steps, partition, r1x, r2x) for _, r1x, r2x in pending]
    for (k, _, _), payload in zip(pending, _pool_map(jobs, _census_orbit, tasks)):
        changes.extend(_parse_changes(payload))
        if campaign is not None:
            campaign.append(str(k), payload)

    table = ChangeTable.from_changes(changes)
    if campaign is not None:
        table.write_csv(campaign.path / "changes.csv")
    return table


def grid_pairs(r1_values, r2_values):
    """Row-major (r1, r2) sample from two axes, as census input."""
    return [(float(a), float(b)) for a in r1_values for b in r2_values]
