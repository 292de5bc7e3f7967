"""Observation-pattern generators and recovery-quality metrics.

Mask generation uses the counter-based Philox generator so that identical
specs and seeds produce identical masks on every platform.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import ObservationMask, frobenius

__all__ = [
    "MissingSpec",
    "random_mask",
    "structured_mask",
    "nmae",
    "psnr",
    "rse",
]

KINDS = (
    "random",
    "drop_every_kth_slice",
    "time_window",
    "whole_slices",
    "composite",
)


@dataclass(frozen=True)
class MissingSpec:
    """Declarative description of a missing-data scenario.

    kind-specific params:
      random:               ratio (observed fraction)
      drop_every_kth_slice: k, phase
      time_window:          period, start, length  (drop indices t with
                            t % period in [start, start+length))
      whole_slices:         slices (explicit index list)
      composite:            structural (nested spec dict) + ratio retained
                            uniformly on the structurally surviving part
    `mode` names the tensor mode the structure applies to.
    """

    kind: str
    mode: int = 0
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown missing kind {self.kind!r}")

    def to_json(self):
        return json.dumps(
            {
                "kind": self.kind,
                "mode": self.mode,
                "params": self.params,
                "seed": self.seed,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(
            kind=doc["kind"],
            mode=int(doc.get("mode", 0)),
            params=dict(doc.get("params", {})),
            seed=int(doc.get("seed", 0)),
        )


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def random_mask(dims, ratio, seed=0):
    """Uniform random mask observing exactly round(ratio * prod(dims))
    entries, deterministic per seed."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims, dtype=np.int64))
    k = int(round(ratio * total))
    flat = _rng(seed).permutation(total)[:k]
    idx = np.column_stack(np.unravel_index(flat, dims, order="F"))
    return ObservationMask(dims, idx)


def _structural_drop(dims, spec):
    """Boolean array, True where the structural pattern keeps the entry."""
    keep = np.ones(dims, dtype=bool)
    mode = spec.mode
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    size = dims[mode]
    sl = [slice(None)] * len(dims)
    if spec.kind == "drop_every_kth_slice":
        k = int(spec.params["k"])
        phase = int(spec.params.get("phase", 0))
        if k < 1 or not 0 <= phase < k:
            raise ValueError(f"invalid k={k}, phase={phase}")
        sl[mode] = slice(phase, size, k)
        keep[tuple(sl)] = False
    elif spec.kind == "time_window":
        period = int(spec.params["period"])
        start = int(spec.params["start"])
        length = int(spec.params["length"])
        if period < 1 or length < 0 or not 0 <= start < period:
            raise ValueError(
                f"invalid window period={period}, start={start}, "
                f"length={length}"
            )
        t = np.arange(size)
        dropped = (t % period >= start) & (t % period < start + length)
        sl[mode] = dropped
        keep[tuple(sl)] = False
    elif spec.kind == "whole_slices":
        slices = [int(s) for s in spec.params.get("slices", [])]
        if any(not 0 <= s < size for s in slices):
            raise ValueError(f"slice index out of range for mode size {size}")
        sl[mode] = slices
        keep[tuple(sl)] = False
    else:
        raise ValueError(f"not a structural kind: {spec.kind!r}")
    return keep


def structured_mask(dims, spec):
    """Mask for a :class:`MissingSpec`, deterministic per seed.

    For composite kinds the structural pattern drops its slices entirely and
    the surviving entries are retained uniformly at the given ratio.
    """
    dims = tuple(int(d) for d in dims)
    if spec.kind == "random":
        return random_mask(dims, float(spec.params["ratio"]), spec.seed)
    if spec.kind == "composite":
        inner = MissingSpec(
            kind=spec.params["structural"]["kind"],
            mode=int(spec.params["structural"].get("mode", spec.mode)),
            params=dict(spec.params["structural"].get("params", {})),
            seed=spec.seed,
        )
        keep = _structural_drop(dims, inner)
        ratio = float(spec.params["ratio"])
        if not 0.0 <= ratio <= 1.0:
            raise ValueError(f"ratio must be in [0, 1], got {ratio}")
        # uniform retention on the structurally surviving part only
        flat_keep = np.flatnonzero(keep.ravel(order="F"))
        k = int(round(ratio * flat_keep.size))
        chosen = flat_keep[_rng(spec.seed).permutation(flat_keep.size)[:k]]
        observed = np.zeros(int(np.prod(dims, dtype=np.int64)), dtype=bool)
        observed[chosen] = True
        return ObservationMask.from_boolean(
            observed.reshape(dims, order="F")
        )
    return ObservationMask.from_boolean(_structural_drop(dims, spec))


def _complement(truth, recovered, mask):
    truth = np.asarray(truth, dtype=np.float64)
    recovered = np.asarray(recovered, dtype=np.float64)
    if truth.shape != recovered.shape or truth.shape != mask.dims:
        raise ValueError(
            f"shape mismatch: truth {truth.shape}, recovered "
            f"{recovered.shape}, mask {mask.dims}"
        )
    miss = ~mask.boolean()
    if not miss.any():
        raise ValueError("metric undefined: mask has an empty complement")
    return truth[miss], recovered[miss]


def nmae(truth, recovered, mask):
    """Normalized mean absolute error over the unobserved entries."""
    t, r = _complement(truth, recovered, mask)
    denom = np.abs(t).sum()
    if denom == 0.0:
        raise ValueError("NMAE undefined: truth vanishes off the mask")
    return float(np.abs(t - r).sum() / denom)


def psnr(truth, recovered, mask, max_value=None, full_tensor=False):
    """Peak signal-to-noise ratio in dB.

    By default the squared error is averaged over the unobserved entries
    only; ``full_tensor=True`` switches to the whole-tensor error divided by
    the complement size, for cross-checking against published figures.
    `max_value` defaults to the maximum entry of `truth`.
    """
    t, r = _complement(truth, recovered, mask)
    peak = float(np.max(truth) if max_value is None else max_value)
    if peak <= 0.0:
        raise ValueError(f"peak value must be positive, got {peak}")
    if full_tensor:
        err = frobenius(np.asarray(recovered) - np.asarray(truth)) ** 2
    else:
        err = float(np.sum((t - r) ** 2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak**2 / (err / t.size))


def rse(truth, recovered):
    """Relative squared error: ||recovered - truth||_F / ||truth||_F."""
    truth = np.asarray(truth, dtype=np.float64)
    recovered = np.asarray(recovered, dtype=np.float64)
    if truth.shape != recovered.shape:
        raise ValueError(
            f"shape mismatch: {truth.shape} vs {recovered.shape}"
        )
    denom = frobenius(truth)
    if denom == 0.0:
        raise ValueError("RSE undefined for an all-zero truth tensor")
    return frobenius(recovered - truth) / denom
