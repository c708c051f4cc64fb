"""Keyed wiretap encoder and exact Bayesian decoder.

Encoding: draw ``k_tilde`` uniform bipolar key symbols, prefix them to the
bipolar message, and permute the concatenation so that every bin of the
permuted vector holds exactly one key symbol; the codeword is the field
evaluation of the permuted vector.

Decoding: the posterior mean of the permuted vector under the true noise
model, computed as the exact normalized sum over all ``2**(k + k_tilde)``
bipolar candidates, followed by the inverse permutation and a sign slicer on
the message coordinates.

Encoding and decoding of distinct frames are independent; a single decode
enumerates candidates in Gray-code order so each codeword is an incremental
update of its predecessor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .channel import bin_size, key_length
from .errors import BudgetError, ConfigurationError
from .field import GaussianField, evaluate, evaluate_flipped

__all__ = [
    "DEFAULT_ENUM_BUDGET",
    "CodecConfig",
    "BinningPlan",
    "EncodedFrame",
    "message_to_bipolar",
    "bipolar_to_message",
    "random_key",
    "build_binning",
    "encode",
    "mmse_estimate",
    "decode",
    "frame_to_line",
    "frame_from_line",
]

#: Largest total input dimension the exact decoder will enumerate (2**24).
DEFAULT_ENUM_BUDGET = 24

#: Refresh the incremental Gray-code evaluation from scratch this often,
#: bounding floating-point drift over long enumerations.
_REANCHOR_EVERY = 4096


@dataclass(frozen=True)
class CodecConfig:
    """All scheme parameters: sizes, field order, powers, noises, seeds.

    ``k_tilde`` defaults to the key budget ``key_length(n, power,
    sigma_e_sq)``; passing any other value is recorded in
    ``k_tilde_overridden``.  Field orders below 3 leak through their linear
    component and are only admitted with ``allow_low_order`` set (ablations).
    """

    n: int
    k: int
    sigma_b_sq: float
    sigma_e_sq: float
    order: int = 3
    power: float = 1.0
    k_tilde: int | None = None
    field_seed: int = 0
    perm_seed: int = 1
    key_seed: int = 2
    noise_seed: int = 3
    allow_low_order: bool = False
    k_tilde_overridden: bool = dataclass_field(init=False, default=False)

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError(f"n and k must be >= 1, got {self.n}, {self.k}")
        if not (isinstance(self.order, (int, np.integer)) and self.order >= 1):
            raise ValueError(f"order must be an integer >= 1, got {self.order}")
        if self.order < 3 and not self.allow_low_order:
            raise ConfigurationError(
                f"field order {self.order} has a linear/quadratic component; "
                f"pass allow_low_order=True to run it as an ablation"
            )
        for name in ("sigma_b_sq", "sigma_e_sq", "power"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")
        for name in ("field_seed", "perm_seed", "key_seed", "noise_seed"):
            value = getattr(self, name)
            if not (0 <= int(value) < 2**64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer")
        derived = key_length(self.n, self.power, self.sigma_e_sq)
        if self.k_tilde is None:
            object.__setattr__(self, "k_tilde", derived)
        elif self.k_tilde < 1:
            raise ValueError(f"k_tilde must be >= 1, got {self.k_tilde}")
        elif self.k_tilde != derived:
            object.__setattr__(self, "k_tilde_overridden", True)

    @property
    def k_tot(self) -> int:
        return self.k + self.k_tilde


@dataclass(frozen=True)
class BinningPlan:
    """Permutation with the one-key-symbol-per-bin property.

    ``permutation[j]`` is the position of concatenation slot ``j`` in the
    permuted vector; slots ``0..k_tilde-1`` hold the key.  Bin ``l`` (from 0)
    covers positions ``[l*width, min((l+1)*width, k+k_tilde))`` and contains
    exactly one key position.
    """

    permutation: np.ndarray
    width: int
    key_positions: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=np.int64)
        keys = np.asarray(self.key_positions, dtype=np.int64)
        total = perm.size
        if not np.array_equal(np.sort(perm), np.arange(total)):
            raise ValueError("permutation is not a bijection on its index range")
        k_tilde = keys.size
        if k_tilde < 1 or k_tilde > total:
            raise ValueError(f"need 1 <= k_tilde <= {total}, got {k_tilde}")
        if not np.array_equal(keys, np.sort(perm[:k_tilde])):
            raise ValueError("key_positions must be the sorted images of the key slots")
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        for ell in range(k_tilde):
            lo, hi = ell * self.width, min((ell + 1) * self.width, total)
            n_keys = int(np.count_nonzero((keys >= lo) & (keys < hi)))
            if n_keys != 1:
                raise ValueError(
                    f"bin {ell} (positions [{lo}, {hi})) holds {n_keys} key "
                    f"symbols, expected exactly 1"
                )
        perm.setflags(write=False)
        keys.setflags(write=False)
        object.__setattr__(self, "permutation", perm)
        object.__setattr__(self, "key_positions", keys)

    @property
    def k_tilde(self) -> int:
        return self.key_positions.size

    @property
    def k_tot(self) -> int:
        return self.permutation.size


@dataclass(frozen=True)
class EncodedFrame:
    """One encoded transmission: message symbols, key, permuted vector, codeword."""

    s: np.ndarray
    key: np.ndarray
    s_tilde: np.ndarray
    x: np.ndarray


def message_to_bipolar(m: int, k: int) -> np.ndarray:
    """Bipolar representation of a message integer; bit i == 0 maps to -1.

    Bits are taken least-significant first, so coordinate ``i`` carries bit
    ``i`` of ``m``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0 <= m < 2**k:
        raise ValueError(f"message {m} out of range [0, 2**{k})")
    bits = (np.asarray(m, dtype=np.uint64) >> np.arange(k, dtype=np.uint64)) & 1
    return bits.astype(float) * 2.0 - 1.0


def bipolar_to_message(s) -> int:
    """Inverse of :func:`message_to_bipolar`."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or not np.all(np.abs(s) == 1.0):
        raise ValueError("input must be a 1-d vector of +1/-1 entries")
    bits = (s > 0).astype(object)
    return int(sum(bit << i for i, bit in enumerate(bits)))


def random_key(k_tilde: int, rng: np.random.Generator) -> np.ndarray:
    """``k_tilde`` i.i.d. uniform bipolar key symbols."""
    return rng.integers(0, 2, size=k_tilde).astype(float) * 2.0 - 1.0


def build_binning(k: int, k_tilde: int, perm_seed: int) -> BinningPlan:
    """Draw a one-key-per-bin permutation; deterministic per seed.

    Each key symbol's position is drawn uniformly within its bin and the
    message symbols are scattered uniformly over the remaining positions.
    """
    if k < 1 or k_tilde < 1:
        raise ValueError(f"k and k_tilde must be >= 1, got {k}, {k_tilde}")
    width = bin_size(k, k_tilde)
    total = k + k_tilde
    if (k_tilde - 1) * width >= total:
        raise ConfigurationError(
            f"bin layout degenerates for k={k}, k_tilde={k_tilde}: bin "
            f"{k_tilde - 1} of width {width} starts past the vector end, so "
            f"one key symbol per bin is unsatisfiable"
        )
    rng = np.random.default_rng(np.random.SeedSequence(int(perm_seed)))
    key_positions = np.empty(k_tilde, dtype=np.int64)
    for ell in range(k_tilde):
        lo, hi = ell * width, min((ell + 1) * width, total)
        key_positions[ell] = rng.integers(lo, hi)
    remaining = np.setdiff1d(np.arange(total), key_positions)
    message_positions = rng.permutation(remaining)
    permutation = np.concatenate([key_positions, message_positions])
    return BinningPlan(
        permutation=permutation,
        width=width,
        key_positions=np.sort(key_positions),
    )


def _check_artifacts(cfg: CodecConfig, fld: GaussianField, plan: BinningPlan):
    spec = fld.spec
    if (spec.n_out, spec.dim, spec.order) != (cfg.n, cfg.k_tot, cfg.order) or (
        spec.power != cfg.power
    ):
        raise ConfigurationError(
            f"field spec (n_out={spec.n_out}, dim={spec.dim}, order={spec.order}, "
            f"power={spec.power}) does not match config (n={cfg.n}, "
            f"k_tot={cfg.k_tot}, order={cfg.order}, power={cfg.power})"
        )
    if plan.k_tot != cfg.k_tot or plan.k_tilde != cfg.k_tilde:
        raise ConfigurationError(
            f"binning plan covers {plan.k_tot} positions with {plan.k_tilde} "
            f"keys; config needs {cfg.k_tot} and {cfg.k_tilde}"
        )


def encode(
    cfg: CodecConfig,
    fld: GaussianField,
    plan: BinningPlan,
    m: int,
    key,
) -> EncodedFrame:
    """Map a message integer and key vector to a codeword."""
    _check_artifacts(cfg, fld, plan)
    s = message_to_bipolar(m, cfg.k)
    key = np.asarray(key, dtype=float)
    if key.shape != (cfg.k_tilde,) or not np.all(np.abs(key) == 1.0):
        raise ValueError(f"key must be a bipolar vector of length {cfg.k_tilde}")
    concat = np.concatenate([key, s])
    s_tilde = np.empty(cfg.k_tot)
    s_tilde[plan.permutation] = concat
    x = evaluate(fld, s_tilde)
    return EncodedFrame(s=s, key=key, s_tilde=s_tilde, x=x)


def _gray_log_weights(
    fld: GaussianField,
    y: np.ndarray,
    sigma_sq: float,
    reverse: bool = False,
    coordinate_of_bit=None,
) -> np.ndarray:
    """Log-weights ``-||y - V(u)||^2 / (2 sigma_sq)`` for every bipolar u.

    Entry ``p`` of the result corresponds to the pattern integer ``p`` whose
    bit ``b`` (1 meaning +1) sets coordinate ``coordinate_of_bit[b]`` of
    ``u`` (identity by default).  Enumeration follows the Gray-code sequence,
    forward or reversed, re-evaluating from scratch every few thousand steps
    to bound drift.
    """
    dim = fld.spec.dim
    if coordinate_of_bit is None:
        coordinate_of_bit = np.arange(dim)
    total = 1 << dim
    indices = range(total - 1, -1, -1) if reverse else range(total)

    logw = np.empty(total)
    u = np.empty(dim)
    prev_code = None
    current = None
    for step, i in enumerate(indices):
        code = i ^ (i >> 1)
        if step == 0 or step % _REANCHOR_EVERY == 0:
            for b in range(dim):
                u[coordinate_of_bit[b]] = 1.0 if (code >> b) & 1 else -1.0
            current = evaluate(fld, u)
        else:
            bit = (code ^ prev_code).bit_length() - 1
            coord = coordinate_of_bit[bit]
            current = evaluate_flipped(fld, u, current, coord)
            u[coord] = -u[coord]
        prev_code = code
        resid = y - current
        logw[code] = -0.5 * float(resid @ resid) / sigma_sq
    return logw


def mmse_estimate(
    fld: GaussianField,
    y,
    sigma_sq: float,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> np.ndarray:
    """Exact posterior mean of the bipolar input given ``y``.

    Sums over all ``2**dim`` candidates in Gray-code order with incremental
    codeword updates; the exponents are shifted by their maximum before
    exponentiation.  Every coordinate of the result lies in [-1, 1].
    """
    spec = fld.spec
    if not (math.isfinite(sigma_sq) and sigma_sq > 0.0):
        raise ValueError(f"sigma_sq must be finite and > 0, got {sigma_sq}")
    if spec.dim > budget:
        raise BudgetError(
            f"exact posterior needs 2**{spec.dim} codeword evaluations; "
            f"enumeration budget is 2**{budget}"
        )
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.n_out,):
        raise ValueError(f"y must have shape ({spec.n_out},), got {y.shape}")

    logw = _gray_log_weights(fld, y, sigma_sq)
    weights = np.exp(logw - logw.max())
    z = weights.sum()
    patterns = np.arange(1 << spec.dim, dtype=np.uint64)
    r = np.empty(spec.dim)
    for b in range(spec.dim):
        signs = ((patterns >> np.uint64(b)) & np.uint64(1)).astype(float) * 2.0 - 1.0
        r[b] = float(weights @ signs) / z
    return np.clip(r, -1.0, 1.0)


def decode(cfg: CodecConfig, plan: BinningPlan, r_tilde) -> tuple[int, np.ndarray]:
    """Invert the permutation and slice the sign of the message coordinates.

    ``sgn(0)`` resolves to +1.
    """
    r_tilde = np.asarray(r_tilde, dtype=float)
    if r_tilde.shape != (cfg.k_tot,):
        raise ValueError(f"r_tilde must have length {cfg.k_tot}, got {r_tilde.shape}")
    r = r_tilde[plan.permutation]
    s_hat = np.where(r[cfg.k_tilde :] >= 0.0, 1.0, -1.0)
    return bipolar_to_message(s_hat), s_hat


def _bits_to_str(v) -> str:
    return "".join("+" if x > 0 else "-" for x in v)


def _str_to_bits(text: str) -> np.ndarray:
    if not text or any(ch not in "+-" for ch in text):
        raise ValueError(f"malformed bipolar string {text!r}")
    return np.array([1.0 if ch == "+" else -1.0 for ch in text])


def frame_to_line(cfg: CodecConfig, frame: EncodedFrame) -> str:
    """Serialize one frame for replay and cross-run comparison."""
    x_text = ",".join(format(v, ".17g") for v in frame.x)
    return (
        f"field_seed={cfg.field_seed} perm_seed={cfg.perm_seed} "
        f"key_seed={cfg.key_seed} noise_seed={cfg.noise_seed} "
        f"m={bipolar_to_message(frame.s)} key={_bits_to_str(frame.key)} "
        f"s_tilde={_bits_to_str(frame.s_tilde)} x={x_text}"
    )


def frame_from_line(line: str) -> dict:
    """Parse a line written by :func:`frame_to_line`."""
    fields = {}
    for token in line.split():
        name, _, value = token.partition("=")
        if not _:
            raise ValueError(f"malformed frame token {token!r}")
        fields[name] = value
    try:
        return {
            "field_seed": int(fields["field_seed"]),
            "perm_seed": int(fields["perm_seed"]),
            "key_seed": int(fields["key_seed"]),
            "noise_seed": int(fields["noise_seed"]),
            "m": int(fields["m"]),
            "key": _str_to_bits(fields["key"]),
            "s_tilde": _str_to_bits(fields["s_tilde"]),
            "x": np.array([float(v) for v in fields["x"].split(",")]),
        }
    except KeyError as missing:
        raise ValueError(f"frame line is missing field {missing}") from None
