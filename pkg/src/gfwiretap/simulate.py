"""Monte Carlo harness: AWGN transmission, end-to-end decoding metrics, and
exact-posterior leakage estimation at enumerable sizes.

Per-trial randomness is derived by seeding a fresh generator from
``(seed, trial_id, stream_tag)``, so trials are independent units of work
and results do not depend on execution order or thread count.  Asymptotic
claims (vanishing error, vanishing leakage) are not desk-scale observables;
this module asserts the finite-size identities and bounds instead and
reports asymptotic predictions only as annotated references.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.special import logsumexp

from .channel import LOG2
from .codec import (
    BinningPlan,
    CodecConfig,
    _check_artifacts,
    build_binning,
    decode,
    encode,
    mmse_estimate,
    random_key,
)
from .errors import BudgetError
from .field import FieldSpec, GaussianField, evaluate, evaluate_flipped, sample_field

__all__ = [
    "TrialRecord",
    "SimReport",
    "LeakageEstimate",
    "transmit",
    "run_trial",
    "run_experiment",
    "estimate_leakage",
    "average_leakage_over_realizations",
    "write_report",
]

# Stream tags feeding the per-trial generator derivation.
_TAG_MESSAGE = 0
_TAG_KEY = 1
_TAG_NOISE = 2
_TAG_FIELD = 3
_TAG_PERM = 4
_TAG_LEAK_INPUT = 5
_TAG_LEAK_NOISE = 6

#: Memory guard for the leakage estimator's codeword table (floats).
_TABLE_BUDGET = 2**26


def _stream(seed: int, trial_id: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence((int(seed), int(trial_id), int(tag)))
    )


def _derived_seed(seed: int, trial_id: int, tag: int) -> int:
    seq = np.random.SeedSequence((int(seed), int(trial_id), int(tag)))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TrialRecord:
    """Metrics of one encode-transmit-decode round trip.

    ``flip_fraction`` counts permuted coordinates whose posterior-mean sign
    disagrees with the truth; ``overlap`` is the normalized inner product
    between the true permuted vector and the posterior mean, ``overlap_sign``
    the same against the hard signs (identically ``1 - 2 * flip_fraction``).
    """

    trial_id: int
    message: int
    decoded: int
    bit_errors: int
    flip_fraction: float
    overlap: float
    overlap_sign: float
    bound_ok: bool

    def __post_init__(self):
        if self.overlap_sign != 1.0 - 2.0 * self.flip_fraction:
            raise ValueError(
                "inconsistent record: overlap_sign must equal 1 - 2*flip_fraction"
            )
        if self.bound_ok != (self.flip_fraction <= 1.0 - self.overlap):
            raise ValueError("inconsistent record: bound_ok does not match its fields")


@dataclass(frozen=True)
class LeakageEstimate:
    """Monte Carlo mutual-information estimates, nats per channel use.

    ``leakage`` estimates the message leakage I(message; eavesdropper
    output)/n for the fixed field and plan; ``mi_all_symbols`` the leakage of
    the full permuted vector, ``mi_key_given_msg`` the genie-aided key term.
    The three share samples, so ``chain_residual = |leakage -
    (mi_all_symbols - mi_key_given_msg)|`` is floating-point small.
    """

    n_samples: int
    leakage: float
    leakage_se: float
    mi_all_symbols: float
    mi_all_symbols_se: float
    mi_key_given_msg: float
    mi_key_given_msg_se: float
    chain_residual: float


@dataclass(frozen=True)
class SimReport:
    """Aggregate of a batch of trials, plus provenance.

    ``wall_clock_s`` is informational and excluded from equality so that
    reports from identical configs compare equal regardless of scheduling.
    """

    config: CodecConfig
    n_trials: int
    freeze_field: bool
    freeze_plan: bool
    trials: tuple[TrialRecord, ...]
    message_error_rate: float
    mean_flip_fraction: float
    mean_flip_fraction_se: float
    mean_overlap: float
    mean_overlap_se: float
    leakage: LeakageEstimate | None
    rng_provenance: str
    wall_clock_s: float = dataclass_field(compare=False, default=0.0)


def transmit(x, sigma_sq: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise of variance ``sigma_sq``."""
    x = np.asarray(x, dtype=float)
    if not (math.isfinite(sigma_sq) and sigma_sq >= 0.0):
        raise ValueError(f"sigma_sq must be finite and >= 0, got {sigma_sq}")
    if sigma_sq == 0.0:
        return x
    return x + rng.normal(0.0, math.sqrt(sigma_sq), size=x.shape)


def _trial_field(cfg: CodecConfig, trial_id: int) -> GaussianField:
    spec = FieldSpec(
        n_out=cfg.n,
        dim=cfg.k_tot,
        order=cfg.order,
        power=cfg.power,
        seed=_derived_seed(cfg.field_seed, trial_id, _TAG_FIELD),
    )
    return sample_field(spec)


def _trial_plan(cfg: CodecConfig, trial_id: int) -> BinningPlan:
    return build_binning(
        cfg.k, cfg.k_tilde, _derived_seed(cfg.perm_seed, trial_id, _TAG_PERM)
    )


def run_trial(
    cfg: CodecConfig,
    fld: GaussianField,
    plan: BinningPlan,
    trial_id: int,
) -> TrialRecord:
    """Sample message and key, encode, transmit to the receiver, decode."""
    rng_msg = _stream(cfg.key_seed, trial_id, _TAG_MESSAGE)
    rng_key = _stream(cfg.key_seed, trial_id, _TAG_KEY)
    rng_noise = _stream(cfg.noise_seed, trial_id, _TAG_NOISE)

    m = int(rng_msg.integers(0, 2**cfg.k))
    key = random_key(cfg.k_tilde, rng_key)
    frame = encode(cfg, fld, plan, m, key)
    y = transmit(frame.x, cfg.sigma_b_sq, rng_noise)
    r_tilde = mmse_estimate(fld, y, cfg.sigma_b_sq)
    decoded, s_hat = decode(cfg, plan, r_tilde)

    signs = np.where(r_tilde >= 0.0, 1.0, -1.0)
    k_tot = cfg.k_tot
    flips = int(np.count_nonzero(frame.s_tilde != signs))
    flip_fraction = flips / k_tot
    overlap = float(frame.s_tilde @ r_tilde) / k_tot
    # identical to <s_tilde; sign(r_tilde)> up to representation rounding;
    # written this way so the record identity holds bit-exactly
    overlap_sign = 1.0 - 2.0 * flip_fraction
    return TrialRecord(
        trial_id=trial_id,
        message=m,
        decoded=decoded,
        bit_errors=int(np.count_nonzero(s_hat != frame.s)),
        flip_fraction=flip_fraction,
        overlap=overlap,
        overlap_sign=overlap_sign,
        bound_ok=bool(flip_fraction <= 1.0 - overlap),
    )


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    if values.size < 2:
        return mean, float("nan")
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


def run_experiment(
    cfg: CodecConfig,
    n_trials: int,
    freeze_field: bool = False,
    freeze_plan: bool = False,
    threads: int = 1,
    leakage_samples: int = 0,
) -> SimReport:
    """Run ``n_trials`` independent trials and aggregate.

    By default the field and the binning permutation are resampled per trial
    (averaging over encoder realizations); the freeze flags pin them to the
    trial-0 realization instead.  ``leakage_samples > 0`` additionally runs
    the leakage estimator on the trial-0 field and plan.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    started = time.perf_counter()

    frozen_field = _trial_field(cfg, 0) if freeze_field else None
    frozen_plan = _trial_plan(cfg, 0) if freeze_plan else None

    def one(trial_id: int) -> TrialRecord:
        fld = frozen_field if frozen_field is not None else _trial_field(cfg, trial_id)
        plan = frozen_plan if frozen_plan is not None else _trial_plan(cfg, trial_id)
        return run_trial(cfg, fld, plan, trial_id)

    ids = range(n_trials)
    if threads == 1:
        trials = tuple(one(i) for i in ids)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trials = tuple(pool.map(one, ids))

    flip = np.array([t.flip_fraction for t in trials])
    overlap = np.array([t.overlap for t in trials])
    mean_f, se_f = _mean_and_se(flip)
    mean_ov, se_ov = _mean_and_se(overlap)

    leak = None
    if leakage_samples > 0:
        leak = estimate_leakage(
            cfg, _trial_field(cfg, 0), _trial_plan(cfg, 0), leakage_samples
        )

    return SimReport(
        config=cfg,
        n_trials=n_trials,
        freeze_field=freeze_field,
        freeze_plan=freeze_plan,
        trials=trials,
        message_error_rate=sum(t.decoded != t.message for t in trials) / n_trials,
        mean_flip_fraction=mean_f,
        mean_flip_fraction_se=se_f,
        mean_overlap=mean_ov,
        mean_overlap_se=se_ov,
        leakage=leak,
        rng_provenance=(
            "PCG64 generators seeded from SeedSequence((seed, trial_id, stream_tag)); "
            f"seeds: field={cfg.field_seed} perm={cfg.perm_seed} "
            f"key={cfg.key_seed} noise={cfg.noise_seed}"
        ),
        wall_clock_s=time.perf_counter() - started,
    )


def _codeword_table(fld: GaussianField, plan: BinningPlan) -> np.ndarray:
    """Codewords for every concatenation pattern, indexed by pattern integer.

    Bit ``b`` of the pattern (1 meaning +1) sets concatenation slot ``b``:
    key slots first, then message slots.  Row ``p`` holds the field output
    for the permuted vector of pattern ``p``.
    """
    dim = fld.spec.dim
    table = np.empty((1 << dim, fld.spec.n_out))
    coordinate_of_bit = plan.permutation
    u = np.empty(dim)
    prev_code = None
    current = None
    for step in range(1 << dim):
        code = step ^ (step >> 1)
        if step == 0 or step % 4096 == 0:
            for b in range(dim):
                u[coordinate_of_bit[b]] = 1.0 if (code >> b) & 1 else -1.0
            current = evaluate(fld, u)
        else:
            bit = (code ^ prev_code).bit_length() - 1
            coord = coordinate_of_bit[bit]
            current = evaluate_flipped(fld, u, current, coord)
            u[coord] = -u[coord]
        prev_code = code
        table[code] = current
    return table


def estimate_leakage(
    cfg: CodecConfig,
    fld: GaussianField,
    plan: BinningPlan,
    n_samples: int,
    budget: int = 24,
) -> LeakageEstimate:
    """Estimate the eavesdropper mutual informations for fixed field and plan.

    Draws ``(message, key)`` uniformly, forms the eavesdropper observation,
    and averages exact log-posterior ratios: the message leakage marginalizes
    the key (``2**k_tilde`` terms) against the full marginal
    (``2**(k+k_tilde)`` terms), all in the log domain.  Also returns the two
    chain-decomposition terms estimated from the same samples.
    """
    _check_artifacts(cfg, fld, plan)
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    k, k_tilde = cfg.k, cfg.k_tilde
    dim = k + k_tilde
    if dim > budget:
        raise BudgetError(
            f"exact posteriors need 2**{dim} enumeration; budget is 2**{budget}"
        )
    if (1 << dim) * cfg.n > _TABLE_BUDGET:
        raise BudgetError(
            f"codeword table would hold {(1 << dim) * cfg.n} floats; "
            f"budget is {_TABLE_BUDGET}"
        )

    table = _codeword_table(fld, plan)
    sigma = math.sqrt(cfg.sigma_e_sq)
    inv_two_sigma_sq = 0.5 / cfg.sigma_e_sq
    n = cfg.n

    rng_input = _stream(cfg.key_seed, 0, _TAG_LEAK_INPUT)
    rng_noise = _stream(cfg.noise_seed, 0, _TAG_LEAK_NOISE)

    leak = np.empty(n_samples)
    full = np.empty(n_samples)
    genie = np.empty(n_samples)
    for i in range(n_samples):
        msg_pattern = int(rng_input.integers(0, 1 << k))
        key_pattern = int(rng_input.integers(0, 1 << k_tilde))
        pattern = (msg_pattern << k_tilde) | key_pattern
        y = table[pattern] + rng_noise.normal(0.0, sigma, size=n)

        diff = table - y
        log_like = -inv_two_sigma_sq * np.einsum("ij,ij->i", diff, diff)
        by_message = log_like.reshape(1 << k, 1 << k_tilde)

        lp_joint = log_like[pattern]
        lp_given_msg = float(logsumexp(by_message[msg_pattern])) - k_tilde * LOG2
        lp_marginal = float(logsumexp(log_like)) - dim * LOG2

        leak[i] = (lp_given_msg - lp_marginal) / n
        full[i] = (lp_joint - lp_marginal) / n
        genie[i] = (lp_joint - lp_given_msg) / n

    leak_mean, leak_se = _mean_and_se(leak)
    full_mean, full_se = _mean_and_se(full)
    genie_mean, genie_se = _mean_and_se(genie)
    return LeakageEstimate(
        n_samples=n_samples,
        leakage=leak_mean,
        leakage_se=leak_se,
        mi_all_symbols=full_mean,
        mi_all_symbols_se=full_se,
        mi_key_given_msg=genie_mean,
        mi_key_given_msg_se=genie_se,
        chain_residual=abs(leak_mean - (full_mean - genie_mean)),
    )


def average_leakage_over_realizations(
    cfg: CodecConfig,
    n_samples: int,
    n_realizations: int,
) -> tuple[float, float]:
    """Message leakage averaged over resampled (field, plan) realizations.

    Complements :func:`estimate_leakage`, which conditions on one public
    realization; this reports the mean across ``n_realizations`` independent
    draws with its between-realization standard error.
    """
    if n_realizations < 2:
        raise ValueError(f"n_realizations must be >= 2, got {n_realizations}")
    values = np.array(
        [
            estimate_leakage(
                cfg, _trial_field(cfg, r), _trial_plan(cfg, r), n_samples
            ).leakage
            for r in range(n_realizations)
        ]
    )
    return _mean_and_se(values)


_REPORT_COLUMNS = (
    "trial_id,message,decoded,bit_errors,flip_fraction,overlap,overlap_sign,bound_ok"
)


def write_report(report: SimReport, fh, units: str = "nats") -> None:
    """Emit a report as '#'-headed, comma-delimited text.

    Byte-identical across re-runs with the same config, except for the
    '# generated:' line.
    """
    if units not in ("nats", "bits"):
        raise ValueError(f"units must be 'nats' or 'bits', got {units!r}")
    unit_div = LOG2 if units == "bits" else 1.0
    cfg = report.config
    fh.write("# gfwiretap simulation report v1\n")
    for name in (
        "n",
        "k",
        "k_tilde",
        "order",
        "power",
        "sigma_b_sq",
        "sigma_e_sq",
        "field_seed",
        "perm_seed",
        "key_seed",
        "noise_seed",
        "allow_low_order",
        "k_tilde_overridden",
    ):
        fh.write(f"# param {name} = {getattr(cfg, name)}\n")
    fh.write(f"# param n_trials = {report.n_trials}\n")
    fh.write(f"# param freeze_field = {report.freeze_field}\n")
    fh.write(f"# param freeze_plan = {report.freeze_plan}\n")
    fh.write(f"# param units = {units}\n")
    fh.write(f"# rng: {report.rng_provenance}\n")
    fh.write(
        f"# generated: {time.strftime('%Y-%m-%dT%H:%M:%S%z')} "
        f"wall_clock_s={report.wall_clock_s:.3f}\n"
    )
    fh.write(_REPORT_COLUMNS + "\n")
    for t in report.trials:
        fh.write(
            f"{t.trial_id},{t.message},{t.decoded},{t.bit_errors},"
            f"{t.flip_fraction:.17g},{t.overlap:.17g},{t.overlap_sign:.17g},"
            f"{int(t.bound_ok)}\n"
        )
    fh.write(f"# summary message_error_rate = {report.message_error_rate:.17g}\n")
    fh.write(
        f"# summary mean_flip_fraction = {report.mean_flip_fraction:.17g} "
        f"se = {report.mean_flip_fraction_se:.17g}\n"
    )
    fh.write(
        f"# summary mean_overlap = {report.mean_overlap:.17g} "
        f"se = {report.mean_overlap_se:.17g}\n"
    )
    if report.leakage is not None:
        le = report.leakage
        fh.write(
            f"# summary leakage = {le.leakage / unit_div:.17g} "
            f"se = {le.leakage_se / unit_div:.17g}\n"
        )
        fh.write(
            f"# summary mi_all_symbols = {le.mi_all_symbols / unit_div:.17g} "
            f"se = {le.mi_all_symbols_se / unit_div:.17g}\n"
        )
        fh.write(
            f"# summary mi_key_given_msg = {le.mi_key_given_msg / unit_div:.17g} "
            f"se = {le.mi_key_given_msg_se / unit_div:.17g}\n"
        )
        fh.write(f"# summary chain_residual = {le.chain_residual / unit_div:.17g}\n")
