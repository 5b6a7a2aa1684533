"""(alpha, beta)-goodness of deterministic mechanisms on a finite instance set, and
the search for a good member inside a universally truthful mixture."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Allocation, welfare
from .mechanisms import optimal_allocation


class PreconditionFailed(ValueError):
    def __init__(self, instance: int, expected: Fraction, opt: Fraction, alpha: Fraction):
        self.instance = instance
        super().__init__(
            f"instance {instance}: expected welfare {expected} is below OPT/alpha = {opt}/{alpha}"
        )


def _allocation(out) -> Allocation:
    return out if isinstance(out, Allocation) else out.allocation


@dataclass
class GoodnessReport:
    alpha: Fraction
    beta: Fraction
    verdicts: list  # per instance: welfare * alpha >= OPT
    welfares: list
    opts: list

    def is_good(self, alpha, beta) -> bool:
        return Fraction(alpha) <= self.alpha and self.beta >= Fraction(beta)


def goodness_check(mech, U: Sequence[Sequence], alpha, opts: Sequence | None = None) -> GoodnessReport:
    """beta = fraction of instances where the mechanism's welfare is at least OPT/alpha."""
    alpha = Fraction(alpha)
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if opts is None:
        opts = [optimal_allocation(inst)[0] for inst in U]
    welfares = [welfare(_allocation(mech(inst)), inst) for inst in U]
    verdicts = [w * alpha >= opt for w, opt in zip(welfares, opts)]
    beta = Fraction(sum(verdicts), len(U)) if U else Fraction(1)
    return GoodnessReport(alpha, beta, verdicts, welfares, list(opts))


@dataclass
class SupportSearch:
    index: int | None
    alpha_prime: Fraction
    target_alpha: Fraction
    target_beta: Fraction
    reports: list  # one GoodnessReport per support member


def support_search(randomized: Sequence[tuple], U: Sequence[Sequence], alpha, gamma, tau) -> SupportSearch:
    """Find a support member that is (alpha' * tau, (1 - 1/tau) / alpha')-good,
    with alpha' = 1 / (1/alpha - 1/gamma).

    The mixture must first achieve expected welfare >= OPT/alpha on every
    instance; otherwise :class:`PreconditionFailed` names the instance.
    """
    alpha, gamma, tau = Fraction(alpha), Fraction(gamma), Fraction(tau)
    if not gamma > alpha >= 1:
        raise ValueError("need gamma > alpha >= 1")
    if not tau > 1:
        raise ValueError("need tau > 1")
    weights = [Fraction(w) for w, _ in randomized]
    if sum(weights) != 1 or any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative and sum to 1")
    opts = [optimal_allocation(inst)[0] for inst in U]
    per_member = [[welfare(_allocation(mech(inst)), inst) for inst in U] for _, mech in randomized]
    for idx, opt in enumerate(opts):
        expected = sum(w * col[idx] for w, col in zip(weights, per_member))
        if expected * alpha < opt:
            raise PreconditionFailed(idx, expected, opt, alpha)
    alpha_prime = 1 / (1 / alpha - 1 / gamma)
    target_alpha = alpha_prime * tau
    target_beta = (1 - 1 / tau) / alpha_prime
    reports = []
    found = None
    for j, col in enumerate(per_member):
        verdicts = [w * target_alpha >= opt for w, opt in zip(col, opts)]
        beta = Fraction(sum(verdicts), len(U)) if U else Fraction(1)
        reports.append(GoodnessReport(target_alpha, beta, verdicts, col, opts))
        if found is None and beta >= target_beta:
            found = j
    return SupportSearch(found, alpha_prime, target_alpha, target_beta, reports)
