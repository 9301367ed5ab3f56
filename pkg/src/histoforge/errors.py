"""Exception types shared across the toolkit."""


class HistoforgeError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class NoHeterogeneousPatchError(HistoforgeError):
    """Raised when sampling exhausts all relaxation rounds.

    Carries the final (most relaxed) thresholds so callers can report
    how far the search was widened before giving up.
    """

    def __init__(self, tau_entropy, r_min, r_max, rounds):
        self.tau_entropy = tau_entropy
        self.r_min = r_min
        self.r_max = r_max
        self.rounds = rounds
        super().__init__(
            f"no heterogeneous patch found after {rounds} relaxation rounds "
            f"(final tau_entropy={tau_entropy:.6g}, ratio bounds "
            f"[{r_min:.3g}, {r_max:.3g}])"
        )
