"""Exception hierarchy for the weight evolution library."""


class WeightEvolutionError(Exception):
    """Base class for all errors raised by this package."""


class NoEvolvableLayersError(WeightEvolutionError):
    """The parameter store exposes no layers (empty network or everything opted out)."""


class SessionError(WeightEvolutionError):
    """Exclusive-session misuse: nested or concurrent entry."""


class EpochOutOfRangeError(WeightEvolutionError):
    """Epoch outside the schedule's [first epoch, total_epochs] range."""


class EmptyGroupError(WeightEvolutionError):
    """Relative importance requested against an empty score group."""


class MatchLengthError(WeightEvolutionError):
    """Inferior and dominant sets have different sizes."""


class EmptySliceError(WeightEvolutionError):
    """Crossover called on a zero-length slice."""


class ShapeMismatchError(WeightEvolutionError):
    """Paired filters or slices disagree in shape or layer kind."""


class DominantPoolError(WeightEvolutionError):
    """Not enough non-inferior filters to donate (should be unreachable after clamping)."""


class AlreadyAttachedError(WeightEvolutionError):
    """Engine attached to a second hook registry without detaching first."""


class EvolutionApplyError(WeightEvolutionError):
    """A staged update failed to apply; parameters were rolled back."""


class ConfigError(WeightEvolutionError):
    """Invalid or inconsistent run configuration."""
