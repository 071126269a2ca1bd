"""Exception and warning types shared across the package."""


class MagnonSimError(Exception):
    """Base class for all magnonsim errors."""


class InvalidTopologyError(MagnonSimError):
    """Lattice construction request violates a structural constraint."""


class UnsupportedJunctionError(MagnonSimError):
    """Junction node does not have exactly four incident arms."""


class IntegratorUnsupportedError(MagnonSimError):
    """Integrator cannot run on the given lattice (e.g. odd cycle)."""


class IrreversibleConfigError(MagnonSimError):
    """Time-reversed integration requested with damping enabled."""


class NoDecayError(MagnonSimError):
    """Relaxation-time fit requested with zero damping."""


class FitFailedError(MagnonSimError):
    """Envelope fit did not converge or the envelope is not monotone."""


class ClippedEnvelopeError(MagnonSimError):
    """Packet envelope does not fit inside the requested arm."""


class InconclusiveMeasurementError(MagnonSimError):
    """Scattering run ended before the packets separated cleanly."""


class UndefinedSelectivityError(MagnonSimError):
    """Selectivity is undefined because both transmissions are zero."""


class AmbiguousPhaseError(MagnonSimError):
    """Phase correlation fell below the decision threshold."""


class UncalibratableError(MagnonSimError):
    """No real in-band wavenumber satisfies the phase-shift condition."""


class NetlistError(MagnonSimError):
    """Netlist failed validation."""


class NetlistParseError(NetlistError):
    """Netlist text could not be parsed.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class UnpairedArrivalError(MagnonSimError):
    """A packet reached a junction without a coincident partner.

    The junction interference rule is defined only for simultaneous packet
    pairs, so the gate simulation aborts; the event log up to the abort is
    attached for diagnosis.
    """

    def __init__(self, message, event_log=()):
        super().__init__(message)
        self.event_log = list(event_log)


class NonEdgeExcitationWarning(UserWarning):
    """Impulse excitation applied to a site that is not an arm end."""
