"""Exception hierarchy shared by all alignkit modules.

Every error carries a short ``reason`` code (stable, used in diagnostics and
tests) and a human readable ``detail``. The CLI maps the two branches to exit
codes: :class:`InputError` -> 2, :class:`NumericalError` -> 3.
"""

from __future__ import annotations

from typing import Any, Sequence


class AlignkitError(RuntimeError):
    """Base class for alignkit failures."""

    exit_code = 2

    def __init__(self, reason: str, detail: str | None = None) -> None:
        self.reason = reason
        self.detail = detail or reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class InputError(AlignkitError):
    """The caller handed in something the computation cannot accept."""

    exit_code = 2


class InvalidScmError(InputError):
    def __init__(self, violations: Sequence[Any]) -> None:
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations[:5])
        super().__init__("invalid scm", summary)


class UnknownVariableError(InputError):
    def __init__(self, name: str, scope: Sequence[str] = ()) -> None:
        self.name = name
        known = f" (known: {', '.join(scope)})" if scope else ""
        super().__init__("unknown variable", f"{name!r}{known}")


class DomainValueError(InputError):
    def __init__(self, variable: str, label: str) -> None:
        super().__init__("out-of-domain value", f"{label!r} is not a value of {variable!r}")


class ScopeMismatchError(InputError):
    def __init__(self, expected: Sequence[str], actual: Sequence[str]) -> None:
        super().__init__(
            "scope mismatch", f"expected {list(expected)}, got {list(actual)}"
        )


class DomainMismatchError(ScopeMismatchError):
    """Same variable name, different value sets on the two sides."""

    def __init__(self, name: str, expected: Sequence[Any], actual: Sequence[Any]) -> None:
        self.name = name
        InputError.__init__(
            self, "domain mismatch", f"{name!r}: expected values {list(expected)}, got {list(actual)}"
        )


class StateSpaceOverflowError(InputError):
    def __init__(self, cells: int, cap: int) -> None:
        self.cells = cells
        self.cap = cap
        super().__init__("state-space overflow", f"{cells} cells exceed the cap of {cap}")


class ZeroMassEvidenceError(InputError):
    def __init__(self, evidence: str, mass: float) -> None:
        super().__init__("zero-mass evidence", f"{evidence} has mass {mass:.3g}")


class DivergenceSupportError(InputError):
    def __init__(self) -> None:
        super().__init__(
            "kl support violation",
            "the second distribution does not dominate the first",
        )


class DegenerateTraversalError(InputError):
    pass


class PartialBlockInterventionError(InputError):
    pass


class StochasticBlockError(InputError):
    pass


class CombinatorialCapError(InputError):
    def __init__(self, count: int, cap: int) -> None:
        super().__init__("combinatorial cap exceeded", f"{count} interventions exceed {cap}")


class EmptyRepresentationError(InputError):
    def __init__(self) -> None:
        super().__init__("empty representation", "at least one coordinate must be kept")


class UnknownScenarioError(InputError):
    def __init__(self, name: str, available: Sequence[str]) -> None:
        self.available = list(available)
        super().__init__(
            "unknown scenario", f"{name!r}; available: {', '.join(self.available)}"
        )


class SpecError(InputError):
    """A world spec failed to parse or validate; ``diagnostics`` lists every problem."""

    def __init__(self, diagnostics: Sequence[Any]) -> None:
        self.diagnostics = list(diagnostics)
        summary = "; ".join(str(d) for d in self.diagnostics[:5])
        super().__init__("invalid spec", summary)


class NumericalError(AlignkitError):
    exit_code = 3


class NotConvergedError(NumericalError):
    def __init__(self, detail: str, last_iterate: Any = None) -> None:
        self.last_iterate = last_iterate
        super().__init__("not converged", detail)


class ObjectiveDecreaseError(NumericalError):
    def __init__(self, iteration: int, drop: float) -> None:
        self.iteration = iteration
        self.drop = drop
        super().__init__(
            "objective decreased", f"iteration {iteration} lost {drop:.3e} nats"
        )
