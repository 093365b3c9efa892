"""Exception types shared across the package.

Validation problems raise ValueError. Resource guards (enumeration or
simulation budgets) raise GuardError so callers can tell the two apart;
the command line maps them to exit codes 1 and 2.
"""


class GuardError(RuntimeError):
    """A computation exceeded an explicit resource guard."""
