"""Built-in pure-function packages shipped with the gateway.

The registry is closed: packages are compiled in and selected by name at
startup, never loaded over the wire.
"""

from __future__ import annotations

from ..errors import ModuleNotAvailable
from ..lambda_machine import LambdaMachine
from . import arithmetic, pricer, weather

BUILTIN_PACKAGES = {
    "pricer": pricer.FUNCTIONS,
    "basic_arithmetic": arithmetic.BASIC_FUNCTIONS,
    "higher_order_arithmetic": arithmetic.HIGHER_ORDER_FUNCTIONS,
    "weather": weather.FUNCTIONS,
}


def available_packages() -> list[str]:
    return sorted(BUILTIN_PACKAGES)


def register_builtins(machine: LambdaMachine, names=None) -> None:
    """Register the named built-in packages (all of them by default)."""
    if names is None:
        names = available_packages()
    for name in names:
        if name not in BUILTIN_PACKAGES:
            raise ModuleNotAvailable(f"unknown built-in package: {name}")
        machine.register_package(name, BUILTIN_PACKAGES[name])
