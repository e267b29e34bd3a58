"""Discrete-event supply chain: event list, (Q, R) policies, entities."""

from .engine import (InvariantError, Order, OrderClass, Simulation, Stock, SupplyChainConfig,
                     build_simulation, run)
from .events import EventKind, EventQueue, SimEvent
from .policy import (InventoryPolicy, PolicyMode, TransportStrategy, dynamic_policy_update,
                     qr_parameters, reorder_check, select_mode, z_alpha)

__all__ = [
    "EventKind", "EventQueue", "InventoryPolicy", "InvariantError", "Order", "OrderClass",
    "PolicyMode", "SimEvent", "Simulation", "Stock", "SupplyChainConfig", "TransportStrategy",
    "build_simulation", "dynamic_policy_update", "qr_parameters", "reorder_check", "run",
    "select_mode", "z_alpha",
]
