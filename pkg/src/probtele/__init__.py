"""Probabilistic teleportation through partially entangled pure channels."""

from .multiqubit import ChannelBank, MeasurementBank, MultiInput, multi_success_probability, multi_teleport_exact
from .protocol import InputQubit, MeasurementFamily, matching_report, success_probability, teleport_exact
from .schmidt import SchmidtPair, channel_width, entanglement_entropy, schmidt_decompose
from .statevec import PureState

__version__ = "0.1.0"
