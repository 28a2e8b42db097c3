"""
Per-node downtime accounting driven by lifecycle signals.
"""
from django.dispatch import receiver

from core.signals import node_state_changed
from lifecycle.models import NodeState


@receiver(node_state_changed)
def record_downtime(sender, simulation, at, node, previous, state, **kwargs):
    if state is NodeState.FAILED and node.down_since is None:
        node.down_since = at
    elif previous is NodeState.FAILED and node.down_since is not None:
        node.downtime += at - node.down_since
        node.down_since = None
