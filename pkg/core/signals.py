"""
Signals broadcast by the simulation kernel on lifecycle changes.

Senders pass the running ``Simulation`` as ``simulation`` and the simulated
time as ``at``. Receivers live in the apps that care (trace writing in
engine, downtime accounting in metrics) and are connected in their
``AppConfig.ready``.
"""
from django.dispatch import Signal

# node, previous, state
node_state_changed = Signal()

# service, partition, node (None while the partition is unserved)
partition_owner_changed = Signal()

# service, bucket, partition
bucket_assignment_changed = Signal()
