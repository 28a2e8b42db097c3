"""
Read-side queries over a running simulation's node states.
"""


def healthy_members(service, t, state):
    """
    Members of a service able to serve at time ``t``.

    Args:
        service (tuple): ``(farm, service)`` names
        t (int): Simulated time, at most the current clock
        state (SimulationState): Runtime state holding each node's history

    Returns:
        list: Ids of members Healthy or Degraded at ``t``, ascending. Failed,
        Syncing and not-yet-created nodes are left out.
    """
    runtime = state.service(*service)
    members = []
    for node_id in sorted(runtime.nodes):
        node_state = runtime.nodes[node_id].state_at(t)
        if node_state is not None and node_state.is_serving:
            members.append(node_id)
    return members
