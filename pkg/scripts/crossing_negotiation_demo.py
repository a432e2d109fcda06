#!/usr/bin/env python3
"""Resolve a symmetric two-agent crossing by arrival-time negotiation.

Both agents nominally arrive at t = 10 and would collide at the origin
at t = 5. The demo shows the pre-negotiation overlap, runs the grid
search over arrival-time deviations, and verifies the post-negotiation
separation.
"""

from junctionplan import (
    AgentSpec,
    JunctionSolveConfig,
    KinematicState,
    NegotiationConfig,
    Scenario,
    detect_conflicts,
    encode_message,
    min_separation,
    negotiate_arrival_times,
    payoff,
    plan_agent,
)


def replan(agent, scenario, tf):
    shifted = AgentSpec(id=agent.id, radius=agent.radius, start=agent.start,
                        goal=agent.goal, t0=agent.t0, tf_nominal=tf)
    traj, report = plan_agent(shifted, scenario)
    return shifted, traj, report


def main():
    a1 = AgentSpec(id=1, radius=0.75,
                   start=KinematicState.at_rest(-5.0, 0.0),
                   goal=KinematicState.at_rest(5.0, 0.0),
                   t0=0.0, tf_nominal=10.0)
    a2 = AgentSpec(id=2, radius=0.75,
                   start=KinematicState.at_rest(0.0, -5.0),
                   goal=KinematicState.at_rest(0.0, 5.0),
                   t0=0.0, tf_nominal=10.0)
    scenario = Scenario(agents=(a1, a2), obstacles=())
    required = a1.radius + a2.radius

    messages = []
    for agent in (a1, a2):
        _, report = plan_agent(agent, scenario)
        messages.append(encode_message(agent, report))

    print("crossing negotiation demo")
    print(f"  required separation       {required:.2f} m")
    for conflict in detect_conflicts(messages, scenario):
        print(f"  nominal conflict          agents {conflict.pair}, "
              f"overlap {conflict.penetration:.3f} m at t={conflict.time:.2f}")
    for msg in messages:
        print(f"  nominal payoff agent {msg.agent_id}    "
              f"{payoff(msg, messages, scenario).to_json()}")

    config = NegotiationConfig(step=2.0, max_deviation=4.0)
    arrival = negotiate_arrival_times(scenario, config, JunctionSolveConfig())
    print(f"  negotiated arrivals       {arrival}")

    plans = {}
    final_messages = []
    for agent in (a1, a2):
        shifted, traj, report = replan(agent, scenario, arrival[agent.id])
        plans[agent.id] = traj
        final_messages.append(encode_message(shifted, report))
    t_min, dist = min_separation(plans[1], plans[2])
    print(f"  post-negotiation minimum  {dist:.3f} m at t={t_min:.2f} "
          f"(margin {dist - required:+.3f} m)")
    for msg in final_messages:
        print(f"  final payoff agent {msg.agent_id}      "
              f"{payoff(msg, final_messages, scenario).to_json():.4f}")


if __name__ == "__main__":
    main()
