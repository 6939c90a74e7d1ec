"""Swarm mechanics on tiny vectors: one velocity step, projection, stagnation and collapse."""
import numpy as np

from swarmfuzz.pso_core import (Particle, PsoConfig, init_swarm, project_to_simplex, rst_mon,
                                update_position, update_pv, update_velocity)

# one hand-checkable velocity step
p = Particle(np.array([0.5, 0.5]), np.array([0.1, -0.1]), np.array([0.6, 0.4]))
v = update_velocity(p, np.array([0.8, 0.2]), PsoConfig(k=0.5), r1=0.5, r2=0.25)
print("velocity", v)  # (0.175, -0.175)
p.velocity = v
print("position", update_position(p))

# a step that leaves the simplex is clipped and renormalized
print("projected", project_to_simplex([-0.2, 0.7, 0.5]))

# the monitor counts rounds without a strict improvement
rng = np.random.default_rng(0)
swarm = init_swarm(3, (4,), rng)
for t in range(6):
    res = rst_mon(swarm, beta=3, fitness={0: t, 1: 1.0, 2: 0.0})
    counts = [q.stagnation_count for q in swarm.particles]
    print(f"round {t}: counters {counts} reset {res.reset} g={res.global_best_index}")
    update_pv(swarm, PsoConfig(), rng, reset=res.reset)

# once every particle sits on the global best only inertia is left, so |v| halves each step
swarm = init_swarm(4, (12,), rng)
for q in swarm.particles:
    q.position = swarm.particles[0].position.copy()
    q.local_best_position = q.position.copy()
    q.velocity = rng.normal(size=12) * 0.01
for it in range(30):
    rst_mon(swarm, 10 ** 6, {i: 1.0 for i in range(4)})
    update_pv(swarm, PsoConfig(k=0.5), rng)
    if it % 5 == 0:
        print(f"iter {it:2d} max |v| {swarm.velocity_norms().max():.2e}")
