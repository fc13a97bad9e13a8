"""Quaternion toolbox tour: log/exp maps, slerp powers, the double-cover
metric, and angular velocities."""

import numpy as np

from telemap import quat

print("== log / exp ==")
q90 = quat.from_axis_angle([0, 0, 1], np.pi / 2)
print("90 deg about z:", q90)
r = quat.quat_log(q90)
print("log ->", r, "(half-angle axis vector, norm =", np.linalg.norm(r), ")")
print("exp(log(q)) ->", quat.quat_exp(r))

print("\n== slerp from identity via quaternion powers ==")
for k in (0.0, 0.25, 0.5, 1.0):
    qk = quat.quat_pow(q90, k)
    print(f"  q^{k:4.2f} = {np.round(qk, 6)}  (angle {np.degrees(2 * np.linalg.norm(quat.quat_log(qk))):5.1f} deg)")

print("\n== the metric ignores the double cover ==")
rng = np.random.default_rng(0)
q = quat.normalize(rng.normal(size=4))
print("d(q,  q) =", quat.quat_distance(q, q))
print("d(q, -q) =", quat.quat_distance(q, -q))
print("d(1, q90) =", quat.quat_distance(quat.identity(), q90), "= pi/4 =", np.pi / 4)

print("\n== angular velocity from quaternion derivatives ==")
w = np.array([0.0, 0.0, 1.7])  # rad/s about z
qt = quat.from_axis_angle([0, 0, 1], 0.3)
qdot = quat.qdot_from_angular_velocity(qt, w)
print("recovered omega:", quat.angular_velocity(qt, qdot))
