"""Classic control tasks with the widely published dynamics and constants.

Observations are the raw physical coordinates (angles in radians, not the
sin/cos encodings some libraries expose); the augmentation wrapper adds
trigonometric and noise channels on top.  Each env documents its constants
inline so tests can pin exact dynamics, exposes a settable `.state`, and
lists `angle_indices` (which base features are angles) and `base_ranges`
(nominal [lo, hi] per feature, used to normalize the partual-noise channel).
"""

import numpy as np

from .base import Continuous, Discrete, Env, EnvSpec


def wrap_angle(theta):
    """Map any angle to (-pi, pi]."""
    return -((-theta + np.pi) % (2.0 * np.pi) - np.pi)


class CartPole(Env):
    """Pole balancing on a cart; binary force, Euler integration.

    Constants: gravity 9.8, cart mass 1.0, pole mass 0.1, half-length 0.5,
    force 10.0 N, step 0.02 s.  Fails when |x| > 2.4 m or |theta| > ~12 deg.
    Reward +1 per step survived.  Episodes cap at 1000 steps.
    """

    GRAVITY = 9.8
    MASS_CART = 1.0
    MASS_POLE = 0.1
    TOTAL_MASS = MASS_CART + MASS_POLE
    HALF_LENGTH = 0.5
    POLEMASS_LENGTH = MASS_POLE * HALF_LENGTH
    FORCE_MAG = 10.0
    TAU = 0.02
    X_LIMIT = 2.4
    THETA_LIMIT = 12.0 * 2.0 * np.pi / 360.0

    angle_indices = (2,)
    base_ranges = ((-2.4, 2.4), (-3.0, 3.0), (-THETA_LIMIT, THETA_LIMIT), (-3.0, 3.0))

    def __init__(self, max_episode_steps=1000):
        super().__init__()
        self.spec = EnvSpec(
            name="cartpole",
            state_dim=4,
            action_space=Discrete(2),
            max_episode_steps=max_episode_steps,
            feature_names=["x", "v", "theta", "omega"],
        )

    def _reset_state(self, rng):
        return rng.uniform(-0.05, 0.05, size=4)

    def _step(self, action):
        x, x_dot, theta, theta_dot = self.state
        force = self.FORCE_MAG if action == 1 else -self.FORCE_MAG
        cos_t, sin_t = np.cos(theta), np.sin(theta)
        temp = (force + self.POLEMASS_LENGTH * theta_dot**2 * sin_t) / self.TOTAL_MASS
        theta_acc = (self.GRAVITY * sin_t - cos_t * temp) / (
            self.HALF_LENGTH * (4.0 / 3.0 - self.MASS_POLE * cos_t**2 / self.TOTAL_MASS)
        )
        x_acc = temp - self.POLEMASS_LENGTH * theta_acc * cos_t / self.TOTAL_MASS
        x += self.TAU * x_dot
        x_dot += self.TAU * x_acc
        theta += self.TAU * theta_dot
        theta_dot += self.TAU * theta_acc
        self.state = np.array([x, x_dot, theta, theta_dot])
        terminated = abs(x) > self.X_LIMIT or abs(theta) > self.THETA_LIMIT
        return 1.0, terminated


class Pendulum(Env):
    """Torque-controlled pendulum swing-up.

    Constants: g 10.0, mass 1.0, length 1.0, step 0.05 s, speed cap 8 rad/s,
    torque cap 2.0.  Semi-implicit update; the angle is re-wrapped to
    (-pi, pi] each step so the observation stays bounded.  Cost is
    theta^2 + 0.1 omega^2 + 0.001 u^2 (reward is its negative); no
    termination, 200-step episodes.
    """

    G = 10.0
    MASS = 1.0
    LENGTH = 1.0
    DT = 0.05
    MAX_SPEED = 8.0
    MAX_TORQUE = 2.0

    angle_indices = (0,)
    base_ranges = ((-np.pi, np.pi), (-MAX_SPEED, MAX_SPEED))

    def __init__(self, max_episode_steps=200):
        super().__init__()
        self.spec = EnvSpec(
            name="pendulum",
            state_dim=2,
            action_space=Continuous(-self.MAX_TORQUE, self.MAX_TORQUE, 1),
            max_episode_steps=max_episode_steps,
            feature_names=["theta", "omega"],
        )

    def _reset_state(self, rng):
        return np.array([rng.uniform(-np.pi, np.pi), rng.uniform(-1.0, 1.0)])

    def _step(self, action):
        theta, omega = self.state
        u = float(action[0])
        cost = wrap_angle(theta) ** 2 + 0.1 * omega**2 + 0.001 * u**2
        omega = omega + (
            3.0 * self.G / (2.0 * self.LENGTH) * np.sin(theta)
            + 3.0 / (self.MASS * self.LENGTH**2) * u
        ) * self.DT
        omega = np.clip(omega, -self.MAX_SPEED, self.MAX_SPEED)
        theta = wrap_angle(theta + omega * self.DT)
        self.state = np.array([theta, omega])
        return -cost, False


class MountainCar(Env):
    """Underpowered car in a valley, discrete push left/none/right.

    Constants: force 0.001, gravity 0.0025, speed cap 0.07, position range
    [-1.2, 0.6], goal 0.5.  Reward -1 per step until the goal; 200-step cap.
    """

    FORCE = 0.001
    GRAVITY = 0.0025
    MAX_SPEED = 0.07
    MIN_POS = -1.2
    MAX_POS = 0.6
    GOAL_POS = 0.5

    angle_indices = ()
    base_ranges = ((MIN_POS, MAX_POS), (-MAX_SPEED, MAX_SPEED))

    def __init__(self, max_episode_steps=200):
        super().__init__()
        self.spec = EnvSpec(
            name="mountaincar",
            state_dim=2,
            action_space=Discrete(3),
            max_episode_steps=max_episode_steps,
            feature_names=["x", "v"],
        )

    def _reset_state(self, rng):
        return np.array([rng.uniform(-0.6, -0.4), 0.0])

    def _step(self, action):
        x, v = self.state
        v += (action - 1) * self.FORCE + np.cos(3.0 * x) * (-self.GRAVITY)
        v = np.clip(v, -self.MAX_SPEED, self.MAX_SPEED)
        x += v
        x = np.clip(x, self.MIN_POS, self.MAX_POS)
        if x == self.MIN_POS and v < 0.0:
            v = 0.0
        self.state = np.array([x, v])
        return -1.0, bool(x >= self.GOAL_POS)


class MountainCarContinuous(Env):
    """Continuous-thrust MountainCar variant.

    Force scale 0.0015 on actions in [-1, 1], same hill profile; reward
    -0.1 u^2 per step plus +100 on reaching the 0.45 goal; 999-step cap.
    """

    POWER = 0.0015
    GRAVITY = 0.0025
    MAX_SPEED = 0.07
    MIN_POS = -1.2
    MAX_POS = 0.6
    GOAL_POS = 0.45

    angle_indices = ()
    base_ranges = ((MIN_POS, MAX_POS), (-MAX_SPEED, MAX_SPEED))

    def __init__(self, max_episode_steps=999):
        super().__init__()
        self.spec = EnvSpec(
            name="mountaincar-cont",
            state_dim=2,
            action_space=Continuous(-1.0, 1.0, 1),
            max_episode_steps=max_episode_steps,
            feature_names=["x", "v"],
        )

    def _reset_state(self, rng):
        return np.array([rng.uniform(-0.6, -0.4), 0.0])

    def _step(self, action):
        x, v = self.state
        u = float(action[0])
        v += u * self.POWER + np.cos(3.0 * x) * (-self.GRAVITY)
        v = np.clip(v, -self.MAX_SPEED, self.MAX_SPEED)
        x += v
        x = np.clip(x, self.MIN_POS, self.MAX_POS)
        if x == self.MIN_POS and v < 0.0:
            v = 0.0
        self.state = np.array([x, v])
        terminated = bool(x >= self.GOAL_POS)
        return (100.0 if terminated else 0.0) - 0.1 * u**2, terminated


class Acrobot(Env):
    """Two-link underactuated swing-up; torque on the second joint only.

    Book dynamics with unit links/masses, COM at 0.5, inertia 1.0, g 9.8,
    one RK4 step of 0.2 s per action from {-1, 0, +1}.  Velocities cap at
    4pi and 9pi; angles wrap to (-pi, pi].  Terminates when the tip rises
    above one link length: -cos(theta1) - cos(theta1 + theta2) > 1.
    Reward -1 per non-terminal step, 0 on the terminating step; 500-step cap.
    """

    L1 = 1.0
    L2 = 1.0
    M1 = 1.0
    M2 = 1.0
    LC1 = 0.5
    LC2 = 0.5
    I1 = 1.0
    I2 = 1.0
    G = 9.8
    DT = 0.2
    MAX_VEL_1 = 4.0 * np.pi
    MAX_VEL_2 = 9.0 * np.pi
    TORQUES = (-1.0, 0.0, 1.0)

    angle_indices = (0, 1)
    base_ranges = (
        (-np.pi, np.pi),
        (-np.pi, np.pi),
        (-MAX_VEL_1, MAX_VEL_1),
        (-MAX_VEL_2, MAX_VEL_2),
    )

    def __init__(self, max_episode_steps=500):
        super().__init__()
        self.spec = EnvSpec(
            name="acrobot",
            state_dim=4,
            action_space=Discrete(3),
            max_episode_steps=max_episode_steps,
            feature_names=["theta1", "theta2", "omega1", "omega2"],
        )

    def _reset_state(self, rng):
        return rng.uniform(-0.1, 0.1, size=4)

    def _dynamics(self, s, torque):
        theta1, theta2, dtheta1, dtheta2 = s
        m1, m2, l1 = self.M1, self.M2, self.L1
        lc1, lc2 = self.LC1, self.LC2
        i1, i2, g = self.I1, self.I2, self.G
        d1 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * np.cos(theta2)) + i1 + i2
        d2 = m2 * (lc2**2 + l1 * lc2 * np.cos(theta2)) + i2
        phi2 = m2 * lc2 * g * np.cos(theta1 + theta2 - np.pi / 2.0)
        phi1 = (
            -m2 * l1 * lc2 * dtheta2**2 * np.sin(theta2)
            - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * np.sin(theta2)
            + (m1 * lc1 + m2 * l1) * g * np.cos(theta1 - np.pi / 2.0)
            + phi2
        )
        ddtheta2 = (
            torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1**2 * np.sin(theta2) - phi2
        ) / (m2 * lc2**2 + i2 - d2**2 / d1)
        ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
        return np.array([dtheta1, dtheta2, ddtheta1, ddtheta2])

    def _step(self, action):
        torque = self.TORQUES[action]
        s = np.asarray(self.state, dtype=np.float64)
        dt = self.DT
        k1 = self._dynamics(s, torque)
        k2 = self._dynamics(s + dt / 2.0 * k1, torque)
        k3 = self._dynamics(s + dt / 2.0 * k2, torque)
        k4 = self._dynamics(s + dt * k3, torque)
        s = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        theta1 = wrap_angle(s[0])
        theta2 = wrap_angle(s[1])
        dtheta1 = np.clip(s[2], -self.MAX_VEL_1, self.MAX_VEL_1)
        dtheta2 = np.clip(s[3], -self.MAX_VEL_2, self.MAX_VEL_2)
        self.state = np.array([theta1, theta2, dtheta1, dtheta2])
        terminated = bool(-np.cos(theta1) - np.cos(theta2 + theta1) > 1.0)
        return (0.0 if terminated else -1.0), terminated
