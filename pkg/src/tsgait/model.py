"""Floating-base kinematic tree: model description, kinematics and dynamics.

Conventions used throughout the package:

* Bodies are stored in topological order; body 0 carries the floating-base
  joint, every other joint is a revolute joint whose parent appears earlier.
* Base orientation is a unit quaternion (w, x, y, z) with w >= 0.
* The generalized velocity vector has layout
  ``u = [base linear velocity (world, 3), base angular velocity (body, 3),
  joint rates (nj,)]`` so ``nv = 6 + nj``.
* Flat position coordinates are ``qpos = [p_world (3), quat (4), angles (nj,)]``.
* Task-space foot quantities are positions of the foot sole frame relative to
  the base, expressed in the base frame; their Jacobians therefore have
  exactly zero base columns.

Dynamics are computed with the composite-rigid-body algorithm (mass matrix)
and the recursive Newton-Euler algorithm (inverse dynamics / bias forces),
both written for the mixed world-linear / body-angular base convention above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

FLOATING = "floating"
REVOLUTE = "revolute"

LEFT = 0
RIGHT = 1
FOOT_NAMES = ("left", "right")


class ModelError(ValueError):
    """Raised for model-file parse failures and invariant violations."""


# ---------------------------------------------------------------------------
# Rotation helpers
# ---------------------------------------------------------------------------

def skew(v):
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def quat_to_mat(q):
    """Rotation matrix (world <- body) from a unit quaternion (w,x,y,z)."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def mat_to_quat(r):
    """Unit quaternion (w,x,y,z) with w >= 0 from a rotation matrix."""
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s, (r[2, 1] - r[1, 2]) / s,
                      (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s])
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array([(r[2, 1] - r[1, 2]) / s, 0.25 * s,
                      (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s])
    elif r[1, 1] > r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array([(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s,
                      0.25 * s, (r[1, 2] + r[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array([(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s,
                      (r[1, 2] + r[2, 1]) / s, 0.25 * s])
    q /= np.linalg.norm(q)
    return canonical_quat(q)


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_from_rotvec(phi):
    """Quaternion of the rotation by vector ``phi`` (axis * angle)."""
    angle = np.linalg.norm(phi)
    if angle < 1e-12:
        q = np.array([1.0, 0.5 * phi[0], 0.5 * phi[1], 0.5 * phi[2]])
        return q / np.linalg.norm(q)
    axis = phi / angle
    half = 0.5 * angle
    s = math.sin(half)
    return np.array([math.cos(half), s * axis[0], s * axis[1], s * axis[2]])


def canonical_quat(q):
    q = q if q[0] >= 0.0 else -q
    return q


def axis_angle_mat(axis, angle):
    """Rodrigues rotation about a unit axis."""
    c, s = math.cos(angle), math.sin(angle)
    k = skew(axis)
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def rpy_mat(roll, pitch, yaw):
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass
class RigidBody:
    """One link: mass, COM offset (body frame) and rotational inertia about COM."""

    name: str
    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def validate(self):
        if not self.mass > 0.0:
            raise ModelError(f"body '{self.name}': mass must be > 0, got {self.mass}")
        if not np.allclose(self.inertia, self.inertia.T, atol=1e-12):
            raise ModelError(f"body '{self.name}': inertia must be symmetric")
        eig = np.linalg.eigvalsh(self.inertia)
        if eig[0] <= 0.0:
            raise ModelError(
                f"body '{self.name}': inertia must be positive definite "
                f"(eigenvalues {eig})")
        # principal-moment triangle inequality, small tolerance for round-off
        if eig[0] + eig[1] < eig[2] * (1.0 - 1e-9):
            raise ModelError(
                f"body '{self.name}': inertia violates the triangle inequality "
                f"(principal moments {eig})")


@dataclass
class JointSpec:
    """Joint moving one body: floating base at the root, revolute elsewhere."""

    kind: str
    parent: int
    axis: np.ndarray          # unit axis in the child body frame (revolute)
    origin_rot: np.ndarray    # fixed rotation parent <- joint frame
    origin_pos: np.ndarray    # joint origin in the parent frame

    def validate(self, name):
        if self.kind not in (FLOATING, REVOLUTE):
            raise ModelError(f"joint of '{name}': unknown kind '{self.kind}'")
        if self.kind == REVOLUTE:
            n = np.linalg.norm(self.axis)
            if abs(n - 1.0) > 1e-12:
                raise ModelError(
                    f"joint of '{name}': axis must have unit norm, got |axis|={n!r}")


@dataclass
class RobotModel:
    """Validated kinematic tree.  Treat as immutable after load."""

    name: str
    bodies: list
    joints: list
    actuated: list            # joint indices (into bodies/joints) that carry motors
    foot_body: list           # [left, right] body indices, empty for fixtures
    foot_offset: np.ndarray   # (2,3) sole frame origin in the foot body frame
    contact_x: np.ndarray     # (2,) toe/heel x offsets from the sole frame
    torque_limit: np.ndarray  # (n_actuated,)
    joint_damping: np.ndarray = None  # (nj,) viscous drivetrain losses, plant side
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        if self.joint_damping is None:
            self.joint_damping = np.zeros(max(len(self.bodies) - 1, 0))

    @property
    def nb(self):
        return len(self.bodies)

    @property
    def nj(self):
        return self.nb - 1

    @property
    def nv(self):
        return 6 + self.nj

    @property
    def nu(self):
        return len(self.actuated)

    def qvel_index(self, joint):
        """Generalized-velocity index of revolute joint ``joint`` (body index)."""
        return 5 + joint

    @property
    def actuated_qvel(self):
        return np.array([self.qvel_index(j) for j in self.actuated], dtype=int)

    @property
    def actuated_angle_index(self):
        """Indices of the actuated joints within the joint_angles vector."""
        return np.array([j - 1 for j in self.actuated], dtype=int)

    def validate(self):
        if not self.bodies:
            raise ModelError("model has no bodies")
        if self.joints[0].kind != FLOATING:
            raise ModelError("the root joint must be the floating base")
        for i, joint in enumerate(self.joints):
            if i > 0 and joint.kind == FLOATING:
                raise ModelError(
                    f"second floating joint at body '{self.bodies[i].name}': "
                    "exactly one floating-base joint is allowed, at the tree root")
            if i > 0 and not (0 <= joint.parent < i):
                raise ModelError(
                    f"body '{self.bodies[i].name}': parent index {joint.parent} "
                    "breaks topological order")
            joint.validate(self.bodies[i].name)
        for body in self.bodies:
            body.validate()
        if len(set(self.actuated)) != len(self.actuated):
            raise ModelError("duplicate joint in actuated set")

    def validate_biped(self):
        """Extra layout checks for models driven by the walking controller."""
        if len(self.foot_body) != 2:
            raise ModelError("biped model must declare left and right foot frames")
        if self.nu != 10:
            raise ModelError(
                f"biped model must have exactly 10 actuated joints, got {self.nu}")
        for side, foot in zip(FOOT_NAMES, self.foot_body):
            chain = self.chain_to(foot)
            if len(chain) != 5:
                raise ModelError(
                    f"{side} leg must contain 5 revolute joints, got {len(chain)}")

    def chain_to(self, body):
        """Joint indices (body indices, root excluded) from base to ``body``."""
        chain = []
        i = body
        while i != 0:
            chain.append(i)
            i = self.joints[i].parent
        return chain[::-1]


@dataclass
class GeneralizedState:
    """Full robot state; see module docstring for frame conventions."""

    base_position: np.ndarray
    base_orientation: np.ndarray   # quaternion (w,x,y,z), unit, w >= 0
    joint_angles: np.ndarray
    base_lin_vel: np.ndarray       # world frame
    base_ang_vel: np.ndarray       # body frame
    joint_rates: np.ndarray

    def validate(self):
        n = np.linalg.norm(self.base_orientation)
        if abs(n - 1.0) > 1e-9:
            raise ModelError(f"state quaternion norm {n!r} not within 1e-9 of 1")
        if self.base_orientation[0] < 0.0:
            raise ModelError("state quaternion must be canonical (w >= 0)")

    @property
    def qvel(self):
        return np.concatenate([self.base_lin_vel, self.base_ang_vel, self.joint_rates])

    @property
    def qpos(self):
        return np.concatenate([self.base_position, self.base_orientation,
                               self.joint_angles])

    @classmethod
    def from_flat(cls, qpos, qvel, nj):
        return cls(
            base_position=np.asarray(qpos[0:3], dtype=float).copy(),
            base_orientation=np.asarray(qpos[3:7], dtype=float).copy(),
            joint_angles=np.asarray(qpos[7:7 + nj], dtype=float).copy(),
            base_lin_vel=np.asarray(qvel[0:3], dtype=float).copy(),
            base_ang_vel=np.asarray(qvel[3:6], dtype=float).copy(),
            joint_rates=np.asarray(qvel[6:6 + nj], dtype=float).copy(),
        )


def default_state(model, base_height=1.0, joint_angles=None):
    nj = model.nj
    return GeneralizedState(
        base_position=np.array([0.0, 0.0, base_height]),
        base_orientation=np.array([1.0, 0.0, 0.0, 0.0]),
        joint_angles=np.zeros(nj) if joint_angles is None else np.asarray(
            joint_angles, dtype=float).copy(),
        base_lin_vel=np.zeros(3),
        base_ang_vel=np.zeros(3),
        joint_rates=np.zeros(nj),
    )


# ---------------------------------------------------------------------------
# Model file parsing
# ---------------------------------------------------------------------------

def _parse_floats(name, key, tokens, n):
    if len(tokens) != n:
        raise ModelError(f"'{key}' of '{name}' expects {n} values, got {len(tokens)}")
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ModelError(f"'{key}' of '{name}': {exc}") from None


def _inertia_from(values, name):
    if len(values) == 3:
        return np.diag(values)
    if len(values) == 6:
        xx, yy, zz, xy, xz, yz = values
        return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])
    raise ModelError(f"'inertia' of '{name}' expects 3 or 6 values")


def loads_model(text, name="<string>", require_biped=True):
    """Parse a model description document.  See docs for the schema."""
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ModelError(f"{name}: empty model description")

    header = {}
    blocks = []       # ("body"|"foot", dict)
    current = None
    for line in lines:
        tokens = line.split()
        key, rest = tokens[0], tokens[1:]
        if key in ("body", "foot"):
            if len(rest) != 1:
                raise ModelError(f"{name}: '{key}' expects a name")
            current = {"_kind": key, "name": rest[0]}
            blocks.append(current)
        elif current is None:
            header[key] = rest
        else:
            current[key] = rest

    if header.get("format_version", ["1"])[0] != "1":
        raise ModelError(f"{name}: unsupported format_version "
                         f"{header.get('format_version')}")
    model_name = header.get("name", [name])[0]
    gravity = (_parse_floats(model_name, "gravity", header["gravity"], 3)
               if "gravity" in header else np.array([0.0, 0.0, -9.81]))

    bodies, joints, actuated, limits = [], [], [], []
    dampings = []
    body_index = {}
    foot_decls = {}
    for block in blocks:
        if block["_kind"] == "foot":
            side = block["name"]
            if side not in FOOT_NAMES:
                raise ModelError(f"{model_name}: foot side must be left/right, "
                                 f"got '{side}'")
            foot_decls[side] = block
            continue
        bname = block["name"]
        if bname in body_index:
            raise ModelError(f"{model_name}: duplicate body '{bname}'")
        kind = block.get("joint", [None])[0]
        if kind is None:
            raise ModelError(f"{model_name}: body '{bname}' missing 'joint'")
        if kind == FLOATING:
            parent = -1
            if "parent" in block:
                raise ModelError(f"{model_name}: floating body '{bname}' "
                                 "cannot have a parent")
        else:
            pname = block.get("parent", [None])[0]
            if pname is None or pname not in body_index:
                raise ModelError(f"{model_name}: body '{bname}' has unknown parent "
                                 f"'{pname}'")
            parent = body_index[pname]
        axis = (_parse_floats(bname, "axis", block["axis"], 3)
                if "axis" in block else np.array([0.0, 0.0, 1.0]))
        origin = (_parse_floats(bname, "origin", block["origin"], 3)
                  if "origin" in block else np.zeros(3))
        rot = np.eye(3)
        if "origin_rpy" in block:
            r, p, y = _parse_floats(bname, "origin_rpy", block["origin_rpy"], 3)
            rot = rpy_mat(r, p, y)
        if "mass" not in block:
            raise ModelError(f"{model_name}: body '{bname}' missing 'mass'")
        mass = _parse_floats(bname, "mass", block["mass"], 1)[0]
        com = (_parse_floats(bname, "com", block["com"], 3)
               if "com" in block else np.zeros(3))
        if "inertia" not in block:
            raise ModelError(f"{model_name}: body '{bname}' missing 'inertia'")
        try:
            inertia = _inertia_from([float(t) for t in block["inertia"]], bname)
        except ValueError as exc:
            raise ModelError(f"'inertia' of '{bname}': {exc}") from None

        body_index[bname] = len(bodies)
        bodies.append(RigidBody(name=bname, mass=mass, com=com, inertia=inertia))
        joints.append(JointSpec(kind=kind, parent=parent, axis=axis,
                                origin_rot=rot, origin_pos=origin))
        if kind == REVOLUTE:
            dampings.append(float(block.get("damping", ["0"])[0]))
        if "actuated" in block:
            if kind != REVOLUTE:
                raise ModelError(f"{model_name}: only revolute joints can be "
                                 f"actuated ('{bname}')")
            actuated.append(body_index[bname])
            limits.append(float(block.get("torque_limit", ["1e9"])[0]))

    foot_body, foot_offset, contact_x = [], [], [0.09, -0.09]
    for side in FOOT_NAMES:
        if side not in foot_decls:
            continue
        decl = foot_decls[side]
        bname = decl.get("attach", [None])[0]
        if bname not in body_index:
            raise ModelError(f"{model_name}: foot '{side}' references unknown body "
                             f"'{bname}'")
        foot_body.append(body_index[bname])
        foot_offset.append(_parse_floats(side, "offset",
                                         decl.get("offset", ["0", "0", "0"]), 3))
        if "toe" in decl:
            contact_x[0] = float(decl["toe"][0])
        if "heel" in decl:
            contact_x[1] = float(decl["heel"][0])

    model = RobotModel(
        name=model_name,
        bodies=bodies,
        joints=joints,
        actuated=actuated,
        foot_body=foot_body,
        foot_offset=(np.array(foot_offset) if foot_offset else np.zeros((0, 3))),
        contact_x=np.array(contact_x),
        torque_limit=np.array(limits),
        joint_damping=np.array(dampings),
        gravity=gravity,
    )
    model.validate()
    if require_biped:
        model.validate_biped()
    return model


def load_model(path, require_biped=True):
    """Load and validate a model description file."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_model(fh.read(), name=str(path), require_biped=require_biped)


def load_builtin(name="cassie_lite"):
    """Load a model shipped with the package."""
    text = resources.files("tsgait.data").joinpath(f"{name}.model").read_text()
    return loads_model(text, name=name, require_biped=True)


# ---------------------------------------------------------------------------
# Forward kinematics and Jacobians
# ---------------------------------------------------------------------------

@dataclass
class FkResult:
    rot: np.ndarray        # (nb,3,3) world <- body
    pos: np.ndarray        # (nb,3) body origin in world
    foot_world: np.ndarray # (2,3) sole frame origins, world
    foot_rel: np.ndarray   # (2,3) sole frame origins relative to base, base frame
    foot_rot: np.ndarray   # (2,3,3) world <- sole frame


def forward_kinematics(model, state) -> FkResult:
    """Compose the transform chain; returns world poses and relative foot positions."""
    nb = model.nb
    rot = np.empty((nb, 3, 3))
    pos = np.empty((nb, 3))
    rot[0] = quat_to_mat(state.base_orientation)
    pos[0] = state.base_position
    for i in range(1, nb):
        joint = model.joints[i]
        p = joint.parent
        local = joint.origin_rot @ axis_angle_mat(joint.axis,
                                                  state.joint_angles[i - 1])
        rot[i] = rot[p] @ local
        pos[i] = pos[p] + rot[p] @ joint.origin_pos

    nfeet = len(model.foot_body)
    foot_world = np.zeros((nfeet, 3))
    foot_rel = np.zeros((nfeet, 3))
    foot_rot = np.zeros((nfeet, 3, 3))
    for f in range(nfeet):
        b = model.foot_body[f]
        foot_rot[f] = rot[b]
        foot_world[f] = pos[b] + rot[b] @ model.foot_offset[f]
        foot_rel[f] = rot[0].T @ (foot_world[f] - pos[0])
    return FkResult(rot=rot, pos=pos, foot_world=foot_world, foot_rel=foot_rel,
                    foot_rot=foot_rot)


def foot_jacobian(model, state, foot, fk=None):
    """Translational Jacobian of the sole frame relative to the base (base frame).

    Base columns are exactly zero: the relative position depends only on the
    joint angles.  ``d/dt foot_rel = J @ qvel``.
    """
    if fk is None:
        fk = forward_kinematics(model, state)
    jac = np.zeros((3, model.nv))
    base_rot_t = fk.rot[0].T
    b = model.foot_body[foot]
    target = fk.foot_world[foot]
    for i in model.chain_to(b):
        axis_w = fk.rot[i] @ model.joints[i].axis
        col = np.cross(axis_w, target - fk.pos[i])
        jac[:, model.qvel_index(i)] = base_rot_t @ col
    return jac


def point_jacobian_world(model, fk, body, point_world):
    """World-frame translational Jacobian of a point attached to ``body``."""
    nv = 6 + len(fk.pos) - 1
    jac = np.zeros((3, nv))
    jac[:, 0:3] = np.eye(3)
    r = point_world - fk.pos[0]
    jac[:, 3:6] = -skew(r) @ fk.rot[0]
    i = body
    while i != 0:
        axis_w = fk.rot[i] @ model.joints[i].axis
        jac[:, 5 + i] = np.cross(axis_w, point_world - fk.pos[i])
        i = model.joints[i].parent
    return jac


# ---------------------------------------------------------------------------
# Dynamics: spatial-vector helpers ([angular; linear] ordering, body frames)
# ---------------------------------------------------------------------------

def _spatial_inertia(body):
    m = body.mass
    c = skew(body.com)
    top_left = body.inertia + m * (c @ c.T)
    out = np.zeros((6, 6))
    out[0:3, 0:3] = top_left
    out[0:3, 3:6] = m * c
    out[3:6, 0:3] = m * c.T
    out[3:6, 3:6] = m * np.eye(3)
    return out


def _joint_transform(model, state, i):
    """(rotation parent <- child, child origin in parent frame) for joint i."""
    joint = model.joints[i]
    rot = joint.origin_rot @ axis_angle_mat(joint.axis, state.joint_angles[i - 1])
    return rot, joint.origin_pos


def _motion_to_child(rot_pc, pos_pc, v):
    """Transform a spatial motion vector from the parent frame to the child."""
    w = rot_pc.T @ v[0:3]
    lin = rot_pc.T @ (v[3:6] + np.cross(v[0:3], pos_pc))
    return np.concatenate([w, lin])


def _force_to_parent(rot_pc, pos_pc, f):
    """Transform a spatial force vector from the child frame to the parent."""
    n = rot_pc @ f[0:3]
    lin = rot_pc @ f[3:6]
    return np.concatenate([n + np.cross(pos_pc, lin), lin])


def _cross_motion(v, m):
    w, lin = v[0:3], v[3:6]
    return np.concatenate([np.cross(w, m[0:3]),
                           np.cross(w, m[3:6]) + np.cross(lin, m[0:3])])


def _cross_force(v, f):
    w, lin = v[0:3], v[3:6]
    return np.concatenate([np.cross(w, f[0:3]) + np.cross(lin, f[3:6]),
                           np.cross(w, f[3:6])])


def _base_velocity(state, base_rot):
    """Base spatial velocity in the base frame from the mixed-state convention."""
    return np.concatenate([state.base_ang_vel, base_rot.T @ state.base_lin_vel])


def inverse_dynamics(model, state, qacc):
    """Generalized forces ``M(q) qacc + C(q,u) u + G(q)`` via recursive Newton-Euler."""
    nb, nv = model.nb, model.nv
    qacc = np.asarray(qacc, dtype=float)
    base_rot = quat_to_mat(state.base_orientation)

    v = np.zeros((nb, 6))
    a = np.zeros((nb, 6))
    f = np.zeros((nb, 6))
    transforms = [None] * nb

    v[0] = _base_velocity(state, base_rot)
    # Base acceleration: d/dt of [w_body; R^T v_world] with the gravity offset
    # folded in (accelerating the base by -g accounts for all weight forces).
    a[0, 0:3] = qacc[3:6]
    a[0, 3:6] = (base_rot.T @ (qacc[0:3] - model.gravity)
                 - np.cross(state.base_ang_vel, v[0, 3:6]))

    for i in range(1, nb):
        p = model.joints[i].parent
        rot_pc, pos_pc = _joint_transform(model, state, i)
        transforms[i] = (rot_pc, pos_pc)
        axis = model.joints[i].axis
        qd = state.joint_rates[i - 1]
        qdd = qacc[model.qvel_index(i)]
        vj = np.concatenate([axis * qd, np.zeros(3)])
        v[i] = _motion_to_child(rot_pc, pos_pc, v[p]) + vj
        a[i] = (_motion_to_child(rot_pc, pos_pc, a[p])
                + np.concatenate([axis * qdd, np.zeros(3)])
                + _cross_motion(v[i], vj))

    for i in range(nb):
        inertia = _spatial_inertia(model.bodies[i])
        f[i] = inertia @ a[i] + _cross_force(v[i], inertia @ v[i])

    tau = np.zeros(nv)
    for i in range(nb - 1, 0, -1):
        tau[model.qvel_index(i)] = model.joints[i].axis @ f[i, 0:3]
        rot_pc, pos_pc = transforms[i]
        f[model.joints[i].parent] += _force_to_parent(rot_pc, pos_pc, f[i])

    tau[0:3] = base_rot @ f[0, 3:6]   # world-frame force conjugate to v_world
    tau[3:6] = f[0, 0:3]              # body-frame moment conjugate to w_body
    return tau


def bias_forces(model, state):
    """``C(q,u) u + G(q)``: inverse dynamics at zero generalized acceleration."""
    return inverse_dynamics(model, state, np.zeros(model.nv))


def gravity_vector(model, state):
    """``G(q)``: bias forces evaluated at zero velocity."""
    frozen = GeneralizedState(
        base_position=state.base_position,
        base_orientation=state.base_orientation,
        joint_angles=state.joint_angles,
        base_lin_vel=np.zeros(3),
        base_ang_vel=np.zeros(3),
        joint_rates=np.zeros(model.nj),
    )
    return inverse_dynamics(model, frozen, np.zeros(model.nv))


def mass_matrix(model, state):
    """Joint-space inertia matrix via the composite-rigid-body algorithm."""
    nb, nv = model.nb, model.nv
    base_rot = quat_to_mat(state.base_orientation)

    transforms = [None] * nb
    composite = np.zeros((nb, 6, 6))
    for i in range(nb):
        composite[i] = _spatial_inertia(model.bodies[i])
        if i > 0:
            transforms[i] = _joint_transform(model, state, i)

    mat = np.zeros((nv, nv))
    for i in range(nb - 1, 0, -1):
        rot_pc, pos_pc = transforms[i]
        # spatial inertia of the composite, pushed into the parent frame
        x_mot = np.zeros((6, 6))
        x_mot[0:3, 0:3] = rot_pc.T
        x_mot[3:6, 3:6] = rot_pc.T
        x_mot[3:6, 0:3] = -rot_pc.T @ skew(pos_pc)
        composite[model.joints[i].parent] += x_mot.T @ composite[i] @ x_mot

        axis = model.joints[i].axis
        fvec = composite[i] @ np.concatenate([axis, np.zeros(3)])
        mat[model.qvel_index(i), model.qvel_index(i)] = axis @ fvec[0:3]
        j = i
        while model.joints[j].parent != 0:
            rot, pos = transforms[j]
            fvec = _force_to_parent(rot, pos, fvec)
            j = model.joints[j].parent
            mat[model.qvel_index(i), model.qvel_index(j)] = (
                model.joints[j].axis @ fvec[0:3])
            mat[model.qvel_index(j), model.qvel_index(i)] = mat[
                model.qvel_index(i), model.qvel_index(j)]
        rot, pos = transforms[j]
        fvec = _force_to_parent(rot, pos, fvec)   # now in the base frame
        col_lin = base_rot @ fvec[3:6]
        mat[0:3, model.qvel_index(i)] = col_lin
        mat[model.qvel_index(i), 0:3] = col_lin
        mat[3:6, model.qvel_index(i)] = fvec[0:3]
        mat[model.qvel_index(i), 3:6] = fvec[0:3]

    # base block: map (v_world, w_body) -> base spatial velocity, then project
    amap = np.zeros((6, 6))
    amap[0:3, 3:6] = np.eye(3)
    amap[3:6, 0:3] = base_rot.T
    mat[0:6, 0:6] = amap.T @ composite[0] @ amap
    return mat


def kinetic_energy(model, state):
    u = state.qvel
    return 0.5 * u @ mass_matrix(model, state) @ u


def potential_energy(model, state):
    fk = forward_kinematics(model, state)
    total = 0.0
    for i, body in enumerate(model.bodies):
        com_world = fk.pos[i] + fk.rot[i] @ body.com
        total -= body.mass * (model.gravity @ com_world)
    return total


def total_mass(model):
    return sum(b.mass for b in model.bodies)
