# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled control-window kernel.

Hand-rolled rigid-body dynamics (FK, velocity propagation, RNEA bias and
gravity passes, CRBA with Cholesky solves), the task-space/joint-PD
controllers, penalty contact and the semi-implicit integrator, fused into a
single 2 kHz loop per policy window.  Semantics mirror tsgait._pywindow; the
backend-equivalence tests hold the two implementations together.
"""

import numpy as np

from libc.math cimport M_PI, acos, cos, fabs, isfinite, sin, sqrt

DEF MAXB = 16          # bodies
DEF MAXV = 21          # 6 + (MAXB - 1) generalized velocities
DEF MAXU = 16          # actuated joints
DEF MAXQ = 23          # 7 + (MAXB - 1) position coordinates

TASK_MODE = 0
JOINT_MODE = 1


cdef inline void cross3(const double* a, const double* b, double* out) nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline double dot3(const double* a, const double* b) nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline void matvec3(const double* m, const double* v, double* out) nogil:
    out[0] = m[0] * v[0] + m[1] * v[1] + m[2] * v[2]
    out[1] = m[3] * v[0] + m[4] * v[1] + m[5] * v[2]
    out[2] = m[6] * v[0] + m[7] * v[1] + m[8] * v[2]


cdef inline void matTvec3(const double* m, const double* v, double* out) nogil:
    out[0] = m[0] * v[0] + m[3] * v[1] + m[6] * v[2]
    out[1] = m[1] * v[0] + m[4] * v[1] + m[7] * v[2]
    out[2] = m[2] * v[0] + m[5] * v[1] + m[8] * v[2]


cdef inline void matmul3(const double* a, const double* b, double* out) nogil:
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = 0.0
            for k in range(3):
                out[3 * i + j] += a[3 * i + k] * b[3 * k + j]


cdef inline void axis_angle(const double* axis, double angle,
                            double* out) nogil:
    cdef double c = cos(angle), s = sin(angle), t = 1.0 - c
    cdef double x = axis[0], y = axis[1], z = axis[2]
    out[0] = t * x * x + c
    out[1] = t * x * y - s * z
    out[2] = t * x * z + s * y
    out[3] = t * x * y + s * z
    out[4] = t * y * y + c
    out[5] = t * y * z - s * x
    out[6] = t * x * z - s * y
    out[7] = t * y * z + s * x
    out[8] = t * z * z + c


cdef inline void quat_to_mat_c(const double* q, double* r) nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    r[0] = 1 - 2 * (y * y + z * z)
    r[1] = 2 * (x * y - w * z)
    r[2] = 2 * (x * z + w * y)
    r[3] = 2 * (x * y + w * z)
    r[4] = 1 - 2 * (x * x + z * z)
    r[5] = 2 * (y * z - w * x)
    r[6] = 2 * (x * z - w * y)
    r[7] = 2 * (y * z + w * x)
    r[8] = 1 - 2 * (x * x + y * y)


cdef inline void quat_mul_c(const double* a, const double* b,
                            double* out) nogil:
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]


cdef inline void quat_from_rotvec_c(const double* phi, double* q) nogil:
    cdef double angle = sqrt(dot3(phi, phi))
    cdef double half, s, n
    if angle < 1e-12:
        q[0] = 1.0
        q[1] = 0.5 * phi[0]
        q[2] = 0.5 * phi[1]
        q[3] = 0.5 * phi[2]
        n = sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
        q[0] /= n
        q[1] /= n
        q[2] /= n
        q[3] /= n
        return
    half = 0.5 * angle
    s = sin(half) / angle
    q[0] = cos(half)
    q[1] = s * phi[0]
    q[2] = s * phi[1]
    q[3] = s * phi[2]


cdef inline void motion_to_child(const double* rot, const double* pos,
                                 const double* vin, double* vout) nogil:
    cdef double tmp[3]
    cdef double lin[3]
    matTvec3(rot, vin, vout)
    cross3(vin, pos, tmp)
    lin[0] = vin[3] + tmp[0]
    lin[1] = vin[4] + tmp[1]
    lin[2] = vin[5] + tmp[2]
    matTvec3(rot, lin, vout + 3)


cdef inline void force_to_parent(const double* rot, const double* pos,
                                 const double* fin, double* fout) nogil:
    cdef double n[3]
    cdef double f[3]
    cdef double pxf[3]
    matvec3(rot, fin, n)
    matvec3(rot, fin + 3, f)
    cross3(pos, f, pxf)
    fout[0] = n[0] + pxf[0]
    fout[1] = n[1] + pxf[1]
    fout[2] = n[2] + pxf[2]
    fout[3] = f[0]
    fout[4] = f[1]
    fout[5] = f[2]


cdef inline void cross_motion(const double* v, const double* m,
                              double* out) nogil:
    cdef double tmp[3]
    cross3(v, m, out)
    cross3(v, m + 3, out + 3)
    cross3(v + 3, m, tmp)
    out[3] += tmp[0]
    out[4] += tmp[1]
    out[5] += tmp[2]


cdef inline void cross_force(const double* v, const double* f,
                             double* out) nogil:
    cdef double tmp[3]
    cross3(v, f, out)
    cross3(v + 3, f + 3, tmp)
    out[0] += tmp[0]
    out[1] += tmp[1]
    out[2] += tmp[2]
    cross3(v, f + 3, out + 3)


cdef inline void sym3_eigenvalues(const double* a, double* eig) nogil:
    cdef double p1 = a[1] * a[1] + a[2] * a[2] + a[5] * a[5]
    cdef double q, p2, p, r, phi, t
    cdef double b[9]
    cdef int i
    if p1 < 1e-300:
        eig[0] = a[0]
        eig[1] = a[4]
        eig[2] = a[8]
        if eig[0] > eig[1]:
            t = eig[0]; eig[0] = eig[1]; eig[1] = t
        if eig[1] > eig[2]:
            t = eig[1]; eig[1] = eig[2]; eig[2] = t
        if eig[0] > eig[1]:
            t = eig[0]; eig[0] = eig[1]; eig[1] = t
        return
    q = (a[0] + a[4] + a[8]) / 3.0
    p2 = ((a[0] - q) * (a[0] - q) + (a[4] - q) * (a[4] - q)
          + (a[8] - q) * (a[8] - q) + 2.0 * p1)
    p = sqrt(p2 / 6.0)
    for i in range(9):
        b[i] = a[i] / p
    b[0] -= q / p
    b[4] -= q / p
    b[8] -= q / p
    r = 0.5 * (b[0] * (b[4] * b[8] - b[5] * b[7])
               - b[1] * (b[3] * b[8] - b[5] * b[6])
               + b[2] * (b[3] * b[7] - b[4] * b[6]))
    if r < -1.0:
        r = -1.0
    if r > 1.0:
        r = 1.0
    phi = acos(r) / 3.0
    eig[2] = q + 2.0 * p * cos(phi)
    eig[0] = q + 2.0 * p * cos(phi + 2.0 * M_PI / 3.0)
    eig[1] = 3.0 * q - eig[2] - eig[0]


cdef inline int solve3(const double* a, const double* rhs, double* x) nogil:
    cdef double det = (a[0] * (a[4] * a[8] - a[5] * a[7])
                       - a[1] * (a[3] * a[8] - a[5] * a[6])
                       + a[2] * (a[3] * a[7] - a[4] * a[6]))
    cdef double inv[9]
    if fabs(det) < 1e-300:
        return 0
    inv[0] = (a[4] * a[8] - a[5] * a[7]) / det
    inv[1] = (a[2] * a[7] - a[1] * a[8]) / det
    inv[2] = (a[1] * a[5] - a[2] * a[4]) / det
    inv[3] = (a[5] * a[6] - a[3] * a[8]) / det
    inv[4] = (a[0] * a[8] - a[2] * a[6]) / det
    inv[5] = (a[2] * a[3] - a[0] * a[5]) / det
    inv[6] = (a[3] * a[7] - a[4] * a[6]) / det
    inv[7] = (a[1] * a[6] - a[0] * a[7]) / det
    inv[8] = (a[0] * a[4] - a[1] * a[3]) / det
    matvec3(inv, rhs, x)
    return 1


cdef class FastCore:
    """Model constants packed into C arrays plus the fused window loop."""

    cdef int nb, nv, nu
    cdef int parent[MAXB]
    cdef double axis[MAXB][3]
    cdef double origin_rot[MAXB][9]
    cdef double origin_pos[MAXB][3]
    cdef double inertia_sp[MAXB][36]
    cdef int act_qvel[MAXU]
    cdef int act_angle[MAXU]
    cdef int act_of[MAXV]
    cdef double torque_limit[MAXU]
    cdef double joint_damping[MAXB]
    cdef int foot_body[2]
    cdef double foot_offset[2][3]
    cdef double contact_x[2]
    cdef double gravity[3]
    cdef double kp_swing[3]
    cdef double kd_swing[3]
    cdef double kp_stance[3]
    cdef double kd_stance[3]
    cdef double kp_joint[2]
    cdef double kd_joint[2]
    cdef double baseline_kp[MAXU]
    cdef double baseline_kd[MAXU]
    cdef double ground, stiffness, damping, friction, tan_damping
    cdef double cond_limit, reg_eps
    cdef int orient_idx[4]

    def __init__(self, parent, axis, origin_rot, origin_pos, inertia_sp,
                 act_qvel, act_angle, torque_limit, foot_body, foot_offset,
                 contact_x, gravity, kp_swing, kd_swing, kp_stance, kd_stance,
                 kp_joint, kd_joint, baseline_kp, baseline_kd,
                 ground, stiffness, damping, friction, tan_damping,
                 cond_limit, reg_eps, joint_damping):
        cdef int i, j
        self.nb = len(parent)
        if self.nb > MAXB:
            raise ValueError(f"model too large for the compiled core "
                             f"({self.nb} > {MAXB} bodies)")
        self.nv = 6 + self.nb - 1
        self.nu = len(act_qvel)
        if self.nu > MAXU:
            raise ValueError("too many actuated joints for the compiled core")
        flat_rot = np.ascontiguousarray(origin_rot, dtype=float).reshape(
            self.nb, 9)
        flat_inertia = np.ascontiguousarray(inertia_sp, dtype=float).reshape(
            self.nb, 36)
        for i in range(self.nb):
            self.parent[i] = parent[i]
            for j in range(3):
                self.axis[i][j] = axis[i, j]
                self.origin_pos[i][j] = origin_pos[i, j]
            for j in range(9):
                self.origin_rot[i][j] = flat_rot[i, j]
            for j in range(36):
                self.inertia_sp[i][j] = flat_inertia[i, j]
        self.joint_damping[0] = 0.0
        for i in range(1, self.nb):
            self.joint_damping[i] = joint_damping[i - 1]
        for i in range(MAXV):
            self.act_of[i] = 0
        for i in range(self.nu):
            self.act_qvel[i] = act_qvel[i]
            self.act_angle[i] = act_angle[i]
            self.act_of[act_qvel[i]] = i
            self.torque_limit[i] = torque_limit[i]
            self.baseline_kp[i] = baseline_kp[i]
            self.baseline_kd[i] = baseline_kd[i]
        for i in range(len(foot_body)):
            self.foot_body[i] = foot_body[i]
            for j in range(3):
                self.foot_offset[i][j] = foot_offset[i, j]
        self.contact_x[0] = contact_x[0]
        self.contact_x[1] = contact_x[1]
        for j in range(3):
            self.gravity[j] = gravity[j]
            self.kp_swing[j] = kp_swing[j]
            self.kd_swing[j] = kd_swing[j]
            self.kp_stance[j] = kp_stance[j]
            self.kd_stance[j] = kd_stance[j]
        for j in range(2):
            self.kp_joint[j] = kp_joint[j]
            self.kd_joint[j] = kd_joint[j]
        self.ground = ground
        self.stiffness = stiffness
        self.damping = damping
        self.friction = friction
        self.tan_damping = tan_damping
        self.cond_limit = cond_limit
        self.reg_eps = reg_eps
        self.orient_idx[0] = 0
        self.orient_idx[1] = 4
        self.orient_idx[2] = 5
        self.orient_idx[3] = 9

    # -- dynamics passes ----------------------------------------------------

    cdef void _fk(self, const double* qpos, double R[MAXB][9],
                  double P[MAXB][3], double jrot[MAXB][9]) nogil:
        cdef int i, p
        cdef double local[9]
        cdef double offset[3]
        quat_to_mat_c(qpos + 3, R[0])
        P[0][0] = qpos[0]
        P[0][1] = qpos[1]
        P[0][2] = qpos[2]
        for i in range(1, self.nb):
            p = self.parent[i]
            axis_angle(self.axis[i], qpos[7 + i - 1], local)
            matmul3(self.origin_rot[i], local, jrot[i])
            matmul3(R[p], jrot[i], R[i])
            matvec3(R[p], self.origin_pos[i], offset)
            P[i][0] = P[p][0] + offset[0]
            P[i][1] = P[p][1] + offset[1]
            P[i][2] = P[p][2] + offset[2]

    cdef void _velocities(self, const double* qvel, double* R0,
                          double jrot[MAXB][9], double V[MAXB][6]) nogil:
        cdef int i, p, k
        V[0][0] = qvel[3]
        V[0][1] = qvel[4]
        V[0][2] = qvel[5]
        matTvec3(R0, qvel, V[0] + 3)
        for i in range(1, self.nb):
            p = self.parent[i]
            motion_to_child(jrot[i], self.origin_pos[i], V[p], V[i])
            for k in range(3):
                V[i][k] += self.axis[i][k] * qvel[6 + i - 1]

    cdef void _rnea(self, const double* qvel, double* R0,
                    double jrot[MAXB][9], double V[MAXB][6], double* out,
                    int with_velocity) nogil:
        """Bias forces (with_velocity=1) or the gravity vector (0)."""
        cdef double A[MAXB][6]
        cdef double F[MAXB][6]
        cdef double tmp6[6]
        cdef double vj[6]
        cdef double fp[6]
        cdef double negg[3]
        cdef double qd
        cdef int i, p, k, r
        for k in range(6):
            A[0][k] = 0.0
        negg[0] = -self.gravity[0]
        negg[1] = -self.gravity[1]
        negg[2] = -self.gravity[2]
        matTvec3(R0, negg, A[0] + 3)
        if with_velocity:
            cross3(V[0], V[0] + 3, tmp6)
            A[0][3] -= tmp6[0]
            A[0][4] -= tmp6[1]
            A[0][5] -= tmp6[2]
        for i in range(1, self.nb):
            p = self.parent[i]
            motion_to_child(jrot[i], self.origin_pos[i], A[p], A[i])
            if with_velocity:
                qd = qvel[6 + i - 1]
                for k in range(3):
                    vj[k] = self.axis[i][k] * qd
                    vj[k + 3] = 0.0
                cross_motion(V[i], vj, tmp6)
                for k in range(6):
                    A[i][k] += tmp6[k]
        for i in range(self.nb):
            for r in range(6):
                F[i][r] = 0.0
                for k in range(6):
                    F[i][r] += self.inertia_sp[i][6 * r + k] * A[i][k]
            if with_velocity:
                for r in range(6):
                    tmp6[r] = 0.0
                    for k in range(6):
                        tmp6[r] += self.inertia_sp[i][6 * r + k] * V[i][k]
                cross_force(V[i], tmp6, vj)
                for r in range(6):
                    F[i][r] += vj[r]
        for k in range(self.nv):
            out[k] = 0.0
        for i in range(self.nb - 1, 0, -1):
            out[6 + i - 1] = dot3(self.axis[i], F[i])
            force_to_parent(jrot[i], self.origin_pos[i], F[i], fp)
            p = self.parent[i]
            for k in range(6):
                F[p][k] += fp[k]
        matvec3(R0, F[0] + 3, out)
        out[3] = F[0][0]
        out[4] = F[0][1]
        out[5] = F[0][2]

    cdef void _crba(self, double* R0, double jrot[MAXB][9],
                    double M[MAXV][MAXV]) nogil:
        cdef double IC[MAXB][36]
        cdef double X[36]
        cdef double tmp[36]
        cdef double sk[9]
        cdef double rts[9]
        cdef double fvec[6]
        cdef double fnext[6]
        cdef double col[3]
        cdef double b11[9]
        cdef double b12[9]
        cdef double b21[9]
        cdef double b22[9]
        cdef double rb[9]
        cdef double rbrt[9]
        cdef int i, j, p, r, c, k
        cdef double s
        for i in range(self.nb):
            for k in range(36):
                IC[i][k] = self.inertia_sp[i][k]
        for r in range(self.nv):
            for c in range(self.nv):
                M[r][c] = 0.0
        for i in range(self.nb - 1, 0, -1):
            p = self.parent[i]
            for k in range(36):
                X[k] = 0.0
            for r in range(3):
                for c in range(3):
                    X[6 * r + c] = jrot[i][3 * c + r]
                    X[6 * (r + 3) + (c + 3)] = jrot[i][3 * c + r]
            sk[0] = 0.0
            sk[1] = -self.origin_pos[i][2]
            sk[2] = self.origin_pos[i][1]
            sk[3] = self.origin_pos[i][2]
            sk[4] = 0.0
            sk[5] = -self.origin_pos[i][0]
            sk[6] = -self.origin_pos[i][1]
            sk[7] = self.origin_pos[i][0]
            sk[8] = 0.0
            for r in range(3):
                for c in range(3):
                    rts[3 * r + c] = 0.0
                    for k in range(3):
                        rts[3 * r + c] -= jrot[i][3 * k + r] * sk[3 * k + c]
            for r in range(3):
                for c in range(3):
                    X[6 * (r + 3) + c] = rts[3 * r + c]
            for r in range(6):
                for c in range(6):
                    tmp[6 * r + c] = 0.0
                    for k in range(6):
                        tmp[6 * r + c] += IC[i][6 * r + k] * X[6 * k + c]
            for r in range(6):
                for c in range(6):
                    s = 0.0
                    for k in range(6):
                        s += X[6 * k + r] * tmp[6 * k + c]
                    IC[p][6 * r + c] += s
            for r in range(6):
                fvec[r] = (IC[i][6 * r + 0] * self.axis[i][0]
                           + IC[i][6 * r + 1] * self.axis[i][1]
                           + IC[i][6 * r + 2] * self.axis[i][2])
            M[6 + i - 1][6 + i - 1] = dot3(self.axis[i], fvec)
            j = i
            while self.parent[j] != 0:
                force_to_parent(jrot[j], self.origin_pos[j], fvec, fnext)
                for k in range(6):
                    fvec[k] = fnext[k]
                j = self.parent[j]
                s = dot3(self.axis[j], fvec)
                M[6 + i - 1][6 + j - 1] = s
                M[6 + j - 1][6 + i - 1] = s
            force_to_parent(jrot[j], self.origin_pos[j], fvec, fnext)
            matvec3(R0, fnext + 3, col)
            for k in range(3):
                M[k][6 + i - 1] = col[k]
                M[6 + i - 1][k] = col[k]
                M[3 + k][6 + i - 1] = fnext[k]
                M[6 + i - 1][3 + k] = fnext[k]
        for r in range(3):
            for c in range(3):
                b11[3 * r + c] = IC[0][6 * r + c]
                b12[3 * r + c] = IC[0][6 * r + (c + 3)]
                b21[3 * r + c] = IC[0][6 * (r + 3) + c]
                b22[3 * r + c] = IC[0][6 * (r + 3) + (c + 3)]
        matmul3(R0, b22, rb)
        for r in range(3):
            for c in range(3):
                rbrt[3 * r + c] = (rb[3 * r + 0] * R0[3 * c + 0]
                                   + rb[3 * r + 1] * R0[3 * c + 1]
                                   + rb[3 * r + 2] * R0[3 * c + 2])
        matmul3(R0, b21, rb)
        for r in range(3):
            for c in range(3):
                M[r][c] = rbrt[3 * r + c]
                M[r][3 + c] = rb[3 * r + c]
                M[3 + r][c] = rb[3 * c + r]
                M[3 + r][3 + c] = b11[3 * r + c]

    cdef int _cholesky(self, double M[MAXV][MAXV],
                       double L[MAXV][MAXV]) nogil:
        cdef int i, j, k
        cdef double s
        for i in range(self.nv):
            for j in range(self.nv):
                L[i][j] = 0.0
        for i in range(self.nv):
            for j in range(i + 1):
                s = M[i][j]
                for k in range(j):
                    s -= L[i][k] * L[j][k]
                if i == j:
                    if s <= 0.0:
                        return 0
                    L[i][i] = sqrt(s)
                else:
                    L[i][j] = s / L[j][j]
        return 1

    cdef void _chol_solve(self, double L[MAXV][MAXV], const double* rhs,
                          double* x) nogil:
        cdef int i, k
        cdef double s
        for i in range(self.nv):
            s = rhs[i]
            for k in range(i):
                s -= L[i][k] * x[k]
            x[i] = s / L[i][i]
        for i in range(self.nv - 1, -1, -1):
            s = x[i]
            for k in range(i + 1, self.nv):
                s -= L[k][i] * x[k]
            x[i] = s / L[i][i]

    cdef int _foot_chain(self, int foot, int* chain) nogil:
        cdef int n = 0
        cdef int i = self.foot_body[foot]
        cdef int j, t
        while i != 0:
            chain[n] = i
            n += 1
            i = self.parent[i]
        for j in range(n / 2):
            t = chain[j]
            chain[j] = chain[n - 1 - j]
            chain[n - 1 - j] = t
        return n

    cdef void _accumulate_costs(self, const double* q_pos,
                                const double* q_vel, double R[MAXB][9],
                                double foot_w[2][3],
                                double foot_vel_w[2][3],
                                const double* cmd_phi, const double* prev_vel,
                                double dt, double xvel_ref, double zvel_ref,
                                double zpos_ref, double swing_apex,
                                double* cost) nogil:
        cdef double fz, fspeed, stance, swing, quat_w, acc, s, trace
        cdef int f, k, body
        for f in range(2):
            fz = foot_w[f][2] - self.ground
            fspeed = sqrt(dot3(foot_vel_w[f], foot_vel_w[f]))
            stance = fz * fz + fspeed
            swing = 40.0 * (swing_apex - fz) * (swing_apex - fz)
            cost[f] += cmd_phi[f] * stance + (1.0 - cmd_phi[f]) * swing
        cost[2] += 3.0 * fabs(q_vel[0] - xvel_ref)
        cost[3] += 3.0 * fabs(q_vel[2] - zvel_ref)
        cost[4] += 3.0 * fabs(q_pos[2] - zpos_ref)
        cost[5] += 50.0 * (1.0 - fabs(q_pos[3]))
        cost[6] += 5.0 * fabs(q_pos[1]) + 3.0 * fabs(q_vel[1])
        s = 0.0
        for f in range(2):
            body = self.foot_body[f]
            trace = R[body][0] + R[body][4] + R[body][8]
            # |w| of the rotation: w^2 = (1 + trace) / 4
            quat_w = 0.5 * sqrt(1.0 + trace) if trace > -1.0 else 0.0
            s += quat_w
        cost[7] += 30.0 * (1.0 - 0.5 * s)
        acc = 0.0
        for k in range(3):
            s = (q_vel[k] - prev_vel[k]) / dt
            acc += s * s
        cost[8] += sqrt(acc)
        cost[9] += sqrt(q_vel[3] * q_vel[3] + q_vel[4] * q_vel[4]
                        + q_vel[5] * q_vel[5])

    # -- the fused window ---------------------------------------------------

    def run_window(self, double[::1] qpos, double[::1] qvel,
                   double[::1] prev_base_vel, int mode,
                   double[:, ::1] x_ref, double[:, ::1] x_delta,
                   double[:, ::1] f_ref, double[::1] phi,
                   double[::1] theta_target, double[::1] joint_target,
                   double xvel_ref, double zvel_ref, double zpos_ref,
                   double swing_apex, double dt, int n_ticks,
                   double termination_height):
        cdef double R[MAXB][9]
        cdef double P[MAXB][3]
        cdef double jrot[MAXB][9]
        cdef double V[MAXB][6]
        cdef double M[MAXV][MAXV]
        cdef double L[MAXV][MAXV]
        cdef double bias[MAXV]
        cdef double grav[MAXV]
        cdef double minv_g[MAXV]
        cdef double applied[MAXV]
        cdef double qacc[MAXV]
        cdef double jac[2][3][MAXV]
        cdef double zcols[3][MAXV]
        cdef int chain[2][MAXB]
        cdef int chain_len[2]
        cdef double tau[MAXU]
        cdef double q_pos[MAXQ]
        cdef double q_vel[MAXV]
        cdef double prev_vel[3]
        cdef double cost[10]
        cdef double grf[2][3]
        cdef double foot_w[2][3]
        cdef double foot_rel[2][3]
        cdef double foot_vel_w[2][3]
        cdef double cmd_xref[2][3]
        cdef double cmd_xdel[2][3]
        cdef double cmd_fref[2][3]
        cdef double cmd_phi[2]
        cdef double cmd_theta[4]
        cdef double cmd_joint[MAXU]
        cdef double tmp3[3]
        cdef double tmp3b[3]
        cdef double err[3]
        cdef double xdot[3]
        cdef double w33[9]
        cdef double rhs3[3]
        cdef double force3[3]
        cdef double stance3[3]
        cdef double eig[3]
        cdef double jy[3]
        cdef double quat[4]
        cdef double dq[4]
        cdef double rotvec[3]
        cdef double align[9]
        cdef double lever[3]
        cdef double axis_w[3]
        cdef double pt[3]
        cdef double vpt[3]
        cdef double local[3]
        cdef double fw[3]
        cdef int nj = self.nb - 1
        cdef int t, i, k, r, c, f, which, body, idx
        cdef int fell = 0, diverged = 0, singular_ticks = 0, is_sing
        cdef int ticks = 0
        cdef double depth, normal, cap, tnorm, s

        for k in range(7 + nj):
            q_pos[k] = qpos[k]
        for k in range(self.nv):
            q_vel[k] = qvel[k]
        for k in range(3):
            prev_vel[k] = prev_base_vel[k]
        for k in range(10):
            cost[k] = 0.0
        for f in range(2):
            for k in range(3):
                grf[f][k] = 0.0
            chain_len[f] = self._foot_chain(f, chain[f])
            cmd_phi[f] = phi[f]
            for k in range(3):
                cmd_xref[f][k] = x_ref[f, k]
                cmd_xdel[f][k] = x_delta[f, k]
                cmd_fref[f][k] = f_ref[f, k]
        for k in range(4):
            cmd_theta[k] = theta_target[k]
        for k in range(self.nu):
            cmd_joint[k] = joint_target[k]

        for t in range(n_ticks):
            # kinematics of the pre-step state
            self._fk(q_pos, R, P, jrot)
            self._velocities(q_vel, R[0], jrot, V)
            for f in range(2):
                body = self.foot_body[f]
                matvec3(R[body], self.foot_offset[f], tmp3)
                for k in range(3):
                    foot_w[f][k] = P[body][k] + tmp3[k]
                cross3(V[body], self.foot_offset[f], tmp3)
                for k in range(3):
                    tmp3[k] += V[body][3 + k]
                matvec3(R[body], tmp3, foot_vel_w[f])
                for k in range(3):
                    tmp3[k] = foot_w[f][k] - P[0][k]
                matTvec3(R[0], tmp3, foot_rel[f])

            # reward costs on the pre-step state
            self._accumulate_costs(q_pos, q_vel, R, foot_w, foot_vel_w,
                                   cmd_phi, prev_vel, dt, xvel_ref, zvel_ref,
                                   zpos_ref, swing_apex, cost)
            for k in range(3):
                prev_vel[k] = q_vel[k]

            # dynamics quantities
            self._rnea(q_vel, R[0], jrot, V, bias, 1)
            self._rnea(q_vel, R[0], jrot, V, grav, 0)
            self._crba(R[0], jrot, M)
            if not self._cholesky(M, L):
                diverged = 1
                ticks = t + 1
                break
            self._chol_solve(L, grav, minv_g)

            # relative foot jacobians (base columns stay zero), rotated into
            # the gravity-aligned heading frame where the diagonal task
            # gains act (tsid.heading_alignment)
            s = sqrt(R[0][0] * R[0][0] + R[0][3] * R[0][3])
            if s > 1e-12:
                align[0] = (R[0][0] * R[0][0] + R[0][3] * R[0][3]) / s
                align[1] = (R[0][0] * R[0][1] + R[0][3] * R[0][4]) / s
                align[2] = (R[0][0] * R[0][2] + R[0][3] * R[0][5]) / s
                align[3] = (-R[0][3] * R[0][0] + R[0][0] * R[0][3]) / s
                align[4] = (-R[0][3] * R[0][1] + R[0][0] * R[0][4]) / s
                align[5] = (-R[0][3] * R[0][2] + R[0][0] * R[0][5]) / s
            else:
                align[0] = 1.0; align[1] = 0.0; align[2] = 0.0
                align[3] = 0.0; align[4] = 1.0; align[5] = 0.0
            align[6] = R[0][6]
            align[7] = R[0][7]
            align[8] = R[0][8]
            for f in range(2):
                for r in range(3):
                    for c in range(self.nv):
                        jac[f][r][c] = 0.0
                for i in range(chain_len[f]):
                    idx = chain[f][i]
                    matvec3(R[idx], self.axis[idx], axis_w)
                    for k in range(3):
                        lever[k] = foot_w[f][k] - P[idx][k]
                    cross3(axis_w, lever, tmp3)
                    matTvec3(R[0], tmp3, tmp3b)
                    matvec3(align, tmp3b, tmp3)
                    for k in range(3):
                        jac[f][k][6 + idx - 1] = tmp3[k]

            # controller
            for k in range(self.nu):
                tau[k] = 0.0
            if mode == TASK_MODE:
                for f in range(2):
                    # setpoints are gravity-aligned; only the measured foot
                    # position rotates into the heading frame
                    matvec3(align, foot_rel[f], tmp3b)
                    for r in range(3):
                        err[r] = (cmd_xref[f][r] + cmd_xdel[f][r]
                                  - tmp3b[r])
                        xdot[r] = 0.0
                        for i in range(chain_len[f]):
                            idx = 6 + chain[f][i] - 1
                            xdot[r] += jac[f][r][idx] * q_vel[idx]
                    for r in range(3):
                        self._chol_solve(L, jac[f][r], zcols[r])
                    for r in range(3):
                        for c in range(3):
                            s = 0.0
                            for i in range(chain_len[f]):
                                idx = 6 + chain[f][i] - 1
                                s += jac[f][r][idx] * zcols[c][idx]
                            w33[3 * r + c] = s
                    for r in range(3):
                        for c in range(r):
                            s = 0.5 * (w33[3 * r + c] + w33[3 * c + r])
                            w33[3 * r + c] = s
                            w33[3 * c + r] = s
                    sym3_eigenvalues(w33, eig)
                    is_sing = 0
                    if eig[0] <= 0.0 or eig[2] > self.cond_limit * eig[0]:
                        is_sing = 1
                        singular_ticks += 1
                        w33[0] += self.reg_eps
                        w33[4] += self.reg_eps
                        w33[8] += self.reg_eps
                    for r in range(3):
                        jy[r] = 0.0
                        for i in range(chain_len[f]):
                            idx = 6 + chain[f][i] - 1
                            jy[r] += jac[f][r][idx] * minv_g[idx]
                    for r in range(3):
                        s = (self.kp_swing[r] * err[r]
                             - self.kd_swing[r] * xdot[r])
                        rhs3[r] = jy[r] if is_sing else s + jy[r]
                    if not solve3(w33, rhs3, force3):
                        force3[0] = 0.0
                        force3[1] = 0.0
                        force3[2] = 0.0
                    for r in range(3):
                        stance3[r] = (self.kp_stance[r] * err[r]
                                      - self.kd_stance[r] * xdot[r]
                                      - cmd_fref[f][r])
                    for i in range(chain_len[f]):
                        idx = chain[f][i]
                        k = 6 + idx - 1
                        s = 0.0
                        for r in range(3):
                            s += jac[f][r][k] * (
                                cmd_phi[f] * stance3[r]
                                + (1.0 - cmd_phi[f]) * force3[r])
                        tau[self.act_of[k]] += s
                for k in range(4):
                    idx = self.orient_idx[k]
                    i = self.act_angle[idx]
                    tau[idx] += (self.kp_joint[k % 2]
                                 * (cmd_theta[k] - q_pos[7 + i])
                                 - self.kd_joint[k % 2] * q_vel[6 + i])
            else:
                for k in range(self.nu):
                    i = self.act_angle[k]
                    tau[k] = (self.baseline_kp[k]
                              * (cmd_joint[k] - q_pos[7 + i])
                              - self.baseline_kd[k] * q_vel[6 + i])
            for k in range(self.nu):
                if tau[k] > self.torque_limit[k]:
                    tau[k] = self.torque_limit[k]
                elif tau[k] < -self.torque_limit[k]:
                    tau[k] = -self.torque_limit[k]

            # applied generalized forces: actuation, drivetrain losses,
            # contact
            for k in range(self.nv):
                applied[k] = 0.0
            for k in range(self.nu):
                applied[self.act_qvel[k]] += tau[k]
            for i in range(1, self.nb):
                applied[6 + i - 1] -= self.joint_damping[i] * q_vel[6 + i - 1]
            for f in range(2):
                body = self.foot_body[f]
                for which in range(2):
                    for k in range(3):
                        local[k] = self.foot_offset[f][k]
                    local[0] += self.contact_x[which]
                    matvec3(R[body], local, tmp3)
                    for k in range(3):
                        pt[k] = P[body][k] + tmp3[k]
                    depth = self.ground - pt[2]
                    if depth <= 0.0:
                        continue
                    cross3(V[body], local, tmp3)
                    for k in range(3):
                        tmp3[k] += V[body][3 + k]
                    matvec3(R[body], tmp3, vpt)
                    normal = self.stiffness * depth - self.damping * vpt[2]
                    if normal < 0.0:
                        normal = 0.0
                    fw[0] = -self.tan_damping * vpt[0]
                    fw[1] = -self.tan_damping * vpt[1]
                    cap = self.friction * normal
                    tnorm = sqrt(fw[0] * fw[0] + fw[1] * fw[1])
                    if tnorm > cap and tnorm > 0.0:
                        fw[0] *= cap / tnorm
                        fw[1] *= cap / tnorm
                    fw[2] = normal
                    for k in range(3):
                        grf[f][k] += fw[k]
                        applied[k] += fw[k]
                    for k in range(3):
                        tmp3[k] = pt[k] - P[0][k]
                    cross3(tmp3, fw, tmp3b)
                    matTvec3(R[0], tmp3b, tmp3)
                    for k in range(3):
                        applied[3 + k] += tmp3[k]
                    for i in range(chain_len[f]):
                        idx = chain[f][i]
                        matvec3(R[idx], self.axis[idx], axis_w)
                        for k in range(3):
                            lever[k] = pt[k] - P[idx][k]
                        cross3(axis_w, lever, tmp3)
                        applied[6 + idx - 1] += dot3(tmp3, fw)

            # semi-implicit Euler
            for k in range(self.nv):
                applied[k] -= bias[k]
            self._chol_solve(L, applied, qacc)
            for k in range(self.nv):
                q_vel[k] += dt * qacc[k]
            for k in range(3):
                q_pos[k] += dt * q_vel[k]
                rotvec[k] = dt * q_vel[3 + k]
            quat_from_rotvec_c(rotvec, dq)
            quat_mul_c(&q_pos[3], dq, quat)
            s = sqrt(quat[0] * quat[0] + quat[1] * quat[1]
                     + quat[2] * quat[2] + quat[3] * quat[3])
            if quat[0] < 0.0:
                s = -s
            for k in range(4):
                q_pos[3 + k] = quat[k] / s
            for i in range(nj):
                q_pos[7 + i] += dt * q_vel[6 + i]
            ticks = t + 1

            s = q_pos[2]
            for k in range(self.nv):
                s += q_vel[k]
            if not isfinite(s):
                diverged = 1
                break
            if q_pos[2] < termination_height:
                fell = 1
                break

        out_qpos = np.empty(7 + nj)
        out_qvel = np.empty(self.nv)
        out_costs = np.empty(10)
        out_grf = np.empty((2, 3))
        out_prev = np.empty(3)
        for k in range(7 + nj):
            out_qpos[k] = q_pos[k]
        for k in range(self.nv):
            out_qvel[k] = q_vel[k]
        for k in range(10):
            out_costs[k] = cost[k]
        for f in range(2):
            for k in range(3):
                out_grf[f, k] = grf[f][k]
        for k in range(3):
            out_prev[k] = prev_vel[k]
        return {
            "qpos": out_qpos, "qvel": out_qvel, "ticks": ticks,
            "fell": bool(fell), "diverged": bool(diverged),
            "cost_sums": out_costs, "grf_sum": out_grf,
            "singular_ticks": singular_ticks, "prev_base_vel": out_prev,
        }
