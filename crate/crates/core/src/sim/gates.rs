//! Dense gate matrices and their application to flat complex amplitude
//! vectors. Qubit `k` owns bit `k` of the basis index (little endian).
//!
//! Parameterized gates follow the Hamiltonian-exponential convention
//! U(theta) = exp(-i theta P / 2) for a Pauli product P.

use num_complex::Complex64;

use crate::circuit::GateKind;

pub type C = Complex64;
pub type Mat2 = [[C; 2]; 2];
pub type Mat4 = [[C; 4]; 4];

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn pauli_x() -> Mat2 {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn pauli_y() -> Mat2 {
    [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]
}

pub fn pauli_z() -> Mat2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
}

pub fn identity2() -> Mat2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

pub fn rx(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub fn rz(theta: f64) -> Mat2 {
    let e_neg = C::from_polar(1.0, -theta / 2.0);
    let e_pos = C::from_polar(1.0, theta / 2.0);
    [[e_neg, c(0.0, 0.0)], [c(0.0, 0.0), e_pos]]
}

pub fn hadamard() -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
}

/// exp(-i theta Z x Z / 2) = diag(e^{-i t/2}, e^{i t/2}, e^{i t/2}, e^{-i t/2}).
pub fn rzz(theta: f64) -> Mat4 {
    let e_neg = C::from_polar(1.0, -theta / 2.0);
    let e_pos = C::from_polar(1.0, theta / 2.0);
    let z = c(0.0, 0.0);
    [
        [e_neg, z, z, z],
        [z, e_pos, z, z],
        [z, z, e_pos, z],
        [z, z, z, e_neg],
    ]
}

pub fn cz() -> Mat4 {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    [
        [o, z, z, z],
        [z, o, z, z],
        [z, z, o, z],
        [z, z, z, c(-1.0, 0.0)],
    ]
}

/// CX with the first operand as control (basis |control, target>).
pub fn cx() -> Mat4 {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    [
        [o, z, z, z],
        [z, o, z, z],
        [z, z, z, o],
        [z, z, o, z],
    ]
}

pub fn swap() -> Mat4 {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    [
        [o, z, z, z],
        [z, z, o, z],
        [z, o, z, z],
        [z, z, z, o],
    ]
}

pub fn gate_matrix_1q(kind: GateKind, theta: Option<f64>) -> Mat2 {
    match kind {
        GateKind::RX => rx(theta.expect("RX needs theta")),
        GateKind::RY => ry(theta.expect("RY needs theta")),
        GateKind::RZ => rz(theta.expect("RZ needs theta")),
        GateKind::H => hadamard(),
        _ => panic!("{kind} is not a one-qubit gate"),
    }
}

pub fn gate_matrix_2q(kind: GateKind, theta: Option<f64>) -> Mat4 {
    match kind {
        GateKind::RZZ => rzz(theta.expect("RZZ needs theta")),
        GateKind::CZ => cz(),
        GateKind::CX => cx(),
        GateKind::SWAP => swap(),
        _ => panic!("{kind} is not a two-qubit gate"),
    }
}

pub fn conj2(u: &Mat2) -> Mat2 {
    let mut out = *u;
    for row in &mut out {
        for x in row {
            *x = x.conj();
        }
    }
    out
}

pub fn conj4(u: &Mat4) -> Mat4 {
    let mut out = *u;
    for row in &mut out {
        for x in row {
            *x = x.conj();
        }
    }
    out
}

/// Apply a 2x2 operator to the amplitude pairs split by `bit`.
pub fn apply_1q(amps: &mut [C], bit: usize, u: &Mat2) {
    let mask = 1usize << bit;
    for i in 0..amps.len() {
        if i & mask == 0 {
            let j = i | mask;
            let a = amps[i];
            let b = amps[j];
            amps[i] = u[0][0] * a + u[0][1] * b;
            amps[j] = u[1][0] * a + u[1][1] * b;
        }
    }
}

/// Apply a 4x4 operator at bit positions `(bit_a, bit_b)`; the operator's
/// basis index is `(value of bit_a) << 1 | (value of bit_b)`.
pub fn apply_2q(amps: &mut [C], bit_a: usize, bit_b: usize, u: &Mat4) {
    assert_ne!(bit_a, bit_b);
    let ma = 1usize << bit_a;
    let mb = 1usize << bit_b;
    for i in 0..amps.len() {
        if i & ma == 0 && i & mb == 0 {
            let idx = [i, i | mb, i | ma, i | ma | mb];
            let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for r in 0..4 {
                let mut s = c(0.0, 0.0);
                for k in 0..4 {
                    s += u[r][k] * v[k];
                }
                amps[idx[r]] = s;
            }
        }
    }
}
