//! OpenQASM 2.0 emission and a parser for the emitted subset.
//!
//! H/RX/RY/RZ/CX/CZ/SWAP are emitted natively; RZZ(theta) is lowered to
//! the standard CX - RZ(theta) - CX sandwich, which reproduces
//! exp(-i theta Z x Z / 2) exactly (including phase). Angles are printed
//! with shortest round-trip precision so parse(emit(c)) loses nothing.

use crate::circuit::{CircuitBlueprint, GateInstance, GateKind};
use crate::error::{Error, Result};

/// Render a blueprint as OpenQASM 2.0 text.
pub fn export_qasm(blueprint: &CircuitBlueprint) -> String {
    let n = blueprint.num_qubits;
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{n}];\n"));
    out.push_str(&format!("creg c[{n}];\n"));
    for g in &blueprint.gates {
        match g.kind {
            GateKind::H => out.push_str(&format!("h q[{}];\n", g.qubits[0])),
            GateKind::RX => out.push_str(&format!("rx({}) q[{}];\n", g.theta.unwrap(), g.qubits[0])),
            GateKind::RY => out.push_str(&format!("ry({}) q[{}];\n", g.theta.unwrap(), g.qubits[0])),
            GateKind::RZ => out.push_str(&format!("rz({}) q[{}];\n", g.theta.unwrap(), g.qubits[0])),
            GateKind::CX => out.push_str(&format!("cx q[{}],q[{}];\n", g.qubits[0], g.qubits[1])),
            GateKind::CZ => out.push_str(&format!("cz q[{}],q[{}];\n", g.qubits[0], g.qubits[1])),
            GateKind::SWAP => {
                out.push_str(&format!("swap q[{}],q[{}];\n", g.qubits[0], g.qubits[1]))
            }
            GateKind::RZZ => {
                let (a, b) = (g.qubits[0], g.qubits[1]);
                out.push_str(&format!("cx q[{a}],q[{b}];\n"));
                out.push_str(&format!("rz({}) q[{b}];\n", g.theta.unwrap()));
                out.push_str(&format!("cx q[{a}],q[{b}];\n"));
            }
        }
    }
    out
}

/// Parse the QASM subset produced by [`export_qasm`]: a single `q` register
/// and the gates h/rx/ry/rz/cx/cz/swap. Angles accept plain floats and
/// simple `pi` expressions (`pi`, `-pi/2`, `2*pi`).
pub fn parse_qasm(text: &str) -> Result<CircuitBlueprint> {
    let mut num_qubits: Option<u32> = None;
    let mut gates = Vec::new();
    for raw in text.split(';') {
        let stmt = raw.split("//").next().unwrap_or("").trim();
        if stmt.is_empty() {
            continue;
        }
        let lower = stmt.to_ascii_lowercase();
        if lower.starts_with("openqasm") || lower.starts_with("include") || lower.starts_with("creg")
        {
            continue;
        }
        if let Some(rest) = lower.strip_prefix("qreg") {
            let size = rest
                .trim()
                .strip_prefix("q[")
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| Error::Parameter(format!("bad qreg statement: {stmt}")))?;
            let n: u32 = size
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad qreg size: {stmt}")))?;
            num_qubits = Some(n);
            continue;
        }
        if lower.starts_with("measure") || lower.starts_with("barrier") {
            continue;
        }
        gates.push(parse_gate(stmt)?);
    }
    let num_qubits =
        num_qubits.ok_or_else(|| Error::Parameter("missing qreg declaration".into()))?;
    Ok(CircuitBlueprint::new(num_qubits, gates))
}

fn parse_gate(stmt: &str) -> Result<GateInstance> {
    let (head, args) = match stmt.find(char::is_whitespace) {
        Some(i) => (stmt[..i].trim(), stmt[i..].trim()),
        None => return Err(Error::Parameter(format!("bad gate statement: {stmt}"))),
    };
    let (name, theta) = match head.find('(') {
        Some(i) => {
            let inner = head[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Parameter(format!("unclosed angle: {stmt}")))?;
            (&head[..i], Some(parse_angle(inner)?))
        }
        None => (head, None),
    };
    let qubits: Vec<u32> = args
        .split(',')
        .map(|a| {
            a.trim()
                .strip_prefix("q[")
                .and_then(|s| s.strip_suffix(']'))
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parameter(format!("bad operand in: {stmt}")))
        })
        .collect::<Result<_>>()?;
    let wrap = |t: f64| t.rem_euclid(std::f64::consts::TAU);
    let gate = match (name, qubits.len()) {
        ("h", 1) => GateInstance::one_q(GateKind::H, qubits[0], None),
        ("rx", 1) => GateInstance::one_q(GateKind::RX, qubits[0], Some(wrap(theta.ok_or_else(missing)?))),
        ("ry", 1) => GateInstance::one_q(GateKind::RY, qubits[0], Some(wrap(theta.ok_or_else(missing)?))),
        ("rz", 1) => GateInstance::one_q(GateKind::RZ, qubits[0], Some(wrap(theta.ok_or_else(missing)?))),
        ("cx", 2) => GateInstance::two_q(GateKind::CX, qubits[0], qubits[1], None),
        ("cz", 2) => GateInstance::two_q(GateKind::CZ, qubits[0], qubits[1], None),
        ("swap", 2) => GateInstance::two_q(GateKind::SWAP, qubits[0], qubits[1], None),
        _ => return Err(Error::Parameter(format!("unsupported gate: {stmt}"))),
    };
    Ok(gate)
}

fn missing() -> Error {
    Error::Parameter("rotation gate without angle".into())
}

fn parse_angle(expr: &str) -> Result<f64> {
    let s = expr.trim().replace(' ', "");
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.as_str()),
    };
    let value = if let Some(d) = body.strip_prefix("pi/") {
        std::f64::consts::PI
            / d.parse::<f64>().map_err(|_| Error::Parameter(format!("bad angle: {expr}")))?
    } else if let Some(m) = body.strip_suffix("*pi") {
        std::f64::consts::PI
            * m.parse::<f64>().map_err(|_| Error::Parameter(format!("bad angle: {expr}")))?
    } else if body == "pi" {
        std::f64::consts::PI
    } else {
        return Err(Error::Parameter(format!("bad angle: {expr}")));
    };
    Ok(if neg { -value } else { value })
}
