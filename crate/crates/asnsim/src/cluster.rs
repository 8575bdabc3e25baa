//! Cluster formation: the registration broadcast (RGT), the join request
//! reply (J_REQ), nearest-head selection, and the resulting cluster plan.
//!
//! Wire formats are fixed-width big-endian. Coordinates travel as signed
//! 24-bit fixed point in centimeters (range +/-83886.07 m) and SNR as signed
//! 16-bit tenths of a decibel (range +/-3276.7 dB), so messages round-trip
//! bit-exactly. Registration happens once at time zero and carries no cost
//! in the delay/energy metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Message-kind tag of a registration broadcast.
pub const RGT_TAG: u8 = 0x01;
/// Message-kind tag of a join request.
pub const JREQ_TAG: u8 = 0x02;

/// Encoded size of an RGT message, octets.
pub const RGT_LEN: usize = 9;
/// Encoded size of a J_REQ message, octets.
pub const JREQ_LEN: usize = 7;

const CM_MIN: i64 = -(1 << 23) + 1;
const CM_MAX: i64 = (1 << 23) - 1;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("wrong message kind: expected tag {expected:#04x}, got {got:#04x}")]
    WrongKind { expected: u8, got: u8 },
    #[error("truncated buffer: need {need} octets, got {got}")]
    Truncated { need: usize, got: usize },
    #[error("coordinate {0} m outside the encodable range")]
    CoordinateRange(f64),
    #[error("value is not finite")]
    NonFinite,
    #[error("no head in range")]
    NoHeadInRange,
    #[error("distance must be positive")]
    ZeroDistance,
    #[error("malformed plan file: {0}")]
    PlanParse(String),
}

/// A position quantized to the wire resolution of 0.01 m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    x_cm: i32,
    y_cm: i32,
}

impl Position {
    /// Quantize a position in meters. Rejects non-finite or out-of-range
    /// coordinates.
    pub fn from_m(x: f64, y: f64) -> Result<Self, ClusterError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(ClusterError::NonFinite);
        }
        let xc = (x * 100.0).round();
        let yc = (y * 100.0).round();
        for (orig, cm) in [(x, xc), (y, yc)] {
            if (cm as i64) < CM_MIN || (cm as i64) > CM_MAX {
                return Err(ClusterError::CoordinateRange(orig));
            }
        }
        Ok(Position {
            x_cm: xc as i32,
            y_cm: yc as i32,
        })
    }

    pub fn x_m(&self) -> f64 {
        self.x_cm as f64 / 100.0
    }

    pub fn y_m(&self) -> f64 {
        self.y_cm as f64 / 100.0
    }

    pub fn distance_m(&self, other: &Position) -> f64 {
        let dx = (self.x_cm - other.x_cm) as f64 / 100.0;
        let dy = (self.y_cm - other.y_cm) as f64 / 100.0;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Registration broadcast from a cluster head: its ID and position. The
/// one-octet kind tag is fixed to [`RGT_TAG`] on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RgtMessage {
    pub cluster_head_id: u16,
    pub position: Position,
}

/// A node's join request: its ID, the SNR it measured on the received RGT
/// (tenths of a dB), and the chosen head's ID.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinRequest {
    pub node_id: u16,
    pub snr_tenths_db: i16,
    pub dest_cluster_head_id: u16,
}

impl JoinRequest {
    pub fn snr_db(&self) -> f64 {
        self.snr_tenths_db as f64 / 10.0
    }
}

fn i24_to_bytes(v: i32) -> [u8; 3] {
    let u = (v as u32) & 0x00ff_ffff;
    [(u >> 16) as u8, (u >> 8) as u8, u as u8]
}

fn i24_from_bytes(b: &[u8]) -> i32 {
    let raw = ((b[0] as u32) << 16) | ((b[1] as u32) << 8) | b[2] as u32;
    // Sign-extend from 24 bits.
    ((raw << 8) as i32) >> 8
}

/// Encode an RGT message into its fixed 9-octet layout:
/// tag, head ID (u16), x (i24 cm), y (i24 cm), all big-endian.
pub fn encode_rgt(m: &RgtMessage) -> [u8; RGT_LEN] {
    let mut out = [0u8; RGT_LEN];
    out[0] = RGT_TAG;
    out[1..3].copy_from_slice(&m.cluster_head_id.to_be_bytes());
    out[3..6].copy_from_slice(&i24_to_bytes(m.position.x_cm));
    out[6..9].copy_from_slice(&i24_to_bytes(m.position.y_cm));
    out
}

pub fn decode_rgt(octets: &[u8]) -> Result<RgtMessage, ClusterError> {
    if octets.len() < RGT_LEN {
        return Err(ClusterError::Truncated {
            need: RGT_LEN,
            got: octets.len(),
        });
    }
    if octets[0] != RGT_TAG {
        return Err(ClusterError::WrongKind {
            expected: RGT_TAG,
            got: octets[0],
        });
    }
    Ok(RgtMessage {
        cluster_head_id: u16::from_be_bytes([octets[1], octets[2]]),
        position: Position {
            x_cm: i24_from_bytes(&octets[3..6]),
            y_cm: i24_from_bytes(&octets[6..9]),
        },
    })
}

/// Encode a J_REQ into its fixed 7-octet layout:
/// tag, node ID (u16), SNR (i16 tenths of dB), destination head ID (u16).
pub fn encode_join(j: &JoinRequest) -> [u8; JREQ_LEN] {
    let mut out = [0u8; JREQ_LEN];
    out[0] = JREQ_TAG;
    out[1..3].copy_from_slice(&j.node_id.to_be_bytes());
    out[3..5].copy_from_slice(&j.snr_tenths_db.to_be_bytes());
    out[5..7].copy_from_slice(&j.dest_cluster_head_id.to_be_bytes());
    out
}

pub fn decode_join(octets: &[u8]) -> Result<JoinRequest, ClusterError> {
    if octets.len() < JREQ_LEN {
        return Err(ClusterError::Truncated {
            need: JREQ_LEN,
            got: octets.len(),
        });
    }
    if octets[0] != JREQ_TAG {
        return Err(ClusterError::WrongKind {
            expected: JREQ_TAG,
            got: octets[0],
        });
    }
    Ok(JoinRequest {
        node_id: u16::from_be_bytes([octets[1], octets[2]]),
        snr_tenths_db: i16::from_be_bytes([octets[3], octets[4]]),
        dest_cluster_head_id: u16::from_be_bytes([octets[5], octets[6]]),
    })
}

/// Deterministic log-distance path loss with no fading: the simplest model
/// under which the closest head is also the cheapest to reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    /// Path-loss exponent.
    pub exponent: f64,
    /// SNR measured at the reference distance, dB.
    pub snr_ref_db: f64,
    /// Reference distance, meters.
    pub d_ref_m: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        PathLossModel {
            exponent: 2.0,
            snr_ref_db: 40.0,
            d_ref_m: 1.0,
        }
    }
}

/// SNR of a broadcast received over distance `head_pos -> node_pos`:
/// `snr_ref_db - 10 * exponent * log10(d / d_ref)`.
pub fn received_snr(
    head_pos: &Position,
    node_pos: &Position,
    model: &PathLossModel,
) -> Result<f64, ClusterError> {
    let d = head_pos.distance_m(node_pos);
    if d <= 0.0 {
        return Err(ClusterError::ZeroDistance);
    }
    Ok(model.snr_ref_db - 10.0 * model.exponent * (d / model.d_ref_m).log10())
}

/// Pick the head to join among received RGTs: minimum Euclidean distance,
/// ties broken by the lowest head ID.
pub fn select_head(rgts: &[RgtMessage], node_pos: &Position) -> Result<u16, ClusterError> {
    rgts.iter()
        .map(|r| (r.position.distance_m(node_pos), r.cluster_head_id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
        .ok_or(ClusterError::NoHeadInRange)
}

/// The roster produced by the handshake: which node joined which head, the
/// SNR each reported in its J_REQ (wire resolution), and who was out of
/// range of every head.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPlan {
    pub heads: Vec<(u16, Position)>,
    pub assignments: BTreeMap<u16, u16>,
    pub reported_snrs: BTreeMap<u16, i16>,
    pub unassigned: Vec<u16>,
    /// Minimum cluster size per head, when a sizing requirement was applied.
    pub required_size: BTreeMap<u16, u32>,
}

impl ClusterPlan {
    pub fn members_of(&self, head_id: u16) -> Vec<u16> {
        self.assignments
            .iter()
            .filter(|(_, &h)| h == head_id)
            .map(|(&n, _)| n)
            .collect()
    }

    /// Record the same minimum size S for every head.
    pub fn set_required_size(&mut self, size: u32) {
        self.required_size = self.heads.iter().map(|&(id, _)| (id, size)).collect();
    }

    /// Render the documented plan text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("[heads]\n");
        for (id, pos) in &self.heads {
            let _ = writeln!(s, "{} {:.2} {:.2}", id, pos.x_m(), pos.y_m());
        }
        s.push_str("[assignments]\n");
        for (node, head) in &self.assignments {
            let _ = writeln!(s, "{node} {head}");
        }
        s.push_str("[snrs]\n");
        for (node, tenths) in &self.reported_snrs {
            let _ = writeln!(s, "{} {:.1}", node, *tenths as f64 / 10.0);
        }
        s.push_str("[unassigned]\n");
        for node in &self.unassigned {
            let _ = writeln!(s, "{node}");
        }
        s.push_str("[required_size]\n");
        for (head, size) in &self.required_size {
            let _ = writeln!(s, "{head} {size}");
        }
        s
    }

    /// Parse the plan text format produced by [`ClusterPlan::to_text`].
    pub fn from_text(text: &str) -> Result<Self, ClusterError> {
        let mut plan = ClusterPlan {
            heads: Vec::new(),
            assignments: BTreeMap::new(),
            reported_snrs: BTreeMap::new(),
            unassigned: Vec::new(),
            required_size: BTreeMap::new(),
        };
        let mut section = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.to_string());
                continue;
            }
            let parse = |tok: &str| -> Result<f64, ClusterError> {
                tok.parse::<f64>()
                    .map_err(|_| ClusterError::PlanParse(format!("line {}: bad number {tok:?}", lineno + 1)))
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match section.as_deref() {
                Some("heads") if fields.len() == 3 => {
                    let id = parse(fields[0])? as u16;
                    let pos = Position::from_m(parse(fields[1])?, parse(fields[2])?)?;
                    plan.heads.push((id, pos));
                }
                Some("assignments") if fields.len() == 2 => {
                    plan.assignments
                        .insert(parse(fields[0])? as u16, parse(fields[1])? as u16);
                }
                Some("snrs") if fields.len() == 2 => {
                    let tenths = (parse(fields[1])? * 10.0).round() as i16;
                    plan.reported_snrs.insert(parse(fields[0])? as u16, tenths);
                }
                Some("unassigned") if fields.len() == 1 => {
                    plan.unassigned.push(parse(fields[0])? as u16);
                }
                Some("required_size") if fields.len() == 2 => {
                    plan.required_size
                        .insert(parse(fields[0])? as u16, parse(fields[1])? as u32);
                }
                Some(sec) => {
                    return Err(ClusterError::PlanParse(format!(
                        "line {}: unexpected row in [{sec}]",
                        lineno + 1
                    )));
                }
                None => {
                    return Err(ClusterError::PlanParse(format!(
                        "line {}: data before any section header",
                        lineno + 1
                    )));
                }
            }
        }
        Ok(plan)
    }
}

/// Run the registration/join handshake for every node: each head broadcasts
/// an RGT; every node within `range_m` of at least one head answers the
/// closest one with a J_REQ carrying the measured SNR. Out-of-range nodes
/// are reported, not fatal.
pub fn form_clusters(
    heads: &[(u16, Position)],
    nodes: &[(u16, Position)],
    range_m: f64,
    model: &PathLossModel,
) -> Result<ClusterPlan, ClusterError> {
    let mut plan = ClusterPlan {
        heads: heads.to_vec(),
        assignments: BTreeMap::new(),
        reported_snrs: BTreeMap::new(),
        unassigned: Vec::new(),
        required_size: BTreeMap::new(),
    };
    for &(node_id, node_pos) in nodes {
        // RGTs the node can hear, exercised through the real codec path.
        let heard: Vec<RgtMessage> = heads
            .iter()
            .filter(|(_, hp)| hp.distance_m(&node_pos) <= range_m)
            .map(|&(cluster_head_id, position)| {
                decode_rgt(&encode_rgt(&RgtMessage {
                    cluster_head_id,
                    position,
                }))
                .expect("self-encoded RGT decodes")
            })
            .collect();
        if heard.is_empty() {
            plan.unassigned.push(node_id);
            continue;
        }
        let head_id = select_head(&heard, &node_pos)?;
        let head_pos = heard
            .iter()
            .find(|r| r.cluster_head_id == head_id)
            .map(|r| r.position)
            .expect("selected head was heard");
        let snr_db = received_snr(&head_pos, &node_pos, model)?;
        let join = decode_join(&encode_join(&JoinRequest {
            node_id,
            snr_tenths_db: (snr_db * 10.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16,
            dest_cluster_head_id: head_id,
        }))
        .expect("self-encoded J_REQ decodes");
        plan.assignments.insert(join.node_id, join.dest_cluster_head_id);
        plan.reported_snrs.insert(join.node_id, join.snr_tenths_db);
    }
    Ok(plan)
}
