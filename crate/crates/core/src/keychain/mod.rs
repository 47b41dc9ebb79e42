//! Key management for the dual (long-range / short-range) authentication
//! framework.
//!
//! The derivation skeleton is fixed:
//!
//! ```text
//! K_AMF ─ K_OTK ─┬─ TM-F ─ per-vehicle fronthaul session keys (short range)
//!                └─ HM-F ─ backhaul session keys (long range)
//! ```
//!
//! Every child key is HKDF-SHA256 of its parent over the child's label, so
//! the whole tree is a pure function of the root seed and the issuance
//! sequence. No handshake protocol is modelled; [`SessionState`] only counts
//! the protocol passes an authentication costs.

mod policy;
mod session;

pub use policy::{
    evaluate_refresh_policy, FactorScales, RefreshAction, RefreshDecision, RefreshPolicy, VehicleContext,
    FACTOR_NAMES, REASON_FAILSAFE_EXPIRY, REASON_SCORE, REASON_ZONE_HANDOVER,
};
pub use session::{advance_session, AuthMode, Phase, SessionEvent, SessionState};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use hkdf::Hkdf;
use sha2::Sha256;
use thiserror::Error;

pub const KEY_LEN: usize = 32;

pub const ROOT_LABEL: &str = "K_AMF";
pub const OTK_LABEL: &str = "K_OTK";
pub const TERMINAL_LABEL: &str = "TM-F";
pub const HUB_LABEL: &str = "HM-F";

const PATH_SEPARATOR: char = '/';
const COUNTER_SEPARATOR: char = '#';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeychainError {
    #[error("invalid label {0:?}: must be non-empty without '/', '#' or whitespace")]
    InvalidLabel(String),
    #[error("label {label:?} already exists under {parent}")]
    DuplicateLabel { parent: String, label: String },
    #[error("no key at path {0}")]
    UnknownPath(String),
    #[error("derived key at {path} collides with {existing}")]
    KeyCollision { path: String, existing: String },
    #[error("illegal transition: {event:?} in phase {phase:?}")]
    IllegalTransition { phase: Phase, event: SessionEvent },
    #[error("a session needs at least one pass")]
    ZeroPasses,
}

#[derive(Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    bytes: [u8; KEY_LEN],
    label: String,
    generation: u32,
}

impl KeyMaterial {
    pub fn bytes(&self) -> &[u8; KEY_LEN] {
        &self.bytes
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Depth below the root seed.
    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.bytes)
    }
}

impl fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Only a fingerprint, never the key itself.
        f.debug_struct("KeyMaterial")
            .field("label", &self.label)
            .field("generation", &self.generation)
            .field("prefix", &hex::encode(&self.bytes[..4]))
            .finish()
    }
}

fn check_label(label: &str) -> Result<(), KeychainError> {
    if label.is_empty()
        || label.contains(PATH_SEPARATOR)
        || label.contains(COUNTER_SEPARATOR)
        || label.chars().any(char::is_whitespace)
    {
        Err(KeychainError::InvalidLabel(label.to_string()))
    } else {
        Ok(())
    }
}

/// HKDF-SHA256 (no salt) of the parent key with the label as `info`.
pub fn derive_key(parent: &KeyMaterial, label: &str) -> Result<KeyMaterial, KeychainError> {
    if label.is_empty() {
        return Err(KeychainError::InvalidLabel(String::new()));
    }
    Ok(KeyMaterial {
        bytes: hkdf_sha256(&parent.bytes, label.as_bytes()),
        label: label.to_string(),
        generation: parent.generation + 1,
    })
}

fn hkdf_sha256(ikm: &[u8], info: &[u8]) -> [u8; KEY_LEN] {
    let mut okm = [0u8; KEY_LEN];
    Hkdf::<Sha256>::new(None, ikm)
        .expand(info, &mut okm)
        .expect("32 bytes is a valid HKDF-SHA256 output length");
    okm
}

/// 32-byte root seed expanded from a 64-bit seed (HKDF over its
/// little-endian bytes).
pub fn root_seed_from_u64(seed: u64) -> [u8; KEY_LEN] {
    hkdf_sha256(&seed.to_le_bytes(), ROOT_LABEL.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct KeyNode {
    key: KeyMaterial,
    children: BTreeSet<String>,
}

/// Derivation tree keyed by `/`-separated label paths.
///
/// Issuance mutates the tree and must be serialised by the caller; lookups
/// and [`KeyHierarchy::dump`] only need shared access.
#[derive(Clone, PartialEq)]
pub struct KeyHierarchy {
    nodes: BTreeMap<String, KeyNode>,
    fingerprints: HashMap<[u8; KEY_LEN], String>,
    issued: BTreeMap<(AuthMode, String), u64>,
    vehicles: BTreeMap<String, VehicleContext>,
}

impl fmt::Debug for KeyHierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyHierarchy")
            .field("keys", &self.nodes.len())
            .field("vehicles", &self.vehicles.len())
            .finish_non_exhaustive()
    }
}

impl KeyHierarchy {
    /// Root `K_AMF` is the seed itself; `K_OTK`, `TM-F` and `HM-F` are derived.
    pub fn build(root_seed: [u8; KEY_LEN]) -> Self {
        let root = KeyMaterial {
            bytes: root_seed,
            label: ROOT_LABEL.to_string(),
            generation: 0,
        };
        let mut h = Self {
            nodes: BTreeMap::new(),
            fingerprints: HashMap::new(),
            issued: BTreeMap::new(),
            vehicles: BTreeMap::new(),
        };
        h.fingerprints.insert(root.bytes, ROOT_LABEL.to_string());
        h.nodes.insert(
            ROOT_LABEL.to_string(),
            KeyNode {
                key: root,
                children: BTreeSet::new(),
            },
        );
        let skeleton = [
            (ROOT_LABEL.to_string(), OTK_LABEL),
            (Self::otk_path(), TERMINAL_LABEL),
            (Self::otk_path(), HUB_LABEL),
        ];
        for (parent, label) in skeleton {
            h.insert_child(&parent, label)
                .expect("skeleton labels are distinct and HKDF outputs do not collide");
        }
        h
    }

    fn otk_path() -> String {
        format!("{ROOT_LABEL}{PATH_SEPARATOR}{OTK_LABEL}")
    }

    /// Path of the function key that parents sessions of `mode`.
    pub fn function_path(mode: AuthMode) -> String {
        let label = match mode {
            AuthMode::ShortRange => TERMINAL_LABEL,
            AuthMode::LongRange => HUB_LABEL,
        };
        format!("{}{PATH_SEPARATOR}{label}", Self::otk_path())
    }

    pub fn root(&self) -> &KeyMaterial {
        &self.nodes[ROOT_LABEL].key
    }

    pub fn get(&self, path: &str) -> Option<&KeyMaterial> {
        self.nodes.get(path).map(|n| &n.key)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.nodes.contains_key(path)
    }

    /// All label paths in lexicographic order.
    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn children(&self, path: &str) -> Option<impl Iterator<Item = &str>> {
        self.nodes.get(path).map(|n| n.children.iter().map(String::as_str))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Derives `label` under `parent_path` and records it.
    pub fn insert_child(&mut self, parent_path: &str, label: &str) -> Result<KeyMaterial, KeychainError> {
        check_label(label)?;
        self.insert_checked(parent_path, label)
    }

    fn insert_checked(&mut self, parent_path: &str, label: &str) -> Result<KeyMaterial, KeychainError> {
        let parent = self
            .nodes
            .get(parent_path)
            .ok_or_else(|| KeychainError::UnknownPath(parent_path.to_string()))?;
        if parent.children.contains(label) {
            return Err(KeychainError::DuplicateLabel {
                parent: parent_path.to_string(),
                label: label.to_string(),
            });
        }
        let key = derive_key(&parent.key, label)?;
        let path = format!("{parent_path}{PATH_SEPARATOR}{label}");
        if let Some(existing) = self.fingerprints.get(&key.bytes) {
            return Err(KeychainError::KeyCollision {
                path,
                existing: existing.clone(),
            });
        }
        self.fingerprints.insert(key.bytes, path.clone());
        self.nodes
            .get_mut(parent_path)
            .expect("parent looked up above")
            .children
            .insert(label.to_string());
        self.nodes.insert(
            path,
            KeyNode {
                key: key.clone(),
                children: BTreeSet::new(),
            },
        );
        Ok(key)
    }

    /// Issues the next session key for `peer_id`: `…/TM-F/<peer>#<n>` for
    /// short range, `…/HM-F/<peer>#<n>` for long range, with `n` counting
    /// from 1 per (mode, peer). Bumps `T_K` of a tracked vehicle.
    pub fn issue_session_key(&mut self, mode: AuthMode, peer_id: &str) -> Result<KeyMaterial, KeychainError> {
        check_label(peer_id)?;
        let counter = self.issued.get(&(mode, peer_id.to_string())).copied().unwrap_or(0) + 1;
        let label = format!("{peer_id}{COUNTER_SEPARATOR}{counter}");
        let key = self.insert_checked(&Self::function_path(mode), &label)?;
        self.issued.insert((mode, peer_id.to_string()), counter);
        if let Some(ctx) = self.vehicles.get_mut(peer_id) {
            ctx.total_keys += 1;
        }
        Ok(key)
    }

    /// Number of keys issued so far to `peer_id` in `mode`.
    pub fn issued_count(&self, mode: AuthMode, peer_id: &str) -> u64 {
        self.issued.get(&(mode, peer_id.to_string())).copied().unwrap_or(0)
    }

    pub fn track_vehicle(&mut self, peer_id: &str, ctx: VehicleContext) {
        self.vehicles.insert(peer_id.to_string(), ctx);
    }

    pub fn vehicle(&self, peer_id: &str) -> Option<&VehicleContext> {
        self.vehicles.get(peer_id)
    }

    pub fn vehicle_mut(&mut self, peer_id: &str) -> Option<&mut VehicleContext> {
        self.vehicles.get_mut(peer_id)
    }

    pub fn untrack_vehicle(&mut self, peer_id: &str) -> Option<VehicleContext> {
        self.vehicles.remove(peer_id)
    }

    /// One `<path> <hex key>` line per node, sorted by path.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (path, node) in &self.nodes {
            out.push_str(path);
            out.push(' ');
            out.push_str(&node.key.to_hex());
            out.push('\n');
        }
        out
    }
}
