use serde::{Deserialize, Serialize};

use super::KeychainError;

/// Long range secures the TM↔hub backhaul; short range the vehicle↔edge
/// fronthaul.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthMode {
    LongRange,
    ShortRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    /// Waiting for pass `pass` (1-based) of the initial authentication.
    Authenticating { pass: u32 },
    Active,
    /// Waiting for pass `pass` of a re-authentication.
    Refreshing { pass: u32 },
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionEvent {
    Start,
    PassCompleted,
    Expire,
    RefreshRequested,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub mode: AuthMode,
    pub phase: Phase,
    /// Q.
    pub passes_required: u32,
    /// One message per completed pass.
    pub messages_sent: u64,
}

impl SessionState {
    pub fn new(mode: AuthMode, passes_required: u32) -> Result<Self, KeychainError> {
        if passes_required == 0 {
            return Err(KeychainError::ZeroPasses);
        }
        Ok(Self {
            mode,
            phase: Phase::Idle,
            passes_required,
            messages_sent: 0,
        })
    }

    pub fn is_active(&self) -> bool {
        self.phase == Phase::Active
    }

    pub fn advance(self, event: SessionEvent) -> Result<Self, KeychainError> {
        use Phase::*;
        use SessionEvent::*;
        let q = self.passes_required;
        let phase = match (self.phase, event) {
            (_, Expire) => Expired,
            (Idle, Start) => Authenticating { pass: 1 },
            (Active, RefreshRequested) => Refreshing { pass: 1 },
            (Authenticating { pass }, PassCompleted) if pass >= q => Active,
            (Authenticating { pass }, PassCompleted) => Authenticating { pass: pass + 1 },
            (Refreshing { pass }, PassCompleted) if pass >= q => Active,
            (Refreshing { pass }, PassCompleted) => Refreshing { pass: pass + 1 },
            (phase, event) => return Err(KeychainError::IllegalTransition { phase, event }),
        };
        let messages_sent = self.messages_sent + u64::from(event == PassCompleted);
        Ok(Self {
            phase,
            messages_sent,
            ..self
        })
    }
}

pub fn advance_session(state: SessionState, event: SessionEvent) -> Result<SessionState, KeychainError> {
    state.advance(event)
}
