//! Live variables and one-shot triggers.
//!
//! These types carry no transport. A [`LiveVar`] is a cheaply cloneable
//! handle to shared state; the control plane's listener holds one clone and
//! writes through it while the optimization loop holds another and polls.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::error::ValueError;
use crate::value::{LiveValue, ValueType};

struct VarState {
    tag: String,
    kind: ValueType,
    value: RwLock<LiveValue>,
    dirty: AtomicBool,
    generation: AtomicU64,
}

/// A typed variable whose value may be replaced at any time by another
/// execution context.
#[derive(Clone)]
pub struct LiveVar {
    state: Arc<VarState>,
}

impl LiveVar {
    /// Creates a variable holding `initial`. The variable starts clean:
    /// `is_changed` returns false until the first successful set.
    pub fn new(tag: impl Into<String>, initial: LiveValue) -> Result<Self, ValueError> {
        initial.validate()?;
        let tag = tag.into();
        Ok(Self {
            state: Arc::new(VarState {
                kind: initial.kind(),
                tag,
                value: RwLock::new(initial),
                dirty: AtomicBool::new(false),
                generation: AtomicU64::new(0),
            }),
        })
    }

    pub fn tag(&self) -> &str {
        &self.state.tag
    }

    pub fn kind(&self) -> ValueType {
        self.state.kind
    }

    /// Most recently committed value. Does not touch the change flag.
    pub fn current(&self) -> LiveValue {
        self.state
            .value
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Current value as f64, for numeric variables.
    pub fn current_f64(&self) -> Option<f64> {
        self.current().as_f64()
    }

    /// Replaces the value and marks the variable dirty. Returns the value
    /// that was overwritten.
    ///
    /// Integers are widened when the variable is a float; any other kind
    /// difference is rejected and the old value is kept.
    pub fn set(&self, v: LiveValue) -> Result<LiveValue, ValueError> {
        let v = v.coerce_to(self.state.kind)?;
        let mut slot = self.state.value.write().unwrap_or_else(|e| e.into_inner());
        let old = std::mem::replace(&mut *slot, v);
        self.state.generation.fetch_add(1, Ordering::SeqCst);
        // Flag is raised while the write lock is held so a reader that sees
        // dirty=true is guaranteed to read the new value afterwards.
        self.state.dirty.store(true, Ordering::SeqCst);
        Ok(old)
    }

    /// Atomic test-and-clear of the change flag.
    pub fn is_changed(&self) -> bool {
        self.state.dirty.swap(false, Ordering::SeqCst)
    }

    /// Number of successful sets since creation.
    pub fn generation(&self) -> u64 {
        self.state.generation.load(Ordering::SeqCst)
    }

    /// True when two handles refer to the same variable.
    pub fn same_as(&self, other: &LiveVar) -> bool {
        Arc::ptr_eq(&self.state, &other.state)
    }
}

impl fmt::Debug for LiveVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveVar")
            .field("tag", &self.state.tag)
            .field("value", &self.current())
            .field("generation", &self.generation())
            .finish()
    }
}

struct TriggerState {
    tag: String,
    armed: AtomicBool,
}

/// A one-shot flag: armed externally, observed true exactly once.
#[derive(Clone)]
pub struct LiveTrigger {
    state: Arc<TriggerState>,
}

impl LiveTrigger {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            state: Arc::new(TriggerState {
                tag: tag.into(),
                armed: AtomicBool::new(false),
            }),
        }
    }

    pub fn tag(&self) -> &str {
        &self.state.tag
    }

    /// Arms the trigger. Returns true when this call performed the
    /// disarmed to armed transition; firing an armed trigger is a no-op.
    pub fn fire(&self) -> bool {
        !self.state.armed.swap(true, Ordering::SeqCst)
    }

    /// Returns true once per arming and disarms.
    pub fn consume(&self) -> bool {
        self.state.armed.swap(false, Ordering::SeqCst)
    }

    pub fn is_armed(&self) -> bool {
        self.state.armed.load(Ordering::SeqCst)
    }
}

impl fmt::Debug for LiveTrigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveTrigger")
            .field("tag", &self.state.tag)
            .field("armed", &self.is_armed())
            .finish()
    }
}
