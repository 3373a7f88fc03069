//! The coordinator: a passive information table shared by all vehicles.
//!
//! It keeps the FIFO crossing order, resolves each vehicle's preceding
//! (`i_p`) and merging-conflict (`i_c`) neighbors, stores the last reported
//! state of every vehicle, and counts the messages exchanged.
//!
//! The vehicle that most recently crossed the merging point keeps FIFO index
//! 0 until the next one crosses; it still serves as `i_p`/`i_c` of the
//! vehicles behind it and is assumed to cruise at constant speed.

use crate::model::{Lane, NeighborView, Snapshot};

/// One row of the coordinator table.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinatorRecord {
    pub id: usize,
    pub lane: Lane,
    pub t_last: f64,
    /// Next scheduled solve (self-triggered control only).
    pub t_next: Option<f64>,
    pub x_last: f64,
    pub v_last: f64,
    pub u_last: f64,
    /// `(relevant id, x, v)` at this vehicle's last solve (event-triggered
    /// control only).
    pub relevant_snapshots: Vec<(usize, f64, f64)>,
}

impl CoordinatorRecord {
    pub fn snapshot_at(&self, t: f64) -> Snapshot {
        let (x, v) = propagate_forward(self, t);
        Snapshot {
            x,
            v,
            u: self.u_last,
            t_last: self.t_last,
        }
    }
}

/// Constant-control extrapolation of a record to time `t >= t_last`.
pub fn propagate_forward(rec: &CoordinatorRecord, t: f64) -> (f64, f64) {
    let dt = t - rec.t_last;
    (
        rec.x_last + dt * rec.v_last + 0.5 * dt * dt * rec.u_last,
        rec.v_last + dt * rec.u_last,
    )
}

/// Message tallies. `reads` counts neighbor snapshots actually consumed by
/// controllers and must equal `downloads`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MessageCounts {
    pub sync_requests: u64,
    pub uploads: u64,
    pub downloads: u64,
    pub notifications: u64,
    pub reads: u64,
}

impl MessageCounts {
    pub fn total(&self) -> u64 {
        self.sync_requests + self.uploads + self.downloads + self.notifications
    }

    pub fn audit(&self) -> bool {
        self.reads == self.downloads
    }

    pub fn add(&mut self, other: &MessageCounts) {
        self.sync_requests += other.sync_requests;
        self.uploads += other.uploads;
        self.downloads += other.downloads;
        self.notifications += other.notifications;
        self.reads += other.reads;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Message {
    /// Vehicle asks the coordinator to refresh its relevant states.
    SyncRequest { from: usize },
    /// Vehicle stores its row.
    Upload { from: usize },
    /// Coordinator hands `about`'s data to `to`.
    Download { to: usize, about: usize },
    /// Coordinator tells `to` that `about` re-solved.
    Notify { to: usize, about: usize },
}

/// Neighbor ids of one vehicle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NeighborIds {
    pub ip: Option<usize>,
    pub ic: Option<usize>,
}

impl NeighborIds {
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.ip.into_iter().chain(self.ic)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Coordinator {
    /// Active vehicles in FIFO order (index `k` holds FIFO index `k + 1`).
    active: Vec<CoordinatorRecord>,
    departed: Option<CoordinatorRecord>,
    next_id: usize,
    counts: MessageCounts,
}

impl Coordinator {
    pub fn new() -> Self {
        Self {
            next_id: 1,
            ..Default::default()
        }
    }

    /// Appends a vehicle entering at `(x, v)` and returns its stable id.
    pub fn admit(&mut self, lane: Lane, x: f64, v: f64, t: f64) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        self.active.push(CoordinatorRecord {
            id,
            lane,
            t_last: t,
            t_next: None,
            x_last: x,
            v_last: v,
            u_last: 0.0,
            relevant_snapshots: Vec::new(),
        });
        id
    }

    /// Removes the head of the FIFO queue at its crossing state. It replaces
    /// the previously departed vehicle and cruises from here on.
    pub fn depart(&mut self, x: f64, v: f64, t: f64) -> Option<usize> {
        if self.active.is_empty() {
            return None;
        }
        let mut rec = self.active.remove(0);
        rec.x_last = x;
        rec.v_last = v;
        rec.u_last = 0.0;
        rec.t_last = t;
        rec.t_next = None;
        rec.relevant_snapshots.clear();
        let id = rec.id;
        self.departed = Some(rec);
        Some(id)
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Active ids in FIFO order.
    pub fn ids(&self) -> Vec<usize> {
        self.active.iter().map(|r| r.id).collect()
    }

    pub fn departed(&self) -> Option<&CoordinatorRecord> {
        self.departed.as_ref()
    }

    /// FIFO index: 1 for the head, 0 for the departed vehicle.
    pub fn index_of(&self, id: usize) -> Option<usize> {
        if self.departed.as_ref().is_some_and(|d| d.id == id) {
            return Some(0);
        }
        self.active.iter().position(|r| r.id == id).map(|k| k + 1)
    }

    pub fn record(&self, id: usize) -> Option<&CoordinatorRecord> {
        self.active
            .iter()
            .find(|r| r.id == id)
            .or(self.departed.as_ref().filter(|d| d.id == id))
    }

    fn record_mut(&mut self, id: usize) -> Option<&mut CoordinatorRecord> {
        self.active.iter_mut().find(|r| r.id == id)
    }

    fn ordered(&self) -> impl Iterator<Item = &CoordinatorRecord> {
        self.departed.iter().chain(self.active.iter())
    }

    /// `i_p`: nearest earlier vehicle in the same lane. `i_c`: the immediate
    /// FIFO predecessor when it comes from the other lane.
    pub fn neighbors(&self, id: usize) -> NeighborIds {
        let order: Vec<&CoordinatorRecord> = self.ordered().collect();
        let Some(pos) = order.iter().position(|r| r.id == id) else {
            return NeighborIds::default();
        };
        let lane = order[pos].lane;
        let ip = order[..pos].iter().rev().find(|r| r.lane == lane).map(|r| r.id);
        let ic = pos
            .checked_sub(1)
            .map(|p| order[p])
            .filter(|r| r.lane != lane)
            .map(|r| r.id);
        NeighborIds { ip, ic }
    }

    /// Active vehicles `j` with `id` in their neighbor set.
    pub fn dependents(&self, id: usize) -> Vec<usize> {
        self.active
            .iter()
            .map(|r| r.id)
            .filter(|&j| j != id && self.neighbors(j).iter().any(|r| r == id))
            .collect()
    }

    /// Stores a vehicle's own row.
    pub fn upload(&mut self, id: usize, x: f64, v: f64, u: f64, t: f64, t_next: Option<f64>) {
        self.counts.uploads += 1;
        if let Some(r) = self.record_mut(id) {
            r.x_last = x;
            r.v_last = v;
            r.u_last = u;
            r.t_last = t;
            r.t_next = t_next;
        }
    }

    /// Hands out the stored row of `about`, extrapolated to `t`, with its
    /// next scheduled solve.
    pub fn download(&mut self, about: usize, t: f64) -> Option<(Snapshot, Option<f64>)> {
        let rec = self.record(about)?;
        let out = (rec.snapshot_at(t), rec.t_next);
        self.counts.downloads += 1;
        Some(out)
    }

    /// Synchronization before a solve on current measurements: vehicle `id`
    /// requests the states of its relevant vehicles (`current`, measured by
    /// them at `t`) and stores them with its own row. With `notify_dependents`
    /// (event-triggered control) the coordinator also notifies every
    /// dependent. Returns the neighbor view and messages.
    pub fn sync(
        &mut self,
        id: usize,
        own: (f64, f64, f64),
        t: f64,
        current: impl Fn(usize) -> Option<Snapshot>,
        notify_dependents: bool,
    ) -> (NeighborView, Vec<Message>) {
        let mut msgs = vec![Message::SyncRequest { from: id }];
        self.counts.sync_requests += 1;
        let nbr = self.neighbors(id);
        let mut view = NeighborView::none();
        let mut snaps = Vec::new();
        for (slot, about) in [(0, nbr.ip), (1, nbr.ic)] {
            let Some(about) = about else { continue };
            let snap = if self.index_of(about) == Some(0) {
                // the departed vehicle no longer reports; use its record
                self.record(about).map(|r| r.snapshot_at(t))
            } else {
                current(about)
            };
            let Some(snap) = snap else { continue };
            self.counts.downloads += 1;
            msgs.push(Message::Download { to: id, about });
            snaps.push((about, snap.x, snap.v));
            if slot == 0 {
                view.ip = Some(snap);
            } else {
                view.ic = Some(snap);
            }
        }
        self.counts.uploads += 1;
        msgs.push(Message::Upload { from: id });
        if let Some(r) = self.record_mut(id) {
            (r.x_last, r.v_last, r.u_last) = own;
            r.t_last = t;
            r.relevant_snapshots = snaps;
        }
        if notify_dependents {
            msgs.extend(self.notify(id));
        }
        (view, msgs)
    }

    /// Notifications to the dependents of `about`.
    pub fn notify(&mut self, about: usize) -> Vec<Message> {
        let deps = self.dependents(about);
        self.counts.notifications += deps.len() as u64;
        deps.into_iter().map(|to| Message::Notify { to, about }).collect()
    }

    /// Records that a controller consumed `n` neighbor snapshots.
    pub fn count_reads(&mut self, n: usize) {
        self.counts.reads += n as u64;
    }

    pub fn counts(&self) -> MessageCounts {
        self.counts
    }

    /// Updates the stored control after a solve that already synchronized.
    pub fn set_control(&mut self, id: usize, u: f64) {
        if let Some(r) = self.record_mut(id) {
            r.u_last = u;
        }
    }
}
