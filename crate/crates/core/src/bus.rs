//! Inter-vehicle broadcast bus.
//!
//! Every vehicle owns one channel and is its only writer; everyone else reads
//! it. A message published during step `t` becomes visible to every other
//! vehicle at step `t + 1` and expires after that step unless republished.
//!
//! Each channel has two slots. `publish` writes the *current* slot under that
//! channel's own lock; `snapshot` reads only the *visible* slots, so readers
//! never see same-step publishes. `advance` needs `&mut self`, which makes it
//! the barrier between steps.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Message, VehicleId};
use crate::sim::Point;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BusError {
    #[error("a bus needs at least one vehicle")]
    NoVehicles,
    #[error("vehicle {id} does not exist on a bus of {count}")]
    UnknownVehicle { id: VehicleId, count: usize },
    #[error("drop probability must be within [0, 1], got {0}")]
    BadProbability(String),
}

/// Running totals of non-empty traffic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BusStats {
    /// Non-empty messages committed by `advance`.
    pub published: u64,
    /// Non-empty entries handed out by `snapshot`.
    pub delivered: u64,
}

/// Common surface of the lossless bus and its lossy decorator.
pub trait Broadcast: Send + Sync {
    fn vehicle_count(&self) -> usize;
    fn publish(&self, id: VehicleId, msg: Message) -> Result<(), BusError>;
    fn snapshot(&self, reader: VehicleId) -> Result<Vec<(VehicleId, Message)>, BusError>;
    fn advance(&mut self);
    fn stats(&self) -> BusStats;
    /// Vehicle positions for distance-limited delivery. The lossless bus
    /// ignores them.
    fn set_positions(&mut self, _positions: &[Point]) {}
}

#[derive(Debug)]
pub struct PlatoonBus {
    current: Vec<Mutex<Message>>,
    visible: Vec<Message>,
    published: u64,
    delivered: AtomicU64,
}

impl PlatoonBus {
    pub fn new(count: usize) -> Result<Self, BusError> {
        if count == 0 {
            return Err(BusError::NoVehicles);
        }
        Ok(PlatoonBus {
            current: (0..count).map(|_| Mutex::new(Message::empty())).collect(),
            visible: vec![Message::empty(); count],
            published: 0,
            delivered: AtomicU64::new(0),
        })
    }

    fn check(&self, id: VehicleId) -> Result<(), BusError> {
        if id.0 < self.visible.len() {
            Ok(())
        } else {
            Err(BusError::UnknownVehicle {
                id,
                count: self.visible.len(),
            })
        }
    }

    /// Visible message of `sender`'s channel.
    pub fn visible(&self, sender: VehicleId) -> Result<&Message, BusError> {
        self.check(sender)?;
        Ok(&self.visible[sender.0])
    }
}

impl Broadcast for PlatoonBus {
    fn vehicle_count(&self) -> usize {
        self.visible.len()
    }

    /// Overwrites the owner's channel for this step; the last write wins.
    fn publish(&self, id: VehicleId, msg: Message) -> Result<(), BusError> {
        self.check(id)?;
        let mut slot = self.current[id.0].lock().unwrap_or_else(|e| e.into_inner());
        *slot = msg;
        Ok(())
    }

    /// Last step's messages from every other vehicle, in ascending id order.
    fn snapshot(&self, reader: VehicleId) -> Result<Vec<(VehicleId, Message)>, BusError> {
        self.check(reader)?;
        let out: Vec<_> = self
            .visible
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != reader.0)
            .map(|(i, m)| (VehicleId(i), m.clone()))
            .collect();
        let n = out.iter().filter(|(_, m)| !m.is_empty()).count() as u64;
        self.delivered.fetch_add(n, Ordering::Relaxed);
        Ok(out)
    }

    fn advance(&mut self) {
        for (slot, vis) in self.current.iter_mut().zip(self.visible.iter_mut()) {
            let slot = slot.get_mut().unwrap_or_else(|e| e.into_inner());
            *vis = std::mem::take(slot);
            if !vis.is_empty() {
                self.published += 1;
            }
        }
    }

    fn stats(&self) -> BusStats {
        BusStats {
            published: self.published,
            delivered: self.delivered.load(Ordering::Relaxed),
        }
    }
}

/// Decorator that loses deliveries on purpose.
///
/// Each `(sender, receiver)` delivery is dropped independently with
/// `drop_probability`, and deliveries between vehicles farther apart than
/// `range_limit` are always dropped. A dropped delivery shows up as an empty
/// message. Drop decisions are a pure function of the seed, the step index
/// and the vehicle pair, so results do not depend on call order or threads.
#[derive(Debug)]
pub struct LossyBus {
    inner: PlatoonBus,
    drop_probability: f64,
    range_limit: Option<f64>,
    seed: u64,
    step: u64,
    positions: Vec<Point>,
    delivered: AtomicU64,
}

impl LossyBus {
    pub fn new(
        inner: PlatoonBus,
        drop_probability: f64,
        range_limit: Option<f64>,
        seed: u64,
    ) -> Result<Self, BusError> {
        if !(0.0..=1.0).contains(&drop_probability) {
            return Err(BusError::BadProbability(drop_probability.to_string()));
        }
        let n = inner.vehicle_count();
        Ok(LossyBus {
            inner,
            drop_probability,
            range_limit,
            seed,
            step: 0,
            positions: vec![Point::default(); n],
            delivered: AtomicU64::new(0),
        })
    }

    fn dropped(&self, sender: usize, receiver: usize) -> bool {
        if let Some(limit) = self.range_limit {
            let (a, b) = (self.positions[sender], self.positions[receiver]);
            if a.sub(b).norm() > limit {
                return true;
            }
        }
        if self.drop_probability <= 0.0 {
            return false;
        }
        let key = self
            .seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(self.step)
            .rotate_left(17)
            ^ (((sender as u64) << 32) | receiver as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.gen::<f64>() < self.drop_probability
    }
}

impl Broadcast for LossyBus {
    fn vehicle_count(&self) -> usize {
        self.inner.vehicle_count()
    }

    fn publish(&self, id: VehicleId, msg: Message) -> Result<(), BusError> {
        self.inner.publish(id, msg)
    }

    fn snapshot(&self, reader: VehicleId) -> Result<Vec<(VehicleId, Message)>, BusError> {
        self.inner.check(reader)?;
        let out: Vec<_> = self
            .inner
            .visible
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != reader.0)
            .map(|(i, m)| {
                if self.dropped(i, reader.0) {
                    (VehicleId(i), Message::empty())
                } else {
                    (VehicleId(i), m.clone())
                }
            })
            .collect();
        let n = out.iter().filter(|(_, m)| !m.is_empty()).count() as u64;
        self.delivered.fetch_add(n, Ordering::Relaxed);
        Ok(out)
    }

    fn advance(&mut self) {
        self.inner.advance();
        self.step += 1;
    }

    fn stats(&self) -> BusStats {
        BusStats {
            published: self.inner.published,
            delivered: self.delivered.load(Ordering::Relaxed),
        }
    }

    fn set_positions(&mut self, positions: &[Point]) {
        let n = self.positions.len().min(positions.len());
        self.positions[..n].copy_from_slice(&positions[..n]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(s: &str) -> Message {
        Message::new(s).unwrap()
    }

    fn texts(v: &[(VehicleId, Message)]) -> Vec<(usize, &str)> {
        v.iter().map(|(id, m)| (id.0, m.as_str())).collect()
    }

    #[test]
    fn new_bus_is_empty() {
        let bus = PlatoonBus::new(3).unwrap();
        assert_eq!(
            texts(&bus.snapshot(VehicleId(1)).unwrap()),
            vec![(0, ""), (2, "")]
        );
        let solo = PlatoonBus::new(1).unwrap();
        assert!(solo.snapshot(VehicleId(0)).unwrap().is_empty());
        assert_eq!(PlatoonBus::new(0).unwrap_err(), BusError::NoVehicles);
    }

    #[test]
    fn publish_is_visible_next_step_only() {
        let mut bus = PlatoonBus::new(3).unwrap();
        bus.publish(VehicleId(1), msg("faster")).unwrap();
        assert_eq!(
            texts(&bus.snapshot(VehicleId(0)).unwrap()),
            vec![(1, ""), (2, "")]
        );
        bus.advance();
        assert_eq!(
            texts(&bus.snapshot(VehicleId(0)).unwrap()),
            vec![(1, "faster"), (2, "")]
        );
        assert_eq!(
            texts(&bus.snapshot(VehicleId(1)).unwrap()),
            vec![(0, ""), (2, "")]
        );
        bus.advance();
        assert_eq!(
            texts(&bus.snapshot(VehicleId(0)).unwrap()),
            vec![(1, ""), (2, "")]
        );
    }

    #[test]
    fn last_write_wins() {
        let mut bus = PlatoonBus::new(2).unwrap();
        bus.publish(VehicleId(0), msg("a")).unwrap();
        bus.publish(VehicleId(0), msg("b")).unwrap();
        bus.advance();
        assert_eq!(texts(&bus.snapshot(VehicleId(1)).unwrap()), vec![(0, "b")]);
        assert_eq!(bus.stats().published, 1);
        assert_eq!(bus.stats().delivered, 1);
    }

    #[test]
    fn unknown_ids_rejected() {
        let bus = PlatoonBus::new(3).unwrap();
        assert!(matches!(
            bus.publish(VehicleId(7), msg("x")),
            Err(BusError::UnknownVehicle { .. })
        ));
        assert!(bus.snapshot(VehicleId(3)).is_err());
    }

    #[test]
    fn lossy_extremes() {
        let mut none = LossyBus::new(PlatoonBus::new(3).unwrap(), 0.0, None, 1).unwrap();
        let mut all = LossyBus::new(PlatoonBus::new(3).unwrap(), 1.0, None, 1).unwrap();
        for bus in [&mut none as &mut dyn Broadcast, &mut all] {
            bus.publish(VehicleId(0), msg("hi")).unwrap();
            bus.publish(VehicleId(2), msg("yo")).unwrap();
            bus.advance();
        }
        assert_eq!(
            texts(&none.snapshot(VehicleId(1)).unwrap()),
            vec![(0, "hi"), (2, "yo")]
        );
        assert_eq!(
            texts(&all.snapshot(VehicleId(1)).unwrap()),
            vec![(0, ""), (2, "")]
        );
        assert!(LossyBus::new(PlatoonBus::new(1).unwrap(), 1.5, None, 0).is_err());
    }

    #[test]
    fn range_limit_drops_far_peers() {
        let mut bus = LossyBus::new(PlatoonBus::new(3).unwrap(), 0.0, Some(10.0), 0).unwrap();
        bus.set_positions(&[
            Point::new(0.0, 0.0),
            Point::new(5.0, 0.0),
            Point::new(50.0, 0.0),
        ]);
        bus.publish(VehicleId(1), msg("near")).unwrap();
        bus.publish(VehicleId(2), msg("far")).unwrap();
        bus.advance();
        assert_eq!(
            texts(&bus.snapshot(VehicleId(0)).unwrap()),
            vec![(1, "near"), (2, "")]
        );
    }
}
