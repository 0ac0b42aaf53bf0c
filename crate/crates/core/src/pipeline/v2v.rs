//! Lossy, delayed V2V link carrying the lead's speed.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct V2vChannelConfig {
    pub drop_probability: f64,
    pub delay_ticks: u64,
    /// Half-open `[start, end)` tick ranges during which nothing gets through.
    pub outage_windows: Vec<(u64, u64)>,
    /// Maximum message age, in ticks, still considered fresh.
    pub freshness_threshold: u64,
    pub seed: u64,
}

impl Default for V2vChannelConfig {
    fn default() -> Self {
        Self {
            drop_probability: 0.0,
            delay_ticks: 0,
            outage_windows: Vec::new(),
            freshness_threshold: 2,
            seed: 0,
        }
    }
}

impl V2vChannelConfig {
    /// A link that never delivers anything.
    pub fn dead() -> Self {
        Self {
            outage_windows: vec![(0, u64::MAX)],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(SimError::InvalidConfig("v2v drop_probability must be in [0, 1]".into()));
        }
        if self.freshness_threshold < 1 {
            return Err(SimError::InvalidConfig("v2v freshness_threshold must be >= 1".into()));
        }
        let mut windows = self.outage_windows.clone();
        windows.sort();
        for w in &windows {
            if w.0 >= w.1 {
                return Err(SimError::InvalidConfig(format!("empty outage window {w:?}")));
            }
        }
        if windows.windows(2).any(|p| p[1].0 < p[0].1) {
            return Err(SimError::InvalidConfig("v2v outage windows overlap".into()));
        }
        Ok(())
    }

    pub fn in_outage(&self, tick: u64) -> bool {
        self.outage_windows.iter().any(|&(s, e)| tick >= s && tick < e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V2vMessage {
    pub lead_speed: f64,
    pub seq: u64,
    pub sent_tick: u64,
}

#[derive(Debug, Clone)]
pub struct V2vChannel {
    cfg: V2vChannelConfig,
    rng: ChaCha8Rng,
    in_flight: VecDeque<(u64, V2vMessage)>,
}

impl V2vChannel {
    pub fn new(cfg: V2vChannelConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self {
            cfg,
            rng,
            in_flight: VecDeque::new(),
        }
    }

    pub fn config(&self) -> &V2vChannelConfig {
        &self.cfg
    }

    /// Offers `msg` (if any) sent at `tick` and returns the newest message
    /// arriving at `tick`. Ticks must be passed in non-decreasing order.
    pub fn channel_step(&mut self, msg: Option<V2vMessage>, tick: u64) -> Option<V2vMessage> {
        if let Some(msg) = msg {
            // one draw per offered message keeps the loss pattern independent
            // of the outage schedule
            let lost = self.rng.random::<f64>() < self.cfg.drop_probability;
            if !lost && !self.cfg.in_outage(tick) {
                self.in_flight.push_back((tick + self.cfg.delay_ticks, msg));
            }
        }
        let mut delivered = None;
        while let Some(&(due, m)) = self.in_flight.front() {
            if due > tick {
                break;
            }
            self.in_flight.pop_front();
            delivered = Some(m);
        }
        delivered
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(tick: u64) -> V2vMessage {
        V2vMessage {
            lead_speed: tick as f64 * 0.1,
            seq: tick,
            sent_tick: tick,
        }
    }

    fn pattern(cfg: V2vChannelConfig, n: u64) -> Vec<Option<u64>> {
        let mut ch = V2vChannel::new(cfg);
        (0..n).map(|t| ch.channel_step(Some(msg(t)), t).map(|m| m.seq)).collect()
    }

    #[test]
    fn perfect_channel_delivers_same_tick() {
        let p = pattern(V2vChannelConfig::default(), 50);
        assert!(p.iter().enumerate().all(|(t, d)| *d == Some(t as u64)));
    }

    #[test]
    fn outage_blocks_delivery() {
        let cfg = V2vChannelConfig {
            outage_windows: vec![(10, 20)],
            ..V2vChannelConfig::default()
        };
        let p = pattern(cfg, 30);
        assert!(p[10..20].iter().all(Option::is_none));
        assert_eq!(p[9], Some(9));
        assert_eq!(p[20], Some(20));
    }

    #[test]
    fn delay_shifts_delivery_in_order() {
        let cfg = V2vChannelConfig {
            delay_ticks: 3,
            ..V2vChannelConfig::default()
        };
        let p = pattern(cfg, 20);
        assert!(p[..3].iter().all(Option::is_none));
        for (t, got) in p.iter().enumerate().skip(3) {
            assert_eq!(*got, Some(t as u64 - 3));
        }
    }

    #[test]
    fn seeded_drops_are_reproducible() {
        let cfg = V2vChannelConfig {
            drop_probability: 0.3,
            seed: 7,
            ..V2vChannelConfig::default()
        };
        let a = pattern(cfg.clone(), 500);
        let b = pattern(cfg, 500);
        assert_eq!(a, b);
        let lost = a.iter().filter(|d| d.is_none()).count();
        assert!((100..200).contains(&lost), "lost {lost} of 500");
    }

    #[test]
    fn full_drop_probability_loses_everything() {
        let cfg = V2vChannelConfig {
            drop_probability: 1.0,
            ..V2vChannelConfig::default()
        };
        assert!(pattern(cfg, 100).iter().all(Option::is_none));
    }

    #[test]
    fn validation() {
        assert!(V2vChannelConfig::default().validate().is_ok());
        let overlapping = V2vChannelConfig {
            outage_windows: vec![(5, 15), (10, 20)],
            ..V2vChannelConfig::default()
        };
        assert!(overlapping.validate().is_err());
        let zero_fresh = V2vChannelConfig {
            freshness_threshold: 0,
            ..V2vChannelConfig::default()
        };
        assert!(zero_fresh.validate().is_err());
    }
}
