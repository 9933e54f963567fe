use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    Activity, ActivityRecord, LabeledSeller, ReturnReason, SellerHistory, SellerProfile, Timestamp,
    Window, SECONDS_PER_DAY,
};
use crate::error::{Error, Result};
use crate::svm::Label;

/// End of every synthetic observation window (2023-11-14T22:13:20Z).
pub const SYNTHETIC_WINDOW_END: Timestamp = 1_700_000_000;

/// How far fraudulent sellers' behaviour is shifted from the normal population.
///
/// Rates are added to per-order probabilities; `sentiment` is subtracted from
/// the seller's mean social sentiment. Each fraudulent seller scales every
/// shift by an independent factor drawn from [0.6, 1.4].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectSizes {
    pub return_rate: f64,
    pub late_shipment_rate: f64,
    pub listing_error_rate: f64,
    pub complaint_rate: f64,
    pub sentiment: f64,
}

impl Default for EffectSizes {
    fn default() -> Self {
        EffectSizes {
            return_rate: 0.15,
            late_shipment_rate: 0.25,
            listing_error_rate: 0.15,
            complaint_rate: 0.15,
            sentiment: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_sellers: usize,
    pub fraud_fraction: f64,
    pub window_days: u32,
    /// Share of sellers generated with no orders at all.
    pub cold_start_fraction: f64,
    pub effect_sizes: EffectSizes,
    pub rng_seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_sellers: 500,
            fraud_fraction: 0.2,
            window_days: 90,
            cold_start_fraction: 0.05,
            effect_sizes: EffectSizes::default(),
            rng_seed: 42,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_sellers == 0 {
            problems.push("n_sellers must be > 0".to_string());
        }
        if !(0.0..=1.0).contains(&self.fraud_fraction) {
            problems.push(format!("fraud_fraction {} outside [0, 1]", self.fraud_fraction));
        }
        if !(0.0..=1.0).contains(&self.cold_start_fraction) {
            problems.push(format!(
                "cold_start_fraction {} outside [0, 1]",
                self.cold_start_fraction
            ));
        }
        if self.window_days == 0 {
            problems.push("window_days must be > 0".to_string());
        }
        let e = &self.effect_sizes;
        for (name, v) in [
            ("return_rate", e.return_rate),
            ("late_shipment_rate", e.late_shipment_rate),
            ("listing_error_rate", e.listing_error_rate),
            ("complaint_rate", e.complaint_rate),
            ("sentiment", e.sentiment),
        ] {
            if !(0.0..=1.0).contains(&v) {
                problems.push(format!("effect_sizes.{name} {v} outside [0, 1]"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn fraud_count(&self) -> usize {
        (self.n_sellers as f64 * self.fraud_fraction).floor() as usize
    }
}

const FIRST: &[&str] = &[
    "Acme", "Blue", "Crest", "Delta", "Ember", "Fable", "Granite", "Harbor", "Iris", "Juniper",
    "Kestrel", "Lumen", "Maple", "Nova", "Orchid", "Pioneer",
];
const SECOND: &[&str] = &[
    "Traders", "Goods", "Outlet", "Supply", "Emporium", "Bazaar", "Depot", "Works",
];
const STREETS: &[&str] = &[
    "Oak", "Pine", "Cedar", "Elm", "Birch", "Willow", "Lake", "Hill", "River", "Park",
];
const CITIES: &[&str] = &[
    "Springfield", "Riverton", "Lakeside", "Fairview", "Georgetown", "Kingston",
];

/// Per-seller behavioural propensities.
struct Propensity {
    orders: usize,
    return_rate: f64,
    late_rate: f64,
    never_ship_rate: f64,
    listing_error_rate: f64,
    complaint_rate: f64,
    sentiment_mean: f64,
    fraudulent: bool,
}

/// Generates labeled seller histories, deterministic in `config.rng_seed`.
///
/// Exactly `floor(n_sellers · fraud_fraction)` sellers are fraudulent; they
/// draw from distributions shifted by `effect_sizes`.
pub fn generate_synthetic(config: &GeneratorConfig) -> Result<Vec<LabeledSeller>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let n = config.n_sellers;
    let mut fraud = vec![false; n];
    for i in index::sample(&mut rng, n, config.fraud_count()) {
        fraud[i] = true;
    }
    let cold = (n as f64 * config.cold_start_fraction).floor() as usize;
    let mut cold_start = vec![false; n];
    for i in index::sample(&mut rng, n, cold) {
        cold_start[i] = true;
    }

    let window = Window {
        start: SYNTHETIC_WINDOW_END - config.window_days as i64 * SECONDS_PER_DAY,
        end: SYNTHETIC_WINDOW_END,
    };
    let sentiment_noise = Normal::new(0.0, 0.25).expect("valid normal");

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let seller_id = format!("S{:05}", i + 1);
        let profile = random_profile(&mut rng, &seller_id, window.start);
        let p = propensity(&mut rng, fraud[i], cold_start[i], &config.effect_sizes);
        let records = random_records(&mut rng, &seller_id, &p, window, &sentiment_noise);
        let mut history = SellerHistory {
            profile,
            records,
            window,
        };
        history.normalize();
        out.push(LabeledSeller {
            history,
            label: if fraud[i] {
                Label::Fraudulent
            } else {
                Label::Normal
            },
        });
    }
    Ok(out)
}

fn random_profile(rng: &mut ChaCha8Rng, seller_id: &str, window_start: Timestamp) -> SellerProfile {
    let first = FIRST[rng.random_range(0..FIRST.len())];
    let second = SECOND[rng.random_range(0..SECOND.len())];
    let tax_id = rng
        .random_bool(0.8)
        .then(|| format!("TX-{:08}", rng.random_range(0..100_000_000u32)));
    let bank_account_hash = rng
        .random_bool(0.9)
        .then(|| format!("{:016x}", rng.random::<u64>()));
    SellerProfile {
        seller_id: seller_id.to_string(),
        display_name: format!("{first} {second} {}", rng.random_range(1..1000)),
        tax_id,
        bank_account_hash,
        address: format!(
            "{} {} St, {}",
            rng.random_range(1..2000),
            STREETS[rng.random_range(0..STREETS.len())],
            CITIES[rng.random_range(0..CITIES.len())]
        ),
        email_domain: format!("{}{}.example", first.to_lowercase(), rng.random_range(0..10_000)),
        enrolled_at: window_start - rng.random_range(30..1000) * SECONDS_PER_DAY,
    }
}

fn propensity(rng: &mut ChaCha8Rng, fraudulent: bool, cold_start: bool, e: &EffectSizes) -> Propensity {
    let mut shift = |size: f64| {
        if fraudulent {
            size * rng.random_range(0.6..1.4)
        } else {
            0.0
        }
    };
    let return_shift = shift(e.return_rate);
    let late_shift = shift(e.late_shipment_rate);
    let listing_shift = shift(e.listing_error_rate);
    let complaint_shift = shift(e.complaint_rate);
    let sentiment_shift = shift(e.sentiment);
    let orders = if cold_start { 0 } else { rng.random_range(20..=60) };
    Propensity {
        orders,
        return_rate: rng.random_range(0.01..0.08) + return_shift,
        late_rate: rng.random_range(0.0..0.10) + late_shift,
        never_ship_rate: if fraudulent { 0.3 } else { 0.02 },
        listing_error_rate: rng.random_range(0.0..0.08) + listing_shift,
        complaint_rate: rng.random_range(0.0..0.05) + complaint_shift,
        sentiment_mean: rng.random_range(0.1..0.6) - sentiment_shift,
        fraudulent,
    }
}

fn random_records(
    rng: &mut ChaCha8Rng,
    seller_id: &str,
    p: &Propensity,
    window: Window,
    noise: &Normal<f64>,
) -> Vec<ActivityRecord> {
    let span = window.end - window.start;
    let mut records = Vec::new();
    let at = |rng: &mut ChaCha8Rng| window.start + rng.random_range(0..=span);

    for _ in 0..rng.random_range(5..=25) {
        let occurred_at = at(rng);
        records.push(ActivityRecord {
            activity: Activity::Listing {
                declared_attributes_ok: !rng.random_bool(p.listing_error_rate.min(1.0)),
            },
            occurred_at,
        });
    }

    for k in 0..p.orders {
        let occurred_at = at(rng);
        let promised_ship = occurred_at + 2 * SECONDS_PER_DAY;
        let late = rng.random_bool(p.late_rate.min(1.0));
        let actual_ship = if late && rng.random_bool(p.never_ship_rate) {
            None
        } else if late {
            Some(promised_ship + rng.random_range(3_600..5 * SECONDS_PER_DAY))
        } else {
            Some(promised_ship - rng.random_range(0..SECONDS_PER_DAY))
        };
        records.push(ActivityRecord {
            activity: Activity::Order {
                amount: (rng.random_range(5.0..500.0f64) * 100.0).round() / 100.0,
                promised_ship,
                actual_ship,
            },
            occurred_at,
        });

        let later = |rng: &mut ChaCha8Rng| {
            (occurred_at + rng.random_range(SECONDS_PER_DAY..10 * SECONDS_PER_DAY)).min(window.end)
        };
        if rng.random_bool(p.return_rate.min(1.0)) {
            let reason = match (p.fraudulent, rng.random_range(0..4)) {
                (true, 0 | 1) => ReturnReason::NotAsDescribed,
                (true, 2) => ReturnReason::NeverArrived,
                (false, 0 | 1) => ReturnReason::Defective,
                _ => ReturnReason::Other,
            };
            records.push(ActivityRecord {
                activity: Activity::Return {
                    order_ref: format!("{seller_id}-O{k}"),
                    reason,
                },
                occurred_at: later(rng),
            });
        }
        if rng.random_bool(p.complaint_rate.min(1.0)) {
            let severity = if p.fraudulent {
                rng.random_range(2..=5)
            } else {
                rng.random_range(1..=3)
            };
            records.push(ActivityRecord {
                activity: Activity::Complaint { severity },
                occurred_at: later(rng),
            });
        }
    }

    if p.orders > 0 {
        for _ in 0..rng.random_range(1..=5) {
            let sentiment = (p.sentiment_mean + noise.sample(rng)).clamp(-1.0, 1.0);
            let occurred_at = at(rng);
            records.push(ActivityRecord {
                activity: Activity::SocialSignal {
                    sentiment,
                    mentions: rng.random_range(1..=30),
                },
                occurred_at,
            });
        }
    }
    records
}
