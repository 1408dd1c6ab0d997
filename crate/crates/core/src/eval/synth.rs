//! Seeded synthetic city with a known log-linear pricing function.

use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    write_listings, write_pois, write_reviews, CorpusError, ListingRecord, ListingTable, PoiCategory,
    PoiRecord, PoiTable, ReviewDoc, ReviewTable,
};
use crate::nn::sigmoid;
use crate::rng::Rng as ChaRng;
use crate::spatial::{build_spatial_graph, GeoPoint};

pub const POSITIVE_WORDS: [&str; 20] = [
    "great", "clean", "comfortable", "friendly", "wonderful", "excellent", "lovely", "spacious", "perfect",
    "amazing", "helpful", "cozy", "convenient", "beautiful", "fantastic", "pleasant", "welcoming", "tidy",
    "relaxing", "charming",
];

pub const NEGATIVE_WORDS: [&str; 20] = [
    "dirty", "noisy", "rude", "terrible", "awful", "broken", "smelly", "cramped", "disappointing",
    "uncomfortable", "poor", "bad", "worst", "unhelpful", "filthy", "cold", "horrible", "moldy", "overpriced",
    "unresponsive",
];

const UPSCALE_WORDS: [&str; 12] = [
    "luxury", "elegant", "designer", "premium", "marble", "panoramic", "renovated", "boutique", "stylish",
    "gourmet", "skyline", "penthouse",
];

const BUDGET_WORDS: [&str; 12] = [
    "basic", "simple", "budget", "compact", "shared", "plain", "economical", "modest", "older", "functional",
    "hostel", "bunk",
];

const HOST_PRO_WORDS: [&str; 8] = [
    "professional", "experienced", "superhost", "concierge", "multilingual", "attentive", "dedicated", "certified",
];

const HOST_CASUAL_WORDS: [&str; 8] = [
    "student", "casual", "occasional", "beginner", "parttime", "busy", "traveling", "newcomer",
];

const LISTING_FILLER: [&str; 32] = [
    "apartment", "room", "located", "near", "subway", "station", "kitchen", "bedroom", "with", "a", "the", "in",
    "district", "walk", "minutes", "to", "and", "floor", "building", "window", "city", "street", "for", "guests",
    "wifi", "shower", "sofa", "desk", "quiet", "area", "metro", "park",
];

const HOST_FILLER: [&str; 16] = [
    "i", "am", "love", "to", "meet", "people", "from", "all", "over", "the", "world", "my", "family", "work",
    "in", "enjoy",
];

const REVIEW_NOUNS: [&str; 12] = [
    "room", "host", "place", "apartment", "bed", "bathroom", "kitchen", "stay", "location", "view",
    "neighborhood", "flat",
];

const REVIEW_FILLER: [&str; 10] = ["the", "was", "and", "very", "really", "we", "found", "our", "overall", "a"];

/// Per-category weight of `log1p(POIs within 1 km)` in the spatial score.
const CATEGORY_WEIGHTS: [f64; 8] = [0.5, 0.4, 0.6, 0.5, 0.7, 0.9, 0.3, 0.4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_listings: usize,
    pub pois_per_category: usize,
    pub min_reviews: usize,
    pub max_reviews: usize,
    pub seed: u64,
    /// Weight of the statistical score in log price.
    pub stat_w: f64,
    /// Weight of the latent text score in log price.
    pub text_w: f64,
    /// Weight of the POI-density score in log price.
    pub spatial_w: f64,
    /// Standard deviation of the log-price noise.
    pub noise_sd: f64,
    pub base_price: f64,
    pub center_latitude: f64,
    pub center_longitude: f64,
    /// Half-widths of the city rectangle in degrees.
    pub half_extent_latitude: f64,
    pub half_extent_longitude: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_listings: 2000,
            pois_per_category: 400,
            min_reviews: 1,
            max_reviews: 10,
            seed: 42,
            stat_w: 0.25,
            text_w: 0.22,
            spatial_w: 0.22,
            noise_sd: 0.08,
            base_price: 400.0,
            center_latitude: 39.9042,
            center_longitude: 116.4074,
            half_extent_latitude: 0.1,
            half_extent_longitude: 0.12,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        let weights = [self.stat_w, self.text_w, self.spatial_w, self.noise_sd];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err("signal weights and noise_sd must be finite and non-negative".into());
        }
        if self.n_listings < 10 {
            return Err("n_listings must be at least 10".into());
        }
        if self.min_reviews > self.max_reviews {
            return Err("min_reviews exceeds max_reviews".into());
        }
        if !(self.base_price > 0.0) {
            return Err("base_price must be positive".into());
        }
        if !(self.half_extent_latitude > 0.0 && self.half_extent_longitude > 0.0) {
            return Err("city extent must be positive".into());
        }
        let c = GeoPoint::new(self.center_latitude, self.center_longitude);
        let corner = GeoPoint::new(
            self.center_latitude.abs() + self.half_extent_latitude,
            self.center_longitude.abs() + self.half_extent_longitude,
        );
        if !c.is_valid() || !corner.is_valid() {
            return Err("city rectangle leaves the valid coordinate range".into());
        }
        Ok(())
    }
}

/// Ground-truth components of each listing's log price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentScore {
    pub listing_id: String,
    pub f_stat: f64,
    pub f_text: f64,
    pub f_spatial: f64,
    pub noise: f64,
    pub log_price: f64,
}

#[derive(Debug)]
pub struct SynthDataset {
    pub listings: ListingTable,
    pub reviews: ReviewTable,
    pub pois: PoiTable,
    pub latent: Vec<LatentScore>,
}

pub const LISTINGS_FILE: &str = "listings.csv";
pub const REVIEWS_FILE: &str = "reviews.csv";
pub const POIS_FILE: &str = "pois.csv";
pub const LATENT_FILE: &str = "latent_scores.csv";
pub const SYNTH_FILES: [&str; 4] = [LISTINGS_FILE, REVIEWS_FILE, POIS_FILE, LATENT_FILE];

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    for x in v.iter_mut() {
        *x = if sd > 0.0 { (*x - mean) / sd } else { 0.0 };
    }
}

fn normal(rng: &mut ChaRng) -> f64 {
    StandardNormal.sample(rng)
}

fn join(words: Vec<&str>) -> String {
    words.join(" ")
}

/// Generates listings, reviews, POIs and the latent price components.
pub fn synth_generate(config: &SynthConfig) -> Result<SynthDataset, String> {
    config.validate()?;
    let mut rng = ChaRng::seed_from_u64(config.seed);
    let (lat0, lon0) = (config.center_latitude, config.center_longitude);
    let (dlat, dlon) = (config.half_extent_latitude, config.half_extent_longitude);
    let clamp_point = |lat: f64, lon: f64| {
        (
            lat.clamp(lat0 - dlat, lat0 + dlat),
            lon.clamp(lon0 - dlon, lon0 + dlon),
        )
    };

    // POIs: per category a few Gaussian hotspots plus uniform background.
    let mut hotspots: Vec<(f64, f64)> = Vec::new();
    let mut poi_records = Vec::new();
    for category in PoiCategory::ALL {
        let centers: Vec<(f64, f64)> = (0..4)
            .map(|_| {
                (
                    lat0 + rng.random_range(-0.8..0.8) * dlat,
                    lon0 + rng.random_range(-0.8..0.8) * dlon,
                )
            })
            .collect();
        hotspots.extend(&centers);
        for j in 0..config.pois_per_category {
            let (lat, lon) = if rng.random_bool(0.75) {
                let &(clat, clon) = centers.choose(&mut rng).expect("four centers");
                clamp_point(clat + 0.012 * normal(&mut rng), clon + 0.015 * normal(&mut rng))
            } else {
                (
                    lat0 + rng.random_range(-dlat..dlat),
                    lon0 + rng.random_range(-dlon..dlon),
                )
            };
            poi_records.push(PoiRecord {
                poi_id: format!("poi-{}-{j:04}", category.slug()),
                category,
                latitude: lat,
                longitude: lon,
            });
        }
    }
    let pois = PoiTable {
        records: poi_records,
        rejected: vec![],
    };

    // Listing locations: half near some hotspot, half uniform.
    let n = config.n_listings;
    let locations: Vec<(String, GeoPoint)> = (0..n)
        .map(|i| {
            let (lat, lon) = if rng.random_bool(0.5) {
                let &(clat, clon) = hotspots.choose(&mut rng).expect("hotspots exist");
                clamp_point(clat + 0.02 * normal(&mut rng), clon + 0.025 * normal(&mut rng))
            } else {
                (
                    lat0 + rng.random_range(-dlat..dlat),
                    lon0 + rng.random_range(-dlon..dlon),
                )
            };
            (format!("L{i:05}"), GeoPoint::new(lat, lon))
        })
        .collect();

    let mut f_spatial = vec![0.0; n];
    for (k, category) in PoiCategory::ALL.into_iter().enumerate() {
        let g = build_spatial_graph(&locations, &pois.of_category(category), category, 1.0);
        for (i, d) in g.degrees().into_iter().enumerate() {
            f_spatial[i] += CATEGORY_WEIGHTS[k] * (d as f64).ln_1p();
        }
    }
    standardize(&mut f_spatial);

    // Statistical attributes. Latitude and longitude are deliberately absent.
    let stat_columns: Vec<String> = [
        "accommodates",
        "bedrooms",
        "bathrooms",
        "beds",
        "guests_included",
        "security_deposit",
        "cleaning_fee",
        "minimum_nights",
        "availability_365",
        "host_listings_count",
        "host_is_superhost",
        "host_identity_verified",
        "instant_bookable",
        "review_scores_rating",
        "host_response_rate",
        "extra_people",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let mut raw_stats: Vec<Vec<Option<f64>>> = Vec::with_capacity(n);
    let mut f_stat = vec![0.0; n];
    for fs in f_stat.iter_mut() {
        let size = normal(&mut rng);
        let accommodates = (3.0 + 1.5 * size + 0.5 * normal(&mut rng)).round().clamp(1.0, 10.0);
        let bedrooms = (accommodates / 2.0 + 0.5 * normal(&mut rng)).round().clamp(0.0, 5.0);
        let bathrooms = ((bedrooms / 2.0 + 0.3 * normal(&mut rng)) * 2.0).round().clamp(1.0, 6.0) / 2.0;
        let beds = (accommodates / 1.6 + 0.5 * normal(&mut rng)).round().clamp(1.0, 8.0);
        let guests = rng.random_range(1.0..=accommodates).round();
        let deposit = (rng.random_range(0.0..2000.0f64) / 50.0).round() * 50.0;
        let cleaning = (rng.random_range(0.0..300.0f64)).round();
        let min_nights = rng.random_range(1..=7) as f64;
        let availability = rng.random_range(0..=365) as f64;
        let host_listings = rng.random_range(1..=20) as f64;
        let superhost = rng.random_bool(0.3);
        let verified = rng.random_bool(0.7);
        let instant = rng.random_bool(0.5);
        let rating = (85.0 + 7.0 * normal(&mut rng)).round().clamp(20.0, 100.0);
        let response = (90.0 + 10.0 * normal(&mut rng)).round().clamp(0.0, 100.0);
        let extra = rng.random_range(0..=10) as f64 * 10.0;
        *fs = 0.35 * (accommodates - 3.0)
            + 0.35 * (bedrooms - 1.5)
            + 0.5 * (bathrooms - 1.0)
            + 0.6 * f64::from(u8::from(superhost))
            + 0.3 * f64::from(u8::from(instant))
            + 0.04 * (rating - 85.0)
            + 0.0004 * (deposit - 1000.0);
        let rating = (!rng.random_bool(0.1)).then_some(rating);
        let response = (!rng.random_bool(0.35)).then_some(response);
        raw_stats.push(vec![
            Some(accommodates),
            Some(bedrooms),
            Some(bathrooms),
            Some(beds),
            Some(guests),
            Some(deposit),
            Some(cleaning),
            Some(min_nights),
            Some(availability),
            Some(host_listings),
            Some(f64::from(u8::from(superhost))),
            Some(f64::from(u8::from(verified))),
            Some(f64::from(u8::from(instant))),
            rating,
            response,
            Some(extra),
        ]);
    }
    standardize(&mut f_stat);

    let mut f_text: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    standardize(&mut f_text);

    let start = NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date");
    let span_days = (NaiveDate::from_ymd_opt(2019, 6, 30).expect("valid date") - start).num_days();
    let noise_dist = Normal::new(0.0, 1.0).expect("unit normal");

    let mut records = Vec::with_capacity(n);
    let mut reviews = Vec::new();
    let mut latent = Vec::with_capacity(n);
    for i in 0..n {
        let z = f_text[i];
        let p_up = sigmoid(1.5 * z);
        let mut desc: Vec<&str> = Vec::with_capacity(40);
        for _ in 0..20 {
            desc.push(LISTING_FILLER.choose(&mut rng).expect("non-empty"));
            let list = if rng.random_bool(p_up) { &UPSCALE_WORDS } else { &BUDGET_WORDS };
            desc.push(list.choose(&mut rng).expect("non-empty"));
        }
        let p_pro = sigmoid(1.0 * z);
        let mut host: Vec<&str> = Vec::with_capacity(20);
        for _ in 0..10 {
            host.push(HOST_FILLER.choose(&mut rng).expect("non-empty"));
            let list = if rng.random_bool(p_pro) { &HOST_PRO_WORDS } else { &HOST_CASUAL_WORDS };
            host.push(list.choose(&mut rng).expect("non-empty"));
        }
        let first_review = start + Duration::days(rng.random_range(0..=span_days));
        let p_pos = sigmoid(1.5 * z);
        let q = rng.random_range(config.min_reviews..=config.max_reviews);
        for k in 0..q {
            let mut words: Vec<&str> = Vec::new();
            for _ in 0..rng.random_range(1..=3) {
                words.push(REVIEW_FILLER.choose(&mut rng).expect("non-empty"));
                words.push(REVIEW_NOUNS.choose(&mut rng).expect("non-empty"));
                words.push("was");
                let list = if rng.random_bool(p_pos) { &POSITIVE_WORDS } else { &NEGATIVE_WORDS };
                words.push(list.choose(&mut rng).expect("non-empty"));
            }
            reviews.push(ReviewDoc {
                review_id: format!("R{i:05}-{k:02}"),
                listing_id: locations[i].0.clone(),
                date: first_review + Duration::days(30 * k as i64 + rng.random_range(0..30)),
                text: join(words),
            });
        }
        let noise = noise_dist.sample(&mut rng);
        let log_price = config.base_price.ln()
            + config.stat_w * f_stat[i]
            + config.text_w * z
            + config.spatial_w * f_spatial[i]
            + config.noise_sd * noise;
        let price = ((log_price.exp() * 100.0).round() / 100.0).max(0.01);
        records.push(ListingRecord {
            listing_id: locations[i].0.clone(),
            host_id: format!("H{:04}", rng.random_range(0..n / 2 + 1)),
            first_review,
            latitude: locations[i].1.latitude,
            longitude: locations[i].1.longitude,
            price,
            stats: raw_stats[i].clone(),
            description: join(desc),
            host_about: join(host),
        });
        latent.push(LatentScore {
            listing_id: locations[i].0.clone(),
            f_stat: f_stat[i],
            f_text: z,
            f_spatial: f_spatial[i],
            noise,
            log_price,
        });
    }
    Ok(SynthDataset {
        listings: ListingTable {
            stat_columns,
            records,
            rejected: vec![],
        },
        reviews: ReviewTable {
            records: reviews,
            dropped_empty: 0,
            rejected: vec![],
        },
        pois,
        latent,
    })
}

impl SynthDataset {
    /// CSV contents keyed by file name, in [`SYNTH_FILES`] order.
    pub fn to_files(&self) -> Result<Vec<(&'static str, Vec<u8>)>, CorpusError> {
        let mut listings = Vec::new();
        write_listings(&self.listings, &mut listings)?;
        let mut reviews = Vec::new();
        write_reviews(&self.reviews, &mut reviews)?;
        let mut pois = Vec::new();
        write_pois(&self.pois, &mut pois)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        for l in &self.latent {
            w.serialize(l)?;
        }
        let latent = w.into_inner().map_err(|e| CorpusError::Io {
            path: LATENT_FILE.into(),
            source: e.into_error(),
        })?;
        Ok(vec![
            (LISTINGS_FILE, listings),
            (REVIEWS_FILE, reviews),
            (POIS_FILE, pois),
            (LATENT_FILE, latent),
        ])
    }

    /// Writes the four CSV files into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), CorpusError> {
        let io = |path: &Path| {
            let p = path.display().to_string();
            move |source| CorpusError::Io { path: p, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, bytes) in self.to_files()? {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io(&path))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_listings: 200,
            pois_per_category: 50,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn shapes_and_ranges() {
        let d = synth_generate(&small()).unwrap();
        assert_eq!(d.listings.len(), 200);
        assert_eq!(d.pois.len(), 400);
        assert!((200..=2000).contains(&d.reviews.len()));
        assert!(d.listings.records.iter().all(|r| r.price > 0.0 && r.stats.len() == 16));
        assert!(d.listings.stat_columns.iter().all(|c| c != "latitude" && c != "longitude"));
    }

    #[test]
    fn log_price_is_the_weighted_sum() {
        let cfg = small();
        let d = synth_generate(&cfg).unwrap();
        for l in &d.latent {
            let expect = cfg.base_price.ln()
                + cfg.stat_w * l.f_stat
                + cfg.text_w * l.f_text
                + cfg.spatial_w * l.f_spatial
                + cfg.noise_sd * l.noise;
            assert!((l.log_price - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_leave_only_noise() {
        let cfg = SynthConfig {
            stat_w: 0.0,
            text_w: 0.0,
            spatial_w: 0.0,
            ..small()
        };
        let d = synth_generate(&cfg).unwrap();
        for l in &d.latent {
            assert!((l.log_price - (400f64.ln() + 0.08 * l.noise)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_files() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        synth_generate(&small()).unwrap().write_to_dir(a.path()).unwrap();
        synth_generate(&small()).unwrap().write_to_dir(b.path()).unwrap();
        for f in [LISTINGS_FILE, REVIEWS_FILE, POIS_FILE, LATENT_FILE] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn written_files_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let d = synth_generate(&small()).unwrap();
        d.write_to_dir(dir.path()).unwrap();
        let l = crate::corpus::parse_listings(&dir.path().join(LISTINGS_FILE), None).unwrap();
        assert_eq!(l.records, d.listings.records);
        let p = crate::corpus::parse_pois(&dir.path().join(POIS_FILE)).unwrap();
        assert_eq!(p.records, d.pois.records);
        let r = crate::corpus::parse_reviews(&dir.path().join(REVIEWS_FILE)).unwrap();
        assert_eq!(r.records.len(), d.reviews.records.len());
    }

    #[test]
    fn text_latent_shows_in_reviews() {
        let d = synth_generate(&small()).unwrap();
        let pos = |text: &str| text.split(' ').filter(|w| POSITIVE_WORDS.contains(w)).count() as f64;
        let mut hi = (0.0, 0.0);
        let mut lo = (0.0, 0.0);
        for r in &d.reviews.records {
            let i: usize = r.listing_id[1..].parse().unwrap();
            let z = d.latent[i].f_text;
            let words = r.text.split(' ').count() as f64 / 4.0;
            let target = if z > 0.0 { &mut hi } else { &mut lo };
            target.0 += pos(&r.text);
            target.1 += words;
        }
        assert!(hi.0 / hi.1 > lo.0 / lo.1 + 0.2);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(synth_generate(&SynthConfig { noise_sd: -1.0, ..small() }).is_err());
        assert!(synth_generate(&SynthConfig { min_reviews: 5, max_reviews: 2, ..small() }).is_err());
    }
}
