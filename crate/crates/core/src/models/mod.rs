//! Built-in model families.

mod bps;
mod hybrid;
mod name_based;
mod nonexplosion;
mod ranked;
mod tractable;
mod vs;

pub use bps::{bps_gap_density, concavity_holds, make_common_vol_bps, make_rank_vol_bps, GapDensity, RankVolParams};
pub use hybrid::{check_stability, make_atlas, make_hybrid_atlas, HybridAtlasParams, StabilityReport};
pub use name_based::{make_name_based, NameBasedParams};
pub use nonexplosion::{check_nonexplosion, check_nonexplosion_seeded, LadderRung, NonExplosionReport, Verdict};
pub use ranked::{ranked_density_q, MAX_EXACT_DIM};
pub use tractable::{make_polynomial, make_tractable, PairFn, PolynomialParams, TractableParams, UnivariateFn};
pub use vs::market_weight_drift;

/// Which constructor produced a spec, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFamily {
    NameBased(NameBasedParams),
    HybridAtlas(HybridAtlasParams),
    CommonVolBps { g: Vec<f64>, sigma: f64 },
    RankVolBps(RankVolParams),
    Polynomial(PolynomialParams),
    Tractable,
    Custom,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::NameBased(_) => "name_based",
            ModelFamily::HybridAtlas(_) => "hybrid_atlas",
            ModelFamily::CommonVolBps { .. } => "common_vol_bps",
            ModelFamily::RankVolBps(_) => "bps_rank_vol",
            ModelFamily::Polynomial(_) => "tractable_polynomial",
            ModelFamily::Tractable => "tractable",
            ModelFamily::Custom => "custom",
        }
    }
}
