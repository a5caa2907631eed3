//! Agent-based day simulation with SoC dynamics and endogenous destination,
//! en-route and residential charging decisions.

mod behavior;
mod engine;
mod types;

pub use behavior::{
    assign_required_charger_type, charge_session, destination_charge_probability, find_destination_charger,
    find_enroute_charger, rank_enroute_candidates, should_charge_enroute, AcPlugs, ChargeContext,
    ChargingBehaviorParams, DcPlugs, EnrouteChoice, Thresholds,
};
pub use engine::{arrival_draw, simulate_day, Simulator};
pub use types::{
    ChargerClass, ChargerType, ChargingSession, Deployment, EventLog, LatentDemandEvent, NsocEvent, Regime,
    SessionKind, SimMode, Station, StationId, TripRecord, VehicleDay,
};
