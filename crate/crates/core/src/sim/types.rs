use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{NetworkGraph, NodeId, Point, VehicleId};

pub type StationId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChargerType {
    #[serde(rename = "AC_7_2")]
    Ac7_2,
    #[serde(rename = "AC_22")]
    Ac22,
    #[serde(rename = "DC_150")]
    Dc150,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChargerClass {
    Ac,
    Dc,
}

impl ChargerType {
    /// Fixed processing order used by refinement and reports.
    pub const ALL: [ChargerType; 3] = [ChargerType::Ac7_2, ChargerType::Ac22, ChargerType::Dc150];

    pub fn power_kw(self) -> f64 {
        match self {
            ChargerType::Ac7_2 => 7.2,
            ChargerType::Ac22 => 22.0,
            ChargerType::Dc150 => 150.0,
        }
    }

    pub fn class(self) -> ChargerClass {
        match self {
            ChargerType::Ac7_2 | ChargerType::Ac22 => ChargerClass::Ac,
            ChargerType::Dc150 => ChargerClass::Dc,
        }
    }

    pub fn index(self) -> usize {
        match self {
            ChargerType::Ac7_2 => 0,
            ChargerType::Ac22 => 1,
            ChargerType::Dc150 => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChargerType::Ac7_2 => "AC_7_2",
            ChargerType::Ac22 => "AC_22",
            ChargerType::Dc150 => "DC_150",
        }
    }
}

impl fmt::Display for ChargerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChargerType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "AC_7_2" => Ok(ChargerType::Ac7_2),
            "AC_22" => Ok(ChargerType::Ac22),
            "DC_150" => Ok(ChargerType::Dc150),
            other => Err(Error::Input(format!("unknown charger type '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Destination,
    #[serde(rename = "enroute")]
    EnRoute,
    Combined,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Destination, Regime::EnRoute, Regime::Combined];

    pub fn destination_enabled(self) -> bool {
        matches!(self, Regime::Destination | Regime::Combined)
    }

    pub fn enroute_enabled(self) -> bool {
        matches!(self, Regime::EnRoute | Regime::Combined)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Destination => "destination",
            Regime::EnRoute => "enroute",
            Regime::Combined => "combined",
        }
    }

    /// Suffix used in deployment labels (CMCLP-D, REF-E, ...).
    pub fn suffix(self) -> char {
        match self {
            Regime::Destination => 'D',
            Regime::EnRoute => 'E',
            Regime::Combined => 'C',
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "destination" => Ok(Regime::Destination),
            "enroute" | "en-route" => Ok(Regime::EnRoute),
            "combined" => Ok(Regime::Combined),
            other => Err(Error::Usage(format!("unknown regime '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionKind {
    Destination,
    #[serde(rename = "enroute")]
    EnRoute,
    Residential,
}

impl SessionKind {
    pub const ALL: [SessionKind; 3] = [SessionKind::Destination, SessionKind::EnRoute, SessionKind::Residential];

    pub fn as_str(self) -> &'static str {
        match self {
            SessionKind::Destination => "destination",
            SessionKind::EnRoute => "enroute",
            SessionKind::Residential => "residential",
        }
    }

    pub fn is_public(self) -> bool {
        !matches!(self, SessionKind::Residential)
    }
}

impl fmt::Display for SessionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SessionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "destination" => Ok(SessionKind::Destination),
            "enroute" => Ok(SessionKind::EnRoute),
            "residential" => Ok(SessionKind::Residential),
            other => Err(Error::Input(format!("unknown session kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: StationId,
    pub node: NodeId,
    pub location: Point,
    /// Charger counts indexed by `ChargerType::index`.
    pub chargers: [u32; 3],
}

impl Station {
    pub fn count(&self, ty: ChargerType) -> u32 {
        self.chargers[ty.index()]
    }

    pub fn total(&self) -> u32 {
        self.chargers.iter().sum()
    }

    pub fn has_dc(&self) -> bool {
        self.count(ChargerType::Dc150) >= 1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub stations: Vec<Station>,
}

impl Deployment {
    pub fn new(mut stations: Vec<Station>) -> Self {
        stations.sort_by_key(|s| s.id);
        Deployment { stations }
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn station(&self, id: StationId) -> Option<&Station> {
        self.stations
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| &self.stations[i])
    }

    pub fn station_index(&self, id: StationId) -> Option<usize> {
        self.stations.binary_search_by_key(&id, |s| s.id).ok()
    }

    pub fn total_chargers(&self, ty: ChargerType) -> u32 {
        self.stations.iter().map(|s| s.count(ty)).sum()
    }

    pub fn dc_station_count(&self) -> usize {
        self.stations.iter().filter(|s| s.has_dc()).count()
    }

    pub fn validate(&self, network: Option<&NetworkGraph>) -> Result<()> {
        for w in self.stations.windows(2) {
            if w[0].id >= w[1].id {
                return Err(Error::Input(format!("station ids not unique/sorted at {}", w[1].id)));
            }
        }
        for s in &self.stations {
            if s.total() == 0 {
                return Err(Error::Input(format!("station {} has no chargers", s.id)));
            }
            if let Some(net) = network {
                let Some(node) = net.nodes.get(s.node as usize) else {
                    return Err(Error::Input(format!("station {} at missing node {}", s.id, s.node)));
                };
                if node.point().distance(&s.location) > 1e-6 {
                    return Err(Error::Input(format!("station {} location disagrees with node {}", s.id, s.node)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingSession {
    pub id: u32,
    pub vehicle: VehicleId,
    /// `None` for residential chargers and for the unconstrained TAZ
    /// chargers of latent-demand runs.
    pub station: Option<StationId>,
    pub node: NodeId,
    pub charger: ChargerType,
    pub start_s: f64,
    pub end_s: f64,
    pub energy_kwh: f64,
    pub kind: SessionKind,
}

impl ChargingSession {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentDemandEvent {
    pub id: u32,
    pub vehicle: VehicleId,
    pub location: Point,
    pub taz: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub energy_kwh: f64,
    pub charger: ChargerType,
    pub kind: SessionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub vehicle: VehicleId,
    pub trip_index: u32,
    pub origin: NodeId,
    pub destination: NodeId,
    pub departure_s: f64,
    pub arrival_s: f64,
    /// Distance actually driven, including any charging detour.
    pub distance_km: f64,
    pub enroute_detour: bool,
    pub via_station: Option<StationId>,
    /// Extra driving time caused by the detour.
    pub extra_travel_s: f64,
    /// Time queued at the station before plugging in.
    pub wait_s: f64,
    /// Planar origin and destination coordinates (km).
    pub origin_xy: Point,
    pub destination_xy: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsocEvent {
    pub vehicle: VehicleId,
    pub time_s: f64,
    pub deficit_kwh: f64,
}

/// Start and end of day energy state of one EV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleDay {
    pub vehicle: VehicleId,
    pub capacity_kwh: f64,
    pub consumption_kwh_per_km: f64,
    pub initial_soc_kwh: f64,
    pub final_soc_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    LatentGeneration,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub regime: Regime,
    pub mode: SimMode,
    pub trips: Vec<TripRecord>,
    pub sessions: Vec<ChargingSession>,
    pub latent: Vec<LatentDemandEvent>,
    pub nsoc: Vec<NsocEvent>,
    pub vehicles: Vec<VehicleDay>,
}

impl EventLog {
    pub fn public_sessions(&self) -> impl Iterator<Item = &ChargingSession> {
        self.sessions.iter().filter(|s| s.kind.is_public())
    }
}
