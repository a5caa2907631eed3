//! File formats. Tables are comma-separated with a one-line header; reports
//! are TOML whose first line is a comment carrying run-dependent data such
//! as wall time, so the rest of the file is reproducible byte for byte.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::refine::RefineTrace;
use crate::scenario::{NetworkGraph, Point};
use crate::sim::{ChargerType, ChargingSession, Deployment, LatentDemandEvent, SessionKind, Station, TripRecord};

/// Version tag for every table layout in this module.
pub const TABLE_SCHEMA: &str = "evcharge.tables/1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: DeserializeOwned>(r: R) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

fn to_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>, header: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows)?;
    if buf.is_empty() {
        // csv writes no header for zero rows
        buf.extend_from_slice(header.as_bytes());
        buf.push(b'\n');
    }
    Ok(buf)
}

#[derive(Debug, Serialize, Deserialize)]
struct SiteRow {
    id: u32,
    x_km: f64,
    y_km: f64,
    n_7_2: u32,
    n_22: u32,
    n_150: u32,
}

const SITE_HEADER: &str = "id,x_km,y_km,n_7_2,n_22,n_150";

pub fn deployment_to_csv(deployment: &Deployment) -> Result<Vec<u8>> {
    let rows = deployment.stations.iter().map(|s| SiteRow {
        id: s.id,
        x_km: s.location.x,
        y_km: s.location.y,
        n_7_2: s.chargers[0],
        n_22: s.chargers[1],
        n_150: s.chargers[2],
    });
    to_bytes(rows, SITE_HEADER)
}

/// Parses a deployment table, resolving each site to the network node at
/// its coordinates.
pub fn deployment_from_csv(bytes: &[u8], network: &NetworkGraph) -> Result<Deployment> {
    let rows: Vec<SiteRow> = read_rows(bytes)?;
    let mut stations = Vec::with_capacity(rows.len());
    for r in rows {
        let location = Point { x: r.x_km, y: r.y_km };
        let node = network
            .node_at(location, 1e-6)
            .ok_or_else(|| Error::Input(format!("site {} at ({}, {}) is not a network node", r.id, r.x_km, r.y_km)))?;
        stations.push(Station {
            id: r.id,
            node,
            location,
            chargers: [r.n_7_2, r.n_22, r.n_150],
        });
    }
    let dep = Deployment::new(stations);
    dep.validate(Some(network))?;
    Ok(dep)
}

pub fn write_deployment(path: &Path, deployment: &Deployment) -> Result<()> {
    std::fs::write(path, deployment_to_csv(deployment)?)?;
    Ok(())
}

pub fn read_deployment(path: &Path, network: &NetworkGraph) -> Result<Deployment> {
    deployment_from_csv(&std::fs::read(path)?, network)
}

#[derive(Debug, Serialize, Deserialize)]
struct LatentRow {
    id: u32,
    vehicle: u32,
    x_km: f64,
    y_km: f64,
    taz: u32,
    start_s: f64,
    end_s: f64,
    energy_kwh: f64,
    charger: ChargerType,
    kind: SessionKind,
}

const LATENT_HEADER: &str = "id,vehicle,x_km,y_km,taz,start_s,end_s,energy_kwh,charger,kind";

pub fn latent_to_csv(events: &[LatentDemandEvent]) -> Result<Vec<u8>> {
    let rows = events.iter().map(|e| LatentRow {
        id: e.id,
        vehicle: e.vehicle,
        x_km: e.location.x,
        y_km: e.location.y,
        taz: e.taz,
        start_s: e.start_s,
        end_s: e.end_s,
        energy_kwh: e.energy_kwh,
        charger: e.charger,
        kind: e.kind,
    });
    to_bytes(rows, LATENT_HEADER)
}

pub fn latent_from_csv(bytes: &[u8]) -> Result<Vec<LatentDemandEvent>> {
    let rows: Vec<LatentRow> = read_rows(bytes)?;
    let events: Vec<LatentDemandEvent> = rows
        .into_iter()
        .map(|r| LatentDemandEvent {
            id: r.id,
            vehicle: r.vehicle,
            location: Point { x: r.x_km, y: r.y_km },
            taz: r.taz,
            start_s: r.start_s,
            end_s: r.end_s,
            energy_kwh: r.energy_kwh,
            charger: r.charger,
            kind: r.kind,
        })
        .collect();
    for (i, e) in events.iter().enumerate() {
        if e.id as usize != i {
            return Err(Error::Input(format!("latent demand row {i} has id {}", e.id)));
        }
        if !(e.start_s <= e.end_s) || e.energy_kwh < 0.0 {
            return Err(Error::Input(format!("latent demand event {} has an invalid interval or energy", e.id)));
        }
    }
    Ok(events)
}

#[derive(Debug, Serialize)]
struct SessionRow {
    id: u32,
    vehicle: u32,
    station: Option<u32>,
    node: u32,
    charger: ChargerType,
    start_s: f64,
    end_s: f64,
    energy_kwh: f64,
    kind: SessionKind,
}

const SESSION_HEADER: &str = "id,vehicle,station,node,charger,start_s,end_s,energy_kwh,kind";

pub fn sessions_to_csv(sessions: &[ChargingSession]) -> Result<Vec<u8>> {
    let rows = sessions.iter().map(|s| SessionRow {
        id: s.id,
        vehicle: s.vehicle,
        station: s.station,
        node: s.node,
        charger: s.charger,
        start_s: s.start_s,
        end_s: s.end_s,
        energy_kwh: s.energy_kwh,
        kind: s.kind,
    });
    to_bytes(rows, SESSION_HEADER)
}

#[derive(Debug, Serialize)]
struct TripRow {
    vehicle: u32,
    trip_index: u32,
    origin: u32,
    destination: u32,
    departure_s: f64,
    arrival_s: f64,
    distance_km: f64,
    enroute_detour: bool,
    via_station: Option<u32>,
    extra_travel_s: f64,
    wait_s: f64,
}

const TRIP_HEADER: &str =
    "vehicle,trip_index,origin,destination,departure_s,arrival_s,distance_km,enroute_detour,via_station,extra_travel_s,wait_s";

pub fn trips_to_csv(trips: &[TripRecord]) -> Result<Vec<u8>> {
    let rows = trips.iter().map(|t| TripRow {
        vehicle: t.vehicle,
        trip_index: t.trip_index,
        origin: t.origin,
        destination: t.destination,
        departure_s: t.departure_s,
        arrival_s: t.arrival_s,
        distance_km: t.distance_km,
        enroute_detour: t.enroute_detour,
        via_station: t.via_station,
        extra_travel_s: t.extra_travel_s,
        wait_s: t.wait_s,
    });
    to_bytes(rows, TRIP_HEADER)
}

#[derive(Debug, Serialize)]
struct TraceRow {
    iteration: u32,
    stations: usize,
    n_7_2: u32,
    n_22: u32,
    n_150: u32,
    changes: u32,
    deployment_cost: f64,
    system_cost: f64,
}

const TRACE_HEADER: &str = "iteration,stations,n_7_2,n_22,n_150,changes,deployment_cost,system_cost";

/// One row per refinement iteration: the deployment simulated, the number
/// of chargers the following step changed, and the costs observed.
pub fn trace_to_csv(trace: &RefineTrace) -> Result<Vec<u8>> {
    let rows = trace.iterations.iter().map(|it| TraceRow {
        iteration: it.iteration,
        stations: it.deployment.stations.len(),
        n_7_2: it.deployment.total_chargers(ChargerType::Ac7_2),
        n_22: it.deployment.total_chargers(ChargerType::Ac22),
        n_150: it.deployment.total_chargers(ChargerType::Dc150),
        changes: it.changes,
        deployment_cost: it.deployment_cost,
        system_cost: it.system_cost,
    });
    to_bytes(rows, TRACE_HEADER)
}

/// Renders a report: one comment line, then the TOML body.
pub fn report_to_string<T: Serialize>(header: &str, report: &T) -> Result<String> {
    let body = toml::to_string(report).map_err(|e| Error::Toml(e.to_string()))?;
    Ok(format!("# {}\n{body}", header.replace('\n', " ")))
}

pub fn write_report<T: Serialize>(path: &Path, header: &str, report: &T) -> Result<()> {
    std::fs::write(path, report_to_string(header, report)?)?;
    Ok(())
}

pub fn read_report<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// Everything after the header line, for hashing and comparison.
pub fn report_body(text: &str) -> &str {
    match text.strip_prefix('#') {
        Some(rest) => rest.split_once('\n').map_or("", |(_, body)| body),
        None => text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_network, ScenarioConfig};

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn empty_tables_keep_header() {
        let bytes = latent_to_csv(&[]).unwrap();
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), format!("{LATENT_HEADER}\n"));
        assert!(latent_from_csv(&bytes).unwrap().is_empty());
        let d = deployment_to_csv(&Deployment::default()).unwrap();
        assert_eq!(String::from_utf8(d).unwrap(), format!("{SITE_HEADER}\n"));
    }

    #[test]
    fn deployment_roundtrip() {
        let net = generate_network(&ScenarioConfig::default()).unwrap();
        let dep = Deployment::new(vec![
            Station { id: 7, node: 12, location: net.point(12), chargers: [2, 0, 1] },
            Station { id: 3, node: 0, location: net.point(0), chargers: [0, 1, 0] },
        ]);
        let bytes = deployment_to_csv(&dep).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("id,x_km,y_km,n_7_2,n_22,n_150\n3,"));
        assert_eq!(deployment_from_csv(&bytes, &net).unwrap(), dep);
    }

    #[test]
    fn off_grid_site_rejected() {
        let net = generate_network(&ScenarioConfig::default()).unwrap();
        let bytes = b"id,x_km,y_km,n_7_2,n_22,n_150\n0,0.5,0.5,1,0,0\n";
        assert!(matches!(deployment_from_csv(bytes, &net), Err(Error::Input(_))));
    }

    #[test]
    fn latent_roundtrip_is_exact() {
        let ev = LatentDemandEvent {
            id: 0,
            vehicle: 4,
            location: Point { x: 1.0, y: 2.0 },
            taz: 3,
            start_s: 30_000.123456789,
            end_s: 31_234.5,
            energy_kwh: 0.1 + 0.2,
            charger: ChargerType::Ac22,
            kind: SessionKind::Destination,
        };
        let back = latent_from_csv(&latent_to_csv(std::slice::from_ref(&ev)).unwrap()).unwrap();
        assert_eq!(back, vec![ev]);
    }

    #[test]
    fn report_header_is_separable() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct R {
            a: u32,
        }
        let text = report_to_string("wall 1.2 s", &R { a: 3 }).unwrap();
        assert_eq!(report_body(&text), "a = 3\n");
        let parsed: R = toml::from_str(&text).unwrap();
        assert_eq!(parsed, R { a: 3 });
    }
}
