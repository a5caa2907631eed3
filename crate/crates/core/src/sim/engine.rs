//! Event-queue day simulation of all EVs in a scenario.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::behavior::{
    assign_required_charger_type, charge_session, destination_charge_probability, find_destination_charger,
    find_enroute_charger, should_charge_enroute, AcPlugs, ChargeContext, ChargingBehaviorParams, DcPlugs,
};
use super::types::{
    ChargerType, ChargingSession, Deployment, EventLog, LatentDemandEvent, NsocEvent, Regime, SessionKind, SimMode,
    StationId, TripRecord, VehicleDay,
};
use crate::error::{Error, Result};
use crate::scenario::{ActivityKind, ActivityPlan, NodeId, RoutingTable, ScenarioBundle, VehicleId, DAY_S};

/// Uniform draw for the charging decision of `vehicle` on its `arrival`-th
/// arrival. Each (vehicle, arrival) pair owns a fixed position in a ChaCha
/// stream, so changing the deployment never shifts unrelated draws.
pub fn arrival_draw(seed: u64, vehicle: VehicleId, arrival: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(vehicle as u64);
    rng.set_word_pos(arrival as u128 * 2);
    rng.random::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Arrive,
    Depart,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    vehicle: usize,
    activity: usize,
    step: Step,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl Ord for Event {
    // Reversed so BinaryHeap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.vehicle.cmp(&self.vehicle))
            .then_with(|| other.activity.cmp(&self.activity))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Agent<'a> {
    id: VehicleId,
    plan: &'a ActivityPlan,
    capacity: f64,
    rate: f64,
    home_charger: bool,
    initial_soc: f64,
    soc: f64,
}

/// Simulator bound to one scenario; holds the routing table so repeated
/// runs (refinement iterations) do not recompute shortest paths.
pub struct Simulator<'a> {
    scenario: &'a ScenarioBundle,
    routes: RoutingTable,
    taz_of_node: Vec<u32>,
    taz_centroid: Vec<NodeId>,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a ScenarioBundle) -> Self {
        let mut taz_of_node = vec![0; scenario.network.node_count()];
        for t in &scenario.tazs {
            for &n in &t.nodes {
                taz_of_node[n as usize] = t.id;
            }
        }
        let mut taz_centroid = vec![0; scenario.tazs.len()];
        for t in &scenario.tazs {
            taz_centroid[t.id as usize] = t.centroid;
        }
        Simulator {
            scenario,
            routes: scenario.network.routing_table(),
            taz_of_node,
            taz_centroid,
        }
    }

    pub fn routes(&self) -> &RoutingTable {
        &self.routes
    }

    pub fn run(
        &self,
        regime: Regime,
        mode: SimMode,
        deployment: Option<&Deployment>,
        params: &ChargingBehaviorParams,
        seed: u64,
    ) -> Result<EventLog> {
        params.validate()?;
        let empty = Deployment::default();
        let deployment = match (mode, deployment) {
            (SimMode::Evaluation, None) => {
                return Err(Error::Usage("evaluation mode requires a deployment".into()));
            }
            (SimMode::LatentGeneration, Some(_)) => {
                return Err(Error::Usage("latent-demand generation runs without a deployment".into()));
            }
            (SimMode::Evaluation, Some(d)) => {
                d.validate(Some(&self.scenario.network))?;
                d
            }
            (SimMode::LatentGeneration, None) => &empty,
        };
        let mut run = Run {
            sim: self,
            regime,
            mode,
            deployment,
            params,
            seed,
            ac: AcPlugs::new(deployment),
            dc: DcPlugs::new(deployment),
            log: EventLog {
                regime,
                mode,
                trips: Vec::new(),
                sessions: Vec::new(),
                latent: Vec::new(),
                nsoc: Vec::new(),
                vehicles: Vec::new(),
            },
            agents: Vec::new(),
        };
        run.execute()?;
        Ok(run.log)
    }
}

pub fn simulate_day(
    scenario: &ScenarioBundle,
    regime: Regime,
    mode: SimMode,
    deployment: Option<&Deployment>,
    params: &ChargingBehaviorParams,
    seed: u64,
) -> Result<EventLog> {
    Simulator::new(scenario).run(regime, mode, deployment, params, seed)
}

struct Run<'s, 'a> {
    sim: &'s Simulator<'a>,
    regime: Regime,
    mode: SimMode,
    deployment: &'s Deployment,
    params: &'s ChargingBehaviorParams,
    seed: u64,
    ac: AcPlugs,
    dc: DcPlugs,
    log: EventLog,
    agents: Vec<Agent<'a>>,
}

impl<'s, 'a> Run<'s, 'a> {
    fn execute(&mut self) -> Result<()> {
        let scenario = self.sim.scenario;
        let mut queue = BinaryHeap::new();
        for v in scenario.vehicles.iter().filter(|v| v.is_ev) {
            let plan = &scenario.plans[v.id as usize];
            let household = &scenario.households[v.household as usize];
            let initial = v.spec.initial_soc_kwh();
            if plan.activities.len() < 2 {
                continue;
            }
            queue.push(Event {
                time: plan.activities[0].end_s(),
                vehicle: self.agents.len(),
                activity: 0,
                step: Step::Depart,
            });
            self.agents.push(Agent {
                id: v.id,
                plan,
                capacity: v.spec.capacity_kwh,
                rate: v.spec.consumption_kwh_per_km,
                home_charger: household.home_charger,
                initial_soc: initial,
                soc: initial,
            });
        }
        while let Some(ev) = queue.pop() {
            match ev.step {
                Step::Depart => {
                    let next = self.depart(ev.vehicle, ev.activity, ev.time)?;
                    queue.push(next);
                }
                Step::Arrive => {
                    if let Some(next) = self.arrive(ev.vehicle, ev.activity, ev.time)? {
                        queue.push(next);
                    }
                }
            }
        }
        self.log.vehicles = self
            .agents
            .iter()
            .map(|a| VehicleDay {
                vehicle: a.id,
                capacity_kwh: a.capacity,
                consumption_kwh_per_km: a.rate,
                initial_soc_kwh: a.initial_soc,
                final_soc_kwh: a.soc,
            })
            .collect();
        Ok(())
    }

    fn push_session(
        &mut self,
        vehicle: VehicleId,
        station: Option<StationId>,
        node: NodeId,
        charger: ChargerType,
        start_s: f64,
        duration_s: f64,
        energy_kwh: f64,
        kind: SessionKind,
    ) {
        let id = self.log.sessions.len() as u32;
        self.log.sessions.push(ChargingSession {
            id,
            vehicle,
            station,
            node,
            charger,
            start_s,
            end_s: start_s + duration_s,
            energy_kwh,
            kind,
        });
        if self.mode == SimMode::LatentGeneration && kind.is_public() {
            // Destination demand is served by the zone's unconstrained
            // charger; en-route demand stays where it was triggered.
            let taz = self.sim.taz_of_node[node as usize];
            let at = match kind {
                SessionKind::Destination => self.sim.taz_centroid[taz as usize],
                _ => node,
            };
            let id = self.log.latent.len() as u32;
            self.log.latent.push(LatentDemandEvent {
                id,
                vehicle,
                location: self.sim.scenario.network.point(at),
                taz,
                start_s,
                end_s: start_s + duration_s,
                energy_kwh,
                charger,
                kind,
            });
        }
    }

    fn record_deficit(&mut self, agent: usize, time_s: f64) {
        let a = &self.agents[agent];
        if a.soc < 0.0 {
            self.log.nsoc.push(NsocEvent {
                vehicle: a.id,
                time_s,
                deficit_kwh: -a.soc,
            });
        }
    }

    fn depart(&mut self, agent: usize, activity: usize, t: f64) -> Result<Event> {
        let routes = &self.sim.routes;
        let (id, plan, capacity, rate) = {
            let a = &self.agents[agent];
            (a.id, a.plan, a.capacity, a.rate)
        };
        let origin = plan.activities[activity].node;
        let destination = plan.activities[activity + 1].node;
        let direct_km = routes.distance_km(origin, destination);
        let direct_s = routes.travel_time_s(origin, destination);
        let remaining_km = plan.remaining_distance_km(routes, activity);
        let net = &self.sim.scenario.network;
        let mut trip = TripRecord {
            vehicle: id,
            trip_index: activity as u32,
            origin,
            destination,
            departure_s: t,
            arrival_s: t + direct_s,
            distance_km: direct_km,
            enroute_detour: false,
            via_station: None,
            extra_travel_s: 0.0,
            wait_s: 0.0,
            origin_xy: net.point(origin),
            destination_xy: net.point(destination),
        };

        let needs_stop = self.regime.enroute_enabled()
            && should_charge_enroute(self.agents[agent].soc, remaining_km, rate, self.params.enroute_margin)?;
        let mut detoured = false;
        if needs_stop {
            match self.mode {
                SimMode::LatentGeneration => {
                    let soc = self.agents[agent].soc;
                    let target = (remaining_km * rate * (1.0 + self.params.enroute_buffer)).min(capacity);
                    let dwell = (DAY_S - t).max(0.0);
                    let (energy, dur) =
                        charge_session(soc.max(0.0), capacity, ChargerType::Dc150.power_kw(), dwell, target)?;
                    if energy > 0.0 {
                        self.push_session(id, None, origin, ChargerType::Dc150, t, dur, energy, SessionKind::EnRoute);
                        self.agents[agent].soc += energy;
                        trip.departure_s = t + dur;
                        trip.arrival_s = trip.departure_s + direct_s;
                    }
                }
                SimMode::Evaluation => {
                    let choice = find_enroute_charger(
                        origin,
                        destination,
                        self.deployment,
                        routes,
                        t,
                        &self.dc,
                        self.params.max_wait_s,
                    );
                    if let Some(c) = choice {
                        let station_node = self.deployment.stations[c.station_idx].node;
                        let leg1_km = routes.distance_km(origin, station_node);
                        let leg2_km = routes.distance_km(station_node, destination);
                        let leg1_s = routes.travel_time_s(origin, station_node);
                        let leg2_s = routes.travel_time_s(station_node, destination);
                        self.agents[agent].soc -= leg1_km * rate;
                        self.record_deficit(agent, c.arrival_s);
                        let onward_km = leg2_km + (remaining_km - direct_km);
                        let target = (onward_km * rate * (1.0 + self.params.enroute_buffer)).min(capacity);
                        let dwell = (DAY_S - c.start_s).max(0.0);
                        let soc = self.agents[agent].soc;
                        let (energy, dur) =
                            charge_session(soc.max(0.0), capacity, ChargerType::Dc150.power_kw(), dwell, target)?;
                        let mut leave = c.arrival_s;
                        let mut wait = 0.0;
                        if energy > 0.0 {
                            self.dc.book(c.station_idx, c.plug, c.start_s + dur);
                            self.push_session(
                                id,
                                Some(c.station),
                                station_node,
                                ChargerType::Dc150,
                                c.start_s,
                                dur,
                                energy,
                                SessionKind::EnRoute,
                            );
                            self.agents[agent].soc += energy;
                            leave = c.start_s + dur;
                            wait = c.start_s - c.arrival_s;
                        }
                        self.agents[agent].soc -= leg2_km * rate;
                        trip.distance_km = leg1_km + leg2_km;
                        trip.arrival_s = leave + leg2_s;
                        trip.enroute_detour = true;
                        trip.via_station = Some(c.station);
                        trip.extra_travel_s = (leg1_s + leg2_s - direct_s).max(0.0);
                        trip.wait_s = wait;
                        detoured = true;
                    }
                }
            }
        }
        if !detoured {
            self.agents[agent].soc -= direct_km * rate;
        }
        self.record_deficit(agent, trip.arrival_s);
        let arrival = trip.arrival_s;
        self.log.trips.push(trip);
        Ok(Event {
            time: arrival,
            vehicle: agent,
            activity: activity + 1,
            step: Step::Arrive,
        })
    }

    fn arrive(&mut self, agent: usize, activity: usize, t: f64) -> Result<Option<Event>> {
        let (id, plan, capacity, home_charger) = {
            let a = &self.agents[agent];
            (a.id, a.plan, a.capacity, a.home_charger)
        };
        let act = &plan.activities[activity];
        let last = activity + 1 == plan.activities.len();
        let departure = if last { DAY_S.max(t) } else { t.max(act.end_s()) };
        let dwell = (departure.min(DAY_S) - t).max(0.0);

        if t < DAY_S && dwell > 0.0 {
            let soc = self.agents[agent].soc;
            let soc_frac = (soc / capacity).clamp(0.0, 1.0);
            let residential = act.kind == ActivityKind::Home && home_charger;
            let draw = arrival_draw(self.seed, id, activity as u64);
            if residential {
                let p = destination_charge_probability(soc_frac, &self.params.residential)?;
                if draw < p {
                    let power = ChargerType::Ac7_2.power_kw();
                    let (energy, dur) = charge_session(soc.max(0.0), capacity, power, dwell, capacity)?;
                    if energy > 0.0 {
                        self.push_session(id, None, act.node, ChargerType::Ac7_2, t, dur, energy, SessionKind::Residential);
                        self.agents[agent].soc += energy;
                    }
                }
            } else if self.regime.destination_enabled() {
                let p = destination_charge_probability(soc_frac, &self.params.public)?;
                if draw < p {
                    let need = capacity - soc.max(0.0);
                    let required = assign_required_charger_type(ChargeContext::Destination { need_kwh: need, dwell_s: dwell });
                    let slot = match self.mode {
                        SimMode::LatentGeneration => Some((None, required)),
                        SimMode::Evaluation => find_destination_charger(
                            self.sim.scenario.network.point(act.node),
                            self.deployment,
                            required,
                            t,
                            &mut self.ac,
                            self.params.service_radius_km,
                        )
                        .map(|(s, ty)| (Some(s), ty)),
                    };
                    if let Some((station, ty)) = slot {
                        let (energy, dur) = charge_session(soc.max(0.0), capacity, ty.power_kw(), dwell, capacity)?;
                        if energy > 0.0 {
                            if let Some(sid) = station {
                                let idx = self.deployment.station_index(sid).expect("station found by search");
                                self.ac.occupy(idx, ty, t + dur);
                            }
                            let node = station
                                .and_then(|sid| self.deployment.station(sid))
                                .map_or(act.node, |s| s.node);
                            self.push_session(id, station, node, ty, t, dur, energy, SessionKind::Destination);
                            self.agents[agent].soc += energy;
                        }
                    }
                }
            }
        }

        Ok((!last).then_some(Event {
            time: departure,
            vehicle: agent,
            activity,
            step: Step::Depart,
        }))
    }
}
