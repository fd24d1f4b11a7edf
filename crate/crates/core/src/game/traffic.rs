use nalgebra::DMatrix;

use super::ConvexGame;
use crate::error::{Error, Result};
use crate::polytope::{solve_lp, LpStatus, Polyhedron};
use crate::tntp::{build_incidence, NetworkData};

pub const DEFAULT_BUDGET_FACTOR: f64 = 1.5;

/// One origin-destination commodity. Node ids are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSpec {
    pub origin: usize,
    pub destination: usize,
    pub demand: f64,
    /// Budget headroom: the player's nominal-time budget is this factor
    /// times its free-flow optimum.
    pub budget_factor: f64,
}

impl PlayerSpec {
    pub fn new(origin: usize, destination: usize, demand: f64) -> Self {
        Self {
            origin,
            destination,
            demand,
            budget_factor: DEFAULT_BUDGET_FACTOR,
        }
    }

    fn validate(&self, num_nodes: usize) -> Result<()> {
        if self.origin >= num_nodes || self.destination >= num_nodes {
            return Err(Error::InvalidArgument(format!(
                "node id out of range 1..={num_nodes} (origin {}, destination {})",
                self.origin + 1,
                self.destination + 1
            )));
        }
        if self.origin == self.destination {
            return Err(Error::InvalidArgument("origin equals destination".into()));
        }
        if !(self.demand > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "demand {} must be positive",
                self.demand
            )));
        }
        if !(self.budget_factor >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "budget factor {} must be at least 1",
                self.budget_factor
            )));
        }
        Ok(())
    }
}

/// `+demand` at the origin, `-demand` at the destination.
pub fn demand_vector(spec: &PlayerSpec, num_nodes: usize) -> Result<Vec<f64>> {
    if spec.origin >= num_nodes || spec.destination >= num_nodes {
        return Err(Error::InvalidArgument(format!(
            "node id out of range for a {num_nodes}-node network"
        )));
    }
    let mut s = vec![0.0; num_nodes];
    s[spec.origin] = spec.demand;
    s[spec.destination] = -spec.demand;
    Ok(s)
}

/// Multi-commodity traffic assignment game with BPR link costs. Each player
/// routes its own demand; its cost is the BPR-weighted sum of its own link
/// flows, normalized by its free-flow optimum.
#[derive(Debug, Clone)]
pub struct TrafficGame {
    net: NetworkData,
    incidence: DMatrix<f64>,
    players: Vec<PlayerSpec>,
    lambda: f64,
    nu: u32,
    free_flow: Vec<f64>,
    nominal_volume: Vec<f64>,
    deltas: Vec<f64>,
    gammas: Vec<f64>,
    action_sets: Vec<Polyhedron>,
}

pub fn build_traffic_game(net: NetworkData, players: Vec<PlayerSpec>, lambda: f64, nu: u32) -> Result<TrafficGame> {
    if players.is_empty() {
        return Err(Error::InvalidArgument("a game needs at least one player".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be positive")));
    }
    let incidence = build_incidence(&net);
    let free_flow = net.free_flow_times();
    let capacity = net.capacities();
    let mut deltas = Vec::with_capacity(players.len());
    let mut gammas = Vec::with_capacity(players.len());
    let mut action_sets = Vec::with_capacity(players.len());
    for (i, spec) in players.iter().enumerate() {
        spec.validate(net.num_nodes).map_err(|e| e.for_player(i))?;
        let s = demand_vector(spec, net.num_nodes)?;
        let base = Polyhedron::new(incidence.clone(), s, vec![0.0; net.num_links], capacity.clone())
            .map_err(|e| e.for_player(i))?;
        let nominal = solve_lp(&free_flow, &base).map_err(|e| e.for_player(i))?;
        match nominal.status {
            LpStatus::Optimal => {}
            _ => {
                return Err(Error::Infeasible(format!(
                    "demand {} from node {} to node {} cannot be routed within link capacities",
                    spec.demand,
                    spec.origin + 1,
                    spec.destination + 1
                ))
                .for_player(i))
            }
        }
        let delta = nominal.objective;
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "nominal cost {delta} must be positive (zero free-flow path?)"
            ))
            .for_player(i));
        }
        let gamma = spec.budget_factor * delta;
        action_sets.push(base.with_budget(free_flow.clone(), gamma)?);
        deltas.push(delta);
        gammas.push(gamma);
    }
    Ok(TrafficGame {
        net,
        incidence,
        players,
        lambda,
        nu,
        free_flow,
        nominal_volume: capacity,
        deltas,
        gammas,
        action_sets,
    })
}

impl TrafficGame {
    pub fn network(&self) -> &NetworkData {
        &self.net
    }

    pub fn incidence(&self) -> &DMatrix<f64> {
        &self.incidence
    }

    pub fn players(&self) -> &[PlayerSpec] {
        &self.players
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// BPR travel time of link `j` carrying `total_flow`.
    pub fn link_cost(&self, j: usize, total_flow: f64) -> Result<f64> {
        if j >= self.free_flow.len() {
            return Err(Error::dim("link index", self.free_flow.len(), j + 1));
        }
        if total_flow < 0.0 {
            return Err(Error::NegativeFlow {
                link: j,
                value: total_flow,
            });
        }
        Ok(self.bpr(j, total_flow))
    }

    fn bpr(&self, j: usize, total: f64) -> f64 {
        self.free_flow[j] * (1.0 + self.lambda * (total / self.nominal_volume[j]).powi(self.nu as i32))
    }

    fn check_flows(&self, player: usize, own: &[f64], others: &[&[f64]]) -> Result<()> {
        let nl = self.free_flow.len();
        if player >= self.players.len() {
            return Err(Error::dim("player index", self.players.len(), player + 1));
        }
        if others.len() + 1 != self.players.len() {
            return Err(Error::dim("opponent count", self.players.len() - 1, others.len()));
        }
        for x in std::iter::once(own).chain(others.iter().copied()) {
            if x.len() != nl {
                return Err(Error::dim("flow vector", nl, x.len()));
            }
            if let Some((link, &value)) = x.iter().enumerate().find(|(_, v)| **v < 0.0) {
                return Err(Error::NegativeFlow { link, value });
            }
        }
        Ok(())
    }

    fn total_flow(own: &[f64], others: &[&[f64]], j: usize) -> f64 {
        own[j] + others.iter().map(|o| o[j]).sum::<f64>()
    }
}

impl ConvexGame for TrafficGame {
    fn num_players(&self) -> usize {
        self.players.len()
    }

    fn action_set(&self, player: usize) -> &Polyhedron {
        &self.action_sets[player]
    }

    fn cost(&self, player: usize, own: &[f64], others: &[&[f64]]) -> Result<f64> {
        self.check_flows(player, own, others)?;
        let sum: f64 = (0..own.len())
            .filter(|&j| own[j] != 0.0)
            .map(|j| own[j] * self.bpr(j, Self::total_flow(own, others, j)))
            .sum();
        Ok(sum / self.deltas[player])
    }

    fn cost_gradient(&self, player: usize, own: &[f64], others: &[&[f64]]) -> Result<Vec<f64>> {
        self.check_flows(player, own, others)?;
        let nu = self.nu as i32;
        let inv_delta = 1.0 / self.deltas[player];
        Ok((0..own.len())
            .map(|j| {
                let total = Self::total_flow(own, others, j);
                let b = self.nominal_volume[j];
                let marginal = if nu == 0 || own[j] == 0.0 {
                    0.0
                } else {
                    own[j] * self.free_flow[j] * self.lambda * f64::from(self.nu) * total.powi(nu - 1) / b.powi(nu)
                };
                (self.bpr(j, total) + marginal) * inv_delta
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tntp::{parse_net, LinkRecord};

    fn link(i: usize, j: usize, cap: f64, fft: f64) -> LinkRecord {
        LinkRecord {
            init_node: i,
            term_node: j,
            capacity: cap,
            length: fft,
            free_flow_time: fft,
            b: 0.15,
            power: 4.0,
            speed: 0.0,
            toll: 0.0,
            link_type: 1.0,
        }
    }

    fn net(links: Vec<LinkRecord>, nodes: usize) -> NetworkData {
        NetworkData {
            num_nodes: nodes,
            num_links: links.len(),
            first_thru_node: 1,
            links,
            other_metadata: vec![],
        }
    }

    fn single_link(a: f64, b: f64, players: usize) -> TrafficGame {
        let specs = (0..players).map(|_| PlayerSpec::new(0, 1, 1.0)).collect();
        build_traffic_game(net(vec![link(0, 1, b, a)], 2), specs, 0.15, 4).unwrap()
    }

    #[test]
    fn demand_vectors() {
        assert_eq!(
            demand_vector(&PlayerSpec::new(0, 2, 2.0), 3).unwrap(),
            vec![2.0, 0.0, -2.0]
        );
        assert_eq!(demand_vector(&PlayerSpec::new(1, 0, 1.0), 2).unwrap(), vec![-1.0, 1.0]);
        assert!(demand_vector(&PlayerSpec::new(3, 0, 1.0), 2).is_err());
    }

    #[test]
    fn bpr_link_cost() {
        let g = single_link(1.0, 2.0, 1);
        assert_eq!(g.link_cost(0, 0.0).unwrap(), 1.0);
        assert!((g.link_cost(0, 2.0).unwrap() - 1.15).abs() < 1e-15);
        assert!(matches!(g.link_cost(0, -1.0), Err(Error::NegativeFlow { .. })));

        let first = single_link(6.0, 25900.20064, 1);
        assert!((first.link_cost(0, 25900.20064).unwrap() - 6.9).abs() < 1e-12);
    }

    #[test]
    fn normalized_player_cost() {
        let g = single_link(1.0, 1.0, 1);
        assert_eq!(g.deltas(), &[1.0]);
        assert_eq!(g.cost(0, &[0.0], &[]).unwrap(), 0.0);
        assert!((g.cost(0, &[1.0], &[]).unwrap() - 1.15).abs() < 1e-15);

        let g2 = single_link(1.0, 1.0, 2);
        assert!((g2.cost(0, &[1.0], &[&[1.0]]).unwrap() - 3.4).abs() < 1e-12);
        assert!(g2.cost(0, &[-1.0], &[&[1.0]]).is_err());
        assert!(g2.cost(0, &[1.0], &[]).is_err());
    }

    #[test]
    fn gradient_hand_values() {
        let g = single_link(1.0, 1.0, 1);
        let grad = g.cost_gradient(0, &[1.0], &[]).unwrap();
        assert!((grad[0] - 1.75).abs() < 1e-12);

        let g2 = single_link(1.0, 1.0, 2);
        let grad = g2.cost_gradient(0, &[0.0], &[&[2.0]]).unwrap();
        assert!((grad[0] - g2.link_cost(0, 2.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn nominal_cost_and_budget() {
        let g = build_traffic_game(
            net(vec![link(0, 1, 5.0, 6.0)], 2),
            vec![PlayerSpec::new(0, 1, 1.0)],
            0.15,
            4,
        )
        .unwrap();
        assert!((g.deltas()[0] - 6.0).abs() < 1e-12);
        assert!((g.gammas()[0] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_demand_names_player() {
        let n = net(vec![link(0, 1, 1.0, 1.0), link(0, 1, 1.0, 2.0)], 2);
        let err =
            build_traffic_game(n, vec![PlayerSpec::new(0, 1, 1.0), PlayerSpec::new(0, 1, 3.0)], 0.15, 4).unwrap_err();
        match err {
            Error::Player { player, source } => {
                assert_eq!(player, 1);
                assert!(matches!(*source, Error::Infeasible(_)));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let n = parse_net("<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n1 2 10 1 1 0.15 4 0 0 1 ;\n")
            .unwrap();
        let mut bad = PlayerSpec::new(0, 1, 1.0);
        bad.budget_factor = 0.5;
        assert!(build_traffic_game(n.clone(), vec![bad], 0.15, 4).is_err());
        assert!(build_traffic_game(n.clone(), vec![PlayerSpec::new(0, 0, 1.0)], 0.15, 4).is_err());
        assert!(build_traffic_game(n, vec![PlayerSpec::new(0, 1, 0.0)], 0.15, 4).is_err());
    }
}
