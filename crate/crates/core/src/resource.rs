//! Resource distribution over a lossy capacitated network, fed from one
//! storage facility whose inventory is the state.
//!
//! Node 0 is the facility and nodes `1..=m` are consuming locations. Per
//! period the actions are, in order: the net delivery `z_i = -y_i >= 0` to
//! each location, the flow on each arc, and one epigraph variable per location
//! whose demand is deterministic. Inventory moves as `I - y_0 + D_0`, where
//! `D_0` is the arrival at the facility.
//!
//! Location costs `h_i (z_i - D_i)^+ + s_i (D_i - z_i)^+` enter the state-action
//! cost through the epigraph variables when `D_i` is a constant. The noise
//! cost has a single scalar argument, so at most one location per period may
//! have random demand; its cost becomes the noise cost with argument
//! `D_i - z_i`.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::io::{DistSpec, Q};
use crate::model::{CostFn, DpInstance, StageModel};
use crate::pwl::{MaxAffine, Plane, PwlConvex};
use crate::randvar::RandVar;
use crate::rat::{self, Rat};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationSpec {
    /// Cost per unit of unmet demand.
    pub shortage: Q,
    /// Cost per unit delivered beyond demand.
    pub disposal: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpec {
    pub from: usize,
    pub to: usize,
    pub cost: Q,
    pub capacity: Q,
    /// Fraction of the flow that arrives; `1` means lossless.
    #[serde(default = "one")]
    pub gain: Q,
}

fn one() -> Q {
    Q(Rat::one())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodSpec {
    /// Arrival at the facility after the period; none means zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival: Option<DistSpec>,
    /// One distribution per location.
    pub demand: Vec<DistSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceSpec {
    pub format: u64,
    pub model: String,
    pub eps: Q,
    pub initial_inventory: Q,
    /// Upper end of the first state space; defaults to the initial inventory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_inventory: Option<Q>,
    pub locations: Vec<LocationSpec>,
    pub arcs: Vec<ArcSpec>,
    /// Per-unit cost of inventory left after the last period.
    pub terminal_holding: Q,
    /// Fixed terminal cost; keeps the terminal cost bounded away from zero.
    #[serde(default = "zero")]
    pub terminal_fixed: Q,
    pub periods: Vec<PeriodSpec>,
}

fn zero() -> Q {
    Q(Rat::zero())
}

fn nonneg(field: String, x: &Rat) -> Result<()> {
    if x.is_negative() {
        return Err(Error::validation(field, "costs must be nonnegative"));
    }
    Ok(())
}

impl ResourceSpec {
    fn check(&self) -> Result<()> {
        let m = self.locations.len();
        if self.periods.is_empty() {
            return Err(Error::Schema("periods: at least one period is required".into()));
        }
        if m == 0 {
            return Err(Error::validation("locations", "at least one location is required"));
        }
        for (i, l) in self.locations.iter().enumerate() {
            nonneg(format!("locations[{i}].shortage"), &l.shortage.0)?;
            nonneg(format!("locations[{i}].disposal"), &l.disposal.0)?;
        }
        for (e, a) in self.arcs.iter().enumerate() {
            let field = |n: &str| format!("arcs[{e}].{n}");
            if a.from > m || a.to > m || a.from == a.to {
                return Err(Error::validation(
                    field("to"),
                    format!("endpoints must be distinct nodes in 0..={m}"),
                ));
            }
            nonneg(field("cost"), &a.cost.0)?;
            if !a.capacity.0.is_positive() {
                return Err(Error::validation(field("capacity"), "capacity must be positive"));
            }
            if !a.gain.0.is_positive() || a.gain.0 > Rat::one() {
                return Err(Error::validation(field("gain"), "gain must lie in (0, 1]"));
            }
        }
        nonneg("terminal_holding".into(), &self.terminal_holding.0)?;
        nonneg("terminal_fixed".into(), &self.terminal_fixed.0)?;
        // Every location must be reachable from the facility.
        let mut seen = vec![false; m + 1];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            for a in self.arcs.iter().filter(|a| a.from == v) {
                if !seen[a.to] {
                    seen[a.to] = true;
                    stack.push(a.to);
                }
            }
        }
        if let Some(i) = (1..=m).find(|&i| !seen[i]) {
            return Err(Error::validation(
                format!("locations[{}]", i - 1),
                "disconnected: no arc path from the facility",
            ));
        }
        for (t, p) in self.periods.iter().enumerate() {
            if p.demand.len() != m {
                return Err(Error::Schema(format!(
                    "periods[{t}].demand: one distribution per location is required"
                )));
            }
        }
        Ok(())
    }

    pub fn build(self) -> Result<DpInstance> {
        if self.model != "resource" {
            return Err(Error::Schema("model: expected `resource`".into()));
        }
        self.check()?;
        let m = self.locations.len();
        let n_arcs = self.arcs.len();
        let lo = Rat::zero();
        let hi = self
            .max_inventory
            .as_ref()
            .map_or(self.initial_inventory.0.clone(), |x| x.0.clone());
        let mut states =
            Interval::new(lo, hi).map_err(|_| Error::validation("max_inventory", "must be at least zero"))?;
        // Largest possible net delivery to each location.
        let mut reach = vec![Rat::zero(); m + 1];
        for a in &self.arcs {
            reach[a.to] += &a.gain.0 * &a.capacity.0;
        }
        let mut stages = Vec::with_capacity(self.periods.len());
        for (t, period) in self.periods.iter().enumerate() {
            let field = |n: String| format!("periods[{t}].{n}");
            let demand = period
                .demand
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    d.clone()
                        .build()
                        .map_err(|e| Error::validation(field(format!("demand[{i}]")), e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            let arrival = match &period.arrival {
                Some(d) => d
                    .clone()
                    .build()
                    .map_err(|e| Error::validation(field("arrival".into()), e.to_string()))?,
                None => RandVar::point(Rat::zero()),
            };
            let random: Vec<usize> = (0..m).filter(|&i| !demand[i].is_degenerate()).collect();
            if random.len() > 1 {
                return Err(Error::validation(
                    field("demand".into()),
                    "at most one location per period may have random demand (the noise cost has a single argument)",
                ));
            }
            let epigraph: Vec<usize> = (0..m)
                .filter(|&i| !random.contains(&i))
                .filter(|&i| !(self.locations[i].shortage.0.is_zero() && self.locations[i].disposal.0.is_zero()))
                .collect();
            let p = m + n_arcs + epigraph.len();
            let flow = |e: usize| m + e;
            let mut a = Vec::new();
            let mut b = Vec::new();
            let mut delta_b = Vec::new();
            let mut push = |row: Vec<Rat>, rhs: Rat, slope: Rat| {
                a.push(row);
                b.push(rhs);
                delta_b.push(slope);
            };
            // Net delivery equals inflow after losses minus outflow.
            for i in 0..m {
                let mut row = vec![Rat::zero(); p];
                row[i] = Rat::one();
                for (e, arc) in self.arcs.iter().enumerate() {
                    if arc.to == i + 1 {
                        row[flow(e)] -= &arc.gain.0;
                    }
                    if arc.from == i + 1 {
                        row[flow(e)] += Rat::one();
                    }
                }
                let neg = row.iter().map(|c| -c).collect();
                push(row, Rat::zero(), Rat::zero());
                push(neg, Rat::zero(), Rat::zero());
            }
            // Facility balance y_0 <= I, written as -y_0 >= -I.
            let mut theta_action = vec![Rat::zero(); p];
            for (e, arc) in self.arcs.iter().enumerate() {
                if arc.from == 0 {
                    theta_action[flow(e)] -= Rat::one();
                }
                if arc.to == 0 {
                    theta_action[flow(e)] += &arc.gain.0;
                }
            }
            push(theta_action.clone(), Rat::zero(), -Rat::one());
            for (e, arc) in self.arcs.iter().enumerate() {
                let mut row = vec![Rat::zero(); p];
                row[flow(e)] = -Rat::one();
                push(row, -&arc.capacity.0, Rat::zero());
            }
            let mut coef_action = vec![Rat::zero(); p];
            for (e, arc) in self.arcs.iter().enumerate() {
                coef_action[flow(e)] = arc.cost.0.clone();
            }
            for (k, &i) in epigraph.iter().enumerate() {
                let w = m + n_arcs + k;
                let d = demand[i].support().lo;
                let (s, h) = (&self.locations[i].shortage.0, &self.locations[i].disposal.0);
                let zmax = &reach[i + 1];
                // w >= h (z - d), w >= s (d - z), w <= largest such cost.
                let mut row = vec![Rat::zero(); p];
                row[w] = Rat::one();
                row[i] = -h;
                push(row, -(h * &d), Rat::zero());
                let mut row = vec![Rat::zero(); p];
                row[w] = Rat::one();
                row[i] = s.clone();
                push(row, s * &d, Rat::zero());
                let cap = rat::max(&rat::max(&(h * (zmax - &d)), &(s * &d)), &Rat::zero());
                let mut row = vec![Rat::zero(); p];
                row[w] = -Rat::one();
                push(row, -cap, Rat::zero());
                coef_action[w] = Rat::one();
            }
            let mut noise = vec![arrival];
            let mut sigma_action = vec![Rat::zero(); p];
            let mut sigma_noise = vec![Rat::zero()];
            let mut cost_noise = None;
            if let Some(&i) = random.first() {
                let d = demand[i].clone();
                let sup = d.support();
                noise.push(d);
                sigma_noise.push(Rat::one());
                sigma_action[i] = -Rat::one();
                let (s, h) = (&self.locations[i].shortage.0, &self.locations[i].disposal.0);
                let dom = Interval::new(&sup.lo - &reach[i + 1], sup.hi)?;
                cost_noise = Some(CostFn::Pwl(PwlConvex::from_lines(
                    &[(-h, Rat::zero()), (s.clone(), Rat::zero())],
                    &dom,
                )?));
            }
            let mut theta_noise = vec![Rat::zero(); noise.len()];
            theta_noise[0] = Rat::one();
            let stage = StageModel {
                a,
                b,
                delta_b,
                theta_state: Rat::one(),
                theta_action,
                theta_noise,
                sigma_state: Rat::zero(),
                sigma_action,
                sigma_noise,
                cost_state: MaxAffine::new(vec![Plane {
                    coef_state: Rat::zero(),
                    coef_action,
                    constant: Rat::zero(),
                }])?,
                cost_noise,
                noise,
                states: states.clone(),
            };
            let next = stage
                .affine_range(&stage.theta_state, &stage.theta_action)?
                .ok_or_else(|| Error::validation(field("arrival".into()), "inventory is unbounded"))?
                .add(&stage.noise_range(&stage.theta_noise));
            states = next;
            stages.push(stage);
        }
        let terminal = PwlConvex::linear(&states, self.terminal_holding.0.clone(), self.terminal_fixed.0.clone());
        let inst = DpInstance {
            stages,
            terminal: CostFn::Pwl(terminal),
            terminal_states: states,
            terminal_min: None,
            initial_state: self.initial_inventory.0.clone(),
            eps: self.eps.0.clone(),
        };
        inst.validate()?;
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_instance;
    use crate::oracle::deterministic_equivalent;
    use crate::rat::{int, ratio};

    fn single_arc(gain: &str) -> String {
        format!(
            r#"{{
            "format": 1, "model": "resource", "eps": "1/10",
            "initial_inventory": "3",
            "locations": [{{"shortage": "5", "disposal": "1"}}],
            "arcs": [{{"from": 0, "to": 1, "cost": "1", "capacity": "4", "gain": "{gain}"}}],
            "terminal_holding": "1/2", "terminal_fixed": "1",
            "periods": [{{"demand": [{{"kind": "discrete", "atoms": [["2", "1"]]}}]}}]
        }}"#
        )
    }

    #[test]
    fn deterministic_demand_is_a_transportation_problem() {
        let inst = parse_instance(&single_arc("1")).unwrap();
        assert!(inst.stages[0].cost_noise.is_none());
        // Ship 2 at cost 2, keep 1 at terminal cost 1/2 + 1.
        let v = deterministic_equivalent(&inst).unwrap();
        assert_eq!(v.value, ratio(7, 2));
        assert_eq!(v.action[0], int(2));
        assert_eq!(v.action[1], int(2));
    }

    #[test]
    fn lossless_flow_is_conserved() {
        let inst = parse_instance(&single_arc("1")).unwrap();
        let s = &inst.stages[0];
        // Flow 2 delivers 2; delivering 3 with flow 2 is infeasible.
        let ok = [int(2), int(2), int(0)];
        assert!(s.is_action_feasible(&int(3), &ok));
        let bad = [int(3), int(2), int(5)];
        assert!(!s.is_action_feasible(&int(3), &bad));
        assert_eq!(s.transition(&int(3), &ok, &[int(0)]), int(1));
    }

    #[test]
    fn losses_scale_deliveries() {
        let inst = parse_instance(&single_arc("1/2")).unwrap();
        // All 3 units on hand ship, 3/2 arrive and 1/2 is short.
        let v = deterministic_equivalent(&inst).unwrap();
        assert_eq!(v.value, int(3) + ratio(5, 2) + int(1));
    }

    #[test]
    fn rejects_bad_networks() {
        let text = single_arc("1").replace(r#""from": 0, "to": 1"#, r#""from": 1, "to": 0"#);
        match parse_instance(&text).unwrap_err() {
            Error::Validation { field, msg } => {
                assert_eq!(field, "locations[0]");
                assert!(msg.contains("disconnected"));
            }
            other => panic!("{other}"),
        }
        let text = single_arc("1").replace(r#""cost": "1""#, r#""cost": "-1""#);
        assert!(matches!(parse_instance(&text), Err(Error::Validation { field, .. }) if field == "arcs[0].cost"));
    }
}
