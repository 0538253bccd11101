//! Model data: rate constants, the four-field state, and the reaction terms.
//!
//! The state couples susceptible, infectious and recovered host densities
//! `S, I, R` with a waterborne bacterial concentration `B`. Hosts are
//! recruited at rate `b`, die at rate `d`, recover at rate `gamma` and lose
//! immunity at rate `sigma`. Infection happens by direct host-to-host
//! contact (`beta1 S I`) and by ingestion from the water reservoir with
//! saturating incidence `beta2 S B/(B+K)`. Infectious hosts shed bacteria at
//! rate `xi`; bacteria grow logistically (`g`, capacity `K_B`), die at rate
//! `delta`, and are carried downstream with speed `U`.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// The model rate constants plus the four diffusivities. All strictly
/// positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    /// Recruitment rate of susceptible hosts.
    pub b: f64,
    /// Natural death rate of hosts.
    pub d: f64,
    /// Recovery rate of infectious hosts.
    pub gamma: f64,
    /// Rate of host immunity loss.
    pub sigma: f64,
    /// Natural death rate of bacteria.
    pub delta: f64,
    /// Shedding rate of bacteria by infectious hosts.
    pub xi: f64,
    /// Direct transmission coefficient.
    pub beta1: f64,
    /// Indirect (waterborne) transmission coefficient.
    pub beta2: f64,
    /// Half-saturation bacterial density of the indirect incidence.
    pub k: f64,
    /// Bacterial convection speed.
    pub u: f64,
    /// Maximal carrying capacity of bacteria.
    pub k_b: f64,
    /// Intrinsic bacterial growth rate.
    pub g: f64,
    /// Diffusivities of S, I, R hosts and of bacteria.
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl Parameters {
    /// Host density at the disease-free equilibrium, `b/d`.
    pub fn m_star(&self) -> f64 {
        self.b / self.d
    }

    /// Whether the three host diffusivities coincide. The threshold-dynamics
    /// guarantees (extinction below threshold, persistence above) are only
    /// backed in this regime.
    pub fn equal_host_diffusion(&self) -> bool {
        self.d1 == self.d2 && self.d2 == self.d3
    }

    /// Whether bacterial growth is dominated by bacterial death, `g < delta`.
    /// Required for the persistence guarantee and for the dissipative bound
    /// on `B`.
    pub fn growth_below_death(&self) -> bool {
        self.g < self.delta
    }

    fn fields(&self) -> [(&'static str, f64); 16] {
        [
            ("b", self.b),
            ("d", self.d),
            ("gamma", self.gamma),
            ("sigma", self.sigma),
            ("delta", self.delta),
            ("xi", self.xi),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("K", self.k),
            ("U", self.u),
            ("K_B", self.k_b),
            ("g", self.g),
            ("D1", self.d1),
            ("D2", self.d2),
            ("D3", self.d3),
            ("D4", self.d4),
        ]
    }

    /// Named (key, value) pairs in config-file spelling, for emission.
    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        let mut v = self.fields().to_vec();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Hard-errors on any nonpositive or non-finite constant; returns
    /// human-readable warnings when a hypothesis needed by the threshold
    /// guarantees fails (the simulation itself is still well defined).
    /// The convection speed `U` alone may be zero: the no-convection case
    /// is a meaningful limit (the bacterial boundary condition reduces to
    /// zero-gradient and the spatial reproduction number collapses onto
    /// the space-free one).
    pub fn validate(&self) -> Result<Vec<String>> {
        for (name, value) in self.fields() {
            let ok = if name == "U" { value >= 0.0 } else { value > 0.0 };
            if !ok || !value.is_finite() {
                return Err(Error::NonpositiveParameter { name, value });
            }
        }
        let mut warnings = Vec::new();
        if !self.equal_host_diffusion() {
            warnings.push(format!(
                "host diffusivities differ (D1 = {}, D2 = {}, D3 = {}); \
                 threshold-dynamics guarantees assume a common host diffusivity",
                self.d1, self.d2, self.d3
            ));
        }
        if !self.growth_below_death() {
            warnings.push(format!(
                "bacterial growth g = {} is not below bacterial death delta = {}; \
                 the persistence guarantee and the dissipative bound on B assume g < delta",
                self.g, self.delta
            ));
        }
        Ok(warnings)
    }

    /// Baseline preset: all rates order one, `b = d` so the disease-free
    /// host density is 1, growth at half the bacterial death rate, and a
    /// mild downstream current.
    pub fn baseline() -> Self {
        Parameters {
            b: 1.0,
            d: 1.0,
            gamma: 1.0,
            sigma: 0.5,
            delta: 1.0,
            xi: 1.0,
            beta1: 0.5,
            beta2: 0.5,
            k: 1.0,
            u: 0.5,
            k_b: 1.0,
            g: 0.5,
            d1: 1.0,
            d2: 1.0,
            d3: 1.0,
            d4: 1.0,
        }
    }
}

/// Per-cell values of the four fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub s: Field,
    pub i: Field,
    pub r: Field,
    pub b: Field,
    pub time: f64,
}

impl State {
    /// Build a state, checking lengths against the grid and rejecting
    /// negative or non-finite entries.
    pub fn new(grid: &Grid, s: Field, i: Field, r: Field, b: Field, time: f64) -> Result<Self> {
        let state = State { s, i, r, b, time };
        state.check(grid)?;
        Ok(state)
    }

    /// The disease-free equilibrium: hosts at `b/d`, no infection, no
    /// bacteria.
    pub fn dfe(params: &Parameters, grid: &Grid) -> Self {
        let n = grid.n_cells();
        State {
            s: vec![params.m_star(); n],
            i: vec![0.0; n],
            r: vec![0.0; n],
            b: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.s.len()
    }

    pub fn fields(&self) -> [(&'static str, &Field); 4] {
        [("S", &self.s), ("I", &self.i), ("R", &self.r), ("B", &self.b)]
    }

    pub(crate) fn check(&self, grid: &Grid) -> Result<()> {
        for (name, f) in self.fields() {
            grid.check_len(f)?;
            for (cell, &v) in f.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        field: name,
                        cell,
                        time: self.time,
                    });
                }
                if v < 0.0 {
                    return Err(Error::NegativeInitial {
                        field: name,
                        cell,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    /// Sum of the four per-field sup-norm distances; the metric used for
    /// equilibrium-distance verdicts.
    pub fn distance(&self, other: &State) -> f64 {
        sup_diff(&self.s, &other.s)
            + sup_diff(&self.i, &other.i)
            + sup_diff(&self.r, &other.r)
            + sup_diff(&self.b, &other.b)
    }

    /// Largest per-cell change across all four fields.
    pub fn max_field_diff(&self, other: &State) -> f64 {
        sup_diff(&self.s, &other.s)
            .max(sup_diff(&self.i, &other.i))
            .max(sup_diff(&self.r, &other.r))
            .max(sup_diff(&self.b, &other.b))
    }

    /// Sum of the four sup norms.
    pub fn total_sup_norm(&self) -> f64 {
        sup_norm(&self.s) + sup_norm(&self.i) + sup_norm(&self.r) + sup_norm(&self.b)
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}

pub fn min_value(v: &[f64]) -> f64 {
    v.iter().fold(f64::INFINITY, |m, &x| m.min(x))
}

/// Pointwise reaction rates of the four fields.
#[derive(Debug, Clone)]
pub struct Reaction {
    pub ds: Field,
    pub di: Field,
    pub dr: Field,
    pub db: Field,
}

/// Evaluate the reaction terms cell by cell:
///
/// ```text
/// dS = b − beta1·S·I − beta2·S·B/(B+K) − d·S + sigma·R
/// dI = beta1·S·I + beta2·S·B/(B+K) − (d+gamma)·I
/// dR = gamma·I − (d+sigma)·R
/// dB = xi·I + g·B·(1 − B/K_B) − delta·B
/// ```
///
/// The saturating factor `B/(B+K)` is exact at `B = 0` and monotone in `B`;
/// no regularization is needed while `B ≥ 0`.
pub fn reaction(state: &State, params: &Parameters) -> Reaction {
    let n = state.n_cells();
    let mut out = Reaction {
        ds: vec![0.0; n],
        di: vec![0.0; n],
        dr: vec![0.0; n],
        db: vec![0.0; n],
    };
    let p = params;
    for c in 0..n {
        let (s, i, r, b) = (state.s[c], state.i[c], state.r[c], state.b[c]);
        let direct = p.beta1 * s * i;
        let indirect = p.beta2 * s * (b / (b + p.k));
        out.ds[c] = p.b - direct - indirect - p.d * s + p.sigma * r;
        out.di[c] = direct + indirect - (p.d + p.gamma) * i;
        out.dr[c] = p.gamma * i - (p.d + p.sigma) * r;
        out.db[c] = p.xi * i + p.g * b * (1.0 - b / p.k_b) - p.delta * b;
    }
    out
}

/// A-priori sup-norm box that the discrete dynamics cannot leave, used to
/// bound the reaction Jacobian.
///
/// Hosts: the total `V = S + I + R` contracts toward `b/d` step by step
/// (zero-row-sum host operators plus the conservation identity), so each
/// host field stays below `max(‖V(0)‖∞, b/d)`. Bacteria: shedding is capped
/// by the host bound and the logistic term caps growth, giving the positive
/// root of `g B²/K_B + (delta − g) B = xi·M_host`. The host part is exact
/// under equal host diffusivities; with unequal diffusivities it is the
/// right scale and the stepper still hard-fails on any negativity.
#[derive(Debug, Clone, Copy)]
pub struct StateBox {
    pub host: f64,
    pub bacteria: f64,
}

pub fn dissipative_box(params: &Parameters, initial: &State) -> StateBox {
    let n = initial.n_cells();
    let v0 = (0..n)
        .map(|c| initial.s[c] + initial.i[c] + initial.r[c])
        .fold(0.0f64, f64::max);
    let host = v0.max(params.m_star());
    let (g, delta, k_b, xi) = (params.g, params.delta, params.k_b, params.xi);
    let root = k_b / (2.0 * g)
        * ((g - delta) + ((g - delta).powi(2) + 4.0 * g * xi * host / k_b).sqrt());
    let bacteria = sup_norm(&initial.b).max(root);
    StateBox { host, bacteria }
}

/// Sup-norm bound on the reaction Jacobian over the box (max absolute row
/// sum). Also a Lipschitz constant of the reaction there.
pub fn reaction_lipschitz(params: &Parameters, bounds: &StateBox) -> f64 {
    let p = params;
    let mh = bounds.host;
    let mb = bounds.bacteria;
    let row_s = (p.beta1 * mh + p.beta2 + p.d) + p.beta1 * mh + p.sigma + p.beta2 * mh / p.k;
    let row_i = (p.beta1 * mh + p.beta2) + (p.beta1 * mh + p.d + p.gamma) + p.beta2 * mh / p.k;
    let row_r = p.gamma + p.d + p.sigma;
    let row_b = p.xi + p.g * (1.0 + 2.0 * mb / p.k_b) + p.delta;
    row_s.max(row_i).max(row_r).max(row_b)
}
