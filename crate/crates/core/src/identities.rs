//! Seeded random inputs and the algebraic identity suites.
//!
//! Every suite draws its cases from a ChaCha stream so a seed fixes the
//! whole run. Random fields are sums of terms `c · Π (n^μ/L_μ)^a · e^{λ·x}`
//! per matrix entry, with `L_μ` the box side, so values stay of order one
//! and partials of every order are exact. Cases without continuous
//! directions are also rerun on materialized grid coefficients.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::connection::{sigma_check, Connection};
use crate::domain::{make_domain, Domain, Field};
use crate::error::{Error, Result};
use crate::forms::{BasisWedge, Form};
use crate::value::{CMatrix, Shape, C64};

const TERMS: usize = 2;

/// Random domains, fields, forms and connections from a seeded stream.
pub struct Sampler {
    rng: ChaCha8Rng,
}

struct Term {
    coeff: C64,
    powers: Vec<i32>,
    rates: Vec<C64>,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn complex(&mut self) -> C64 {
        C64::new(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0))
    }

    /// Domain with `p` lattice directions of `side` sites and `q` continuous
    /// directions on `[0, 1]` sampled at spacing 0.25.
    pub fn domain(&mut self, p: usize, q: usize, side: usize) -> Result<Arc<Domain>> {
        if side == 0 {
            return Err(Error::Config("box side must be positive".into()));
        }
        let extents = vec![(0, side as i64 - 1); p];
        let ranges = vec![(0.0, 1.0); q];
        let spacings = vec![0.25; q];
        Ok(Arc::new(make_domain(p, q, &extents, &ranges, &spacings)?))
    }

    /// Domain with random `p, q ≤ 2`, `p + q ≥ 1`.
    pub fn any_domain(&mut self, side: usize) -> Result<Arc<Domain>> {
        let (p, q) = loop {
            let p = self.rng.gen_range(0..=2);
            let q = self.rng.gen_range(0..=2);
            if p + q > 0 {
                break (p, q);
            }
        };
        self.domain(p, q, side)
    }

    /// Smooth random field of the given shape with exact partials.
    pub fn field(&mut self, domain: &Arc<Domain>, shape: Shape) -> Field {
        let (p, q) = (domain.p(), domain.q());
        let scale: Vec<f64> = domain
            .lattice_extents()
            .iter()
            .map(|&(lo, hi)| 1.0 / (hi - lo + 1) as f64)
            .collect();
        let entries: Vec<Vec<Term>> = (0..shape.len())
            .map(|_| {
                (0..TERMS)
                    .map(|_| Term {
                        coeff: self.complex(),
                        powers: (0..p).map(|_| self.rng.gen_range(0..=2)).collect(),
                        rates: (0..q).map(|_| self.complex()).collect(),
                    })
                    .collect()
            })
            .collect();
        Field::analytic(domain, shape, vec![u32::MAX; q], move |pt, ord| {
            let data = entries
                .iter()
                .map(|terms| {
                    terms
                        .iter()
                        .map(|t| {
                            let mut v = t.coeff;
                            for (mu, &a) in t.powers.iter().enumerate() {
                                v *= (pt.lattice[mu] as f64 * scale[mu]).powi(a);
                            }
                            for (i, &l) in t.rates.iter().enumerate() {
                                v *= (l * pt.continuous[i]).exp() * l.powu(ord[i]);
                            }
                            v
                        })
                        .sum()
                })
                .collect();
            CMatrix::from_vec(shape, data).expect("entry count matches shape")
        })
        .expect("max_order length matches q")
    }

    /// Random form of the given degree with between one and all basis terms.
    pub fn form(&mut self, domain: &Arc<Domain>, degree: usize, shape: Shape) -> Result<Form> {
        let bases = bases_of_degree(domain, degree);
        if bases.is_empty() {
            return Ok(Form::zero(domain, degree, shape));
        }
        let keep = self.rng.gen_range(1..=bases.len());
        let mut chosen = bases;
        for i in (1..chosen.len()).rev() {
            let j = self.rng.gen_range(0..=i);
            chosen.swap(i, j);
        }
        chosen.truncate(keep);
        let terms: Vec<_> = chosen
            .into_iter()
            .map(|b| (b, self.field(domain, shape)))
            .collect();
        Form::from_terms(domain, degree, shape, terms)
    }

    /// Random `m × m` connection.
    pub fn connection(&mut self, domain: &Arc<Domain>, m: usize) -> Result<Connection> {
        let s = Shape::square(m);
        let discrete = (0..domain.p()).map(|_| self.field(domain, s)).collect();
        let continuous = (0..domain.q()).map(|_| self.field(domain, s)).collect();
        Connection::new(domain, discrete, continuous)
    }
}

/// Every canonical basis wedge of the given degree on `domain`.
pub fn bases_of_degree(domain: &Domain, degree: usize) -> Vec<BasisWedge> {
    let (p, q) = (domain.p(), domain.q());
    let mut out = Vec::new();
    for dn in 0u32..(1 << p) {
        for dx in 0u32..(1 << q) {
            if (dn.count_ones() + dx.count_ones()) as usize == degree {
                let ids = |mask: u32, len: usize| {
                    (0..len).filter(|k| mask >> k & 1 == 1).collect::<Vec<_>>()
                };
                out.push(BasisWedge::new(&ids(dn, p), &ids(dx, q)).expect("indices in range"));
            }
        }
    }
    out
}

/// Worst residual of one suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub worst: f64,
    /// Root sum of squares of the per-case residuals.
    pub l2: f64,
}

fn random_shape(s: &mut Sampler) -> Shape {
    Shape::square(s.rng.gen_range(1..=2))
}

fn with_grid(form: &Form) -> Result<Option<Form>> {
    if form.domain().q() == 0 {
        Ok(Some(form.materialize()?))
    } else {
        Ok(None)
    }
}

/// `d(dω)` for random forms of every degree.
pub fn suite_nilpotency(s: &mut Sampler, side: usize) -> Result<f64> {
    let d = s.any_domain(side)?;
    let degree = s.rng.gen_range(0..=d.p() + d.q());
    let shape = random_shape(s);
    let w = s.form(&d, degree, shape)?;
    let mut worst = w.d()?.d()?.max_norm_or_zero()?;
    if let Some(g) = with_grid(&w)? {
        worst = worst.max(g.d()?.d()?.max_norm_or_zero()?);
    }
    Ok(worst)
}

/// `d(ω∧τ) − dω∧τ − (−1)^{deg ω} ω∧dτ`.
pub fn suite_graded_leibniz(s: &mut Sampler, side: usize) -> Result<f64> {
    let d = s.any_domain(side)?;
    let top = d.p() + d.q();
    let a = s.rng.gen_range(0..=top.min(2));
    let b = s.rng.gen_range(0..=(top - a).min(2));
    let shape = random_shape(s);
    let w = s.form(&d, a, shape)?;
    let t = s.form(&d, b, shape)?;
    let check = |w: &Form, t: &Form| -> Result<f64> {
        let lhs = w.wedge(t)?.d()?;
        let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = w
            .d()?
            .wedge(t)?
            .add(&w.wedge(&t.d()?)?.scale(C64::new(sign, 0.0)))?;
        lhs.sub(&rhs)?.max_norm_or_zero()
    };
    let mut worst = check(&w, &t)?;
    if let (Some(wg), Some(tg)) = (with_grid(&w)?, with_grid(&t)?) {
        worst = worst.max(check(&wg, &tg)?);
    }
    Ok(worst)
}

/// `(ω∧η)∧ρ − ω∧(η∧ρ)`.
pub fn suite_wedge_associativity(s: &mut Sampler, side: usize) -> Result<f64> {
    let d = s.any_domain(side)?;
    let top = d.p() + d.q();
    let shape = random_shape(s);
    let mut forms = Vec::new();
    let mut left = top;
    for _ in 0..3 {
        let k = s.rng.gen_range(0..=left.min(1));
        left -= k;
        forms.push(s.form(&d, k, shape)?);
    }
    let check = |f: &[Form]| -> Result<f64> {
        let l = f[0].wedge(&f[1])?.wedge(&f[2])?;
        let r = f[0].wedge(&f[1].wedge(&f[2])?)?;
        l.sub(&r)?.max_norm_or_zero()
    };
    let mut worst = check(&forms)?;
    if d.q() == 0 {
        let grid = forms
            .iter()
            .map(|f| f.materialize())
            .collect::<Result<Vec<_>>>()?;
        worst = worst.max(check(&grid)?);
    }
    Ok(worst)
}

/// `Δ_μ(fg) − [Δ_μ f · E_μ g + f · Δ_μ g]` on matrix fields.
pub fn suite_deformed_leibniz(s: &mut Sampler, side: usize) -> Result<f64> {
    let p = s.rng.gen_range(1..=2);
    let q = s.rng.gen_range(0..=1);
    let d = s.domain(p, q, side)?;
    let shape = random_shape(s);
    let f = s.field(&d, shape);
    let g = s.field(&d, shape);
    let mu = s.rng.gen_range(0..p);
    let check = |f: &Field, g: &Field| -> Result<f64> {
        let lhs = f.matmul(g)?.delta(mu)?;
        let rhs = f
            .delta(mu)?
            .matmul(&g.shift(mu)?)?
            .add(&f.matmul(&g.delta(mu)?)?)?;
        lhs.sub(&rhs)?.max_norm()
    };
    let mut worst = check(&f, &g)?;
    if q == 0 {
        worst = worst.max(check(&f.materialize()?, &g.materialize()?)?);
    }
    Ok(worst)
}

/// σ bimodule identity on generators `s_α ⊗ df`.
pub fn suite_sigma(s: &mut Sampler, side: usize) -> Result<f64> {
    let d = s.any_domain(side)?;
    let m = s.rng.gen_range(1..=3);
    let b = s.connection(&d, m)?;
    let f = s.field(&d, Shape::SCALAR);
    let alpha = s.rng.gen_range(0..m);
    sigma_check(alpha, &f, &b)
}

type Suite = fn(&mut Sampler, usize) -> Result<f64>;

pub const SUITES: [(&str, Suite); 5] = [
    ("d_squared", suite_nilpotency),
    ("graded_leibniz", suite_graded_leibniz),
    ("wedge_associativity", suite_wedge_associativity),
    ("deformed_leibniz", suite_deformed_leibniz),
    ("sigma_bimodule", suite_sigma),
];

/// Runs every suite `cases` times, cycling through the box sides in `sizes`.
///
/// Each suite gets its own stream derived from `seed`, so the suites can run
/// in parallel and adding cases to one does not reshuffle another.
pub fn run_all(seed: u64, sizes: &[usize], cases: usize) -> Result<Vec<SuiteResult>> {
    use rayon::prelude::*;
    if sizes.is_empty() {
        return Err(Error::Config("size list is empty".into()));
    }
    if let Some(&bad) = sizes.iter().find(|&&n| n < 4) {
        return Err(Error::Config(format!(
            "box side {bad} is below the minimum 4"
        )));
    }
    if cases == 0 {
        return Err(Error::Config("case count must be positive".into()));
    }
    SUITES
        .par_iter()
        .enumerate()
        .map(|(k, (name, suite))| {
            let mut s = Sampler::new(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k as u64 + 1)));
            let (mut worst, mut sq) = (0.0f64, 0.0f64);
            for case in 0..cases {
                let r = suite(&mut s, sizes[case % sizes.len()])?;
                worst = worst.max(r);
                sq += r * r;
            }
            Ok(SuiteResult {
                name: name.to_string(),
                cases,
                worst,
                l2: sq.sqrt(),
            })
        })
        .collect()
}

trait MaxNormOrZero {
    fn max_norm_or_zero(&self) -> Result<f64>;
}

impl MaxNormOrZero for Form {
    /// Forms that cancel to no terms at all have norm zero.
    fn max_norm_or_zero(&self) -> Result<f64> {
        if self.is_empty() {
            Ok(0.0)
        } else {
            self.max_norm()
        }
    }
}
