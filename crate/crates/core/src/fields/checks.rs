use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Field;
use crate::quadrature::{phi_apply, QuadratureError, TimeGrid, Trajectory};
use crate::space::{CoeffVec, OrderInterval};

/// Sampling parameters shared by the checkers.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub t_samples: Vec<f64>,
    /// Random trials on top of the structured ones.
    pub trials: usize,
    pub rng_seed: u64,
    /// Coordinates `0..depth` are sampled and compared.
    pub depth: usize,
    pub ladder_len: usize,
}

impl CheckConfig {
    pub fn new(horizon: f64, depth: usize, rng_seed: u64) -> CheckConfig {
        CheckConfig {
            t_samples: (0..5).map(|j| horizon * j as f64 / 4.0).collect(),
            trials: 200,
            rng_seed,
            depth,
            ladder_len: 40,
        }
    }
}

/// A falsifying sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub trial: usize,
    pub t: f64,
    pub k: usize,
    /// `(j, x_j, y_j)` over the coordinates `f_k` reads.
    pub coords: Vec<(usize, f64, Option<f64>)>,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trial {} t={} k={}:", self.trial, self.t, self.k)?;
        for (j, x, y) in &self.coords {
            match y {
                Some(y) => write!(f, " x_{j}={x} y_{j}={y}")?,
                None => write!(f, " x_{j}={x}")?,
            }
        }
        write!(f, " ({} vs {})", self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub ok: bool,
    pub trials: usize,
    pub seed: u64,
    pub witness: Option<Witness>,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.ok { "ok" } else { "FAILED" };
        write!(f, "{}: {verdict} ({} trials, seed {})", self.name, self.trials, self.seed)?;
        if let Some(w) = &self.witness {
            write!(f, "; witness {w}")?;
        }
        Ok(())
    }
}

struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
    base: CoeffVec,
}

impl Bounds {
    fn new(b: &OrderInterval, depth: usize) -> Bounds {
        let lo: Vec<f64> = (0..depth).map(|k| b.lo().coord_bounds(k).1).collect();
        let hi: Vec<f64> = (0..depth).map(|k| b.hi().coord_bounds(k).0.max(lo[k])).collect();
        Bounds { lo, hi, base: b.lo().clone() }
    }

    fn mid(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| a + 0.5 * (b - a)).collect()
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| a + rng.gen::<f64>() * (b - a)).collect()
    }

    fn state(&self, v: &[f64]) -> CoeffVec {
        self.base.with_leading(v)
    }
}

fn coords(f: &dyn Field, k: usize, x: &[f64], y: Option<&[f64]>, base: &CoeffVec) -> Vec<(usize, f64, Option<f64>)> {
    let read = |v: &[f64], j: usize| v.get(j).copied().unwrap_or_else(|| base.coord(j));
    f.depends_on(k)
        .into_iter()
        .map(|j| (j, read(x, j), y.map(|y| read(y, j))))
        .collect()
}

/// Samples pairs `x ≤ y` in the box and looks for `f_k(t,x) > f_k(t,y)`.
pub fn check_monotone(f: &dyn Field, b: &OrderInterval, cfg: &CheckConfig) -> CheckReport {
    let bounds = Bounds::new(b, cfg.depth);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let (lo, mid, hi) = (bounds.lo.clone(), bounds.mid(), bounds.hi.clone());
    let mut pairs = vec![
        (lo.clone(), mid.clone()),
        (mid.clone(), hi.clone()),
        (lo.clone(), hi.clone()),
        (lo.clone(), lo),
        (hi.clone(), hi),
    ];
    for _ in 0..cfg.trials {
        let x = bounds.random(&mut rng);
        let sparse = rng.gen_bool(0.5);
        let y = x
            .iter()
            .zip(&bounds.hi)
            .map(|(&xi, &h)| {
                if sparse && rng.gen_bool(0.5) {
                    xi
                } else {
                    (xi + rng.gen::<f64>() * (h - xi)).min(h).max(xi)
                }
            })
            .collect();
        pairs.push((x, y));
    }
    let trials = pairs.len();
    for (trial, (x, y)) in pairs.iter().enumerate() {
        let (xs, ys) = (bounds.state(x), bounds.state(y));
        for &t in &cfg.t_samples {
            for k in 0..cfg.depth {
                let (fx, fy) = (f.eval_coord(t, &xs, k), f.eval_coord(t, &ys, k));
                if fx > fy {
                    return CheckReport {
                        name: "monotone",
                        ok: false,
                        trials,
                        seed: cfg.rng_seed,
                        witness: Some(Witness {
                            trial,
                            t,
                            k,
                            coords: coords(f, k, x, Some(y), &bounds.base),
                            lhs: fx,
                            rhs: fy,
                        }),
                    };
                }
            }
        }
    }
    CheckReport { name: "monotone", ok: true, trials, seed: cfg.rng_seed, witness: None }
}

/// Looks for `f_k(t, x) > C_k` with `x` in the box.
pub fn check_bound(f: &dyn Field, b: &OrderInterval, c: &CoeffVec, cfg: &CheckConfig) -> CheckReport {
    let bounds = Bounds::new(b, cfg.depth);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut points = vec![bounds.lo.clone(), bounds.hi.clone(), bounds.mid()];
    points.extend((0..cfg.trials).map(|_| bounds.random(&mut rng)));
    let trials = points.len();
    for (trial, x) in points.iter().enumerate() {
        let xs = bounds.state(x);
        for &t in &cfg.t_samples {
            for k in 0..cfg.depth {
                let (fx, ck) = (f.eval_coord(t, &xs, k), c.coord_bounds(k).0);
                if fx > ck {
                    return CheckReport {
                        name: "bound",
                        ok: false,
                        trials,
                        seed: cfg.rng_seed,
                        witness: Some(Witness {
                            trial,
                            t,
                            k,
                            coords: coords(f, k, x, None, &bounds.base),
                            lhs: fx,
                            rhs: ck,
                        }),
                    };
                }
            }
        }
    }
    CheckReport { name: "bound", ok: true, trials, seed: cfg.rng_seed, witness: None }
}

/// Checks `x_* ≤ Φ(x_*)` at every grid node on the first `n` coordinates,
/// with the same cell quadrature the iteration uses.
pub fn check_subsolution(
    f: &dyn Field,
    x_star: &CoeffVec,
    x_hat: &CoeffVec,
    grid: &TimeGrid,
    n: usize,
) -> Result<CheckReport, QuadratureError> {
    let envelope = OrderInterval::new(x_star.clone(), x_star.clone())?;
    let u = Trajectory::constant(grid.clone(), x_star, n, envelope);
    let phi = phi_apply(f, x_hat, &u)?;
    let lower = x_star.truncated(n);
    for j in 0..grid.nodes().len() {
        for k in 0..n {
            if lower[k] > phi.row(j)[k] {
                return Ok(CheckReport {
                    name: "subsolution",
                    ok: false,
                    trials: grid.nodes().len(),
                    seed: 0,
                    witness: Some(Witness {
                        trial: j,
                        t: grid.node(j),
                        k,
                        coords: coords(f, k, &lower, None, x_star),
                        lhs: lower[k],
                        rhs: phi.row(j)[k],
                    }),
                });
            }
        }
    }
    Ok(CheckReport { name: "subsolution", ok: true, trials: grid.nodes().len(), seed: 0, witness: None })
}

fn continuity_tol(f: &dyn Field) -> f64 {
    if f.piecewise_constant() {
        0.0
    } else {
        1e-9
    }
}

/// Compares `f_k(t, ·)` at the top rung of an increasing ladder with its value
/// at the limit.
pub fn check_ladder(f: &dyn Field, t: f64, ladder: &[CoeffVec], limit: &CoeffVec, depth: usize) -> CheckReport {
    let tol = continuity_tol(f);
    if let Some(top) = ladder.last() {
        for k in 0..depth {
            let (a, b) = (f.eval_coord(t, top, k), f.eval_coord(t, limit, k));
            if (a - b).abs() > tol {
                return CheckReport {
                    name: "left-continuity",
                    ok: false,
                    trials: 1,
                    seed: 0,
                    witness: Some(Witness {
                        trial: 0,
                        t,
                        k,
                        coords: f
                            .depends_on(k)
                            .into_iter()
                            .map(|j| (j, top.coord(j), Some(limit.coord(j))))
                            .collect(),
                        lhs: a,
                        rhs: b,
                    }),
                };
            }
        }
    }
    CheckReport { name: "left-continuity", ok: true, trials: 1, seed: 0, witness: None }
}

/// Builds increasing ladders `x^r ↑ x'` inside the box, half of them aimed at
/// a switch point of the field, and compares the top rung with the limit.
pub fn check_left_continuity(f: &dyn Field, b: &OrderInterval, cfg: &CheckConfig) -> CheckReport {
    let bounds = Bounds::new(b, cfg.depth);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let rungs = cfg.ladder_len.max(2);
    let trials = cfg.trials.max(1);
    for trial in 0..trials {
        let t = cfg.t_samples[trial % cfg.t_samples.len().max(1)];
        let mut limit = bounds.random(&mut rng);
        if trial % 2 == 0 && cfg.depth > 0 {
            let k0 = rng.gen_range(0..cfg.depth);
            for (j, v) in f.switch_points(t, k0) {
                if j < cfg.depth && bounds.lo[j] < v && v <= bounds.hi[j] {
                    limit[j] = v;
                }
            }
        }
        let start: Vec<f64> = limit
            .iter()
            .zip(&bounds.lo)
            .map(|(&l, &a)| a + rng.gen::<f64>() * (l - a))
            .collect();
        let mut ladder = Vec::with_capacity(rungs);
        for r in 0..rungs {
            let d = (-60.0 * r as f64 / (rungs - 1) as f64).exp2();
            let rung: Vec<f64> = limit
                .iter()
                .zip(&start)
                .map(|(&l, &s)| {
                    let v = l - d * (l - s);
                    if s < l && v >= l {
                        l.next_down()
                    } else {
                        v
                    }
                })
                .collect();
            ladder.push(bounds.state(&rung));
        }
        let rep = check_ladder(f, t, &ladder, &bounds.state(&limit), cfg.depth);
        if let Some(mut w) = rep.witness {
            w.trial = trial;
            return CheckReport {
                name: "left-continuity",
                ok: false,
                trials,
                seed: cfg.rng_seed,
                witness: Some(w),
            };
        }
    }
    CheckReport { name: "left-continuity", ok: true, trials, seed: cfg.rng_seed, witness: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{dieudonne_field, heaviside_field, scalar_h_field, HeavisideFieldParams, IndexMap, RhoRule};
    use crate::quadrature::PiecewiseConst;
    use crate::space::AnchorSeq;

    fn scalar_box(lo: f64, hi: f64) -> OrderInterval {
        OrderInterval::new(CoeffVec::from_prefix(vec![lo]).unwrap(), CoeffVec::from_prefix(vec![hi]).unwrap()).unwrap()
    }

    /// Steps up at 0 but takes the upper value at the threshold.
    #[derive(Debug)]
    struct RightContinuousStep;

    impl Field for RightContinuousStep {
        fn name(&self) -> &str {
            "right-continuous-step"
        }
        fn eval_coord(&self, _t: f64, x: &CoeffVec, k: usize) -> f64 {
            if k == 0 && x.coord(0) >= 0.0 {
                1.0
            } else {
                -1.0
            }
        }
        fn depends_on(&self, _k: usize) -> Vec<usize> {
            vec![0]
        }
        fn declared_monotone(&self) -> bool {
            true
        }
        fn declared_order_left_continuous(&self) -> bool {
            false
        }
        fn switch_points(&self, _t: f64, _k: usize) -> Vec<(usize, f64)> {
            vec![(0, 0.0)]
        }
        fn piecewise_constant(&self) -> bool {
            true
        }
    }

    #[test]
    fn scalar_h_fails_monotonicity_with_witness() {
        let cfg = CheckConfig::new(1.0, 1, 7);
        let rep = check_monotone(&scalar_h_field(), &scalar_box(0.0, 2.0), &cfg);
        assert!(!rep.ok);
        let w = rep.witness.unwrap();
        let (_, x, y) = w.coords[0];
        assert!(x <= 1.0 && y.unwrap() > 1.0);
        assert_eq!((w.lhs, w.rhs), (1.0, -1.0));
    }

    #[test]
    fn heaviside_and_dieudonne_pass_monotonicity() {
        let b = OrderInterval::new(
            CoeffVec::from_anchor(AnchorSeq::power(-2.0, 1)),
            CoeffVec::from_anchor(AnchorSeq::power(2.0, 1)),
        )
        .unwrap();
        let cfg = CheckConfig::new(1.0, 12, 3);
        let h = heaviside_field(HeavisideFieldParams {
            p: 1,
            n: IndexMap::Half,
            rho: RhoRule::Alternating(PiecewiseConst::constant(1.0)),
        });
        assert!(check_monotone(&h, &b, &cfg).ok);
        assert!(check_monotone(&dieudonne_field(), &b, &cfg).ok);
        assert!(check_left_continuity(&h, &b, &cfg).ok);
        assert!(check_left_continuity(&dieudonne_field(), &b, &cfg).ok);
    }

    #[test]
    fn heaviside_ladder_into_threshold_matches_limit() {
        let h = heaviside_field(HeavisideFieldParams {
            p: 1,
            n: IndexMap::Identity,
            rho: RhoRule::Uniform(PiecewiseConst::constant(0.5)),
        });
        let limit = CoeffVec::from_prefix(vec![-0.5]).unwrap();
        let ladder: Vec<CoeffVec> = (1..30)
            .map(|r| CoeffVec::from_prefix(vec![-0.5 - f64::from(r).exp2().recip()]).unwrap())
            .collect();
        assert!(check_ladder(&h, 0.0, &ladder, &limit, 1).ok);

        // away from the threshold the values settle at +(k+1)
        let limit = CoeffVec::from_prefix(vec![0.25]).unwrap();
        let ladder: Vec<CoeffVec> =
            (1..30).map(|r| CoeffVec::from_prefix(vec![0.25 - f64::from(r).exp2().recip()]).unwrap()).collect();
        let rep = check_ladder(&h, 0.0, &ladder, &limit, 1);
        assert!(rep.ok);
        assert_eq!(h.eval_coord(0.0, ladder.last().unwrap(), 0), 1.0);
    }

    #[test]
    fn right_continuous_variant_is_flagged() {
        let cfg = CheckConfig::new(1.0, 1, 1);
        let rep = check_left_continuity(&RightContinuousStep, &scalar_box(-1.0, 1.0), &cfg);
        assert!(!rep.ok);
        let w = rep.witness.unwrap();
        assert_eq!(w.coords[0].2, Some(0.0));
        assert_eq!((w.lhs, w.rhs), (-1.0, 1.0));
    }

    #[test]
    fn bound_check_examples() {
        let b = scalar_box(0.0, 2.0);
        let cfg = CheckConfig::new(1.0, 1, 2);
        assert!(check_bound(&scalar_h_field(), &b, &CoeffVec::from_anchor(AnchorSeq::constant(1.0)), &cfg).ok);
        let rep = check_bound(&scalar_h_field(), &b, &CoeffVec::from_anchor(AnchorSeq::constant(0.5)), &cfg);
        assert!(!rep.ok);
        assert_eq!(rep.witness.unwrap().trial, 0);
    }

    #[test]
    fn subsolution_check_at_grid_nodes() {
        let h = heaviside_field(HeavisideFieldParams {
            p: 1,
            n: IndexMap::Identity,
            rho: RhoRule::Uniform(PiecewiseConst::constant(1.0)),
        });
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let x_star = CoeffVec::from_anchor(AnchorSeq::power(-1.0, 1));
        let rep = check_subsolution(&h, &x_star, &CoeffVec::zero(), &grid, 8).unwrap();
        assert!(rep.ok);

        let above = CoeffVec::from_prefix(vec![0.5]).unwrap();
        let rep = check_subsolution(&scalar_h_field(), &above, &CoeffVec::zero(), &grid, 1).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.witness.unwrap().trial, 0);
    }
}
