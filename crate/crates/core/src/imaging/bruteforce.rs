//! Direct quadrature of the two-photon detection amplitude.
//!
//! For every detector-1 pixel `x1` and quadrature node the amplitude
//!
//! ```text
//! A(x1, x2) = sum_q S(q) e^{i kappa q.(x1 - x2)} H1(q, x1) H2(-q, x2)
//! ```
//!
//! is formed and `|A|^2` summed over the bucket pixels `x2`. `S` is the
//! biphoton spectrum `Phi(q, nu)` (one layer per detuning node, weighted by
//! the trapezoid rule) or the classical spectrum `F(q)` with `kappa = 1`.
//! The branch transfer functions decide how each sum is organized:
//!
//! * lensed branch 1: only the momentum bins imaged onto `x1` contribute;
//! * lensed branch 2: each bin lands in one bucket pixel (scatter-add);
//! * lensless branch 2 with few bins: Gram form of the bucket sum;
//! * both lensless: `A` depends on `x1 - x2` only, synthesized once per node
//!   on the difference lattice.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::geometry::OpticalGeometry;
use super::map::{CoincidenceMap, ComputationPath, MapDiagnostics};
use super::transfer::{check_same_grid, inverse_targets, Branch, BranchTransfer, LensMode};
use crate::error::{Error, Result};
use crate::fields::{GridSpec, ObjectMask, Pixel};
use crate::sources::{spdc_spectrum, ClassicalSpectrum, SourceKind, SpdcParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BruteForceOptions {
    /// Upper bound on (momentum bins) x (bucket pixels).
    pub max_work: f64,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self { max_work: (1u64 << 30) as f64 }
    }
}

/// Lens configuration of (branch 1, branch 2).
pub type LensModes = (LensMode, LensMode);

pub const BOTH_LENSES: LensModes = (LensMode::WithLens, LensMode::WithLens);

struct PairTable {
    layers: Vec<Vec<Complex64>>,
    weights: Vec<f64>,
    /// `sum_node w |layer[q]|^2` per momentum bin.
    power: Vec<f64>,
    kappa: f64,
}

impl PairTable {
    fn new(layers: Vec<Vec<Complex64>>, weights: Vec<f64>, kappa: f64) -> Self {
        let bins = layers.first().map_or(0, Vec::len);
        let power = (0..bins).map(|q| layers.iter().zip(&weights).map(|(l, w)| w * l[q].norm_sqr()).sum()).collect();
        Self { layers, weights, power, kappa }
    }
}

pub fn image_entangled_bruteforce(
    g1: &ObjectMask,
    g2: &ObjectMask,
    p: &SpdcParams,
    geom: &OpticalGeometry,
    modes: LensModes,
    opts: &BruteForceOptions,
) -> Result<CoincidenceMap> {
    p.validate()?;
    let q_grid = geom.q_grid(g1.spec());
    let quad = p.quadrature();
    let layers = quad
        .nodes
        .iter()
        .map(|&nu| q_grid.pixels().map(|q| spdc_spectrum(q_grid.position(q), nu, p)).collect())
        .collect();
    let table = PairTable::new(layers, quad.weights.clone(), 0.0);
    run(g1, g2, geom, modes, opts, &table, SourceKind::Spdc)
}

/// Brute-force sum of the classical detection amplitude, `S(q) = F(q)` with the
/// relative phase `exp(i q.(x1 - x2))`.
pub fn image_classical_bruteforce(
    g1: &ObjectMask,
    g2: &ObjectMask,
    s: &ClassicalSpectrum,
    geom: &OpticalGeometry,
    modes: LensModes,
    opts: &BruteForceOptions,
) -> Result<CoincidenceMap> {
    if !s.is_even() {
        return Err(Error::Config("classical imaging requires an even spectrum F(q) = F(-q)".into()));
    }
    let q_grid = geom.q_grid(g1.spec());
    let layer = q_grid.pixels().map(|q| s.at_momentum(q_grid.position(q))).collect();
    let table = PairTable::new(vec![layer], vec![1.0], 1.0);
    run(g1, g2, geom, modes, opts, &table, SourceKind::Classical)
}

/// `T[qa * nd + xa] = exp(i alpha q_a x_a)`; the 2D phase factorizes over axes.
fn axis_table(alpha: f64, q_grid: &GridSpec, det: &GridSpec) -> Vec<Complex64> {
    let mut t = Vec::with_capacity(q_grid.n() * det.n());
    for a in 0..q_grid.n() {
        for b in 0..det.n() {
            t.push(if alpha == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::cis(alpha * q_grid.coord(a) * det.coord(b))
            });
        }
    }
    t
}

struct Plane {
    table: Vec<Complex64>,
    nd: usize,
}

impl Plane {
    #[inline]
    fn phase(&self, q: Pixel, x: Pixel) -> Complex64 {
        self.table[q.i * self.nd + x.i] * self.table[q.j * self.nd + x.j]
    }
}

fn run(
    g1: &ObjectMask,
    g2: &ObjectMask,
    geom: &OpticalGeometry,
    modes: LensModes,
    opts: &BruteForceOptions,
    table: &PairTable,
    source: SourceKind,
) -> Result<CoincidenceMap> {
    check_same_grid(g1, g2)?;
    geom.validate()?;
    let det = geom.detector_grid(g1.spec());
    let q_grid = geom.q_grid(g1.spec());
    let work = q_grid.len() as f64 * det.len() as f64;
    if work > opts.max_work {
        return Err(Error::Resource(format!(
            "brute-force work {work:.3e} (q bins x bucket pixels) exceeds budget {:.3e}; use a smaller grid",
            opts.max_work
        )));
    }
    let t1 = BranchTransfer::new(modes.0, g1, geom, det, Branch::One)?;
    let t2 = BranchTransfer::new(modes.1, g2, geom, det, Branch::Two)?;
    let engine = Engine::new(&t1, &t2, table);

    let raw = match modes {
        (LensMode::WithoutLens, LensMode::WithoutLens) => engine.difference_lattice(),
        _ => engine.per_pixel(),
    };
    let scale = raw.iter().fold(0.0f64, |a, &v| a.max(v));
    let rates = if scale > 0.0 { raw.mapv(|v| v / scale) } else { raw };
    Ok(CoincidenceMap {
        spec: det,
        rates,
        norm: 1.0,
        scale,
        path: ComputationPath::BruteForce,
        source,
        diagnostics: MapDiagnostics {
            vignetted_bins: t1.vignetted_bins() + t2.vignetted_bins(),
            experimental_pupils: geom.has_finite_pupils(),
        },
    })
}

struct Engine<'a> {
    t1: &'a BranchTransfer,
    t2: &'a BranchTransfer,
    table: &'a PairTable,
    q_grid: GridSpec,
    det: GridSpec,
    /// exp(i kappa q.x)
    rel: Plane,
    /// exp(i (1 + kappa) q.x)
    full: Plane,
}

/// Scratch space for the scatter-add into bucket pixels.
struct Bins {
    acc: Vec<Complex64>,
    touched: Vec<usize>,
    slots: Vec<Slot>,
}

#[derive(Clone, Copy)]
enum Slot {
    Empty,
    /// One contribution so far: momentum-bin index and node-independent factor.
    Single(usize, Complex64),
    Multi,
}

impl<'a> Engine<'a> {
    fn new(t1: &'a BranchTransfer, t2: &'a BranchTransfer, table: &'a PairTable) -> Self {
        let q_grid = *t1.q_grid();
        let det = *t1.detector();
        let rel = Plane { table: axis_table(table.kappa, &q_grid, &det), nd: det.n() };
        let full = Plane { table: axis_table(1.0 + table.kappa, &q_grid, &det), nd: det.n() };
        Self { t1, t2, table, q_grid, det, rel, full }
    }

    #[inline]
    fn q_index(&self, q: Pixel) -> usize {
        q.i * self.q_grid.n() + q.j
    }

    /// Node-independent part of the amplitude: `e^{i kappa q.x1} H1(q, x1)`.
    fn contributions(&self, x1: Pixel, inv1: &[Vec<Pixel>]) -> Vec<(Pixel, Complex64)> {
        let p1 = self.t1.pupil(x1);
        if p1 == 0.0 {
            return Vec::new();
        }
        match self.t1.mode {
            LensMode::WithLens => inv1[x1.i * self.det.n() + x1.j]
                .iter()
                .map(|&q| (q, self.rel.phase(q, x1) * self.t1.lensed_amplitude(q, x1) * p1))
                .collect(),
            LensMode::WithoutLens => self
                .q_grid
                .pixels()
                .map(|q| (q, self.t1.mask_at(q) * self.full.phase(q, x1) * p1))
                .collect(),
        }
    }

    fn per_pixel(&self) -> Array2<f64> {
        let nd = self.det.n();
        let nodes = self.table.weights.len();
        let inv1 = match self.t1.mode {
            LensMode::WithLens => inverse_targets(self.t1),
            LensMode::WithoutLens => Vec::new(),
        };
        // Lensed branch 2: bucket pixel and node-independent factor
        // e^{-i kappa q.x2} H2(-q, x2) for every bin q.
        let lensed2: Vec<Option<(usize, Complex64)>> = match self.t2.mode {
            LensMode::WithLens => self
                .q_grid
                .pixels()
                .map(|q| {
                    let rq = self.q_grid.reflect(q);
                    self.t2.target(rq).map(|x2| {
                        let h = self.rel.phase(q, x2).conj() * self.t2.lensed_amplitude(rq, x2) * self.t2.pupil(x2);
                        (x2.i * nd + x2.j, h)
                    })
                })
                .collect(),
            LensMode::WithoutLens => Vec::new(),
        };

        let rows: Vec<Vec<f64>> = (0..nd)
            .into_par_iter()
            .map_init(
                || Bins {
                    acc: vec![Complex64::new(0.0, 0.0); nodes * nd * nd],
                    touched: Vec::new(),
                    slots: vec![Slot::Empty; nd * nd],
                },
                |bins, i| {
                    (0..nd)
                        .map(|j| {
                            let x1 = Pixel::new(i, j);
                            let contrib = self.contributions(x1, &inv1);
                            match self.t2.mode {
                                LensMode::WithLens => self.bucket_lensed(&contrib, &lensed2, bins),
                                LensMode::WithoutLens => self.bucket_gram(&contrib),
                            }
                        })
                        .collect()
                },
            )
            .collect();
        Array2::from_shape_fn((nd, nd), |(i, j)| rows[i][j])
    }

    /// Bins hit by a single momentum bin use the precomputed node sum
    /// `sum_nu w |S(q, nu)|^2`; the rest accumulate per node.
    fn bucket_lensed(&self, contrib: &[(Pixel, Complex64)], lensed2: &[Option<(usize, Complex64)>], bins: &mut Bins) -> f64 {
        let plane = self.det.len();
        for &(q, base) in contrib {
            let qi = self.q_index(q);
            let Some((b, h)) = lensed2[qi] else { continue };
            let c = base * h;
            match bins.slots[b] {
                Slot::Empty => {
                    bins.slots[b] = Slot::Single(qi, c);
                    bins.touched.push(b);
                }
                Slot::Single(q0, c0) => {
                    for (node, layer) in self.table.layers.iter().enumerate() {
                        bins.acc[node * plane + b] += layer[q0] * c0 + layer[qi] * c;
                    }
                    bins.slots[b] = Slot::Multi;
                }
                Slot::Multi => {
                    for (node, layer) in self.table.layers.iter().enumerate() {
                        bins.acc[node * plane + b] += layer[qi] * c;
                    }
                }
            }
        }
        let mut total = 0.0;
        for &b in &bins.touched {
            match bins.slots[b] {
                Slot::Single(qi, c) => total += self.table.power[qi] * c.norm_sqr(),
                Slot::Multi => {
                    for (node, w) in self.table.weights.iter().enumerate() {
                        total += w * bins.acc[node * plane + b].norm_sqr();
                        bins.acc[node * plane + b] = Complex64::new(0.0, 0.0);
                    }
                }
                Slot::Empty => {}
            }
            bins.slots[b] = Slot::Empty;
        }
        bins.touched.clear();
        total
    }

    /// Lensless bucket for a few contributing bins: with
    /// `v_a(x2) = G2(-q_a) e^{-i (1+kappa) q_a.x2} p2(x2)`,
    /// `sum_x2 |sum_a c_a v_a(x2)|^2 = c^H M c`, `M_ab = sum_x2 conj(v_a) v_b`.
    fn bucket_gram(&self, contrib: &[(Pixel, Complex64)]) -> f64 {
        let k = contrib.len();
        if k == 0 {
            return 0.0;
        }
        let mut gram = vec![Complex64::new(0.0, 0.0); k * k];
        for x2 in self.det.pixels() {
            let p2 = self.t2.pupil(x2);
            if p2 == 0.0 {
                continue;
            }
            let v: Vec<Complex64> = contrib
                .iter()
                .map(|&(q, _)| self.t2.mask_at(self.q_grid.reflect(q)) * self.full.phase(q, x2).conj() * p2)
                .collect();
            for a in 0..k {
                for b in 0..k {
                    gram[a * k + b] += v[a].conj() * v[b];
                }
            }
        }
        let mut total = 0.0;
        for (layer, w) in self.table.layers.iter().zip(&self.table.weights) {
            let c: Vec<Complex64> = contrib.iter().map(|&(q, base)| layer[self.q_index(q)] * base).collect();
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..k {
                for b in 0..k {
                    s += c[a].conj() * gram[a * k + b] * c[b];
                }
            }
            total += w * s.re;
        }
        total
    }

    /// Both branches lensless: `A(x1, x2) = p1 p2 S(x1 - x2)` with
    /// `S(d) = sum_q c_q e^{i (1+kappa) q.d}`, `c_q = S(q) G1(q) G2(-q)`.
    fn difference_lattice(&self) -> Array2<f64> {
        let nd = self.det.n();
        let nq = self.q_grid.n();
        let lat = 2 * nd - 1;
        let pitch = self.det.pitch();
        let beta = 1.0 + self.table.kappa;
        // e[qa * lat + k] = exp(i beta q_a (k - (nd - 1)) pitch)
        let e: Vec<Complex64> = (0..nq)
            .flat_map(|a| {
                let qa = self.q_grid.coord(a);
                (0..lat).map(move |k| Complex64::cis(beta * qa * (k as f64 - (nd - 1) as f64) * pitch))
            })
            .collect();

        let mut intensity = vec![0.0f64; lat * lat];
        for (layer, w) in self.table.layers.iter().zip(&self.table.weights) {
            let c: Vec<Complex64> = self
                .q_grid
                .pixels()
                .map(|q| layer[self.q_index(q)] * self.t1.mask_at(q) * self.t2.mask_at(self.q_grid.reflect(q)))
                .collect();
            // half[k * nq + qb] = sum_qa e[qa, k] c[qa, qb]
            let half: Vec<Complex64> = (0..lat)
                .into_par_iter()
                .flat_map_iter(|k| {
                    let e = &e;
                    let c = &c;
                    (0..nq).map(move |qb| (0..nq).map(|qa| e[qa * lat + k] * c[qa * nq + qb]).sum::<Complex64>())
                })
                .collect();
            let s: Vec<f64> = (0..lat)
                .into_par_iter()
                .flat_map_iter(|k| {
                    let e = &e;
                    let half = &half;
                    (0..lat).map(move |l| (0..nq).map(|qb| half[k * nq + qb] * e[qb * lat + l]).sum::<Complex64>().norm_sqr())
                })
                .collect();
            for (acc, v) in intensity.iter_mut().zip(&s) {
                *acc += w * v;
            }
        }

        let pupil2_infinite = (0..nd).all(|i| (0..nd).all(|j| self.t2.pupil(Pixel::new(i, j)) == 1.0));
        let rows: Vec<Vec<f64>> = if pupil2_infinite {
            // Box sums of the lattice intensity via a summed-area table.
            let mut sat = vec![0.0f64; (lat + 1) * (lat + 1)];
            for k in 0..lat {
                for l in 0..lat {
                    sat[(k + 1) * (lat + 1) + l + 1] =
                        intensity[k * lat + l] + sat[k * (lat + 1) + l + 1] + sat[(k + 1) * (lat + 1) + l] - sat[k * (lat + 1) + l];
                }
            }
            (0..nd)
                .map(|i| {
                    (0..nd)
                        .map(|j| {
                            // x2 index i2 in 0..nd gives lattice k = i - i2 + nd - 1 in i..i+nd-1.
                            let (k0, k1, l0, l1) = (i, i + nd, j, j + nd);
                            let s = sat[k1 * (lat + 1) + l1] - sat[k0 * (lat + 1) + l1] - sat[k1 * (lat + 1) + l0]
                                + sat[k0 * (lat + 1) + l0];
                            s * self.t1.pupil(Pixel::new(i, j))
                        })
                        .collect()
                })
                .collect()
        } else {
            (0..nd)
                .into_par_iter()
                .map(|i| {
                    (0..nd)
                        .map(|j| {
                            let mut s = 0.0;
                            for x2 in self.det.pixels() {
                                let p2 = self.t2.pupil(x2);
                                if p2 != 0.0 {
                                    s += p2 * intensity[(i + nd - 1 - x2.i) * lat + (j + nd - 1 - x2.j)];
                                }
                            }
                            s * self.t1.pupil(Pixel::new(i, j))
                        })
                        .collect()
                })
                .collect()
        };
        Array2::from_shape_fn((nd, nd), |(i, j)| rows[i][j])
    }
}
