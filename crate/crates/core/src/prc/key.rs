//! Key generation for the sparse-parity pseudorandom code.
//!
//! The parity-check matrix has exactly `t` ones per row, placed by a
//! configuration model that keeps column degrees within one of each other.
//! The generator is a basis of its null space: the canonical basis from the
//! reduced echelon form (identity on the free coordinates) right-multiplied by
//! a secret mixing matrix so message bits are never readable from single
//! coordinates.

use rand::seq::SliceRandom;
use rand::Rng;

use super::bp::TannerGraph;
use super::params::PrcParams;
use crate::error::{Error, Result};
use crate::gf2::{null_space_from_echelon, BitMatrix, BitVec};
use crate::rng::{self, derive_seed, tag, StreamRng};
use crate::schedule::{ScheduleParams, DEFAULT_SCHEDULE_LEN};
use crate::stats::binomial_half_critical_count;

const MAX_KEYGEN_ATTEMPTS: usize = 8;
const MAX_REPAIR_SWEEPS: usize = 200;

/// Secret key of the pseudorandom code.
#[derive(Debug, Clone)]
pub struct PrcKey {
    pub(crate) params: PrcParams,
    pub(crate) parity: BitMatrix,
    pub(crate) generator: BitMatrix,
    pub(crate) pivot_rows: Vec<usize>,
    pub(crate) otp: BitVec,
    pub(crate) key_id: u64,
    pub(crate) rng_seed: u64,
    pub(crate) schedule: ScheduleParams,
    // derived
    pub(crate) graph: TannerGraph,
    pub(crate) recovery: BitMatrix,
    pub(crate) accept_count: u64,
}

impl PrcKey {
    pub fn params(&self) -> &PrcParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn k_msg(&self) -> usize {
        self.params.k_msg
    }

    /// Dimension `g` of the code.
    pub fn dimension(&self) -> usize {
        self.generator.cols()
    }

    pub fn parity(&self) -> &BitMatrix {
        &self.parity
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    pub fn pivot_rows(&self) -> &[usize] {
        &self.pivot_rows
    }

    pub fn otp(&self) -> &BitVec {
        &self.otp
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn key_id(&self) -> String {
        format!("{:016x}", self.key_id)
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn schedule_params(&self) -> ScheduleParams {
        self.schedule
    }

    pub fn with_schedule(mut self, schedule: ScheduleParams) -> Self {
        self.schedule = schedule;
        self
    }

    /// Minimum number of satisfied checks for a frame to be accepted.
    pub fn accept_count(&self) -> u64 {
        self.accept_count
    }

    /// Acceptance threshold as a fraction of the parity checks.
    pub fn accept_fraction(&self) -> f64 {
        if self.params.r == 0 {
            0.0
        } else {
            self.accept_count as f64 / self.params.r as f64
        }
    }

    /// Assembles a key from stored parts, recomputing derived data and
    /// checking every structural invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        params: PrcParams,
        parity: BitMatrix,
        generator: BitMatrix,
        pivot_rows: Vec<usize>,
        otp: BitVec,
        key_id: u64,
        rng_seed: u64,
        schedule: ScheduleParams,
    ) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let fmt = |m: String| Err(Error::Format(m));
        if parity.rows() != params.r || parity.cols() != n {
            return fmt(format!(
                "parity is {}x{}, expected {}x{n}",
                parity.rows(),
                parity.cols(),
                params.r
            ));
        }
        if generator.rows() != n || generator.cols() < params.min_dimension() {
            return fmt(format!(
                "generator is {}x{}, expected {n} rows and at least {} columns",
                generator.rows(),
                generator.cols(),
                params.min_dimension()
            ));
        }
        let g = generator.cols();
        if pivot_rows.len() != g || pivot_rows.iter().any(|&p| p >= n) {
            return fmt("pivot rows do not index a square submatrix".into());
        }
        if otp.len() != n {
            return fmt(format!("one-time pad has {} bits, expected {n}", otp.len()));
        }
        for i in 0..parity.rows() {
            if parity.row_ones(i).len() != params.t {
                return fmt(format!("parity row {i} does not have weight {}", params.t));
            }
        }
        let graph = TannerGraph::from_matrix(&parity);
        // P·G = 0, one sparse row at a time
        for c in 0..graph.num_checks() {
            let mut acc = vec![0u64; generator.row(0).len()];
            for v in graph.check_vars(c) {
                for (a, b) in acc.iter_mut().zip(generator.row(v)) {
                    *a ^= b;
                }
            }
            if acc.iter().any(|&w| w != 0) {
                return fmt(format!("generator violates parity check {c}"));
            }
        }
        let recovery = generator
            .select_rows(&pivot_rows)
            .inverse()
            .ok_or_else(|| Error::Format("pivot submatrix is singular".into()))?;
        let accept_count = binomial_half_critical_count(params.r as u64, params.fpr);
        Ok(Self {
            params,
            parity,
            generator,
            pivot_rows,
            otp,
            key_id,
            rng_seed,
            schedule,
            graph,
            recovery,
            accept_count,
        })
    }
}

/// Generates a key deterministically from `(params, seed)`.
pub fn keygen(params: &PrcParams, seed: u64) -> Result<PrcKey> {
    params.validate()?;
    let mut rng = rng::stream(seed, &[tag::KEYGEN]);
    let n = params.n;
    let required = params.min_dimension();

    let mut found = 0;
    for _ in 0..MAX_KEYGEN_ATTEMPTS {
        let rows = sample_parity_rows(n, params.r, params.t, &mut rng);
        let parity = BitMatrix::from_sparse_rows(n, &rows);
        let ech = parity.rref();
        found = n - ech.rank();
        if found < required {
            continue;
        }
        let null = null_space_from_echelon(&ech);
        let g = null.basis.cols();
        let mixing = mixing_matrix(g, params.k_msg, &mut rng);
        let generator = null.basis.mul(&mixing);
        let otp = BitVec::random(n, &mut rng);
        let key_id = derive_seed(
            seed,
            &[
                n as u64,
                params.k_msg as u64,
                params.r as u64,
                params.t as u64,
            ],
        );
        let schedule = ScheduleParams {
            seed: derive_seed(seed, &[tag::SCHEDULE]),
            len: DEFAULT_SCHEDULE_LEN,
        };
        let graph = TannerGraph::from_rows(n, &rows);
        let accept_count = binomial_half_critical_count(params.r as u64, params.fpr);
        // the mixing matrix is an involution
        let recovery = mixing;
        debug_assert_eq!(
            generator.select_rows(&null.free_cols).mul(&recovery),
            BitMatrix::identity(g)
        );
        return Ok(PrcKey {
            params: params.clone(),
            parity,
            generator,
            pivot_rows: null.free_cols,
            otp,
            key_id,
            rng_seed: seed,
            schedule,
            graph,
            recovery,
            accept_count,
        });
    }
    Err(Error::Dimension {
        found,
        required,
        attempts: MAX_KEYGEN_ATTEMPTS,
    })
}

/// `[[I, R], [0, I]]` with a uniform `k_msg x (g - k_msg)` block `R`; it is
/// its own inverse over GF(2).
fn mixing_matrix(g: usize, k_msg: usize, rng: &mut StreamRng) -> BitMatrix {
    let mut s = BitMatrix::identity(g);
    for i in 0..k_msg.min(g) {
        for j in k_msg..g {
            if rng.random::<bool>() {
                s.set(i, j, true);
            }
        }
    }
    s
}

/// `r` rows of `t` distinct columns each, with column degrees balanced.
pub(crate) fn sample_parity_rows<R: Rng + ?Sized>(
    n: usize,
    r: usize,
    t: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    if r == 0 {
        return Vec::new();
    }
    let mut stubs: Vec<usize> = (0..r * t).map(|i| i % n).collect();
    for _ in 0..4 {
        stubs.shuffle(rng);
        let mut rows: Vec<Vec<usize>> = stubs.chunks(t).map(<[usize]>::to_vec).collect();
        if repair_duplicates(&mut rows, rng) {
            for row in &mut rows {
                row.sort_unstable();
            }
            return rows;
        }
    }
    // degenerate shapes where balancing cannot be repaired: independent rows
    (0..r)
        .map(|_| {
            let mut row = rand::seq::index::sample(rng, n, t).into_vec();
            row.sort_unstable();
            row
        })
        .collect()
}

fn has_duplicate(row: &[usize]) -> Option<usize> {
    (0..row.len()).find(|&a| row[..a].contains(&row[a]))
}

// Swaps duplicated entries with entries of random other rows until every row
// has distinct columns; column degrees are untouched by swaps.
fn repair_duplicates<R: Rng + ?Sized>(rows: &mut [Vec<usize>], rng: &mut R) -> bool {
    let r = rows.len();
    let t = rows[0].len();
    for _ in 0..MAX_REPAIR_SWEEPS {
        let mut clean = true;
        for i in 0..r {
            while let Some(a) = has_duplicate(&rows[i]) {
                clean = false;
                let mut swapped = false;
                for _ in 0..64 {
                    let j = rng.random_range(0..r);
                    let b = rng.random_range(0..t);
                    if j == i {
                        continue;
                    }
                    let (x, y) = (rows[i][a], rows[j][b]);
                    if rows[i].contains(&y) || rows[j].contains(&x) {
                        continue;
                    }
                    rows[i][a] = y;
                    rows[j][b] = x;
                    swapped = true;
                    break;
                }
                if !swapped {
                    break;
                }
            }
        }
        if clean || rows.iter().all(|row| has_duplicate(row).is_none()) {
            return true;
        }
    }
    false
}
