//! Brute-force reference implementations shared by the integration tests.
//!
//! Everything here works entry by entry on plain vectors or through
//! nalgebra, without touching the contraction kernels of the crate.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttsolve_core::dense::DenseTensor;
use ttsolve_core::tt::{TensorTrain, TtOperator};

/// Multi-indices with the first mode running fastest.
pub fn multi_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut flat| {
            dims.iter()
                .map(|&n| {
                    let i = flat % n;
                    flat /= n;
                    i
                })
                .collect()
        })
        .collect()
}

/// Entry `X[i_1, .., i_d]` as a product of core slices.
pub fn train_entry(x: &TensorTrain, idx: &[usize]) -> f64 {
    let mut row = vec![1.0];
    for (k, c) in x.cores().iter().enumerate() {
        let (r0, r1) = (c.dims()[0], c.dims()[2]);
        let mut next = vec![0.0; r1];
        for (b, v) in next.iter_mut().enumerate() {
            *v = (0..r0).map(|a| row[a] * c.get(&[a, idx[k], b])).sum();
        }
        row = next;
    }
    row[0]
}

pub fn full_train(x: &TensorTrain) -> DVector<f64> {
    let idx = multi_indices(&x.dims());
    DVector::from_iterator(idx.len(), idx.iter().map(|i| train_entry(x, i)))
}

/// Double-double number `hi + lo`.
#[derive(Clone, Copy, Default)]
struct Dd(f64, f64);

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let v = s - a;
    Dd(s, (a - (s - v)) + (b - v))
}

impl Dd {
    fn mul(self, y: f64) -> Dd {
        let p = self.0 * y;
        let e = self.0.mul_add(y, -p);

        two_sum(p, e + self.1 * y)
    }

    fn add(self, y: Dd) -> Dd {
        let s = two_sum(self.0, y.0);

        two_sum(s.0, s.1 + self.1 + y.1)
    }
}

/// [`full_train`] evaluated in double-double arithmetic, for trains whose
/// cores cancel heavily.
pub fn full_train_accurate(x: &TensorTrain) -> DVector<f64> {
    let idx = multi_indices(&x.dims());
    DVector::from_iterator(
        idx.len(),
        idx.iter().map(|idx| {
            let mut row = vec![Dd(1.0, 0.0)];
            for (k, c) in x.cores().iter().enumerate() {
                let (r0, r1) = (c.dims()[0], c.dims()[2]);
                row = (0..r1)
                    .map(|b| (0..r0).fold(Dd::default(), |acc, a| acc.add(row[a].mul(c.get(&[a, idx[k], b])))))
                    .collect();
            }
            row[0].0 + row[0].1
        }),
    )
}

pub fn full_operator(a: &TtOperator) -> DMatrix<f64> {
    let rows = multi_indices(&a.row_dims());
    let cols = multi_indices(&a.col_dims());
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        let (ri, ci) = (&rows[r], &cols[c]);
        let mut row = vec![1.0];
        for (k, core) in a.cores().iter().enumerate() {
            let (r0, r1) = (core.dims()[0], core.dims()[3]);
            let mut next = vec![0.0; r1];
            for (b, v) in next.iter_mut().enumerate() {
                *v = (0..r0).map(|q| row[q] * core.get(&[q, ri[k], ci[k], b])).sum();
            }
            row = next;
        }
        row[0]
    })
}

pub fn tensor_vec(t: &DenseTensor) -> DVector<f64> {
    DVector::from_column_slice(t.data())
}

pub fn rel_err(got: &DVector<f64>, want: &DVector<f64>) -> f64 {
    let scale = want.norm().max(f64::MIN_POSITIVE);
    (got - want).norm() / scale
}

/// A small random instance: a train, a second train on the same modes and
/// an operator.
pub struct Instance {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub x: TensorTrain,
    pub y: TensorTrain,
    pub op: TtOperator,
}

fn random_ranks(rng: &mut ChaCha8Rng, d: usize, max: usize) -> Vec<usize> {
    (0..=d).map(|k| if k == 0 || k == d { 1 } else { rng.random_range(1..=max) }).collect()
}

/// Seeded instance with `d ≤ 4`, `n ≤ 5` and ranks `≤ 3`.
pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=4);
    let dims: Vec<usize> = (0..d).map(|_| rng.random_range(2..=5)).collect();
    let (x, _) = TensorTrain::random(&dims, &random_ranks(&mut rng, d, 3), rng.random()).unwrap();
    let (y, _) = TensorTrain::random(&dims, &random_ranks(&mut rng, d, 3), rng.random()).unwrap();
    let op_ranks = random_ranks(&mut rng, d, 3);
    let cores = (0..d)
        .map(|k| {
            let shape = [op_ranks[k], dims[k], dims[k], op_ranks[k + 1]];
            let n = shape.iter().product();
            DenseTensor::from_vec(&shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
        })
        .collect();
    let op = TtOperator::from_cores(cores).unwrap();
    Instance { seed, dims, x, y, op }
}

/// Dense basis of the projection `V_j` onto core `j` of `x`: column
/// `(a, i, b)` (first index fastest) is `x` with core `j` replaced by the unit
/// tensor at that position.
pub fn projection_basis(x: &TensorTrain, j: usize) -> DMatrix<f64> {
    let shape = x.core(j).dims().to_vec();
    let m: usize = shape.iter().product();
    let n: usize = x.dims().iter().product();
    let mut v = DMatrix::zeros(n, m);
    for col in 0..m {
        let mut unit = DenseTensor::zeros(&shape);
        unit.data_mut()[col] = 1.0;
        let mut cores = x.cores().to_vec();
        cores[j] = unit;
        let t = TensorTrain::from_cores(cores).unwrap();
        v.set_column(col, &full_train(&t));
    }
    v
}

/// Dense Frobenius norm of a train through nalgebra QR sweeps of its cores.
pub fn qr_norm(x: &TensorTrain) -> f64 {
    let mut carry = DMatrix::<f64>::identity(1, 1);
    for c in x.cores() {
        let (r0, n, r1) = (c.dims()[0], c.dims()[1], c.dims()[2]);
        // carry (k × r0) times core, unfolded to (k·n) × r1.
        let k = carry.nrows();
        let mut m = DMatrix::zeros(k * n, r1);
        for b in 0..r1 {
            for i in 0..n {
                for p in 0..k {
                    m[(p + k * i, b)] = (0..r0).map(|a| carry[(p, a)] * c.get(&[a, i, b])).sum();
                }
            }
        }
        carry = if m.nrows() >= m.ncols() { m.qr().r() } else { m };
    }
    carry.norm()
}

/// Residual `A·X − B` assembled entry by entry in block TT form.
pub fn residual_train(a: &TtOperator, x: &TensorTrain, b: &TensorTrain) -> TensorTrain {
    let d = x.d();
    let cores = (0..d)
        .map(|k| {
            let (ac, xc, bc) = (a.core(k), x.core(k), b.core(k));
            let (ra0, n, m, ra1) = (ac.dims()[0], ac.dims()[1], ac.dims()[2], ac.dims()[3]);
            let (rx0, rx1) = (xc.dims()[0], xc.dims()[2]);
            let (rb0, rb1) = (bc.dims()[0], bc.dims()[2]);
            let l = if k == 0 { 1 } else { ra0 * rx0 + rb0 };
            let r = if k == d - 1 { 1 } else { ra1 * rx1 + rb1 };
            let mut core = DenseTensor::zeros(&[l, n, r]);
            let off_l = |p: usize| if k == 0 { 0 } else { p };
            let off_r = |p: usize| if k == d - 1 { 0 } else { p };
            for al in 0..ra0 {
                for a0 in 0..rx0 {
                    for be in 0..ra1 {
                        for a1 in 0..rx1 {
                            for i in 0..n {
                                let s: f64 = (0..m).map(|j| ac.get(&[al, i, j, be]) * xc.get(&[a0, j, a1])).sum();
                                let (p, q) = (off_l(al * rx0 + a0), off_r(be * rx1 + a1));
                                let old = core.get(&[p, i, q]);
                                core.set(&[p, i, q], old + s);
                            }
                        }
                    }
                }
            }
            let (sl, sr) = (if k == 0 { 0 } else { ra0 * rx0 }, if k == d - 1 { 0 } else { ra1 * rx1 });
            for c0 in 0..rb0 {
                for c1 in 0..rb1 {
                    for i in 0..n {
                        let sign = if k == 0 { -1.0 } else { 1.0 };
                        let (p, q) = (sl + c0, sr + c1);
                        let old = core.get(&[p, i, q]);
                        core.set(&[p, i, q], old + sign * bc.get(&[c0, i, c1]));
                    }
                }
            }
            core
        })
        .collect();
    TensorTrain::from_cores(cores).unwrap()
}

/// `‖A·X − B‖/‖B‖` computed with [`residual_train`] and [`qr_norm`].
pub fn independent_residual(a: &TtOperator, x: &TensorTrain, b: &TensorTrain) -> f64 {
    qr_norm(&residual_train(a, x, b)) / qr_norm(b)
}

/// Worst relative deviations found by [`oracle_suite`].
#[derive(Debug, Default, Clone, Copy)]
pub struct OracleStats {
    pub instances: usize,
    pub exact: f64,
    pub fast: f64,
}

impl OracleStats {
    fn exact(&mut self, e: f64) {
        self.exact = self.exact.max(e);
    }
    fn fast(&mut self, e: f64) {
        self.fast = self.fast.max(e);
    }
}

fn rel_scalar(got: f64, want: f64, scale: f64) -> f64 {
    (got - want).abs() / scale.max(f64::MIN_POSITIVE)
}

/// Compares every train, operator and fast-path routine with the brute-force
/// reference on the instances of `seeds`.
pub fn oracle_suite(seeds: std::ops::Range<u64>) -> OracleStats {
    use ttsolve_core::fast::{
        axpby_trunc, axpby_trunc_ortho, fast_orthogonalize, fast_truncate, fast_truncate_relative,
    };
    use ttsolve_core::solvers::Environment;
    use ttsolve_core::tt::{axpby_raw, dot, io, norm, orthogonalize, truncate, truncate_relative, Direction};

    let mut s = OracleStats::default();
    for seed in seeds {
        let Instance { x, y, op, dims, .. } = instance(seed);
        let d = dims.len();
        let fx = full_train(&x);
        let fy = full_train(&y);
        let fa = full_operator(&op);
        let vec_of = |t: &TensorTrain| tensor_vec(&t.to_full().unwrap());

        s.exact(rel_err(&vec_of(&x), &fx));
        s.exact(rel_scalar(dot(&x, &y).unwrap(), fx.dot(&fy), fx.norm() * fy.norm()));
        s.exact(rel_scalar(norm(&x), fx.norm(), fx.norm()));
        let sum = axpby_raw(0.7, &x, -1.3, &y).unwrap();
        let fsum = &fx * 0.7 - &fy * 1.3;
        s.exact(rel_err(&vec_of(&sum), &fsum));
        let ax = op.apply(&x).unwrap();
        s.exact(rel_err(&vec_of(&ax), &(&fa * &fx)));
        let dense_op = op.to_full().unwrap();
        let dense_op = DMatrix::from_column_slice(dense_op.rows(), dense_op.cols(), &dense_op.to_col_major());
        s.exact((&dense_op - &fa).norm() / fa.norm());
        s.exact(rel_err(&full_train(&x.reversed().reversed()), &fx));
        for (dir, center) in [(Direction::Left, d - 1), (Direction::Right, 0)] {
            let mut z = x.clone();
            orthogonalize(&mut z, dir, center).unwrap();
            s.exact(rel_err(&full_train(&z), &fx));
        }
        s.exact(rel_err(&full_train(&truncate(&sum, 0.0, usize::MAX).unwrap()), &fsum));
        s.exact(rel_err(&full_train(&truncate_relative(&sum, 0.0, usize::MAX).unwrap()), &fsum));
        let mut buf = Vec::new();
        io::write_train(&mut buf, &x).unwrap();
        s.exact(rel_err(&full_train(&io::read_train(buf.as_slice()).unwrap()), &fx));

        for dir in [Direction::Left, Direction::Right] {
            let mut z = x.clone();
            fast_orthogonalize(&mut z, dir).unwrap();
            s.fast(rel_err(&full_train(&z), &fx));
        }
        s.fast(rel_err(&full_train(&fast_truncate(&sum, 0.0, usize::MAX).unwrap().0), &fsum));
        s.fast(rel_err(&full_train(&fast_truncate_relative(&sum, 0.0, usize::MAX).unwrap().0), &fsum));
        let (mut xl, mut yl) = (x.clone(), y.clone());
        fast_orthogonalize(&mut xl, Direction::Left).unwrap();
        fast_orthogonalize(&mut yl, Direction::Left).unwrap();
        s.fast(rel_err(&full_train(&axpby_trunc_ortho(0.7, &xl, -1.3, &yl, 0.0, usize::MAX).unwrap()), &fsum));
        s.fast(rel_err(&full_train(&axpby_trunc(0.7, &x, -1.3, &y, 0.0, usize::MAX).unwrap()), &fsum));

        // Projected operator and right-hand side at every site.
        for j in 0..d {
            let mut env = Environment::new(d);
            env.build_right(j + 1, &x, &op, &y).unwrap();
            for k in 0..j {
                env.update_left(k, &x, &op, &y).unwrap();
            }
            let v = projection_basis(&x, j);
            let local = env.local_op(j, &op).unwrap();
            let probe = DVector::from_fn(v.ncols(), |i, _| ((i * 7 + 3) % 11) as f64 - 5.0);
            let want = v.transpose() * &fa * &v * &probe;
            let got = DVector::from_vec(local.apply(probe.as_slice()).unwrap());
            s.fast(rel_err(&got, &want));
            let rhs = env.local_rhs(j, &y).unwrap();
            s.exact(rel_err(&tensor_vec(&rhs), &(v.transpose() * &fy)));
        }
        s.instances += 1;
    }
    s
}
