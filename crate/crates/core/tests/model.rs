// the oracles below are written as plain index loops on purpose
#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use mvfsgl::affinity::{build_affinities, AffinityMode};
use mvfsgl::model::{laplacian, ModelState};
use mvfsgl::numopt::project_simplex;
use mvfsgl::{DMatrix, DVector, Error, Hyperparams, Jmvfg, MultiViewDataset};
use rand::Rng;

fn small_dataset(seed: u64, n: usize, dims: &[usize]) -> MultiViewDataset {
    let mut r = rng(seed);
    let views = dims.iter().map(|&m| uniform(&mut r, m, n)).collect();
    MultiViewDataset::new(views, None).unwrap()
}

/// A state with arbitrary (unconstrained) blocks.
fn random_state(seed: u64, ds: &MultiViewDataset, c: usize, d: usize) -> ModelState {
    let mut r = rng(seed);
    let n = ds.n_samples();
    let v = ds.n_views();
    let mut delta: Vec<f64> = (0..v).map(|_| r.random::<f64>()).collect();
    let total: f64 = delta.iter().sum();
    delta.iter_mut().for_each(|x| *x /= total);
    ModelState {
        w: ds.views().iter().map(|x| gaussian(&mut r, x.nrows(), d)).collect(),
        b: (0..v).map(|_| random_orthonormal(&mut r, d, c)).collect(),
        h: gaussian(&mut r, n, c),
        z: uniform(&mut r, n, c),
        s: random_stochastic(&mut r, n),
        delta,
        d: ds.views().iter().map(|x| DVector::from_fn(x.nrows(), |_, _| 0.5 + r.random::<f64>())).collect(),
    }
}

fn hp(c: usize) -> Hyperparams {
    Hyperparams {
        eta: 0.7,
        beta: 1.3,
        gamma: 0.4,
        alpha: 25.0,
        ..Hyperparams::new(c)
    }
}

/// Termwise objective using explicit loops and the pairwise form of the
/// locality term.
fn objective_by_loops(model: &Jmvfg, st: &ModelState, penalized: bool) -> f64 {
    let hp = model.hyperparams();
    let n = st.s.nrows();
    let c = st.h.ncols();
    let mut total = 0.0;
    for (v, x) in model.views().iter().enumerate() {
        let w = &st.w[v];
        let (m, d) = w.shape();
        let y = |k: usize, j: usize| (0..m).map(|i| w[(i, k)] * x[(i, j)]).sum::<f64>();
        let mut y_mat = vec![vec![0.0; n]; d];
        for k in 0..d {
            for j in 0..n {
                y_mat[k][j] = y(k, j);
            }
        }
        for k in 0..d {
            for j in 0..n {
                let bh: f64 = (0..c).map(|l| st.b[v][(k, l)] * st.h[(j, l)]).sum();
                total += (y_mat[k][j] - bh).powi(2);
            }
        }
        for i in 0..m {
            total += hp.eta * (0..d).map(|k| w[(i, k)].powi(2)).sum::<f64>().sqrt();
        }
        let mut pairwise = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dist: f64 = (0..d).map(|k| (y_mat[k][i] - y_mat[k][j]).powi(2)).sum();
                pairwise += 0.5 * dist * 0.5 * (st.s[(i, j)] + st.s[(j, i)]);
            }
        }
        total += hp.gamma * pairwise;
        let a = &model.affinities()[v].matrix;
        for i in 0..n {
            for j in 0..n {
                total += hp.beta * (st.s[(i, j)] - st.delta[v] * a[(i, j)]).powi(2);
            }
        }
    }
    if penalized {
        for i in 0..n {
            for l in 0..c {
                total += hp.alpha * (st.h[(i, l)] - st.z[(i, l)]).powi(2);
            }
        }
    }
    total
}

#[test]
fn objective_matches_loop_oracle() {
    for seed in 0..5 {
        let ds = small_dataset(seed, 9, &[4, 6]);
        let model = Jmvfg::new(&ds, hp(2)).unwrap();
        let st = random_state(seed + 100, &ds, 2, 3);
        for penalized in [false, true] {
            let fast = if penalized {
                model.penalized_objective(&st)
            } else {
                model.objective(&st)
            };
            let slow = objective_by_loops(&model, &st, penalized);
            assert!((fast - slow).abs() <= 1e-10 * slow.abs().max(1.0), "{fast} vs {slow}");
        }
    }
}

#[test]
fn objective_term_isolation() {
    let ds = small_dataset(3, 8, &[3, 5]);
    let model = Jmvfg::new(&ds, hp(2)).unwrap();
    let mut st = random_state(4, &ds, 2, 2);
    st.w.iter_mut().for_each(|w| w.fill(0.0));
    st.b.iter_mut().for_each(|b| b.fill(0.0));
    st.h.fill(0.0);
    st.z.fill(0.0);
    st.s = DMatrix::zeros(8, 8);
    for (a, d) in model.affinities().iter().zip(&st.delta) {
        st.s += &a.matrix * *d;
    }
    let expected: f64 = model
        .affinities()
        .iter()
        .zip(&st.delta)
        .map(|(a, d)| 1.3 * (&st.s - &a.matrix * *d).norm_squared())
        .sum();
    assert!((model.penalized_objective(&st) - expected).abs() < 1e-12);

    let plain = Hyperparams {
        eta: 0.0,
        beta: 0.0,
        gamma: 0.0,
        ..Hyperparams::new(2)
    };
    let model = Jmvfg::new(&ds, plain).unwrap();
    let st = random_state(5, &ds, 2, 2);
    let terms = model.objective_terms(&st);
    let decomposition: f64 = ds
        .views()
        .iter()
        .zip(&st.w)
        .zip(&st.b)
        .map(|((x, w), b)| (w.transpose() * x - b * st.h.transpose()).norm_squared())
        .sum();
    assert_eq!(terms.sparsity + terms.locality + terms.graph, 0.0);
    assert!((model.objective(&st) - decomposition).abs() < 1e-10 * decomposition);
}

#[test]
fn laplacian_quadratic_form_identity() {
    let mut r = rng(11);
    for _ in 0..20 {
        let n = r.random_range(3..9);
        let m = r.random_range(2..6);
        let x = gaussian(&mut r, m, n);
        let w = gaussian(&mut r, m, 2);
        let s = random_stochastic(&mut r, n);
        let y = w.transpose() * &x;
        let mut pairwise = 0.0;
        for i in 0..n {
            for j in 0..n {
                pairwise += 0.5 * (y.column(i) - y.column(j)).norm_squared() * 0.5 * (s[(i, j)] + s[(j, i)]);
            }
        }
        let trace = (w.transpose() * &x * &laplacian(&s).l * x.transpose() * &w).trace();
        assert!((pairwise - trace).abs() <= 1e-8 * pairwise.abs().max(1.0));
    }
}

fn surrogate_w(model: &Jmvfg, st: &ModelState, v: usize, w: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    let hp = model.hyperparams();
    let x = &model.views()[v];
    let lap = laplacian(&st.s);
    let y = w.transpose() * x;
    (&y - &st.b[v] * st.h.transpose()).norm_squared()
        + hp.eta * (w.transpose() * DMatrix::from_diagonal(d) * w).trace()
        + hp.gamma * (&y * &lap.l * y.transpose()).trace()
}

#[test]
fn w_update_solves_system_and_is_locally_optimal() {
    let ds = small_dataset(21, 12, &[5, 7]);
    let model = Jmvfg::new(&ds, hp(3)).unwrap();
    let mut st = model.initialize(2).unwrap();
    model.update_delta(&mut st).unwrap();
    let old_d = st.d.clone();
    model.update_w(&mut st).unwrap();
    let lap = laplacian(&st.s);
    let mut r = rng(5);
    for v in 0..2 {
        let x = &ds.views()[v];
        let rhs = x * &st.h * st.b[v].transpose();
        let residual = model.w_system(v, &old_d[v], &lap.l) * &st.w[v] - &rhs;
        assert!(residual.norm() <= 1e-8 * rhs.norm());

        let best = surrogate_w(&model, &st, v, &st.w[v], &old_d[v]);
        for _ in 0..100 {
            let probe = &st.w[v] + gaussian(&mut r, st.w[v].nrows(), st.w[v].ncols()) * 1e-2;
            assert!(best <= surrogate_w(&model, &st, v, &probe, &old_d[v]));
        }
        for (i, row) in st.w[v].row_iter().enumerate() {
            let expected = 1.0 / (2.0 * row.norm().max(1e-8));
            assert_eq!(st.d[v][i], expected);
        }
    }
}

#[test]
fn w_update_identity_data_recovers_target() {
    let mut r = rng(8);
    let n = 6;
    let ds = MultiViewDataset::new(vec![DMatrix::identity(n, n)], None).unwrap();
    let params = Hyperparams {
        eta: 1e-9,
        gamma: 0.0,
        neighbors: 2,
        ..Hyperparams::new(2)
    };
    let model = Jmvfg::new(&ds, params).unwrap();
    let mut st = model.initialize(0).unwrap();
    st.h = random_orthonormal(&mut r, n, 2);
    st.b = vec![random_orthonormal(&mut r, 2, 2)];
    model.update_w(&mut st).unwrap();
    let target = &st.h * st.b[0].transpose();
    assert!((&st.w[0] - target).amax() < 1e-6);
}

#[test]
fn b_update_examples() {
    let n = 6;
    let mut r = rng(9);
    let ds = MultiViewDataset::new(vec![DMatrix::identity(n, n)], None).unwrap();
    let model = Jmvfg::new(
        &ds,
        Hyperparams {
            neighbors: 2,
            ..Hyperparams::new(2)
        },
    )
    .unwrap();
    let mut st = model.initialize(0).unwrap();
    // WᵀXH = HᵀH = I
    st.h = random_orthonormal(&mut r, n, 2);
    st.w = vec![st.h.clone()];
    model.update_b(&mut st).unwrap();
    assert!((&st.b[0] - DMatrix::identity(2, 2)).amax() < 1e-12);

    // decomposition residual never increases
    let ds = small_dataset(10, 10, &[4, 5]);
    let model = Jmvfg::new(&ds, hp(2)).unwrap();
    let mut st = random_state(12, &ds, 2, 3);
    st.h = random_orthonormal(&mut r, 10, 2);
    let before = model.objective_terms(&st).decomposition;
    model.update_b(&mut st).unwrap();
    assert!(model.objective_terms(&st).decomposition <= before + 1e-12);
}

#[test]
fn z_update_examples() {
    let ds = small_dataset(13, 8, &[3]);
    let model = Jmvfg::new(&ds, hp(2)).unwrap();
    let mut st = random_state(14, &ds, 2, 2);
    st.h = DMatrix::from_fn(8, 2, |i, j| (i + j) as f64 * 0.1);
    model.update_z(&mut st);
    assert_eq!(st.z, st.h);

    st.h[(3, 1)] = -0.3;
    st.z = uniform(&mut rng(1), 8, 2);
    let before = model.objective_terms(&st).penalty;
    model.update_z(&mut st);
    assert_eq!(st.z[(3, 1)], 0.0);
    assert!(model.objective_terms(&st).penalty <= before);
}

#[test]
fn h_update_follows_large_penalty() {
    let ds = small_dataset(15, 12, &[4, 5]);
    let params = Hyperparams {
        alpha: 1e8,
        ..Hyperparams::new(3)
    };
    let model = Jmvfg::new(&ds, params).unwrap();
    let mut st = model.initialize(1).unwrap();
    let sizes = [5usize, 4, 3];
    let mut z = DMatrix::zeros(12, 3);
    let mut row = 0;
    for (k, &s) in sizes.iter().enumerate() {
        for _ in 0..s {
            z[(row, k)] = 1.0 / (s as f64).sqrt();
            row += 1;
        }
    }
    st.z = z.clone();
    model.update_h(&mut st).unwrap();
    assert!((&st.h - &z).norm() <= 1e-3);
    assert!((st.h.transpose() * &st.h - DMatrix::identity(3, 3)).amax() < 1e-10);
}

#[test]
fn s_update_without_locality() {
    let ds = small_dataset(16, 7, &[4]);
    let params = Hyperparams {
        gamma: 0.0,
        neighbors: 3,
        ..Hyperparams::new(2)
    };
    let model = Jmvfg::new(&ds, params).unwrap();
    let mut st = model.initialize(0).unwrap();
    st.s = random_stochastic(&mut rng(3), 7);
    model.update_s(&mut st).unwrap();
    // a single row-scaled view already lies on the simplex
    assert!((&st.s - &model.affinities()[0].matrix).amax() < 1e-12);

    let ds = small_dataset(17, 5, &[3, 4]);
    for mode in [AffinityMode::RowScaled, AffinityMode::Symmetric] {
        let params = Hyperparams {
            gamma: 0.0,
            neighbors: 2,
            affinity: mode,
            ..Hyperparams::new(2)
        };
        let model = Jmvfg::new(&ds, params).unwrap();
        let mut st = model.initialize(0).unwrap();
        st.delta = vec![0.3, 0.7];
        model.update_s(&mut st).unwrap();
        let a = model.affinities();
        for i in 0..5 {
            let target: Vec<f64> = (0..5)
                .map(|j| (0.3 * a[0].matrix[(i, j)] + 0.7 * a[1].matrix[(i, j)]) / 2.0)
                .collect();
            for (j, expected) in bisection_simplex(&target).into_iter().enumerate() {
                assert!((st.s[(i, j)] - expected).abs() < 1e-12);
            }
            assert!((st.s.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn s_update_matches_row_projection_with_locality() {
    let ds = small_dataset(18, 6, &[3, 3]);
    let model = Jmvfg::new(&ds, hp(2)).unwrap();
    let mut st = random_state(19, &ds, 2, 2);
    model.update_s(&mut st).unwrap();
    let params = model.hyperparams();
    for i in 0..6 {
        let mut target = vec![0.0; 6];
        for (v, x) in ds.views().iter().enumerate() {
            let y = st.w[v].transpose() * x;
            for (j, t) in target.iter_mut().enumerate() {
                let g = (y.column(i) - y.column(j)).norm_squared();
                *t += 2.0 * st.delta[v] * model.affinities()[v].matrix[(i, j)] - params.gamma / (2.0 * params.beta) * g;
            }
        }
        target.iter_mut().for_each(|t| *t /= 4.0);
        let expected = project_simplex(&target);
        for j in 0..6 {
            assert!((st.s[(i, j)] - expected[j]).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_beta_requires_explicit_opt_out() {
    let ds = small_dataset(20, 8, &[3]);
    let params = Hyperparams {
        beta: 0.0,
        ..Hyperparams::new(2)
    };
    let model = Jmvfg::new(&ds, params.clone()).unwrap();
    let mut st = model.initialize(0).unwrap();
    assert!(matches!(model.update_s(&mut st), Err(Error::InvalidArgument(_))));
    assert!(model.fit(0).is_err());

    let frozen = Jmvfg::new(
        &ds,
        Hyperparams {
            learn_graph: false,
            ..params
        },
    )
    .unwrap();
    let initial = frozen.initialize(0).unwrap().s;
    let result = frozen.fit(0).unwrap();
    assert_eq!(result.state.s, initial);
}

#[test]
fn initialization_contract() {
    let ds = small_dataset(22, 10, &[4, 6, 5]);
    let model = Jmvfg::new(&ds, hp(3)).unwrap();
    let st = model.initialize(4).unwrap();
    assert_eq!(st.delta, vec![1.0 / 3.0; 3]);
    let mut fused = DMatrix::zeros(10, 10);
    for a in model.affinities() {
        fused += &a.matrix / 3.0;
    }
    // row-scaled graphs have rows summing to V, so the fused rows sum to V too
    assert!((&st.s * 3.0 - fused).amax() < 1e-14);
    assert!(st.s.row_iter().all(|r| (r.sum() - 1.0).abs() < 1e-14));
    for (w, x) in st.w.iter().zip(ds.views()) {
        assert_eq!(w, &DMatrix::identity(x.nrows(), 3));
    }
    assert!(st.d.iter().all(|d| d.iter().all(|&x| x == 1.0)));
    assert!((st.h.transpose() * &st.h - DMatrix::identity(3, 3)).amax() < 1e-12);
    assert!(st.h.iter().all(|&h| h >= 0.0));
    assert_eq!(st.z, st.h);
    for col in st.h.column_iter() {
        let size = col.iter().filter(|&&x| x > 0.0).count() as f64;
        assert!(col.iter().all(|&x| x == 0.0 || (x - 1.0 / size.sqrt()).abs() < 1e-15));
    }
    assert_eq!(model.initialize(4).unwrap().h, st.h);

    let single = small_dataset(23, 10, &[4]);
    let model = Jmvfg::new(&single, hp(2)).unwrap();
    assert!((model.initialize(0).unwrap().s - &model.affinities()[0].matrix).amax() < 1e-15);

    let sym = Jmvfg::new(
        &single,
        Hyperparams {
            affinity: AffinityMode::Symmetric,
            ..hp(2)
        },
    )
    .unwrap();
    let s = sym.initialize(0).unwrap().s;
    let a = &sym.affinities()[0].matrix;
    for (srow, arow) in s.row_iter().zip(a.row_iter()) {
        assert!((srow - arow / arow.sum()).amax() < 1e-15);
    }
}

#[test]
fn stopping_rules() {
    let (_, ds) = fixture(3);
    let model = Jmvfg::new(
        &ds,
        Hyperparams {
            epsilon: f64::INFINITY,
            ..Hyperparams::new(3)
        },
    )
    .unwrap();
    let r = model.fit(0).unwrap();
    assert_eq!(r.trace.len(), 1);
    assert!(r.converged);

    let capped = Jmvfg::new(
        &ds,
        Hyperparams {
            epsilon: 0.0,
            max_iters: 2,
            ..Hyperparams::new(3)
        },
    )
    .unwrap();
    let r = capped.fit(0).unwrap();
    assert_eq!(r.trace.len(), 2);
}

#[test]
fn fit_is_deterministic() {
    let (_, ds) = fixture(4);
    let a = mvfsgl::model::fit(&ds, &Hyperparams::new(3), 9).unwrap();
    let b = mvfsgl::model::fit(&ds, &Hyperparams::new(3), 9).unwrap();
    assert_eq!(a.state.s, b.state.s);
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
}

#[test]
fn pure_graph_learning_alternation() {
    let ds = small_dataset(24, 5, &[3, 4]);
    let affinities = build_affinities(&ds, 2, AffinityMode::Symmetric).unwrap();
    let g = mvfsgl::model::pure_graph_learning(&affinities, 1e-12, 200).unwrap();
    for w in g.objectives.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
    // at the fixed point S is the row projection of Σδa / V
    for i in 0..5 {
        let target: Vec<f64> = (0..5)
            .map(|j| (g.delta[0] * affinities[0].matrix[(i, j)] + g.delta[1] * affinities[1].matrix[(i, j)]) / 2.0)
            .collect();
        for (j, x) in brute_force_simplex(&target).into_iter().enumerate() {
            assert!((g.s[(i, j)] - x).abs() < 1e-8);
        }
    }
}
