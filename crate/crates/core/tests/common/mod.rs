#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use patlab::experiment::build_operator;
use patlab::{DenseOperator, ExperimentConfig, LinearOperator, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact minimizer of `1/2 ||x - y||^2 + lambda * sum |x[i+1] - x[i]|`
/// (Condat's direct algorithm, a taut-string method).
pub fn taut_string(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    let mut x = vec![0.0; n];
    if n == 0 {
        return x;
    }
    let (mut k, mut k0, mut kminus, mut kplus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = y[0] - lambda;
    let mut vmax = y[0] + lambda;
    loop {
        while k == n - 1 {
            if umin < 0.0 {
                while k0 <= kminus {
                    x[k0] = vmin;
                    k0 += 1;
                }
                k = k0;
                kminus = k0;
                vmin = y[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                while k0 <= kplus {
                    x[k0] = vmax;
                    k0 += 1;
                }
                k = k0;
                kplus = k0;
                vmax = y[k0];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                while k0 <= k {
                    x[k0] = vmin;
                    k0 += 1;
                }
                return x;
            }
        }
        umin += y[k + 1] - vmin;
        if umin < -lambda {
            while k0 <= kminus {
                x[k0] = vmin;
                k0 += 1;
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = y[k0];
            vmax = vmin + 2.0 * lambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        umax += y[k + 1] - vmax;
        if umax > lambda {
            while k0 <= kplus {
                x[k0] = vmax;
                k0 += 1;
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmax = y[k0];
            vmin = vmax - 2.0 * lambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        k += 1;
        if umin >= lambda {
            kminus = k;
            vmin += (umin - lambda) / (k - k0 + 1) as f64;
            umin = lambda;
        }
        if umax <= -lambda {
            kplus = k;
            vmax += (umax + lambda) / (k - k0 + 1) as f64;
            umax = -lambda;
        }
    }
}

/// Largest violation of the optimality conditions of 1D TV denoising:
/// partial sums of `y - x` stay in `[-lambda, lambda]`, sit on the bound
/// with the right sign at every jump, and the total sum vanishes.
pub fn tv1d_kkt_violation(y: &[f64], x: &[f64], lambda: f64) -> f64 {
    let n = y.len();
    let mut worst: f64 = 0.0;
    let mut s = 0.0;
    for k in 0..n {
        s += y[k] - x[k];
        if k + 1 == n {
            worst = worst.max(s.abs());
            break;
        }
        worst = worst.max(s.abs() - lambda);
        let jump = x[k + 1] - x[k];
        if jump > 1e-12 {
            worst = worst.max((s + lambda).abs());
        } else if jump < -1e-12 {
            worst = worst.max((s - lambda).abs());
        }
    }
    worst
}

/// Two plateaus on a zero background plus seeded Gaussian-ish noise.
pub fn plateau_signal(n: usize, noise: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let base = if (n / 5..2 * n / 5).contains(&i) {
                1.0
            } else if (3 * n / 5..4 * n / 5).contains(&i) {
                -0.5
            } else {
                0.0
            };
            let u: f64 = (0..4).map(|_| rng.gen::<f64>() - 0.5).sum();
            base + noise * u
        })
        .collect()
}

/// A small dense problem cut out of the real photoacoustic operator:
/// `rows x cols` entries of its matrix, with the matching quadrature weights.
pub struct Surrogate {
    pub op: DenseOperator,
    pub g: Array1<f64>,
}

pub fn pat_surrogate(rows: usize, cols: usize, seed: u64) -> Surrogate {
    let cfg = ExperimentConfig { n_omega: 7, nt: 26, ..Default::default() };
    let pat = build_operator(&cfg).unwrap();
    let Metric::Diagonal(dw) = pat.domain().clone() else { panic!("weighted domain expected") };
    let Metric::Diagonal(rw) = pat.range().clone() else { panic!("weighted range expected") };

    let support: Vec<usize> = (0..dw.len()).filter(|&i| dw[i] > 0.0).collect();
    assert!(support.len() >= cols);
    let pick: Vec<usize> = (0..cols).map(|j| support[j * support.len() / cols]).collect();

    let mut cols_full = Vec::with_capacity(cols);
    for &p in &pick {
        let mut e = Array1::zeros(dw.len());
        e[p] = 1.0;
        cols_full.push(pat.apply(&e).unwrap());
    }
    // spread the rows over sensors and times, skipping silent samples
    let m = rw.len();
    let energy = |r: usize| cols_full.iter().map(|c| c[r] * c[r]).sum::<f64>();
    let peak = (0..m).map(energy).fold(0.0, f64::max);
    let live: Vec<usize> = (0..m).filter(|&r| rw[r] > 0.0 && energy(r) > 1e-4 * peak).collect();
    assert!(live.len() >= rows, "only {} usable rows", live.len());
    let rows_idx: Vec<usize> = (0..rows).map(|i| live[i * live.len() / rows + live.len() / (2 * rows)]).collect();

    let matrix = Array2::from_shape_fn((rows, cols), |(i, j)| cols_full[j][rows_idx[i]]);
    let domain = Metric::Diagonal(pick.iter().map(|&p| dw[p]).collect());
    let range = Metric::Diagonal(rows_idx.iter().map(|&r| rw[r]).collect());
    let op = DenseOperator::with_metrics(matrix, domain, range).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = op.matrix.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let g = Array1::from_shape_fn(rows, |_| scale * (rng.gen::<f64>() - 0.5));
    Surrogate { op, g }
}

pub fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    let (m, n) = a.dim();
    DMatrix::from_fn(m, n, |i, j| a[[i, j]])
}

pub fn weights(m: &Metric) -> Array1<f64> {
    match m {
        Metric::Euclidean(n) => Array1::ones(*n),
        Metric::Diagonal(w) => w.clone(),
    }
}

/// Solves `(A^T W_y A + lambda B^T W_q B) x = A^T W_y g` directly.
pub fn normal_solve(
    a: &Array2<f64>,
    wy: &Array1<f64>,
    g: &Array1<f64>,
    reg: Option<(&Array2<f64>, &Array1<f64>, f64)>,
) -> Array1<f64> {
    let an = to_nalgebra(a);
    let wyn = DMatrix::from_diagonal(&DVector::from_iterator(wy.len(), wy.iter().copied()));
    let mut lhs = an.transpose() * &wyn * &an;
    if let Some((b, wq, lambda)) = reg {
        let bn = to_nalgebra(b);
        let wqn = DMatrix::from_diagonal(&DVector::from_iterator(wq.len(), wq.iter().copied()));
        lhs += (bn.transpose() * wqn * bn) * lambda;
    }
    let rhs = an.transpose() * wyn * DVector::from_iterator(g.len(), g.iter().copied());
    let x = lhs.lu().solve(&rhs).expect("normal matrix is invertible");
    Array1::from_iter(x.iter().copied())
}

pub fn condition_number(a: &Array2<f64>) -> f64 {
    let sv = to_nalgebra(a).singular_values();
    sv.max() / sv.min()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

use patlab::{
    boundary_sensors, init_state, make_grid, make_medium, make_phantom, simulate, CoefficientSpec, Grid2D, Medium,
    PhantomSpec, Primitive, Propagator, ScalarField, SpectralKernel, View,
};

/// Runs a homogeneous undamped plane mode for `steps` steps and returns the
/// largest deviation from `cos(c |xi| t) f` over all steps.
pub fn mode_drift(n: usize, mode: (usize, usize), c: f64, h_t: f64, steps: usize) -> f64 {
    let grid = Grid2D::square(n, 1.0).unwrap();
    let medium = Medium::homogeneous(grid, c, 0.0).unwrap();
    let tau = std::f64::consts::TAU;
    let f = Array2::from_shape_fn(grid.shape(), |(i, j)| (tau * (mode.0 * i + mode.1 * j) as f64 / n as f64).cos());
    let xi = tau * ((mode.0 * mode.0 + mode.1 * mode.1) as f64).sqrt() / (n as f64 * grid.h);
    let kernel = SpectralKernel::new(grid, c, h_t).unwrap();
    let field = ScalarField::from_values(grid, f.clone()).unwrap();
    let mut state = init_state(&field, &medium, &kernel).unwrap();
    let mut prop = Propagator::new(&medium, &kernel).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=steps {
        prop.step(&mut state, None).unwrap();
        let expect = (c * xi * k as f64 * h_t).cos();
        let dev = state.p.iter().zip(&f).map(|(p, f)| (p - expect * f).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
    }
    worst
}

/// Classical RK4 for `p'' + a p' + w2 p = 0`, `p(0) = 1`, `p'(0) = -a`.
pub fn damped_oscillator(a: f64, w2: f64, t: f64, steps: usize) -> f64 {
    let dt = t / steps as f64;
    let rhs = |y: [f64; 2]| [y[1], -a * y[1] - w2 * y[0]];
    let mut y = [1.0, -a];
    for _ in 0..steps {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
        let k4 = rhs([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for i in 0..2 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y[0]
}

/// Amplitude error at `t = 1` of a damped plane mode (32x32 grid, c = 1)
/// for each time step.
pub fn damped_mode_errors(damping: f64, mode: (usize, usize), time_steps: &[f64]) -> Vec<f64> {
    let n = 32;
    let grid = Grid2D::square(n, 1.0).unwrap();
    let medium = Medium::homogeneous(grid, 1.0, damping).unwrap();
    let tau = std::f64::consts::TAU;
    let f = Array2::from_shape_fn(grid.shape(), |(i, j)| (tau * (mode.0 * i + mode.1 * j) as f64 / n as f64).cos());
    let xi2 = (tau / (n as f64 * grid.h)).powi(2) * (mode.0 * mode.0 + mode.1 * mode.1) as f64;
    let exact = damped_oscillator(damping, xi2, 1.0, 200_000);
    let f_norm2 = f.iter().map(|v| v * v).sum::<f64>();
    let field = ScalarField::from_values(grid, f.clone()).unwrap();
    time_steps
        .iter()
        .map(|&h_t| {
            let steps = (1.0 / h_t).round() as usize;
            let kernel = SpectralKernel::new(grid, 1.0, h_t).unwrap();
            let mut state = init_state(&field, &medium, &kernel).unwrap();
            let mut prop = Propagator::new(&medium, &kernel).unwrap();
            for _ in 0..steps {
                prop.step(&mut state, None).unwrap();
            }
            let amp = state.p.iter().zip(&f).map(|(p, f)| p * f).sum::<f64>() / f_norm2;
            (amp - exact).abs()
        })
        .collect()
}

pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Largest sensor reading taken before the wave from `source` can arrive
/// (distance from its support over `max c`), relative to the sinogram peak.
/// Every boundary sensor is checked.
pub fn early_signal_ratio(n_omega: usize, speed: &CoefficientSpec, damping: &CoefficientSpec, source: Primitive) -> f64 {
    let grid = make_grid(n_omega, 2).unwrap();
    let medium = make_medium(grid, speed, damping).unwrap();
    let sensors = boundary_sensors(grid, View::Full).unwrap();
    let f = make_phantom(grid, &PhantomSpec::new(vec![source])).unwrap();
    let (nt, final_time) = (251, 2.5);
    let h_t = final_time / (nt - 1) as f64;
    let (g, _) = simulate(&f, &medium, &sensors, nt, h_t, None).unwrap();
    let peak = g.max_abs();
    let mut worst: f64 = 0.0;
    for s in 0..sensors.count() {
        let (x, y) = sensors.coords(s);
        let dist = ((x - source.center.0).hypot(y - source.center.1) - source.outer_radius()).max(0.0);
        let arrival = dist / medium.c0;
        for k in (0..nt).take_while(|&k| (k as f64) * h_t < arrival) {
            worst = worst.max(g.values[[s, k]].abs());
        }
    }
    worst / peak
}
