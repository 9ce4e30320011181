use shotlearn::hilbert::{sample_states, PureState, StateClass};
use shotlearn::measurement::{fidelity_matrix, kernel_matrix, KernelEstimate, Shots};
use shotlearn::rng::RngStream;
use shotlearn::svm::{solve_dual, SvmModel, SvmParams};

fn data(d: usize, n: usize, rng: &mut RngStream) -> (Vec<PureState>, Vec<i8>) {
    let mut states = sample_states(StateClass::Separable, d, n, rng).unwrap();
    states.extend(sample_states(StateClass::Entangled, d, n, rng).unwrap());
    let labels = (0..2 * n).map(|i| if i < n { 1 } else { -1 }).collect();
    (states, labels)
}

fn squared_overlaps(test: &PureState, train: &[PureState]) -> Vec<f64> {
    train.iter().map(|t| shotlearn::overlap(test, t).unwrap().powi(2)).collect()
}

#[test]
fn exact_kernel_classifies_d2_almost_perfectly() {
    let mut rng = RngStream::new(31, 0);
    let (train, labels) = data(2, 64, &mut rng);
    let gram = KernelEstimate::exact(fidelity_matrix(&train).unwrap().map(|f| f * f), 2);
    let model = solve_dual(&gram, &labels, &SvmParams::default()).unwrap();
    let (tests, truth) = data(2, 250, &mut rng);
    let correct =
        tests.iter().zip(&truth).filter(|(t, &y)| model.classify(&squared_overlaps(t, &train)).unwrap().label == y).count();
    assert!(correct as f64 / 500.0 >= 0.99, "{correct}/500");
}

#[test]
fn solution_does_not_depend_on_thread_count() {
    let mut rng = RngStream::new(32, 0);
    let (train, labels) = data(4, 40, &mut rng);
    let solve = || -> SvmModel {
        let gram = kernel_matrix(&train, 2, Shots::Finite(64), &RngStream::new(5, 5)).unwrap();
        solve_dual(&gram, &labels, &SvmParams::default()).unwrap()
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(solve);
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(solve);
    assert_eq!(one.alphas, four.alphas);
    assert_eq!(one.beta.to_bits(), four.beta.to_bits());
    assert_eq!(one.iterations, four.iterations);
}
