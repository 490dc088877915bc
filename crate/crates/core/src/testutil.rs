use nalgebra::{DMatrix, DVector, QR};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gain::TaskTruth;
use crate::model::Gram;

pub fn random_spd(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let x = DMatrix::from_fn(3 * d + 2, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    x.tr_mul(&x)
}

pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    QR::new(m).q()
}

pub fn random_instance(d: usize, seed: u64) -> (TaskTruth, Gram, Gram) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gs = Gram::new(random_spd(d, &mut rng)).unwrap();
    let gt = Gram::new(random_spd(d, &mut rng)).unwrap();
    let bs = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
    let bt = &bs + DVector::from_fn(d, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal));
    let s2s = 0.5 + rng.random::<f64>();
    let s2t = 0.5 + rng.random::<f64>();
    (TaskTruth::new(bs, bt, s2s, s2t).unwrap(), gs, gt)
}
