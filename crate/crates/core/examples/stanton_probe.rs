use dircomp::counting::*;
use dircomp::series::{DirichletPolynomial, IndexBound};
use dircomp::symbol::make_affine;
use dircomp::indices::PrimeSupport;
use num_complex::Complex64;
use std::time::Instant;

fn main() {
    let support = PrimeSupport::new(vec![2]).unwrap();
    let e2 = DirichletPolynomial::from_index_coeffs(
        support, &[(2, Complex64::new(1.0, 0.0))], IndexBound::from_index(2)).unwrap();
    let sym = make_affine(2, Complex64::new(1.0, 0.0), &[]).unwrap();
    eprintln!("parse...");
    let elem = parse_chain_element(&e2, 2).unwrap();
    eprintln!("j = {}, coeffs = {:?}", elem.j, elem.coeffs);
    eprintln!("lhs...");
    let t0 = Instant::now();
    let out = dircomp::operator::apply_to_h2j_chain(&sym, elem.j, 2, &elem.coeffs, 1e-22).unwrap();
    eprintln!("lhs done {:?} in {:.2}s", out.iter().map(|c| c.norm_sqr()).sum::<f64>(), t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let rep = verify_stanton(&sym, &e2, &[1e-6]).unwrap();
    eprintln!("verify done rel {:.3e} in {:.2}s", rep.residual, t0.elapsed().as_secs_f64());
}
