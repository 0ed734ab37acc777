use nalgebra::DMatrix;
use ncamon::baselines::fit_pca;
use ncamon::dataset::{apply_scaler, fit_scaler, generate_synthetic};
use ncamon::evaluation::orthogonality_report;
use ncamon::nca::{fit_nca, NcaFitConfig};
use ncamon::FaultSpec;

fn fitted() -> (ncamon::NcaModel, ncamon::baselines::PcaModel) {
    let (raw, _) = generate_synthetic(8, 300, 960, &FaultSpec::step(4.0, 160), 42).unwrap();
    let x = apply_scaler(&fit_scaler(&raw).unwrap(), &raw).unwrap();
    (fit_nca(&x, &NcaFitConfig::new(2)).unwrap(), fit_pca(&x, 2).unwrap())
}

#[test]
fn decoder_frame_is_orthonormal_and_pca_frame_is_self_consistent() {
    let (nca, pca) = fitted();
    let eye = DMatrix::<f64>::identity(2, 2);
    let (btb, _) = orthogonality_report(&nca, &pca).unwrap();
    assert!((btb - &eye).norm() < 1e-8);

    let mut as_pca = nca.clone();
    as_pca.b = pca.loadings.clone();
    let (utu, utu2) = orthogonality_report(&as_pca, &pca).unwrap();
    assert_eq!(utu, utu2);
    assert!((utu - eye).norm() < 1e-12);
}

#[test]
fn nca_frame_departs_from_pca_loadings() {
    let (nca, pca) = fitted();
    let (_, btu) = orthogonality_report(&nca, &pca).unwrap();
    let departure = (btu - DMatrix::<f64>::identity(2, 2)).norm();
    assert!(departure > 0.1, "‖BᵀU − I‖_F = {departure:.4e}");
}
