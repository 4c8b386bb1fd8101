use rdm_completion::experiment::{run_completion, ExperimentConfig};
use rdm_completion::hamiltonian::BasisTag;
use rdm_completion::heatmap::emit_heatmap;

#[test]
fn converged_heatmap_matches_target() {
    let out = run_completion(&ExperimentConfig::default()).unwrap();
    let subset = &out.analysis.subset;
    for split in [true, false] {
        let target = emit_heatmap(&out.analysis.target, subset, split).unwrap();
        let completed = emit_heatmap(&out.completed, subset, split).unwrap();
        assert!((&target.values - &completed.values).amax() < 1e-4);
    }
}

#[test]
fn trace_respects_energy_bound() {
    let mut config = ExperimentConfig::default();
    config.anneal.record_stride = 10;
    let out = run_completion(&config).unwrap();
    let bound = out.analysis.problem().unwrap().energy_bound_constant().unwrap();
    for r in &out.trace.records {
        assert!(r.energy_dev.abs() <= bound * r.d_partial + 1e-12, "{r:?}");
    }
    let first = out.trace.records.first().unwrap();
    let last = out.trace.records.last().unwrap();
    assert!(last.d_partial < first.d_partial);
    assert!(out.trace.d_min <= last.d_partial);
}

#[test]
fn eigenbasis_run_recovers_site_basis_rdm() {
    let config = ExperimentConfig {
        basis: BasisTag::PairEigen,
        seed: 4,
        ..ExperimentConfig::default()
    };
    let out = run_completion(&config).unwrap();
    let a = out.summary.anneal.unwrap();
    assert_eq!(out.summary.counts.critical, 27);
    assert!(a.d_min < 1e-6 && a.full_distance < 1e-5 && a.infidelity < 1e-6);
}
