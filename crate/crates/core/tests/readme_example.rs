use frank_copula::data::{bundled, Region};
use frank_copula::estimation::{estimate_all, GridSpec};
use frank_copula::gof::{gof_test, CriticalSource, CriticalValueTable, GofPlan, PseudoSample};

#[test]
fn library_walkthrough() -> frank_copula::Result<()> {
    let sample = bundled(Region::South, "As", "Eh")?;
    let pseudo = PseudoSample::from_sample(&sample)?;
    let results = estimate_all(pseudo.pairs(), GridSpec::default())?;
    assert_eq!(results.len(), 6);
    assert!(results.iter().all(|r| r.estimate.value() < -6.0));

    let table = CriticalValueTable::published();
    let report = gof_test(&sample, &GofPlan::default(), CriticalSource::Table(&table))?;
    assert!((report.observed.sn - 0.199).abs() < 0.001);
    assert!((report.observed.tn - 0.707).abs() < 0.001);
    Ok(())
}
