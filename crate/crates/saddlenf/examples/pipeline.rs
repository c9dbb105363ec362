//! The command pipelines driven from code on the bundled toy-model spec.

use std::path::Path;

use saddlenf::cli::{analyze, load_spec, normalize, render_analysis, render_nhim, nhim};
use saddlenf::nhimverify::SamplingOptions;

fn main() -> anyhow::Result<()> {
    let spec = load_spec(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/tms.json"))?;
    let a = analyze(&spec, 5)?;
    print!("{}", render_analysis(&a));

    let n = normalize(&spec, 5, None)?;
    let t = &n.report.theorem_form;
    println!(
        "\nnormal form to degree 5: {} removed, {} kept saddle terms, {} violations",
        n.report.removed, t.normal_form, t.violations
    );

    let opts = SamplingOptions { samples: 2000, ..SamplingOptions::new(0.05, 0.1) };
    print!("\n{}", render_nhim(&nhim(&spec, &opts)?));
    Ok(())
}
