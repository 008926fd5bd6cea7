use hardy_kernel::report::{from_json, to_csv, to_json, RunConfig, CSV_HEADER};
use hardy_kernel::run::{run_sweep, SweepSpec};

fn small_sweep(jobs: usize) -> hardy_kernel::report::RunReport {
    let spec = SweepSpec {
        n_values: vec![3, 5],
        s_values: vec![0.0, 1.0],
        gamma_fractions: vec![0.0, 0.5],
        include_boundary: true,
    };
    run_sweep(&spec, &RunConfig { jobs: Some(jobs), ..RunConfig::default() }).unwrap()
}

#[test]
fn json_survives_a_round_trip() {
    let r = small_sweep(1);
    assert_eq!(r.triples.len(), 8);
    assert_eq!(r.summary.verified_dim_1 + r.summary.boundary_dim_n_plus_1, 8);
    assert_eq!(from_json(&to_json(&r).unwrap()).unwrap(), r);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let (mut one, three) = (small_sweep(1), small_sweep(3));
    one.config.jobs = three.config.jobs;
    assert_eq!(to_json(&one).unwrap(), to_json(&three).unwrap());
}

#[test]
fn csv_agrees_with_json() {
    let r = small_sweep(2);
    let text = to_csv(&r).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let modes: Vec<_> = r
        .triples
        .iter()
        .flat_map(|t| t.kernel.as_ref().unwrap().per_mode.iter().map(move |m| (t, m)))
        .collect();
    assert_eq!(rows.len(), modes.len());
    let close = |field: &str, x: f64| {
        let y: f64 = field.parse().unwrap();
        assert!((x - y).abs() <= 1e-11 * x.abs().max(1e-300), "{field} vs {x}");
    };
    for (row, (t, m)) in rows.iter().zip(modes) {
        assert_eq!(row[0].parse::<u32>().unwrap(), t.params.n);
        close(&row[2], t.params.gamma);
        close(&row[4], t.constants.lambda);
        close(&row[5], m.mu);
        assert_eq!(row[6].parse::<usize>().unwrap(), m.kernel_dim);
        close(&row[7], m.margin);
        close(&row[8], m.lowest_eigenvalue);
        assert_eq!(&row[10], t.verdict.as_str());
    }
}
