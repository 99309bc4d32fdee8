//! Result files. A run directory holds the resolved config, one CSV row per
//! trial, a timing CSV, a per-cell summary CSV, an aligned text table, and a
//! success-rate chart. Everything except timing.csv is a pure function of
//! the records, so rerunning a seeded experiment reproduces those files byte
//! for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::smpc::Method;

use super::{summarize, ExperimentResult, MethodSummary, RunConfig, TrialRecord};

pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), result.config.to_toml())?;
    fs::write(dir.join("trials.csv"), trials_csv(&result.records))?;
    fs::write(dir.join("timing.csv"), timing_csv(result))?;
    let sums = summarize(&result.records);
    fs::write(dir.join("summary.csv"), summary_csv(&sums))?;
    fs::write(dir.join("table.txt"), table_text(&sums))?;
    fs::write(dir.join("success_rates.svg"), success_svg(&sums))?;
    Ok(())
}

/// Rebuilds the derived files of a run directory from config.toml,
/// trials.csv and, when present, timing.csv.
pub fn report(dir: &Path) -> Result<ExperimentResult> {
    let config = RunConfig::load(&dir.join("config.toml"))?;
    let mut records = read_trials_csv(&dir.join("trials.csv"))?;
    let timing = dir.join("timing.csv");
    let mut model_seconds = None;
    if timing.exists() {
        model_seconds = merge_timing_csv(&timing, &mut records)?;
    }
    let result = ExperimentResult {
        config,
        records,
        model_seconds,
    };
    write_outputs(&result, dir)?;
    Ok(result)
}

fn trials_csv(records: &[TrialRecord]) -> String {
    let mut s = String::from(
        "method,samples,trial,success,steps_to_reach,executed_cost,steps_run,\
         predicate_violations,sampled_pairs,empty_product_samples,degenerate_steps,model_builds\n",
    );
    for r in records {
        let steps = r.steps_to_reach.map_or(String::new(), |v| v.to_string());
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.samples,
            r.trial,
            r.success,
            steps,
            r.executed_cost,
            r.steps_run,
            r.predicate_violations,
            r.sampled_pairs,
            r.empty_product_samples,
            r.degenerate_steps,
            r.model_builds,
        )
        .unwrap();
    }
    s
}

fn timing_csv(result: &ExperimentResult) -> String {
    let mut s = String::new();
    if let Some(t) = result.model_seconds {
        writeln!(s, "# shared_model_seconds,{t}").unwrap();
    }
    s.push_str("method,samples,trial,wall_seconds,max_rebuild_seconds\n");
    for r in &result.records {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.method.name(),
            r.samples,
            r.trial,
            r.wall_seconds,
            r.max_rebuild_seconds,
        )
        .unwrap();
    }
    s
}

fn summary_csv(sums: &[MethodSummary]) -> String {
    let mut s = String::from(
        "method,samples,trials,successes,success_rate,mean_log_steps,mean_log_cost,pairs,\
         violation_fraction,mean_wall_seconds,max_rebuild_seconds\n",
    );
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for m in sums {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            m.method.name(),
            m.samples,
            m.trials,
            m.successes,
            m.success_rate,
            opt(m.mean_log_steps),
            opt(m.mean_log_cost),
            m.pairs,
            m.violation_fraction,
            m.mean_wall_seconds,
            m.max_rebuild_seconds,
        )
        .unwrap();
    }
    s
}

pub fn table_text(sums: &[MethodSummary]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<12} {:>6} {:>9} {:>11} {:>11} {:>6} {:>10} {:>9}",
        "method", "N", "success", "log steps", "log cost", "pairs", "violation", "wall s"
    )
    .unwrap();
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:+.3}"));
    for m in sums {
        writeln!(
            s,
            "{:<12} {:>6} {:>8.1}% {:>11} {:>11} {:>6} {:>10.2e} {:>9.2}",
            m.method.name(),
            m.samples,
            100.0 * m.success_rate,
            opt(m.mean_log_steps),
            opt(m.mean_log_cost),
            m.pairs,
            m.violation_fraction,
            m.mean_wall_seconds,
        )
        .unwrap();
    }
    s
}

fn method_color(m: Method) -> &'static str {
    match m {
        Method::Mppi => "#7f7f7f",
        Method::ProjMppi => "#1f77b4",
        Method::TtPoeMppi => "#d62728",
    }
}

/// Success rate against sample count, one polyline per method, x on a log2
/// scale. Self-contained SVG with no external references.
fn success_svg(sums: &[MethodSummary]) -> String {
    let (w, h) = (560.0, 330.0);
    let (x0, x1, y0, y1) = (70.0, 530.0, 280.0, 30.0);
    let mut ns: Vec<usize> = sums.iter().map(|m| m.samples).collect();
    ns.sort_unstable();
    ns.dedup();
    let lx = |n: usize| (n as f64).log2();
    let (lo, hi) = (lx(ns[0]), lx(*ns.last().unwrap()));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = |n: usize| x0 + (lx(n) - lo) / span * (x1 - x0);
    let py = |rate: f64| y0 + rate * (y1 - y0);

    let mut s = String::new();
    write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
    .unwrap();
    for t in 0..=4 {
        let rate = t as f64 / 4.0;
        let y = py(rate);
        writeln!(
            s,
            "<line x1=\"{x0}\" y1=\"{y:.1}\" x2=\"{x1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}%</text>",
            x0 - 8.0,
            y + 4.0,
            (rate * 100.0) as u32
        )
        .unwrap();
    }
    for &n in &ns {
        let x = px(n);
        writeln!(
            s,
            "<line x1=\"{x:.1}\" y1=\"{y0}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"#eee\"/>\
             <text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{n}</text>",
            y0 + 5.0,
            y0 + 20.0
        )
        .unwrap();
    }
    writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">samples</text>\
         <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">success rate</text>",
        (x0 + x1) / 2.0,
        y0 + 38.0,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    )
    .unwrap();

    let mut methods: Vec<Method> = Vec::new();
    for m in sums {
        if !methods.contains(&m.method) {
            methods.push(m.method);
        }
    }
    let mut legend_y = y1 + 8.0;
    for method in methods {
        let mut pts: Vec<(usize, f64)> = sums
            .iter()
            .filter(|m| m.method == method)
            .map(|m| (m.samples, m.success_rate))
            .collect();
        pts.sort_unstable_by_key(|p| p.0);
        let color = method_color(method);
        let path: Vec<String> = pts
            .iter()
            .map(|&(n, r)| format!("{:.1},{:.1}", px(n), py(r)))
            .collect();
        if pts.len() > 1 {
            writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                path.join(" ")
            )
            .unwrap();
        }
        for &(n, r) in &pts {
            writeln!(
                s,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3.5\" fill=\"{color}\"/>",
                px(n),
                py(r)
            )
            .unwrap();
        }
        writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{legend_y:.1}\" width=\"14\" height=\"4\" fill=\"{color}\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            x1 - 140.0,
            x1 - 120.0,
            legend_y + 5.0,
            method.name()
        )
        .unwrap();
        legend_y += 18.0;
    }
    s.push_str("</svg>\n");
    s
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<T> {
    field.parse().map_err(|_| {
        Error::Format(format!("trials.csv line {line}: bad {name} value {field:?}"))
    })
}

pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("trials.csv: empty".into()))?
        .1;
    if !header.starts_with("method,samples,trial,success") {
        return Err(Error::Format("trials.csv: unexpected header".into()));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::Format(format!(
                "trials.csv line {}: expected 12 fields, got {}",
                i + 1,
                f.len()
            )));
        }
        let n = i + 1;
        out.push(TrialRecord {
            method: Method::parse(f[0]).map_err(|e| Error::Format(e.to_string()))?,
            samples: parse_field(f[1], n, "samples")?,
            trial: parse_field(f[2], n, "trial")?,
            success: parse_field(f[3], n, "success")?,
            steps_to_reach: if f[4].is_empty() {
                None
            } else {
                Some(parse_field(f[4], n, "steps_to_reach")?)
            },
            executed_cost: parse_field(f[5], n, "executed_cost")?,
            steps_run: parse_field(f[6], n, "steps_run")?,
            predicate_violations: parse_field(f[7], n, "predicate_violations")?,
            sampled_pairs: parse_field(f[8], n, "sampled_pairs")?,
            empty_product_samples: parse_field(f[9], n, "empty_product_samples")?,
            degenerate_steps: parse_field(f[10], n, "degenerate_steps")?,
            model_builds: parse_field(f[11], n, "model_builds")?,
            max_rebuild_seconds: 0.0,
            wall_seconds: 0.0,
        });
    }
    Ok(out)
}

/// Copies wall and rebuild times onto matching records; returns the shared
/// model build time if the file recorded one.
fn merge_timing_csv(path: &Path, records: &mut [TrialRecord]) -> Result<Option<f64>> {
    let text = fs::read_to_string(path)?;
    let mut model_seconds = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# shared_model_seconds,") {
            model_seconds = rest.parse().ok();
            continue;
        }
        if line.starts_with("method,") || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            continue;
        }
        let (Ok(method), Ok(samples), Ok(trial), Ok(wall), Ok(rebuild)) = (
            Method::parse(f[0]),
            f[1].parse::<usize>(),
            f[2].parse::<usize>(),
            f[3].parse::<f64>(),
            f[4].parse::<f64>(),
        ) else {
            continue;
        };
        if let Some(r) = records
            .iter_mut()
            .find(|r| r.method == method && r.samples == samples && r.trial == trial)
        {
            r.wall_seconds = wall;
            r.max_rebuild_seconds = rebuild;
        }
    }
    Ok(model_seconds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::WorldKind;
    use tempfile::tempdir;

    fn sample_records() -> Vec<TrialRecord> {
        vec![
            TrialRecord {
                method: Method::Mppi,
                samples: 16,
                trial: 0,
                success: true,
                steps_to_reach: Some(21),
                executed_cost: 153.25,
                steps_run: 21,
                predicate_violations: 0,
                sampled_pairs: 0,
                empty_product_samples: 0,
                degenerate_steps: 0,
                model_builds: 0,
                max_rebuild_seconds: 0.0,
                wall_seconds: 0.125,
            },
            TrialRecord {
                method: Method::TtPoeMppi,
                samples: 16,
                trial: 0,
                success: false,
                steps_to_reach: None,
                executed_cost: 1e30,
                steps_run: 100,
                predicate_violations: 3,
                sampled_pairs: 24000,
                empty_product_samples: 1,
                degenerate_steps: 0,
                model_builds: 2,
                max_rebuild_seconds: 0.75,
                wall_seconds: 4.5,
            },
        ]
    }

    #[test]
    fn trials_csv_round_trips() {
        let records = sample_records();
        let dir = tempdir().unwrap();
        let path = dir.path().join("trials.csv");
        fs::write(&path, trials_csv(&records)).unwrap();
        let back = read_trials_csv(&path).unwrap();
        for (a, b) in records.iter().zip(&back) {
            let mut a = a.clone();
            a.wall_seconds = 0.0;
            a.max_rebuild_seconds = 0.0;
            assert_eq!(&a, b);
        }
    }

    #[test]
    fn timing_merge_restores_wall_times() {
        let records = sample_records();
        let result = ExperimentResult {
            config: RunConfig::default_for(WorldKind::Pngrid),
            records: records.clone(),
            model_seconds: Some(1.5),
        };
        let dir = tempdir().unwrap();
        let path = dir.path().join("timing.csv");
        fs::write(&path, timing_csv(&result)).unwrap();
        let mut stripped: Vec<TrialRecord> = records
            .iter()
            .cloned()
            .map(|mut r| {
                r.wall_seconds = 0.0;
                r.max_rebuild_seconds = 0.0;
                r
            })
            .collect();
        let model = merge_timing_csv(&path, &mut stripped).unwrap();
        assert_eq!(model, Some(1.5));
        assert_eq!(stripped, records);
    }

    #[test]
    fn full_run_directory_round_trips_through_report() {
        let result = ExperimentResult {
            config: RunConfig::default_for(WorldKind::Pngrid),
            records: sample_records(),
            model_seconds: None,
        };
        let dir = tempdir().unwrap();
        write_outputs(&result, dir.path()).unwrap();
        let before = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        let reported = report(dir.path()).unwrap();
        assert_eq!(reported.records.len(), 2);
        let after = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(before, after);
        for name in [
            "config.toml",
            "trials.csv",
            "timing.csv",
            "summary.csv",
            "table.txt",
            "success_rates.svg",
        ] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let svg = fs::read_to_string(dir.path().join("success_rates.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("tt_poe_mppi"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn corrupt_trials_csv_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trials.csv");
        fs::write(&path, "method,samples\nmppi,16\n").unwrap();
        assert!(read_trials_csv(&path).is_err());
        fs::write(
            &path,
            "method,samples,trial,success,steps_to_reach,executed_cost,steps_run,\
             predicate_violations,sampled_pairs,empty_product_samples,degenerate_steps,model_builds\n\
             mppi,16,0,yes,,1.0,1,0,0,0,0,0\n",
        )
        .unwrap();
        assert!(read_trials_csv(&path).is_err(), "bad boolean");
    }
}
