//! CSV output. Every file opens with `#` provenance lines followed by a
//! header row.

use std::path::Path;

use crate::error::{Error, Result};
use crate::ff::PretrainedStack;
use crate::train::TrainReport;

pub const FORMAT_VERSION: u32 = 1;
pub const LOSS_HEADER: [&str; 3] = ["epoch", "loss", "seconds"];
pub const METRICS_HEADER: [&str; 6] = ["dataset", "variant", "r", "seed", "metric", "value"];

/// One line of a metrics CSV. `value` holds either a number or, for failed
/// runs, the error message.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub dataset: String,
    pub variant: String,
    pub r: String,
    pub seed: String,
    pub metric: String,
    pub value: String,
}

impl MetricRow {
    pub fn numeric(&self) -> Option<f64> {
        self.value.parse().ok()
    }

    pub fn is_error(&self) -> bool {
        self.metric == "error"
    }

    fn fields(&self) -> [&str; 6] {
        [
            &self.dataset,
            &self.variant,
            &self.r,
            &self.seed,
            &self.metric,
            &self.value,
        ]
    }
}

/// `# key=value` lines, always starting with the format version.
#[derive(Clone, Debug, Default)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new() -> Self {
        Provenance {
            entries: vec![("format_version".into(), FORMAT_VERSION.to_string())],
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    fn render(&self, out: &mut Vec<u8>) {
        for (k, v) in &self.entries {
            out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
        }
    }
}

fn csv_into(
    out: &mut Vec<u8>,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Config(format!("CSV encoding failed: {e}"));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Config(format!("CSV encoding failed: {e}")))?;
    Ok(())
}

pub fn metrics_csv(prov: &Provenance, rows: &[MetricRow]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    prov.render(&mut out);
    csv_into(
        &mut out,
        &METRICS_HEADER,
        rows.iter().map(|r| r.fields().map(str::to_string).to_vec()),
    )?;
    Ok(out)
}

/// Loss curve, preceded by the forward-forward log when there is one.
/// Epochs are numbered from 1.
pub fn loss_csv(
    prov: &Provenance,
    ff: Option<&PretrainedStack>,
    report: &TrainReport,
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    prov.render(&mut out);
    if let Some(stack) = ff {
        out.extend_from_slice(b"# ff_pretraining layer,epoch,loss\n");
        for (layer, losses) in stack.epoch_losses.iter().enumerate() {
            for (e, loss) in losses.iter().enumerate() {
                out.extend_from_slice(format!("# ff,{layer},{},{loss}\n", e + 1).as_bytes());
            }
        }
    }
    let rows = report
        .epoch_loss
        .iter()
        .zip(&report.epoch_time)
        .enumerate()
        .map(|(e, (loss, t))| {
            vec![
                (e + 1).to_string(),
                loss.to_string(),
                t.as_secs_f64().to_string(),
            ]
        });
    csv_into(&mut out, &LOSS_HEADER, rows)?;
    Ok(out)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parses a metrics CSV written by [`metrics_csv`], skipping comments.
pub fn read_metrics_csv(text: &str) -> Result<Vec<MetricRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let err = |e: csv::Error| Error::Config(format!("malformed metrics CSV: {e}"));
    let header = rdr.headers().map_err(err)?.clone();
    if header.iter().ne(METRICS_HEADER) {
        return Err(Error::Config(format!(
            "unexpected metrics header {header:?}"
        )));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(err)?;
            let f = |i: usize| rec.get(i).unwrap_or_default().to_string();
            Ok(MetricRow {
                dataset: f(0),
                variant: f(1),
                r: f(2),
                seed: f(3),
                metric: f(4),
                value: f(5),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(metric: &str, value: &str) -> MetricRow {
        MetricRow {
            dataset: "d".into(),
            variant: "MEUD".into(),
            r: "5".into(),
            seed: "1".into(),
            metric: metric.into(),
            value: value.into(),
        }
    }

    #[test]
    fn metrics_round_trip_with_quoting() {
        let rows = vec![row("knn_f1", "0.25"), row("error", "bad, \"worse\"\nworst")];
        let bytes = metrics_csv(&Provenance::new().with("seeds", "1,2"), &rows).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text
            .starts_with("# format_version=1\n# seeds=1,2\ndataset,variant,r,seed,metric,value\n"));
        assert_eq!(read_metrics_csv(&text).unwrap(), rows);
    }

    #[test]
    fn loss_layout() {
        use crate::meud::{init_params, NetworkConfig, Variant};
        let params = init_params(
            &NetworkConfig::for_dims(6, 2, 2, Variant::Meud, 0).unwrap(),
            None,
        )
        .unwrap();
        let report = TrainReport {
            epoch_loss: vec![0.5, 0.25],
            epoch_time: vec![std::time::Duration::from_millis(1500); 2],
            steps: 2,
            params,
        };
        let stack = PretrainedStack {
            weights: vec![],
            epoch_losses: vec![vec![0.75]],
        };
        let text = String::from_utf8(loss_csv(&Provenance::new(), Some(&stack), &report).unwrap())
            .unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            [
                "# format_version=1",
                "# ff_pretraining layer,epoch,loss",
                "# ff,0,1,0.75",
                "epoch,loss,seconds",
                "1,0.5,1.5",
                "2,0.25,1.5"
            ]
        );
    }
}
