pub const REPORT_HEADER: [&str; 9] = ["instance", "problem", "method", "status", "objective", "bound", "ratio", "time_ms", "seed"];

/// One solver run. Empty optional fields are written as blank cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub problem: String,
    pub method: String,
    pub status: String,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
    pub time_ms: Option<f64>,
    pub seed: u64,
}

/// Shortest text that parses back to the same value; `-0` prints as `0`
/// and non-finite values as a blank.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        String::new()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

impl RunRecord {
    pub fn fields(&self) -> [String; 9] {
        [
            self.instance.clone(),
            self.problem.clone(),
            self.method.clone(),
            self.status.clone(),
            cell(self.objective),
            cell(self.bound),
            cell(self.ratio),
            self.time_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
            self.seed.to_string(),
        ]
    }
}

/// CSV with a header line and one line per record, in the given order.
pub fn write_report(records: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER).expect("writing to memory");
    for r in records {
        w.write_record(r.fields()).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("CSV of UTF-8 fields")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> RunRecord {
        RunRecord {
            instance: "six_four".into(),
            problem: "hens-matches".into(),
            method: "greedy-packing".into(),
            status: "ok".into(),
            objective: Some(3.0),
            bound: Some(2.0),
            ratio: None,
            time_ms: None,
            seed: 7,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(write_report(&[]), "instance,problem,method,status,objective,bound,ratio,time_ms,seed\n");
    }

    #[test]
    fn one_record_two_lines_with_blank_ratio() {
        let text = write_report(&[record()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "six_four,hens-matches,greedy-packing,ok,3,2,,,7");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -400.0, 1.0 / 3.0, 1e-12] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_number(-0.0), "0");
    }
}
