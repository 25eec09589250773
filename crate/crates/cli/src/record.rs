use std::io::{Read, Write};

pub const HEADER: [&str; 13] = [
    "n",
    "c",
    "chi",
    "workload",
    "adversary",
    "seed",
    "quiet_rounds",
    "protocol_rounds",
    "decode_rounds",
    "attempts_total",
    "max_attempts_per_epoch",
    "correct",
    "wall_ms",
];

/// Extra columns of a sweep row.
pub const SWEEP_EXTRA: [&str; 2] = ["ratio", "error"];

/// One simulation, as written to CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub n: usize,
    pub c: usize,
    pub chi: f64,
    pub workload: String,
    pub adversary: String,
    pub seed: u64,
    pub quiet_rounds: usize,
    pub protocol_rounds: usize,
    pub decode_rounds: usize,
    pub attempts_total: usize,
    pub max_attempts_per_epoch: usize,
    pub correct: bool,
    pub wall_ms: u64,
}

impl RunRecord {
    /// `protocol_rounds / (c^2 * n^(1/3) * log2 n)`.
    pub fn ratio(&self) -> f64 {
        let n = self.n as f64;
        self.protocol_rounds as f64 / ((self.c * self.c) as f64 * n.cbrt() * n.log2())
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.c.to_string(),
            self.chi.to_string(),
            self.workload.clone(),
            self.adversary.clone(),
            self.seed.to_string(),
            self.quiet_rounds.to_string(),
            self.protocol_rounds.to_string(),
            self.decode_rounds.to_string(),
            self.attempts_total.to_string(),
            self.max_attempts_per_epoch.to_string(),
            self.correct.to_string(),
            self.wall_ms.to_string(),
        ]
    }

    fn from_fields(get: impl Fn(&str) -> Result<String, String>) -> Result<Self, String> {
        fn num<T: std::str::FromStr>(col: &str, v: String) -> Result<T, String> {
            v.parse().map_err(|_| format!("column {col}: cannot parse {v:?}"))
        }
        let field = |col: &str| get(col);
        Ok(Self {
            n: num("n", field("n")?)?,
            c: num("c", field("c")?)?,
            chi: num("chi", field("chi")?)?,
            workload: field("workload")?,
            adversary: field("adversary")?,
            seed: num("seed", field("seed")?)?,
            quiet_rounds: num("quiet_rounds", field("quiet_rounds")?)?,
            protocol_rounds: num("protocol_rounds", field("protocol_rounds")?)?,
            decode_rounds: num("decode_rounds", field("decode_rounds")?)?,
            attempts_total: num("attempts_total", field("attempts_total")?)?,
            max_attempts_per_epoch: num("max_attempts_per_epoch", field("max_attempts_per_epoch")?)?,
            correct: num("correct", field("correct")?)?,
            wall_ms: num("wall_ms", field("wall_ms")?)?,
        })
    }
}

/// Writes the header and `rows` as CSV. Sweep rows carry a ratio and an
/// error column.
pub fn write_csv<W: Write>(out: W, rows: &[(RunRecord, Option<String>)], sweep: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = HEADER.to_vec();
    if sweep {
        header.extend(SWEEP_EXTRA);
    }
    w.write_record(&header)?;
    for (record, error) in rows {
        let mut fields = record.fields();
        if sweep {
            fields.push(format!("{:.6}", record.ratio()));
            fields.push(error.clone().unwrap_or_default());
        }
        w.write_record(&fields)?;
        w.flush()?;
    }
    w.flush()?;
    Ok(())
}

/// Reads run or sweep CSV back. Rows with a non-empty error column are skipped.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRecord>, String> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    let index = |col: &str| header.iter().position(|h| h == col);
    let missing: Vec<&str> = HEADER.iter().copied().filter(|c| index(c).is_none()).collect();
    if !missing.is_empty() {
        return Err(format!("CSV lacks columns: {}", missing.join(", ")));
    }
    let error_col = index("error");
    let mut rows = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        if error_col.and_then(|c| row.get(c)).is_some_and(|e| !e.is_empty()) {
            continue;
        }
        let get = |col: &str| {
            let at = index(col).expect("checked above");
            row.get(at).map(str::to_string).ok_or_else(|| format!("row {}: short record", i + 1))
        };
        rows.push(RunRecord::from_fields(get).map_err(|e| format!("row {}: {e}", i + 1))?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> RunRecord {
        RunRecord {
            n,
            c: 2,
            chi: 1.0,
            workload: "semiring-mm:plus-times".into(),
            adversary: "random:0.02".into(),
            seed: 7,
            quiet_rounds: 8,
            protocol_rounds: 64,
            decode_rounds: 2,
            attempts_total: 1,
            max_attempts_per_epoch: 1,
            correct: true,
            wall_ms: 3,
        }
    }

    #[test]
    fn header_is_the_documented_schema() {
        assert_eq!(
            HEADER.join(","),
            "n,c,chi,workload,adversary,seed,quiet_rounds,protocol_rounds,decode_rounds,attempts_total,max_attempts_per_epoch,correct,wall_ms"
        );
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![(sample(8), None), (sample(27), Some("boom".into())), (sample(64), None)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, true).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![sample(8), sample(64)]);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().ends_with("wall_ms,ratio,error"));
    }

    #[test]
    fn ratio_uses_cube_root_and_log() {
        // 64 / (4 * 2 * 3)
        assert!((sample(8).ratio() - 64.0 / 24.0).abs() < 1e-12);
    }
}
