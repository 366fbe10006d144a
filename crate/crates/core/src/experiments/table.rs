use super::config::ExperimentConfig;

/// Named numeric columns, one row per sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Rows whose `key` column equals `value`.
    pub fn filter(&self, key: &str, value: f64) -> Table {
        let j = self.columns.iter().position(|c| c == key).expect("unknown column");
        Table {
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| r[j] == value).cloned().collect(),
        }
    }

    /// CSV with a `#` header echoing the tool version and resolved config.
    pub fn to_csv(&self, cfg: &ExperimentConfig) -> String {
        let mut out = format!("# crossfield {}\n# figure = \"{}\"\n", env!("CARGO_PKG_VERSION"), cfg.figure.name());
        for line in cfg.to_toml_lines() {
            out.push_str("# ");
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| sig9(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Nine significant digits, plain notation for moderate magnitudes.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let mut exp = v.abs().log10().floor() as i32;
    // rounding may carry into a new leading digit (9.99999999995 -> 10.0000000)
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float");
    if rounded.abs() >= 10f64.powi(exp + 1) {
        exp += 1;
    }
    if (-4..9).contains(&exp) {
        format!("{:.*}", (8 - exp).max(0) as usize, v)
    } else {
        format!("{v:.8e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(22.8), "22.8000000");
        assert_eq!(sig9(-18.164_213_57), "-18.1642136");
        assert_eq!(sig9(0.001_234_567_891), "0.00123456789");
        assert_eq!(sig9(1e-7), "1.00000000e-7");
        assert_eq!(sig9(2_097_152.0), "2097152.00");
        assert_eq!(sig9(9.999_999_999_5), "10.0000000");
        assert_eq!(sig9(-320.0), "-320.000000");
        assert_eq!(sig9(0.0), "0");
    }

    #[test]
    fn csv_layout() {
        let cfg = ExperimentConfig::defaults(super::super::Figure::ApproxError);
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0, 2.5]);
        let csv = t.to_csv(&cfg);
        let lines: Vec<&str> = csv.lines().collect();
        let first_data = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert!(first_data >= 3);
        assert_eq!(lines[first_data], "a,b");
        assert_eq!(lines[first_data + 1], "1.00000000,2.50000000");
        assert!(csv.is_ascii());
    }
}
