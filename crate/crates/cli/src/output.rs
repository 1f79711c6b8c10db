use std::fmt::Write as _;

use clap::ValueEnum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Space-aligned columns.
    Table,
    /// Tab-separated, header first.
    Tsv,
}

/// A rectangular result with a header row.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self, fmt: Format) -> String {
        let mut out = String::new();
        match fmt {
            Format::Tsv => {
                for r in std::iter::once(&self.header).chain(&self.rows) {
                    out.push_str(&r.join("\t"));
                    out.push('\n');
                }
            }
            Format::Table => {
                let mut width: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for r in &self.rows {
                    for (w, c) in width.iter_mut().zip(r) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                for r in std::iter::once(&self.header).chain(&self.rows) {
                    let mut line = String::new();
                    for (i, (c, w)) in r.iter().zip(&width).enumerate() {
                        if i > 0 {
                            line.push_str("  ");
                        }
                        let _ = write!(line, "{c:>w$}");
                    }
                    out.push_str(line.trim_end());
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn print(&self, fmt: Format) {
        print!("{}", self.render(fmt));
    }
}

/// Key/value rows.
pub fn facts(rows: &[(&str, String)]) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in rows {
        t.row(vec![k.to_string(), v.clone()]);
    }
    t
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(|| "?".to_string(), |v| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_aligns_right() {
        let mut t = Table::new(&["i", "dim"]);
        t.row(vec!["0".into(), "12".into()]);
        assert_eq!(t.render(Format::Table), "i  dim\n0   12\n");
        assert_eq!(t.render(Format::Tsv), "i\tdim\n0\t12\n");
    }
}
