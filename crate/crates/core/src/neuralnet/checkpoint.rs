//! Versioned plain-text parameter dump.
//!
//! ```text
//! csdlma-checkpoint 1
//! architecture recurrent
//! input_width 15
//! history_len 20
//! hidden 64
//! outputs 22
//! meta <key> <value to end of line>      (zero or more)
//! tensor <name> <rows> <cols>
//! <cols values>                           (rows lines)
//! ...
//! end
//! ```
//!
//! Values use Rust's shortest round-trip formatting, so save/load is exact.
//! Tensors appear in layout order and must all be present.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::network::{NetworkShape, QNetwork};
use crate::error::{Error, Result};

pub const MAGIC: &str = "csdlma-checkpoint";
pub const VERSION: u32 = 1;

pub type Metadata = BTreeMap<String, String>;

pub fn write_checkpoint(net: &QNetwork, meta: &Metadata, mut out: impl Write) -> std::io::Result<()> {
    let s = net.shape();
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "architecture {}", s.architecture)?;
    writeln!(out, "input_width {}", s.input_width)?;
    writeln!(out, "history_len {}", s.history_len)?;
    writeln!(out, "hidden {}", s.hidden)?;
    writeln!(out, "outputs {}", s.outputs)?;
    for (k, v) in meta {
        writeln!(out, "meta {k} {}", v.replace('\n', " "))?;
    }
    let params = net.parameters();
    for t in net.layout().tensors() {
        writeln!(out, "tensor {} {} {}", t.name, t.rows, t.cols)?;
        for r in 0..t.rows {
            let row = &params[t.offset + r * t.cols..t.offset + (r + 1) * t.cols];
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    writeln!(out, "end")
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.number += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(bad(format!("line {}: {e}", self.number))),
            None => Err(bad("unexpected end of file")),
        }
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        let (k, v) = line.split_once(' ').ok_or_else(|| bad(format!("line {}: expected {key}", self.number)))?;
        if k != key {
            return Err(bad(format!("line {}: expected {key}, found {k}", self.number)));
        }
        Ok(v.trim().to_string())
    }

    fn usize_field(&mut self, key: &str) -> Result<usize> {
        let v = self.field(key)?;
        v.parse().map_err(|_| bad(format!("line {}: bad {key} {v:?}", self.number)))
    }
}

pub fn read_checkpoint(input: impl BufRead) -> Result<(QNetwork, Metadata)> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    let version = lines.field(MAGIC)?;
    if version != VERSION.to_string() {
        return Err(bad(format!("unsupported version {version}")));
    }
    let shape = NetworkShape {
        architecture: lines.field("architecture")?.parse()?,
        input_width: lines.usize_field("input_width")?,
        history_len: lines.usize_field("history_len")?,
        hidden: lines.usize_field("hidden")?,
        outputs: lines.usize_field("outputs")?,
    };
    let mut net = QNetwork::zeros(shape)?;
    let mut meta = Metadata::new();
    let mut line = lines.next_line()?;
    while let Some(rest) = line.strip_prefix("meta ") {
        let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
        meta.insert(k.to_string(), v.to_string());
        line = lines.next_line()?;
    }
    let tensors = net.layout().tensors().to_vec();
    let mut values = Vec::with_capacity(net.layout().len());
    for t in &tensors {
        let header: Vec<&str> = line.split_whitespace().collect();
        let expected = ["tensor", t.name, &t.rows.to_string(), &t.cols.to_string()];
        if header != expected {
            return Err(bad(format!("line {}: expected {:?}, found {line:?}", lines.number, expected.join(" "))));
        }
        for _ in 0..t.rows {
            let row = lines.next_line()?;
            let before = values.len();
            for tok in row.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| bad(format!("line {}: bad value {tok:?}", lines.number)))?;
                values.push(v);
            }
            if values.len() - before != t.cols {
                return Err(bad(format!("line {}: expected {} values", lines.number, t.cols)));
            }
        }
        line = lines.next_line()?;
    }
    if line.trim() != "end" {
        return Err(bad(format!("line {}: expected end", lines.number)));
    }
    net = QNetwork::from_parameters(net.shape().clone(), values)?;
    Ok((net, meta))
}

pub fn save(path: &Path, net: &QNetwork, meta: &Metadata) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_checkpoint(net, meta, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(QNetwork, Metadata)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(arch: Architecture) -> QNetwork {
        let shape = NetworkShape {
            architecture: arch,
            input_width: 4,
            history_len: 3,
            hidden: 5,
            outputs: 6,
        };
        QNetwork::init(shape, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for arch in [Architecture::Recurrent, Architecture::Feedforward] {
            let n = net(arch);
            let mut meta = Metadata::new();
            meta.insert("alpha".into(), "50".into());
            let mut buf = Vec::new();
            write_checkpoint(&n, &meta, &mut buf).unwrap();
            let (back, meta_back) = read_checkpoint(buf.as_slice()).unwrap();
            assert_eq!(back, n);
            assert_eq!(meta_back, meta);
        }
    }

    #[test]
    fn rejects_corruption() {
        let n = net(Architecture::Recurrent);
        let mut buf = Vec::new();
        write_checkpoint(&n, &Metadata::new(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let wrong_version = text.replacen("csdlma-checkpoint 1", "csdlma-checkpoint 9", 1);
        assert!(read_checkpoint(wrong_version.as_bytes()).is_err());

        let truncated: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(read_checkpoint(truncated.as_bytes()).is_err());

        let renamed = text.replace("tensor dense.bias", "tensor dense.bogus");
        assert!(read_checkpoint(renamed.as_bytes()).is_err());
    }
}
